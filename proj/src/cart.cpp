#include "treesv/cart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "treesv/errors.hpp"

namespace treesv {

std::vector<double> equal_density_bins(std::vector<double> values, int n_bins) {
  std::vector<double> thresholds;
  const int n = static_cast<int>(values.size());
  if (n < 2 || n_bins < 2) return thresholds;
  std::sort(values.begin(), values.end());
  for (int b = 1; b < n_bins; ++b) {
    // Boundary between the b-th and (b+1)-th equal-count slices; duplicates
    // straddling a boundary yield no threshold there.
    const int pos = static_cast<int>(static_cast<long long>(b) * n / n_bins);
    if (pos <= 0 || pos >= n) continue;
    const double lo = values[pos - 1];
    const double hi = values[pos];
    if (lo == hi) continue;
    const double mid = lo + (hi - lo) / 2.0;
    if (thresholds.empty() || thresholds.back() != mid) thresholds.push_back(mid);
  }
  return thresholds;
}

BinnedThresholds compute_bins(const Dataset& data, int n_bins) {
  BinnedThresholds bins;
  bins.per_feature.resize(data.n_features);
  std::vector<double> column(data.rows.size());
  for (int f = 0; f < data.n_features; ++f) {
    for (std::size_t i = 0; i < data.rows.size(); ++i) column[i] = data.rows[i][f];
    bins.per_feature[f] = equal_density_bins(column, n_bins);
  }
  return bins;
}

namespace {

double entropy(std::int64_t pos, std::int64_t neg) {
  const std::int64_t total = pos + neg;
  if (total == 0 || pos == 0 || neg == 0) return 0.0;
  const double p = static_cast<double>(pos) / static_cast<double>(total);
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

double node_value(std::int64_t pos, std::int64_t neg, ValueMode mode) {
  if (mode == ValueMode::kMajorityTieZero) return pos > neg ? 1.0 : (neg > pos ? -1.0 : 0.0);
  const std::int64_t total = pos + neg;
  return total > 0 ? static_cast<double>(pos - neg) / static_cast<double>(total) : 0.0;
}

}  // namespace

std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const int> rows,
                                         const BinnedThresholds& bins,
                                         const TrainConfig& config, Rng& rng) {
  const int n = static_cast<int>(rows.size());
  if (n < 2 * config.min_leaf) return std::nullopt;

  std::int64_t pos = 0;
  for (int r : rows) pos += data.labels[r] > 0;
  const std::int64_t neg = n - pos;
  const double parent = entropy(pos, neg);
  if (parent == 0.0) return std::nullopt;  // pure node

  int k = config.n_features_search > 0
              ? config.n_features_search
              : static_cast<int>(std::sqrt(static_cast<double>(data.n_features)));
  k = std::clamp(k, 1, data.n_features);
  const std::vector<int> candidates = sample_without_replacement(rng, data.n_features, k);

  std::optional<SplitCandidate> best;
  // Strictly-better comparisons with ascending candidate order give the
  // documented tie-break: lower feature index, then lower threshold.
  double best_score = parent - 1e-12;
  for (int f : candidates) {
    for (double t : bins.per_feature[f]) {
      std::int64_t left_pos = 0;
      int left_n = 0;
      for (int r : rows) {
        if (data.rows[r][f] <= t) {
          ++left_n;
          left_pos += data.labels[r] > 0;
        }
      }
      const int right_n = n - left_n;
      if (left_n < config.min_leaf || right_n < config.min_leaf) continue;
      const std::int64_t right_pos = pos - left_pos;
      const double score = (static_cast<double>(left_n) * entropy(left_pos, left_n - left_pos) +
                            static_cast<double>(right_n) * entropy(right_pos, right_n - right_pos)) /
                           static_cast<double>(n);
      if (score < best_score) {
        best_score = score;
        best = SplitCandidate{f, t};
      }
    }
  }
  return best;
}

namespace {

struct TreeBuilder {
  const Dataset& data;
  const BinnedThresholds& bins;
  const TrainConfig& config;
  Rng& rng;
  double bag_size;
  TreeArrays tree;

  NodeIndex grow(std::vector<int>& rows) {
    std::int64_t pos = 0;
    for (int r : rows) pos += data.labels[r] > 0;
    const std::int64_t neg = static_cast<std::int64_t>(rows.size()) - pos;

    const NodeIndex j = static_cast<NodeIndex>(tree.values.size());
    tree.values.push_back(node_value(pos, neg, config.value_mode));
    tree.left_child.push_back(kNoChild);
    tree.right_child.push_back(kNoChild);
    tree.thresholds.push_back(std::numeric_limits<double>::quiet_NaN());
    tree.features.push_back(kNoFeature);
    tree.cover.push_back(static_cast<double>(rows.size()) / bag_size);

    const auto split = best_split(data, rows, bins, config, rng);
    if (!split) return j;

    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
      (data.rows[r][split->feature] <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    tree.features[j] = split->feature;
    tree.thresholds[j] = split->threshold;
    const NodeIndex l = grow(left_rows);
    tree.left_child[j] = l;
    const NodeIndex r = grow(right_rows);
    tree.right_child[j] = r;
    return j;
  }
};

}  // namespace

TreeArrays train_tree(const Dataset& data, std::span<const int> bag_rows,
                      const BinnedThresholds& bins, const TrainConfig& config, Rng& rng) {
  if (!data.has_labels()) throw ValidationError("training requires labels");
  if (bag_rows.empty()) throw ValidationError("empty training bag");
  TreeBuilder builder{data, bins, config, rng, static_cast<double>(bag_rows.size()), {}};
  std::vector<int> rows(bag_rows.begin(), bag_rows.end());
  builder.grow(rows);
  return std::move(builder.tree);
}

EnsembleModel train_forest(const Dataset& data, const TrainConfig& config) {
  if (!data.has_labels()) throw ValidationError("training requires labels");
  const int n = data.n_rows();
  const int bag_size = 2 * n / 3;
  if (bag_size < 1) throw ValidationError("training set too small to bag");
  if (config.n_trees < 1) throw ValidationError("n_trees must be positive");

  const BinnedThresholds bins = compute_bins(data, config.n_bins);

  EnsembleModel model;
  model.aggregation = Aggregation::kForestAverage;
  model.n_features = data.n_features;
  model.feature_names = data.feature_names;
  for (int t = 0; t < config.n_trees; ++t) {
    Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(t));
    const std::vector<int> bag = sample_without_replacement(rng, n, bag_size);
    model.trees.push_back(train_tree(data, bag, bins, config, rng));
  }

  char buf[32];
  model.metadata["trainer"] = "cart_forest";
  std::snprintf(buf, sizeof(buf), "%d", config.n_trees);
  model.metadata["n_trees"] = buf;
  std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(config.seed));
  model.metadata["seed"] = buf;
  std::snprintf(buf, sizeof(buf), "%d", config.n_bins);
  model.metadata["n_bins"] = buf;
  std::snprintf(buf, sizeof(buf), "%d", config.min_leaf);
  model.metadata["min_leaf"] = buf;
  model.metadata["value_mode"] =
      config.value_mode == ValueMode::kMajorityTieZero ? "majority_tie_zero" : "mean_label";
  return model;
}

}  // namespace treesv
