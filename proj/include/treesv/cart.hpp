#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "treesv/dataset.hpp"
#include "treesv/rng.hpp"
#include "treesv/tree.hpp"

namespace treesv {

// Training recipe: equal-density binning of candidate thresholds, per-node
// feature subsampling of floor(sqrt(n_features)), cross-entropy split search
// with a minimum of min_leaf instances per daughter, bags of floor(2N/3)
// drawn without replacement.
struct TrainConfig {
  int n_bins = 10;
  int min_leaf = 5;
  int n_features_search = 0;  // 0 means floor(sqrt(n_features))
  int n_trees = 1;
  std::uint64_t seed = 0;
  ValueMode value_mode = ValueMode::kMajorityTieZero;
};

// Candidate split thresholds at the n_bins-1 internal equal-density quantile
// boundaries; each threshold is the midpoint between adjacent distinct
// boundary values, duplicates collapsed. A constant feature yields an empty
// list.
std::vector<double> equal_density_bins(std::vector<double> values, int n_bins);

// Global per-feature candidates, computed once on the full training set.
struct BinnedThresholds {
  std::vector<std::vector<double>> per_feature;
};

BinnedThresholds compute_bins(const Dataset& data, int n_bins);

struct SplitCandidate {
  int feature = kNoFeature;
  double threshold = 0.0;
};

// Best admissible split of the given rows by weighted child cross-entropy,
// over a fresh feature subsample; nullopt when no admissible split improves
// the parent entropy. Ties break to the lower feature index, then the lower
// threshold.
std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const int> rows,
                                         const BinnedThresholds& bins,
                                         const TrainConfig& config, Rng& rng);

// Grows one tree on the given bag rows. Node values (leaf and internal)
// follow config.value_mode; covers are node counts divided by the bag size.
// A bag smaller than 2*min_leaf yields a single-leaf tree.
TreeArrays train_tree(const Dataset& data, std::span<const int> bag_rows,
                      const BinnedThresholds& bins, const TrainConfig& config, Rng& rng);

// Bagged forest: per tree an independent bag of floor(2N/3) rows without
// replacement, with the tree's RNG stream derived from (seed, tree index).
EnsembleModel train_forest(const Dataset& data, const TrainConfig& config);

// Classification label from the forest's raw average: sign at 0 (an exact
// zero mean maps to +1).
inline int classify(double raw_output) { return raw_output >= 0.0 ? 1 : -1; }

}  // namespace treesv
