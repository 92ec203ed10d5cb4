#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "treesv/cart.hpp"
#include "treesv/dataset.hpp"
#include "treesv/errors.hpp"
#include "treesv/model_io.hpp"
#include "treesv/rng.hpp"
#include "treesv/tree.hpp"

using namespace treesv;

namespace {

// Single-feature dataset, perfectly separable at zero: values -n..-1 carry
// label -1, values 1..n carry +1.
Dataset separable(int per_side) {
  Dataset d;
  d.n_features = 1;
  d.feature_names = {"x1"};
  for (int i = per_side; i >= 1; --i) {
    d.rows.push_back({static_cast<double>(-i)});
    d.labels.push_back(-1);
  }
  for (int i = 1; i <= per_side; ++i) {
    d.rows.push_back({static_cast<double>(i)});
    d.labels.push_back(1);
  }
  return d;
}

std::vector<int> all_rows(const Dataset& d) {
  std::vector<int> r(d.n_rows());
  for (int i = 0; i < d.n_rows(); ++i) r[i] = i;
  return r;
}

}  // namespace

TEST_CASE("equal-density bins sit at quantile boundaries") {
  std::vector<double> one_to_ten = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  SUBCASE("two bins of 1..10 give the single midpoint 5.5") {
    CHECK(equal_density_bins(one_to_ten, 2) == std::vector<double>{5.5});
  }
  SUBCASE("ten bins of 1..10 give every inner midpoint") {
    const std::vector<double> expect = {1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 9.5};
    CHECK(equal_density_bins(one_to_ten, 10) == expect);
  }
  SUBCASE("input order does not matter") {
    std::vector<double> shuffled = {7, 1, 10, 4, 2, 9, 3, 6, 8, 5};
    CHECK(equal_density_bins(shuffled, 2) == std::vector<double>{5.5});
  }
  SUBCASE("a constant feature has no candidates") {
    CHECK(equal_density_bins({3.0, 3.0, 3.0, 3.0}, 4).empty());
  }
  SUBCASE("duplicate boundary values collapse") {
    // 8 values, 4 bins: boundaries after positions 2, 4, 6. The middle
    // boundary falls inside the run of 5s, so only two distinct thresholds
    // remain.
    std::vector<double> v = {1, 1, 5, 5, 5, 5, 9, 9};
    const auto bins = equal_density_bins(v, 4);
    CHECK(bins == std::vector<double>{3.0, 7.0});
  }
}

TEST_CASE("compute_bins covers every feature of the dataset") {
  Dataset d;
  d.n_features = 2;
  d.feature_names = {"a", "b"};
  for (int i = 1; i <= 10; ++i) d.rows.push_back({static_cast<double>(i), 42.0});
  const BinnedThresholds bins = compute_bins(d, 2);
  REQUIRE(bins.per_feature.size() == 2);
  CHECK(bins.per_feature[0] == std::vector<double>{5.5});
  CHECK(bins.per_feature[1].empty());  // constant column
}

TEST_CASE("best_split finds the separating threshold") {
  const Dataset d = separable(5);
  const BinnedThresholds bins = compute_bins(d, 10);
  TrainConfig config;  // min_leaf 5
  const std::vector<int> rows = all_rows(d);
  Rng rng(7);

  const auto split = best_split(d, rows, bins, config, rng);
  REQUIRE(split.has_value());
  CHECK(split->feature == 0);
  CHECK(split->threshold == 0.0);  // midpoint of -1 and 1
}

TEST_CASE("best_split declines hopeless nodes") {
  TrainConfig config;
  Rng rng(3);

  SUBCASE("a pure node cannot improve") {
    Dataset d = separable(5);
    std::fill(d.labels.begin(), d.labels.end(), 1);
    const BinnedThresholds bins = compute_bins(d, 10);
    const std::vector<int> rows = all_rows(d);
    CHECK_FALSE(best_split(d, rows, bins, config, rng).has_value());
  }
  SUBCASE("fewer than 2*min_leaf rows cannot split") {
    const Dataset d = separable(5);
    const BinnedThresholds bins = compute_bins(d, 10);
    std::vector<int> rows = all_rows(d);
    rows.pop_back();  // nine rows, min_leaf five
    CHECK_FALSE(best_split(d, rows, bins, config, rng).has_value());
  }
  SUBCASE("min_leaf rules out one-sided thresholds") {
    // Only the threshold at zero leaves five rows on each side; every other
    // candidate starves a daughter.
    const Dataset d = separable(5);
    const BinnedThresholds bins = compute_bins(d, 10);
    const std::vector<int> rows = all_rows(d);
    TrainConfig strict;
    strict.min_leaf = 5;
    const auto split = best_split(d, rows, bins, strict, rng);
    REQUIRE(split.has_value());
    CHECK(split->threshold == 0.0);
  }
}

TEST_CASE("train_tree grows the expected stump on separable data") {
  const Dataset d = separable(5);
  const BinnedThresholds bins = compute_bins(d, 10);
  TrainConfig config;
  Rng rng(11);
  const std::vector<int> rows = all_rows(d);

  const TreeArrays t = train_tree(d, rows, bins, config, rng);
  REQUIRE(t.node_count() == 3);
  CHECK_FALSE(t.is_leaf(0));
  CHECK(t.features[0] == 0);
  CHECK(t.thresholds[0] == 0.0);
  CHECK(t.values[0] == 0.0);  // 5 vs 5 tie at the root
  const NodeIndex l = t.left_child[0];
  const NodeIndex r = t.right_child[0];
  CHECK(t.values[l] == -1.0);
  CHECK(t.values[r] == 1.0);
  CHECK(t.cover[0] == 1.0);
  CHECK(t.cover[l] == 0.5);
  CHECK(t.cover[r] == 0.5);
  CHECK(validate_tree(t).empty());
}

TEST_CASE("train_tree degenerates gracefully") {
  TrainConfig config;
  Rng rng(5);

  SUBCASE("a pure bag is a single leaf holding the label") {
    Dataset d = separable(5);
    std::fill(d.labels.begin(), d.labels.end(), -1);
    const BinnedThresholds bins = compute_bins(d, 10);
    const std::vector<int> rows = all_rows(d);
    const TreeArrays t = train_tree(d, rows, bins, config, rng);
    REQUIRE(t.node_count() == 1);
    CHECK(t.is_leaf(0));
    CHECK(t.values[0] == -1.0);
    CHECK(t.cover[0] == 1.0);
  }
  SUBCASE("a bag below 2*min_leaf is a single leaf") {
    const Dataset d = separable(4);  // eight rows total
    const BinnedThresholds bins = compute_bins(d, 10);
    const std::vector<int> rows = all_rows(d);
    const TreeArrays t = train_tree(d, rows, bins, config, rng);
    REQUIRE(t.node_count() == 1);
    CHECK(t.values[0] == 0.0);  // 4 vs 4 tie under majority_tie_zero
  }
}

TEST_CASE("mean-label mode writes fractional node values") {
  Dataset d = separable(5);
  d.labels = {-1, -1, -1, -1, -1, -1, 1, 1, 1, 1};  // 4 vs 6 at the root
  const BinnedThresholds bins = compute_bins(d, 10);
  TrainConfig config;
  config.value_mode = ValueMode::kMeanLabel;
  Rng rng(2);
  const TreeArrays t = train_tree(d, all_rows(d), bins, config, rng);
  CHECK(t.values[0] == doctest::Approx(-0.2).epsilon(1e-15));  // (4 - 6) / 10
}

TEST_CASE("train_forest is deterministic in the seed") {
  Dataset d;
  d.n_features = 2;
  d.feature_names = {"u", "v"};
  Rng gen(99);
  for (int i = 0; i < 24; ++i) {
    d.rows.push_back({gen.uniform(-1, 1), gen.uniform(-1, 1)});
    d.labels.push_back(d.rows.back()[0] + d.rows.back()[1] > 0 ? 1 : -1);
  }
  TrainConfig config;
  config.n_trees = 4;
  config.seed = 9;

  const EnsembleModel a = train_forest(d, config);
  const EnsembleModel b = train_forest(d, config);
  CHECK(model_to_json(a) == model_to_json(b));

  CHECK(a.aggregation == Aggregation::kForestAverage);
  CHECK(a.base_offset == 0.0);
  CHECK(a.n_features == 2);
  CHECK(a.feature_names == d.feature_names);
  CHECK(a.metadata.at("trainer") == "cart_forest");
  CHECK(a.metadata.at("n_trees") == "4");
  REQUIRE(a.trees.size() == 4);
  for (const TreeArrays& t : a.trees) CHECK(validate_tree(t).empty());
}

TEST_CASE("a bagged forest nails separable data") {
  const Dataset d = separable(15);  // bags of 20 always admit the zero split
  TrainConfig config;
  config.n_trees = 25;
  config.seed = 4;
  const EnsembleModel model = train_forest(d, config);
  REQUIRE(model.trees.size() == 25);

  int correct = 0;
  for (int i = 0; i < d.n_rows(); ++i)
    correct += classify(ensemble_predict(model, d.rows[i])) == d.labels[i] ? 1 : 0;
  CHECK(correct == d.n_rows());

  for (const TreeArrays& t : model.trees) {
    CHECK(validate_tree(t).empty());
    CHECK(t.cover[0] == 1.0);
  }
}

TEST_CASE("classify rounds the raw forest output at zero") {
  CHECK(classify(0.0) == 1);
  CHECK(classify(1e-12) == 1);
  CHECK(classify(-1e-12) == -1);
  CHECK(classify(-1.0) == -1);
}
