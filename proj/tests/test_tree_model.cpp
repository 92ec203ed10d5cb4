#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "treesv/errors.hpp"
#include "treesv/tree.hpp"

using namespace treesv;

namespace {

TreeArrays make_single_leaf(double value) {
  TreeArrays t;
  t.values = {value};
  t.left_child = {-1};
  t.right_child = {-1};
  t.thresholds = {NAN};
  t.features = {-1};
  t.cover = {1.0};
  return t;
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  for (const std::string& p : problems) {
    if (p.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("validate_tree accepts the fixture and a single leaf") {
  CHECK(validate_tree(fixtures::make_t1()).empty());
  CHECK(validate_tree(make_single_leaf(0.0)).empty());
}

TEST_CASE("validate_tree flags a cover-sum violation at the root") {
  TreeArrays t = fixtures::make_t1();
  t.cover[1] = 0.50;  // children now sum to 1.10 under the root
  const std::vector<std::string> problems = validate_tree(t);
  REQUIRE(!problems.empty());
  CHECK(mentions(problems, "cover"));
  CHECK(mentions(problems, "node 0"));
}

TEST_CASE("validate_tree flags structural damage") {
  SUBCASE("one-child node") {
    TreeArrays t = fixtures::make_t1();
    t.right_child[1] = kNoChild;
    CHECK(!validate_tree(t).empty());
  }
  SUBCASE("self-loop") {
    TreeArrays t = fixtures::make_t1();
    t.left_child[1] = 1;
    CHECK(!validate_tree(t).empty());
  }
  SUBCASE("leaf carrying a feature") {
    TreeArrays t = fixtures::make_t1();
    t.features[3] = 0;
    CHECK(!validate_tree(t).empty());
  }
  SUBCASE("non-positive cover") {
    TreeArrays t = fixtures::make_t1();
    t.cover[4] = 0.0;
    CHECK(!validate_tree(t).empty());
  }
  SUBCASE("non-finite threshold on an internal node") {
    TreeArrays t = fixtures::make_t1();
    t.thresholds[2] = NAN;
    CHECK(!validate_tree(t).empty());
  }
}

TEST_CASE("validate_model checks feature bounds and prefixes tree indices") {
  EnsembleModel m = fixtures::make_t1_model();
  CHECK(validate_model(m).empty());

  m.n_features = 2;  // tree uses feature 2, now out of range
  const std::vector<std::string> problems = validate_model(m);
  REQUIRE(!problems.empty());
  CHECK(mentions(problems, "tree 0"));

  EnsembleModel empty;
  empty.n_features = 3;
  CHECK(!validate_model(empty).empty());
}

TEST_CASE("assign_internal_values follows the value mode") {
  // Stump shape; internal value computed from the supplied counts.
  TreeArrays t = fixtures::make_stump(0, 0.5, -1.0, 1.0);
  NodeClassCounts counts;
  counts.positive = {50, 0, 50};
  counts.negative = {50, 50, 0};

  SUBCASE("50/50 tie at the root gives 0 under majority_tie_zero") {
    TreeArrays out = assign_internal_values(t, counts, ValueMode::kMajorityTieZero);
    CHECK(out.values[0] == 0.0);
    CHECK(out.values[1] == -1.0);  // leaf values kept
    CHECK(out.values[2] == 1.0);
  }
  SUBCASE("30+/10- majority and mean modes") {
    counts.positive = {30, 0, 30};
    counts.negative = {10, 10, 0};
    TreeArrays majority = assign_internal_values(t, counts, ValueMode::kMajorityTieZero);
    CHECK(majority.values[0] == 1.0);
    TreeArrays mean = assign_internal_values(t, counts, ValueMode::kMeanLabel);
    CHECK(mean.values[0] == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("zero total count on an internal node is an error") {
    counts.positive = {0, 0, 50};
    counts.negative = {0, 10, 0};  // root unreachable
    CHECK_THROWS_AS(assign_internal_values(t, counts, ValueMode::kMajorityTieZero),
                    ValidationError);
  }
}

TEST_CASE("assign_internal_values_from_leaves is the cover-weighted recursion") {
  TreeArrays t = fixtures::make_t1();
  t.values[0] = t.values[1] = t.values[2] = -99.0;  // stale internals must be overwritten
  TreeArrays out = assign_internal_values_from_leaves(t);
  CHECK(out.values[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(out.values[1] == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(out.values[0] == doctest::Approx(0.10).epsilon(1e-13));
  // Leaves bit-exact.
  CHECK(out.values[3] == -1.0);
  CHECK(out.values[6] == 1.0);

  SUBCASE("equal covers average to zero") {
    TreeArrays stump = fixtures::make_stump(0, 0.5, -1.0, 1.0);
    stump.values[0] = 7.0;
    CHECK(assign_internal_values_from_leaves(stump).values[0] == 0.0);
  }
  SUBCASE("single leaf unchanged") {
    TreeArrays leaf = make_single_leaf(0.7);
    CHECK(assign_internal_values_from_leaves(leaf).values[0] == 0.7);
  }
}

TEST_CASE("predict descends with <= going left") {
  const TreeArrays t = fixtures::make_t1();
  CHECK(predict(t, {0.2, 0.3, 0.8}) == -1.0);  // leaf N3
  CHECK(predict(t, {0.9, 0.9, 0.8}) == 1.0);   // leaf N6
  CHECK(predict(t, {0.5, 0.5, 0.5}) == -1.0);  // thresholds route left on equality
  CHECK(predict(make_single_leaf(0.7), {1.0, 2.0, 3.0}) == 0.7);
}

TEST_CASE("decision_path records steps and unique features") {
  const TreeArrays t = fixtures::make_t1();
  DecisionPath p = decision_path(t, {0.2, 0.3, 0.8});
  REQUIRE(p.steps.size() == 2);
  CHECK(p.steps[0].node == 0);
  CHECK(p.steps[0].feature == 0);
  CHECK(p.steps[0].went_left);
  CHECK(p.steps[1].node == 1);
  CHECK(p.steps[1].feature == 1);
  CHECK(p.steps[1].went_left);
  CHECK(p.unique_features == std::vector<int>{0, 1});
  CHECK(p.leaf == 3);

  DecisionPath q = decision_path(t, {0.9, 0.9, 0.8});
  CHECK(q.unique_features == std::vector<int>{0, 2});
  CHECK(q.leaf == 6);

  DecisionPath leaf_only = decision_path(make_single_leaf(0.0), {0.1});
  CHECK(leaf_only.steps.empty());
  CHECK(leaf_only.unique_features.empty());
}

TEST_CASE("predict equals the value at the decision path's leaf") {
  const TreeArrays t = fixtures::make_t1();
  for (double a : {0.1, 0.6}) {
    for (double b : {0.2, 0.9}) {
      for (double c : {0.3, 0.7}) {
        const Instance x = {a, b, c};
        CHECK(predict(t, x) == t.values[decision_path(t, x).leaf]);
      }
    }
  }
}

TEST_CASE("ensemble_predict aggregates per the model kind") {
  EnsembleModel forest;
  forest.n_features = 1;
  forest.trees.push_back(make_single_leaf(-1.0));
  forest.trees.push_back(make_single_leaf(1.0));
  CHECK(ensemble_predict(forest, {0.0}) == 0.0);

  EnsembleModel boosted;
  boosted.aggregation = Aggregation::kBoostedSum;
  boosted.n_features = 1;
  boosted.trees.push_back(make_single_leaf(0.3));
  boosted.trees.push_back(make_single_leaf(-0.1));
  CHECK(ensemble_predict(boosted, {0.0}) == doctest::Approx(0.2).epsilon(1e-15));

  EnsembleModel t1 = fixtures::make_t1_model();
  CHECK(ensemble_predict(t1, {0.2, 0.3, 0.8}) == -1.0);

  EnsembleModel empty;
  CHECK_THROWS_AS(ensemble_predict(empty, {0.0}), ValidationError);
}

TEST_CASE("tree structure helpers") {
  const TreeArrays t = fixtures::make_t1();
  CHECK(tree_features(t) == std::vector<int>{0, 1, 2});
  CHECK(tree_depth(t) == 2);
  CHECK(leaf_count(t) == 4);
  CHECK(tree_leaves(t) == std::vector<NodeIndex>{3, 4, 5, 6});
  CHECK(tree_depth(make_single_leaf(0.0)) == 0);
}
