#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace treesv {

using NodeIndex = std::int32_t;

// Leaf sentinel: leaves have both children set to kNoChild. Leaves are never
// identified through their value, which stays meaningful on every node.
inline constexpr NodeIndex kNoChild = -1;
inline constexpr int kNoFeature = -1;

using Instance = std::vector<double>;

// Array-of-nodes decision tree. Node 0 is the root; the formal tree-game
// algorithms in the literature index from 1, everything here is 0-based.
// `thresholds` holds NaN and `features` kNoFeature at leaves. `cover` stores
// the fraction of training instances reaching each node, so cover[0] == 1
// and children covers sum to their parent's.
struct TreeArrays {
  std::vector<double> values;        // v: node value, model-output units
  std::vector<NodeIndex> left_child;   // a
  std::vector<NodeIndex> right_child;  // b
  std::vector<double> thresholds;    // t
  std::vector<int> features;         // d
  std::vector<double> cover;         // r

  int node_count() const { return static_cast<int>(values.size()); }
  bool is_leaf(NodeIndex j) const { return left_child[j] == kNoChild; }
};

enum class Aggregation { kForestAverage, kBoostedSum };

struct EnsembleModel {
  std::vector<TreeArrays> trees;
  Aggregation aggregation = Aggregation::kForestAverage;
  double base_offset = 0.0;  // margin offset for boosted models, 0 for forests
  std::vector<std::string> feature_names;
  int n_features = 0;
  std::map<std::string, std::string> metadata;  // free-form notes (trainer, source dump, ...)
};

struct PathStep {
  NodeIndex node = 0;
  int feature = kNoFeature;
  double threshold = 0.0;
  bool went_left = false;  // true iff instance value <= threshold
};

struct DecisionPath {
  std::vector<PathStep> steps;        // root to parent-of-leaf
  std::vector<int> unique_features;   // ascending, deduplicated
  NodeIndex leaf = 0;
};

enum class ValueMode { kMajorityTieZero, kMeanLabel };

// Per-node counts of +1/-1 training labels reaching each node.
struct NodeClassCounts {
  std::vector<std::int64_t> positive;
  std::vector<std::int64_t> negative;
};

// Every violated structural invariant, with node indices; empty when valid.
std::vector<std::string> validate_tree(const TreeArrays& tree);

// Model-level validation: per-tree reports plus feature-index bounds.
std::vector<std::string> validate_model(const EnsembleModel& model);

// Sets internal-node values from label counts. kMajorityTieZero assigns
// +1/-1 by majority and 0 on an exact tie; kMeanLabel assigns
// (n_pos - n_neg) / (n_pos + n_neg). Leaf values already set by training are
// kept; unset (NaN) leaf values are filled by the same rule.
TreeArrays assign_internal_values(TreeArrays tree, const NodeClassCounts& counts, ValueMode mode);

// Bottom-up cover-weighted average of the leaves:
// value[j] = (cover[l]*value[l] + cover[r]*value[r]) / cover[j].
// Leaf values are untouched.
TreeArrays assign_internal_values_from_leaves(TreeArrays tree);

// Value of the leaf reached by descending from the root, going left iff
// x[feature] <= threshold.
double predict(const TreeArrays& tree, const Instance& x);

DecisionPath decision_path(const TreeArrays& tree, const Instance& x);

// forest_average: mean of per-tree predictions.
// boosted_sum: base_offset + sum of per-tree margins.
double ensemble_predict(const EnsembleModel& model, const Instance& x);

// Unique feature indices appearing anywhere in the tree, ascending.
std::vector<int> tree_features(const TreeArrays& tree);

int tree_depth(const TreeArrays& tree);
int leaf_count(const TreeArrays& tree);

// Leaf node indices in ascending order.
std::vector<NodeIndex> tree_leaves(const TreeArrays& tree);

}  // namespace treesv
