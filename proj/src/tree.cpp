#include "treesv/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "treesv/errors.hpp"

namespace treesv {

namespace {

std::string node_msg(const char* what, NodeIndex j) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "node %d: %s", j, what);
  return buf;
}

}  // namespace

std::vector<std::string> validate_tree(const TreeArrays& tree) {
  std::vector<std::string> problems;
  const std::size_t n = tree.values.size();
  if (n == 0) {
    problems.push_back("tree is empty");
    return problems;
  }
  if (tree.left_child.size() != n || tree.right_child.size() != n ||
      tree.thresholds.size() != n || tree.features.size() != n ||
      tree.cover.size() != n) {
    problems.push_back("node arrays have mismatched lengths");
    return problems;
  }
  const int count = static_cast<int>(n);

  std::vector<int> in_degree(n, 0);
  for (NodeIndex j = 0; j < count; ++j) {
    const NodeIndex l = tree.left_child[j];
    const NodeIndex r = tree.right_child[j];
    if ((l == kNoChild) != (r == kNoChild)) {
      problems.push_back(node_msg("has exactly one child", j));
      continue;
    }
    if (l == kNoChild) {  // leaf
      if (tree.features[j] != kNoFeature)
        problems.push_back(node_msg("leaf carries a split feature", j));
    } else {
      if (l < 0 || l >= count || r < 0 || r >= count) {
        problems.push_back(node_msg("child index out of range", j));
        continue;
      }
      if (l == j || r == j) problems.push_back(node_msg("is its own child", j));
      ++in_degree[l];
      ++in_degree[r];
      if (tree.features[j] < 0)
        problems.push_back(node_msg("internal node lacks a split feature", j));
      if (!std::isfinite(tree.thresholds[j]))
        problems.push_back(node_msg("non-finite threshold", j));
    }
    if (!std::isfinite(tree.values[j]))
      problems.push_back(node_msg("non-finite value", j));
    if (!std::isfinite(tree.cover[j]) || tree.cover[j] <= 0.0)
      problems.push_back(node_msg("cover must be positive", j));
  }
  if (!problems.empty()) return problems;

  if (in_degree[0] != 0) problems.push_back("root has a parent");
  for (NodeIndex j = 1; j < count; ++j) {
    if (in_degree[j] != 1)
      problems.push_back(node_msg(in_degree[j] == 0 ? "unreachable" : "has multiple parents", j));
  }
  if (!problems.empty()) return problems;

  // With in-degrees correct a cycle would need an extra edge, so a DFS from
  // the root now visits every node exactly once; covers are checked on the way.
  if (std::fabs(tree.cover[0] - 1.0) > 1e-9)
    problems.push_back("root cover must be 1");
  std::vector<NodeIndex> stack{0};
  int visited = 0;
  while (!stack.empty()) {
    const NodeIndex j = stack.back();
    stack.pop_back();
    ++visited;
    if (tree.is_leaf(j)) continue;
    const NodeIndex l = tree.left_child[j];
    const NodeIndex r = tree.right_child[j];
    if (std::fabs(tree.cover[l] + tree.cover[r] - tree.cover[j]) > 1e-9)
      problems.push_back(node_msg("children covers do not sum to parent", j));
    stack.push_back(r);
    stack.push_back(l);
  }
  if (visited != count) problems.push_back("tree is not fully connected");
  return problems;
}

std::vector<std::string> validate_model(const EnsembleModel& model) {
  std::vector<std::string> problems;
  if (model.trees.empty()) problems.push_back("model has no trees");
  if (model.n_features <= 0) problems.push_back("n_features must be positive");
  if (!model.feature_names.empty() &&
      static_cast<int>(model.feature_names.size()) != model.n_features)
    problems.push_back("feature_names length disagrees with n_features");
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    for (const std::string& p : validate_tree(model.trees[t])) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "tree %zu: %s", t, p.c_str());
      problems.push_back(buf);
    }
    for (int f : model.trees[t].features) {
      if (f != kNoFeature && f >= model.n_features) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "tree %zu: split feature %d outside universe", t, f);
        problems.push_back(buf);
        break;
      }
    }
  }
  return problems;
}

TreeArrays assign_internal_values(TreeArrays tree, const NodeClassCounts& counts,
                                  ValueMode mode) {
  const int n = tree.node_count();
  if (static_cast<int>(counts.positive.size()) != n ||
      static_cast<int>(counts.negative.size()) != n)
    throw ValidationError("class counts do not match node count");
  for (NodeIndex j = 0; j < n; ++j) {
    if (tree.is_leaf(j) && !std::isnan(tree.values[j])) continue;
    const std::int64_t pos = counts.positive[j];
    const std::int64_t neg = counts.negative[j];
    if (pos + neg == 0) throw ValidationError(node_msg("zero training count (unreachable)", j));
    if (mode == ValueMode::kMajorityTieZero) {
      tree.values[j] = pos > neg ? 1.0 : (neg > pos ? -1.0 : 0.0);
    } else {
      tree.values[j] = static_cast<double>(pos - neg) / static_cast<double>(pos + neg);
    }
  }
  return tree;
}

TreeArrays assign_internal_values_from_leaves(TreeArrays tree) {
  // Children may precede parents in index order, so fill by post-order.
  std::vector<NodeIndex> order;
  order.reserve(tree.values.size());
  std::vector<NodeIndex> stack{0};
  while (!stack.empty()) {
    const NodeIndex j = stack.back();
    stack.pop_back();
    order.push_back(j);
    if (!tree.is_leaf(j)) {
      stack.push_back(tree.left_child[j]);
      stack.push_back(tree.right_child[j]);
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeIndex j = *it;
    if (tree.is_leaf(j)) continue;
    const NodeIndex l = tree.left_child[j];
    const NodeIndex r = tree.right_child[j];
    tree.values[j] =
        (tree.cover[l] * tree.values[l] + tree.cover[r] * tree.values[r]) / tree.cover[j];
  }
  return tree;
}

double predict(const TreeArrays& tree, const Instance& x) {
  NodeIndex j = 0;
  while (!tree.is_leaf(j)) {
    j = x[tree.features[j]] <= tree.thresholds[j] ? tree.left_child[j] : tree.right_child[j];
  }
  return tree.values[j];
}

DecisionPath decision_path(const TreeArrays& tree, const Instance& x) {
  DecisionPath path;
  NodeIndex j = 0;
  while (!tree.is_leaf(j)) {
    PathStep step;
    step.node = j;
    step.feature = tree.features[j];
    step.threshold = tree.thresholds[j];
    step.went_left = x[step.feature] <= step.threshold;
    path.steps.push_back(step);
    j = step.went_left ? tree.left_child[j] : tree.right_child[j];
  }
  path.leaf = j;
  path.unique_features.reserve(path.steps.size());
  for (const PathStep& s : path.steps) path.unique_features.push_back(s.feature);
  std::sort(path.unique_features.begin(), path.unique_features.end());
  path.unique_features.erase(
      std::unique(path.unique_features.begin(), path.unique_features.end()),
      path.unique_features.end());
  return path;
}

double ensemble_predict(const EnsembleModel& model, const Instance& x) {
  if (model.trees.empty()) throw ValidationError("model has no trees");
  double sum = 0.0;
  for (const TreeArrays& tree : model.trees) sum += predict(tree, x);
  if (model.aggregation == Aggregation::kForestAverage)
    return sum / static_cast<double>(model.trees.size());
  return model.base_offset + sum;
}

std::vector<int> tree_features(const TreeArrays& tree) {
  std::vector<int> feats;
  for (int f : tree.features)
    if (f != kNoFeature) feats.push_back(f);
  std::sort(feats.begin(), feats.end());
  feats.erase(std::unique(feats.begin(), feats.end()), feats.end());
  return feats;
}

int tree_depth(const TreeArrays& tree) {
  int max_depth = 0;
  std::vector<std::pair<NodeIndex, int>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [j, depth] = stack.back();
    stack.pop_back();
    if (tree.is_leaf(j)) {
      max_depth = std::max(max_depth, depth);
      continue;
    }
    stack.emplace_back(tree.left_child[j], depth + 1);
    stack.emplace_back(tree.right_child[j], depth + 1);
  }
  return max_depth;
}

int leaf_count(const TreeArrays& tree) {
  int leaves = 0;
  for (NodeIndex j = 0; j < tree.node_count(); ++j)
    if (tree.is_leaf(j)) ++leaves;
  return leaves;
}

std::vector<NodeIndex> tree_leaves(const TreeArrays& tree) {
  std::vector<NodeIndex> leaves;
  for (NodeIndex j = 0; j < tree.node_count(); ++j)
    if (tree.is_leaf(j)) leaves.push_back(j);
  return leaves;
}

}  // namespace treesv
