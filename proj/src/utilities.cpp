#include "treesv/utilities.hpp"

#include <utility>
#include <vector>

#include "treesv/errors.hpp"

namespace treesv {

double utility_treeshap(const TreeArrays& tree, const Instance& x, const Coalition& s) {
  double total = 0.0;
  // Explicit DFS; the right child is pushed first so leaves accumulate in
  // left-to-right order, keeping the float result order-stable.
  std::vector<std::pair<NodeIndex, double>> stack{{0, 1.0}};
  while (!stack.empty()) {
    const auto [j, w] = stack.back();
    stack.pop_back();
    if (tree.is_leaf(j)) {
      total += w * tree.values[j];
      continue;
    }
    const int f = tree.features[j];
    const NodeIndex l = tree.left_child[j];
    const NodeIndex r = tree.right_child[j];
    if (s.contains(f)) {
      stack.emplace_back(x[f] <= tree.thresholds[j] ? l : r, w);
    } else {
      stack.emplace_back(r, w * tree.cover[r] / tree.cover[j]);
      stack.emplace_back(l, w * tree.cover[l] / tree.cover[j]);
    }
  }
  return total;
}

double utility_interventional(const TreeArrays& tree, const Instance& x,
                              const Coalition& s, const ReferenceSet& ref) {
  if (ref.empty()) throw ValidationError("interventional utility needs a non-empty reference set");
  double sum = 0.0;
  for (const Instance& y : ref) {
    // Predict on the hybrid that takes x on coalition features, y elsewhere.
    NodeIndex j = 0;
    while (!tree.is_leaf(j)) {
      const int f = tree.features[j];
      const double v = s.contains(f) ? x[f] : y[f];
      j = v <= tree.thresholds[j] ? tree.left_child[j] : tree.right_child[j];
    }
    sum += tree.values[j];
  }
  return sum / static_cast<double>(ref.size());
}

double utility_eject(const TreeArrays& tree, const Instance& x, const Coalition& s) {
  NodeIndex j = 0;
  while (!tree.is_leaf(j)) {
    const int f = tree.features[j];
    if (!s.contains(f)) return tree.values[j];
    j = x[f] <= tree.thresholds[j] ? tree.left_child[j] : tree.right_child[j];
  }
  return tree.values[j];
}

}  // namespace treesv
