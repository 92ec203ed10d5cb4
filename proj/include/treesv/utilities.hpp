#pragma once

#include "treesv/coalition.hpp"
#include "treesv/tree.hpp"

namespace treesv {

// Reference instances for the interventional utility.
using ReferenceSet = std::vector<Instance>;

// Observational utility: at a split whose feature is in the coalition, follow
// x's branch; otherwise descend both children with the weight scaled by
// cover[child]/cover[node]. Returns the weighted sum of the reached leaf
// values (left child accumulated before right). u(empty) is the
// cover-weighted mean leaf value; u(full) = predict(tree, x).
double utility_treeshap(const TreeArrays& tree, const Instance& x, const Coalition& s);

// Interventional utility: for each reference instance y, predict on the
// composition taking x on coalition features and y elsewhere; average over
// the reference set in input order. Throws ValidationError on an empty
// reference set.
double utility_interventional(const TreeArrays& tree, const Instance& x,
                              const Coalition& s, const ReferenceSet& ref);

// Eject utility: follow x's decision path and return the current node's
// value at the first split whose feature is outside the coalition; a leaf
// returns the leaf value. u(empty) is the root value; u(full) = predict.
double utility_eject(const TreeArrays& tree, const Instance& x, const Coalition& s);

}  // namespace treesv
