#pragma once

#include <cmath>
#include <vector>

#include "treesv/tree.hpp"
#include "treesv/utilities.hpp"

// Hand-checked three-split tree used across the suites.
//
//            N0 (f0 <= 0.5, v 0, r 1.00)
//           /                        .
//   N1 (f1 <= 0.5, v -1, r 0.40)   N2 (f2 <= 0.5, v +1, r 0.60)
//      /            .                /            .
//  N3 (-1, .25)  N4 (+1, .15)   N5 (-1, .20)  N6 (+1, .40)
//
// For x = (0.2, 0.3, 0.8) the decision path is N0 -> N1 -> N3, so feature 2
// never participates; covers correspond to counts 100/40/60/25/15/20/40.
namespace fixtures {

inline treesv::TreeArrays make_t1() {
  treesv::TreeArrays t;
  t.values = {0.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0};
  t.left_child = {1, 3, 5, -1, -1, -1, -1};
  t.right_child = {2, 4, 6, -1, -1, -1, -1};
  t.thresholds = {0.5, 0.5, 0.5, NAN, NAN, NAN, NAN};
  t.features = {0, 1, 2, -1, -1, -1, -1};
  t.cover = {1.0, 0.40, 0.60, 0.25, 0.15, 0.20, 0.40};
  return t;
}

inline treesv::EnsembleModel make_t1_model() {
  treesv::EnsembleModel m;
  m.trees.push_back(make_t1());
  m.aggregation = treesv::Aggregation::kForestAverage;
  m.feature_names = {"x1", "x2", "x3"};
  m.n_features = 3;
  return m;
}

inline treesv::Instance t1_x() { return {0.2, 0.3, 0.8}; }

// Reference pair used in the interventional examples: y1 equals x, y2 routes
// right at the root and left at N2.
inline treesv::ReferenceSet t1_ref() { return {{0.2, 0.3, 0.8}, {0.9, 0.9, 0.1}}; }

// A depth-1 tree splitting one feature, handy for composition tests.
inline treesv::TreeArrays make_stump(int feature, double threshold, double left_value,
                                     double right_value, double left_cover = 0.5) {
  treesv::TreeArrays t;
  t.values = {0.0, left_value, right_value};
  t.left_child = {1, -1, -1};
  t.right_child = {2, -1, -1};
  t.thresholds = {threshold, NAN, NAN};
  t.features = {feature, -1, -1};
  t.cover = {1.0, left_cover, 1.0 - left_cover};
  t.values[0] = left_cover * left_value + (1.0 - left_cover) * right_value;
  return t;
}

}  // namespace fixtures
