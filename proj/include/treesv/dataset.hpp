#pragma once

#include <string>
#include <vector>

#include "treesv/tree.hpp"

namespace treesv {

// Instance matrix with feature names and optional +/-1 labels. Column order
// is feature-index order. No missing values anywhere.
struct Dataset {
  std::vector<Instance> rows;
  std::vector<int> labels;  // +/-1 per row; empty when unlabeled
  std::vector<std::string> feature_names;
  int n_features = 0;

  bool has_labels() const { return !labels.empty(); }
  int n_rows() const { return static_cast<int>(rows.size()); }
};

}  // namespace treesv
