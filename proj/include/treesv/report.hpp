#pragma once

#include <optional>
#include <string>
#include <vector>

#include "treesv/model_io.hpp"

namespace treesv {

// Signed-toward-predicted-class attribution summaries. SV~ for feature i on
// instance n is phi_i * predicted class (+1/-1); positive SV~ means the
// feature pushed toward the predicted class.

struct FeatureSummary {
  std::string feature;
  int n = 0;                // instances contributing
  double mean = 0.0;        // mean SV~
  double stderr_mean = 0.0; // sample stderr of the mean (0 when n < 2)
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double mean_abs = 0.0;
  double frac_nonzero = 0.0;
};

struct GroupSummary {
  std::string group;  // e.g. "informative", "uninformative", "locally_null"
  int n_pairs = 0;    // (instance, feature) pairs in the group
  double mean = 0.0;
  double stderr_mean = 0.0;
  double mean_abs = 0.0;
  double frac_nonzero = 0.0;
};

struct ResidualSummary {
  // Per-pair residual phi_treeshap - phi_other, reported when the report sees
  // attribution tables for several methods over the same instances.
  std::string method;  // the "other" method
  double mean_abs = 0.0;
  double max_abs = 0.0;
  double mean_signed = 0.0;
};

struct ReportInput {
  AttributionTable table;
  // Optional companion data; enable the corresponding report sections.
  std::optional<LocalNullReport> null_flags;
  std::vector<int> predicted_class;    // per instance, +1/-1; derived from
                                       // sign(full_value) when empty
  std::vector<bool> informative;       // per feature; empty = unknown
};

struct Report {
  std::string method;
  int n_instances = 0;
  std::vector<FeatureSummary> per_feature;
  std::vector<GroupSummary> groups;
  std::vector<ResidualSummary> residuals;
};

Report build_report(const ReportInput& input);

// Residual section comparing a TreeSHAP table against other methods' tables
// over identical instances.
std::vector<ResidualSummary> residuals_vs_treeshap(
    const AttributionTable& treeshap,
    const std::vector<AttributionTable>& others);

std::string report_text(const Report& report);
void write_report_csv(const Report& report, const std::string& path);

}  // namespace treesv
