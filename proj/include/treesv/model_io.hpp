#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treesv/dataset.hpp"
#include "treesv/shapley.hpp"
#include "treesv/tree.hpp"

namespace treesv {

inline constexpr const char* kModelFormatVersion = "1";

// Canonical JSON model document (format_version "1"): model_kind, base_offset,
// feature_names, metadata, and per-tree node lists where each node carries
// {id, feature, threshold, left, right, value, cover}; leaves have null
// feature/threshold/children. Serialization is canonical (sorted keys,
// shortest round-trip doubles), so write(read(write(m))) is byte-stable.
std::string model_to_json(const EnsembleModel& model);
EnsembleModel model_from_json(const std::string& text);

EnsembleModel read_model(const std::string& path);
void write_model(const EnsembleModel& model, const std::string& path);

struct BoostedImportOptions {
  double base_score = 0.5;  // converted to a margin offset via log-odds
  std::vector<std::string> feature_names;  // optional; grown from f<idx> splits otherwise
  // The source dump routes x < t to the yes-branch while this artifact routes
  // x <= t left; stored thresholds are verbatim unless this flag nudges them
  // down to the previous representable double, which makes the two
  // conventions agree on every input.
  bool nudge_thresholds = false;
};

// Parses the standard per-tree JSON dump text of a gradient-boosted model
// (nodeid/split/split_condition/yes/no/missing/leaf/cover), normalizes covers
// to fractions of the root cover, assigns internal values from the leaves,
// and returns a boosted_sum model. Dumps whose "missing" child differs from
// the "yes" child are rejected, as are dumps without cover statistics.
EnsembleModel import_boosted_dump(const std::string& dump_text,
                                  const BoostedImportOptions& options = {});

// CSV dataset: header required, comma separator, "." decimal, no missing
// cells. An optional "label" column takes values in {-1,+1} or {0,1}
// (0 maps to -1). Column order defines feature-index order.
Dataset read_dataset(const std::string& path);
void write_dataset(const Dataset& data, const std::string& path);

// Attribution CSV: instance_id, method, base_value, full_value, then one
// phi_<feature> column per feature. Every row is checked for
// base + sum(phi) = full within 1e-7 before writing. drop_base omits the
// base_value column from the output without altering phi.
void write_attributions(const std::vector<Attribution>& rows,
                        const std::vector<std::string>& feature_names,
                        const std::string& path, bool drop_base = false);

struct AttributionTable {
  struct Row {
    std::int64_t instance = -1;
    std::string method;
    double base_value = 0.0;
    double full_value = 0.0;
    std::vector<double> phi;
  };
  std::vector<std::string> feature_names;
  std::vector<Row> rows;
  bool has_base = true;
};

AttributionTable read_attributions(const std::string& path);

// Companion locally-null flag CSV: instance_id then one 0/1 column per
// feature (1 = locally null).
void write_null_flags(const LocalNullReport& report,
                      const std::vector<std::string>& feature_names,
                      const std::string& path);
LocalNullReport read_null_flags(const std::string& path);

// Full-precision decimal rendering that round-trips doubles exactly.
std::string format_double(double v);

// Whole-file IO with ValidationError on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace treesv
