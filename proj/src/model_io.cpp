#include "treesv/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "treesv/errors.hpp"

namespace treesv {

using nlohmann::json;

std::string format_double(double v) {
  // Shortest decimal form that parses back to the identical double.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double_strict(const std::string& token, const char* context) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    char buf[320];
    std::snprintf(buf, sizeof(buf), "%s: not a number: '%s'", context, token.c_str());
    throw ValidationError(buf);
  }
  return v;
}

[[noreturn]] void node_error(std::size_t tree_index, int node_id, const char* what) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "tree %zu node %d: %s", tree_index, node_id, what);
  throw ValidationError(buf);
}

void require_validates(const EnsembleModel& model, const char* origin) {
  const std::vector<std::string> problems = validate_model(model);
  if (problems.empty()) return;
  std::string msg = origin;
  msg += ":";
  const std::size_t shown = std::min<std::size_t>(problems.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) msg += " " + problems[i] + ";";
  if (problems.size() > shown) msg += " ...";
  throw ValidationError(msg);
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw ValidationError("read failure: " + path);
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw ValidationError("write failure: " + path);
}

std::string model_to_json(const EnsembleModel& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["model_kind"] =
      model.aggregation == Aggregation::kForestAverage ? "forest_average" : "boosted_sum";
  doc["base_offset"] = model.base_offset;
  if (model.feature_names.empty()) {
    // Unnamed models get stable placeholder names so the document is complete.
    json names = json::array();
    for (int f = 0; f < model.n_features; ++f) {
      char name[16];
      std::snprintf(name, sizeof(name), "x%d", f + 1);
      names.push_back(name);
    }
    doc["feature_names"] = std::move(names);
  } else {
    doc["feature_names"] = model.feature_names;
  }
  if (!model.metadata.empty()) doc["metadata"] = model.metadata;
  json trees = json::array();
  for (const TreeArrays& tree : model.trees) {
    json nodes = json::array();
    for (NodeIndex j = 0; j < tree.node_count(); ++j) {
      json node;
      node["id"] = j;
      node["value"] = tree.values[j];
      node["cover"] = tree.cover[j];
      if (tree.is_leaf(j)) {
        node["feature"] = nullptr;
        node["threshold"] = nullptr;
        node["left"] = nullptr;
        node["right"] = nullptr;
      } else {
        node["feature"] = tree.features[j];
        node["threshold"] = tree.thresholds[j];
        node["left"] = tree.left_child[j];
        node["right"] = tree.right_child[j];
      }
      nodes.push_back(std::move(node));
    }
    trees.push_back(std::move(nodes));
  }
  doc["trees"] = std::move(trees);
  return doc.dump(2) + "\n";
}

EnsembleModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("model JSON: top level must be an object");
  if (!doc.contains("format_version") || !doc["format_version"].is_string() ||
      doc["format_version"].get<std::string>() != kModelFormatVersion)
    throw ValidationError("model JSON: unsupported or missing format_version (expected \"1\")");

  EnsembleModel model;
  const std::string kind = doc.value("model_kind", std::string{});
  if (kind == "forest_average") {
    model.aggregation = Aggregation::kForestAverage;
  } else if (kind == "boosted_sum") {
    model.aggregation = Aggregation::kBoostedSum;
  } else {
    throw ValidationError("model JSON: model_kind must be forest_average or boosted_sum");
  }
  if (!doc.contains("base_offset") || !doc["base_offset"].is_number())
    throw ValidationError("model JSON: missing numeric base_offset");
  model.base_offset = doc["base_offset"].get<double>();

  if (!doc.contains("feature_names") || !doc["feature_names"].is_array())
    throw ValidationError("model JSON: missing feature_names");
  for (const json& name : doc["feature_names"]) {
    if (!name.is_string()) throw ValidationError("model JSON: feature_names must be strings");
    model.feature_names.push_back(name.get<std::string>());
  }
  model.n_features = static_cast<int>(model.feature_names.size());

  if (doc.contains("metadata")) {
    if (!doc["metadata"].is_object())
      throw ValidationError("model JSON: metadata must be an object");
    for (const auto& [key, value] : doc["metadata"].items()) {
      if (!value.is_string())
        throw ValidationError("model JSON: metadata values must be strings");
      model.metadata[key] = value.get<std::string>();
    }
  }

  if (!doc.contains("trees") || !doc["trees"].is_array() || doc["trees"].empty())
    throw ValidationError("model JSON: missing trees");
  for (std::size_t t = 0; t < doc["trees"].size(); ++t) {
    const json& jnodes = doc["trees"][t];
    if (!jnodes.is_array() || jnodes.empty()) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "tree %zu: must be a non-empty node array", t);
      throw ValidationError(buf);
    }
    const int n = static_cast<int>(jnodes.size());
    TreeArrays tree;
    tree.values.assign(n, 0.0);
    tree.left_child.assign(n, kNoChild);
    tree.right_child.assign(n, kNoChild);
    tree.thresholds.assign(n, std::numeric_limits<double>::quiet_NaN());
    tree.features.assign(n, kNoFeature);
    tree.cover.assign(n, 0.0);
    std::vector<bool> seen(n, false);
    for (const json& jn : jnodes) {
      if (!jn.is_object() || !jn.contains("id") || !jn["id"].is_number_integer())
        node_error(t, -1, "node without an integer id");
      const int id = jn["id"].get<int>();
      if (id < 0 || id >= n) node_error(t, id, "id outside 0..n_nodes-1");
      if (seen[id]) node_error(t, id, "duplicate id");
      seen[id] = true;
      if (!jn.contains("value") || !jn["value"].is_number())
        node_error(t, id, "missing value");
      tree.values[id] = jn["value"].get<double>();
      if (!jn.contains("cover") || !jn["cover"].is_number())
        node_error(t, id, "missing cover");
      tree.cover[id] = jn["cover"].get<double>();
      for (const char* key : {"feature", "threshold", "left", "right"})
        if (!jn.contains(key)) node_error(t, id, "missing feature/threshold/left/right");
      const bool is_leaf = jn["feature"].is_null();
      if (jn["threshold"].is_null() != is_leaf || jn["left"].is_null() != is_leaf ||
          jn["right"].is_null() != is_leaf)
        node_error(t, id, "feature/threshold/left/right must be all null or all set");
      if (!is_leaf) {
        if (!jn["feature"].is_number_integer() || !jn["threshold"].is_number() ||
            !jn["left"].is_number_integer() || !jn["right"].is_number_integer())
          node_error(t, id, "malformed split fields");
        tree.features[id] = jn["feature"].get<int>();
        tree.thresholds[id] = jn["threshold"].get<double>();
        tree.left_child[id] = jn["left"].get<NodeIndex>();
        tree.right_child[id] = jn["right"].get<NodeIndex>();
      }
    }
    model.trees.push_back(std::move(tree));
  }
  require_validates(model, "model JSON");
  return model;
}

EnsembleModel read_model(const std::string& path) {
  try {
    return model_from_json(read_text_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_model(const EnsembleModel& model, const std::string& path) {
  require_validates(model, "model");
  write_text_file(path, model_to_json(model));
}

namespace {

struct DumpContext {
  std::vector<std::string> names;  // grows when splits reference new f<idx>
  bool fixed_names = false;
  std::size_t tree_index = 0;
};

int split_feature_index(const std::string& split, DumpContext& ctx) {
  if (ctx.fixed_names) {
    const auto it = std::find(ctx.names.begin(), ctx.names.end(), split);
    if (it != ctx.names.end()) return static_cast<int>(it - ctx.names.begin());
  }
  if (split.size() >= 2 && split[0] == 'f') {
    int idx = 0;
    const auto res = std::from_chars(split.data() + 1, split.data() + split.size(), idx);
    if (res.ec == std::errc{} && res.ptr == split.data() + split.size() && idx >= 0) {
      if (ctx.fixed_names) {
        if (idx < static_cast<int>(ctx.names.size())) return idx;
      } else {
        while (static_cast<int>(ctx.names.size()) <= idx) {
          char name[16];
          std::snprintf(name, sizeof(name), "f%zu", ctx.names.size());
          ctx.names.push_back(name);
        }
        return idx;
      }
    }
  }
  char buf[192];
  std::snprintf(buf, sizeof(buf), "tree %zu: unknown split feature '%s'", ctx.tree_index,
                split.c_str());
  throw ValidationError(buf);
}

NodeIndex append_dump_node(const json& jn, TreeArrays& tree, DumpContext& ctx,
                           const BoostedImportOptions& options) {
  const int nodeid = jn.value("nodeid", -1);
  const NodeIndex j = static_cast<NodeIndex>(tree.values.size());
  tree.values.push_back(std::numeric_limits<double>::quiet_NaN());
  tree.left_child.push_back(kNoChild);
  tree.right_child.push_back(kNoChild);
  tree.thresholds.push_back(std::numeric_limits<double>::quiet_NaN());
  tree.features.push_back(kNoFeature);
  if (!jn.contains("cover") || !jn["cover"].is_number())
    node_error(ctx.tree_index, nodeid, "missing cover (dump the model with statistics)");
  tree.cover.push_back(jn["cover"].get<double>());

  if (jn.contains("leaf")) {
    if (!jn["leaf"].is_number()) node_error(ctx.tree_index, nodeid, "non-numeric leaf");
    tree.values[j] = jn["leaf"].get<double>();
    return j;
  }
  for (const char* key : {"split", "split_condition", "yes", "no", "missing", "children"})
    if (!jn.contains(key)) node_error(ctx.tree_index, nodeid, "missing split field");
  if (jn["missing"] != jn["yes"])
    node_error(ctx.tree_index, nodeid,
               "missing-branch differs from yes-branch (missing-data routing unsupported)");
  tree.features[j] = split_feature_index(jn["split"].get<std::string>(), ctx);
  double threshold = jn["split_condition"].get<double>();
  // The dump routes x < t to "yes"; this artifact routes x <= t left. The
  // optional nudge moves t just below itself so both agree on every double.
  if (options.nudge_thresholds)
    threshold = std::nextafter(threshold, -std::numeric_limits<double>::infinity());
  tree.thresholds[j] = threshold;

  const json& children = jn["children"];
  if (!children.is_array() || children.size() != 2)
    node_error(ctx.tree_index, nodeid, "expected exactly two children");
  const int yes_id = jn["yes"].get<int>();
  const int no_id = jn["no"].get<int>();
  const json* yes_child = nullptr;
  const json* no_child = nullptr;
  for (const json& child : children) {
    const int cid = child.value("nodeid", -1);
    if (cid == yes_id) yes_child = &child;
    if (cid == no_id) no_child = &child;
  }
  if (yes_child == nullptr || no_child == nullptr)
    node_error(ctx.tree_index, nodeid, "children do not match yes/no ids");
  tree.left_child[j] = append_dump_node(*yes_child, tree, ctx, options);
  tree.right_child[j] = append_dump_node(*no_child, tree, ctx, options);
  return j;
}

}  // namespace

EnsembleModel import_boosted_dump(const std::string& dump_text,
                                  const BoostedImportOptions& options) {
  json doc;
  try {
    doc = json::parse(dump_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("boosted dump: ") + e.what());
  }
  if (doc.is_object()) doc = json::array({doc});
  if (!doc.is_array() || doc.empty())
    throw ValidationError("boosted dump: expected a tree object or a non-empty array of trees");
  if (!(options.base_score > 0.0 && options.base_score < 1.0))
    throw ValidationError("base_score must lie strictly between 0 and 1");

  DumpContext ctx;
  ctx.names = options.feature_names;
  ctx.fixed_names = !options.feature_names.empty();

  EnsembleModel model;
  model.aggregation = Aggregation::kBoostedSum;
  model.base_offset = std::log(options.base_score / (1.0 - options.base_score));
  for (std::size_t t = 0; t < doc.size(); ++t) {
    ctx.tree_index = t;
    TreeArrays tree;
    append_dump_node(doc[t], tree, ctx, options);
    const double root_cover = tree.cover[0];
    if (!(root_cover > 0.0)) node_error(t, 0, "root cover must be positive");
    for (double& c : tree.cover) c /= root_cover;
    model.trees.push_back(assign_internal_values_from_leaves(std::move(tree)));
  }
  model.feature_names = ctx.names;
  model.n_features = static_cast<int>(ctx.names.size());

  model.metadata["source"] = "boosted_dump";
  model.metadata["base_score"] = format_double(options.base_score);
  // Covers in dumps are Hessian-weighted counts; dividing by the root cover
  // treats them as the traversal fractions the utilities expect.
  model.metadata["cover_normalization"] = "root_fraction";
  model.metadata["threshold_convention"] =
      options.nudge_thresholds ? "nudged_below_source" : "verbatim_le_left";
  require_validates(model, "boosted dump");
  return model;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

// Lines with the trailing newline removed; a final empty line is dropped.
std::vector<std::string> read_csv_lines(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<std::string> lines;
  std::string line;
  for (char c : text) {
    if (c == '\n') {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      line.clear();
    } else {
      line.push_back(c);
    }
  }
  if (!line.empty()) {
    if (line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (lines.empty()) throw ValidationError(path + ": empty file (header required)");
  return lines;
}

int parse_label_cell(const std::string& token, const char* context) {
  const double v = parse_double_strict(token, context);
  if (v == 1.0) return 1;
  if (v == -1.0 || v == 0.0) return -1;  // {0,1} labels map 0 to -1
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%s: label must be -1/+1 or 0/1, got '%s'", context,
                token.c_str());
  throw ValidationError(buf);
}

void check_csv_name(const std::string& name) {
  if (name.empty() || name.find(',') != std::string::npos ||
      name.find('\n') != std::string::npos)
    throw ValidationError("feature name unusable in CSV: '" + name + "'");
}

}  // namespace

Dataset read_dataset(const std::string& path) {
  const std::vector<std::string> lines = read_csv_lines(path);
  const std::vector<std::string> header = split_csv_line(lines[0]);

  Dataset data;
  int label_column = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") {
      if (label_column >= 0) throw ValidationError(path + ": duplicate label column");
      label_column = static_cast<int>(c);
    } else {
      if (header[c].empty()) throw ValidationError(path + ": empty column name in header");
      data.feature_names.push_back(header[c]);
    }
  }
  data.n_features = static_cast<int>(data.feature_names.size());
  if (data.n_features == 0) throw ValidationError(path + ": no feature columns");

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> cells = split_csv_line(lines[r]);
    if (cells.size() != header.size()) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s: row %zu: expected %zu cells, got %zu", path.c_str(),
                    r, header.size(), cells.size());
      throw ValidationError(buf);
    }
    Instance row;
    row.reserve(data.n_features);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      char context[224];
      std::snprintf(context, sizeof(context), "%s: row %zu column '%s'", path.c_str(), r,
                    header[c].c_str());
      if (cells[c].empty()) throw ValidationError(std::string(context) + ": missing cell");
      if (static_cast<int>(c) == label_column) {
        data.labels.push_back(parse_label_cell(cells[c], context));
      } else {
        row.push_back(parse_double_strict(cells[c], context));
      }
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

void write_dataset(const Dataset& data, const std::string& path) {
  if (data.has_labels() && data.labels.size() != data.rows.size())
    throw ValidationError("label count disagrees with row count");
  std::string out;
  for (int f = 0; f < data.n_features; ++f) {
    check_csv_name(data.feature_names[f]);
    if (f) out += ',';
    out += data.feature_names[f];
  }
  if (data.has_labels()) out += ",label";
  out += '\n';
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    for (int f = 0; f < data.n_features; ++f) {
      if (f) out += ',';
      out += format_double(data.rows[r][f]);
    }
    if (data.has_labels()) {
      out += ',';
      out += data.labels[r] > 0 ? "1" : "-1";
    }
    out += '\n';
  }
  write_text_file(path, out);
}

void write_attributions(const std::vector<Attribution>& rows,
                        const std::vector<std::string>& feature_names,
                        const std::string& path, bool drop_base) {
  std::string out = "instance_id,method";
  if (!drop_base) out += ",base_value";
  out += ",full_value";
  for (const std::string& name : feature_names) {
    check_csv_name(name);
    out += ",phi_" + name;
  }
  out += '\n';
  for (const Attribution& row : rows) {
    if (row.phi.size() != feature_names.size())
      throw ValidationError("attribution width disagrees with feature names");
    double sum = 0.0;
    for (double p : row.phi) sum += p;
    // Efficiency gate: base + sum(phi) = full is enforced on every written
    // row regardless of whether the base column is emitted.
    const double residual = row.base_value + sum - row.full_value;
    if (std::fabs(residual) > 1e-7) {
      char buf[192];
      std::snprintf(buf, sizeof(buf),
                    "instance %lld: efficiency violated before write (residual %.3g)",
                    static_cast<long long>(row.instance_index), residual);
      throw VerificationError(buf);
    }
    out += std::to_string(row.instance_index);
    out += ',';
    out += method_name(row.method);
    if (!drop_base) {
      out += ',';
      out += format_double(row.base_value);
    }
    out += ',';
    out += format_double(row.full_value);
    for (double p : row.phi) {
      out += ',';
      out += format_double(p);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

AttributionTable read_attributions(const std::string& path) {
  const std::vector<std::string> lines = read_csv_lines(path);
  const std::vector<std::string> header = split_csv_line(lines[0]);
  AttributionTable table;
  std::size_t col = 0;
  auto expect = [&](const char* name) {
    if (col >= header.size() || header[col] != name)
      throw ValidationError(path + ": attribution header must start with "
                                   "instance_id,method[,base_value],full_value");
    ++col;
  };
  expect("instance_id");
  expect("method");
  table.has_base = col < header.size() && header[col] == "base_value";
  if (table.has_base) ++col;
  expect("full_value");
  for (; col < header.size(); ++col) {
    if (header[col].rfind("phi_", 0) != 0)
      throw ValidationError(path + ": expected phi_<feature> column, got '" + header[col] + "'");
    table.feature_names.push_back(header[col].substr(4));
  }

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> cells = split_csv_line(lines[r]);
    if (cells.size() != header.size()) {
      char buf[224];
      std::snprintf(buf, sizeof(buf), "%s: row %zu: expected %zu cells, got %zu", path.c_str(),
                    r, header.size(), cells.size());
      throw ValidationError(buf);
    }
    AttributionTable::Row row;
    std::size_t c = 0;
    char context[224];
    std::snprintf(context, sizeof(context), "%s: row %zu", path.c_str(), r);
    row.instance = static_cast<std::int64_t>(parse_double_strict(cells[c++], context));
    row.method = cells[c++];
    if (table.has_base) row.base_value = parse_double_strict(cells[c++], context);
    row.full_value = parse_double_strict(cells[c++], context);
    for (; c < cells.size(); ++c) row.phi.push_back(parse_double_strict(cells[c], context));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_null_flags(const LocalNullReport& report,
                      const std::vector<std::string>& feature_names,
                      const std::string& path) {
  if (static_cast<int>(feature_names.size()) != report.n_features)
    throw ValidationError("null-flag width disagrees with feature names");
  std::string out = "instance_id";
  for (const std::string& name : feature_names) {
    check_csv_name(name);
    out += ',' + name;
  }
  out += '\n';
  for (std::size_t i = 0; i < report.locally_null.size(); ++i) {
    out += std::to_string(i);
    for (int f = 0; f < report.n_features; ++f)
      out += report.locally_null[i][f] ? ",1" : ",0";
    out += '\n';
  }
  write_text_file(path, out);
}

LocalNullReport read_null_flags(const std::string& path) {
  const std::vector<std::string> lines = read_csv_lines(path);
  const std::vector<std::string> header = split_csv_line(lines[0]);
  if (header.empty() || header[0] != "instance_id")
    throw ValidationError(path + ": null-flag header must start with instance_id");
  LocalNullReport report;
  report.n_features = static_cast<int>(header.size()) - 1;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> cells = split_csv_line(lines[r]);
    if (cells.size() != header.size()) {
      char buf[224];
      std::snprintf(buf, sizeof(buf), "%s: row %zu: expected %zu cells, got %zu", path.c_str(),
                    r, header.size(), cells.size());
      throw ValidationError(buf);
    }
    std::vector<bool> flags;
    flags.reserve(report.n_features);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c] != "0" && cells[c] != "1")
        throw ValidationError(path + ": null flags must be 0 or 1");
      flags.push_back(cells[c] == "1");
    }
    report.locally_null.push_back(std::move(flags));
  }
  return report;
}

}  // namespace treesv
