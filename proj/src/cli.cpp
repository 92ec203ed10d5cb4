#include "treesv/cli.hpp"

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "treesv/bench.hpp"
#include "treesv/cart.hpp"
#include "treesv/dataset.hpp"
#include "treesv/errors.hpp"
#include "treesv/model_io.hpp"
#include "treesv/report.hpp"
#include "treesv/shapley.hpp"
#include "treesv/synth.hpp"
#include "treesv/tree.hpp"
#include "treesv/utilities.hpp"
#include "treesv/verify.hpp"

namespace treesv {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ValidationError("cannot create output directory '" + dir + "': " + ec.message());
  }
  if (!fs::is_directory(dir)) {
    throw ValidationError("output path '" + dir + "' is not a directory");
  }
}

// Directory that will hold the manifest for a single-file output (e.g. a
// model path); created if missing.
std::string ensure_parent_dir(const std::string& file_path) {
  fs::path parent = fs::path(file_path).parent_path();
  std::string dir = parent.empty() ? std::string(".") : parent.string();
  ensure_out_dir(dir);
  return dir;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string token;
  for (char c : csv) {
    if (c == ',') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

std::vector<Method> parse_method_list(const std::string& csv) {
  std::vector<Method> out;
  for (const std::string& token : split_list(csv)) {
    if (token == "all") {
      out = {Method::kEject, Method::kTreeshap, Method::kInterventional};
      continue;
    }
    std::optional<Method> m = method_from_name(token);
    if (!m) {
      throw UsageError("unknown method '" + token +
                       "' (expected eject, treeshap, interventional, or all)");
    }
    out.push_back(*m);
  }
  if (out.empty()) throw UsageError("no methods given");
  return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string diffs_str(const std::vector<double>& diffs) {
  std::string out;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (i) out.push_back(',');
    out += format_double(diffs[i]);
  }
  return out;
}

int resolve_jobs(int requested, int n_items) {
  int jobs = requested;
  if (jobs == 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  if (jobs > n_items) jobs = n_items < 1 ? 1 : n_items;
  return jobs;
}

// Attribution rows for every instance, in input order regardless of the
// worker count. Workers pull instance indices from a shared counter; the
// first exception wins and is rethrown after the pool drains.
std::vector<Attribution> explain_all(const EnsembleModel& model,
                                     const std::vector<Instance>& instances, Method method,
                                     const ReferenceSet& ref, Engine engine, int guard,
                                     int jobs) {
  const ReferenceSet* ref_ptr = method == Method::kInterventional ? &ref : nullptr;
  const int n = static_cast<int>(instances.size());
  std::vector<Attribution> rows(instances.size());
  const int workers = resolve_jobs(jobs, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) {
      rows[i] = shapley_ensemble(model, instances[i], method, ref_ptr, engine, guard);
      rows[i].instance_index = i;
    }
    return rows;
  }

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto work = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        rows[i] = shapley_ensemble(model, instances[i], method, ref_ptr, engine, guard);
        rows[i].instance_index = i;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 0; w + 1 < workers; ++w) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return rows;
}

void check_data_width(const Dataset& data, const std::string& path, int n_features) {
  if (data.n_features != n_features) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "'%s' has %d feature columns but the model expects %d",
                  path.c_str(), data.n_features, n_features);
    throw ValidationError(buf);
  }
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string preset;
  std::string out;
  double expr_diff = 1.0;
  double scale = kDeskScale;
  double cov = 0.0;
  int n_informative = -1;
  int n_uninformative = 0;
  int per_group_train = -1;
  int per_group_valid = -1;
  std::uint64_t seed = 1;
};

void run_synth(const SynthArgs& a) {
  if (a.expr_diff < 0) throw UsageError("--expr-diff must be non-negative");

  SynthConfig cfg;
  if (a.preset == "fig3") {
    cfg = preset_figure3(a.expr_diff, a.scale);
  } else if (a.preset == "e1-uncorr") {
    cfg = preset_supplement_e1(false);
  } else if (a.preset == "e1-corr") {
    cfg = preset_supplement_e1(true);
  } else {  // explicit design; unknown preset names were rejected at parse time
    if (a.n_informative < 0) {
      throw UsageError("explicit designs require --n-informative (or use --preset)");
    }
    if (a.per_group_train < 0 || a.per_group_valid < 0) {
      throw UsageError("explicit designs require --per-group-train and --per-group-valid");
    }
    cfg.informative_diffs.assign(a.n_informative, a.expr_diff);
    cfg.n_uninformative = a.n_uninformative;
    if (a.cov != 0.0 && a.n_informative > 1) {
      cfg.informative_cov.assign(static_cast<std::size_t>(a.n_informative) * a.n_informative,
                                 a.cov);
      for (int i = 0; i < a.n_informative; ++i) {
        cfg.informative_cov[static_cast<std::size_t>(i) * a.n_informative + i] = 1.0;
      }
    }
    cfg.train_per_group = a.per_group_train;
    cfg.valid_per_group = a.per_group_valid;
  }
  cfg.seed = a.seed;

  PhaseClock gen_clock;
  SynthResult result = generate(cfg);
  PhaseTiming gen_time = gen_clock.stop("generate");

  PhaseClock write_clock;
  ensure_out_dir(a.out);
  const std::string train_path = join_path(a.out, "train.csv");
  const std::string valid_path = join_path(a.out, "valid.csv");
  write_dataset(result.train, train_path);
  write_dataset(result.valid, valid_path);

  RunManifest man;
  man.subcommand = "synth";
  man.config["preset"] = a.preset.empty() ? "explicit" : a.preset;
  man.config["expr_diff"] = format_double(a.expr_diff);
  if (a.preset == "fig3") man.config["scale"] = format_double(a.scale);
  man.config["informative_diffs"] = diffs_str(cfg.informative_diffs);
  man.config["n_informative"] = std::to_string(cfg.n_informative());
  man.config["n_uninformative"] = std::to_string(cfg.n_uninformative);
  man.config["cov_offdiag"] =
      format_double(cfg.informative_cov.size() > 1 ? cfg.informative_cov[1] : 0.0);
  man.config["train_per_group"] = std::to_string(cfg.train_per_group);
  man.config["valid_per_group"] = std::to_string(cfg.valid_per_group);
  man.config["mean_placement"] = "symmetric";
  man.seeds = {cfg.seed};
  man.outputs = {train_path, valid_path};
  man.timings.push_back(gen_time);
  man.timings.push_back(write_clock.stop("write"));
  write_manifest(man, a.out);

  std::printf("synth: %d features, %d train / %d valid rows -> %s\n", cfg.n_features(),
              result.train.n_rows(), result.valid.n_rows(), a.out.c_str());
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string out_model;
  int trees = 100;
  int bins = 10;
  int min_leaf = 5;
  std::uint64_t seed = 1;
};

void run_train(const TrainArgs& a) {
  PhaseClock load_clock;
  Dataset data = read_dataset(a.data);
  PhaseTiming load_time = load_clock.stop("load");

  TrainConfig cfg;
  cfg.n_bins = a.bins;
  cfg.min_leaf = a.min_leaf;
  cfg.n_trees = a.trees;
  cfg.seed = a.seed;

  PhaseClock train_clock;
  EnsembleModel model = train_forest(data, cfg);
  PhaseTiming train_time = train_clock.stop("train");

  int correct = 0;
  for (int i = 0; i < data.n_rows(); ++i) {
    if (classify(ensemble_predict(model, data.rows[i])) == data.labels[i]) ++correct;
  }
  const double accuracy = data.n_rows() > 0 ? static_cast<double>(correct) / data.n_rows() : 0.0;

  PhaseClock write_clock;
  const std::string dir = ensure_parent_dir(a.out_model);
  write_model(model, a.out_model);

  RunManifest man;
  man.subcommand = "train";
  man.config["trees"] = std::to_string(a.trees);
  man.config["bins"] = std::to_string(a.bins);
  man.config["min_leaf"] = std::to_string(a.min_leaf);
  man.metrics["train_accuracy"] = format_double(accuracy);
  man.seeds = {a.seed};
  man.inputs = {a.data};
  man.outputs = {a.out_model};
  man.timings.push_back(load_time);
  man.timings.push_back(train_time);
  man.timings.push_back(write_clock.stop("write"));
  write_manifest(man, dir);

  std::printf("train: %zu trees on %d rows, training accuracy %.3f -> %s\n", model.trees.size(),
              data.n_rows(), accuracy, a.out_model.c_str());
}

// ---------------------------------------------------------------------------
// import

struct ImportArgs {
  std::string dump;
  std::string out_model;
  std::string feature_names;
  double base_score = 0.5;
  bool nudge_thresholds = false;
};

void run_import(const ImportArgs& a) {
  PhaseClock import_clock;
  BoostedImportOptions options;
  options.base_score = a.base_score;
  options.nudge_thresholds = a.nudge_thresholds;
  if (!a.feature_names.empty()) options.feature_names = split_list(a.feature_names);
  EnsembleModel model = import_boosted_dump(read_text_file(a.dump), options);
  PhaseTiming import_time = import_clock.stop("import");

  PhaseClock write_clock;
  const std::string dir = ensure_parent_dir(a.out_model);
  write_model(model, a.out_model);

  RunManifest man;
  man.subcommand = "import";
  man.config["base_score"] = format_double(a.base_score);
  man.config["nudge_thresholds"] = bool_str(a.nudge_thresholds);
  man.inputs = {a.dump};
  man.outputs = {a.out_model};
  man.timings.push_back(import_time);
  man.timings.push_back(write_clock.stop("write"));
  write_manifest(man, dir);

  std::printf("import: %zu trees, %d features -> %s\n", model.trees.size(), model.n_features,
              a.out_model.c_str());
}

// ---------------------------------------------------------------------------
// explain

struct ExplainArgs {
  std::string model;
  std::string data;
  std::string method;
  std::string reference;
  std::string engine = "auto";
  std::string out;
  int guard = kDefaultEnumerationGuard;
  int jobs = 1;
  bool drop_base = false;
};

void run_explain(const ExplainArgs& a) {
  std::vector<Method> methods = parse_method_list(a.method);
  bool wants_interventional = false;
  for (Method m : methods) wants_interventional |= m == Method::kInterventional;
  if (wants_interventional && a.reference.empty()) {
    throw UsageError("--method " + a.method + " requires --reference");
  }
  Engine engine = *engine_from_name(a.engine);

  RunManifest man;
  man.subcommand = "explain";
  man.config["method"] = a.method;
  man.config["engine"] = a.engine;
  man.config["guard"] = std::to_string(a.guard);
  man.config["jobs"] = std::to_string(a.jobs);
  man.config["drop_base"] = bool_str(a.drop_base);
  man.inputs = {a.model, a.data};

  PhaseClock load_clock;
  EnsembleModel model = read_model(a.model);
  Dataset data = read_dataset(a.data);
  check_data_width(data, a.data, model.n_features);
  ReferenceSet ref;
  if (!a.reference.empty()) {
    Dataset ref_data = read_dataset(a.reference);
    check_data_width(ref_data, a.reference, model.n_features);
    ref = std::move(ref_data.rows);
    man.inputs.push_back(a.reference);
  }
  man.timings.push_back(load_clock.stop("load"));

  ensure_out_dir(a.out);
  for (Method m : methods) {
    PhaseClock method_clock;
    std::vector<Attribution> rows =
        explain_all(model, data.rows, m, ref, engine, a.guard, a.jobs);
    const std::string file =
        join_path(a.out, std::string("attributions_") + method_name(m) + ".csv");
    write_attributions(rows, model.feature_names, file, a.drop_base);
    man.outputs.push_back(file);
    man.timings.push_back(method_clock.stop(std::string("explain_") + method_name(m)));
    std::printf("explain %s: %d instances -> %s\n", method_name(m), data.n_rows(), file.c_str());
  }

  PhaseClock null_clock;
  LocalNullReport nulls = local_null_report(model, data.rows);
  const std::string null_file = join_path(a.out, "null_flags.csv");
  write_null_flags(nulls, model.feature_names, null_file);
  man.outputs.push_back(null_file);
  man.timings.push_back(null_clock.stop("null_flags"));
  write_manifest(man, a.out);
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::uint64_t seed = 1;
  int cases = 200;
  int max_depth = 4;
  int n_features = 8;
};

void run_verify(const VerifyArgs& a) {
  PropertySuiteConfig cfg;
  cfg.seed = a.seed;
  cfg.cases = a.cases;
  cfg.max_depth = a.max_depth;
  cfg.n_features = a.n_features;
  PropertySuiteResult result = run_property_suite(cfg);
  if (result.ok()) {
    std::printf("verified %d cases: oracle equivalence and all axioms held\n", result.cases_run);
    return;
  }
  std::fprintf(stderr, "%s\n", result.failure.c_str());
  std::fprintf(stderr, "repro model:\n%s", result.repro_model.c_str());
  std::fprintf(stderr, "repro instance:\n%s\n", result.repro_instance.c_str());
  throw VerificationError(result.failure);
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string model;
  std::string data;
  std::string methods = "all";
  std::string engine = "auto";
  std::string out;
  int repeats = 3;
  int guard = kDefaultEnumerationGuard;
};

void run_bench(const BenchArgs& a) {
  EnsembleModel model = read_model(a.model);
  Dataset data = read_dataset(a.data);
  check_data_width(data, a.data, model.n_features);

  BenchConfig cfg;
  cfg.methods = parse_method_list(a.methods);
  cfg.engine = *engine_from_name(a.engine);
  cfg.guard = a.guard;
  cfg.repeats = a.repeats;

  PhaseClock bench_clock;
  // The instance set itself serves as the interventional reference.
  BenchResult result = run_bench(model, data.rows, data.rows, cfg);
  PhaseTiming bench_time = bench_clock.stop("bench");

  std::fputs(bench_report_text(result).c_str(), stdout);
  if (a.out.empty()) return;

  ensure_out_dir(a.out);
  std::string csv = "method,instances,repeats,wall_seconds,mean_ms_per_instance,median_ms,cv\n";
  for (const BenchTiming& t : result.timings) {
    csv += t.label + ',' + std::to_string(t.instances) + ',' + std::to_string(t.repeats) + ',' +
           format_double(t.wall_seconds) + ',' + format_double(t.per_instance_ms) + ',' +
           format_double(t.median_ms) + ',' + format_double(t.cv) + '\n';
  }
  const std::string csv_path = join_path(a.out, "bench.csv");
  write_text_file(csv_path, csv);

  RunManifest man;
  man.subcommand = "bench";
  man.config["methods"] = a.methods;
  man.config["engine"] = a.engine;
  man.config["guard"] = std::to_string(a.guard);
  man.config["repeats"] = std::to_string(a.repeats);
  man.metrics["ratio_vs_eject"] = format_double(result.ratio_vs_eject);
  man.metrics["n_trees"] = std::to_string(result.stats.n_trees);
  man.metrics["n_features"] = std::to_string(result.stats.n_features);
  man.metrics["max_depth"] = std::to_string(result.stats.max_depth);
  man.metrics["mean_depth"] = format_double(result.stats.mean_depth);
  man.metrics["total_nodes"] = std::to_string(result.stats.total_nodes);
  man.metrics["total_leaves"] = std::to_string(result.stats.total_leaves);
  man.metrics["mean_leaves"] = format_double(result.stats.mean_leaves);
  man.metrics["mean_unique_path_features"] =
      format_double(result.stats.mean_unique_path_features);
  man.inputs = {a.model, a.data};
  man.outputs = {csv_path};
  man.timings.push_back(bench_time);
  write_manifest(man, a.out);
}

// ---------------------------------------------------------------------------
// report sv-star

struct ReportArgs {
  std::vector<std::string> explanations;
  std::string predictions;
  std::string null_flags;
  std::string synth_manifest;
  std::string out;
};

std::int64_t parse_int_cell(const std::string& cell, const char* what, std::size_t row) {
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(cell.c_str(), &end, 10);
  if (errno != 0 || end == cell.c_str() || *end != '\0') {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "row %zu: '%s' is not a valid %s", row, cell.c_str(), what);
    throw ValidationError(buf);
  }
  return v;
}

// Optional sidecar: instance_id,predicted_class with classes in {-1,+1}.
std::map<std::int64_t, int> read_predictions(const std::string& path) {
  std::string text = read_text_file(path);
  std::vector<std::string> lines;
  std::string line;
  for (char c : text) {
    if (c == '\n') {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
      line.clear();
    } else {
      line.push_back(c);
    }
  }
  if (!line.empty()) lines.push_back(line);
  if (lines.empty()) throw ValidationError("'" + path + "': empty predictions file");
  if (lines[0] != "instance_id,predicted_class") {
    throw ValidationError("'" + path + "': expected header instance_id,predicted_class");
  }
  std::map<std::int64_t, int> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    std::vector<std::string> cells = split_list(lines[r]);
    if (cells.size() != 2) {
      throw ValidationError("'" + path + "': row " + std::to_string(r) + ": expected 2 cells");
    }
    std::int64_t id = parse_int_cell(cells[0], "instance id", r);
    std::int64_t cls = parse_int_cell(cells[1], "predicted class", r);
    if (cls != 1 && cls != -1) {
      throw ValidationError("'" + path + "': row " + std::to_string(r) +
                            ": predicted class must be -1 or +1");
    }
    out[id] = static_cast<int>(cls);
  }
  return out;
}

// Per-feature informative flags recovered from a synth run's manifest: the
// informative block comes first and a feature counts as informative only when
// its expression difference is strictly positive.
std::vector<bool> informative_from_manifest(const std::string& path, std::size_t n_features) {
  std::string file = path;
  if (fs::is_directory(path)) file = join_path(path, "manifest.json");
  RunManifest man = manifest_from_json(read_text_file(file));
  auto it = man.config.find("informative_diffs");
  if (it == man.config.end()) {
    throw ValidationError("'" + file + "': manifest lacks an informative_diffs entry");
  }
  std::vector<double> diffs;
  for (const std::string& cell : split_list(it->second)) {
    try {
      diffs.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ValidationError("'" + file + "': bad informative_diffs entry '" + cell + "'");
    }
  }
  if (diffs.size() > n_features) {
    throw ValidationError("'" + file + "': manifest describes more informative features than " +
                          "the attribution table has columns");
  }
  std::vector<bool> informative(n_features, false);
  for (std::size_t i = 0; i < diffs.size(); ++i) informative[i] = diffs[i] > 0.0;
  return informative;
}

void run_report(const ReportArgs& a) {
  PhaseClock load_clock;
  std::vector<AttributionTable> tables;
  for (const std::string& path : a.explanations) tables.push_back(read_attributions(path));
  for (std::size_t i = 1; i < tables.size(); ++i) {
    if (tables[i].feature_names != tables[0].feature_names) {
      throw ValidationError("'" + a.explanations[i] +
                            "': feature columns differ from the first explanations file");
    }
  }
  const std::vector<std::string>& feature_names = tables[0].feature_names;

  // Regroup rows per method; files written by `explain` are single-method
  // already, but mixed tables are split rather than rejected here.
  std::map<std::string, AttributionTable> by_method;
  for (const AttributionTable& t : tables) {
    for (const AttributionTable::Row& row : t.rows) {
      if (!method_from_name(row.method)) {
        throw ValidationError("unknown method '" + row.method + "' in attribution table");
      }
      AttributionTable& slot = by_method[row.method];
      if (slot.rows.empty()) {
        slot.feature_names = feature_names;
        slot.has_base = t.has_base;
      }
      slot.rows.push_back(row);
    }
  }

  std::optional<LocalNullReport> nulls;
  if (!a.null_flags.empty()) nulls = read_null_flags(a.null_flags);
  std::map<std::int64_t, int> predictions;
  if (!a.predictions.empty()) predictions = read_predictions(a.predictions);
  std::vector<bool> informative;
  if (!a.synth_manifest.empty()) {
    informative = informative_from_manifest(a.synth_manifest, feature_names.size());
  }
  PhaseTiming load_time = load_clock.stop("load");

  PhaseClock report_clock;
  ensure_out_dir(a.out);
  RunManifest man;
  man.subcommand = "report";
  man.inputs = a.explanations;
  if (!a.predictions.empty()) man.inputs.push_back(a.predictions);
  if (!a.null_flags.empty()) man.inputs.push_back(a.null_flags);
  if (!a.synth_manifest.empty()) man.inputs.push_back(a.synth_manifest);

  for (auto& [method, table] : by_method) {
    ReportInput input;
    if (nulls) {
      // Null-flag rows are positional by instance id, the order `explain`
      // writes them in; every table row must resolve to one.
      LocalNullReport aligned;
      aligned.n_features = nulls->n_features;
      for (const AttributionTable::Row& row : table.rows) {
        if (row.instance < 0 ||
            row.instance >= static_cast<std::int64_t>(nulls->locally_null.size())) {
          throw ValidationError("null-flag file has no row for instance " +
                                std::to_string(row.instance));
        }
        aligned.locally_null.push_back(nulls->locally_null[row.instance]);
      }
      input.null_flags = std::move(aligned);
    }
    if (!predictions.empty()) {
      for (const AttributionTable::Row& row : table.rows) {
        auto it = predictions.find(row.instance);
        if (it == predictions.end()) {
          throw ValidationError("predictions file has no row for instance " +
                                std::to_string(row.instance));
        }
        input.predicted_class.push_back(it->second);
      }
    }
    input.informative = informative;
    input.table = table;
    Report report = build_report(input);

    if (method == "treeshap" && by_method.size() > 1) {
      std::vector<AttributionTable> others;
      for (const auto& [other_name, other_table] : by_method) {
        if (other_name != "treeshap") others.push_back(other_table);
      }
      report.residuals = residuals_vs_treeshap(table, others);
    }

    const std::string csv_path = join_path(a.out, "report_" + method + ".csv");
    write_report_csv(report, csv_path);
    man.outputs.push_back(csv_path);
    std::fputs(report_text(report).c_str(), stdout);
    std::printf("wrote %s\n", csv_path.c_str());
  }
  man.timings.push_back(load_time);
  man.timings.push_back(report_clock.stop("report"));
  write_manifest(man, a.out);
}

}  // namespace

// ---------------------------------------------------------------------------
// manifest serialization

std::string manifest_to_json(const RunManifest& manifest) {
  json doc;
  doc["artifact_version"] = kArtifactVersion;
  doc["subcommand"] = manifest.subcommand;
  doc["config"] = json::object();
  for (const auto& [key, value] : manifest.config) doc["config"][key] = value;
  if (!manifest.metrics.empty()) {
    doc["metrics"] = json::object();
    for (const auto& [key, value] : manifest.metrics) doc["metrics"][key] = value;
  }
  doc["seeds"] = manifest.seeds;
  doc["inputs"] = manifest.inputs;
  doc["outputs"] = manifest.outputs;
  json timings = json::array();
  for (const PhaseTiming& t : manifest.timings) {
    timings.push_back({{"phase", t.phase},
                       {"wall_seconds", t.wall_seconds},
                       {"cpu_seconds", t.cpu_seconds}});
  }
  doc["timings"] = timings;
  return doc.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("manifest: top level is not an object");
  try {
    const std::string version = doc.value("artifact_version", std::string());
    if (version != kArtifactVersion) {
      throw ValidationError("manifest: unsupported artifact_version '" + version + "'");
    }
    RunManifest m;
    m.subcommand = doc.value("subcommand", std::string());
    if (doc.contains("config")) {
      for (const auto& [key, value] : doc.at("config").items()) {
        m.config[key] = value.get<std::string>();
      }
    }
    if (doc.contains("metrics")) {
      for (const auto& [key, value] : doc.at("metrics").items()) {
        m.metrics[key] = value.get<std::string>();
      }
    }
    if (doc.contains("seeds")) {
      for (const auto& v : doc.at("seeds")) m.seeds.push_back(v.get<std::uint64_t>());
    }
    if (doc.contains("inputs")) {
      for (const auto& v : doc.at("inputs")) m.inputs.push_back(v.get<std::string>());
    }
    if (doc.contains("outputs")) {
      for (const auto& v : doc.at("outputs")) m.outputs.push_back(v.get<std::string>());
    }
    if (doc.contains("timings")) {
      for (const auto& entry : doc.at("timings")) {
        PhaseTiming t;
        t.phase = entry.value("phase", std::string());
        t.wall_seconds = entry.value("wall_seconds", 0.0);
        t.cpu_seconds = entry.value("cpu_seconds", 0.0);
        m.timings.push_back(t);
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
}

void write_manifest(const RunManifest& manifest, const std::string& directory) {
  write_text_file(join_path(directory, "manifest.json"), manifest_to_json(manifest));
}

RunManifest read_manifest(const std::string& directory) {
  return manifest_from_json(read_text_file(join_path(directory, "manifest.json")));
}

// ---------------------------------------------------------------------------
// PhaseClock

namespace {
std::int64_t wall_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
double cpu_now_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }
}  // namespace

PhaseClock::PhaseClock() : wall_start_ns_(wall_now_ns()), cpu_start_(cpu_now_seconds()) {}

PhaseTiming PhaseClock::stop(const std::string& phase) const {
  PhaseTiming t;
  t.phase = phase;
  t.wall_seconds = static_cast<double>(wall_now_ns() - wall_start_ns_) * 1e-9;
  t.cpu_seconds = cpu_now_seconds() - cpu_start_;
  return t;
}

// ---------------------------------------------------------------------------
// argv entry point

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Exact Shapley-value explanations for decision-tree ensembles"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a two-group Gaussian dataset");
  synth->add_option("--preset", synth_args.preset, "Published design: fig3, e1-uncorr, e1-corr")
      ->check(CLI::IsMember({"fig3", "e1-uncorr", "e1-corr"}));
  synth->add_option("--expr-diff", synth_args.expr_diff,
                    "Expression difference between groups (default 1.0)");
  synth->add_option("--scale", synth_args.scale, "Size scale for the fig3 preset (default 0.1)");
  synth->add_option("--n-informative", synth_args.n_informative,
                    "Explicit design: informative feature count");
  synth->add_option("--n-uninformative", synth_args.n_uninformative,
                    "Explicit design: uninformative feature count");
  synth->add_option("--cov", synth_args.cov,
                    "Explicit design: uniform off-diagonal covariance of informative features");
  synth->add_option("--per-group-train", synth_args.per_group_train,
                    "Explicit design: training instances per group");
  synth->add_option("--per-group-valid", synth_args.per_group_valid,
                    "Explicit design: validation instances per group");
  synth->add_option("--seed", synth_args.seed, "RNG seed (default 1)");
  synth->add_option("--out", synth_args.out, "Output directory")->required();
  synth->callback([&] { run_synth(synth_args); });

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a bagged CART forest");
  train->add_option("--data", train_args.data, "Training CSV with a label column")->required();
  train->add_option("--trees", train_args.trees, "Number of trees (default 100)")
      ->check(CLI::PositiveNumber);
  train->add_option("--bins", train_args.bins, "Equal-density threshold bins (default 10)")
      ->check(CLI::PositiveNumber);
  train->add_option("--min-leaf", train_args.min_leaf,
                    "Minimum instances per daughter node (default 5)")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", train_args.seed, "RNG seed (default 1)");
  train->add_option("--out-model", train_args.out_model, "Output model JSON path")->required();
  train->callback([&] { run_train(train_args); });

  ImportArgs import_args;
  CLI::App* import_cmd = app.add_subcommand("import", "Convert a boosted-tree JSON dump");
  import_cmd->add_option("--dump", import_args.dump, "Boosted dump JSON (with statistics)")
      ->required();
  import_cmd->add_option("--base-score", import_args.base_score,
                         "Source base score in (0,1); stored as a log-odds offset");
  import_cmd->add_option("--feature-names", import_args.feature_names,
                         "Comma-separated feature names overriding f<idx>");
  import_cmd->add_flag("--nudge-thresholds", import_args.nudge_thresholds,
                       "Nudge each threshold down one representable double so the strict-less "
                       "source convention matches this artifact's closed-left routing");
  import_cmd->add_option("--out-model", import_args.out_model, "Output model JSON path")
      ->required();
  import_cmd->callback([&] { run_import(import_args); });

  ExplainArgs explain_args;
  CLI::App* explain = app.add_subcommand("explain", "Exact Shapley attributions per instance");
  explain->add_option("--model", explain_args.model, "Model JSON path")->required();
  explain->add_option("--data", explain_args.data, "Instances CSV")->required();
  explain->add_option("--method", explain_args.method,
                      "Comma-separated subset of eject/treeshap/interventional, or all")
      ->required();
  explain->add_option("--reference", explain_args.reference,
                      "Reference CSV (required by the interventional method)");
  explain->add_option("--engine", explain_args.engine,
                      "auto, reduced, leafwise, or oracle (default auto)")
      ->check(CLI::IsMember({"auto", "reduced", "leafwise", "oracle"}));
  explain->add_option("--guard", explain_args.guard,
                      "Reduced-enumeration player guard (default 22)")
      ->check(CLI::PositiveNumber);
  explain->add_option("--jobs", explain_args.jobs,
                      "Worker threads over instances; 0 = hardware concurrency (default 1)")
      ->check(CLI::NonNegativeNumber);
  explain->add_flag("--drop-base", explain_args.drop_base,
                    "Omit the base_value column from attribution CSVs");
  explain->add_option("--out", explain_args.out, "Output directory")->required();
  explain->callback([&] { run_explain(explain_args); });

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand("verify", "Random-tree oracle and axiom sweep");
  verify->add_option("--seed", verify_args.seed, "RNG seed (default 1)");
  verify->add_option("--cases", verify_args.cases, "Random cases to run (default 200)")
      ->check(CLI::NonNegativeNumber);
  verify->add_option("--max-depth", verify_args.max_depth, "Maximum tree depth (default 4)");
  verify->add_option("--n-features", verify_args.n_features,
                     "Feature universe width, at most 20 (default 8)");
  verify->callback([&] { run_verify(verify_args); });

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "Wall-clock comparison of the methods");
  bench->add_option("--model", bench_args.model, "Model JSON path")->required();
  bench->add_option("--data", bench_args.data,
                    "Instances CSV (doubles as the interventional reference)")
      ->required();
  bench->add_option("--methods", bench_args.methods,
                    "Comma-separated method list or 'all' (default all)");
  bench->add_option("--repeats", bench_args.repeats,
                    "Measured sweeps; the first extra sweep warms up (default 3)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--engine", bench_args.engine, "Engine override (default auto)")
      ->check(CLI::IsMember({"auto", "reduced", "leafwise", "oracle"}));
  bench->add_option("--guard", bench_args.guard,
                    "Reduced-enumeration player guard (default 22)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_args.out, "Optional output directory for bench.csv");
  bench->callback([&] { run_bench(bench_args); });

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand("report", "Summaries over attribution tables");
  report->require_subcommand(1);
  CLI::App* sv_star = report->add_subcommand(
      "sv-star", "Class-signed attribution summaries (phi times predicted class)");
  sv_star->add_option("--explanations", report_args.explanations,
                      "Attribution CSVs produced by explain (comma- or space-separated)")
      ->required()
      ->delimiter(',');
  sv_star->add_option("--predictions", report_args.predictions,
                      "Optional instance_id,predicted_class CSV");
  sv_star->add_option("--null-flags", report_args.null_flags,
                      "Optional null_flags.csv produced by explain");
  sv_star->add_option("--synth-manifest", report_args.synth_manifest,
                      "Optional synth manifest for informative/uninformative grouping");
  sv_star->add_option("--out", report_args.out, "Output directory")->required();
  sv_star->callback([&] { run_report(report_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const VerificationError& e) {
    std::fprintf(stderr, "verification error: %s\n", e.what());
    return kExitVerification;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}

}  // namespace treesv
