#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treesv/shapley.hpp"
#include "treesv/tree.hpp"
#include "treesv/utilities.hpp"

namespace treesv {

struct ModelStats {
  int n_trees = 0;
  int n_features = 0;  // universe width
  int max_depth = 0;
  double mean_depth = 0.0;       // mean over trees of per-tree max depth
  std::int64_t total_nodes = 0;
  std::int64_t total_leaves = 0;
  double mean_leaves = 0.0;
  double mean_unique_path_features = 0.0;  // mean over leaves of |unique features on root-leaf path|
};

ModelStats model_stats(const EnsembleModel& model);

struct BenchTiming {
  std::string label;  // method name
  int instances = 0;
  int repeats = 0;    // measured sweeps (first sweep is warmup when repeats > 1)
  double wall_seconds = 0.0;     // total over measured sweeps
  double per_instance_ms = 0.0;  // mean over measured per-instance times
  double median_ms = 0.0;
  double cv = 0.0;  // std/mean of sweep wall times; 0 with a single sweep
};

struct BenchResult {
  ModelStats stats;
  std::vector<BenchTiming> timings;
  // wall(method under test) / wall(eject) on the same instances; the headline
  // comparison. 0 when eject was not part of the run.
  double ratio_vs_eject = 0.0;
};

struct BenchConfig {
  std::vector<Method> methods;  // empty = all three
  Engine engine = Engine::kAuto;
  int guard = kDefaultEnumerationGuard;
  // Sweeps over the instance set; with repeats > 1 the first sweep is a
  // discarded warmup (the timing protocol is this artifact's convention).
  int repeats = 1;
};

BenchResult run_bench(const EnsembleModel& model,
                      const std::vector<Instance>& instances,
                      const ReferenceSet& ref, const BenchConfig& config);

std::string bench_report_text(const BenchResult& result);

}  // namespace treesv
