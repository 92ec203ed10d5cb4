#include "treesv/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "treesv/errors.hpp"

namespace treesv {

namespace {

// Unique-feature count of every root-leaf path in the tree.
void path_feature_counts(const TreeArrays& tree, NodeIndex j, std::vector<int>& path,
                         std::vector<int>& counts) {
  if (tree.is_leaf(j)) {
    std::vector<int> unique(path);
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    counts.push_back(static_cast<int>(unique.size()));
    return;
  }
  path.push_back(tree.features[j]);
  path_feature_counts(tree, tree.left_child[j], path, counts);
  path_feature_counts(tree, tree.right_child[j], path, counts);
  path.pop_back();
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

ModelStats model_stats(const EnsembleModel& model) {
  ModelStats stats;
  stats.n_trees = static_cast<int>(model.trees.size());
  stats.n_features = model.n_features;
  std::int64_t path_sum = 0;
  std::int64_t path_n = 0;
  double depth_sum = 0.0;
  for (const TreeArrays& tree : model.trees) {
    const int depth = tree_depth(tree);
    stats.max_depth = std::max(stats.max_depth, depth);
    depth_sum += depth;
    stats.total_nodes += tree.node_count();
    stats.total_leaves += leaf_count(tree);
    std::vector<int> path, counts;
    path_feature_counts(tree, 0, path, counts);
    for (int c : counts) path_sum += c;
    path_n += static_cast<std::int64_t>(counts.size());
  }
  if (stats.n_trees > 0) {
    stats.mean_depth = depth_sum / stats.n_trees;
    stats.mean_leaves = static_cast<double>(stats.total_leaves) / stats.n_trees;
  }
  if (path_n > 0) stats.mean_unique_path_features = static_cast<double>(path_sum) / path_n;
  return stats;
}

BenchResult run_bench(const EnsembleModel& model, const std::vector<Instance>& instances,
                      const ReferenceSet& ref, const BenchConfig& config) {
  if (instances.empty()) throw ValidationError("bench needs at least one instance");
  if (config.repeats < 1) throw ValidationError("repeats must be positive");
  std::vector<Method> methods = config.methods;
  if (methods.empty())
    methods = {Method::kEject, Method::kTreeshap, Method::kInterventional};

  BenchResult result;
  result.stats = model_stats(model);

  double eject_wall = 0.0;
  double treeshap_wall = 0.0;
  for (const Method method : methods) {
    const ReferenceSet* ref_ptr = method == Method::kInterventional ? &ref : nullptr;
    std::vector<double> per_instance_ms;
    std::vector<double> sweep_walls;
    const int warmup = config.repeats > 1 ? 1 : 0;
    for (int rep = 0; rep < warmup + config.repeats; ++rep) {
      const double sweep_start = now_seconds();
      for (const Instance& x : instances) {
        const double t0 = now_seconds();
        const Attribution att =
            shapley_ensemble(model, x, method, ref_ptr, config.engine, config.guard);
        (void)att;
        if (rep >= warmup) per_instance_ms.push_back((now_seconds() - t0) * 1e3);
      }
      if (rep >= warmup) sweep_walls.push_back(now_seconds() - sweep_start);
    }

    BenchTiming timing;
    timing.label = method_name(method);
    timing.instances = static_cast<int>(instances.size());
    timing.repeats = static_cast<int>(sweep_walls.size());
    timing.wall_seconds = std::accumulate(sweep_walls.begin(), sweep_walls.end(), 0.0);
    timing.per_instance_ms =
        std::accumulate(per_instance_ms.begin(), per_instance_ms.end(), 0.0) /
        static_cast<double>(per_instance_ms.size());
    std::sort(per_instance_ms.begin(), per_instance_ms.end());
    const std::size_t mid = per_instance_ms.size() / 2;
    timing.median_ms = per_instance_ms.size() % 2
                           ? per_instance_ms[mid]
                           : 0.5 * (per_instance_ms[mid - 1] + per_instance_ms[mid]);
    if (sweep_walls.size() > 1) {
      const double mean = timing.wall_seconds / static_cast<double>(sweep_walls.size());
      double var = 0.0;
      for (double w : sweep_walls) var += (w - mean) * (w - mean);
      var /= static_cast<double>(sweep_walls.size() - 1);
      if (mean > 0.0) timing.cv = std::sqrt(var) / mean;
    }
    result.timings.push_back(timing);

    if (method == Method::kEject) eject_wall = timing.wall_seconds;
    if (method == Method::kTreeshap) treeshap_wall = timing.wall_seconds;
  }
  if (eject_wall > 0.0 && treeshap_wall > 0.0)
    result.ratio_vs_eject = treeshap_wall / eject_wall;
  return result;
}

std::string bench_report_text(const BenchResult& result) {
  char buf[320];
  std::string text;
  const ModelStats& s = result.stats;
  std::snprintf(buf, sizeof(buf),
                "model: %d trees, %d features, max depth %d (mean %.2f), %lld nodes, "
                "%lld leaves (mean %.1f/tree), mean unique path features %.2f\n",
                s.n_trees, s.n_features, s.max_depth, s.mean_depth,
                static_cast<long long>(s.total_nodes), static_cast<long long>(s.total_leaves),
                s.mean_leaves, s.mean_unique_path_features);
  text += buf;

  double eject_wall = 0.0;
  for (const BenchTiming& t : result.timings)
    if (t.label == "eject") eject_wall = t.wall_seconds;
  for (const BenchTiming& t : result.timings) {
    std::snprintf(buf, sizeof(buf),
                  "%-15s %d instances x %d sweeps: %.3f s wall, mean %.3f ms/instance, "
                  "median %.3f ms, cv %.3f",
                  t.label.c_str(), t.instances, t.repeats, t.wall_seconds, t.per_instance_ms,
                  t.median_ms, t.cv);
    text += buf;
    if (eject_wall > 0.0 && t.label != "eject") {
      std::snprintf(buf, sizeof(buf), ", %.2fx eject", t.wall_seconds / eject_wall);
      text += buf;
    }
    text += '\n';
  }
  return text;
}

}  // namespace treesv
