#include "treesv/verify.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "treesv/errors.hpp"
#include "treesv/model_io.hpp"
#include "treesv/rng.hpp"

namespace treesv {

namespace {

double ensemble_utility(const EnsembleModel& model, Method method, const Instance& x,
                        const Coalition& s, const ReferenceSet* ref) {
  double sum = 0.0;
  for (const TreeArrays& tree : model.trees) {
    switch (method) {
      case Method::kEject: sum += utility_eject(tree, x, s); break;
      case Method::kTreeshap: sum += utility_treeshap(tree, x, s); break;
      case Method::kInterventional: sum += utility_interventional(tree, x, s, *ref); break;
    }
  }
  if (model.aggregation == Aggregation::kForestAverage)
    return sum / static_cast<double>(model.trees.size());
  return model.base_offset + sum;
}

}  // namespace

VerifyResult verify_against_oracle(const EnsembleModel& model,
                                   const std::vector<Instance>& instances,
                                   const ReferenceSet& ref, const VerifyConfig& config) {
  if (model.n_features > config.guard) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "oracle verification needs 2^%d coalition evaluations (guard is %d)",
                  model.n_features, config.guard);
    throw GuardExceededError(buf);
  }
  const ReferenceSet* ref_ptr = config.method == Method::kInterventional ? &ref : nullptr;

  VerifyResult result;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& x = instances[i];
    const Attribution got = shapley_ensemble(model, x, config.method, ref_ptr, config.engine);
    const Attribution want = brute_force_shapley(
        [&](const Coalition& s) { return ensemble_utility(model, config.method, x, s, ref_ptr); },
        model.n_features);
    auto check = [&](int feature, double g, double w) {
      const double diff = std::fabs(g - w);
      if (diff > result.max_abs_diff) result.max_abs_diff = diff;
      if (diff > config.tolerance)
        result.mismatches.push_back({static_cast<int>(i), feature, g, w});
    };
    for (int f = 0; f < model.n_features; ++f) check(f, got.phi[f], want.phi[f]);
    check(-1, got.base_value, want.base_value);
    check(-2, got.full_value, want.full_value);
    ++result.instances_checked;
  }
  return result;
}

std::string verify_summary(const VerifyResult& result, double tolerance) {
  char buf[256];
  if (result.ok()) {
    std::snprintf(buf, sizeof(buf),
                  "verified %d instances against the oracle: max |diff| = %.3g (tolerance %.1g)",
                  result.instances_checked, result.max_abs_diff, tolerance);
    return buf;
  }
  const VerifyMismatch& m = result.mismatches.front();
  std::snprintf(buf, sizeof(buf),
                "%zu mismatches over %d instances; first at instance %d feature %d: got %.17g, "
                "oracle %.17g",
                result.mismatches.size(), result.instances_checked, m.instance, m.feature,
                m.got, m.expected);
  return buf;
}

namespace {

// Random tree for the property suite: random topology up to max_depth,
// thresholds/values in (0,1)/(-1,1), covers split by random fractions.
TreeArrays random_tree(Rng& rng, int n_features, int max_depth) {
  TreeArrays tree;
  // Recursive builder; at least one split at the root when depth permits, so
  // degenerate single-leaf trees stay an explicit, separate test case.
  struct Builder {
    TreeArrays& tree;
    Rng& rng;
    int n_features;
    int max_depth;

    NodeIndex build(int depth, double cover) {
      const NodeIndex j = static_cast<NodeIndex>(tree.values.size());
      tree.values.push_back(rng.uniform(-1.0, 1.0));
      tree.left_child.push_back(kNoChild);
      tree.right_child.push_back(kNoChild);
      tree.thresholds.push_back(std::numeric_limits<double>::quiet_NaN());
      tree.features.push_back(kNoFeature);
      tree.cover.push_back(cover);
      const bool split = depth < max_depth && (depth == 0 || rng.unit() < 0.7);
      if (!split) return j;
      tree.features[j] = static_cast<int>(rng.below(n_features));
      tree.thresholds[j] = rng.uniform(0.05, 0.95);
      const double frac = rng.uniform(0.2, 0.8);
      const NodeIndex l = build(depth + 1, cover * frac);
      tree.left_child[j] = l;
      const NodeIndex r = build(depth + 1, cover * (1.0 - frac));
      tree.right_child[j] = r;
      return j;
    }
  };
  Builder{tree, rng, n_features, max_depth}.build(0, 1.0);
  return tree;
}

Instance random_instance(Rng& rng, int n_features) {
  Instance x(n_features);
  for (double& v : x) v = rng.unit();
  return x;
}

std::string instance_csv(const Instance& x) {
  std::string line;
  for (std::size_t f = 0; f < x.size(); ++f) {
    if (f) line += ',';
    line += format_double(x[f]);
  }
  return line;
}

struct CaseContext {
  int case_index;
  const TreeArrays* tree;
  const Instance* x;
  PropertySuiteResult* result;

  bool fail(const char* property, const char* detail, double diff) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "case %d: %s: %s (|diff| = %.3g)", case_index, property,
                  detail, diff);
    result->failure = buf;
    if (tree != nullptr) {
      EnsembleModel repro;
      repro.trees.push_back(*tree);
      int width = 0;
      for (int f : tree->features) width = std::max(width, f + 1);
      repro.n_features = std::max(width, static_cast<int>(x->size()));
      result->repro_model = model_to_json(repro);
    }
    if (x != nullptr) result->repro_instance = instance_csv(*x);
    return false;
  }
};

bool check_attribution_axioms(CaseContext& ctx, Method method, const Attribution& fast,
                              const Attribution& oracle, const TreeArrays& tree,
                              const Instance& x) {
  const int n_features = static_cast<int>(fast.phi.size());
  // Oracle equivalence, 1e-10.
  for (int f = 0; f < n_features; ++f) {
    const double diff = std::fabs(fast.phi[f] - oracle.phi[f]);
    if (diff > 1e-10) return ctx.fail(method_name(method), "engine disagrees with oracle", diff);
  }
  if (std::fabs(fast.base_value - oracle.base_value) > 1e-10 ||
      std::fabs(fast.full_value - oracle.full_value) > 1e-10)
    return ctx.fail(method_name(method), "base/full disagree with oracle",
                    std::fabs(fast.base_value - oracle.base_value));
  // Efficiency, 1e-9.
  double sum = 0.0;
  for (double p : fast.phi) sum += p;
  const double eff = std::fabs(sum - (fast.full_value - fast.base_value));
  if (eff > 1e-9) return ctx.fail(method_name(method), "efficiency violated", eff);
  // Null players: features absent from the tree carry exactly zero.
  const std::vector<int> used = tree_features(tree);
  std::vector<bool> in_tree(n_features, false);
  for (int f : used) in_tree[f] = true;
  for (int f = 0; f < n_features; ++f)
    if (!in_tree[f] && fast.phi[f] != 0.0)
      return ctx.fail(method_name(method), "null player got nonzero phi", std::fabs(fast.phi[f]));
  // Local dummies (eject): features off the decision path carry exactly zero.
  if (method == Method::kEject) {
    std::vector<bool> on_path(n_features, false);
    for (int f : decision_path(tree, x).unique_features) on_path[f] = true;
    for (int f = 0; f < n_features; ++f)
      if (!on_path[f] && fast.phi[f] != 0.0)
        return ctx.fail("eject", "local dummy got nonzero phi", std::fabs(fast.phi[f]));
  }
  return true;
}

// Tree whose games are invariant under swapping features i and j: root splits
// on i, both children split on j, uniform grandchild covers, equal internal
// values, and mirrored leaf values (a, b, b, c).
TreeArrays symmetric_tree(Rng& rng, int i, int j) {
  const double v_int = rng.uniform(-1.0, 1.0);
  const double a = rng.uniform(-1.0, 1.0);
  const double b = rng.uniform(-1.0, 1.0);
  const double c = rng.uniform(-1.0, 1.0);
  TreeArrays tree;
  tree.values = {v_int, v_int, v_int, a, b, b, c};
  tree.left_child = {1, 3, 5, kNoChild, kNoChild, kNoChild, kNoChild};
  tree.right_child = {2, 4, 6, kNoChild, kNoChild, kNoChild, kNoChild};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  tree.thresholds = {0.5, 0.5, 0.5, nan, nan, nan, nan};
  tree.features = {i, j, j, kNoFeature, kNoFeature, kNoFeature, kNoFeature};
  tree.cover = {1.0, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25};
  return tree;
}

bool check_symmetry(CaseContext& ctx, Rng& rng, int n_features) {
  const int i = static_cast<int>(rng.below(n_features));
  int j = static_cast<int>(rng.below(n_features - 1));
  if (j >= i) ++j;
  const TreeArrays tree = symmetric_tree(rng, i, j);
  Instance x = random_instance(rng, n_features);
  x[j] = x[i];  // identical branch conditions for the swapped pair
  ReferenceSet ref;
  for (int r = 0; r < 3; ++r) {
    Instance y = random_instance(rng, n_features);
    y[j] = y[i];
    ref.push_back(std::move(y));
  }
  ctx.tree = &tree;
  ctx.x = &x;
  for (const Method method : {Method::kEject, Method::kTreeshap, Method::kInterventional}) {
    const Attribution att =
        shapley_single_tree(method, Engine::kAuto, tree, x, &ref, n_features);
    const double diff = std::fabs(att.phi[i] - att.phi[j]);
    if (diff > 1e-12) return ctx.fail(method_name(method), "symmetry violated", diff);
  }
  return true;
}

bool check_linearity(CaseContext& ctx, Rng& rng, const TreeArrays& tree_a, const Instance& x,
                     int n_features, int max_depth) {
  const TreeArrays tree_b = random_tree(rng, n_features, max_depth);
  const double alpha = rng.uniform(-2.0, 2.0);
  const double beta = rng.uniform(-2.0, 2.0);
  const Attribution phi_a = brute_force_shapley(
      [&](const Coalition& s) { return utility_treeshap(tree_a, x, s); }, n_features);
  const Attribution phi_b = brute_force_shapley(
      [&](const Coalition& s) { return utility_eject(tree_b, x, s); }, n_features);
  const Attribution phi_mix = brute_force_shapley(
      [&](const Coalition& s) {
        return alpha * utility_treeshap(tree_a, x, s) + beta * utility_eject(tree_b, x, s);
      },
      n_features);
  for (int f = 0; f < n_features; ++f) {
    const double expected = alpha * phi_a.phi[f] + beta * phi_b.phi[f];
    const double diff = std::fabs(phi_mix.phi[f] - expected);
    if (diff > 1e-12) return ctx.fail("linearity", "composed utility disagrees", diff);
  }
  return true;
}

}  // namespace

PropertySuiteResult run_property_suite(const PropertySuiteConfig& config) {
  PropertySuiteResult result;
  if (config.n_features < 2 || config.n_features > kBruteForceGuard)
    throw ValidationError("property suite needs 2..20 features");
  if (config.max_depth < 1) throw ValidationError("max depth must be at least 1");
  if (config.cases < 0) throw ValidationError("case count must be non-negative");

  for (int c = 0; c < config.cases; ++c) {
    Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(c));
    const TreeArrays tree = random_tree(rng, config.n_features, config.max_depth);
    const Instance x = random_instance(rng, config.n_features);
    CaseContext ctx{c, &tree, &x, &result};

    for (const Method method : {Method::kEject, Method::kTreeshap, Method::kInterventional}) {
      for (const int ref_size : {1, 5}) {
        ReferenceSet ref;
        for (int r = 0; r < ref_size; ++r) ref.push_back(random_instance(rng, config.n_features));
        const Attribution oracle = brute_force_shapley(
            [&](const Coalition& s) {
              switch (method) {
                case Method::kEject: return utility_eject(tree, x, s);
                case Method::kTreeshap: return utility_treeshap(tree, x, s);
                default: return utility_interventional(tree, x, s, ref);
              }
            },
            config.n_features);
        const Attribution reduced =
            shapley_reduced(method, tree, x, &ref, config.n_features);
        if (!check_attribution_axioms(ctx, method, reduced, oracle, tree, x)) return result;
        if (method == Method::kTreeshap) {
          const Attribution leafwise = shapley_treeshap_leafwise(tree, x, config.n_features);
          if (!check_attribution_axioms(ctx, method, leafwise, oracle, tree, x)) return result;
        } else if (method == Method::kInterventional) {
          const Attribution fast =
              shapley_interventional_fast(tree, x, ref, config.n_features);
          if (!check_attribution_axioms(ctx, method, fast, oracle, tree, x)) return result;
        }
        if (method != Method::kInterventional) break;  // eject/treeshap ignore the reference
      }
    }

    if (!check_symmetry(ctx, rng, config.n_features)) return result;
    ctx.tree = &tree;
    ctx.x = &x;
    if (!check_linearity(ctx, rng, tree, x, config.n_features, config.max_depth)) return result;
    ++result.cases_run;
  }
  return result;
}

}  // namespace treesv
