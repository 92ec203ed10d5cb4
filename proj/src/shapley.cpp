#include "treesv/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "treesv/errors.hpp"

namespace treesv {

const char* method_name(Method m) {
  switch (m) {
    case Method::kEject: return "eject";
    case Method::kTreeshap: return "treeshap";
    case Method::kInterventional: return "interventional";
  }
  return "?";
}

std::optional<Method> method_from_name(std::string_view name) {
  if (name == "eject") return Method::kEject;
  if (name == "treeshap") return Method::kTreeshap;
  if (name == "interventional") return Method::kInterventional;
  return std::nullopt;
}

const char* engine_name(Engine e) {
  switch (e) {
    case Engine::kAuto: return "auto";
    case Engine::kReduced: return "reduced";
    case Engine::kLeafwise: return "leafwise";
    case Engine::kOracle: return "oracle";
  }
  return "?";
}

std::optional<Engine> engine_from_name(std::string_view name) {
  if (name == "auto") return Engine::kAuto;
  if (name == "reduced") return Engine::kReduced;
  if (name == "leafwise") return Engine::kLeafwise;
  if (name == "oracle") return Engine::kOracle;
  return std::nullopt;
}

ShapleyWeights::ShapleyWeights(int n_players) {
  weights_.resize(std::max(n_players, 0));
  for (int k = 0; k < n_players; ++k) {
    // C(M-1, k) stays exact in 64-bit for every M that can be enumerated.
    std::int64_t binom = 1;
    for (int i = 1; i <= k; ++i) binom = binom * (n_players - 1 - k + i) / i;
    weights_[k] = 1.0 / (static_cast<double>(n_players) * static_cast<double>(binom));
  }
}

namespace {

// Shared enumeration core: given memoized utilities over all 2^m subsets of
// an m-player game, add each player's Shapley value into phi[player_of[p]].
void accumulate_phi(const std::vector<double>& u, int m, const int* player_of,
                    std::vector<double>& phi) {
  const ShapleyWeights weights(m);
  for (int p = 0; p < m; ++p) {
    const std::size_t bit = std::size_t{1} << p;
    double acc = 0.0;
    for (std::size_t mask = 0; mask < u.size(); ++mask) {
      if (mask & bit) continue;
      acc += weights.weight(std::popcount(mask)) * (u[mask | bit] - u[mask]);
    }
    phi[player_of[p]] += acc;
  }
}

[[noreturn]] void throw_guard(const char* what, int players, int guard) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s would enumerate 2^%d coalitions (guard is %d players)",
                what, players, guard);
  throw GuardExceededError(buf);
}

double eval_utility(Method method, const TreeArrays& tree, const Instance& x,
                    const Coalition& s, const ReferenceSet* ref) {
  switch (method) {
    case Method::kEject: return utility_eject(tree, x, s);
    case Method::kTreeshap: return utility_treeshap(tree, x, s);
    case Method::kInterventional:
      if (ref == nullptr) throw ValidationError("interventional method needs a reference set");
      return utility_interventional(tree, x, s, *ref);
  }
  throw ValidationError("unknown method");
}

}  // namespace

Attribution brute_force_shapley(const std::function<double(const Coalition&)>& utility,
                                int n_players) {
  if (n_players < 0) throw ValidationError("negative player count");
  if (n_players > kBruteForceGuard) throw_guard("brute force", n_players, kBruteForceGuard);
  const std::size_t n_masks = std::size_t{1} << n_players;
  std::vector<double> u(n_masks);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    Coalition s(n_players);
    for (int p = 0; p < n_players; ++p)
      if (mask & (std::size_t{1} << p)) s.add(p);
    u[mask] = utility(s);
  }
  Attribution out;
  out.phi.assign(n_players, 0.0);
  out.base_value = u[0];
  out.full_value = u[n_masks - 1];
  std::vector<int> identity(n_players);
  for (int p = 0; p < n_players; ++p) identity[p] = p;
  accumulate_phi(u, n_players, identity.data(), out.phi);
  return out;
}

std::vector<int> relevant_players(Method method, const TreeArrays& tree, const Instance& x) {
  if (method == Method::kEject) return decision_path(tree, x).unique_features;
  return tree_features(tree);
}

Attribution shapley_reduced(Method method, const TreeArrays& tree, const Instance& x,
                            const ReferenceSet* ref, int n_features, int guard) {
  const std::vector<int> players = relevant_players(method, tree, x);
  const int m = static_cast<int>(players.size());
  if (m > guard) {
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "reduced enumeration over %d players exceeds the guard (%d); use the "
                  "leafwise engine or raise the guard",
                  m, guard);
    throw GuardExceededError(buf);
  }

  // Features outside the reduced set are null players for this tree: absent
  // from every split (or, for eject, from x's path), so membership cannot
  // change any utility. Dropping null players does not move the remaining
  // players' Shapley values, hence the reduced game is enumerated and the
  // rest is zero-filled.
  const std::size_t n_masks = std::size_t{1} << m;
  std::vector<double> u(n_masks);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    Coalition s(n_features);
    for (int p = 0; p < m; ++p)
      if (mask & (std::size_t{1} << p)) s.add(players[p]);
    u[mask] = eval_utility(method, tree, x, s, ref);
  }

  Attribution out;
  out.method = method;
  out.phi.assign(n_features, 0.0);
  out.base_value = u[0];
  out.full_value = u[n_masks - 1];
  accumulate_phi(u, m, players.data(), out.phi);
  return out;
}

namespace {

// Everything the per-leaf games need about one root-leaf path, with x's side
// precomputed: for every unique feature on the path, the product of
// x-follows-edge indicators (in_weight, 0 or 1) and of cover ratios
// (out_weight). The raw edge list stays around so a reference instance's
// indicators can be derived against the same path.
struct LeafFactors {
  NodeIndex leaf = 0;
  double value = 0.0;
  std::vector<int> features;       // unique path features, ascending
  std::vector<double> in_weight;   // per unique feature
  std::vector<double> out_weight;  // per unique feature
  std::vector<int> edge_pos;       // per raw edge: index into features
  std::vector<bool> edge_left;
};

void collect_leaf_factors(const TreeArrays& tree, NodeIndex j, std::vector<int>& feats,
                          std::vector<bool>& lefts, std::vector<LeafFactors>& out) {
  if (tree.is_leaf(j)) {
    LeafFactors lf;
    lf.leaf = j;
    lf.value = tree.values[j];
    lf.features = feats;
    std::sort(lf.features.begin(), lf.features.end());
    lf.features.erase(std::unique(lf.features.begin(), lf.features.end()), lf.features.end());
    lf.in_weight.assign(lf.features.size(), 1.0);
    lf.out_weight.assign(lf.features.size(), 1.0);
    lf.edge_left.assign(lefts.begin(), lefts.end());
    lf.edge_pos.resize(feats.size());
    for (std::size_t e = 0; e < feats.size(); ++e) {
      const auto it = std::lower_bound(lf.features.begin(), lf.features.end(), feats[e]);
      lf.edge_pos[e] = static_cast<int>(it - lf.features.begin());
    }
    out.push_back(std::move(lf));
    return;
  }
  const int f = tree.features[j];
  for (const bool left_edge : {true, false}) {
    feats.push_back(f);
    lefts.push_back(left_edge);
    collect_leaf_factors(tree, left_edge ? tree.left_child[j] : tree.right_child[j], feats,
                         lefts, out);
    feats.pop_back();
    lefts.pop_back();
  }
}

// All leaves' factors in ascending leaf order, with x's in/out weights and
// the per-edge cover ratios folded per unique feature.
std::vector<LeafFactors> leaf_factors(const TreeArrays& tree, const Instance& x) {
  std::vector<LeafFactors> leaves;
  std::vector<int> feats;
  std::vector<bool> lefts;
  collect_leaf_factors(tree, 0, feats, lefts, leaves);
  std::sort(leaves.begin(), leaves.end(),
            [](const LeafFactors& a, const LeafFactors& b) { return a.leaf < b.leaf; });
  for (LeafFactors& lf : leaves) {
    // Cover ratios are recovered by re-walking the path from the root.
    NodeIndex j = 0;
    for (std::size_t e = 0; e < lf.edge_pos.size(); ++e) {
      const NodeIndex child = lf.edge_left[e] ? tree.left_child[j] : tree.right_child[j];
      lf.out_weight[lf.edge_pos[e]] *= tree.cover[child] / tree.cover[j];
      const bool x_follows = (x[tree.features[j]] <= tree.thresholds[j]) == bool(lf.edge_left[e]);
      if (!x_follows) lf.in_weight[lf.edge_pos[e]] = 0.0;
      j = child;
    }
  }
  return leaves;
}

}  // namespace

Attribution shapley_treeshap_leafwise(const TreeArrays& tree, const Instance& x,
                                      int n_features) {
  const std::vector<LeafFactors> leaves = leaf_factors(tree, x);

  Attribution out;
  out.method = Method::kTreeshap;
  out.phi.assign(n_features, 0.0);
  std::vector<double> w;
  for (const LeafFactors& lf : leaves) {
    const int m = static_cast<int>(lf.features.size());
    const std::size_t n_masks = std::size_t{1} << m;
    // Leaf weight under coalition s factorizes over path features:
    // in_weight for members, out_weight for the rest.
    w.assign(n_masks, lf.value);
    for (std::size_t mask = 0; mask < n_masks; ++mask)
      for (int p = 0; p < m; ++p)
        w[mask] *= (mask & (std::size_t{1} << p)) ? lf.in_weight[p] : lf.out_weight[p];
    out.base_value += w[0];
    out.full_value += w[n_masks - 1];
    // Features off this leaf's path are null players of the leaf's sub-game,
    // so the m-player enumeration yields the full game's values; summing over
    // leaves is linearity of the Shapley value.
    accumulate_phi(w, m, lf.features.data(), out.phi);
  }
  return out;
}

Attribution shapley_interventional_fast(const TreeArrays& tree, const Instance& x,
                                        const ReferenceSet& ref, int n_features) {
  if (ref.empty()) throw ValidationError("interventional utility needs a non-empty reference set");
  const std::vector<LeafFactors> leaves = leaf_factors(tree, x);

  Attribution out;
  out.method = Method::kInterventional;
  out.phi.assign(n_features, 0.0);
  out.full_value = predict(tree, x);

  std::vector<double> y_in;  // y's indicator per unique path feature
  std::vector<int> disagree;
  std::vector<double> w;
  double base_sum = 0.0;
  for (const Instance& y : ref) {
    base_sum += predict(tree, y);
    for (const LeafFactors& lf : leaves) {
      // Against a single reference the leaf weight is a 0/1 product; only
      // features where x and y route differently vary with the coalition.
      // A feature where both miss the path kills the leaf for this y.
      y_in.assign(lf.features.size(), 1.0);
      NodeIndex j = 0;
      for (std::size_t e = 0; e < lf.edge_pos.size(); ++e) {
        const bool follows = (y[tree.features[j]] <= tree.thresholds[j]) == bool(lf.edge_left[e]);
        if (!follows) y_in[lf.edge_pos[e]] = 0.0;
        j = lf.edge_left[e] ? tree.left_child[j] : tree.right_child[j];
      }
      bool dead = false;
      disagree.clear();
      for (std::size_t i = 0; i < lf.features.size(); ++i) {
        if (lf.in_weight[i] == y_in[i]) {
          if (lf.in_weight[i] == 0.0) {
            dead = true;
            break;
          }
        } else {
          disagree.push_back(static_cast<int>(i));
        }
      }
      if (dead || disagree.empty()) continue;

      const int m = static_cast<int>(disagree.size());
      const std::size_t n_masks = std::size_t{1} << m;
      w.assign(n_masks, lf.value);
      for (std::size_t mask = 0; mask < n_masks; ++mask)
        for (int p = 0; p < m; ++p) {
          const std::size_t i = static_cast<std::size_t>(disagree[p]);
          w[mask] *= (mask & (std::size_t{1} << p)) ? lf.in_weight[i] : y_in[i];
        }
      const ShapleyWeights weights(m);
      for (int p = 0; p < m; ++p) {
        const std::size_t bit = std::size_t{1} << p;
        double acc = 0.0;
        for (std::size_t mask = 0; mask < n_masks; ++mask) {
          if (mask & bit) continue;
          acc += weights.weight(std::popcount(mask)) * (w[mask | bit] - w[mask]);
        }
        out.phi[lf.features[disagree[p]]] += acc;
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(ref.size());
  for (double& v : out.phi) v *= inv;
  out.base_value = base_sum * inv;
  return out;
}

namespace {

// Enumeration term counts used by the auto engine to pick a path.
double leafwise_cost_estimate(const TreeArrays& tree, const Instance& x) {
  double cost = 0.0;
  for (const LeafFactors& lf : leaf_factors(tree, x)) {
    const int m = static_cast<int>(lf.features.size());
    cost += (m + 1.0) * std::ldexp(1.0, m);
  }
  return cost;
}

double reduced_cost_estimate(int m, int nodes) {
  if (m > 60) return std::numeric_limits<double>::infinity();
  return std::ldexp(1.0, m) * static_cast<double>(nodes);
}

}  // namespace

Attribution shapley_single_tree(Method method, Engine engine, const TreeArrays& tree,
                                const Instance& x, const ReferenceSet* ref, int n_features,
                                int guard) {
  if (method == Method::kInterventional && (ref == nullptr || ref->empty()))
    throw ValidationError("interventional method needs a non-empty reference set");

  switch (engine) {
    case Engine::kOracle: {
      Attribution out = brute_force_shapley(
          [&](const Coalition& s) { return eval_utility(method, tree, x, s, ref); },
          n_features);
      out.method = method;
      return out;
    }
    case Engine::kLeafwise:
      if (method == Method::kTreeshap) return shapley_treeshap_leafwise(tree, x, n_features);
      if (method == Method::kInterventional)
        return shapley_interventional_fast(tree, x, *ref, n_features);
      throw ValidationError("the leafwise engine does not apply to eject");
    case Engine::kReduced:
      return shapley_reduced(method, tree, x, ref, n_features, guard);
    case Engine::kAuto:
      break;
  }

  // Eject's player set is x's decision path, already small: reduced only.
  if (method == Method::kEject)
    return shapley_reduced(method, tree, x, ref, n_features, guard);

  const int m = static_cast<int>(tree_features(tree).size());
  if (m > guard ||
      leafwise_cost_estimate(tree, x) < reduced_cost_estimate(m, tree.node_count()))
    return method == Method::kTreeshap
               ? shapley_treeshap_leafwise(tree, x, n_features)
               : shapley_interventional_fast(tree, x, *ref, n_features);
  return shapley_reduced(method, tree, x, ref, n_features, guard);
}

Attribution shapley_ensemble(const EnsembleModel& model, const Instance& x, Method method,
                             const ReferenceSet* ref, Engine engine, int guard) {
  if (model.trees.empty()) throw ValidationError("model has no trees");
  if (static_cast<int>(x.size()) != model.n_features)
    throw ValidationError("instance width disagrees with the model's feature count");
  if (method == Method::kInterventional) {
    if (ref == nullptr || ref->empty())
      throw ValidationError("interventional method needs a non-empty reference set");
    for (const Instance& y : *ref)
      if (static_cast<int>(y.size()) != model.n_features)
        throw ValidationError("reference instance width disagrees with the model");
  }

  Attribution total;
  total.method = method;
  total.phi.assign(model.n_features, 0.0);
  for (const TreeArrays& tree : model.trees) {
    const Attribution part =
        shapley_single_tree(method, engine, tree, x, ref, model.n_features, guard);
    for (int f = 0; f < model.n_features; ++f) total.phi[f] += part.phi[f];
    total.base_value += part.base_value;
    total.full_value += part.full_value;
  }
  if (model.aggregation == Aggregation::kForestAverage) {
    const double inv = 1.0 / static_cast<double>(model.trees.size());
    for (double& v : total.phi) v *= inv;
    total.base_value *= inv;
    total.full_value *= inv;
  } else {
    total.base_value += model.base_offset;
    total.full_value += model.base_offset;
  }
  return total;
}

LocalNullReport local_null_report(const EnsembleModel& model,
                                  const std::vector<Instance>& instances) {
  LocalNullReport report;
  report.n_features = model.n_features;
  report.locally_null.reserve(instances.size());
  for (const Instance& x : instances) {
    std::vector<bool> null_flags(model.n_features, true);
    for (const TreeArrays& tree : model.trees)
      for (int f : decision_path(tree, x).unique_features) null_flags[f] = false;
    report.locally_null.push_back(std::move(null_flags));
  }
  return report;
}

}  // namespace treesv
