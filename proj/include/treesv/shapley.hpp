#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treesv/coalition.hpp"
#include "treesv/tree.hpp"
#include "treesv/utilities.hpp"

namespace treesv {

enum class Method { kEject, kTreeshap, kInterventional };
enum class Engine { kAuto, kReduced, kLeafwise, kOracle };

const char* method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);
const char* engine_name(Engine e);
std::optional<Engine> engine_from_name(std::string_view name);

// Coalition weights 1 / (M * C(M-1, k)) of the Shapley sum, computed in
// exact integer arithmetic and converted to double once. Over any fixed
// player, the weights of its 2^(M-1) marginal contributions sum to 1.
class ShapleyWeights {
 public:
  explicit ShapleyWeights(int n_players);
  double weight(int coalition_size) const { return weights_[coalition_size]; }
  int n_players() const { return static_cast<int>(weights_.size()); }

 private:
  std::vector<double> weights_;
};

// Per-feature Shapley values with the game's end points. Efficiency:
// sum(phi) = full_value - base_value.
struct Attribution {
  std::vector<double> phi;
  double base_value = 0.0;  // u(empty coalition)
  double full_value = 0.0;  // u(all players)
  Method method = Method::kEject;
  std::int64_t instance_index = -1;
};

// Hard ceiling for full-universe enumeration (2^M utility evaluations).
inline constexpr int kBruteForceGuard = 20;
// Default ceiling for reduced-set enumeration; configurable per call.
inline constexpr int kDefaultEnumerationGuard = 22;

// Exact Shapley values by enumerating all 2^M coalitions; each coalition's
// utility is evaluated exactly once. This is the verification oracle for
// every other Shapley operation. Throws GuardExceededError when
// n_players > kBruteForceGuard.
Attribution brute_force_shapley(const std::function<double(const Coalition&)>& utility,
                                int n_players);

// Players that can carry nonzero attribution: the decision path's unique
// features for eject, the features appearing anywhere in the tree otherwise.
std::vector<int> relevant_players(Method method, const TreeArrays& tree, const Instance& x);

// Exact enumeration over the reduced player set (weights computed for the
// reduced M), zero-filling all other features. Throws GuardExceededError when
// the reduced set exceeds `guard`.
Attribution shapley_reduced(Method method, const TreeArrays& tree, const Instance& x,
                            const ReferenceSet* ref, int n_features,
                            int guard = kDefaultEnumerationGuard);

// Per-leaf exact decomposition of the observational utility: each leaf's
// sub-game involves only the unique features on that leaf's path and is
// enumerated independently; per-leaf attributions sum to the tree's.
// Cost O(leaves * depth * 2^depth).
Attribution shapley_treeshap_leafwise(const TreeArrays& tree, const Instance& x,
                                      int n_features);

// Interventional counterpart: per reference instance and per leaf, only the
// path features on which x and y route differently enter the sub-game;
// attributions are averaged over the reference set in input order.
Attribution shapley_interventional_fast(const TreeArrays& tree, const Instance& x,
                                        const ReferenceSet& ref, int n_features);

// Dispatch helper for one tree. kAuto picks the reduced path for eject and,
// for the other methods, whichever of reduced/leafwise has the smaller
// enumeration cost estimate (leafwise always once the reduced set exceeds
// the guard).
Attribution shapley_single_tree(Method method, Engine engine, const TreeArrays& tree,
                                const Instance& x, const ReferenceSet* ref,
                                int n_features, int guard = kDefaultEnumerationGuard);

// Per-tree attributions combined by the model's aggregation rule, in
// ascending tree order: forest_average takes arithmetic means, boosted_sum
// sums and adds base_offset to base and full values.
Attribution shapley_ensemble(const EnsembleModel& model, const Instance& x, Method method,
                             const ReferenceSet* ref = nullptr, Engine engine = Engine::kAuto,
                             int guard = kDefaultEnumerationGuard);

// Locally-null flags: feature f is locally null for instance i iff f is
// absent from the decision path of every tree for that instance.
struct LocalNullReport {
  int n_features = 0;
  std::vector<std::vector<bool>> locally_null;  // [instance][feature]
};

LocalNullReport local_null_report(const EnsembleModel& model,
                                  const std::vector<Instance>& instances);

}  // namespace treesv
