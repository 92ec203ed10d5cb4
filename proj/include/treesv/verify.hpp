#pragma once

#include <string>
#include <vector>

#include "treesv/shapley.hpp"
#include "treesv/tree.hpp"
#include "treesv/utilities.hpp"

namespace treesv {

struct VerifyConfig {
  Method method = Method::kTreeshap;
  Engine engine = Engine::kAuto;
  double tolerance = 1e-10;
  int guard = kBruteForceGuard;
};

struct VerifyMismatch {
  int instance = -1;
  int feature = -1;
  double got = 0.0;
  double expected = 0.0;
};

struct VerifyResult {
  int instances_checked = 0;
  double max_abs_diff = 0.0;
  std::vector<VerifyMismatch> mismatches;  // entries exceeding tolerance
  bool ok() const { return mismatches.empty(); }
};

// Compares the production engine against the brute-force oracle on every
// instance. The oracle enumerates all 2^M coalitions of the ensemble game
// over the model's full feature universe, so the guard refuses models wider
// than `guard` features. Mismatch feature -1 flags the base value, -2 the
// full value.
VerifyResult verify_against_oracle(const EnsembleModel& model,
                                   const std::vector<Instance>& instances,
                                   const ReferenceSet& ref,
                                   const VerifyConfig& config);

std::string verify_summary(const VerifyResult& result, double tolerance);

struct PropertySuiteConfig {
  std::uint64_t seed = 1;
  int cases = 200;
  int max_depth = 4;
  int n_features = 8;
};

struct PropertySuiteResult {
  int cases_run = 0;
  std::string failure;        // empty when every property held
  std::string repro_model;    // failing tree serialized as model JSON
  std::string repro_instance;  // failing instance as one CSV row
  bool ok() const { return failure.empty(); }
};

// Random-tree axiom and oracle sweep: per case, a random tree/instance pair
// is checked for oracle equivalence of every fast engine (1e-10, reference
// sizes 1 and 5 for interventional), efficiency (1e-9), exact null players,
// exact local dummies (eject), symmetry on an automorphic construction
// (1e-12), and linearity of composed utilities (1e-12). Stops at the first
// violation with a serialized repro.
PropertySuiteResult run_property_suite(const PropertySuiteConfig& config);

}  // namespace treesv
