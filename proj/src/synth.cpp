#include "treesv/synth.hpp"

#include <cmath>
#include <cstdio>

#include "treesv/errors.hpp"
#include "treesv/rng.hpp"

namespace treesv {

std::vector<double> cholesky_lower(const std::vector<double>& cov, int n) {
  if (static_cast<int>(cov.size()) != n * n)
    throw ValidationError("covariance matrix size disagrees with its dimension");
  constexpr double kPivotTol = 1e-10;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(cov[i * n + j] - cov[j * n + i]) > 1e-12)
        throw ValidationError("covariance matrix is not symmetric");

  std::vector<double> lower(n * n, 0.0);
  for (int j = 0; j < n; ++j) {
    double diag = cov[j * n + j];
    for (int k = 0; k < j; ++k) diag -= lower[j * n + k] * lower[j * n + k];
    if (diag < -kPivotTol) throw ValidationError("covariance matrix is not positive semidefinite");
    const double pivot = diag > kPivotTol ? std::sqrt(diag) : 0.0;
    lower[j * n + j] = pivot;
    for (int i = j + 1; i < n; ++i) {
      double off = cov[i * n + j];
      for (int k = 0; k < j; ++k) off -= lower[i * n + k] * lower[j * n + k];
      lower[i * n + j] = pivot > 0.0 ? off / pivot : 0.0;
    }
  }
  return lower;
}

namespace {

void check_config(const SynthConfig& config) {
  if (config.n_features() < 1) throw ValidationError("no features configured");
  if (config.train_per_group < 0 || config.valid_per_group < 0)
    throw ValidationError("negative instance count");
  for (double d : config.informative_diffs)
    if (!(d >= 0.0)) throw ValidationError("expression differences must be non-negative");
  if (!config.informative_cov.empty()) {
    const int k = config.n_informative();
    if (static_cast<int>(config.informative_cov.size()) != k * k)
      throw ValidationError("covariance size disagrees with the informative feature count");
    for (int i = 0; i < k; ++i)
      if (std::fabs(config.informative_cov[i * k + i] - 1.0) > 1e-12)
        throw ValidationError("covariance diagonal must be 1");
  }
}

Dataset sample_dataset(const SynthConfig& config, const std::vector<double>& lower,
                       int per_group, Rng& rng) {
  const int k = config.n_informative();
  Dataset data;
  data.n_features = config.n_features();
  data.feature_names.reserve(data.n_features);
  for (int f = 0; f < data.n_features; ++f) {
    char name[16];
    std::snprintf(name, sizeof(name), "x%d", f + 1);
    data.feature_names.push_back(name);
  }
  std::vector<double> raw(k);
  // Group +1 rows first, then group -1; means placed symmetrically at
  // +/- diff/2 so the difference of group means is exactly diff.
  for (const int label : {+1, -1}) {
    for (int i = 0; i < per_group; ++i) {
      Instance row(data.n_features);
      for (int f = 0; f < k; ++f) raw[f] = rng.normal();
      for (int f = 0; f < k; ++f) {
        double v = 0.0;
        if (lower.empty()) {
          v = raw[f];
        } else {
          for (int c = 0; c <= f; ++c) v += lower[f * k + c] * raw[c];
        }
        row[f] = v + 0.5 * label * config.informative_diffs[f];
      }
      for (int f = k; f < data.n_features; ++f) row[f] = rng.normal();
      data.rows.push_back(std::move(row));
      data.labels.push_back(label);
    }
  }
  return data;
}

}  // namespace

SynthResult generate(const SynthConfig& config) {
  check_config(config);
  std::vector<double> lower;
  if (!config.informative_cov.empty())
    lower = cholesky_lower(config.informative_cov, config.n_informative());

  SynthResult result;
  Rng train_rng = Rng::derive(config.seed, 0);
  Rng valid_rng = Rng::derive(config.seed, 1);
  result.train = sample_dataset(config, lower, config.train_per_group, train_rng);
  result.valid = sample_dataset(config, lower, config.valid_per_group, valid_rng);
  return result;
}

SynthConfig preset_figure3(double expr_diff, double scale) {
  const bool known = expr_diff == 0.25 || expr_diff == 0.5 || expr_diff == 0.75 || expr_diff == 1.0;
  if (!known)
    throw ValidationError("figure-3 preset expects an expression difference in {0.25, 0.5, 0.75, 1.0}");
  if (!(scale > 0.0)) throw ValidationError("scale must be positive");
  const int n_each = static_cast<int>(std::lround(200.0 * scale));
  if (n_each < 1) throw ValidationError("scale too small: no features left");
  SynthConfig config;
  config.informative_diffs.assign(n_each, expr_diff);
  config.n_uninformative = n_each;
  // Instance counts scale with floors that keep a desk-scale run trainable.
  config.train_per_group = static_cast<int>(std::max(60L, std::lround(120.0 * scale)));
  config.valid_per_group = static_cast<int>(std::max(30L, std::lround(30.0 * scale)));
  return config;
}

SynthConfig preset_supplement_e1(bool correlated) {
  SynthConfig config;
  for (int i = 0; i <= 12; ++i) config.informative_diffs.push_back(0.25 * i);
  config.n_uninformative = 0;
  config.train_per_group = 30;
  config.valid_per_group = 30;
  if (correlated) {
    const int k = config.n_informative();
    config.informative_cov.assign(k * k, 0.5);
    for (int i = 0; i < k; ++i) config.informative_cov[i * k + i] = 1.0;
  }
  return config;
}

}  // namespace treesv
