#include "treesv/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "treesv/errors.hpp"

namespace treesv {

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct Accumulator {
  std::int64_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double sum_abs = 0.0;
  std::int64_t nonzero = 0;

  void add(double v) {
    ++n;
    sum += v;
    sum_sq += v * v;
    sum_abs += std::fabs(v);
    if (v != 0.0) ++nonzero;
  }
  double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
  double stderr_mean() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
  double mean_abs() const { return n > 0 ? sum_abs / static_cast<double>(n) : 0.0; }
  double frac_nonzero() const {
    return n > 0 ? static_cast<double>(nonzero) / static_cast<double>(n) : 0.0;
  }
};

GroupSummary finish_group(const std::string& name, const Accumulator& acc) {
  GroupSummary g;
  g.group = name;
  g.n_pairs = static_cast<int>(acc.n);
  g.mean = acc.mean();
  g.stderr_mean = acc.stderr_mean();
  g.mean_abs = acc.mean_abs();
  g.frac_nonzero = acc.frac_nonzero();
  return g;
}

}  // namespace

Report build_report(const ReportInput& input) {
  const AttributionTable& table = input.table;
  const int n_features = static_cast<int>(table.feature_names.size());
  const int n_instances = static_cast<int>(table.rows.size());
  if (n_instances == 0) throw ValidationError("report needs at least one attribution row");
  for (const auto& row : table.rows) {
    if (static_cast<int>(row.phi.size()) != n_features)
      throw ValidationError("attribution rows have inconsistent widths");
    if (row.method != table.rows.front().method)
      throw ValidationError("report input mixes methods; split the table per method first");
  }
  if (input.null_flags) {
    if (input.null_flags->n_features != n_features ||
        static_cast<int>(input.null_flags->locally_null.size()) != n_instances)
      throw ValidationError("null flags do not match the attribution table's shape");
  }
  if (!input.predicted_class.empty() &&
      static_cast<int>(input.predicted_class.size()) != n_instances)
    throw ValidationError("predicted classes do not match the attribution row count");
  if (!input.informative.empty() && static_cast<int>(input.informative.size()) != n_features)
    throw ValidationError("informative flags do not match the feature count");

  Report report;
  report.method = table.rows.front().method;
  report.n_instances = n_instances;

  // SV~ = phi * predicted class; the sign test at 0 maps an exact zero
  // raw output to +1.
  std::vector<int> classes(n_instances);
  for (int i = 0; i < n_instances; ++i)
    classes[i] = input.predicted_class.empty()
                     ? (table.rows[i].full_value >= 0.0 ? 1 : -1)
                     : input.predicted_class[i];

  Accumulator all, null_acc, path_acc, inf_acc, unin_acc, null_inf, null_unin;
  std::vector<double> column(n_instances);
  for (int f = 0; f < n_features; ++f) {
    Accumulator feature_acc;
    for (int i = 0; i < n_instances; ++i) {
      const double sv = table.rows[i].phi[f] * classes[i];
      column[i] = sv;
      feature_acc.add(sv);
      all.add(sv);
      const bool is_null = input.null_flags && input.null_flags->locally_null[i][f];
      if (input.null_flags) (is_null ? null_acc : path_acc).add(sv);
      if (!input.informative.empty()) {
        (input.informative[f] ? inf_acc : unin_acc).add(sv);
        if (is_null) (input.informative[f] ? null_inf : null_unin).add(sv);
      }
    }
    FeatureSummary fs;
    fs.feature = table.feature_names[f];
    fs.n = n_instances;
    fs.mean = feature_acc.mean();
    fs.stderr_mean = feature_acc.stderr_mean();
    fs.mean_abs = feature_acc.mean_abs();
    fs.frac_nonzero = feature_acc.frac_nonzero();
    std::sort(column.begin(), column.end());
    fs.q25 = quantile(column, 0.25);
    fs.median = quantile(column, 0.5);
    fs.q75 = quantile(column, 0.75);
    report.per_feature.push_back(std::move(fs));
  }

  report.groups.push_back(finish_group("all", all));
  if (input.null_flags) {
    report.groups.push_back(finish_group("locally_null", null_acc));
    report.groups.push_back(finish_group("on_path", path_acc));
  }
  if (!input.informative.empty()) {
    report.groups.push_back(finish_group("informative", inf_acc));
    report.groups.push_back(finish_group("uninformative", unin_acc));
    if (input.null_flags) {
      report.groups.push_back(finish_group("null_informative", null_inf));
      report.groups.push_back(finish_group("null_uninformative", null_unin));
    }
  }
  return report;
}

std::vector<ResidualSummary> residuals_vs_treeshap(
    const AttributionTable& treeshap, const std::vector<AttributionTable>& others) {
  std::vector<ResidualSummary> residuals;
  std::map<std::int64_t, std::size_t> by_instance;
  for (std::size_t i = 0; i < treeshap.rows.size(); ++i)
    by_instance[treeshap.rows[i].instance] = i;

  for (const AttributionTable& other : others) {
    if (other.feature_names != treeshap.feature_names)
      throw ValidationError("residuals need identical feature columns across methods");
    ResidualSummary rs;
    rs.method = other.rows.empty() ? "?" : other.rows.front().method;
    std::int64_t n = 0;
    double sum = 0.0, sum_abs = 0.0, max_abs = 0.0;
    for (const auto& row : other.rows) {
      const auto it = by_instance.find(row.instance);
      if (it == by_instance.end())
        throw ValidationError("residuals need matching instance ids across methods");
      const auto& ts_row = treeshap.rows[it->second];
      for (std::size_t f = 0; f < row.phi.size(); ++f) {
        const double d = ts_row.phi[f] - row.phi[f];
        ++n;
        sum += d;
        sum_abs += std::fabs(d);
        max_abs = std::max(max_abs, std::fabs(d));
      }
    }
    if (n > 0) {
      rs.mean_signed = sum / static_cast<double>(n);
      rs.mean_abs = sum_abs / static_cast<double>(n);
      rs.max_abs = max_abs;
    }
    residuals.push_back(rs);
  }
  return residuals;
}

std::string report_text(const Report& report) {
  char buf[320];
  std::string text;
  std::snprintf(buf, sizeof(buf), "method %s over %d instances (SV~ = phi x predicted class)\n",
                report.method.c_str(), report.n_instances);
  text += buf;
  for (const GroupSummary& g : report.groups) {
    std::snprintf(buf, sizeof(buf),
                  "  group %-20s n=%-7d mean %+.5f +/- %.5f   mean|SV~| %.5f   nonzero %.3f\n",
                  g.group.c_str(), g.n_pairs, g.mean, g.stderr_mean, g.mean_abs,
                  g.frac_nonzero);
    text += buf;
  }
  for (const FeatureSummary& f : report.per_feature) {
    std::snprintf(buf, sizeof(buf),
                  "  feature %-16s mean %+.5f +/- %.5f   q25 %+.5f   med %+.5f   q75 %+.5f   "
                  "mean|SV~| %.5f   nonzero %.3f\n",
                  f.feature.c_str(), f.mean, f.stderr_mean, f.q25, f.median, f.q75, f.mean_abs,
                  f.frac_nonzero);
    text += buf;
  }
  for (const ResidualSummary& r : report.residuals) {
    std::snprintf(buf, sizeof(buf),
                  "  residual treeshap - %-16s mean %+.3g   mean|res| %.3g   max|res| %.3g\n",
                  r.method.c_str(), r.mean_signed, r.mean_abs, r.max_abs);
    text += buf;
  }
  return text;
}

void write_report_csv(const Report& report, const std::string& path) {
  std::string out =
      "section,name,n,mean,stderr_mean,q25,median,q75,mean_abs,frac_nonzero,max_abs\n";
  for (const GroupSummary& g : report.groups) {
    out += "group," + g.group + ',' + std::to_string(g.n_pairs) + ',' + format_double(g.mean) +
           ',' + format_double(g.stderr_mean) + ",,,," + format_double(g.mean_abs) + ',' +
           format_double(g.frac_nonzero) + ",\n";
  }
  for (const FeatureSummary& f : report.per_feature) {
    out += "feature," + f.feature + ',' + std::to_string(f.n) + ',' + format_double(f.mean) +
           ',' + format_double(f.stderr_mean) + ',' + format_double(f.q25) + ',' +
           format_double(f.median) + ',' + format_double(f.q75) + ',' +
           format_double(f.mean_abs) + ',' + format_double(f.frac_nonzero) + ",\n";
  }
  for (const ResidualSummary& r : report.residuals) {
    out += "residual_vs_treeshap," + r.method + ",," + format_double(r.mean_signed) +
           ",,,,," + format_double(r.mean_abs) + ",," + format_double(r.max_abs) + "\n";
  }
  write_text_file(path, out);
}

}  // namespace treesv
