#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "treesv/errors.hpp"
#include "treesv/model_io.hpp"
#include "treesv/report.hpp"

using namespace treesv;

namespace {

// Four instances over two features; base chosen so efficiency holds.
AttributionTable sample_table(const std::string& method = "treeshap") {
  AttributionTable t;
  t.feature_names = {"a", "b"};
  const double fulls[] = {1.0, -1.0, 1.0, -0.5};
  const std::vector<std::vector<double>> phis = {
      {0.5, 0.0}, {-0.25, 0.25}, {0.0, 0.1}, {-0.1, -0.2}};
  for (int i = 0; i < 4; ++i) {
    AttributionTable::Row r;
    r.instance = i;
    r.method = method;
    r.full_value = fulls[i];
    r.base_value = fulls[i] - phis[i][0] - phis[i][1];
    r.phi = phis[i];
    t.rows.push_back(r);
  }
  return t;
}

const FeatureSummary& feature(const Report& r, const std::string& name) {
  for (const FeatureSummary& f : r.per_feature)
    if (f.feature == name) return f;
  REQUIRE(false);
  return r.per_feature.front();
}

const GroupSummary* group(const Report& r, const std::string& name) {
  for (const GroupSummary& g : r.groups)
    if (g.group == name) return &g;
  return nullptr;
}

}  // namespace

TEST_CASE("per-feature summaries flip phi toward the predicted class") {
  ReportInput in;
  in.table = sample_table();
  const Report r = build_report(in);

  CHECK(r.method == "treeshap");
  CHECK(r.n_instances == 4);
  REQUIRE(r.per_feature.size() == 2);

  // Predicted classes derived from sign(full): +1, -1, +1, -1.
  // SV~ for a: {0.5, 0.25, 0.0, 0.1}; for b: {0.0, -0.25, 0.1, 0.2}.
  const FeatureSummary& a = feature(r, "a");
  CHECK(a.n == 4);
  CHECK(a.mean == doctest::Approx(0.2125).epsilon(1e-15));
  CHECK(a.mean_abs == doctest::Approx(0.2125).epsilon(1e-15));
  CHECK(a.frac_nonzero == doctest::Approx(0.75).epsilon(1e-15));
  // Quartiles by linear interpolation over the sorted sample {0, .1, .25, .5}.
  CHECK(a.q25 == doctest::Approx(0.075).epsilon(1e-12));
  CHECK(a.median == doctest::Approx(0.175).epsilon(1e-12));
  CHECK(a.q75 == doctest::Approx(0.3125).epsilon(1e-12));
  // Sample stderr: sd of {.5,.25,0,.1} over sqrt(4).
  CHECK(a.stderr_mean == doctest::Approx(0.10873).epsilon(1e-4));

  const FeatureSummary& b = feature(r, "b");
  CHECK(b.mean == doctest::Approx(0.0125).epsilon(1e-12));
  CHECK(b.mean_abs == doctest::Approx(0.1375).epsilon(1e-12));
  CHECK(b.median == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("an explicit class vector overrides the sign of full_value") {
  ReportInput in;
  in.table = sample_table();
  in.predicted_class = {1, 1, 1, 1};
  const Report r = build_report(in);
  // SV~ for a is now the raw phi column: {0.5, -0.25, 0, -0.1}.
  CHECK(feature(r, "a").mean == doctest::Approx(0.0375).epsilon(1e-12));
}

TEST_CASE("group sections appear with their companion inputs") {
  ReportInput in;
  in.table = sample_table();

  SUBCASE("no companions leaves only the catch-all group") {
    const Report r = build_report(in);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].group == "all");
    CHECK(r.groups[0].n_pairs == 8);
  }

  SUBCASE("locally-null flags split on/off-path pairs") {
    LocalNullReport nulls;
    nulls.n_features = 2;
    nulls.locally_null = {{false, true},
                          {false, false},
                          {true, false},
                          {false, false}};
    in.null_flags = nulls;
    const Report r = build_report(in);

    const GroupSummary* null_group = group(r, "locally_null");
    REQUIRE(null_group != nullptr);
    CHECK(null_group->n_pairs == 2);  // (0,b) and (2,a)
    CHECK(null_group->mean == 0.0);   // both SV~ values are exactly zero
    CHECK(null_group->frac_nonzero == 0.0);

    const GroupSummary* path_group = group(r, "on_path");
    REQUIRE(path_group != nullptr);
    CHECK(path_group->n_pairs == 6);
  }

  SUBCASE("informative flags group features") {
    in.informative = {true, false};
    const Report r = build_report(in);

    const GroupSummary* info = group(r, "informative");
    REQUIRE(info != nullptr);
    CHECK(info->n_pairs == 4);
    CHECK(info->mean == doctest::Approx(0.2125).epsilon(1e-15));

    const GroupSummary* unin = group(r, "uninformative");
    REQUIRE(unin != nullptr);
    CHECK(unin->n_pairs == 4);
    CHECK(unin->mean == doctest::Approx(0.0125).epsilon(1e-12));
  }

  SUBCASE("null flags and informativeness intersect") {
    LocalNullReport nulls;
    nulls.n_features = 2;
    nulls.locally_null = {{false, true},
                          {false, false},
                          {true, false},
                          {false, false}};
    in.null_flags = nulls;
    in.informative = {true, false};
    const Report r = build_report(in);
    const GroupSummary* ni = group(r, "null_informative");
    const GroupSummary* nu = group(r, "null_uninformative");
    REQUIRE(ni != nullptr);
    REQUIRE(nu != nullptr);
    CHECK(ni->n_pairs == 1);  // (2, a)
    CHECK(nu->n_pairs == 1);  // (0, b)
  }
}

TEST_CASE("mismatched companion sizes are rejected") {
  ReportInput in;
  in.table = sample_table();

  SUBCASE("wrong null-flag instance count") {
    LocalNullReport nulls;
    nulls.n_features = 2;
    nulls.locally_null = {{false, false}};
    in.null_flags = nulls;
    CHECK_THROWS_AS(build_report(in), ValidationError);
  }
  SUBCASE("wrong informative length") {
    in.informative = {true};
    CHECK_THROWS_AS(build_report(in), ValidationError);
  }
  SUBCASE("wrong predicted_class length") {
    in.predicted_class = {1, -1};
    CHECK_THROWS_AS(build_report(in), ValidationError);
  }
}

TEST_CASE("a table mixing methods is rejected") {
  ReportInput in;
  in.table = sample_table();
  in.table.rows[2].method = "eject";
  try {
    build_report(in);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("split") != std::string::npos);
  }
}

TEST_CASE("residuals compare tables pairwise") {
  const AttributionTable ts = sample_table();
  AttributionTable ej = sample_table("eject");
  for (auto& row : ej.rows) {
    row.phi[0] += 0.1;  // shift feature a on every instance
    row.base_value -= 0.1;
  }
  AttributionTable iv = sample_table("interventional");
  iv.rows[3].phi[1] -= 0.05;
  iv.rows[3].base_value += 0.05;

  const std::vector<ResidualSummary> res = residuals_vs_treeshap(ts, {ej, iv});
  REQUIRE(res.size() == 2);
  CHECK(res[0].method == "eject");
  CHECK(res[0].mean_signed == doctest::Approx(-0.05).epsilon(1e-12));  // -0.1 on half the pairs
  CHECK(res[0].mean_abs == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(res[0].max_abs == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(res[1].method == "interventional");
  CHECK(res[1].mean_abs == doctest::Approx(0.05 / 8).epsilon(1e-12));
  CHECK(res[1].max_abs == doctest::Approx(0.05).epsilon(1e-12));

  SUBCASE("instance misalignment is rejected") {
    AttributionTable skewed = ej;
    skewed.rows[1].instance = 9;
    CHECK_THROWS_AS(residuals_vs_treeshap(ts, {skewed}), ValidationError);
  }
}

TEST_CASE("report text and CSV carry the summaries") {
  ReportInput in;
  in.table = sample_table();
  in.informative = {true, false};
  const Report r = build_report(in);

  const std::string text = report_text(r);
  CHECK(text.find("treeshap") != std::string::npos);
  CHECK(text.find("informative") != std::string::npos);
  CHECK(text.find("a") != std::string::npos);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "treesv_report_tests";
  fs::create_directories(dir);
  const std::string path = (dir / "report.csv").string();
  write_report_csv(r, path);
  const std::string csv = read_text_file(path);
  CHECK(csv.find("mean") != std::string::npos);
  CHECK(csv.find("feature,a,") != std::string::npos);
  CHECK(csv.find("group,informative,") != std::string::npos);
}
