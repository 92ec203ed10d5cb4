#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "treesv/cart.hpp"
#include "treesv/errors.hpp"
#include "treesv/model_io.hpp"
#include "treesv/rng.hpp"
#include "treesv/shapley.hpp"
#include "treesv/synth.hpp"

using namespace treesv;
namespace fs = std::filesystem;

namespace {

// Scratch file under the system temp dir; each call overwrites its own name.
std::string scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "treesv_io_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

const char* kBoostedDump = R"([
  { "nodeid": 0, "depth": 0, "split": "f0", "split_condition": 0.5,
    "yes": 1, "no": 2, "missing": 1, "cover": 100,
    "children": [
      { "nodeid": 1, "leaf": -0.4, "cover": 30 },
      { "nodeid": 2, "leaf": 0.4, "cover": 70 }
    ] }
])";

}  // namespace

TEST_CASE("model JSON round-trip is byte-stable") {
  const EnsembleModel model = fixtures::make_t1_model();
  const std::string once = model_to_json(model);
  const EnsembleModel back = model_from_json(once);
  CHECK(model_to_json(back) == once);

  CHECK(back.aggregation == model.aggregation);
  CHECK(back.base_offset == model.base_offset);
  CHECK(back.n_features == 3);
  CHECK(back.feature_names == model.feature_names);
  REQUIRE(back.trees.size() == 1);
  CHECK(back.trees[0].values == model.trees[0].values);
  CHECK(back.trees[0].cover == model.trees[0].cover);
  CHECK(back.trees[0].features == model.trees[0].features);
  CHECK(back.trees[0].left_child == model.trees[0].left_child);
  CHECK(back.trees[0].right_child == model.trees[0].right_child);
}

TEST_CASE("model files survive disk round-trips") {
  EnsembleModel model = fixtures::make_t1_model();
  model.metadata["note"] = "fixture";
  const std::string path = scratch("t1.model.json");
  write_model(model, path);
  const EnsembleModel back = read_model(path);
  CHECK(model_to_json(back) == model_to_json(model));
  CHECK(back.metadata.at("note") == "fixture");
}

TEST_CASE("a trained forest round-trips with bit-identical predictions") {
  SynthConfig sc;
  sc.informative_diffs = {1.0, 0.5};
  sc.n_uninformative = 2;
  sc.train_per_group = 30;
  sc.valid_per_group = 1;
  sc.seed = 5;
  const Dataset train = generate(sc).train;
  TrainConfig tc;
  tc.n_trees = 3;
  tc.seed = 8;
  const EnsembleModel model = train_forest(train, tc);

  const std::string path = scratch("forest.model.json");
  write_model(model, path);
  const EnsembleModel back = read_model(path);
  CHECK(model_to_json(back) == model_to_json(model));

  Rng rng(123);
  for (int i = 0; i < 100; ++i) {
    Instance x(4);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    const double a = ensemble_predict(model, x);
    const double b = ensemble_predict(back, x);
    CHECK(a == b);  // exact, not approximate
  }
}

TEST_CASE("model parsing rejects structural damage with located messages") {
  const EnsembleModel model = fixtures::make_t1_model();
  const std::string good = model_to_json(model);

  SUBCASE("unknown format version") {
    std::string bad = good;
    const auto pos = bad.find("\"format_version\": \"1\"");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 21, "\"format_version\": \"2\"");
    CHECK_THROWS_AS(model_from_json(bad), ValidationError);
  }
  SUBCASE("not JSON at all") {
    CHECK_THROWS_AS(model_from_json("][nope"), ValidationError);
  }
  SUBCASE("missing node field names the spot") {
    // Drop "value" from one node by rebuilding the document.
    std::string bad = good;
    const auto pos = bad.find("\"value\"");
    REQUIRE(pos != std::string::npos);
    // Corrupt the key so the node has no value entry.
    bad.replace(pos, 7, "\"vslue\"");
    try {
      model_from_json(bad);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("tree") != std::string::npos);
    }
  }
  SUBCASE("half-leaf nodes are rejected") {
    EnsembleModel broken = model;
    broken.trees[0].left_child[3] = 4;  // leaf with one child set
    CHECK_THROWS_AS(model_from_json(model_to_json(broken)), ValidationError);
  }
}

TEST_CASE("read_model reports missing files") {
  CHECK_THROWS_AS(read_model(scratch("no_such_model.json")), ValidationError);
}

TEST_CASE("boosted dump import normalizes the published example") {
  const EnsembleModel m = import_boosted_dump(kBoostedDump);
  CHECK(m.aggregation == Aggregation::kBoostedSum);
  CHECK(m.base_offset == 0.0);  // base_score 0.5 is margin zero
  CHECK(m.n_features == 1);
  CHECK(m.feature_names == std::vector<std::string>{"f0"});
  REQUIRE(m.trees.size() == 1);
  const TreeArrays& t = m.trees[0];
  REQUIRE(t.node_count() == 3);
  CHECK(t.features[0] == 0);
  CHECK(t.thresholds[0] == 0.5);
  CHECK(t.cover == std::vector<double>{1.0, 0.3, 0.7});
  CHECK(t.values[1] == -0.4);
  CHECK(t.values[2] == 0.4);
  // Internal value is the cover-weighted leaf mean: 0.3*(-0.4) + 0.7*0.4.
  CHECK(t.values[0] == doctest::Approx(0.16).epsilon(1e-15));
  CHECK(validate_tree(t).empty());

  SUBCASE("the import is idempotent through native JSON") {
    const std::string again = model_to_json(model_from_json(model_to_json(m)));
    CHECK(again == model_to_json(m));
  }
}

TEST_CASE("boosted import options") {
  SUBCASE("base_score becomes a log-odds margin offset") {
    BoostedImportOptions opt;
    opt.base_score = 0.9;
    const EnsembleModel m = import_boosted_dump(kBoostedDump, opt);
    CHECK(m.base_offset == doctest::Approx(std::log(0.9 / 0.1)).epsilon(1e-15));
  }
  SUBCASE("out-of-range base_score is rejected") {
    BoostedImportOptions opt;
    opt.base_score = 1.5;
    CHECK_THROWS_AS(import_boosted_dump(kBoostedDump, opt), ValidationError);
  }
  SUBCASE("explicit feature names take precedence") {
    BoostedImportOptions opt;
    opt.feature_names = {"age", "bmi"};
    const EnsembleModel m = import_boosted_dump(kBoostedDump, opt);
    CHECK(m.n_features == 2);
    CHECK(m.feature_names[0] == "age");
  }
  SUBCASE("threshold nudging moves the split to the previous double") {
    BoostedImportOptions opt;
    opt.nudge_thresholds = true;
    const EnsembleModel m = import_boosted_dump(kBoostedDump, opt);
    const double t = m.trees[0].thresholds[0];
    CHECK(t < 0.5);
    CHECK(std::nextafter(t, 1.0) == 0.5);
  }
}

TEST_CASE("boosted import rejects unsupported dumps") {
  SUBCASE("missing-branch disagreement") {
    std::string dump = kBoostedDump;
    const auto pos = dump.find("\"missing\": 1");
    REQUIRE(pos != std::string::npos);
    dump.replace(pos, 12, "\"missing\": 2");
    try {
      import_boosted_dump(dump);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("missing") != std::string::npos);
    }
  }
  SUBCASE("dumps without cover statistics") {
    std::string dump = R"([{ "nodeid": 0, "leaf": 0.25 }])";
    CHECK_THROWS_AS(import_boosted_dump(dump), ValidationError);
  }
}

TEST_CASE("CSV datasets round-trip") {
  Dataset d;
  d.n_features = 2;
  d.feature_names = {"alpha", "beta"};
  d.rows = {{0.25, -1.5}, {3.0, 0.1}, {-0.125, 2.75}};
  d.labels = {1, -1, 1};

  const std::string path = scratch("tiny.csv");
  write_dataset(d, path);
  const Dataset back = read_dataset(path);
  CHECK(back.feature_names == d.feature_names);
  CHECK(back.rows == d.rows);
  CHECK(back.labels == d.labels);

  SUBCASE("unlabeled data has no label column") {
    Dataset u = d;
    u.labels.clear();
    write_dataset(u, path);
    const Dataset again = read_dataset(path);
    CHECK_FALSE(again.has_labels());
    CHECK(again.rows == d.rows);
  }
}

TEST_CASE("CSV parsing details") {
  const std::string path = scratch("hand.csv");

  SUBCASE("zero-one labels map to minus-one/plus-one") {
    write_text_file(path, "f,label\n0.5,1\n0.25,0\n");
    const Dataset d = read_dataset(path);
    CHECK(d.labels == std::vector<int>{1, -1});
  }
  SUBCASE("the label column may sit anywhere") {
    write_text_file(path, "a,label,b\n1,1,2\n3,-1,4\n");
    const Dataset d = read_dataset(path);
    CHECK(d.n_features == 2);
    CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(d.rows[1] == Instance{3.0, 4.0});
    CHECK(d.labels == std::vector<int>{1, -1});
  }
  SUBCASE("CRLF line endings are tolerated") {
    write_text_file(path, "f,label\r\n0.5,1\r\n");
    CHECK(read_dataset(path).rows[0][0] == 0.5);
  }
  SUBCASE("a ragged row is located in the error") {
    write_text_file(path, "a,b\n1,2\n3\n");
    try {
      read_dataset(path);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }
  SUBCASE("a non-numeric cell is located in the error") {
    write_text_file(path, "a,b\n1,oops\n");
    try {
      read_dataset(path);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("b") != std::string::npos);
    }
  }
  SUBCASE("fractional labels are rejected") {
    write_text_file(path, "a,label\n1,0.5\n");
    CHECK_THROWS_AS(read_dataset(path), ValidationError);
  }
  SUBCASE("a wide header defines the feature count") {
    std::string header;
    for (int i = 1; i <= 27; ++i) header += "c" + std::to_string(i) + ",";
    header += "label\n";
    std::string row;
    for (int i = 1; i <= 27; ++i) row += "0.5,";
    row += "1\n";
    write_text_file(path, header + row);
    const Dataset d = read_dataset(path);
    CHECK(d.n_features == 27);
    CHECK(d.rows[0].size() == 27u);
  }
}

TEST_CASE("attribution tables round-trip and enforce efficiency") {
  const EnsembleModel model = fixtures::make_t1_model();
  const ReferenceSet ref = fixtures::t1_ref();
  std::vector<Attribution> rows;
  rows.push_back(shapley_ensemble(model, fixtures::t1_x(), Method::kTreeshap));
  rows.push_back(shapley_ensemble(model, {0.9, 0.9, 0.8}, Method::kTreeshap));
  rows[0].instance_index = 0;
  rows[1].instance_index = 1;

  const std::string path = scratch("attr.csv");
  write_attributions(rows, model.feature_names, path);
  const AttributionTable table = read_attributions(path);
  REQUIRE(table.rows.size() == 2);
  CHECK(table.feature_names == model.feature_names);
  CHECK(table.has_base);
  CHECK(table.rows[0].instance == 0);
  CHECK(table.rows[0].method == "treeshap");
  CHECK(table.rows[0].phi.size() == 3u);
  // format_double guarantees exact reconstruction.
  for (int f = 0; f < 3; ++f) CHECK(table.rows[0].phi[f] == rows[0].phi[f]);
  CHECK(table.rows[1].full_value == rows[1].full_value);

  SUBCASE("drop_base removes the column") {
    write_attributions(rows, model.feature_names, path, /*drop_base=*/true);
    const AttributionTable lean = read_attributions(path);
    CHECK_FALSE(lean.has_base);
    CHECK(lean.rows[0].phi[2] == rows[0].phi[2]);
  }
  SUBCASE("violating efficiency blocks the write") {
    std::vector<Attribution> broken = rows;
    broken[0].phi[1] += 1e-3;
    CHECK_THROWS_AS(write_attributions(broken, model.feature_names, path),
                    VerificationError);
  }
}

TEST_CASE("null-flag files round-trip") {
  const EnsembleModel model = fixtures::make_t1_model();
  const std::vector<Instance> instances = {fixtures::t1_x(), {0.9, 0.9, 0.8}};
  const LocalNullReport report = local_null_report(model, instances);
  REQUIRE(report.locally_null.size() == 2);
  CHECK(report.locally_null[0][2]);       // feature 3 off the path of x1
  CHECK_FALSE(report.locally_null[1][0]);

  const std::string path = scratch("nulls.csv");
  write_null_flags(report, model.feature_names, path);
  const LocalNullReport back = read_null_flags(path);
  CHECK(back.n_features == report.n_features);
  CHECK(back.locally_null == report.locally_null);
}

TEST_CASE("format_double round-trips doubles exactly") {
  const double cases[] = {0.0,  -0.0, 0.1, 1.0 / 3.0, -1e-300, 1e300,
                          0.25, 5.0,  std::nextafter(0.5, 0.0)};
  for (double v : cases) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(1.0) == "1");  // integral values stay short
}

TEST_CASE("text file helpers surface IO failures") {
  CHECK_THROWS_AS(read_text_file(scratch("missing_dir") + "/nope.txt"), ValidationError);
  const std::string path = scratch("echo.txt");
  write_text_file(path, "round trip\n");
  CHECK(read_text_file(path) == "round trip\n");
}
