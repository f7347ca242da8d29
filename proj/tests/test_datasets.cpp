#include <catch_amalgamated.hpp>

#include <scatter/dataset.hpp>
#include <scatter/synth.hpp>

#include "oracles.hpp"

#include <filesystem>
#include <fstream>

using namespace scatter;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("scatter_test_" + std::to_string(Catch::rngSeed()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

DatasetBundle tiny_bundle() {
  DatasetBundle b;
  b.name = "tiny";
  b.num_classes = 2;
  b.graph = build_graph({{0, 1}, {1, 2}}, 3);
  b.features = Matrix(3, 2);
  b.features << 0.5, 1.0, -2.25, 0.125, 3.0, -0.75;  // exactly f32-representable
  b.labels = {0, 1, 1};
  b.splits.train = {0, 2};
  b.splits.valid = {};
  b.splits.test = {1};
  return b;
}

}  // namespace

TEST_CASE("save and load round-trips a bundle bit for bit", "[datasets]") {
  TempDir dir;
  const DatasetBundle b = tiny_bundle();
  save_dataset(b, dir.path);
  const DatasetBundle r = load_dataset(dir.path);
  REQUIRE(r.name == "tiny");
  REQUIRE(r.num_classes == 2);
  REQUIRE((r.features - b.features).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(r.labels == b.labels);
  REQUIRE(r.graph.col_indices == b.graph.col_indices);
  REQUIRE(r.splits.train == b.splits.train);
  REQUIRE(r.splits.test == b.splits.test);
  REQUIRE(r.checksum != 0);

  // Loading under the wrong expected name fails.
  REQUIRE_THROWS_WITH(load_dataset(dir.path, "cora"),
                      Catch::Matchers::ContainsSubstring("expected dataset"));
}

TEST_CASE("load rejects a missing file", "[datasets]") {
  TempDir dir;
  save_dataset(tiny_bundle(), dir.path);
  fs::remove(dir.path / "labels.txt");
  REQUIRE_THROWS_WITH(load_dataset(dir.path),
                      Catch::Matchers::ContainsSubstring("labels.txt"));
}

TEST_CASE("load detects corrupted payloads by checksum", "[datasets]") {
  TempDir dir;
  save_dataset(tiny_bundle(), dir.path);
  {
    std::ofstream out(dir.path / "labels.txt", std::ios::app);
    out << "# tampered\n";
  }
  REQUIRE_THROWS_WITH(load_dataset(dir.path),
                      Catch::Matchers::ContainsSubstring("checksum mismatch"));
}

TEST_CASE("validation rejects overlapping splits", "[datasets]") {
  DatasetBundle b = tiny_bundle();
  b.splits.valid = {1};  // node 1 is already in test
  REQUIRE_THROWS_WITH(validate_bundle(b),
                      Catch::Matchers::ContainsSubstring("splits overlap at node 1"));
  b = tiny_bundle();
  b.splits.train = {0, 0};
  REQUIRE_THROWS_AS(validate_bundle(b), std::runtime_error);
  b = tiny_bundle();
  b.labels = {0, 2, 1};  // class 2 out of range
  REQUIRE_THROWS_WITH(validate_bundle(b),
                      Catch::Matchers::ContainsSubstring("outside [0, C)"));
}

TEST_CASE("named datasets must match their published statistics", "[datasets]") {
  DatasetBundle b = tiny_bundle();
  b.name = "cora";  // 3 nodes is not cora
  REQUIRE_THROWS_WITH(validate_bundle(b),
                      Catch::Matchers::ContainsSubstring("expected 2708 nodes"));
  REQUIRE(known_dataset_stats().at("cora").num_classes == 7);
  REQUIRE(known_dataset_stats().at("citeseer").num_nodes == 3327);
  REQUIRE(known_dataset_stats().at("citeseer").train_size == 1827);
  REQUIRE(known_dataset_stats().at("pubmed").num_nodes == 19717);
  REQUIRE(known_dataset_stats().at("corafull").num_classes == 70);
}

TEST_CASE("train split expansion claims every unheld node", "[datasets]") {
  DatasetBundle b;
  b.name = "expand";
  b.num_classes = 2;
  b.graph = build_graph({}, 10);
  b.features = Matrix::Zero(10, 1);
  b.labels.assign(10, 0);
  b.splits.valid = {0};
  b.splits.test = {1};
  b.splits.train = {5};  // stale; expansion rebuilds it
  const DatasetBundle e = expand_train_split(b);
  REQUIRE(e.splits.train == std::vector<NodeId>{2, 3, 4, 5, 6, 7, 8, 9});
  // Idempotent.
  const DatasetBundle e2 = expand_train_split(e);
  REQUIRE(e2.splits.train == e.splits.train);
}

TEST_CASE("conversion quantizes features to f32 and expands train", "[datasets]") {
  TempDir raw, canon;
  {
    std::ofstream edges(raw.path / "edges.tsv");
    edges << "0\t1\n1\t2\n# comment\n";
    std::ofstream feats(raw.path / "features.csv");
    feats << "3,2\n0.1,1\n0.2,2\n0.3,3\n";
    std::ofstream labels(raw.path / "labels.txt");
    labels << "0\n1\n0\n";
    std::ofstream splits(raw.path / "splits.json");
    splits << R"({"train": [], "valid": [0], "test": [1]})";
    std::ofstream meta(raw.path / "meta.json");
    meta << R"({"name": "mini", "source": "unit test"})";
  }
  const DatasetBundle b = convert_dataset(raw.path, canon.path);
  REQUIRE(b.name == "mini");
  REQUIRE(b.num_classes == 2);  // max label + 1
  REQUIRE(b.splits.train == std::vector<NodeId>{2});
  REQUIRE(b.source == "unit test");
  // 0.1 is not f32-representable; the loaded value is the f32 rounding.
  REQUIRE(b.features(0, 0) == static_cast<double>(0.1f));
  REQUIRE(b.features(0, 0) != 0.1);
  REQUIRE(b.features(0, 1) == 1.0);

  // The converted directory reloads clean, and a second conversion into a
  // fresh directory produces the identical checksum.
  TempDir canon2;
  const DatasetBundle b2 = convert_dataset(raw.path, canon2.path);
  REQUIRE(b2.checksum == b.checksum);
}

TEST_CASE("feature container round trips exactly", "[datasets]") {
  Rng rng(5);
  Matrix x(4, 3);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      x(i, j) = static_cast<double>(static_cast<float>(rng.uniform(-10, 10)));
  TempDir dir;
  {
    auto out = detail::open_output(dir.path / "x.bin", true);
    write_features_gfea(out, x);
  }
  const Matrix r = read_features(dir.path / "x.bin");
  REQUIRE((r - x).cwiseAbs().maxCoeff() == 0.0);

  {
    auto out = detail::open_output(dir.path / "x.csv");
    write_features_csv(out, x);
  }
  const Matrix c = read_features(dir.path / "x.csv");
  REQUIRE((c - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("synthetic dataset is valid and deterministic", "[datasets]") {
  SynthConfig cfg;
  cfg.num_nodes = 300;
  cfg.valid_size = 40;
  cfg.test_size = 80;
  const DatasetBundle a = generate_synthetic_dataset(cfg);
  REQUIRE(a.graph.num_nodes == 300);
  REQUIRE(a.splits.valid.size() == 40);
  REQUIRE(a.splits.test.size() == 80);
  REQUIRE(a.splits.train.size() == 180);
  REQUIRE_NOTHROW(validate_bundle(a));

  const DatasetBundle b = generate_synthetic_dataset(cfg);
  REQUIRE((a.features - b.features).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.graph.col_indices == b.graph.col_indices);

  SynthConfig other = cfg;
  other.seed = cfg.seed + 1;
  const DatasetBundle c = generate_synthetic_dataset(other);
  REQUIRE((a.features - c.features).cwiseAbs().maxCoeff() > 0.0);

  // Class sizes follow the skew: descending counts.
  std::vector<int> counts(static_cast<std::size_t>(cfg.num_classes), 0);
  for (int y : a.labels) ++counts[static_cast<std::size_t>(y)];
  for (std::size_t i = 1; i < counts.size(); ++i) REQUIRE(counts[i] <= counts[i - 1]);
}

TEST_CASE("synthetic dataset round trips through the store", "[datasets]") {
  SynthConfig cfg;
  cfg.num_nodes = 200;
  cfg.valid_size = 30;
  cfg.test_size = 50;
  const DatasetBundle a = generate_synthetic_dataset(cfg);
  TempDir dir;
  save_dataset(a, dir.path);
  const DatasetBundle r = load_dataset(dir.path, "synthcite");
  REQUIRE((r.features - a.features).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(r.labels == a.labels);
  REQUIRE(r.splits.train == a.splits.train);
}
