#pragma once

#include "scatter/common.hpp"
#include "scatter/graph.hpp"
#include "scatter/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace scatter {

struct DatasetBundle {
  SparseGraph graph;
  Matrix features;
  std::vector<int> labels;
  Splits splits;
  std::string name;
  int num_classes = 0;
  std::uint64_t checksum = 0;
  std::string source;  // converter provenance, free-form
};

struct DatasetStats {
  NodeId num_nodes;
  int num_classes;
  std::int64_t train_size;  // after train-split expansion
};

/// Published statistics for the benchmark graphs; loads of datasets carrying
/// these names must match them.
inline const std::map<std::string, DatasetStats>& known_dataset_stats() {
  static const std::map<std::string, DatasetStats> stats = {
      {"cora", {2708, 7, 1208}},
      {"citeseer", {3327, 6, 1827}},
      {"pubmed", {19717, 3, 18217}},
      {"corafull", {19793, 70, 18293}},
  };
  return stats;
}

namespace detail {

inline std::uint64_t hash_file(const std::filesystem::path& p, std::uint64_t h) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string s = buf.str();
  return fnv1a64(s, h);
}

inline void check_sorted_unique(const std::vector<NodeId>& v, NodeId n, const std::string& what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0 || v[i] >= n)
      throw std::runtime_error(what + ": node id " + std::to_string(v[i]) + " out of range");
    if (i > 0 && v[i] <= v[i - 1])
      throw std::runtime_error(what + ": ids must be strictly ascending");
  }
}

}  // namespace detail

/// FNV-1a over the four content files, in layout order.
inline std::uint64_t dataset_checksum(const std::filesystem::path& dir) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char* f : {"edges.tsv", "features.bin", "labels.txt", "splits.json"})
    h = detail::hash_file(dir / f, h);
  return h;
}

inline void validate_bundle(const DatasetBundle& b) {
  const NodeId n = b.graph.num_nodes;
  if (b.features.rows() != n) throw std::runtime_error(b.name + ": feature rows != num_nodes");
  if (static_cast<NodeId>(b.labels.size()) != n)
    throw std::runtime_error(b.name + ": label count != num_nodes");
  if (b.num_classes < 1) throw std::runtime_error(b.name + ": num_classes must be >= 1");
  for (std::size_t i = 0; i < b.labels.size(); ++i)
    if (b.labels[i] < 0 || b.labels[i] >= b.num_classes)
      throw std::runtime_error(b.name + ": label of node " + std::to_string(i) +
                               " outside [0, C)");
  detail::check_sorted_unique(b.splits.train, n, b.name + " train split");
  detail::check_sorted_unique(b.splits.valid, n, b.name + " valid split");
  detail::check_sorted_unique(b.splits.test, n, b.name + " test split");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto* split : {&b.splits.train, &b.splits.valid, &b.splits.test})
    for (NodeId v : *split) {
      if (seen[static_cast<std::size_t>(v)])
        throw std::runtime_error(b.name + ": splits overlap at node " + std::to_string(v));
      seen[static_cast<std::size_t>(v)] = 1;
    }

  auto it = known_dataset_stats().find(b.name);
  if (it != known_dataset_stats().end()) {
    const DatasetStats& s = it->second;
    if (n != s.num_nodes)
      throw std::runtime_error(b.name + ": expected " + std::to_string(s.num_nodes) +
                               " nodes, found " + std::to_string(n));
    if (b.num_classes != s.num_classes)
      throw std::runtime_error(b.name + ": expected " + std::to_string(s.num_classes) +
                               " classes, found " + std::to_string(b.num_classes));
    if (static_cast<std::int64_t>(b.splits.train.size()) != s.train_size)
      throw std::runtime_error(b.name + ": expected train size " +
                               std::to_string(s.train_size) + ", found " +
                               std::to_string(b.splits.train.size()));
  }
}

inline DatasetBundle load_dataset(const std::filesystem::path& dir, const std::string& name = "") {
  for (const char* f : {"edges.tsv", "features.bin", "labels.txt", "splits.json", "meta.json"})
    if (!std::filesystem::exists(dir / f))
      throw std::runtime_error("load_dataset: missing " + (dir / f).string());

  nlohmann::json meta;
  {
    std::ifstream in(dir / "meta.json");
    in >> meta;
  }
  DatasetBundle b;
  b.name = meta.at("name").get<std::string>();
  if (!name.empty() && b.name != name)
    throw std::runtime_error("load_dataset: expected dataset '" + name + "', meta says '" +
                             b.name + "'");
  b.num_classes = meta.at("num_classes").get<int>();
  if (meta.contains("source")) b.source = meta["source"].get<std::string>();

  b.features = read_features(dir / "features.bin");
  const NodeId n = static_cast<NodeId>(b.features.rows());
  const auto edges = read_edge_list(dir / "edges.tsv");
  b.graph = build_graph(edges, n);
  b.labels = read_labels(dir / "labels.txt");
  b.splits = read_splits(dir / "splits.json");

  b.checksum = dataset_checksum(dir);
  const std::string expect = meta.at("checksum").get<std::string>();
  if (to_hex(b.checksum) != expect)
    throw std::runtime_error(b.name + ": checksum mismatch, files hash to " + to_hex(b.checksum) +
                             " but meta records " + expect);

  validate_bundle(b);
  return b;
}

/// Writes the five-file layout and stamps meta.json with the content hash.
inline void save_dataset(const DatasetBundle& b, const std::filesystem::path& dir) {
  validate_bundle(b);
  std::filesystem::create_directories(dir);
  write_edge_list(dir / "edges.tsv", b.graph);
  {
    auto out = detail::open_output(dir / "features.bin", true);
    write_features_gfea(out, b.features);
  }
  write_labels(dir / "labels.txt", b.labels);
  write_splits(dir / "splits.json", b.splits);

  nlohmann::json meta;
  meta["name"] = b.name;
  meta["num_classes"] = b.num_classes;
  meta["checksum"] = to_hex(dataset_checksum(dir));
  if (!b.source.empty()) meta["source"] = b.source;
  std::ofstream out(dir / "meta.json");
  out << meta.dump(2) << '\n';
}

/// Moves every node outside valid and test into train. Idempotent.
inline DatasetBundle expand_train_split(DatasetBundle b) {
  const NodeId n = b.graph.num_nodes;
  std::vector<char> held(static_cast<std::size_t>(n), 0);
  for (NodeId v : b.splits.valid) held[static_cast<std::size_t>(v)] = 1;
  for (NodeId v : b.splits.test) held[static_cast<std::size_t>(v)] = 1;
  b.splits.train.clear();
  for (NodeId v = 0; v < n; ++v)
    if (!held[static_cast<std::size_t>(v)]) b.splits.train.push_back(v);
  return b;
}

/// Converts a raw text export (edges.tsv, features.csv or features.bin,
/// labels.txt, splits.json, meta.json with at least a name) into the
/// canonical layout, expanding the train split and stamping the checksum.
inline DatasetBundle convert_dataset(const std::filesystem::path& raw_dir,
                                     const std::filesystem::path& out_dir) {
  nlohmann::json meta;
  {
    std::ifstream in(raw_dir / "meta.json");
    if (!in) throw std::runtime_error("convert_dataset: missing " + (raw_dir / "meta.json").string());
    in >> meta;
  }
  DatasetBundle b;
  b.name = meta.at("name").get<std::string>();
  if (meta.contains("source")) b.source = meta["source"].get<std::string>();

  const std::filesystem::path feat_csv = raw_dir / "features.csv";
  const std::filesystem::path feat_bin = raw_dir / "features.bin";
  b.features = read_features(std::filesystem::exists(feat_csv) ? feat_csv : feat_bin);
  // Disk format is f32; quantize now so in-memory equals the round trip.
  for (Eigen::Index i = 0; i < b.features.rows(); ++i)
    for (Eigen::Index j = 0; j < b.features.cols(); ++j)
      b.features(i, j) = static_cast<double>(static_cast<float>(b.features(i, j)));

  const NodeId n = static_cast<NodeId>(b.features.rows());
  b.graph = build_graph(read_edge_list(raw_dir / "edges.tsv"), n);
  b.labels = read_labels(raw_dir / "labels.txt");
  b.splits = read_splits(raw_dir / "splits.json");
  b.num_classes = meta.contains("num_classes")
                      ? meta["num_classes"].get<int>()
                      : *std::max_element(b.labels.begin(), b.labels.end()) + 1;

  b = expand_train_split(std::move(b));
  save_dataset(b, out_dir);
  return load_dataset(out_dir, b.name);
}

}  // namespace scatter
