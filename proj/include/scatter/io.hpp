#pragma once

#include "scatter/common.hpp"
#include "scatter/graph.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace scatter {

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error("truncated binary stream");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace detail

/// Edge-list file: one `u<TAB>v` pair per line, 0-indexed; `#` starts a
/// comment line; blank lines ignored.
inline std::vector<std::pair<NodeId, NodeId>> read_edge_list(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long long u = -1, v = -1;
    if (!(ss >> u >> v))
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed edge line");
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  return edges;
}

/// Writes each undirected edge once with the smaller endpoint first.
inline void write_edge_list(const std::filesystem::path& path, const SparseGraph& g) {
  auto out = detail::open_output(path);
  for (NodeId u = 0; u < g.num_nodes; ++u)
    for (NodeId v : g.neighbors(u))
      if (u < v) out << u << '\t' << v << '\n';
}

inline constexpr char kFeatureMagic[4] = {'G', 'F', 'E', 'A'};

/// GFEA record: magic "GFEA", little-endian u64 N, u64 d, then N*d
/// little-endian f32, row-major. Values are promoted to f64 in memory.
inline Matrix read_features_gfea(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw std::runtime_error("bad GFEA magic");
  const auto n = detail::read_le<std::uint64_t>(in);
  const auto d = detail::read_le<std::uint64_t>(in);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<unsigned char> buf(static_cast<std::size_t>(d) * 4);
  for (std::uint64_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw std::runtime_error("truncated GFEA payload");
    for (std::uint64_t j = 0; j < d; ++j) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(buf[j * 4 + static_cast<std::uint64_t>(b)]) << (8 * b);
      float f;
      std::memcpy(&f, &bits, 4);
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(f);
    }
  }
  return x;
}

inline void write_features_gfea(std::ostream& out, const Matrix& x) {
  out.write(kFeatureMagic, 4);
  detail::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(x.rows()));
  detail::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const float f = static_cast<float>(x(i, j));
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      detail::write_le<std::uint32_t>(out, bits);
    }
}

inline Matrix read_features_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty feature CSV");
  std::istringstream header(line);
  long long n = 0, d = 0;
  char comma = 0;
  if (!(header >> n >> comma >> d) || comma != ',')
    throw std::runtime_error("feature CSV header must be `N,d`");
  Matrix x(n, d);
  for (long long i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("feature CSV truncated at row " + std::to_string(i));
    std::istringstream ss(line);
    std::string cell;
    for (long long j = 0; j < d; ++j) {
      if (!std::getline(ss, cell, ','))
        throw std::runtime_error("feature CSV row " + std::to_string(i) + " too short");
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::stod(cell);
    }
  }
  return x;
}

inline void write_features_csv(std::ostream& out, const Matrix& x) {
  out << x.rows() << ',' << x.cols() << '\n';
  std::ostringstream ss;
  ss.precision(17);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    ss.str("");
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) ss << ',';
      ss << x(i, j);
    }
    out << ss.str() << '\n';
  }
}

/// Feature files are sniffed by magic: GFEA binary, otherwise CSV.
inline Matrix read_features(const std::filesystem::path& path) {
  auto in = detail::open_input(path, true);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  if (std::memcmp(magic, kFeatureMagic, 4) == 0) return read_features_gfea(in);
  return read_features_csv(in);
}

inline std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    labels.push_back(std::stoi(line));
  }
  return labels;
}

inline void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  auto out = detail::open_output(path);
  for (int c : labels) out << c << '\n';
}

struct Splits {
  std::vector<NodeId> train, valid, test;
};

inline Splits read_splits(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  in >> j;
  Splits s;
  for (auto v : j.at("train")) s.train.push_back(v.get<NodeId>());
  for (auto v : j.at("valid")) s.valid.push_back(v.get<NodeId>());
  for (auto v : j.at("test")) s.test.push_back(v.get<NodeId>());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.valid.begin(), s.valid.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

inline void write_splits(const std::filesystem::path& path, const Splits& s) {
  nlohmann::json j;
  j["train"] = s.train;
  j["valid"] = s.valid;
  j["test"] = s.test;
  auto out = detail::open_output(path);
  out << j.dump() << '\n';
}

}  // namespace scatter
