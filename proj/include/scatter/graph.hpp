#pragma once

#include "scatter/common.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace scatter {

/// Undirected graph in CSR form. Immutable after build_graph; neighbor lists
/// are sorted, deduplicated, and stored in both directions. Self-loops from
/// the input are dropped: the normalized operator contributes its own
/// diagonal, see propagate_features.
struct SparseGraph {
  NodeId num_nodes = 0;
  std::vector<std::int64_t> row_offsets;  // length num_nodes + 1
  std::vector<NodeId> col_indices;        // length 2 * |E|
  std::vector<std::int64_t> degrees;      // neighbor counts, no self-loop

  std::span<const NodeId> neighbors(NodeId u) const {
    return {col_indices.data() + row_offsets[static_cast<std::size_t>(u)],
            col_indices.data() + row_offsets[static_cast<std::size_t>(u) + 1]};
  }

  std::int64_t num_undirected_edges() const {
    return static_cast<std::int64_t>(col_indices.size()) / 2;
  }
};

enum class NormalizationKind {
  SymmetricWithSelfLoops,      // D̃^{-1/2} (A + I) D̃^{-1/2}, the GCN operator
  RowStochasticWithSelfLoops,  // D̃^{-1} (A + I)
};

inline const char* to_string(NormalizationKind k) {
  return k == NormalizationKind::SymmetricWithSelfLoops ? "symmetric" : "row_stochastic";
}

inline SparseGraph build_graph(const std::vector<std::pair<NodeId, NodeId>>& edges,
                               NodeId num_nodes) {
  if (num_nodes < 0) throw std::invalid_argument("build_graph: negative node count");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [u, v] = edges[i];
    if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes) {
      throw std::invalid_argument("build_graph: node id out of range at edge index " +
                                  std::to_string(i) + " (" + std::to_string(u) + "," +
                                  std::to_string(v) + ")");
    }
  }

  const auto n = static_cast<std::size_t>(num_nodes);
  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& [u, v] : edges) {
    if (u == v) continue;
    adj[static_cast<std::size_t>(u)].push_back(v);
    adj[static_cast<std::size_t>(v)].push_back(u);
  }

  SparseGraph g;
  g.num_nodes = num_nodes;
  g.row_offsets.assign(n + 1, 0);
  g.degrees.assign(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    auto& nb = adj[u];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    g.degrees[u] = static_cast<std::int64_t>(nb.size());
    g.row_offsets[u + 1] = g.row_offsets[u] + g.degrees[u];
  }
  g.col_indices.reserve(static_cast<std::size_t>(g.row_offsets[n]));
  for (std::size_t u = 0; u < n; ++u)
    g.col_indices.insert(g.col_indices.end(), adj[u].begin(), adj[u].end());
  return g;
}

/// One application of the self-loop-augmented normalized adjacency: Y = S X.
/// Accumulation order is fixed (ascending neighbor id), so results are
/// bitwise reproducible.
inline Matrix apply_normalized(const SparseGraph& g, const Matrix& x,
                               NormalizationKind norm) {
  if (x.rows() != g.num_nodes)
    throw std::invalid_argument("apply_normalized: feature rows != num_nodes");
  const auto n = static_cast<std::size_t>(g.num_nodes);
  Matrix y(x.rows(), x.cols());
  if (norm == NormalizationKind::SymmetricWithSelfLoops) {
    Vector inv_sqrt(g.num_nodes);
    for (std::size_t u = 0; u < n; ++u)
      inv_sqrt[static_cast<Eigen::Index>(u)] =
          1.0 / std::sqrt(static_cast<double>(g.degrees[u] + 1));
    for (std::size_t u = 0; u < n; ++u) {
      const auto ui = static_cast<Eigen::Index>(u);
      const double su = inv_sqrt[ui];
      y.row(ui) = (su * su) * x.row(ui);
      for (NodeId v : g.neighbors(static_cast<NodeId>(u)))
        y.row(ui) += (su * inv_sqrt[v]) * x.row(v);
    }
  } else {
    for (std::size_t u = 0; u < n; ++u) {
      const auto ui = static_cast<Eigen::Index>(u);
      y.row(ui) = x.row(ui);
      for (NodeId v : g.neighbors(static_cast<NodeId>(u))) y.row(ui) += x.row(v);
      y.row(ui) /= static_cast<double>(g.degrees[u] + 1);
    }
  }
  return y;
}

/// k-step propagation X^(k) = S^k X, computed iteratively (never by
/// materializing S^k). k = 0 returns a copy of X.
inline Matrix propagate_features(const SparseGraph& g, const Matrix& x, int k,
                                 NormalizationKind norm) {
  if (k < 0) throw std::invalid_argument("propagate_features: k must be >= 0");
  if (x.rows() != g.num_nodes)
    throw std::invalid_argument("propagate_features: feature rows != num_nodes");
  Matrix cur = x;
  for (int step = 0; step < k; ++step) cur = apply_normalized(g, cur, norm);
  return cur;
}

}  // namespace scatter
