#pragma once

// Independent reference implementations the tests check the library against.
// Everything here is deliberately naive: dense matrices, O(n^2) scans,
// central finite differences. Keep it that way.

#include <scatter/scatter.hpp>

#include <cmath>
#include <utility>
#include <vector>

namespace oracle {

using scatter::Matrix;
using scatter::NodeId;
using scatter::Vector;

// Dense N x N normalized operator, built entry by entry from the adjacency.
inline Matrix dense_operator(const scatter::SparseGraph& g, scatter::NormalizationKind norm) {
  const Eigen::Index n = g.num_nodes;
  Matrix a = Matrix::Zero(n, n);
  for (NodeId u = 0; u < g.num_nodes; ++u) {
    a(u, u) = 1.0;
    for (NodeId v : g.neighbors(u)) a(u, v) = 1.0;
  }
  Matrix s(n, n);
  if (norm == scatter::NormalizationKind::SymmetricWithSelfLoops) {
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = 1.0 / std::sqrt(a.row(i).sum());
    s = d.asDiagonal() * a * d.asDiagonal();
  } else {
    for (Eigen::Index i = 0; i < n; ++i) s.row(i) = a.row(i) / a.row(i).sum();
  }
  return s;
}

// X^(k) by materializing S and repeated dense multiplication.
inline Matrix dense_propagate(const scatter::SparseGraph& g, const Matrix& x, int k,
                              scatter::NormalizationKind norm) {
  const Matrix s = dense_operator(g, norm);
  Matrix cur = x;
  for (int i = 0; i < k; ++i) cur = s * cur;
  return cur;
}

// GP posterior through the explicit inverse of K + jitter I.
inline std::pair<Vector, Vector> dense_gp_predict(const Matrix& train_points,
                                                  const Vector& train_targets,
                                                  const Matrix& query,
                                                  const scatter::GpHyper& hyper, double jitter) {
  Matrix k = scatter::kernel_matrix(train_points, train_points, hyper);
  k.diagonal().array() += jitter;
  const Matrix k_inv = k.inverse();
  const Matrix k_star = scatter::kernel_matrix(query, train_points, hyper);
  Vector mean =
      (k_star * k_inv * (train_targets.array() - hyper.mu).matrix()).array() + hyper.mu;
  Vector var(query.rows());
  for (Eigen::Index i = 0; i < query.rows(); ++i)
    var(i) = 1.0 - (k_star.row(i) * k_inv * k_star.row(i).transpose())(0, 0);
  return {std::move(mean), std::move(var)};
}

// Central finite difference of f at x with step h.
template <typename F>
double central_diff(F f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

// Full-sort reference for top-k by score with (score desc, id asc) order.
inline std::vector<NodeId> top_k_sorted(std::vector<NodeId> nodes, std::vector<double> scores,
                                        std::size_t b) {
  std::vector<std::size_t> order(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    if (scores[a] != scores[c]) return scores[a] > scores[c];
    return nodes[a] < nodes[c];
  });
  b = std::min(b, nodes.size());
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < b; ++i) out.push_back(nodes[order[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

// Entropy recomputed with a separate accumulation order.
inline double entropy_of_row(const Matrix& probs, NodeId v) {
  double h = 0;
  for (Eigen::Index j = probs.cols() - 1; j >= 0; --j) {
    const double p = probs(v, j);
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

// Random connected-ish test graph: `extra` uniform edges on top of a path.
inline scatter::SparseGraph random_graph(scatter::NodeId n, int extra, scatter::Rng& rng) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 1; v < n; ++v) edges.push_back({v - 1, v});
  for (int i = 0; i < extra; ++i)
    edges.push_back({static_cast<NodeId>(rng.index(static_cast<std::size_t>(n))),
                     static_cast<NodeId>(rng.index(static_cast<std::size_t>(n)))});
  return scatter::build_graph(edges, n);
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, scatter::Rng& rng,
                            double lo = -1.0, double hi = 1.0) {
  Matrix x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = rng.uniform(lo, hi);
  return x;
}

// Rows are valid probability distributions.
inline Matrix random_prob_matrix(Eigen::Index rows, Eigen::Index cols, scatter::Rng& rng) {
  Matrix p(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double sum = 0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      p(i, j) = std::exp(rng.uniform(-2.0, 2.0));
      sum += p(i, j);
    }
    p.row(i) /= sum;
  }
  return p;
}

}  // namespace oracle
