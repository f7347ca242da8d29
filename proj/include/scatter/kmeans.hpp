#pragma once

#include "scatter/common.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace scatter {

struct ClusterModel {
  int k = 0;
  Matrix centers;               // k x d
  std::vector<int> assignment;  // per point, in [0, k)
  double inertia = 0;           // sum of squared L2 distances to assigned centers
};

namespace detail {

inline double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

}  // namespace detail

/// k-means++ seeding (first center uniform, then D^2 sampling) followed by
/// Lloyd iterations until assignments stabilize or max_iters.
///
/// Deterministic per seed. An empty cluster is reseeded at the point
/// farthest from its currently assigned center. k == n is the degenerate
/// case: every point becomes its own singleton cluster, exactly.
///
/// inertia_trace, when given, receives the inertia after seeding and after
/// every Lloyd iteration (a non-increasing sequence).
inline ClusterModel kmeans_pp(const Matrix& points, int k, std::uint64_t seed,
                              int max_iters = 100,
                              std::vector<double>* inertia_trace = nullptr) {
  const Eigen::Index n = points.rows();
  if (n == 0) throw std::invalid_argument("kmeans_pp: no points");
  if (k <= 0) throw std::invalid_argument("kmeans_pp: k must be positive");
  if (k > n) throw std::invalid_argument("kmeans_pp: k exceeds number of points");

  ClusterModel model;
  model.k = k;

  if (k == n) {
    model.centers = points;
    model.assignment.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) model.assignment[static_cast<std::size_t>(i)] = static_cast<int>(i);
    model.inertia = 0;
    if (inertia_trace) inertia_trace->push_back(0);
    return model;
  }

  Rng rng(seed);
  model.centers.resize(k, points.cols());
  std::vector<char> is_center(static_cast<std::size_t>(n), 0);

  // Seeding.
  {
    std::size_t first = rng.index(static_cast<std::size_t>(n));
    model.centers.row(0) = points.row(static_cast<Eigen::Index>(first));
    is_center[first] = 1;
  }
  std::vector<double> min_d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    min_d2[static_cast<std::size_t>(i)] = detail::sq_dist(points, i, model.centers, 0);
  for (int c = 1; c < k; ++c) {
    double total = 0;
    for (double w : min_d2) total += w;
    std::size_t chosen;
    if (total > 0) {
      chosen = rng.discrete(min_d2, total);
      // D^2 sampling cannot land on a previous center (weight 0), but a
      // duplicate point can; fall through to the deterministic pick then.
      if (is_center[chosen]) {
        chosen = 0;
        while (is_center[chosen]) ++chosen;
      }
    } else {
      chosen = 0;  // all remaining mass is zero (duplicate points)
      while (is_center[chosen]) ++chosen;
    }
    is_center[chosen] = 1;
    model.centers.row(c) = points.row(static_cast<Eigen::Index>(chosen));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d2 = detail::sq_dist(points, i, model.centers, c);
      auto& slot = min_d2[static_cast<std::size_t>(i)];
      if (d2 < slot) slot = d2;
    }
  }

  auto assign_all = [&](std::vector<int>& assignment) {
    double inertia = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d2 = detail::sq_dist(points, i, model.centers, 0);
      for (int c = 1; c < k; ++c) {
        const double d2 = detail::sq_dist(points, i, model.centers, c);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      assignment[static_cast<std::size_t>(i)] = best;
      inertia += best_d2;
    }
    return inertia;
  };

  model.assignment.resize(static_cast<std::size_t>(n));
  model.inertia = assign_all(model.assignment);
  if (inertia_trace) inertia_trace->push_back(model.inertia);

  std::vector<int> counts(static_cast<std::size_t>(k));
  std::vector<int> next(static_cast<std::size_t>(n));
  for (int iter = 0; iter < max_iters; ++iter) {
    // Update step: centers become member means.
    Matrix sums = Matrix::Zero(k, points.cols());
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = model.assignment[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        model.centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];

    // Reseed empty clusters at the point farthest from its assigned center.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      double far_d2 = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = model.assignment[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(a)] <= 1) continue;  // keep donor clusters nonempty
        const double d2 = detail::sq_dist(points, i, model.centers, a);
        if (d2 > far_d2) {
          far_d2 = d2;
          far = i;
        }
      }
      if (far < 0) continue;  // fewer distinct points than clusters
      --counts[static_cast<std::size_t>(model.assignment[static_cast<std::size_t>(far)])];
      model.centers.row(c) = points.row(far);
      model.assignment[static_cast<std::size_t>(far)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
    }

    const double inertia = assign_all(next);
    const bool stable = std::equal(next.begin(), next.end(), model.assignment.begin());
    model.assignment = next;
    model.inertia = inertia;
    if (inertia_trace) inertia_trace->push_back(inertia);
    if (stable) break;
  }
  return model;
}

/// For each cluster in index order, picks the member nearest its center
/// (ties: lowest node id). A member already taken by an earlier cluster —
/// possible only with duplicate feature rows — falls through to the next
/// nearest unselected member. Empty clusters contribute nothing. The result
/// is sorted ascending by node id.
inline std::vector<NodeId> select_nearest_to_centers(const Matrix& points,
                                                     const std::vector<NodeId>& node_ids,
                                                     const ClusterModel& model) {
  if (points.rows() != static_cast<Eigen::Index>(node_ids.size()))
    throw std::invalid_argument("select_nearest_to_centers: points/node_ids size mismatch");
  if (model.assignment.size() != node_ids.size())
    throw std::invalid_argument("select_nearest_to_centers: model does not match points");

  std::vector<char> taken(node_ids.size(), 0);
  std::vector<NodeId> selected;
  selected.reserve(static_cast<std::size_t>(model.k));
  for (int c = 0; c < model.k; ++c) {
    std::size_t best = node_ids.size();
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
      if (model.assignment[i] != c || taken[i]) continue;
      const double d2 =
          (points.row(static_cast<Eigen::Index>(i)) - model.centers.row(c)).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && best < node_ids.size() && node_ids[i] < node_ids[best])) {
        best_d2 = d2;
        best = i;
      }
    }
    if (best < node_ids.size()) {
      taken[best] = 1;
      selected.push_back(node_ids[best]);
    }
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

}  // namespace scatter
