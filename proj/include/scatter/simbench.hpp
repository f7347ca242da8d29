#pragma once

#include "scatter/common.hpp"
#include "scatter/gp.hpp"
#include "scatter/graph.hpp"
#include "scatter/kmeans.hpp"
#include "scatter/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace scatter {

/// Default length-scale for the simulation GP; picked by tools/theta_sweep so
/// the cross-cluster kernel terms stay below 0.01 with the default supports.
inline constexpr double kDefaultSimTheta = 16.0;

struct SimConfig {
  int nodes_per_cluster = 100;
  std::pair<double, double> cluster1_support{-15.0, -5.0};
  std::pair<double, double> cluster2_support{8.0, 12.0};
  int within_cluster_neighbors = 2;
  double p_inter = 0.0;
  int labels_per_round = 8;
  int candidate_pool = 80;
  std::uint64_t seed = 0;
  double gp_theta = kDefaultSimTheta;
  int rounds = 1;

  void validate() const {
    if (nodes_per_cluster <= within_cluster_neighbors)
      throw std::invalid_argument("SimConfig: cluster too small for neighbor count");
    if (within_cluster_neighbors < 0)
      throw std::invalid_argument("SimConfig: negative neighbor count");
    if (cluster1_support.first >= cluster1_support.second ||
        cluster2_support.first >= cluster2_support.second)
      throw std::invalid_argument("SimConfig: degenerate support interval");
    const bool disjoint = cluster1_support.second < cluster2_support.first ||
                          cluster2_support.second < cluster1_support.first;
    if (!disjoint) throw std::invalid_argument("SimConfig: supports must be disjoint");
    if (p_inter < 0 || p_inter > 1) throw std::invalid_argument("SimConfig: p_inter outside [0,1]");
    if (labels_per_round < 1) throw std::invalid_argument("SimConfig: labels_per_round must be >= 1");
    if (candidate_pool < labels_per_round)
      throw std::invalid_argument("SimConfig: candidate_pool below labels_per_round");
    if (!(gp_theta > 0)) throw std::invalid_argument("SimConfig: gp_theta must be > 0");
    if (rounds < 1) throw std::invalid_argument("SimConfig: rounds must be >= 1");
  }
};

struct SimGraph {
  SparseGraph graph;
  Matrix features;            // N x 1, raw draws
  Vector targets;             // y_i = (row-stochastic 1-step propagated x)^2
  std::vector<int> cluster_of;
};

/// Two clusters of 1-D features on disjoint supports. Every node picks
/// `within_cluster_neighbors` distinct partners in its own cluster; every
/// cluster-1 node links to one uniform cluster-2 node with probability
/// p_inter. Cluster 1 owns ids [0, n), cluster 2 owns [n, 2n).
inline SimGraph generate_sim_graph(const SimConfig& cfg) {
  cfg.validate();
  const int n = cfg.nodes_per_cluster;
  const NodeId total = static_cast<NodeId>(2 * n);
  Rng rng(cfg.seed);

  SimGraph sim;
  sim.features.resize(total, 1);
  sim.cluster_of.resize(static_cast<std::size_t>(total));
  for (int i = 0; i < n; ++i) {
    sim.features(i, 0) = rng.uniform(cfg.cluster1_support.first, cfg.cluster1_support.second);
    sim.cluster_of[static_cast<std::size_t>(i)] = 0;
  }
  for (int i = 0; i < n; ++i) {
    sim.features(n + i, 0) = rng.uniform(cfg.cluster2_support.first, cfg.cluster2_support.second);
    sim.cluster_of[static_cast<std::size_t>(n + i)] = 1;
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(static_cast<std::size_t>(total) *
                    static_cast<std::size_t>(cfg.within_cluster_neighbors) +
                static_cast<std::size_t>(n));
  std::vector<NodeId> picked;
  for (NodeId v = 0; v < total; ++v) {
    const NodeId base = v < n ? 0 : static_cast<NodeId>(n);
    picked.clear();
    while (static_cast<int>(picked.size()) < cfg.within_cluster_neighbors) {
      const NodeId u = base + static_cast<NodeId>(rng.index(static_cast<std::size_t>(n)));
      if (u == v || std::find(picked.begin(), picked.end(), u) != picked.end()) continue;
      picked.push_back(u);
      edges.emplace_back(v, u);
    }
  }
  for (NodeId v = 0; v < static_cast<NodeId>(n); ++v) {
    if (!rng.bernoulli(cfg.p_inter)) continue;
    const NodeId u = static_cast<NodeId>(n + rng.index(static_cast<std::size_t>(n)));
    edges.emplace_back(v, u);
  }

  sim.graph = build_graph(edges, total);
  const Matrix x1 = propagate_features(sim.graph, sim.features, 1,
                                       NormalizationKind::RowStochasticWithSelfLoops);
  sim.targets = x1.col(0).array().square();
  return sim;
}

struct SimResult {
  double mse_max_uncertainty = 0;
  double mse_diverse = 0;
  // [method][cluster]; method 0 = max uncertainty, 1 = diverse.
  std::array<std::array<double, 2>, 2> per_cluster_mse{};
  double ratio = 0;
  std::vector<NodeId> labeled_max_uncertainty;  // acquisition order
  std::vector<NodeId> labeled_diverse;
  NormalizationKind target_norm = NormalizationKind::RowStochasticWithSelfLoops;
};

namespace detail {

inline std::vector<NodeId> sim_initial_labels(const Matrix& coords,
                                              const std::vector<int>& cluster_of) {
  std::vector<NodeId> out;
  for (int c = 0; c < 2; ++c) {
    double mean = 0;
    int count = 0;
    for (std::size_t i = 0; i < cluster_of.size(); ++i)
      if (cluster_of[i] == c) {
        mean += coords(static_cast<Eigen::Index>(i), 0);
        ++count;
      }
    mean /= count;
    NodeId best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cluster_of.size(); ++i) {
      if (cluster_of[i] != c) continue;
      const double d = std::abs(coords(static_cast<Eigen::Index>(i), 0) - mean);
      if (d < best_d) {
        best_d = d;
        best = static_cast<NodeId>(i);
      }
    }
    out.push_back(best);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Runs MaxUncertainty and DiverseUncertainty GP arms on one shared graph.
/// Both start from the node nearest each true cluster's propagated-feature
/// mean, then label `labels_per_round` nodes per round; uncertainty is the
/// GP posterior variance over unlabeled nodes.
inline SimResult run_simulation(const SimConfig& cfg) {
  cfg.validate();
  const SimGraph sim = generate_sim_graph(cfg);
  const NodeId total = sim.graph.num_nodes;
  const Matrix coords = propagate_features(sim.graph, sim.features, 1,
                                           NormalizationKind::RowStochasticWithSelfLoops);

  GpHyper hyper;
  hyper.theta = Vector::Constant(1, cfg.gp_theta);
  hyper.mu = sim.targets.mean();

  const std::vector<NodeId> initial = detail::sim_initial_labels(coords, sim.cluster_of);

  auto run_arm = [&](bool diverse) {
    std::vector<NodeId> labeled = initial;  // acquisition order
    std::vector<NodeId> sorted = initial;
    std::sort(sorted.begin(), sorted.end());

    for (int round = 1; round <= cfg.rounds; ++round) {
      std::vector<NodeId> pool;
      for (NodeId v = 0; v < total; ++v)
        if (!std::binary_search(sorted.begin(), sorted.end(), v)) pool.push_back(v);
      if (pool.empty()) break;

      const Matrix pts = detail::gather_rows(coords, sorted);
      Vector y(static_cast<Eigen::Index>(sorted.size()));
      for (std::size_t i = 0; i < sorted.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = sim.targets(sorted[i]);
      const GpPosterior post = gp_fit(pts, y, hyper);
      const GpPrediction pred = gp_predict(post, detail::gather_rows(coords, pool), hyper);

      std::vector<double> variance(pred.variance.data(),
                                   pred.variance.data() + pred.variance.size());
      const std::size_t b = std::min<std::size_t>(
          static_cast<std::size_t>(cfg.labels_per_round), pool.size());
      std::vector<NodeId> picked;
      if (diverse) {
        const std::size_t c = std::min<std::size_t>(
            std::max<std::size_t>(static_cast<std::size_t>(cfg.candidate_pool), b), pool.size());
        const std::vector<NodeId> cand = detail::top_k_by_score(pool, variance, c);
        const Matrix cand_pts = detail::gather_rows(coords, cand);
        const ClusterModel model = kmeans_pp(cand_pts, static_cast<int>(b),
                                             sub_seed(cfg.seed, 100 + static_cast<std::uint64_t>(round)));
        picked = select_nearest_to_centers(cand_pts, cand, model);
      } else {
        picked = detail::top_k_by_score(pool, variance, b);
      }

      labeled.insert(labeled.end(), picked.begin(), picked.end());
      std::vector<NodeId> merged;
      merged.reserve(sorted.size() + picked.size());
      std::merge(sorted.begin(), sorted.end(), picked.begin(), picked.end(),
                 std::back_inserter(merged));
      sorted = std::move(merged);
    }

    // Final fit and full-graph MSE.
    const Matrix pts = detail::gather_rows(coords, sorted);
    Vector y(static_cast<Eigen::Index>(sorted.size()));
    for (std::size_t i = 0; i < sorted.size(); ++i)
      y(static_cast<Eigen::Index>(i)) = sim.targets(sorted[i]);
    const GpPosterior post = gp_fit(pts, y, hyper);
    const GpPrediction pred = gp_predict(post, coords, hyper);

    double sse = 0;
    std::array<double, 2> cluster_sse{0, 0};
    std::array<int, 2> cluster_n{0, 0};
    for (NodeId v = 0; v < total; ++v) {
      const double e = pred.mean(v) - sim.targets(v);
      sse += e * e;
      cluster_sse[static_cast<std::size_t>(sim.cluster_of[static_cast<std::size_t>(v)])] += e * e;
      ++cluster_n[static_cast<std::size_t>(sim.cluster_of[static_cast<std::size_t>(v)])];
    }
    struct ArmOut {
      double mse;
      std::array<double, 2> per_cluster;
      std::vector<NodeId> labeled;
    } out;
    out.mse = sse / total;
    out.per_cluster = {cluster_sse[0] / cluster_n[0], cluster_sse[1] / cluster_n[1]};
    out.labeled = labeled;
    return out;
  };

  const auto max_u = run_arm(false);
  const auto div = run_arm(true);

  SimResult res;
  res.mse_max_uncertainty = max_u.mse;
  res.mse_diverse = div.mse;
  res.per_cluster_mse[0] = max_u.per_cluster;
  res.per_cluster_mse[1] = div.per_cluster;
  res.ratio = max_u.mse / div.mse;
  res.labeled_max_uncertainty = max_u.labeled;
  res.labeled_diverse = div.labeled;
  return res;
}

}  // namespace scatter
