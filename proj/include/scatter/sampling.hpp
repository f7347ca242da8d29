#pragma once

#include "scatter/common.hpp"
#include "scatter/gcn.hpp"
#include "scatter/graph.hpp"
#include "scatter/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace scatter {

struct Budget {
  std::int64_t total = 0;       // B
  std::int64_t initial = 0;     // B0
  int rounds = 1;               // T
  double redundancy = 1.0;      // r

  void validate() const {
    if (initial < 1) throw std::invalid_argument("Budget: initial must be >= 1");
    if (initial > total) throw std::invalid_argument("Budget: initial exceeds total");
    if (rounds < 1) throw std::invalid_argument("Budget: rounds must be >= 1");
    if (!(redundancy >= 1.0)) throw std::invalid_argument("Budget: redundancy must be >= 1");
  }
};

/// Answers label queries for nodes in its queryable set, at most `budget`
/// of them, each node once. Selection code sees labels only through this.
class LabelOracle {
 public:
  LabelOracle(std::vector<int> labels, std::vector<NodeId> queryable, std::int64_t budget)
      : labels_(std::move(labels)), queryable_(std::move(queryable)), budget_(budget) {
    std::sort(queryable_.begin(), queryable_.end());
    queryable_.erase(std::unique(queryable_.begin(), queryable_.end()), queryable_.end());
    for (NodeId v : queryable_)
      if (v < 0 || v >= static_cast<NodeId>(labels_.size()))
        throw std::invalid_argument("LabelOracle: queryable node " + std::to_string(v) +
                                    " outside label array");
  }

  int query(NodeId v) {
    if (spent_ >= budget_) throw std::runtime_error("LabelOracle: budget exhausted");
    if (!is_queryable(v))
      throw std::invalid_argument("LabelOracle: node " + std::to_string(v) + " not queryable");
    if (revealed_.count(v))
      throw std::invalid_argument("LabelOracle: node " + std::to_string(v) + " already queried");
    ++spent_;
    const int y = labels_[static_cast<std::size_t>(v)];
    revealed_.emplace(v, y);
    return y;
  }

  bool is_queryable(NodeId v) const {
    return std::binary_search(queryable_.begin(), queryable_.end(), v);
  }
  const std::vector<NodeId>& queryable() const { return queryable_; }
  const LabelMap& revealed() const { return revealed_; }
  std::int64_t spent() const { return spent_; }
  std::int64_t remaining() const { return budget_ - spent_; }

 private:
  std::vector<int> labels_;
  std::vector<NodeId> queryable_;
  std::int64_t budget_ = 0;
  std::int64_t spent_ = 0;
  LabelMap revealed_;
};

/// phi(v) = -sum_j p_vj ln p_vj, with 0 ln 0 = 0. Returned in the order of
/// `nodes`.
inline std::vector<double> compute_entropy(const ProbabilityMatrix& probs,
                                           std::span<const NodeId> nodes) {
  std::vector<double> out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) {
    if (v < 0 || v >= probs.rows())
      throw std::invalid_argument("compute_entropy: node " + std::to_string(v) +
                                  " outside probability rows");
    double h = 0;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double p = probs(v, j);
      if (p > 0) h -= p * std::log(p);
    }
    out.push_back(h);
  }
  return out;
}

namespace detail {

// Top-b node ids by score, ties to the lower id. Result ascending by id.
inline std::vector<NodeId> top_k_by_score(std::span<const NodeId> nodes,
                                          std::span<const double> scores, std::size_t b) {
  b = std::min(b, nodes.size());
  std::vector<std::size_t> order(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(b), order.end(),
                    [&](std::size_t a, std::size_t c) {
                      if (scores[a] != scores[c]) return scores[a] > scores[c];
                      return nodes[a] < nodes[c];
                    });
  std::vector<NodeId> out;
  out.reserve(b);
  for (std::size_t i = 0; i < b; ++i) out.push_back(nodes[order[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

inline Matrix gather_rows(const Matrix& src, std::span<const NodeId> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), src.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= src.rows())
      throw std::invalid_argument("gather_rows: node id outside matrix rows");
    out.row(static_cast<Eigen::Index>(i)) = src.row(ids[i]);
  }
  return out;
}

}  // namespace detail

/// Uniform sample without replacement, deterministic per seed. Ascending ids.
inline std::vector<NodeId> random_select(std::span<const NodeId> pool, std::size_t b,
                                         std::uint64_t seed) {
  std::vector<NodeId> nodes(pool.begin(), pool.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  b = std::min(b, nodes.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = i + rng.index(nodes.size() - i);
    std::swap(nodes[i], nodes[j]);
  }
  nodes.resize(b);
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

/// Top-b pool nodes by prediction entropy, ties to the lower id. Ascending.
inline std::vector<NodeId> max_uncertainty_select(const ProbabilityMatrix& probs,
                                                  std::span<const NodeId> pool, std::size_t b) {
  const std::vector<double> h = compute_entropy(probs, pool);
  return detail::top_k_by_score(pool, h, b);
}

/// Candidate set = top-ceil(r*b_t) pool nodes by entropy, clustered into b_t
/// k-means++ clusters on their `coords` rows; one node per cluster, nearest
/// to its center. r=1 degenerates to max_uncertainty_select exactly.
inline std::vector<NodeId> diverse_uncertainty_select(const Matrix& coords,
                                                      const ProbabilityMatrix& probs,
                                                      std::span<const NodeId> pool,
                                                      std::size_t b_t, double r,
                                                      std::uint64_t seed) {
  if (pool.empty()) throw std::invalid_argument("diverse_uncertainty_select: empty pool");
  if (b_t < 1) throw std::invalid_argument("diverse_uncertainty_select: b_t must be >= 1");
  if (b_t > pool.size())
    throw std::invalid_argument("diverse_uncertainty_select: b_t exceeds pool size");
  if (!(r >= 1.0)) throw std::invalid_argument("diverse_uncertainty_select: r must be >= 1");

  const std::size_t want = static_cast<std::size_t>(std::ceil(r * static_cast<double>(b_t)));
  const std::size_t c = std::min(pool.size(), std::max(want, b_t));

  const std::vector<double> h = compute_entropy(probs, pool);
  const std::vector<NodeId> candidates = detail::top_k_by_score(pool, h, c);

  const Matrix points = detail::gather_rows(coords, candidates);
  const ClusterModel model = kmeans_pp(points, static_cast<int>(b_t), seed);
  return select_nearest_to_centers(points, candidates, model);
}

/// One-shot diversity baseline: cluster the pool's coords rows into b
/// clusters, take the node nearest each center.
inline std::vector<NodeId> featprop_select(const Matrix& x_k, std::span<const NodeId> pool,
                                           std::size_t b, std::uint64_t seed) {
  if (b > pool.size()) throw std::invalid_argument("featprop_select: b exceeds pool size");
  std::vector<NodeId> nodes(pool.begin(), pool.end());
  std::sort(nodes.begin(), nodes.end());
  const Matrix points = detail::gather_rows(x_k, nodes);
  const ClusterModel model = kmeans_pp(points, static_cast<int>(b), seed);
  return select_nearest_to_centers(points, nodes, model);
}

/// Cycles over the candidate partitions induced by `cluster_of` (ascending
/// size, ties to the lower cluster id), drawing one uniform node from each
/// until b_t are taken. Ascending ids.
inline std::vector<NodeId> round_robin_select(const std::unordered_map<NodeId, int>& cluster_of,
                                              std::span<const NodeId> candidates, std::size_t b_t,
                                              std::uint64_t seed) {
  std::vector<NodeId> nodes(candidates.begin(), candidates.end());
  std::sort(nodes.begin(), nodes.end());
  b_t = std::min(b_t, nodes.size());

  std::unordered_map<int, std::vector<NodeId>> parts;
  for (NodeId v : nodes) {
    auto it = cluster_of.find(v);
    if (it == cluster_of.end())
      throw std::invalid_argument("round_robin_select: node " + std::to_string(v) +
                                  " has no cluster label");
    parts[it->second].push_back(v);
  }
  // One partition degenerates to plain uniform sampling.
  if (parts.size() == 1) return random_select(nodes, b_t, seed);
  std::vector<std::pair<int, std::vector<NodeId>>> ordered(parts.begin(), parts.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second.size() != b.second.size()) return a.second.size() < b.second.size();
    return a.first < b.first;
  });

  Rng rng(seed);
  std::vector<NodeId> out;
  out.reserve(b_t);
  std::size_t cursor = 0;
  while (out.size() < b_t) {
    auto& part = ordered[cursor % ordered.size()].second;
    ++cursor;
    if (part.empty()) continue;
    const std::size_t j = rng.index(part.size());
    out.push_back(part[j]);
    part[j] = part.back();
    part.pop_back();
  }
  std::sort(out.begin(), out.end());
  return out;
}

enum class ClusteringTarget { PropagatedFeatures, RawFeatures, ModelOutput };

inline const char* to_string(ClusteringTarget t) {
  switch (t) {
    case ClusteringTarget::PropagatedFeatures: return "propagated";
    case ClusteringTarget::RawFeatures: return "raw";
    case ClusteringTarget::ModelOutput: return "model_output";
  }
  return "?";
}

struct RoundRecord {
  int round = 0;                          // 0 = initial sampling
  std::vector<NodeId> selected;           // nodes labeled this round, ascending
  std::vector<double> selected_entropy;   // entropy at selection time; empty for round 0
  std::int64_t n_labeled = 0;             // |S| after the round
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct RunHistory {
  std::vector<RoundRecord> rounds;
};

struct ScatterSampleOptions {
  NormalizationKind norm = NormalizationKind::SymmetricWithSelfLoops;
  ClusteringTarget target = ClusteringTarget::PropagatedFeatures;
  std::uint64_t seed = 0;
  bool warm_start = false;
  // Test accuracy per round; runs outside the oracle's budget.
  std::function<double(const ProbabilityMatrix&)> evaluate;
};

struct ScatterSampleResult {
  GcnParams params;
  RunHistory history;
  std::vector<NodeId> labeled;  // ascending
};

/// The full loop: spread-out initial sampling (k-means++ over every
/// queryable node's X^(k)), then T rounds of diverse uncertainty sampling
/// with retraining after each. Per-round spend is floor((B-B0)/T) with the
/// last round absorbing the remainder, so the total is exactly B.
inline ScatterSampleResult run_scattersample(const SparseGraph& g, const Matrix& x,
                                             LabelOracle& oracle, const Budget& budget,
                                             const TrainConfig& cfg, int num_classes, int k = 2,
                                             const ScatterSampleOptions& opts = {}) {
  budget.validate();
  cfg.validate();
  const std::vector<NodeId>& train_ids = oracle.queryable();
  if (budget.total > static_cast<std::int64_t>(train_ids.size()))
    throw std::invalid_argument("run_scattersample: budget exceeds queryable set");
  if (budget.total > oracle.remaining())
    throw std::invalid_argument("run_scattersample: budget exceeds oracle allowance");

  const Matrix x_k = propagate_features(g, x, k, opts.norm);

  ScatterSampleResult res;
  std::vector<NodeId>& labeled = res.labeled;

  const Matrix train_points = detail::gather_rows(x_k, train_ids);
  const ClusterModel init_model =
      kmeans_pp(train_points, static_cast<int>(budget.initial), sub_seed(opts.seed, 0));
  const std::vector<NodeId> initial =
      select_nearest_to_centers(train_points, train_ids, init_model);
  for (NodeId v : initial) oracle.query(v);
  labeled = initial;

  auto retrain = [&](int round) {
    TrainConfig round_cfg = cfg;
    round_cfg.seed = sub_seed(cfg.seed, static_cast<std::uint64_t>(round));
    const GcnParams* warm = (opts.warm_start && round > 0) ? &res.params : nullptr;
    res.params = train(g, x, labeled, oracle.revealed(), round_cfg, num_classes, nullptr, warm);
    return predict_proba(g, x, res.params);
  };

  ProbabilityMatrix probs = retrain(0);
  {
    RoundRecord rec;
    rec.round = 0;
    rec.selected = initial;
    rec.n_labeled = static_cast<std::int64_t>(labeled.size());
    if (opts.evaluate) rec.test_accuracy = opts.evaluate(probs);
    res.history.rounds.push_back(std::move(rec));
  }

  const std::int64_t per_round = (budget.total - budget.initial) / budget.rounds;
  for (int t = 1; t <= budget.rounds; ++t) {
    const std::int64_t left = budget.total - static_cast<std::int64_t>(labeled.size());
    const std::int64_t b_t = (t == budget.rounds) ? left : std::min(left, per_round);
    if (b_t <= 0) continue;

    std::vector<NodeId> pool;
    pool.reserve(train_ids.size() - labeled.size());
    std::set_difference(train_ids.begin(), train_ids.end(), labeled.begin(), labeled.end(),
                        std::back_inserter(pool));

    const Matrix& coords = opts.target == ClusteringTarget::PropagatedFeatures ? x_k
                           : opts.target == ClusteringTarget::RawFeatures      ? x
                                                                               : probs;
    const std::vector<NodeId> picked =
        diverse_uncertainty_select(coords, probs, pool, static_cast<std::size_t>(b_t),
                                   budget.redundancy, sub_seed(opts.seed, static_cast<std::uint64_t>(t)));

    RoundRecord rec;
    rec.round = t;
    rec.selected = picked;
    rec.selected_entropy = compute_entropy(probs, picked);
    for (NodeId v : picked) oracle.query(v);
    std::vector<NodeId> merged;
    merged.reserve(labeled.size() + picked.size());
    std::merge(labeled.begin(), labeled.end(), picked.begin(), picked.end(),
               std::back_inserter(merged));
    labeled = std::move(merged);

    probs = retrain(t);
    rec.n_labeled = static_cast<std::int64_t>(labeled.size());
    if (opts.evaluate) rec.test_accuracy = opts.evaluate(probs);
    res.history.rounds.push_back(std::move(rec));
  }
  return res;
}

inline void write_history_csv(std::ostream& os, const RunHistory& history,
                              const std::string& sampler, std::uint64_t seed) {
  for (const RoundRecord& rec : history.rounds) {
    os << rec.round << ',' << sampler << ',' << seed << ',' << rec.n_labeled << ',';
    for (std::size_t i = 0; i < rec.selected.size(); ++i) {
      if (i) os << ';';
      os << rec.selected[i];
    }
    os << ',' << detail::format_double(rec.test_accuracy) << '\n';
  }
}

inline constexpr const char* kHistoryCsvHeader =
    "round,sampler,seed,n_labeled,node_ids,test_accuracy";

}  // namespace scatter
