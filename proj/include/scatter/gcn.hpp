#pragma once

#include "scatter/common.hpp"
#include "scatter/graph.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace scatter {

enum class Optimizer { Adam, PlainGradientDescent };

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  int epochs = 200;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;
  int hidden_dim = 64;

  void validate() const {
    if (learning_rate <= 0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (hidden_dim < 1) throw std::invalid_argument("TrainConfig: hidden_dim must be >= 1");
  }
};

/// 2-layer GCN, no bias terms: Z = softmax(S ReLU(S X W0) W1) with S the
/// symmetric self-loop-normalized operator.
struct GcnParams {
  Matrix w0;  // d x h
  Matrix w1;  // h x C
  int hidden_dim = 0;
  int num_classes = 0;
};

struct TrainTrace {
  std::vector<double> epoch_loss;  // entries 0..epochs-1 pre-step, last entry final
};

namespace detail {

inline Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = rng.uniform(-a, a);
  return w;
}

inline void softmax_rows_inplace(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
}

// One Adam slot per weight matrix.
struct AdamState {
  Matrix m, v;
  int t = 0;
  explicit AdamState(const Matrix& shape)
      : m(Matrix::Zero(shape.rows(), shape.cols())),
        v(Matrix::Zero(shape.rows(), shape.cols())) {}
  void step(Matrix& w, const Matrix& grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t;
    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
    w -= lr * ((m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
  }
};

inline void check_labels(const std::vector<NodeId>& labeled, const LabelMap& labels,
                         NodeId num_nodes, int num_classes) {
  if (labeled.empty()) throw std::invalid_argument("train: labeled set is empty");
  for (NodeId v : labeled) {
    if (v < 0 || v >= num_nodes) throw std::invalid_argument("train: labeled node out of range");
    auto it = labels.find(v);
    if (it == labels.end())
      throw std::invalid_argument("train: node " + std::to_string(v) + " has no label");
    if (it->second < 0 || it->second >= num_classes)
      throw std::invalid_argument("train: label out of range for node " + std::to_string(v));
  }
}

// Mean cross-entropy over per-row labels plus 0.5 * wd * ||W||^2 terms; the
// expression the finite-difference oracle differentiates.
inline double ce_loss(const Matrix& logits, const std::vector<int>& row_labels,
                      double weight_decay, const Matrix& w0, const Matrix& w1) {
  double ce = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    ce += lse - row(row_labels[static_cast<std::size_t>(i)]);
  }
  ce /= static_cast<double>(logits.rows());
  return ce + 0.5 * weight_decay * (w0.squaredNorm() + w1.squaredNorm());
}

// The loss only sees the labeled rows of the output layer, which depend on
// the hidden layer at labeled nodes and their neighbors. Training therefore
// runs on that induced row set; whole-graph inference lives in
// predict_proba.
struct ActiveRows {
  std::vector<NodeId> rows;  // sorted union of labeled nodes and neighbors
  struct Link {
    int row;   // index into rows
    double w;  // operator coefficient
  };
  std::vector<std::vector<Link>> out;  // per labeled node, its S row on `rows`
};

inline ActiveRows build_active_rows(const SparseGraph& g, const std::vector<NodeId>& labeled) {
  ActiveRows act;
  std::vector<int> idx(static_cast<std::size_t>(g.num_nodes), -1);
  for (NodeId v : labeled) {
    idx[static_cast<std::size_t>(v)] = 0;
    for (NodeId u : g.neighbors(v)) idx[static_cast<std::size_t>(u)] = 0;
  }
  for (NodeId v = 0; v < g.num_nodes; ++v)
    if (idx[static_cast<std::size_t>(v)] == 0) {
      idx[static_cast<std::size_t>(v)] = static_cast<int>(act.rows.size());
      act.rows.push_back(v);
    }
  act.out.reserve(labeled.size());
  for (NodeId v : labeled) {
    const double sv = 1.0 / std::sqrt(static_cast<double>(g.degrees[static_cast<std::size_t>(v)] + 1));
    std::vector<ActiveRows::Link> links;
    links.push_back({idx[static_cast<std::size_t>(v)], sv * sv});
    for (NodeId u : g.neighbors(v)) {
      const double su =
          1.0 / std::sqrt(static_cast<double>(g.degrees[static_cast<std::size_t>(u)] + 1));
      links.push_back({idx[static_cast<std::size_t>(u)], sv * su});
    }
    act.out.push_back(std::move(links));
  }
  return act;
}

}  // namespace detail

inline Matrix gcn_logits(const SparseGraph& g, const Matrix& x, const GcnParams& p) {
  if (x.cols() != p.w0.rows()) throw std::invalid_argument("gcn: feature dim does not match W0");
  const Matrix xp = apply_normalized(g, x, NormalizationKind::SymmetricWithSelfLoops);
  Matrix h = (xp * p.w0).cwiseMax(0.0);
  h = apply_normalized(g, h, NormalizationKind::SymmetricWithSelfLoops);
  return h * p.w1;
}

inline ProbabilityMatrix predict_proba(const SparseGraph& g, const Matrix& x, const GcnParams& p) {
  Matrix z = gcn_logits(g, x, p);
  detail::softmax_rows_inplace(z);
  return z;
}

/// Full-batch training, deterministic per seed. Glorot-uniform init unless
/// warm_start is given. trace, when non-null, receives the loss before each
/// step plus a final entry after the last one.
inline GcnParams train(const SparseGraph& g, const Matrix& x, const std::vector<NodeId>& labeled,
                       const LabelMap& labels, const TrainConfig& cfg, int num_classes,
                       TrainTrace* trace = nullptr, const GcnParams* warm_start = nullptr) {
  cfg.validate();
  detail::check_labels(labeled, labels, g.num_nodes, num_classes);
  if (x.rows() != g.num_nodes) throw std::invalid_argument("train: feature rows != num_nodes");

  GcnParams p;
  p.hidden_dim = cfg.hidden_dim;
  p.num_classes = num_classes;
  if (warm_start) {
    if (warm_start->w0.rows() != x.cols() || warm_start->w1.cols() != num_classes)
      throw std::invalid_argument("train: warm start shape mismatch");
    p = *warm_start;
  } else {
    Rng rng(cfg.seed);
    p.w0 = detail::glorot_uniform(x.cols(), cfg.hidden_dim, rng);
    p.w1 = detail::glorot_uniform(cfg.hidden_dim, num_classes, rng);
  }

  const Matrix xp = apply_normalized(g, x, NormalizationKind::SymmetricWithSelfLoops);
  const detail::ActiveRows act = detail::build_active_rows(g, labeled);
  Matrix xp_act(static_cast<Eigen::Index>(act.rows.size()), xp.cols());
  for (std::size_t i = 0; i < act.rows.size(); ++i)
    xp_act.row(static_cast<Eigen::Index>(i)) = xp.row(act.rows[i]);

  const Eigen::Index m = static_cast<Eigen::Index>(labeled.size());
  std::vector<int> row_labels(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) row_labels[i] = labels.at(labeled[i]);
  const double inv_m = 1.0 / static_cast<double>(m);

  auto forward_labeled = [&](Matrix& pre1, Matrix& h1, Matrix& a2) {
    pre1 = xp_act * p.w0;
    h1 = pre1.cwiseMax(0.0);
    a2.setZero(m, p.w0.cols());
    for (Eigen::Index i = 0; i < m; ++i)
      for (const auto& link : act.out[static_cast<std::size_t>(i)])
        a2.row(i) += link.w * h1.row(link.row);
  };

  detail::AdamState adam0(p.w0), adam1(p.w1);
  Matrix pre1, h1, a2;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    forward_labeled(pre1, h1, a2);
    Matrix probs = a2 * p.w1;
    if (trace)
      trace->epoch_loss.push_back(
          detail::ce_loss(probs, row_labels, cfg.weight_decay, p.w0, p.w1));
    detail::softmax_rows_inplace(probs);

    Matrix dlogits = probs * inv_m;
    for (Eigen::Index i = 0; i < m; ++i)
      dlogits(i, row_labels[static_cast<std::size_t>(i)]) -= inv_m;

    Matrix dw1 = a2.transpose() * dlogits + cfg.weight_decay * p.w1;
    const Matrix da2 = dlogits * p.w1.transpose();
    Matrix dh1 = Matrix::Zero(h1.rows(), h1.cols());
    for (Eigen::Index i = 0; i < m; ++i)
      for (const auto& link : act.out[static_cast<std::size_t>(i)])
        dh1.row(link.row) += link.w * da2.row(i);
    const Matrix dpre1 = (pre1.array() > 0).cast<double>() * dh1.array();
    Matrix dw0 = xp_act.transpose() * dpre1 + cfg.weight_decay * p.w0;

    if (cfg.optimizer == Optimizer::Adam) {
      adam0.step(p.w0, dw0, cfg.learning_rate);
      adam1.step(p.w1, dw1, cfg.learning_rate);
    } else {
      p.w0 -= cfg.learning_rate * dw0;
      p.w1 -= cfg.learning_rate * dw1;
    }
  }
  if (trace) {
    forward_labeled(pre1, h1, a2);
    const Matrix logits = a2 * p.w1;
    trace->epoch_loss.push_back(
        detail::ce_loss(logits, row_labels, cfg.weight_decay, p.w0, p.w1));
  }
  return p;
}

inline double evaluate_accuracy(const ProbabilityMatrix& pred, const std::vector<int>& labels,
                                std::span<const NodeId> eval_set) {
  if (eval_set.empty()) throw std::invalid_argument("evaluate_accuracy: empty eval set");
  std::int64_t hits = 0;
  for (NodeId v : eval_set) {
    if (v < 0 || v >= pred.rows())
      throw std::invalid_argument("evaluate_accuracy: node outside prediction rows");
    // Ties go to the lowest class index.
    int best = 0;
    for (Eigen::Index c = 1; c < pred.cols(); ++c)
      if (pred(v, c) > pred(v, best)) best = static_cast<int>(c);
    if (best == labels[static_cast<std::size_t>(v)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(eval_set.size());
}

/// SGC-style fallback: multinomial logistic regression on pre-propagated
/// features, softmax(X^(k) W).
struct SgcParams {
  Matrix w;  // d x C
  int num_classes = 0;
};

inline ProbabilityMatrix predict_proba_sgc(const Matrix& x_k, const SgcParams& p) {
  Matrix z = x_k * p.w;
  detail::softmax_rows_inplace(z);
  return z;
}

inline SgcParams train_sgc(const Matrix& x_k, const std::vector<NodeId>& labeled,
                           const LabelMap& labels, const TrainConfig& cfg, int num_classes,
                           TrainTrace* trace = nullptr) {
  cfg.validate();
  detail::check_labels(labeled, labels, static_cast<NodeId>(x_k.rows()), num_classes);

  SgcParams p;
  p.num_classes = num_classes;
  Rng rng(cfg.seed);
  p.w = detail::glorot_uniform(x_k.cols(), num_classes, rng);

  const Eigen::Index m = static_cast<Eigen::Index>(labeled.size());
  Matrix x_lab(m, x_k.cols());
  std::vector<int> row_labels(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    x_lab.row(static_cast<Eigen::Index>(i)) = x_k.row(labeled[i]);
    row_labels[i] = labels.at(labeled[i]);
  }
  const double inv_m = 1.0 / static_cast<double>(m);

  detail::AdamState adam(p.w);
  const Matrix no_w1 = Matrix::Zero(1, 1);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Matrix probs = x_lab * p.w;
    if (trace)
      trace->epoch_loss.push_back(
          detail::ce_loss(probs, row_labels, cfg.weight_decay, p.w, no_w1));
    detail::softmax_rows_inplace(probs);
    Matrix dlogits = probs * inv_m;
    for (Eigen::Index i = 0; i < m; ++i)
      dlogits(i, row_labels[static_cast<std::size_t>(i)]) -= inv_m;
    Matrix dw = x_lab.transpose() * dlogits + cfg.weight_decay * p.w;
    if (cfg.optimizer == Optimizer::Adam)
      adam.step(p.w, dw, cfg.learning_rate);
    else
      p.w -= cfg.learning_rate * dw;
  }
  return p;
}

}  // namespace scatter
