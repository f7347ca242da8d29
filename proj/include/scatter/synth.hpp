#pragma once

#include "scatter/common.hpp"
#include "scatter/dataset.hpp"
#include "scatter/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace scatter {

/// Citation-style synthetic graph: skewed class sizes, block prototypes with
/// Gaussian noise for features, mostly intra-class edges. Small enough to
/// sweep in seconds, structured enough that propagation and diversity matter.
struct SynthConfig {
  NodeId num_nodes = 1600;
  int num_classes = 5;
  int feature_dim = 96;
  int partner_draws = 2;        // undirected edges drawn per node
  double intra_class_p = 0.85;  // chance a drawn partner shares the class
  double class_skew = 0.65;     // class c weight ~ skew^c
  double prototype_scale = 1.5;
  double feature_noise = 0.8;
  NodeId valid_size = 200;
  NodeId test_size = 400;
  std::uint64_t seed = 7;
  std::string name = "synthcite";

  void validate() const {
    if (num_nodes < 4) throw std::invalid_argument("SynthConfig: too few nodes");
    if (num_classes < 2) throw std::invalid_argument("SynthConfig: need >= 2 classes");
    if (feature_dim < num_classes)
      throw std::invalid_argument("SynthConfig: feature_dim below num_classes");
    if (partner_draws < 1) throw std::invalid_argument("SynthConfig: partner_draws must be >= 1");
    if (intra_class_p < 0 || intra_class_p > 1)
      throw std::invalid_argument("SynthConfig: intra_class_p outside [0,1]");
    if (!(class_skew > 0) || class_skew > 1)
      throw std::invalid_argument("SynthConfig: class_skew outside (0,1]");
    if (valid_size + test_size >= num_nodes)
      throw std::invalid_argument("SynthConfig: splits leave no train nodes");
    if (num_nodes / num_classes < 2)
      throw std::invalid_argument("SynthConfig: classes too small");
  }
};

inline DatasetBundle generate_synthetic_dataset(const SynthConfig& cfg) {
  cfg.validate();
  const NodeId n = cfg.num_nodes;
  const int c = cfg.num_classes;

  // Class sizes proportional to skew^class, assigned in contiguous blocks.
  std::vector<double> weights(static_cast<std::size_t>(c));
  double total = 0;
  for (int j = 0; j < c; ++j) total += weights[static_cast<std::size_t>(j)] = std::pow(cfg.class_skew, j);
  std::vector<NodeId> boundary(static_cast<std::size_t>(c) + 1, 0);
  double cum = 0;
  for (int j = 0; j < c; ++j) {
    cum += weights[static_cast<std::size_t>(j)];
    boundary[static_cast<std::size_t>(j) + 1] =
        j + 1 == c ? n : static_cast<NodeId>(static_cast<double>(n) * cum / total);
  }

  DatasetBundle b;
  b.name = cfg.name;
  b.num_classes = c;
  b.labels.resize(static_cast<std::size_t>(n));
  std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(c));
  for (int j = 0; j < c; ++j) {
    if (boundary[static_cast<std::size_t>(j) + 1] - boundary[static_cast<std::size_t>(j)] < 2)
      throw std::invalid_argument("SynthConfig: skew starves class " + std::to_string(j));
    for (NodeId v = boundary[static_cast<std::size_t>(j)]; v < boundary[static_cast<std::size_t>(j) + 1]; ++v) {
      b.labels[static_cast<std::size_t>(v)] = j;
      members[static_cast<std::size_t>(j)].push_back(v);
    }
  }

  Rng rng(cfg.seed);

  // Prototype: one block of coordinates per class, plus noise on all.
  const int block = cfg.feature_dim / c;
  b.features = Matrix::Zero(n, cfg.feature_dim);
  for (NodeId v = 0; v < n; ++v) {
    const int y = b.labels[static_cast<std::size_t>(v)];
    for (int d = 0; d < cfg.feature_dim; ++d) {
      double x = cfg.feature_noise * rng.normal();
      if (d >= y * block && d < (y + 1) * block) x += cfg.prototype_scale;
      b.features(v, d) = static_cast<double>(static_cast<float>(x));  // disk is f32
    }
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(cfg.partner_draws));
  for (NodeId v = 0; v < n; ++v) {
    const int y = b.labels[static_cast<std::size_t>(v)];
    for (int e = 0; e < cfg.partner_draws; ++e) {
      NodeId u = v;
      if (rng.bernoulli(cfg.intra_class_p)) {
        const auto& own = members[static_cast<std::size_t>(y)];
        while (u == v) u = own[rng.index(own.size())];
      } else {
        while (u == v || b.labels[static_cast<std::size_t>(u)] == y)
          u = static_cast<NodeId>(rng.index(static_cast<std::size_t>(n)));
      }
      edges.emplace_back(v, u);
    }
  }
  b.graph = build_graph(edges, n);

  std::vector<NodeId> order(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n; ++v) order[static_cast<std::size_t>(v)] = v;
  rng.shuffle(order);
  b.splits.valid.assign(order.begin(), order.begin() + cfg.valid_size);
  b.splits.test.assign(order.begin() + cfg.valid_size,
                       order.begin() + cfg.valid_size + cfg.test_size);
  b.splits.train.assign(order.begin() + cfg.valid_size + cfg.test_size, order.end());
  std::sort(b.splits.valid.begin(), b.splits.valid.end());
  std::sort(b.splits.test.begin(), b.splits.test.end());
  std::sort(b.splits.train.begin(), b.splits.train.end());

  validate_bundle(b);
  return b;
}

}  // namespace scatter
