#pragma once

#include "scatter/common.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace scatter {

struct GpHyper {
  Vector theta;    // per-dimension length-scales, Sigma = diag(theta)
  double mu = 0;   // prior mean

  void validate(Eigen::Index d) const {
    if (theta.size() != d)
      throw std::invalid_argument("GpHyper: theta length does not match feature dim");
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      if (!(theta(i) > 0) || !std::isfinite(theta(i)))
        throw std::invalid_argument("GpHyper: theta must be strictly positive and finite");
  }
};

/// K(x_i, x_j) = exp(-0.5 (x_i-x_j)^T diag(theta)^-1 (x_i-x_j)).
inline Matrix kernel_matrix(const Matrix& a, const Matrix& b, const GpHyper& hyper) {
  if (a.cols() != b.cols()) throw std::invalid_argument("kernel_matrix: dimension mismatch");
  hyper.validate(a.cols());
  const Vector inv_scale = hyper.theta.cwiseSqrt().cwiseInverse();
  const Matrix as = a * inv_scale.asDiagonal();
  const Matrix bs = b * inv_scale.asDiagonal();
  const Vector an = as.rowwise().squaredNorm();
  const Vector bn = bs.rowwise().squaredNorm();
  Matrix d2 = (-2.0 * as * bs.transpose());
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  return (-0.5 * d2.cwiseMax(0.0)).array().exp();
}

struct GpPosterior {
  Matrix train_points;
  Vector train_targets;
  Matrix kernel_factor;  // lower-triangular L with L L^T = K_SS + jitter I
  Vector alpha;          // (K_SS + jitter I)^-1 (y - mu 1)
  double jitter = 0;
};

inline GpPosterior gp_fit(const Matrix& points, const Vector& targets, const GpHyper& hyper,
                          double jitter = 1e-8) {
  if (points.rows() < 1) throw std::invalid_argument("gp_fit: need at least one point");
  if (points.rows() != targets.size())
    throw std::invalid_argument("gp_fit: points/targets length mismatch");
  if (jitter < 0) throw std::invalid_argument("gp_fit: jitter must be >= 0");

  Matrix k = kernel_matrix(points, points, hyper);
  k.diagonal().array() += jitter;

  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(k, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    throw std::runtime_error("gp_fit: kernel factorization failed; eigenvalue range [" +
                             std::to_string(lo) + ", " + std::to_string(hi) +
                             "], condition estimate " +
                             std::to_string(lo > 0 ? hi / lo : std::numeric_limits<double>::infinity()));
  }

  GpPosterior post;
  post.train_points = points;
  post.train_targets = targets;
  post.kernel_factor = llt.matrixL();
  post.alpha = llt.solve((targets.array() - hyper.mu).matrix());
  post.jitter = jitter;
  return post;
}

struct GpPrediction {
  Vector mean;
  Vector variance;
};

inline GpPrediction gp_predict(const GpPosterior& post, const Matrix& query,
                               const GpHyper& hyper) {
  if (query.cols() != post.train_points.cols())
    throw std::invalid_argument("gp_predict: query dimension mismatch");
  const Matrix k_star = kernel_matrix(query, post.train_points, hyper);  // q x n

  GpPrediction out;
  out.mean = (k_star * post.alpha).array() + hyper.mu;
  // var = K(x,x) - ||L^-1 k_*||^2 with K(x,x) = 1.
  const Matrix v =
      post.kernel_factor.triangularView<Eigen::Lower>().solve(k_star.transpose());  // n x q
  out.variance = (1.0 - v.colwise().squaredNorm().array()).cwiseMax(0.0);
  return out;
}

/// One-dimensional m-cluster setting: cluster j has radius d_j (ascending),
/// centers at least delta apart, r_j = exp(-d_j^2 / (2 theta)).
struct SeparationParams {
  int m = 0;
  std::vector<double> d_radii;
  double delta = 0;
  double tau = 0;
  double theta = 0;
};

struct SeparationReport {
  bool radius_gap_ok = false;   // d_m^2 >= d_{m-1}^2 + 4 ln theta
  bool delta_ok = false;        // delta >= d_m + max(sqrt(d_m^2 + theta ln 9m), 2 theta ln(3 sqrt(m)/(1-r_m)))
  bool separation_ok = false;   // delta > 2 d_m
  bool domination_ok = false;   // d_m^2 <= tau * sum_{j<m} d_j^2
  bool all_ok = false;
  double r_m = 0;
  double bound = 0;             // (1/(2(1+tau))) (1+r_m^2)/(1-r_m) - 8/3
};

inline SeparationReport check_separation_conditions(const SeparationParams& p) {
  if (!(p.theta > 0)) throw std::invalid_argument("check_separation_conditions: theta must be > 0");
  if (p.m < 2 || static_cast<int>(p.d_radii.size()) != p.m)
    throw std::invalid_argument("check_separation_conditions: need m >= 2 radii");
  for (int j = 0; j < p.m; ++j) {
    if (!(p.d_radii[static_cast<std::size_t>(j)] >= 0) ||
        (j > 0 && p.d_radii[static_cast<std::size_t>(j)] <
                      p.d_radii[static_cast<std::size_t>(j - 1)]))
      throw std::invalid_argument("check_separation_conditions: radii must be ascending and >= 0");
  }
  if (!(p.tau > 0)) throw std::invalid_argument("check_separation_conditions: tau must be > 0");

  const double dm = p.d_radii.back();
  const double dm1 = p.d_radii[static_cast<std::size_t>(p.m - 2)];

  SeparationReport rep;
  rep.r_m = std::exp(-dm * dm / (2.0 * p.theta));

  rep.radius_gap_ok = dm * dm >= dm1 * dm1 + 4.0 * std::log(p.theta);

  const double term1 = std::sqrt(dm * dm + p.theta * std::log(9.0 * p.m));
  const double term2 =
      2.0 * p.theta * std::log(3.0 * std::sqrt(static_cast<double>(p.m)) / (1.0 - rep.r_m));
  rep.delta_ok = p.delta >= dm + std::max(term1, term2);

  rep.separation_ok = p.delta > 2.0 * dm;

  double sum_sq = 0;
  for (int j = 0; j + 1 < p.m; ++j) {
    const double d = p.d_radii[static_cast<std::size_t>(j)];
    sum_sq += d * d;
  }
  rep.domination_ok = dm * dm <= p.tau * sum_sq;

  rep.all_ok = rep.radius_gap_ok && rep.delta_ok && rep.separation_ok && rep.domination_ok;
  rep.bound = (1.0 / (2.0 * (1.0 + p.tau))) * (1.0 + rep.r_m * rep.r_m) / (1.0 - rep.r_m) -
              8.0 / 3.0;
  return rep;
}

}  // namespace scatter
