#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include "fpbayes/rng.hpp"

namespace fpbayes {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Scalar samplers
// ---------------------------------------------------------------------------

inline double sample_normal(double mean, double variance, RngHandle& rng) {
  if (!(variance >= 0.0)) throw std::invalid_argument("sample_normal: variance must be >= 0");
  if (variance == 0.0) return mean;
  return mean + std::sqrt(variance) * rng.standard_normal();
}

/// Gamma(shape, rate) by Marsaglia-Tsang squeeze rejection; shape < 1 uses the
/// U^(1/shape) boost from a Gamma(shape + 1) draw.
inline double sample_gamma(double shape, double rate, RngHandle& rng) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate))
    throw std::invalid_argument("sample_gamma: shape and rate must be positive and finite");
  if (shape < 1.0) {
    const double g = sample_gamma(shape + 1.0, 1.0, rng);
    return g * std::pow(rng.uniform(), 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.standard_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

/// Density proportional to x^(-shape-1) exp(-rate/x).
inline double sample_inverse_gamma(double shape, double rate, RngHandle& rng) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("sample_inverse_gamma: shape and rate must be positive");
  return 1.0 / sample_gamma(shape, rate, rng);
}

inline bool sample_bernoulli(double p, RngHandle& rng) { return rng.uniform() < p; }

// ---------------------------------------------------------------------------
// Densities and small numerics
// ---------------------------------------------------------------------------

inline double normal_log_pdf(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

inline double inverse_gamma_log_pdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

inline double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

/// log(1 + exp(eta)) without overflow.
inline double log1p_exp(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

inline double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

/// CDF of the central Student t via the regularized incomplete beta function.
inline double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("student_t_cdf: df must be positive");
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  const double tail = 0.5 * boost::math::ibeta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

/// Quantile of T_df by monotone bisection on student_t_cdf (tolerance 1e-10).
inline double student_t_quantile(double df, double p) {
  if (!(df > 0.0)) throw std::invalid_argument("student_t_quantile: df must be positive");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(df, 1.0 - p);
  double lo = 0.0, hi = 1.0;
  while (student_t_cdf(hi, df) < p) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw std::domain_error("student_t_quantile: bracket overflow");
  }
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Dense symmetric matrices
// ---------------------------------------------------------------------------

/// Square matrix validated as symmetric to 1e-12 relative to its largest entry.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(MatrixXd m) : m_{std::move(m)} {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("SymMatrix: matrix is not square");
    if (m_.rows() == 0) throw std::invalid_argument("SymMatrix: dimension must be positive");
    const double scale = std::max(1e-300, m_.cwiseAbs().maxCoeff());
    if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::invalid_argument("SymMatrix: matrix is not symmetric");
  }

  static SymMatrix identity(Eigen::Index dim) { return SymMatrix{MatrixXd::Identity(dim, dim)}; }

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const MatrixXd& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  MatrixXd m_;
};

/// Lower Cholesky factor with the one-shot jitter repair: on failure,
/// 1e-10 * trace / dim is added to the diagonal once; a second failure throws.
class CholFactor {
 public:
  explicit CholFactor(const MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
      throw std::invalid_argument("chol_factor: matrix must be square and non-empty");
    llt_.compute(m);
    if (llt_.info() == Eigen::Success && pivots_positive()) return;
    jitter_ = 1e-10 * m.trace() / static_cast<double>(m.rows());
    if (!(jitter_ > 0.0)) throw std::domain_error("chol_factor: matrix is not positive definite");
    MatrixXd repaired = m;
    repaired.diagonal().array() += jitter_;
    llt_.compute(repaired);
    if (llt_.info() != Eigen::Success || !pivots_positive())
      throw std::domain_error("chol_factor: matrix is not positive definite after jitter");
  }

  explicit CholFactor(const SymMatrix& m) : CholFactor(m.matrix()) {}

  MatrixXd lower() const { return llt_.matrixL(); }
  double jitter() const noexcept { return jitter_; }
  Eigen::Index dim() const { return llt_.matrixLLT().rows(); }

  template <typename Rhs>
  auto solve(const Rhs& b) const {
    return llt_.solve(b);
  }

  /// L^{-1} b.
  template <typename Rhs>
  MatrixXd solve_lower(const Rhs& b) const {
    return llt_.matrixL().solve(b);
  }

  VectorXd solve_lower(const VectorXd& b) const { return llt_.matrixL().solve(b); }

  double log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  /// x = mean + L z with z standard normal, i.e. a draw with covariance LL^T.
  VectorXd draw(const VectorXd& mean, RngHandle& rng) const {
    VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.standard_normal();
    return mean + llt_.matrixL() * z;
  }

 private:
  bool pivots_positive() const {
    const auto d = llt_.matrixLLT().diagonal();
    return (d.array() > 0.0).all() && d.allFinite();
  }

  Eigen::LLT<MatrixXd> llt_;
  double jitter_ = 0.0;
};

inline MatrixXd chol_factor(const SymMatrix& m) { return CholFactor{m}.lower(); }

/// F with F F^T = S for a symmetric PSD S that may be singular. Pivoted LDL^T;
/// pivots below rel_cutoff * scale are treated as exact zeros. `scale`
/// defaults to max|diag S|; pass the size of the terms S was computed from
/// when S is a difference that may be pure rounding noise.
inline MatrixXd psd_factor(const MatrixXd& S, double rel_cutoff = 1e-10, double scale = 0.0) {
  const Eigen::Index n = S.rows();
  if (n == 0) return MatrixXd(0, 0);
  if (!(scale > 0.0)) scale = S.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return MatrixXd::Zero(n, n);
  const Eigen::LDLT<MatrixXd> ldlt(S);
  VectorXd d = ldlt.vectorD();
  for (Eigen::Index k = 0; k < n; ++k) d(k) = d(k) > rel_cutoff * scale ? std::sqrt(d(k)) : 0.0;
  MatrixXd L = ldlt.matrixL();
  L = L * d.asDiagonal();
  return ldlt.transpositionsP().transpose() * L;
}

/// Inverse of (1/scale) I + coeff 1 1^T in closed form:
/// scale (I - (coeff scale / (1 + dim coeff scale)) 1 1^T).
/// With coeff = 1 and scale = gamma^2 this is the inverse of the two-stage
/// marginal covariance (1/gamma^2) I + 1 1^T.
inline SymMatrix sherman_morrison_inverse(double scale, double rank1_coeff, Eigen::Index dim) {
  if (dim <= 0) throw std::invalid_argument("sherman_morrison_inverse: dim must be positive");
  if (!(scale > 0.0)) throw std::invalid_argument("sherman_morrison_inverse: scale must be positive");
  const double denom = 1.0 + static_cast<double>(dim) * rank1_coeff * scale;
  if (!(denom > 0.0))
    throw std::domain_error("sherman_morrison_inverse: matrix is singular or indefinite");
  const double k = rank1_coeff * scale / denom;
  MatrixXd inv = MatrixXd::Constant(dim, dim, -scale * k);
  inv.diagonal().array() += scale;
  return SymMatrix{std::move(inv)};
}

}  // namespace fpbayes
