#pragma once

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpbayes/posterior_draws.hpp"
#include "fpbayes/stat_kernels.hpp"

namespace fpbayes {

/// beta | sigma^2 ~ N(C0 c0, sigma^2 C0), sigma^2 ~ IG(a0, b0), with C0 held
/// through its inverse (the prior precision).
struct RegressionPrior {
  VectorXd c0;
  MatrixXd C0_inv;
  double a0 = 0.0;
  double b0 = 0.0;

  /// beta | sigma^2 ~ N(mean, sigma^2 * (1/precision) I).
  static RegressionPrior isotropic(const VectorXd& mean, double precision, double a0, double b0) {
    RegressionPrior p;
    p.C0_inv = precision * MatrixXd::Identity(mean.size(), mean.size());
    p.c0 = p.C0_inv * mean;
    p.a0 = a0;
    p.b0 = b0;
    return p;
  }
};

/// Sequential Normal-Inverse-Gamma state; C_inv (not C) is stored because the
/// recursion is additive in precision.
struct RegressionState {
  VectorXd c;
  MatrixXd C_inv;
  double a = 0.0;
  double b = 0.0;
  long blocks_seen = 0;

  static RegressionState from_prior(const RegressionPrior& p) {
    if (p.c0.size() == 0 || p.C0_inv.rows() != p.c0.size() || p.C0_inv.cols() != p.c0.size())
      throw std::invalid_argument("RegressionState: prior dimensions are inconsistent");
    if (p.b0 < 0.0) throw std::invalid_argument("RegressionState: b0 must be nonnegative");
    CholFactor{SymMatrix{p.C0_inv}};  // throws unless the prior precision is PD
    return RegressionState{p.c0, p.C0_inv, p.a0, p.b0, 0};
  }

  Eigen::Index p() const noexcept { return c.size(); }

  /// E[beta | y] = C c.
  VectorXd beta_mean() const { return CholFactor{C_inv}.solve(c); }

  /// Marginal (multivariate t) covariance of beta: b / (a - 1) C.
  MatrixXd beta_covariance() const {
    if (!(a > 1.0)) throw std::domain_error("RegressionState: covariance needs a > 1");
    return (b / (a - 1.0)) * CholFactor{C_inv}.solve(MatrixXd::Identity(p(), p()));
  }
};

/// Absorb one block y_t ~ N(X_t beta, sigma^2 V_t). Work and memory are
/// O(m^3 + p^3) for an m-row block, independent of how many blocks came before.
inline RegressionState update_block(const RegressionState& state, const MatrixXd& X,
                                    const VectorXd& y, const SymMatrix& V) {
  const Eigen::Index m = X.rows();
  if (m == 0) throw std::invalid_argument("update_block: empty block");
  if (X.cols() != state.p()) throw std::invalid_argument("update_block: X has the wrong column count");
  if (y.size() != m || V.dim() != m) throw std::invalid_argument("update_block: y/V size mismatch");

  const CholFactor Vf(V);  // throws on non-PD V_t
  const MatrixXd Xw = Vf.solve_lower(X);
  const VectorXd yw = Vf.solve_lower(y);

  RegressionState next;
  next.c = state.c + Xw.transpose() * yw;
  next.C_inv = state.C_inv + Xw.transpose() * Xw;
  next.a = state.a + 0.5 * static_cast<double>(m);

  // q_t = y^T V^-1 y + c_{t-1}^T C_{t-1} c_{t-1} - c_t^T C_t c_t, evaluated as
  // |yw - Xw mu_t|^2 + (mu_t - mu_{t-1})^T C_{t-1}^{-1} (mu_t - mu_{t-1}).
  const VectorXd mu_prev = CholFactor{state.C_inv}.solve(state.c);
  const VectorXd mu_next = CholFactor{next.C_inv}.solve(next.c);
  const VectorXd resid = yw - Xw * mu_next;
  const VectorXd shift = mu_next - mu_prev;
  const double q = resid.squaredNorm() + shift.dot(state.C_inv * shift);
#ifndef NDEBUG
  {
    const double direct = yw.squaredNorm() + state.c.dot(mu_prev) - next.c.dot(mu_next);
    const double scale = yw.squaredNorm() + std::abs(state.c.dot(mu_prev)) + 1.0;
    assert(std::abs(direct - q) <= 1e-8 * scale);
  }
#endif
  next.b = state.b + 0.5 * q;
  next.blocks_seen = state.blocks_seen + 1;
  return next;
}

/// Draws of (sigma^2, beta). Columns "sigma2", "beta[k]".
inline PosteriorDraws draw_regression_posterior(const RegressionState& s, long ndraws, RngHandle& rng) {
  if (!(s.a > 0.0) || !(s.b > 0.0)) throw std::domain_error("draw_regression_posterior: improper posterior");
  std::vector<std::string> names{"sigma2"};
  for (Eigen::Index k = 0; k < s.p(); ++k) names.push_back("beta[" + std::to_string(k) + "]");
  PosteriorDraws out(std::move(names), ndraws);
  const CholFactor P(s.C_inv);
  const VectorXd mean = P.solve(s.c);
  const MatrixXd U = P.lower().transpose();  // C = U^{-1} U^{-T}
  for (long l = 0; l < ndraws; ++l) {
    const double sigma2 = sample_inverse_gamma(s.a, s.b, rng);
    VectorXd z(s.p());
    for (Eigen::Index k = 0; k < s.p(); ++k) z(k) = rng.standard_normal();
    const VectorXd beta = mean + std::sqrt(sigma2) * U.triangularView<Eigen::Upper>().solve(z);
    out(l, 0) = sigma2;
    out.values().row(l).tail(s.p()) = beta.transpose();
  }
  return out;
}

/// One predictive draw of the rows X_new per posterior draw:
/// Y ~ N(X_new beta, sigma^2 V_new). Columns "Y[r]".
inline PosteriorDraws predict_in_block(const PosteriorDraws& posterior, const MatrixXd& X_new,
                                       const SymMatrix& V_new, RngHandle& rng) {
  const Eigen::Index k = X_new.rows();
  if (V_new.dim() != k) throw std::invalid_argument("predict_in_block: V_new size mismatch");
  const Eigen::Index s_col = posterior.index_of("sigma2");
  const Eigen::Index p = X_new.cols();
  if (posterior.nquantities() != p + 1) throw std::invalid_argument("predict_in_block: X_new column mismatch");
  const MatrixXd L = CholFactor{V_new}.lower();
  std::vector<std::string> names;
  for (Eigen::Index r = 0; r < k; ++r) names.push_back("Y[" + std::to_string(r) + "]");
  PosteriorDraws out(std::move(names), posterior.ndraws());
  for (Eigen::Index l = 0; l < posterior.ndraws(); ++l) {
    const VectorXd beta = posterior.values().row(l).segment(1, p).transpose();
    VectorXd z(k);
    for (Eigen::Index r = 0; r < k; ++r) z(r) = rng.standard_normal();
    out.values().row(l) = (X_new * beta + std::sqrt(posterior(l, s_col)) * (L * z)).transpose();
  }
  return out;
}

}  // namespace fpbayes
