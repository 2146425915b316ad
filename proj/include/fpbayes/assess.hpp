#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fpbayes/stat_kernels.hpp"

namespace fpbayes {

/// Raised by GRS when a replicate variance is zero and the score is undefined.
class undefined_score : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Per-unit posterior predictive summaries plus pointwise log densities
/// (rows = draws, columns = units).
struct PredictiveSummary {
  VectorXd rep_mean;
  VectorXd rep_var;
  MatrixXd log_density;

  Eigen::Index units() const noexcept { return rep_mean.size(); }
  Eigen::Index draws() const noexcept { return log_density.rows(); }

  /// Replicate moments use the L - 1 divisor.
  static PredictiveSummary from_draws(const MatrixXd& replicates, const MatrixXd& log_density) {
    if (replicates.rows() < 2) throw std::invalid_argument("PredictiveSummary: need at least two draws");
    if (log_density.size() > 0 &&
        (log_density.rows() != replicates.rows() || log_density.cols() != replicates.cols()))
      throw std::invalid_argument("PredictiveSummary: replicate and log-density shapes differ");
    PredictiveSummary s;
    const auto L = static_cast<double>(replicates.rows());
    s.rep_mean = replicates.colwise().mean().transpose();
    s.rep_var.resize(replicates.cols());
    for (Eigen::Index i = 0; i < replicates.cols(); ++i)
      s.rep_var(i) = (replicates.col(i).array() - s.rep_mean(i)).square().sum() / (L - 1.0);
    s.log_density = log_density;
    return s;
  }
};

namespace detail {

inline void check_units(const PredictiveSummary& s, std::span<const double> y) {
  if (static_cast<Eigen::Index>(y.size()) != s.units() || s.rep_var.size() != s.units())
    throw std::invalid_argument("assessment: summary and observations cover different units");
  for (Eigen::Index i = 0; i < s.rep_var.size(); ++i)
    if (!(s.rep_var(i) >= 0.0)) throw std::invalid_argument("assessment: negative replicate variance");
}

}  // namespace detail

/// D = sum (y_i - E[Y_rep,i])^2 + sum V(Y_rep,i).
inline double metric_D(const PredictiveSummary& s, std::span<const double> y) {
  detail::check_units(s, y);
  double fit = 0.0, penalty = 0.0;
  for (Eigen::Index i = 0; i < s.units(); ++i) {
    const double r = y[static_cast<std::size_t>(i)] - s.rep_mean(i);
    fit += r * r;
    penalty += s.rep_var(i);
  }
  return fit + penalty;
}

/// GRS = -sum (y_i - E)^2 / V - sum log V. Higher is better.
inline double metric_GRS(const PredictiveSummary& s, std::span<const double> y) {
  detail::check_units(s, y);
  double score = 0.0;
  for (Eigen::Index i = 0; i < s.units(); ++i) {
    const double v = s.rep_var(i);
    if (!(v > 0.0)) throw undefined_score("metric_GRS: zero replicate variance at unit " + std::to_string(i));
    const double r = y[static_cast<std::size_t>(i)] - s.rep_mean(i);
    score -= r * r / v + std::log(v);
  }
  return score;
}

struct WaicResult {
  double waic = 0.0;
  double se = 0.0;
  double lppd = 0.0;    // sum_i log mean_l p(y_i | draw l)
  double p_waic = 0.0;  // sum_i var_l log p(y_i | draw l)
};

/// WAIC = -2 lppd + 2 p_waic, variance over draws with the L - 1 divisor,
/// se = sqrt(n var_i(waic_i)).
inline WaicResult metric_WAIC(const PredictiveSummary& s) {
  const MatrixXd& ld = s.log_density;
  const Eigen::Index L = ld.rows(), n = ld.cols();
  if (L < 2) throw std::invalid_argument("metric_WAIC: need at least two draws");
  if (n == 0) throw std::invalid_argument("metric_WAIC: no units");
  if (!ld.allFinite()) throw std::domain_error("metric_WAIC: non-finite log density");
  WaicResult r;
  std::vector<double> pointwise(static_cast<std::size_t>(n));
  std::vector<double> col(static_cast<std::size_t>(L));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index l = 0; l < L; ++l) col[static_cast<std::size_t>(l)] = ld(l, i);
    const double lppd_i = log_sum_exp(col) - std::log(static_cast<double>(L));
    const double mean = ld.col(i).mean();
    const double var = ld.col(i).minCoeff() == ld.col(i).maxCoeff()
                           ? 0.0
                           : (ld.col(i).array() - mean).square().sum() / static_cast<double>(L - 1);
    r.lppd += lppd_i;
    r.p_waic += var;
    pointwise[static_cast<std::size_t>(i)] = -2.0 * lppd_i + 2.0 * var;
  }
  r.waic = -2.0 * r.lppd + 2.0 * r.p_waic;
  if (n >= 2) {
    double m = 0.0;
    for (double v : pointwise) m += v;
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : pointwise) ss += (v - m) * (v - m);
    r.se = std::sqrt(static_cast<double>(n) * ss / static_cast<double>(n - 1));
  }
  return r;
}

}  // namespace fpbayes
