#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpbayes/rng.hpp"
#include "fpbayes/stat_kernels.hpp"

namespace fpbayes {

struct McmcSettings {
  long draws = 1000;       // kept draws after burn-in
  long burn_in = 1000;
  long adapt_window = 800;  // adaptation stops after this many iterations (<= burn_in)
  long thin = 1;

  void validate() const {
    if (draws < 1 || burn_in < 0 || thin < 1 || adapt_window < 0)
      throw std::invalid_argument("McmcSettings: draws >= 1, burn_in >= 0, thin >= 1 required");
    if (adapt_window > burn_in)
      throw std::invalid_argument("McmcSettings: adaptation must finish within burn-in");
  }
  long total_iterations() const { return burn_in + draws * thin; }
};

struct ChainDiagnostics {
  std::string parameter;
  double acceptance_rate = 0.0;  // post-adaptation
  double step = 0.0;             // frozen proposal scale
  bool ok = true;
};

/// Random-walk Metropolis on one scalar with a batch-adaptive proposal scale.
/// During adaptation the log step moves toward 35% acceptance (inside the
/// 20-50% band) in batches of 50; afterwards it is frozen and acceptance is
/// counted for diagnostics.
class AdaptiveWalk {
 public:
  explicit AdaptiveWalk(std::string name, double step = 0.5) : name_{std::move(name)}, log_step_{std::log(step)} {}

  /// Proposes value + step * z; `log_target` evaluates the unnormalized log
  /// density at a candidate. Returns true when the move is accepted.
  template <typename LogTarget>
  bool step(double& value, double& current_log_target, LogTarget&& log_target, RngHandle& rng) {
    const double proposal = value + std::exp(log_step_) * rng.standard_normal();
    const double lp = log_target(proposal);
    const bool accept = std::isfinite(lp) && std::log(rng.uniform()) < lp - current_log_target;
    if (accept) {
      value = proposal;
      current_log_target = lp;
    }
    record(accept);
    return accept;
  }

  void record(bool accepted) {
    if (adapting_) {
      batch_accepts_ += accepted ? 1 : 0;
      if (++batch_count_ == kBatch) {
        ++batches_;
        const double rate = static_cast<double>(batch_accepts_) / kBatch;
        log_step_ += (rate - kTarget) * std::min(1.0, 3.0 / std::sqrt(static_cast<double>(batches_)));
        log_step_ = std::clamp(log_step_, -25.0, 10.0);
        batch_accepts_ = 0;
        batch_count_ = 0;
      }
    } else {
      ++frozen_tries_;
      frozen_accepts_ += accepted ? 1 : 0;
    }
  }

  void freeze() { adapting_ = false; }

  ChainDiagnostics diagnostics() const {
    ChainDiagnostics d;
    d.parameter = name_;
    d.step = std::exp(log_step_);
    d.acceptance_rate = frozen_tries_ > 0 ? static_cast<double>(frozen_accepts_) / frozen_tries_ : 0.0;
    d.ok = frozen_tries_ == 0 || (d.acceptance_rate >= 0.01 && d.acceptance_rate <= 0.99);
    return d;
  }

 private:
  static constexpr long kBatch = 50;
  static constexpr double kTarget = 0.35;
  std::string name_;
  double log_step_;
  bool adapting_ = true;
  long batch_accepts_ = 0;
  long batch_count_ = 0;
  long batches_ = 0;
  long frozen_tries_ = 0;
  long frozen_accepts_ = 0;
};

/// Elliptical slice sampling for f ~ N(0, LL^T) times a likelihood.
template <typename LogLik>
Eigen::VectorXd elliptical_slice(const Eigen::VectorXd& f, const Eigen::MatrixXd& L, double& cur_loglik,
                                 LogLik&& log_lik, RngHandle& rng) {
  Eigen::VectorXd z(f.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.standard_normal();
  const Eigen::VectorXd nu = L * z;
  const double log_y = cur_loglik + std::log(rng.uniform());
  double theta = 2.0 * std::numbers::pi * rng.uniform();
  double lo = theta - 2.0 * std::numbers::pi, hi = theta;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::VectorXd prop = f * std::cos(theta) + nu * std::sin(theta);
    const double ll = log_lik(prop);
    if (ll > log_y) {
      cur_loglik = ll;
      return prop;
    }
    (theta < 0.0 ? lo : hi) = theta;
    theta = lo + (hi - lo) * rng.uniform();
  }
  return f;
}

/// Effective sample size from the initial positive sequence of autocorrelations.
inline double effective_sample_size(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  if (n < 4) return static_cast<double>(n);
  const double mean = x.mean();
  const Eigen::VectorXd c = x.array() - mean;
  const double c0 = c.squaredNorm() / static_cast<double>(n);
  if (!(c0 > 0.0)) return static_cast<double>(n);
  auto rho = [&](Eigen::Index k) {
    return c.head(n - k).dot(c.tail(n - k)) / (static_cast<double>(n) * c0);
  };
  double sum = 0.0;
  for (Eigen::Index k = 1; k + 1 < n; k += 2) {
    const double pair = rho(k) + rho(k + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  return static_cast<double>(n) / (1.0 + 2.0 * sum);
}

/// Parameter prior used by the spatial samplers: inverse gamma for variances,
/// a uniform box for decay/smoothness, or a point mass (fixed parameter).
struct ScalarPrior {
  enum class Kind { kInverseGamma, kUniform, kFixed };
  Kind kind = Kind::kFixed;
  double p1 = 0.0;  // IG shape or uniform lower bound
  double p2 = 0.0;  // IG rate or uniform upper bound

  static ScalarPrior inverse_gamma(double shape, double rate) { return {Kind::kInverseGamma, shape, rate}; }
  static ScalarPrior uniform(double lo, double hi) { return {Kind::kUniform, lo, hi}; }
  static ScalarPrior fixed() { return {Kind::kFixed, 0.0, 0.0}; }

  bool is_fixed() const noexcept { return kind == Kind::kFixed; }

  /// log prior density of exp(s) plus the log-Jacobian s, i.e. the density
  /// of s = log(value).
  double log_density_log_scale(double s) const {
    const double v = std::exp(s);
    switch (kind) {
      case Kind::kInverseGamma:
        return inverse_gamma_log_pdf(v, p1, p2) + s;
      case Kind::kUniform:
        return (v > p1 && v < p2) ? s : -std::numeric_limits<double>::infinity();
      case Kind::kFixed:
        return 0.0;
    }
    return 0.0;
  }
};

}  // namespace fpbayes
