#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpbayes/posterior_draws.hpp"
#include "fpbayes/stat_kernels.hpp"

namespace fpbayes {

/// Thrown when a posterior moment does not exist (e.g. variance with shape <= 1).
class improper_moment : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// nu ~ N(c0, delta^2 / n0), delta^2 ~ IG(a0, b0). n0 = 0 is the flat-nu limit.
struct TwoStagePrior {
  double c0 = 0.0;
  double n0 = 0.0;
  double a0 = 0.0;
  double b0 = 0.0;
};

/// Y_ij ~ N(x_i beta_i, delta^2 / gamma_i^2), beta_i ~ N(nu, delta^2),
/// i = 0..N-1, j = 0..M_i-1. `x` is optional (empty means x_i = 1).
struct TwoStageConfig {
  std::vector<long> M;
  std::vector<double> gamma2;
  TwoStagePrior prior;
  std::vector<double> x;

  std::size_t N() const noexcept { return M.size(); }
  double regressor(std::size_t i) const { return x.empty() ? 1.0 : x.at(i); }

  void validate() const {
    if (M.empty()) throw std::invalid_argument("TwoStageConfig: no primary units");
    if (gamma2.size() != M.size())
      throw std::invalid_argument("TwoStageConfig: gamma2 must have one entry per primary unit");
    if (!x.empty() && x.size() != M.size())
      throw std::invalid_argument("TwoStageConfig: x must have one entry per primary unit");
    for (std::size_t i = 0; i < M.size(); ++i) {
      if (M[i] < 1) throw std::invalid_argument("TwoStageConfig: M_i must be >= 1");
      if (!(gamma2[i] > 0.0)) throw std::invalid_argument("TwoStageConfig: gamma_i^2 must be > 0");
      if (!x.empty() && x[i] == 0.0) throw std::invalid_argument("TwoStageConfig: x_i must be nonzero");
    }
    if (prior.n0 < 0.0 || prior.b0 < 0.0)
      throw std::invalid_argument("TwoStageConfig: n0 and b0 must be nonnegative");
  }
};

/// Sufficient statistics of one primary unit's secondary sample:
/// size, mean and within-block sum of squared deviations.
struct BlockSummary {
  long m = 0;
  double mean = 0.0;
  double ss = 0.0;

  static BlockSummary of(std::span<const double> y) {
    BlockSummary s;
    for (double v : y) s.push(v);
    return s;
  }

  void push(double v) {
    ++m;
    const double d = v - mean;
    mean += d / static_cast<double>(m);
    ss += d * (v - mean);
  }
};

/// A sampled primary unit: its label and the reduced secondary sample.
struct PrimarySample {
  std::size_t primary = 0;
  BlockSummary block;
};

/// lambda = m gamma^2 / (1 + m gamma^2).
inline double shrinkage_weight(long m, double gamma2) {
  const double mg = static_cast<double>(m) * gamma2;
  return mg / (1.0 + mg);
}

/// Running Normal-Inverse-Gamma hyperparameters of (nu, delta^2) in
/// information form: nu | delta^2 ~ N(c / C_inv, delta^2 / C_inv).
struct NuDeltaState {
  double c = 0.0;
  double C_inv = 0.0;
  double a = 0.0;
  double b = 0.0;
  double lambda_seen = 0.0;
  long t = 0;

  static NuDeltaState from_prior(const TwoStagePrior& p) {
    NuDeltaState s;
    s.c = p.n0 * p.c0;
    s.C_inv = p.n0;
    s.a = p.a0;
    s.b = p.b0;
    return s;
  }

  double nu_mean() const {
    if (!(C_inv > 0.0)) throw improper_moment("NuDeltaState: nu has no posterior mean yet");
    return c / C_inv;
  }
};

/// Consume one primary unit. The block covariance (1/gamma^2) I + 1 1^T is
/// handled through its Sherman-Morrison inverse, so only (m, ybar, ss) are
/// needed; q_t is evaluated as gamma^2 ss + (P lambda / (P + lambda)) (ybar - mu)^2,
/// algebraically equal to c_{t-1}^2 C_{t-1} + y^T V^{-1} y - c_t^2 C_t without the
/// cancellation.
inline NuDeltaState update_nu_delta(const NuDeltaState& state, const BlockSummary& block,
                                    double gamma2, double x = 1.0) {
  if (block.m < 1) throw std::invalid_argument("update_nu_delta: empty block");
  if (!(gamma2 > 0.0)) throw std::invalid_argument("update_nu_delta: gamma^2 must be > 0");
  if (x == 0.0) throw std::invalid_argument("update_nu_delta: regressor must be nonzero");
  // y / x = beta + e / x reduces a regressor to rescaled data and precision.
  const double ybar = block.mean / x;
  const double ss = block.ss / (x * x);
  const double g2 = gamma2 * x * x;
  const double lambda = shrinkage_weight(block.m, g2);

  NuDeltaState next = state;
  const double P = state.C_inv;
  const double shrink = P > 0.0 ? P * lambda / (P + lambda) : 0.0;
  const double prior_mean = P > 0.0 ? state.c / P : 0.0;
  const double q = g2 * ss + shrink * (ybar - prior_mean) * (ybar - prior_mean);
  next.c = state.c + lambda * ybar;
  next.C_inv = state.C_inv + lambda;
  next.a = state.a + 0.5 * static_cast<double>(block.m);
  next.b = state.b + 0.5 * q;
  next.lambda_seen = state.lambda_seen + lambda;
  next.t = state.t + 1;
  return next;
}

inline NuDeltaState update_nu_delta(const NuDeltaState& state, std::span<const double> y_t,
                                    double gamma2, double x = 1.0) {
  if (y_t.empty()) throw std::invalid_argument("update_nu_delta: empty block");
  return update_nu_delta(state, BlockSummary::of(y_t), gamma2, x);
}

/// Stream every sampled primary unit through update_nu_delta.
inline NuDeltaState fit_two_stage(const TwoStageConfig& config,
                                  std::span<const PrimarySample> samples) {
  config.validate();
  NuDeltaState s = NuDeltaState::from_prior(config.prior);
  for (const auto& ps : samples) {
    if (ps.primary >= config.N()) throw std::out_of_range("fit_two_stage: primary label out of range");
    if (ps.block.m > config.M[ps.primary])
      throw std::invalid_argument("fit_two_stage: m_i exceeds M_i");
    s = update_nu_delta(s, ps.block, config.gamma2[ps.primary], config.regressor(ps.primary));
  }
  return s;
}

/// Marginal Var(nu | y) = b C / (a - 1); needs a > 1.
inline double nu_marginal_variance(const NuDeltaState& s) {
  if (!(s.a > 1.0)) throw improper_moment("nu_marginal_variance: a_t <= 1, variance is infinite");
  if (!(s.C_inv > 0.0)) throw improper_moment("nu_marginal_variance: nu is improper");
  return s.b / ((s.a - 1.0) * s.C_inv);
}

/// Joint draws of (nu, delta^2). Columns: "nu", "delta2".
inline PosteriorDraws draw_nu_delta(const NuDeltaState& s, long ndraws, RngHandle& rng) {
  if (!(s.a > 0.0) || !(s.b > 0.0) || !(s.C_inv > 0.0))
    throw improper_moment("draw_nu_delta: posterior is improper");
  PosteriorDraws d({"nu", "delta2"}, ndraws);
  const double mean = s.c / s.C_inv;
  for (long l = 0; l < ndraws; ++l) {
    const double delta2 = sample_inverse_gamma(s.a, s.b, rng);
    d(l, 0) = sample_normal(mean, delta2 / s.C_inv, rng);
    d(l, 1) = delta2;
  }
  return d;
}

/// Per-primary lambda_i (0 for unsampled) and rescaled sample means.
struct PrimaryShrinkage {
  std::vector<double> lambda;
  std::vector<double> ybar;
  std::vector<long> m;

  PrimaryShrinkage(const TwoStageConfig& config, std::span<const PrimarySample> samples)
      : lambda(config.N(), 0.0), ybar(config.N(), 0.0), m(config.N(), 0) {
    for (const auto& ps : samples) {
      const double x = config.regressor(ps.primary);
      lambda[ps.primary] = shrinkage_weight(ps.block.m, config.gamma2[ps.primary] * x * x);
      ybar[ps.primary] = ps.block.mean / x;
      m[ps.primary] = ps.block.m;
    }
  }

  double lambda_sum() const {
    double s = 0.0;
    for (double l : lambda) s += l;
    return s;
  }
};

/// beta | nu, delta^2, y: independent N((1 - lambda_i) nu + lambda_i ybar_i,
/// delta^2 (1 - lambda_i)), plus eta^2 = delta^2 C, the variance that nu
/// contributes after marginalizing it.
struct BetaPosterior {
  std::vector<double> means;
  std::vector<double> cond_vars;
  double eta2 = 0.0;
};

inline BetaPosterior beta_conditional(const PrimaryShrinkage& sh, const NuDeltaState& s, double nu,
                                      double delta2) {
  BetaPosterior bp;
  const std::size_t N = sh.lambda.size();
  bp.means.resize(N);
  bp.cond_vars.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    bp.means[i] = (1.0 - sh.lambda[i]) * nu + sh.lambda[i] * sh.ybar[i];
    bp.cond_vars[i] = delta2 * (1.0 - sh.lambda[i]);
  }
  bp.eta2 = s.C_inv > 0.0 ? delta2 / s.C_inv : 0.0;
  return bp;
}

/// One beta vector per (nu, delta^2) draw; scalar draws only, no N x N matrix.
/// Columns "beta[i]".
inline PosteriorDraws draw_beta(const PosteriorDraws& nu_delta, const TwoStageConfig& config,
                                std::span<const PrimarySample> samples, RngHandle& rng) {
  const PrimaryShrinkage sh(config, samples);
  const std::size_t N = config.N();
  std::vector<std::string> names(N);
  for (std::size_t i = 0; i < N; ++i) names[i] = "beta[" + std::to_string(i) + "]";
  PosteriorDraws out(std::move(names), nu_delta.ndraws());
  const Eigen::Index nu_col = nu_delta.index_of("nu");
  const Eigen::Index d_col = nu_delta.index_of("delta2");
  for (Eigen::Index l = 0; l < nu_delta.ndraws(); ++l) {
    const double nu = nu_delta(l, nu_col);
    const double delta2 = nu_delta(l, d_col);
    for (std::size_t i = 0; i < N; ++i) {
      const double mean = (1.0 - sh.lambda[i]) * nu + sh.lambda[i] * sh.ybar[i];
      out(l, static_cast<Eigen::Index>(i)) = sample_normal(mean, delta2 * (1.0 - sh.lambda[i]), rng);
    }
  }
  return out;
}

/// Y_ij ~ N(x_i beta_i, delta^2 / gamma_i^2) for every unobserved secondary
/// unit j = m_i..M_i-1. Columns "Y[i,j]"; empty when every unit is observed.
inline PosteriorDraws draw_unobserved_units(const PosteriorDraws& beta_draws,
                                            const Eigen::VectorXd& delta2_draws,
                                            const TwoStageConfig& config,
                                            std::span<const PrimarySample> samples, RngHandle& rng) {
  if (delta2_draws.size() != beta_draws.ndraws())
    throw std::invalid_argument("draw_unobserved_units: one delta^2 per beta draw required");
  std::vector<long> m(config.N(), 0);
  for (const auto& ps : samples) m.at(ps.primary) = ps.block.m;
  std::vector<std::string> names;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < config.N(); ++i) {
    if (m[i] > config.M[i]) throw std::invalid_argument("draw_unobserved_units: m_i exceeds M_i");
    for (long j = m[i]; j < config.M[i]; ++j) {
      names.push_back("Y[" + std::to_string(i) + "," + std::to_string(j) + "]");
      owner.push_back(i);
    }
  }
  PosteriorDraws out(std::move(names), beta_draws.ndraws());
  for (Eigen::Index l = 0; l < beta_draws.ndraws(); ++l) {
    for (std::size_t k = 0; k < owner.size(); ++k) {
      const std::size_t i = owner[k];
      out(l, static_cast<Eigen::Index>(k)) =
          sample_normal(config.regressor(i) * beta_draws(l, static_cast<Eigen::Index>(i)),
                        delta2_draws(l) / config.gamma2[i], rng);
    }
  }
  return out;
}

/// Weights a_ij of Omega = sum_ij a_ij Y_ij. a[i] has length M_i; its first
/// m_i entries belong to the sampled secondary units of primary i.
struct OmegaWeights {
  std::vector<std::vector<double>> a;

  static OmegaWeights population_total(const TwoStageConfig& config) {
    OmegaWeights w;
    for (long Mi : config.M) w.a.emplace_back(static_cast<std::size_t>(Mi), 1.0);
    return w;
  }
};

/// A sampled primary unit with its raw secondary values (needed when the
/// sampled weights a_ij vary within the unit).
struct PrimaryBlock {
  std::size_t primary = 0;
  std::vector<double> y;
};

namespace detail {

struct OmegaParts {
  double sampled = 0.0;                // sum over sampled units of a_ij y_ij
  std::vector<double> unsampled_sum;   // a_i = sum over unobserved j of a_ij
};

inline OmegaParts omega_parts(const TwoStageConfig& config, const OmegaWeights& w,
                              std::span<const PrimaryBlock> blocks) {
  if (w.a.size() != config.N()) throw std::invalid_argument("omega: weights need one row per primary");
  std::vector<long> m(config.N(), 0);
  OmegaParts parts;
  for (const auto& b : blocks) {
    const auto& ai = w.a.at(b.primary);
    if (static_cast<long>(b.y.size()) > config.M[b.primary])
      throw std::invalid_argument("omega: m_i exceeds M_i");
    m[b.primary] = static_cast<long>(b.y.size());
    for (std::size_t j = 0; j < b.y.size(); ++j) parts.sampled += ai.at(j) * b.y[j];
  }
  parts.unsampled_sum.assign(config.N(), 0.0);
  for (std::size_t i = 0; i < config.N(); ++i) {
    if (static_cast<long>(w.a[i].size()) != config.M[i])
      throw std::invalid_argument("omega: weight row length must equal M_i");
    for (long j = m[i]; j < config.M[i]; ++j) parts.unsampled_sum[i] += w.a[i][static_cast<std::size_t>(j)];
  }
  return parts;
}

inline std::vector<PrimarySample> summarize_blocks(std::span<const PrimaryBlock> blocks) {
  std::vector<PrimarySample> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back({b.primary, BlockSummary::of(b.y)});
  return out;
}

}  // namespace detail

/// E[Omega | y] in the flat-nu limit (n0 -> 0), in the closed weighted form
/// sum_{sampled ij} {a_ij + (a_i + k) lambda_i / m_i} y_ij with
/// k = sum_i a_i (1 - lambda_i) / sum_i lambda_i. Requires x_i = 1.
inline double omega_posterior_mean(const TwoStageConfig& config, const OmegaWeights& w,
                                   std::span<const PrimaryBlock> blocks) {
  config.validate();
  if (!config.x.empty())
    for (double xi : config.x)
      if (xi != 1.0) throw std::invalid_argument("omega_posterior_mean: closed form assumes x_i = 1");
  const auto samples = detail::summarize_blocks(blocks);
  const PrimaryShrinkage sh(config, samples);
  const double lambda_sum = sh.lambda_sum();
  if (!(lambda_sum > 0.0)) throw std::domain_error("omega_posterior_mean: sum of lambda_i is zero");
  const auto parts = detail::omega_parts(config, w, blocks);
  double k_num = 0.0;
  for (std::size_t i = 0; i < config.N(); ++i) k_num += parts.unsampled_sum[i] * (1.0 - sh.lambda[i]);
  const double k = k_num / lambda_sum;
  double total = 0.0;
  for (const auto& b : blocks) {
    const std::size_t i = b.primary;
    const double coef_extra =
        (parts.unsampled_sum[i] + k) * sh.lambda[i] / static_cast<double>(b.y.size());
    for (std::size_t j = 0; j < b.y.size(); ++j) total += (w.a[i][j] + coef_extra) * b.y[j];
  }
  return total;
}

/// E[Omega | y] under the configured prior (any n0, any x_i), via
/// E[Y_ij | y] = x_i ((1 - lambda_i) E[nu | y] + lambda_i ybar_i).
inline double omega_posterior_mean(const TwoStageConfig& config, const OmegaWeights& w,
                                   std::span<const PrimaryBlock> blocks, const NuDeltaState& state) {
  const auto samples = detail::summarize_blocks(blocks);
  const PrimaryShrinkage sh(config, samples);
  const auto parts = detail::omega_parts(config, w, blocks);
  const double nu_hat = state.nu_mean();
  double total = parts.sampled;
  for (std::size_t i = 0; i < config.N(); ++i)
    total += parts.unsampled_sum[i] * config.regressor(i) *
             ((1.0 - sh.lambda[i]) * nu_hat + sh.lambda[i] * sh.ybar[i]);
  return total;
}

/// Composition draws of Omega: (nu, delta^2) -> beta -> every unobserved
/// Y_ij, summed with its weight. Memory is O(N) per draw.
inline Eigen::VectorXd omega_draws(const NuDeltaState& state, const TwoStageConfig& config,
                                   const OmegaWeights& w, std::span<const PrimaryBlock> blocks,
                                   long ndraws, RngHandle& rng) {
  const auto samples = detail::summarize_blocks(blocks);
  const PrimaryShrinkage sh(config, samples);
  const auto parts = detail::omega_parts(config, w, blocks);
  const PosteriorDraws nd = draw_nu_delta(state, ndraws, rng);
  Eigen::VectorXd out(ndraws);
  for (long l = 0; l < ndraws; ++l) {
    const double nu = nd(l, 0);
    const double delta2 = nd(l, 1);
    double total = parts.sampled;
    for (std::size_t i = 0; i < config.N(); ++i) {
      const double beta = sample_normal((1.0 - sh.lambda[i]) * nu + sh.lambda[i] * sh.ybar[i],
                                        delta2 * (1.0 - sh.lambda[i]), rng);
      const double mean = config.regressor(i) * beta;
      const double var = delta2 / config.gamma2[i];
      const auto& ai = w.a[i];
      for (long j = sh.m[i]; j < config.M[i]; ++j)
        total += ai[static_cast<std::size_t>(j)] * sample_normal(mean, var, rng);
    }
    out(l) = total;
  }
  return out;
}

}  // namespace fpbayes
