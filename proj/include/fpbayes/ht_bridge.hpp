#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpbayes {

/// Inclusion probabilities for all N population units plus the sampled index set.
struct InclusionProbs {
  std::vector<double> pi;
  std::vector<std::size_t> sampled;

  /// Convenience for callers that only know the sampled units' probabilities.
  static InclusionProbs sampled_only(std::vector<double> pi_sampled) {
    InclusionProbs p;
    p.sampled.resize(pi_sampled.size());
    for (std::size_t k = 0; k < p.sampled.size(); ++k) p.sampled[k] = k;
    p.pi = std::move(pi_sampled);
    return p;
  }

  std::size_t n() const noexcept { return sampled.size(); }
  double pi_of_sampled(std::size_t k) const { return pi.at(sampled.at(k)); }
};

/// How the sum(pi) = n identity of fixed-size designs is treated.
enum class DesignSizeCheck {
  kEnforce,  // fixed-size design: violation is an error
  kWarn      // random-size design (e.g. Bernoulli): violation is recorded as a warning
};

struct HtModelFit {
  double beta_post_mean = 0.0;
  std::vector<double> weights_w;
  std::vector<double> weights_wtilde;
  double total_post_mean = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_sample(std::span<const double> y, const InclusionProbs& p) {
  if (y.empty() || p.sampled.empty()) throw std::invalid_argument("ht: empty sample");
  if (y.size() != p.sampled.size())
    throw std::invalid_argument("ht: sampled values and sampled index set differ in length");
  for (std::size_t idx : p.sampled)
    if (idx >= p.pi.size()) throw std::out_of_range("ht: sampled index outside population");
}

inline void check_design_size(const InclusionProbs& p, DesignSizeCheck check,
                              std::vector<std::string>& warnings) {
  double total = 0.0;
  for (double v : p.pi) total += v;
  const double n = static_cast<double>(p.n());
  if (std::abs(total - n) <= 1e-8 * std::max(1.0, n)) return;
  const std::string msg = "sum of inclusion probabilities (" + std::to_string(total) +
                          ") differs from sample size " + std::to_string(p.n());
  if (check == DesignSizeCheck::kEnforce) throw std::invalid_argument("ht: " + msg);
  warnings.push_back(msg);
}

}  // namespace detail

/// sum_i y_i / pi_i over the sampled units.
inline double ht_estimator(std::span<const double> y, const InclusionProbs& p) {
  detail::check_sample(y, p);
  double total = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double pk = p.pi_of_sampled(k);
    if (!(pk > 0.0)) throw std::invalid_argument("ht_estimator: inclusion probability must be > 0");
    total += y[k] / pk;
  }
  return total;
}

/// Y_i = pi_i beta + pi_i e_i, e_i ~ N(0, 1), flat prior on beta. The
/// posterior mean of the total is the HT estimator plus the sum of sampled
/// residuals y_i - pi_i E[beta | y].
inline HtModelFit fit_ht_approx(std::span<const double> y, const InclusionProbs& p,
                                DesignSizeCheck check = DesignSizeCheck::kEnforce) {
  detail::check_sample(y, p);
  HtModelFit fit;
  detail::check_design_size(p, check, fit.warnings);
  const double n = static_cast<double>(y.size());
  const double ht = ht_estimator(y, p);
  fit.beta_post_mean = ht / n;
  fit.weights_w.assign(y.size(), 1.0 / n);
  fit.weights_wtilde.resize(y.size());
  double residual = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double pk = p.pi_of_sampled(k);
    residual += y[k] - pk * fit.beta_post_mean;
    // Total = sum_k wtilde_k y_k with wtilde_k = 1/pi_k + 1 - sum_j (pi_j / n) / pi_k.
    fit.weights_wtilde[k] = 1.0 / pk + 1.0;
  }
  double pi_sum = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) pi_sum += p.pi_of_sampled(k);
  for (std::size_t k = 0; k < y.size(); ++k)
    fit.weights_wtilde[k] -= pi_sum / (n * p.pi_of_sampled(k));
  fit.total_post_mean = ht + residual;
  return fit;
}

/// Same model with Var(e_i) = 1 / (1 - pi_i): the posterior mean of the total
/// reproduces the HT estimator exactly, wtilde_i = 1 / pi_i.
inline HtModelFit fit_ht_exact(std::span<const double> y, const InclusionProbs& p,
                               DesignSizeCheck check = DesignSizeCheck::kEnforce) {
  detail::check_sample(y, p);
  HtModelFit fit;
  detail::check_design_size(p, check, fit.warnings);
  const std::size_t n = y.size();
  double precision_sum = 0.0;
  double pi_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double pk = p.pi_of_sampled(k);
    if (!(pk > 0.0 && pk < 1.0))
      throw std::invalid_argument("fit_ht_exact: inclusion probabilities must lie in (0, 1)");
    precision_sum += 1.0 - pk;  // 1 / sigma_k^2
    pi_sum += pk;
  }
  fit.weights_w.resize(n);
  fit.weights_wtilde.resize(n);
  // Unsampled mass of pi: sum_{i not in s} pi_i = n - sum_{i in s} pi_i.
  const double unsampled_pi = static_cast<double>(n) - pi_sum;
  fit.beta_post_mean = 0.0;
  fit.total_post_mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double pk = p.pi_of_sampled(k);
    fit.weights_w[k] = (1.0 - pk) / precision_sum;
    fit.beta_post_mean += fit.weights_w[k] * y[k] / pk;
    fit.weights_wtilde[k] = 1.0 + unsampled_pi * fit.weights_w[k] / pk;
    fit.total_post_mean += fit.weights_wtilde[k] * y[k];
  }
  return fit;
}

}  // namespace fpbayes
