#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fpbayes/posterior_draws.hpp"
#include "fpbayes/stat_kernels.hpp"

namespace fpbayes {

/// Conjugate prior mu ~ N(theta, sigma^2 / n0), sigma^2 ~ IG(a0, b0) for an
/// exchangeable population Y_i ~ N(mu, sigma^2).
struct SrsworPrior {
  double theta = 0.0;
  double n0 = 0.0;
  double a0 = 0.0;
  double b0 = 0.0;

  /// Flat prior on (mu, log sigma^2): the exact n0 = 0, a0 = -1/2, b0 = 0 limit.
  static SrsworPrior reference() { return SrsworPrior{0.0, 0.0, -0.5, 0.0}; }
};

struct SrsworPosterior {
  double a1 = 0.0;
  double b1 = 0.0;
  double post_mean_mu = 0.0;   // (n0 theta + n ybar) / (n0 + n)
  double post_scale_mu = 0.0;  // 1 / (n0 + n); Var(mu | sigma^2, y) = sigma^2 * this
  long n = 0;
  long N = 0;
  double ybar = 0.0;
  double s2 = 0.0;
  SrsworPrior prior;

  /// Sampling fraction n/N and its complement (N - n)/N, both from integers.
  double sampling_fraction() const { return static_cast<double>(n) / static_cast<double>(N); }
  double unsampled_fraction() const {
    return static_cast<double>(N - n) / static_cast<double>(N);
  }
};

/// Posterior hyperparameters. Summation runs over the sorted sample so the
/// result does not depend on the order of y at all, not even in the last bit.
inline SrsworPosterior fit_srswor(std::span<const double> y, long N, const SrsworPrior& prior) {
  const long n = static_cast<long>(y.size());
  if (n == 0) throw std::invalid_argument("fit_srswor: empty sample");
  if (n > N) throw std::invalid_argument("fit_srswor: sample larger than population");
  if (prior.n0 < 0.0 || prior.b0 < 0.0)
    throw std::invalid_argument("fit_srswor: n0 and b0 must be nonnegative");
  if (n == 1 && prior.b0 == 0.0)
    throw std::invalid_argument("fit_srswor: n = 1 with b0 = 0 gives an improper posterior");

  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) {
    if (!std::isfinite(v)) throw std::invalid_argument("fit_srswor: non-finite observation");
    sum += v;
  }
  const double nd = static_cast<double>(n);
  const double ybar = sum / nd;
  double ss = 0.0;
  for (double v : sorted) ss += (v - ybar) * (v - ybar);

  SrsworPosterior post;
  post.prior = prior;
  post.n = n;
  post.N = N;
  post.ybar = ybar;
  post.s2 = n > 1 ? ss / (nd - 1.0) : 0.0;
  const double shrink = prior.n0 * nd / (prior.n0 + nd);
  const double f = ss + shrink * (ybar - prior.theta) * (ybar - prior.theta);
  post.a1 = prior.a0 + 0.5 * nd;
  post.b1 = prior.b0 + 0.5 * f;
  post.post_mean_mu = (prior.n0 * prior.theta + nd * ybar) / (prior.n0 + nd);
  post.post_scale_mu = 1.0 / (prior.n0 + nd);
  if (!(post.a1 > 0.0))
    throw std::invalid_argument("fit_srswor: posterior shape a0 + n/2 must be positive");
  return post;
}

struct MomentPair {
  double mean = 0.0;
  double variance = 0.0;
};

/// Moments of a^T Y given sigma^2 and the sample. The first n entries of `a`
/// weight the sampled units (in the order of `y`), the rest the unsampled ones.
inline MomentPair linear_functional_posterior(const SrsworPosterior& post,
                                              std::span<const double> y,
                                              std::span<const double> a, double sigma2) {
  if (static_cast<long>(a.size()) != post.N)
    throw std::invalid_argument("linear_functional_posterior: weights must have length N");
  if (static_cast<long>(y.size()) != post.n)
    throw std::invalid_argument("linear_functional_posterior: y must have length n");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("linear_functional_posterior: sigma2 must be positive");

  double sampled = 0.0;
  for (long i = 0; i < post.n; ++i) sampled += a[i] * y[i];
  double a_sum = 0.0, a_sq = 0.0;
  for (long i = post.n; i < post.N; ++i) {
    a_sum += a[i];
    a_sq += a[i] * a[i];
  }
  MomentPair out;
  out.mean = sampled + a_sum * post.post_mean_mu;
  out.variance = sigma2 * (a_sum * a_sum * post.post_scale_mu + a_sq);
  return out;
}

/// Location of the population-mean pivot: f ybar + (1 - f)(n0 theta + n ybar)/(n0 + n).
inline double population_mean_location(const SrsworPosterior& post) {
  return post.sampling_fraction() * post.ybar + post.unsampled_fraction() * post.post_mean_mu;
}

/// Var(Ybar | sigma^2, y) / sigma^2 = (1 - f)(1 + f0)/(n + n0).
inline double population_mean_scale2(const SrsworPosterior& post) {
  const double one_plus_f0 = (static_cast<double>(post.N) + post.prior.n0) / static_cast<double>(post.N);
  return post.unsampled_fraction() * one_plus_f0 * post.post_scale_mu;
}

/// Composition draws: sigma^2 ~ IG(a1, b1), then Ybar | sigma^2 from the pivot.
/// Columns: "sigma2", "pop_mean".
inline PosteriorDraws population_mean_posterior_draws(const SrsworPosterior& post, long ndraws,
                                                      RngHandle& rng) {
  if (ndraws < 1) throw std::invalid_argument("population_mean_posterior_draws: ndraws must be >= 1");
  if (!(post.a1 > 0.0) || !(post.b1 > 0.0))
    throw std::domain_error("population_mean_posterior_draws: improper posterior for sigma^2");
  PosteriorDraws draws({"sigma2", "pop_mean"}, ndraws);
  const double loc = population_mean_location(post);
  const double scale2 = population_mean_scale2(post);
  for (long l = 0; l < ndraws; ++l) {
    const double sigma2 = sample_inverse_gamma(post.a1, post.b1, rng);
    draws(l, 0) = sigma2;
    draws(l, 1) = sample_normal(loc, sigma2 * scale2, rng);
  }
  return draws;
}

}  // namespace fpbayes
