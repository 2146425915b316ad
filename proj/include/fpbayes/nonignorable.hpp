#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fpbayes/kriging.hpp"
#include "fpbayes/mcmc.hpp"
#include "fpbayes/posterior_draws.hpp"
#include "fpbayes/stat_kernels.hpp"

namespace fpbayes {

/// Outcome:   Y(l) = x(l)^T beta + w(l) + eps(l),  eps ~ N(0, sigma2)
/// Inclusion: Z(l) ~ Ber(pi(l)), logit pi(l) = b0Z + b1Z Y(l) + x_Z(l)^T bZ + omega(l)
/// Locations with u(l) = 0 are outside the finite population (Y = 0, Z = 0).
struct NonignorableModel {
  UnitSet units;             // every location; X holds the outcome covariates
  std::vector<bool> u;       // empty means u == 1 everywhere
  MatrixXd XZ;               // inclusion covariates (rows = locations), may have 0 columns

  BetaPrior beta_prior;
  double sigma2 = 1.0;
  ScalarPrior sigma2_prior = ScalarPrior::inverse_gamma(2.0, 1.0);
  std::optional<SpatialComponent> w;

  bool model_inclusion = true;  // false: Z is ignored (ignorable fit)
  VectorXd beta_z;              // (b0Z, b1Z, bZ...), starting or fixed values
  std::vector<bool> beta_z_fixed;
  double beta_z_prior_sd = 10.0;
  std::optional<SpatialComponent> omega;

  // Pilot runs from these b1Z starts (in units of 1 / sd of the sampled
  // outcomes); each chain continues from the pilot with the highest mean log
  // joint density. Fewer than two starts or a zero length disables them.
  std::vector<double> slope_starts{-2.0, 0.0, 2.0};
  long pilot_iterations = 400;

  Eigen::Index N() const noexcept { return units.size(); }
  Eigen::Index p() const noexcept { return units.X.cols(); }
  Eigen::Index pz() const noexcept { return 2 + XZ.cols(); }
  bool in_population(Eigen::Index l) const { return u.empty() || u[static_cast<std::size_t>(l)]; }

  void validate() const {
    units.validate("nonignorable units");
    if (!u.empty() && static_cast<Eigen::Index>(u.size()) != N())
      throw std::invalid_argument("NonignorableModel: u flags differ in length from the locations");
    if (XZ.rows() != N() && !(XZ.size() == 0 && XZ.cols() == 0))
      throw std::invalid_argument("NonignorableModel: inclusion covariates need one row per location");
    if (beta_prior.mean.size() != p()) throw std::invalid_argument("NonignorableModel: beta prior dimension");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("NonignorableModel: sigma2 must start > 0");
    if (model_inclusion) {
      if (beta_z.size() != pz()) throw std::invalid_argument("NonignorableModel: beta_z has the wrong length");
      if (!beta_z.allFinite()) throw std::invalid_argument("NonignorableModel: logit coefficients must be finite");
      if (!beta_z_fixed.empty() && static_cast<Eigen::Index>(beta_z_fixed.size()) != pz())
        throw std::invalid_argument("NonignorableModel: beta_z_fixed has the wrong length");
      if (pilot_iterations < 0) throw std::invalid_argument("NonignorableModel: pilot_iterations must be >= 0");
      for (double v : slope_starts)
        if (!std::isfinite(v)) throw std::invalid_argument("NonignorableModel: slope starts must be finite");
    } else if (omega) {
      throw std::invalid_argument("NonignorableModel: omega needs the inclusion model");
    }
    if (w) w->spec().validate();
    if (omega) omega->spec().validate();
  }
};

/// Sampler state over the finite-population locations (u = 1), in the order
/// of NonignorableSampler::fp().
struct NonignorableState {
  VectorXd Y;
  VectorXd beta;
  double sigma2 = 1.0;
  VectorXd w;  // zeros when the model has no w
  double w_tau2 = 0.0, w_phi = 1.0, w_eta = 0.5;
  VectorXd beta_z;
  VectorXd omega;
  double omega_tau2 = 0.0, omega_phi = 1.0, omega_eta = 0.5;
};

struct NonignorableResult {
  PosteriorDraws draws;  // beta, sigma2, theta_w, beta_z, theta_omega, pop_mean, Y[id]
  MatrixXd pointwise_log_density;  // draws x n (sampled units)
  MatrixXd replicates;
  std::vector<ChainDiagnostics> diagnostics;

  bool converged() const {
    return std::all_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.ok; });
  }
};

namespace detail {

/// log Phi(z), accurate far into the lower tail.
inline double log_normal_cdf(double z) {
  if (z > -37.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  const double z2 = z * z;
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
}

/// Standard normal conditioned on X >= a.
inline double draw_normal_above(double a, RngHandle& rng) {
  if (a <= 0.5) {
    for (;;) {
      const double x = rng.standard_normal();
      if (x >= a) return x;
    }
  }
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double x = a - std::log1p(-rng.uniform()) / alpha;
    if (std::log(rng.uniform()) <= -0.5 * (x - alpha) * (x - alpha)) return x;
  }
}

/// log E[1 - logistic(c + b Y)] for Y ~ N(mu, s2). The log integrand over the
/// standardized variable is concave with curvature <= -1, so the integral is
/// taken over mode +- 12.
inline double log_logistic_normal_complement(double c, double b, double mu, double s2) {
  const double s = std::sqrt(s2);
  const double a0 = c + b * mu, bs = b * s;
  auto ell = [&](double t) { return -0.5 * t * t - log1p_exp(a0 + bs * t); };
  double lo = -std::abs(bs) - 1.0, hi = std::abs(bs) + 1.0, t = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double sig = 1.0 / (1.0 + std::exp(-(a0 + bs * t)));
    const double g = -t - bs * sig;
    if (std::abs(g) < 1e-12) break;
    (g > 0.0 ? lo : hi) = t;
    const double next = t - g / (-1.0 - bs * bs * sig * (1.0 - sig));
    t = (next > lo && next < hi) ? next : 0.5 * (lo + hi);
  }
  const double peak = ell(t);
  const double area = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double x) { return std::exp(ell(x) - peak); }, t - 12.0, t + 12.0, 15, 1e-9);
  return peak + std::log(area) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// Exact draw from the density proportional to N(y; mu, s2) (1 - logistic(c + b y)).
/// Envelope N min(1, exp(-(c + b y))): two truncated normals, acceptance >= 1/2.
inline double draw_logistic_normal_complement(double c, double b, double mu, double s2, RngHandle& rng) {
  if (b == 0.0) return sample_normal(mu, s2, rng);
  if (b < 0.0) return -draw_logistic_normal_complement(c, -b, -mu, s2, rng);
  const double s = std::sqrt(s2);
  const double y0 = -c / b;  // c + b y <= 0 below y0
  const double z1 = (y0 - mu) / s;
  const double mu2 = mu - b * s2;
  const double z2 = (y0 - mu2) / s;
  const double lw1 = log_normal_cdf(z1);
  const double lw2 = -(c + b * mu) + 0.5 * b * b * s2 + log_normal_cdf(-z2);
  const double p1 = 1.0 / (1.0 + std::exp(lw2 - lw1));
  for (;;) {
    if (rng.uniform() < p1) {
      const double y = mu - s * draw_normal_above(-z1, rng);
      if (rng.uniform() < 1.0 / (1.0 + std::exp(c + b * y))) return y;
    } else {
      const double y = mu2 + s * draw_normal_above(z2, rng);
      if (rng.uniform() < 1.0 / (1.0 + std::exp(-(c + b * y)))) return y;
    }
  }
}

}  // namespace detail

class NonignorableSampler {
 public:
  /// z: inclusion flag for every location; y: values of the sampled
  /// locations in location order.
  NonignorableSampler(NonignorableModel model, std::vector<bool> z, std::vector<double> y)
      : m_{std::move(model)}, z_all_{std::move(z)} {
    m_.validate();
    if (static_cast<Eigen::Index>(z_all_.size()) != m_.N())
      throw std::invalid_argument("fit_nonignorable: Z must be observed at every location");
    for (Eigen::Index l = 0; l < m_.N(); ++l) {
      if (!m_.in_population(l)) {
        if (z_all_[static_cast<std::size_t>(l)])
          throw std::invalid_argument("fit_nonignorable: a structural-zero location cannot be sampled");
        continue;
      }
      fp_.push_back(l);
    }
    const auto nfp = static_cast<Eigen::Index>(fp_.size());
    if (nfp == 0) throw std::invalid_argument("fit_nonignorable: empty finite population");
    X_.resize(nfp, m_.p());
    XZ_.resize(nfp, m_.XZ.cols());
    Y0_ = VectorXd::Zero(nfp);
    std::size_t next_y = 0;
    for (Eigen::Index k = 0; k < nfp; ++k) {
      const Eigen::Index l = fp_[static_cast<std::size_t>(k)];
      X_.row(k) = m_.units.X.row(l);
      if (m_.XZ.cols() > 0) XZ_.row(k) = m_.XZ.row(l);
      if (z_all_[static_cast<std::size_t>(l)]) {
        if (next_y >= y.size()) throw std::invalid_argument("fit_nonignorable: fewer y values than sampled flags");
        if (!std::isfinite(y[next_y])) throw std::invalid_argument("fit_nonignorable: non-finite observation");
        Y0_(k) = y[next_y++];
        sampled_.push_back(k);
      } else {
        unsampled_.push_back(k);
      }
    }
    if (next_y != y.size()) throw std::invalid_argument("fit_nonignorable: more y values than sampled flags");
    if (sampled_.empty()) throw std::invalid_argument("fit_nonignorable: no sampled units");

    dist_ = MatrixXd::Zero(nfp, nfp);
    if (m_.w || m_.omega)
      for (Eigen::Index a = 0; a < nfp; ++a)
        for (Eigen::Index b = 0; b < a; ++b)
          dist_(a, b) = dist_(b, a) = distance(m_.units.loc[static_cast<std::size_t>(fp_[static_cast<std::size_t>(a)])],
                                               m_.units.loc[static_cast<std::size_t>(fp_[static_cast<std::size_t>(b)])]);
    prior_precision_ = CholFactor{m_.beta_prior.cov}.solve(MatrixXd::Identity(m_.p(), m_.p()));
  }

  const std::vector<Eigen::Index>& fp() const noexcept { return fp_; }
  const std::vector<Eigen::Index>& sampled() const noexcept { return sampled_; }
  const std::vector<Eigen::Index>& unsampled() const noexcept { return unsampled_; }
  const NonignorableModel& model() const noexcept { return m_; }

  NonignorableState initial_state() const {
    NonignorableState s;
    const auto nfp = static_cast<Eigen::Index>(fp_.size());
    s.beta = m_.beta_prior.mean;
    {
      // Start beta at the sampled-unit least-squares fit when it is identifiable.
      MatrixXd Xs(static_cast<Eigen::Index>(sampled_.size()), m_.p());
      VectorXd ys(Xs.rows());
      for (std::size_t k = 0; k < sampled_.size(); ++k) {
        Xs.row(static_cast<Eigen::Index>(k)) = X_.row(sampled_[k]);
        ys(static_cast<Eigen::Index>(k)) = Y0_(sampled_[k]);
      }
      const MatrixXd P = prior_precision_ + Xs.transpose() * Xs;
      s.beta = P.ldlt().solve(prior_precision_ * m_.beta_prior.mean + Xs.transpose() * ys);
    }
    s.sigma2 = m_.sigma2;
    s.Y = Y0_;
    for (Eigen::Index k : unsampled_) s.Y(k) = X_.row(k).dot(s.beta);
    s.w = VectorXd::Zero(nfp);
    if (m_.w) {
      s.w_tau2 = m_.w->variance;
      s.w_phi = m_.w->phi;
      s.w_eta = m_.w->eta;
    }
    s.beta_z = m_.model_inclusion ? m_.beta_z : VectorXd();
    s.omega = VectorXd::Zero(nfp);
    if (m_.omega) {
      s.omega_tau2 = m_.omega->variance;
      s.omega_phi = m_.omega->phi;
      s.omega_eta = m_.omega->eta;
    }
    return s;
  }

  /// logit pi at finite-population index k for outcome value y.
  double inclusion_logit(const NonignorableState& s, Eigen::Index k, double y) const {
    double eta = s.beta_z(0) + s.beta_z(1) * y + s.omega(k);
    for (Eigen::Index j = 0; j < XZ_.cols(); ++j) eta += s.beta_z(2 + j) * XZ_(k, j);
    return eta;
  }

  /// log Z-likelihood term at index k: log pi or log(1 - pi).
  double inclusion_log_lik(const NonignorableState& s, Eigen::Index k, double y) const {
    const double eta = inclusion_logit(s, k, y);
    const bool z = z_all_[static_cast<std::size_t>(fp_[static_cast<std::size_t>(k)])];
    return z ? -log1p_exp(-eta) : -log1p_exp(eta);
  }

  /// Unnormalized log full conditional of an unsampled Y at index k.
  double yu_log_full_conditional(const NonignorableState& s, Eigen::Index k, double value) const {
    double lp = normal_log_pdf(value, X_.row(k).dot(s.beta) + s.w(k), s.sigma2);
    if (m_.model_inclusion) lp += inclusion_log_lik(s, k, value);
    return lp;
  }

  /// logit pi at index k without the outcome term.
  double inclusion_offset(const NonignorableState& s, const VectorXd& bz, Eigen::Index k) const {
    double eta = bz(0) + s.omega(k);
    for (Eigen::Index j = 0; j < XZ_.cols(); ++j) eta += bz(2 + j) * XZ_(k, j);
    return eta;
  }

  /// Exact draw of every unsampled Y from its full conditional. Returns the count.
  long update_unsampled(NonignorableState& s, RngHandle& rng) const {
    for (Eigen::Index k : unsampled_) {
      const double mu = X_.row(k).dot(s.beta) + s.w(k);
      s.Y(k) = m_.model_inclusion
                   ? detail::draw_logistic_normal_complement(inclusion_offset(s, s.beta_z, k), s.beta_z(1), mu,
                                                             s.sigma2, rng)
                   : sample_normal(mu, s.sigma2, rng);
    }
    return static_cast<long>(unsampled_.size());
  }

  /// log p(Z | Y_s, beta, w, sigma2, omega; bz) with the unsampled Y integrated out.
  double z_log_lik_collapsed(const NonignorableState& s, const VectorXd& bz) const {
    double ll = 0.0;
    for (Eigen::Index k : sampled_) ll -= log1p_exp(-(inclusion_offset(s, bz, k) + bz(1) * s.Y(k)));
    for (Eigen::Index k : unsampled_)
      ll += detail::log_logistic_normal_complement(inclusion_offset(s, bz, k), bz(1),
                                                   X_.row(k).dot(s.beta) + s.w(k), s.sigma2);
    return ll;
  }

  void update_beta(NonignorableState& s, RngHandle& rng) const {
    const VectorXd r = s.Y - s.w;
    MatrixXd P = prior_precision_ + X_.transpose() * X_ / s.sigma2;
    P = 0.5 * (P + P.transpose());
    const CholFactor Pf(P);
    const VectorXd mean = Pf.solve(prior_precision_ * m_.beta_prior.mean + X_.transpose() * r / s.sigma2);
    VectorXd z(m_.p());
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.standard_normal();
    s.beta = mean + Pf.lower().transpose().triangularView<Eigen::Upper>().solve(z);
  }

  void update_sigma2_gibbs(NonignorableState& s, RngHandle& rng) const {
    if (m_.sigma2_prior.is_fixed()) return;
    if (m_.sigma2_prior.kind != ScalarPrior::Kind::kInverseGamma)
      throw std::invalid_argument("fit_nonignorable: sigma2 prior must be inverse gamma");
    const VectorXd e = s.Y - X_ * s.beta - s.w;
    s.sigma2 = sample_inverse_gamma(m_.sigma2_prior.p1 + 0.5 * static_cast<double>(e.size()),
                                    m_.sigma2_prior.p2 + 0.5 * e.squaredNorm(), rng);
  }

  MatrixXd correlation(const SpatialComponent& c, double phi, double eta) const {
    SpatialComponent t = c;
    t.phi = phi;
    t.eta = eta;
    const CovarianceSpec spec = t.spec();
    const Eigen::Index n = dist_.rows();
    MatrixXd R(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      R(a, a) = 1.0;
      for (Eigen::Index b = 0; b < a; ++b) R(a, b) = R(b, a) = spatial_correlation(spec, dist_(a, b));
    }
    return R;
  }

  /// log N(Y; X beta, tau2 R + sigma2 I) with w integrated out.
  double w_collapsed_log_lik(const NonignorableState& s, double sigma2, double tau2, const MatrixXd& R) const {
    MatrixXd V = tau2 * R;
    V.diagonal().array() += sigma2;
    const VectorXd e = s.Y - X_ * s.beta;
    try {
      const CholFactor f(V);
      const VectorXd we = f.solve_lower(e);
      return -0.5 * (f.log_det() + we.squaredNorm());
    } catch (const std::domain_error&) {
      return -std::numeric_limits<double>::infinity();
    }
  }

  double w_collapsed_log_lik(const NonignorableState& s, double sigma2, double tau2, double phi, double eta) const {
    return w_collapsed_log_lik(s, sigma2, tau2, correlation(*m_.w, phi, eta));
  }

  void draw_w(NonignorableState& s, const MatrixXd& R, RngHandle& rng) const {
    // Prior draw corrected by the data: w0 + K V^{-1} (e - w0 - eps0), K = tau2 R, V = K + s2 I.
    const Eigen::Index n = s.Y.size();
    const MatrixXd K = s.w_tau2 * R;
    MatrixXd V = K;
    V.diagonal().array() += s.sigma2;
    VectorXd z(n), eps(n);
    for (Eigen::Index k = 0; k < n; ++k) z(k) = rng.standard_normal();
    for (Eigen::Index k = 0; k < n; ++k) eps(k) = std::sqrt(s.sigma2) * rng.standard_normal();
    const VectorXd w0 = CholFactor(K).lower() * z;
    const VectorXd e = s.Y - X_ * s.beta;
    s.w = w0 + K * CholFactor(V).solve(VectorXd(e - w0 - eps));
  }



  double z_log_lik(const NonignorableState& s) const {
    double ll = 0.0;
    for (Eigen::Index k = 0; k < s.Y.size(); ++k) ll += inclusion_log_lik(s, k, s.Y(k));
    return ll;
  }

  double beta_z_log_prior(const VectorXd& bz) const {
    double lp = 0.0;
    for (Eigen::Index j = 0; j < bz.size(); ++j) lp += normal_log_pdf(bz(j), 0.0, m_.beta_z_prior_sd * m_.beta_z_prior_sd);
    return lp;
  }

  /// Log joint density of the full state and the data, up to a constant.
  double log_joint(const NonignorableState& s) const {
    auto prior = [](const ScalarPrior& pr, double v) {
      return pr.is_fixed() ? 0.0 : pr.log_density_log_scale(std::log(v)) - std::log(v);
    };
    double lp = 0.0;
    for (Eigen::Index k = 0; k < s.Y.size(); ++k) lp += normal_log_pdf(s.Y(k), X_.row(k).dot(s.beta) + s.w(k), s.sigma2);
    const VectorXd db = s.beta - m_.beta_prior.mean;
    lp += -0.5 * db.dot(prior_precision_ * db) + prior(m_.sigma2_prior, s.sigma2);
    if (m_.w) {
      try {
        const CholFactor f(MatrixXd(s.w_tau2 * correlation(*m_.w, s.w_phi, s.w_eta)));
        lp += -0.5 * (f.log_det() + f.solve_lower(s.w).squaredNorm());
      } catch (const std::domain_error&) {
        return -std::numeric_limits<double>::infinity();
      }
      lp += prior(m_.w->variance_prior, s.w_tau2) + prior(m_.w->phi_prior, s.w_phi);
      if (m_.w->family == CovarianceFamily::kMatern) lp += prior(m_.w->eta_prior, s.w_eta);
    }
    if (m_.model_inclusion) lp += z_log_lik(s) + beta_z_log_prior(s.beta_z);
    if (m_.omega) {
      lp += omega_log_prior(s.omega, s.omega_tau2, s.omega_phi, s.omega_eta) +
            prior(m_.omega->variance_prior, s.omega_tau2) + prior(m_.omega->phi_prior, s.omega_phi);
      if (m_.omega->family == CovarianceFamily::kMatern) lp += prior(m_.omega->eta_prior, s.omega_eta);
    }
    return lp;
  }

  /// Lower factor of the omega covariance, with a 1e-8 relative diagonal
  /// lift because the latent process has no nugget of its own.
  MatrixXd omega_factor(double tau2, double phi, double eta) const {
    MatrixXd K = tau2 * correlation(*m_.omega, phi, eta);
    K.diagonal().array() += 1e-8 * tau2;
    return CholFactor{K}.lower();
  }

  double omega_log_prior(const VectorXd& om, double tau2, double phi, double eta) const {
    try {
      const MatrixXd L = omega_factor(tau2, phi, eta);
      const VectorXd wz = L.triangularView<Eigen::Lower>().solve(om);
      return -L.diagonal().array().log().sum() - 0.5 * wz.squaredNorm();
    } catch (const std::domain_error&) {
      return -std::numeric_limits<double>::infinity();
    }
  }

  NonignorableResult run(const McmcSettings& mcmc, int chains, RngHandle& rng) const;

 private:
  NonignorableModel m_;
  std::vector<bool> z_all_;
  std::vector<Eigen::Index> fp_;
  std::vector<Eigen::Index> sampled_;
  std::vector<Eigen::Index> unsampled_;
  MatrixXd X_;
  MatrixXd XZ_;
  VectorXd Y0_;
  MatrixXd dist_;
  MatrixXd prior_precision_;
};

inline NonignorableResult NonignorableSampler::run(const McmcSettings& mcmc, int chains, RngHandle& rng) const {
  mcmc.validate();
  if (chains < 1) throw std::invalid_argument("fit_nonignorable: chains must be >= 1");
  const bool has_w = m_.w.has_value();
  const bool has_omega = m_.omega.has_value();
  const auto n = static_cast<Eigen::Index>(sampled_.size());
  const auto nu = static_cast<Eigen::Index>(unsampled_.size());
  const Eigen::Index p = m_.p();

  std::vector<std::string> names;
  for (Eigen::Index k = 0; k < p; ++k) names.push_back("beta[" + std::to_string(k) + "]");
  names.push_back("sigma2");
  if (has_w) {
    names.push_back("tau2_w");
    names.push_back("phi_w");
    if (m_.w->family == CovarianceFamily::kMatern) names.push_back("eta_w");
  }
  if (m_.model_inclusion)
    for (Eigen::Index k = 0; k < m_.pz(); ++k) names.push_back("beta_z[" + std::to_string(k) + "]");
  if (has_omega) {
    names.push_back("tau2_omega");
    names.push_back("phi_omega");
    if (m_.omega->family == CovarianceFamily::kMatern) names.push_back("eta_omega");
  }
  names.push_back("pop_mean");
  const auto first_y = static_cast<Eigen::Index>(names.size());
  for (Eigen::Index k : unsampled_)
    names.push_back("Y[" + std::to_string(m_.units.id[static_cast<std::size_t>(fp_[static_cast<std::size_t>(k)])]) + "]");

  const long total = mcmc.draws * chains;
  NonignorableResult out;
  out.draws = PosteriorDraws(names, total);
  out.pointwise_log_density.resize(total, n);
  out.replicates.resize(total, n);

  // One chain from s. Draws are stored from row `first_row` on when it is
  // non-negative; `score` receives the mean log joint density of the kept
  // iterations.
  auto run_chain = [&](NonignorableState s, const McmcSettings& mcmc, RngHandle& crng, long first_row,
                       double* score) {

    // Adaptive walks on log scale for the collapsed outcome covariance
    // parameters, on the natural scale for free logit coefficients.
    std::vector<AdaptiveWalk> w_walks;
    std::vector<ScalarPrior> w_priors;
    if (has_w) {
      w_walks = {AdaptiveWalk{"sigma2", 0.3}, AdaptiveWalk{"tau2_w", 0.3}, AdaptiveWalk{"phi_w", 0.3},
                 AdaptiveWalk{"eta_w", 0.3}};
      w_priors = {m_.sigma2_prior, m_.w->variance_prior, m_.w->phi_prior,
                  m_.w->family == CovarianceFamily::kMatern ? m_.w->eta_prior : ScalarPrior::fixed()};
    }
    MatrixXd R_cur, trial_R;  // correlation at (R_phi, R_eta) and at the last phi/eta proposal
    double R_phi = std::numeric_limits<double>::quiet_NaN(), R_eta = R_phi;
    std::vector<AdaptiveWalk> z_walks;
    if (m_.model_inclusion)
      for (Eigen::Index k = 0; k < m_.pz(); ++k) z_walks.emplace_back("beta_z[" + std::to_string(k) + "]", 0.2);
    std::vector<AdaptiveWalk> om_walks;
    std::vector<ScalarPrior> om_priors;
    MatrixXd om_L;
    if (has_omega) {
      om_walks = {AdaptiveWalk{"tau2_omega", 0.3}, AdaptiveWalk{"phi_omega", 0.3}, AdaptiveWalk{"eta_omega", 0.3}};
      om_priors = {m_.omega->variance_prior, m_.omega->phi_prior,
                   m_.omega->family == CovarianceFamily::kMatern ? m_.omega->eta_prior : ScalarPrior::fixed()};
      om_L = omega_factor(s.omega_tau2, s.omega_phi, s.omega_eta);
    }

    for (long iter = 0; iter < mcmc.total_iterations(); ++iter) {
      if (iter == mcmc.adapt_window) {
        for (auto& w : w_walks) w.freeze();
        for (auto& w : z_walks) w.freeze();
        for (auto& w : om_walks) w.freeze();
      }
      update_beta(s, crng);

      if (!has_w) {
        update_sigma2_gibbs(s, crng);
      } else {
        double* slots[4] = {&s.sigma2, &s.w_tau2, &s.w_phi, &s.w_eta};
        auto log_target = [&](std::size_t which, double log_value) {
          double vals[4] = {s.sigma2, s.w_tau2, s.w_phi, s.w_eta};
          vals[which] = std::exp(log_value);
          double lp = 0.0;
          for (std::size_t j = 0; j < 4; ++j)
            if (!w_priors[j].is_fixed()) lp += w_priors[j].log_density_log_scale(std::log(vals[j]));
          if (!std::isfinite(lp)) return lp;
          if (vals[2] != R_phi || vals[3] != R_eta) {
            trial_R = correlation(*m_.w, vals[2], vals[3]);
            return lp + w_collapsed_log_lik(s, vals[0], vals[1], trial_R);
          }
          return lp + w_collapsed_log_lik(s, vals[0], vals[1], R_cur);
        };
        if (s.w_phi != R_phi || s.w_eta != R_eta) {
          R_cur = correlation(*m_.w, s.w_phi, s.w_eta);
          R_phi = s.w_phi;
          R_eta = s.w_eta;
        }
        double cur = log_target(0, std::log(s.sigma2));
        for (std::size_t j = 0; j < 4; ++j) {
          if (w_priors[j].is_fixed()) continue;
          double lv = std::log(*slots[j]);
          const bool moved = w_walks[j].step(lv, cur, [&](double c) { return log_target(j, c); }, crng);
          *slots[j] = std::exp(lv);
          if (moved && j >= 2) {
            R_cur.swap(trial_R);
            R_phi = s.w_phi;
            R_eta = s.w_eta;
          }
        }
        draw_w(s, R_cur, crng);
      }

      // (beta_z, Y_u) as one block: beta_z with Y_u integrated out, then Y_u exactly.
      if (m_.model_inclusion) {
        double cur = z_log_lik_collapsed(s, s.beta_z) + beta_z_log_prior(s.beta_z);
        for (Eigen::Index j = 0; j < m_.pz(); ++j) {
          if (!m_.beta_z_fixed.empty() && m_.beta_z_fixed[static_cast<std::size_t>(j)]) continue;
          double v = s.beta_z(j);
          z_walks[static_cast<std::size_t>(j)].step(
              v, cur,
              [&](double c) {
                VectorXd bz = s.beta_z;
                bz(j) = c;
                return z_log_lik_collapsed(s, bz) + beta_z_log_prior(bz);
              },
              crng);
          s.beta_z(j) = v;
        }
      }
      update_unsampled(s, crng);

      if (has_omega) {
        double* slots[3] = {&s.omega_tau2, &s.omega_phi, &s.omega_eta};
        for (std::size_t j = 0; j < 3; ++j) {
          if (om_priors[j].is_fixed()) continue;
          auto target = [&](double lv) {
            double vals[3] = {s.omega_tau2, s.omega_phi, s.omega_eta};
            vals[j] = std::exp(lv);
            const double lp = om_priors[j].log_density_log_scale(lv);
            if (!std::isfinite(lp)) return lp;
            return lp + omega_log_prior(s.omega, vals[0], vals[1], vals[2]);
          };
          double lv = std::log(*slots[j]);
          double cur = target(lv);
          om_walks[j].step(lv, cur, target, crng);
          *slots[j] = std::exp(lv);
        }
        om_L = omega_factor(s.omega_tau2, s.omega_phi, s.omega_eta);
        double ll = z_log_lik(s);
        s.omega = elliptical_slice(
            s.omega, om_L, ll,
            [&](const VectorXd& om) {
              NonignorableState t = s;
              t.omega = om;
              return z_log_lik(t);
            },
            crng);
      }

      if (iter < mcmc.burn_in || (iter - mcmc.burn_in) % mcmc.thin != 0) continue;
      if (score) *score += log_joint(s) / static_cast<double>(mcmc.draws);
      if (first_row < 0) continue;
      const long row = first_row + (iter - mcmc.burn_in) / mcmc.thin;
      auto drow = out.draws.values().row(row);
      Eigen::Index c = 0;
      for (Eigen::Index k = 0; k < p; ++k) drow(c++) = s.beta(k);
      drow(c++) = s.sigma2;
      if (has_w) {
        drow(c++) = s.w_tau2;
        drow(c++) = s.w_phi;
        if (m_.w->family == CovarianceFamily::kMatern) drow(c++) = s.w_eta;
      }
      if (m_.model_inclusion)
        for (Eigen::Index k = 0; k < m_.pz(); ++k) drow(c++) = s.beta_z(k);
      if (has_omega) {
        drow(c++) = s.omega_tau2;
        drow(c++) = s.omega_phi;
        if (m_.omega->family == CovarianceFamily::kMatern) drow(c++) = s.omega_eta;
      }
      drow(c++) = s.Y.mean();
      for (Eigen::Index k = 0; k < nu; ++k) drow(first_y + k) = s.Y(unsampled_[static_cast<std::size_t>(k)]);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index k = sampled_[static_cast<std::size_t>(i)];
        const double mu = X_.row(k).dot(s.beta) + s.w(k);
        out.pointwise_log_density(row, i) = normal_log_pdf(s.Y(k), mu, s.sigma2);
        out.replicates(row, i) = mu + std::sqrt(s.sigma2) * crng.standard_normal();
      }
    }

    if (first_row < 0) return s;
    for (std::size_t j = 0; j < w_walks.size(); ++j)
      if (!w_priors[j].is_fixed()) out.diagnostics.push_back(w_walks[j].diagnostics());
    for (std::size_t j = 0; j < z_walks.size(); ++j)
      if (m_.beta_z_fixed.empty() || !m_.beta_z_fixed[j]) out.diagnostics.push_back(z_walks[j].diagnostics());
    for (std::size_t j = 0; j < om_walks.size(); ++j)
      if (!om_priors[j].is_fixed()) out.diagnostics.push_back(om_walks[j].diagnostics());
    return s;
  };

  const bool pilots = m_.model_inclusion && m_.slope_starts.size() > 1 && m_.pilot_iterations > 0 &&
                      (m_.beta_z_fixed.empty() || !m_.beta_z_fixed[1]);
  double y_sd = 1.0;
  if (pilots && n > 1) {
    VectorXd ys(n);
    for (Eigen::Index i = 0; i < n; ++i) ys(i) = Y0_(sampled_[static_cast<std::size_t>(i)]);
    const double v = (ys.array() - ys.mean()).square().sum() / static_cast<double>(n - 1);
    if (v > 0.0) y_sd = std::sqrt(v);
  }
  const long half = std::max(1L, m_.pilot_iterations / 2);
  const McmcSettings pilot{half, half, half, 1};
  for (int chain = 0; chain < chains; ++chain) {
    RngHandle crng = rng.substream(static_cast<std::uint64_t>(chain));
    NonignorableState start = initial_state();
    if (pilots) {
      double best = -std::numeric_limits<double>::infinity();
      NonignorableState chosen = start;
      for (std::size_t j = 0; j < m_.slope_starts.size(); ++j) {
        NonignorableState s0 = start;
        s0.beta_z(1) = m_.slope_starts[j] / y_sd;
        RngHandle prng = crng.substream(1000 + j);
        double score = 0.0;
        NonignorableState end = run_chain(std::move(s0), pilot, prng, -1, &score);
        if (score > best || j == 0) {
          best = score;
          chosen = std::move(end);
        }
      }
      start = std::move(chosen);
    }
    run_chain(std::move(start), mcmc, crng, chain * mcmc.draws, nullptr);
  }
  return out;
}

/// Metropolis-within-Gibbs fit of the joint outcome/inclusion model.
inline NonignorableResult fit_nonignorable(const NonignorableModel& model, const std::vector<bool>& z,
                                           const std::vector<double>& y_sampled, const McmcSettings& mcmc,
                                           RngHandle& rng, int chains = 1) {
  const NonignorableSampler sampler(model, z, y_sampled);
  return sampler.run(mcmc, chains, rng);
}

}  // namespace fpbayes
