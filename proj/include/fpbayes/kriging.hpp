#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpbayes/covariance.hpp"
#include "fpbayes/mcmc.hpp"
#include "fpbayes/posterior_draws.hpp"
#include "fpbayes/stat_kernels.hpp"

namespace fpbayes {

/// Units entering a covariance: ids decide where the nugget applies, so a
/// unit paired with itself gets nugget + structured variance while two
/// distinct units at one location share only the structured part.
struct UnitSet {
  std::vector<long> id;
  std::vector<Location> loc;
  std::vector<long> cluster;  // may be empty when no cluster/regional term is used
  MatrixXd X;

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(id.size()); }

  void validate(const char* what) const {
    const auto n = id.size();
    if (loc.size() != n || static_cast<std::size_t>(X.rows()) != n)
      throw std::invalid_argument(std::string(what) + ": ids, locations and X rows differ in length");
    if (!cluster.empty() && cluster.size() != n)
      throw std::invalid_argument(std::string(what) + ": cluster labels differ in length");
  }

  UnitSet subset(std::span<const std::size_t> rows) const {
    UnitSet out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.id.push_back(id.at(rows[k]));
      out.loc.push_back(loc.at(rows[k]));
      if (!cluster.empty()) out.cluster.push_back(cluster.at(rows[k]));
      out.X.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(rows[k]));
    }
    return out;
  }
};

/// A Gaussian-process term. Regional terms are independent across clusters
/// (shared hyperparameters).
struct SpatialComponent {
  bool regional = false;
  CovarianceFamily family = CovarianceFamily::kExponential;
  double variance = 1.0;
  double phi = 1.0;
  double eta = 0.5;
  ScalarPrior variance_prior = ScalarPrior::inverse_gamma(2.0, 1.0);
  ScalarPrior phi_prior = ScalarPrior::uniform(0.01, 100.0);
  ScalarPrior eta_prior = ScalarPrior::fixed();

  CovarianceSpec spec() const { return CovarianceSpec{family, 0.0, variance, phi, eta}; }
};

/// Exchangeable cluster effect: covariance `variance` within a cluster.
struct ClusterComponent {
  double variance = 1.0;
  ScalarPrior prior = ScalarPrior::inverse_gamma(2.0, 1.0);
};

/// V(theta) = nugget I + sum of structured terms.
struct CovarianceModel {
  double nugget = 1.0;
  ScalarPrior nugget_prior = ScalarPrior::inverse_gamma(2.0, 1.0);
  std::optional<ClusterComponent> cluster;
  std::vector<SpatialComponent> spatial;

  bool has_structure() const noexcept { return cluster.has_value() || !spatial.empty(); }

  std::vector<std::string> theta_names() const {
    std::vector<std::string> names{"sigma2"};
    if (cluster) names.push_back("cluster_var");
    for (std::size_t k = 0; k < spatial.size(); ++k) {
      const std::string s = "[" + std::to_string(k) + "]";
      names.push_back("tau2" + s);
      names.push_back("phi" + s);
      if (spatial[k].family == CovarianceFamily::kMatern) names.push_back("eta" + s);
    }
    return names;
  }

  std::vector<double> theta() const {
    std::vector<double> t{nugget};
    if (cluster) t.push_back(cluster->variance);
    for (const auto& c : spatial) {
      t.push_back(c.variance);
      t.push_back(c.phi);
      if (c.family == CovarianceFamily::kMatern) t.push_back(c.eta);
    }
    return t;
  }

  std::vector<ScalarPrior> theta_priors() const {
    std::vector<ScalarPrior> p{nugget_prior};
    if (cluster) p.push_back(cluster->prior);
    for (const auto& c : spatial) {
      p.push_back(c.variance_prior);
      p.push_back(c.phi_prior);
      if (c.family == CovarianceFamily::kMatern) p.push_back(c.eta_prior);
    }
    return p;
  }

  void set_theta(std::span<const double> t) {
    std::size_t k = 0;
    nugget = t[k++];
    if (cluster) cluster->variance = t[k++];
    for (auto& c : spatial) {
      c.variance = t[k++];
      c.phi = t[k++];
      if (c.family == CovarianceFamily::kMatern) c.eta = t[k++];
    }
    if (k != t.size()) throw std::invalid_argument("CovarianceModel: theta has the wrong length");
  }

  void validate() const {
    if (!(nugget >= 0.0)) throw std::invalid_argument("CovarianceModel: nugget must be >= 0");
    if (cluster && !(cluster->variance >= 0.0))
      throw std::invalid_argument("CovarianceModel: cluster variance must be >= 0");
    for (const auto& c : spatial) c.spec().validate();
  }

  /// Structured (non-nugget) covariance between two unit sets.
  MatrixXd structured(const UnitSet& a, const UnitSet& b) const {
    MatrixXd K = MatrixXd::Zero(a.size(), b.size());
    const bool need_clusters = cluster.has_value() ||
                               std::any_of(spatial.begin(), spatial.end(), [](const auto& c) { return c.regional; });
    if (need_clusters && (a.cluster.size() != a.id.size() || b.cluster.size() != b.id.size()))
      throw std::invalid_argument("CovarianceModel: cluster labels required by cluster/regional terms");
    for (Eigen::Index i = 0; i < a.size(); ++i)
      for (Eigen::Index j = 0; j < b.size(); ++j) {
        const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
        const bool same_cluster = need_clusters && a.cluster[ui] == b.cluster[uj];
        double v = 0.0;
        if (cluster && same_cluster) v += cluster->variance;
        if (!spatial.empty()) {
          const double d = distance(a.loc[ui], b.loc[uj]);
          for (const auto& c : spatial) {
            if (c.regional && !same_cluster) continue;
            v += d == 0.0 ? c.variance : c.variance * spatial_correlation(c.spec(), d);
          }
        }
        K(i, j) = v;
      }
    return K;
  }

  MatrixXd full(const UnitSet& a, const UnitSet& b) const {
    MatrixXd V = structured(a, b);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      for (Eigen::Index j = 0; j < b.size(); ++j)
        if (a.id[static_cast<std::size_t>(i)] == b.id[static_cast<std::size_t>(j)]) V(i, j) += nugget;
    return V;
  }

  MatrixXd full(const UnitSet& a) const {
    MatrixXd V = full(a, a);
    return 0.5 * (V + V.transpose());
  }
};

/// beta = A mu + eta, eta ~ N(0, V_beta).
struct BetaPrior {
  VectorXd mean;
  MatrixXd cov;

  static BetaPrior from_hierarchy(const MatrixXd& A, const VectorXd& mu, const MatrixXd& V_beta) {
    if (A.cols() != mu.size() || A.rows() != V_beta.rows())
      throw std::invalid_argument("BetaPrior: A, mu, V_beta dimensions disagree");
    return BetaPrior{A * mu, V_beta};
  }

  static BetaPrior vague(Eigen::Index p, double variance = 1e6) {
    return BetaPrior{VectorXd::Zero(p), variance * MatrixXd::Identity(p, p)};
  }
};

struct PartitionedGaussianModel {
  UnitSet sampled;
  UnitSet unsampled;
  CovarianceModel covariance;
  BetaPrior beta_prior;

  Eigen::Index p() const noexcept { return sampled.X.cols(); }

  void validate() const {
    sampled.validate("sampled units");
    unsampled.validate("unsampled units");
    if (sampled.size() == 0) throw std::invalid_argument("PartitionedGaussianModel: no sampled units");
    if (unsampled.size() > 0 && unsampled.X.cols() != p())
      throw std::invalid_argument("PartitionedGaussianModel: X_s and X_u column counts differ");
    if (beta_prior.mean.size() != p() || beta_prior.cov.rows() != p() || beta_prior.cov.cols() != p())
      throw std::invalid_argument("PartitionedGaussianModel: beta prior dimension mismatch");
    covariance.validate();
  }
};

/// Pieces of p(y | theta) with beta integrated out, reused for the conjugate
/// beta draw: beta | theta, y ~ N(m + P^{-1} X^T V^{-1} r, P^{-1}).
struct CollapsedFit {
  double log_lik = 0.0;
  VectorXd beta_mean;
  MatrixXd beta_cov_lower;  // lower factor of P^{-1}
};

namespace detail {

struct GaussianWorkspace {
  const PartitionedGaussianModel* model;
  std::span<const double> y;
  MatrixXd prior_precision;

  GaussianWorkspace(const PartitionedGaussianModel& m, std::span<const double> yy)
      : model{&m}, y{yy}, prior_precision{CholFactor{m.beta_prior.cov}.solve(
                                  MatrixXd::Identity(m.p(), m.p()))} {}

  CollapsedFit collapsed(const CholFactor& Vs) const {
    const auto& X = model->sampled.X;
    const VectorXd yv = Eigen::Map<const VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    const VectorXd r = yv - X * model->beta_prior.mean;
    const VectorXd Vr = Vs.solve(r);
    const MatrixXd VX = Vs.solve(X);
    MatrixXd P = prior_precision + X.transpose() * VX;
    P = 0.5 * (P + P.transpose());
    const VectorXd b = X.transpose() * Vr;
    const CholFactor Pf(P);
    const VectorXd Pb = Pf.solve(b);
    CollapsedFit fit;
    fit.log_lik = -0.5 * (Vs.log_det() + Pf.log_det() + r.dot(Vr) - b.dot(Pb));
    fit.beta_mean = model->beta_prior.mean + Pb;
    // Lower factor of P^{-1}: L^{-T}.
    const MatrixXd Linv = Pf.solve_lower(MatrixXd::Identity(P.rows(), P.cols()));
    fit.beta_cov_lower = Linv.transpose();
    return fit;
  }
};

}  // namespace detail

struct KrigeOptions {
  McmcSettings mcmc;
  int chains = 1;
  bool predict = true;  // draw Y_u
  bool assess = true;   // pointwise log densities and replicates for D/GRS/WAIC
};

struct KrigeResult {
  PosteriorDraws draws;              // beta[k], theta, Y[id] for unsampled units
  MatrixXd pointwise_log_density;    // draws x n: log p(y_i | beta, latent, sigma2)
  MatrixXd replicates;               // draws x n: Y_rep,i
  std::vector<ChainDiagnostics> diagnostics;

  bool converged() const {
    return std::all_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.ok; });
  }
};

/// Conditional normal of the unsampled block given y, beta and theta.
struct KrigingConditional {
  VectorXd mean;
  MatrixXd factor;  // F F^T = V_u - V_us V_s^{-1} V_su
};

inline KrigingConditional kriging_conditional(const PartitionedGaussianModel& model, const CovarianceModel& cov,
                                              const CholFactor& Vs, std::span<const double> y,
                                              const VectorXd& beta) {
  const VectorXd yv = Eigen::Map<const VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  // An unsampled entry carrying a sampled id is known exactly; only the rest is kriged.
  std::map<long, Eigen::Index> sampled_pos;
  for (Eigen::Index k = 0; k < model.sampled.size(); ++k) sampled_pos[model.sampled.id[static_cast<std::size_t>(k)]] = k;
  std::vector<std::size_t> free_rows;
  const Eigen::Index nu = model.unsampled.size();
  KrigingConditional kc;
  kc.mean.resize(nu);
  for (Eigen::Index r = 0; r < nu; ++r) {
    const auto it = sampled_pos.find(model.unsampled.id[static_cast<std::size_t>(r)]);
    if (it == sampled_pos.end())
      free_rows.push_back(static_cast<std::size_t>(r));
    else
      kc.mean(r) = yv(it->second);
  }
  kc.factor = MatrixXd::Zero(nu, 0);
  if (free_rows.empty()) return kc;

  const UnitSet u = free_rows.size() == static_cast<std::size_t>(nu) ? model.unsampled
                                                                     : model.unsampled.subset(free_rows);
  const MatrixXd Vus = cov.full(u, model.sampled);
  const MatrixXd Vu = cov.full(u);
  const VectorXd resid = yv - model.sampled.X * beta;
  const VectorXd m = u.X * beta + Vus * Vs.solve(resid);
  const MatrixXd W = Vs.solve_lower(Vus.transpose());  // L^{-1} V_su
  MatrixXd S = Vu - W.transpose() * W;
  S = 0.5 * (S + S.transpose());
  const MatrixXd F = psd_factor(S, 1e-10, Vu.diagonal().cwiseAbs().maxCoeff());
  kc.factor = MatrixXd::Zero(nu, F.cols());
  for (std::size_t k = 0; k < free_rows.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(free_rows[k]);
    kc.mean(r) = m(static_cast<Eigen::Index>(k));
    kc.factor.row(r) = F.row(static_cast<Eigen::Index>(k));
  }
  return kc;
}

/// Metropolis on theta (log scale, one adaptive walk per free parameter)
/// with beta drawn from its conjugate normal given theta; Y_u by composition.
inline KrigeResult krige_posterior_draws(const PartitionedGaussianModel& model, std::span<const double> y,
                                         const KrigeOptions& opt, RngHandle& rng) {
  model.validate();
  opt.mcmc.validate();
  if (static_cast<Eigen::Index>(y.size()) != model.sampled.size())
    throw std::invalid_argument("krige_posterior_draws: y length differs from the sampled units");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("krige_posterior_draws: non-finite observation");
  if (opt.chains < 1) throw std::invalid_argument("krige_posterior_draws: chains must be >= 1");

  const Eigen::Index n = model.sampled.size();
  const Eigen::Index p = model.p();
  const Eigen::Index nu = opt.predict ? model.unsampled.size() : 0;
  const auto theta_names = model.covariance.theta_names();
  const auto priors = model.covariance.theta_priors();
  const auto ntheta = static_cast<Eigen::Index>(theta_names.size());

  std::vector<std::string> names;
  for (Eigen::Index k = 0; k < p; ++k) names.push_back("beta[" + std::to_string(k) + "]");
  names.insert(names.end(), theta_names.begin(), theta_names.end());
  for (Eigen::Index k = 0; k < nu; ++k)
    names.push_back("Y[" + std::to_string(model.unsampled.id[static_cast<std::size_t>(k)]) + "]");

  const long per_chain = opt.mcmc.draws;
  const long total = per_chain * opt.chains;
  KrigeResult out;
  out.draws = PosteriorDraws(names, total);
  if (opt.assess) {
    out.pointwise_log_density.resize(total, n);
    out.replicates.resize(total, n);
  }

  const detail::GaussianWorkspace ws(model, y);
  const VectorXd yv = Eigen::Map<const VectorXd>(y.data(), n);

  for (int chain = 0; chain < opt.chains; ++chain) {
    RngHandle crng = rng.substream(static_cast<std::uint64_t>(chain));
    CovarianceModel cov = model.covariance;
    std::vector<double> theta = cov.theta();
    std::vector<double> log_theta(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
      if (!(theta[k] > 0.0) && !priors[k].is_fixed())
        throw std::invalid_argument("krige_posterior_draws: free parameter " + theta_names[k] +
                                    " needs a positive starting value");
      log_theta[k] = std::log(theta[k]);
    }

    auto log_post = [&](const std::vector<double>& lt, CollapsedFit* fit) -> double {
      std::vector<double> t(lt.size());
      double lp = 0.0;
      for (std::size_t k = 0; k < lt.size(); ++k) {
        t[k] = priors[k].is_fixed() ? theta[k] : std::exp(lt[k]);
        lp += priors[k].log_density_log_scale(lt[k]);
      }
      if (!std::isfinite(lp)) return lp;
      CovarianceModel trial = cov;
      trial.set_theta(t);
      try {
        const CholFactor Vs(trial.full(model.sampled));
        CollapsedFit f = ws.collapsed(Vs);
        const double ll = f.log_lik;
        if (fit) *fit = std::move(f);
        return lp + ll;
      } catch (const std::domain_error&) {
        return -std::numeric_limits<double>::infinity();
      }
    };

    // Starting point must be valid: a non-PD covariance here is an error.
    {
      const CholFactor check(cov.full(model.sampled));
      (void)check;
    }
    double current = log_post(log_theta, nullptr);
    if (!std::isfinite(current))
      throw std::domain_error("krige_posterior_draws: starting parameters have zero posterior density");

    std::vector<AdaptiveWalk> walks;
    for (const auto& nm : theta_names) walks.emplace_back(nm, 0.3);

    for (long iter = 0; iter < opt.mcmc.total_iterations(); ++iter) {
      if (iter == opt.mcmc.adapt_window)
        for (auto& w : walks) w.freeze();
      for (Eigen::Index k = 0; k < ntheta; ++k) {
        if (priors[static_cast<std::size_t>(k)].is_fixed()) continue;
        auto& value = log_theta[static_cast<std::size_t>(k)];
        walks[static_cast<std::size_t>(k)].step(
            value, current,
            [&](double cand) {
              auto lt = log_theta;
              lt[static_cast<std::size_t>(k)] = cand;
              return log_post(lt, nullptr);
            },
            crng);
      }
      if (iter < opt.mcmc.burn_in || (iter - opt.mcmc.burn_in) % opt.mcmc.thin != 0) continue;
      const long row = chain * per_chain + (iter - opt.mcmc.burn_in) / opt.mcmc.thin;

      for (std::size_t k = 0; k < theta.size(); ++k)
        if (!priors[k].is_fixed()) theta[k] = std::exp(log_theta[k]);
      CovarianceModel cur = cov;
      cur.set_theta(theta);
      const CholFactor Vs(cur.full(model.sampled));
      const CollapsedFit fit = ws.collapsed(Vs);
      VectorXd z(p);
      for (Eigen::Index k = 0; k < p; ++k) z(k) = crng.standard_normal();
      const VectorXd beta = fit.beta_mean + fit.beta_cov_lower * z;

      auto drow = out.draws.values().row(row);
      drow.head(p) = beta.transpose();
      for (Eigen::Index k = 0; k < ntheta; ++k) drow(p + k) = theta[static_cast<std::size_t>(k)];

      if (nu > 0) {
        const KrigingConditional kc = kriging_conditional(model, cur, Vs, y, beta);
        VectorXd zu(kc.factor.cols());
        for (Eigen::Index k = 0; k < zu.size(); ++k) zu(k) = crng.standard_normal();
        drow.tail(nu) = (kc.mean + kc.factor * zu).transpose();
      }

      if (opt.assess) {
        const double s2 = cur.nugget;
        if (!(s2 > 0.0))
          throw std::domain_error("krige_posterior_draws: pointwise densities need a positive nugget");
        const VectorXd e = yv - model.sampled.X * beta;
        VectorXd latent = VectorXd::Zero(n);
        if (cur.has_structure()) {
          // r | y, beta, theta: mean e - s2 V^{-1} e, covariance s2 I - s2^2 V^{-1}.
          const MatrixXd Vinv = Vs.solve(MatrixXd::Identity(n, n));
          MatrixXd S = -s2 * s2 * Vinv;
          S.diagonal().array() += s2;
          S = 0.5 * (S + S.transpose());
          const MatrixXd F = psd_factor(S, 1e-10, s2);
          VectorXd zr(n);
          for (Eigen::Index k = 0; k < n; ++k) zr(k) = crng.standard_normal();
          latent = e - s2 * (Vinv * e) + F * zr;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double mu = yv(i) - e(i) + latent(i);
          out.pointwise_log_density(row, i) = normal_log_pdf(yv(i), mu, s2);
          out.replicates(row, i) = mu + std::sqrt(s2) * crng.standard_normal();
        }
      }
    }
    for (std::size_t k = 0; k < walks.size(); ++k)
      if (!priors[k].is_fixed()) out.diagnostics.push_back(walks[k].diagnostics());
  }
  return out;
}

/// Finite-population mean draws from observed y plus imputed Y_u columns.
inline VectorXd population_mean_draws(const KrigeResult& r, const PartitionedGaussianModel& model,
                                      std::span<const double> y) {
  double ysum = 0.0;
  for (double v : y) ysum += v;
  const Eigen::Index nu = model.unsampled.size();
  const Eigen::Index N = model.sampled.size() + nu;
  const MatrixXd& v = r.draws.values();
  if (nu > 0 && !r.draws.has("Y[" + std::to_string(model.unsampled.id.front()) + "]"))
    throw std::invalid_argument("population_mean_draws: result has no Y_u draws");
  VectorXd m(v.rows());
  for (Eigen::Index l = 0; l < v.rows(); ++l)
    m(l) = (ysum + (nu > 0 ? v.row(l).tail(nu).sum() : 0.0)) / static_cast<double>(N);
  return m;
}

}  // namespace fpbayes
