#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fpbayes/covariance.hpp"
#include "fpbayes/graph_pop.hpp"
#include "fpbayes/rng.hpp"
#include "fpbayes/stat_kernels.hpp"

namespace fpbayes {

/// What an estimator may see about the population: values, coordinates,
/// clusters, structural-zero flags and covariates. Generating parameters
/// live in PopulationTruth, which no estimator takes.
struct FinitePopulation {
  std::vector<double> Y;
  std::vector<Location> coords;  // empty when the population is not spatial
  std::vector<long> cluster_of;  // empty when there is no clustering
  std::vector<bool> u_flags;     // empty means every unit is in the population
  MatrixXd covariates;           // N x k, k may be 0

  std::size_t N() const noexcept { return Y.size(); }
  bool in_population(std::size_t i) const { return u_flags.empty() || u_flags[i]; }

  /// Number of units in the finite population proper (u = 1).
  std::size_t population_size() const {
    if (u_flags.empty()) return N();
    return static_cast<std::size_t>(std::count(u_flags.begin(), u_flags.end(), true));
  }

  double total() const {
    double t = 0.0;
    for (std::size_t i = 0; i < N(); ++i)
      if (in_population(i)) t += Y[i];
    return t;
  }

  double mean() const { return total() / static_cast<double>(population_size()); }
};

class PopulationTruth {
 public:
  PopulationTruth(std::string model, std::map<std::string, double> parameters,
                  std::map<std::string, std::vector<double>> latent = {})
      : model_{std::move(model)}, parameters_{std::move(parameters)}, latent_{std::move(latent)} {}

  const std::string& model() const noexcept { return model_; }
  double parameter(const std::string& name) const { return parameters_.at(name); }
  const std::map<std::string, double>& parameters() const noexcept { return parameters_; }
  const std::vector<double>& latent(const std::string& name) const { return latent_.at(name); }

 private:
  std::string model_;
  std::map<std::string, double> parameters_;
  std::map<std::string, std::vector<double>> latent_;
};

struct GeneratedPopulation {
  FinitePopulation population;
  PopulationTruth truth;
};

struct IidSpec {
  long N = 100;
  double mean = 0.0;
  double variance = 1.0;
};

/// beta_i ~ N(nu, delta2), Y_ij ~ N(beta_i, delta2 / gamma2).
struct TwoStageSpec {
  std::vector<long> M;
  double nu = 0.0;
  double delta2 = 1.0;
  double gamma2 = 1.0;
};

/// Y = X beta + w + eps, w ~ GP(0, partial sill, phi, eta), eps ~ N(0, nugget).
struct GpSpec {
  std::vector<Location> coords;
  MatrixXd X;
  VectorXd beta;
  CovarianceSpec cov;
};

/// Y_ij = mu + b_i + w(l_ij) + eps, b_i ~ N(0, cluster_var): a cluster
/// (two-stage) effect plus one spatial field over the whole domain.
struct ClusteredSpatialSpec {
  std::vector<Location> coords;
  std::vector<long> cluster_of;
  double mu = 0.0;
  double cluster_var = 1.0;
  CovarianceSpec cov;
};

/// Y ~ N(0, Q^{-1}) stacked variable-major (N q values).
struct GraphicalSpec {
  const PrecisionAssembly* assembly = nullptr;
};

using PopulationSpec = std::variant<IidSpec, TwoStageSpec, GpSpec, ClusteredSpatialSpec, GraphicalSpec>;

namespace detail {

inline VectorXd standard_normals(Eigen::Index n, RngHandle& rng) {
  VectorXd z(n);
  for (Eigen::Index k = 0; k < n; ++k) z(k) = rng.standard_normal();
  return z;
}

inline VectorXd gp_field(std::span<const Location> coords, const CovarianceSpec& spatial, RngHandle& rng) {
  CovarianceSpec s = spatial;
  s.nugget = 0.0;
  if (s.partial_sill == 0.0) return VectorXd::Zero(static_cast<Eigen::Index>(coords.size()));
  const MatrixXd K = covariance_matrix(s, coords);
  return psd_factor(K, 1e-12) * standard_normals(K.rows(), rng);
}

}  // namespace detail

inline GeneratedPopulation generate_population(const PopulationSpec& spec, RngHandle& rng) {
  return std::visit(
      [&](const auto& s) -> GeneratedPopulation {
        using T = std::decay_t<decltype(s)>;
        FinitePopulation pop;
        if constexpr (std::is_same_v<T, IidSpec>) {
          if (s.N <= 0 || !(s.variance >= 0.0)) throw std::invalid_argument("generate_population: invalid iid spec");
          for (long i = 0; i < s.N; ++i) pop.Y.push_back(sample_normal(s.mean, s.variance, rng));
          return {pop, PopulationTruth{"iid", {{"mean", s.mean}, {"variance", s.variance}}}};
        } else if constexpr (std::is_same_v<T, TwoStageSpec>) {
          if (s.M.empty() || !(s.delta2 >= 0.0) || !(s.gamma2 > 0.0))
            throw std::invalid_argument("generate_population: invalid two-stage spec");
          std::vector<double> betas;
          for (std::size_t i = 0; i < s.M.size(); ++i) {
            if (s.M[i] <= 0) throw std::invalid_argument("generate_population: primary sizes must be positive");
            const double beta = sample_normal(s.nu, s.delta2, rng);
            betas.push_back(beta);
            for (long j = 0; j < s.M[i]; ++j) {
              pop.Y.push_back(sample_normal(beta, s.delta2 / s.gamma2, rng));
              pop.cluster_of.push_back(static_cast<long>(i));
            }
          }
          return {pop, PopulationTruth{"two_stage",
                                       {{"nu", s.nu}, {"delta2", s.delta2}, {"gamma2", s.gamma2}},
                                       {{"beta", betas}}}};
        } else if constexpr (std::is_same_v<T, GpSpec>) {
          const auto n = static_cast<Eigen::Index>(s.coords.size());
          if (n == 0 || s.X.rows() != n || s.X.cols() != s.beta.size())
            throw std::invalid_argument("generate_population: invalid gp spec");
          s.cov.validate();
          const VectorXd w = detail::gp_field(s.coords, s.cov, rng);
          const VectorXd y = s.X * s.beta + w + std::sqrt(s.cov.nugget) * detail::standard_normals(n, rng);
          pop.Y.assign(y.data(), y.data() + n);
          pop.coords = s.coords;
          pop.covariates = s.X;
          std::map<std::string, double> par{{"nugget", s.cov.nugget}, {"partial_sill", s.cov.partial_sill},
                                            {"phi", s.cov.phi}, {"eta", s.cov.eta}};
          for (Eigen::Index k = 0; k < s.beta.size(); ++k) par["beta[" + std::to_string(k) + "]"] = s.beta(k);
          return {pop, PopulationTruth{"gp", par, {{"w", std::vector<double>(w.data(), w.data() + n)}}}};
        } else if constexpr (std::is_same_v<T, ClusteredSpatialSpec>) {
          const auto n = static_cast<Eigen::Index>(s.coords.size());
          if (n == 0 || s.cluster_of.size() != s.coords.size() || !(s.cluster_var >= 0.0))
            throw std::invalid_argument("generate_population: invalid clustered spatial spec");
          s.cov.validate();
          std::map<long, double> effect;
          for (long c : s.cluster_of)
            if (!effect.count(c)) effect[c] = 0.0;
          for (auto& [c, b] : effect) b = sample_normal(0.0, s.cluster_var, rng);
          const VectorXd w = detail::gp_field(s.coords, s.cov, rng);
          for (Eigen::Index i = 0; i < n; ++i)
            pop.Y.push_back(s.mu + effect[s.cluster_of[static_cast<std::size_t>(i)]] + w(i) +
                            sample_normal(0.0, s.cov.nugget, rng));
          pop.coords = s.coords;
          pop.cluster_of = s.cluster_of;
          std::vector<double> b;
          for (const auto& kv : effect) b.push_back(kv.second);
          return {pop, PopulationTruth{"clustered_spatial",
                                       {{"mu", s.mu}, {"cluster_var", s.cluster_var}, {"nugget", s.cov.nugget},
                                        {"partial_sill", s.cov.partial_sill}, {"phi", s.cov.phi}},
                                       {{"cluster_effect", b}, {"w", std::vector<double>(w.data(), w.data() + n)}}}};
        } else {
          if (s.assembly == nullptr) throw std::invalid_argument("generate_population: graphical spec has no assembly");
          const VectorXd y = sample_graph_population(*s.assembly, rng);
          pop.Y.assign(y.data(), y.data() + y.size());
          return {pop, PopulationTruth{"graphical",
                                       {{"q", static_cast<double>(s.assembly->q())},
                                        {"N", static_cast<double>(s.assembly->N())}}}};
        }
      },
      spec);
}

/// Structural zeros: u(l) ~ Ber(logistic(x_u(l)^T beta_u + v(l))), v a GP.
inline std::vector<bool> generate_u_flags(std::span<const Location> coords, const MatrixXd& X_u,
                                          const VectorXd& beta_u, const CovarianceSpec& v_cov, RngHandle& rng) {
  if (X_u.rows() != static_cast<Eigen::Index>(coords.size()) || X_u.cols() != beta_u.size())
    throw std::invalid_argument("generate_u_flags: covariate dimensions mismatch");
  const VectorXd v = detail::gp_field(coords, v_cov, rng);
  const VectorXd eta = X_u * beta_u + v;
  std::vector<bool> u(coords.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = sample_bernoulli(logistic(eta(static_cast<Eigen::Index>(i))), rng);
  return u;
}

struct SrsworDesign {
  long n = 1;
};

/// SRSWOR of n primaries, then SRSWOR of m[i] secondaries inside each
/// selected primary i.
struct TwoStageDesign {
  long n = 1;
  std::vector<long> m;
};

/// Z(l) ~ Ber(logistic(b0 + b1 Y(l) + x_Z(l)^T b + omega(l))), omega optional.
struct BernoulliLogitDesign {
  double b0 = 0.0;
  double b1 = 0.0;
  VectorXd b_covariates;  // applies to FinitePopulation::covariates
  std::optional<CovarianceSpec> omega;
};

using DesignSpec = std::variant<SrsworDesign, TwoStageDesign, BernoulliLogitDesign>;

struct DesignDraw {
  std::vector<bool> z;
  std::vector<std::size_t> sampled;     // indices with z = 1, increasing
  std::vector<double> y;                // values at `sampled`
  std::vector<double> inclusion_prob;   // per population unit (0 for u = 0)
};

namespace detail {

/// k distinct indices from [0, n), uniformly over subsets.
inline std::vector<std::size_t> srswor_indices(std::size_t n, std::size_t k, RngHandle& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

inline DesignDraw execute_design(const FinitePopulation& pop, const DesignSpec& design, RngHandle& rng) {
  const std::size_t N = pop.N();
  DesignDraw d;
  d.z.assign(N, false);
  d.inclusion_prob.assign(N, 0.0);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SrsworDesign>) {
          std::vector<std::size_t> frame;
          for (std::size_t i = 0; i < N; ++i)
            if (pop.in_population(i)) frame.push_back(i);
          if (s.n < 1 || static_cast<std::size_t>(s.n) > frame.size())
            throw std::invalid_argument("execute_design: srswor needs 1 <= n <= N");
          for (std::size_t k : detail::srswor_indices(frame.size(), static_cast<std::size_t>(s.n), rng))
            d.z[frame[k]] = true;
          const double pi = static_cast<double>(s.n) / static_cast<double>(frame.size());
          for (std::size_t i : frame) d.inclusion_prob[i] = pi;
        } else if constexpr (std::is_same_v<T, TwoStageDesign>) {
          if (pop.cluster_of.size() != N) throw std::invalid_argument("execute_design: two-stage needs clusters");
          std::map<long, std::vector<std::size_t>> members;
          for (std::size_t i = 0; i < N; ++i)
            if (pop.in_population(i)) members[pop.cluster_of[i]].push_back(i);
          std::vector<long> labels;
          for (const auto& kv : members) labels.push_back(kv.first);
          if (s.m.size() != labels.size())
            throw std::invalid_argument("execute_design: two-stage m must list one size per primary unit");
          if (s.n < 1 || static_cast<std::size_t>(s.n) > labels.size())
            throw std::invalid_argument("execute_design: two-stage needs 1 <= n <= number of primaries");
          for (std::size_t c = 0; c < labels.size(); ++c) {
            const auto& mem = members[labels[c]];
            if (s.m[c] < 1 || static_cast<std::size_t>(s.m[c]) > mem.size())
              throw std::invalid_argument("execute_design: two-stage needs 1 <= m_i <= M_i");
            const double pi = (static_cast<double>(s.n) / static_cast<double>(labels.size())) *
                              (static_cast<double>(s.m[c]) / static_cast<double>(mem.size()));
            for (std::size_t i : mem) d.inclusion_prob[i] = pi;
          }
          for (std::size_t c : detail::srswor_indices(labels.size(), static_cast<std::size_t>(s.n), rng)) {
            const auto& mem = members[labels[c]];
            for (std::size_t k : detail::srswor_indices(mem.size(), static_cast<std::size_t>(s.m[c]), rng))
              d.z[mem[k]] = true;
          }
        } else {
          if (!std::isfinite(s.b0) || !std::isfinite(s.b1) || !s.b_covariates.allFinite())
            throw std::invalid_argument("execute_design: logit coefficients must be finite");
          if (s.b_covariates.size() != pop.covariates.cols() && s.b_covariates.size() != 0)
            throw std::invalid_argument("execute_design: logit covariate coefficients mismatch");
          VectorXd omega = VectorXd::Zero(static_cast<Eigen::Index>(N));
          if (s.omega) {
            if (pop.coords.size() != N) throw std::invalid_argument("execute_design: omega needs coordinates");
            omega = detail::gp_field(pop.coords, *s.omega, rng);
          }
          for (std::size_t i = 0; i < N; ++i) {
            if (!pop.in_population(i)) continue;
            double eta = s.b0 + s.b1 * pop.Y[i] + omega(static_cast<Eigen::Index>(i));
            if (s.b_covariates.size() > 0) eta += pop.covariates.row(static_cast<Eigen::Index>(i)).dot(s.b_covariates);
            d.inclusion_prob[i] = logistic(eta);
            d.z[i] = sample_bernoulli(d.inclusion_prob[i], rng);
          }
        }
      },
      design);
  for (std::size_t i = 0; i < N; ++i)
    if (d.z[i]) {
      d.sampled.push_back(i);
      d.y.push_back(pop.Y[i]);
    }
  return d;
}

}  // namespace fpbayes
