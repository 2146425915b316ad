#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpbayes/assess.hpp"
#include "fpbayes/cli/dataset.hpp"
#include "fpbayes/config.hpp"
#include "fpbayes/graph_pop.hpp"
#include "fpbayes/ht_bridge.hpp"
#include "fpbayes/kriging.hpp"
#include "fpbayes/nonignorable.hpp"
#include "fpbayes/posterior_draws.hpp"
#include "fpbayes/srswor.hpp"
#include "fpbayes/stream_regress.hpp"
#include "fpbayes/two_stage.hpp"

namespace fpbayes::cli {

using json = nlohmann::ordered_json;

struct FitOutput {
  json estimates = json::object();
  json metrics = json::object();
  std::vector<ChainDiagnostics> diagnostics;
  std::vector<std::string> warnings;
  std::vector<DrawRecord> predictive_draws;  // sampled units, for `assess`
  std::optional<IntervalSummary> population_mean;

  bool converged() const {
    return std::all_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.ok; });
  }
};

inline json interval_json(const IntervalSummary& s) {
  return json{{"mean", s.mean}, {"sd", s.sd}, {"lower", s.lower}, {"upper", s.upper}, {"level", s.level}};
}

inline json interval_json(const VectorXd& draws, double level) { return interval_json(summarize(draws, level)); }

inline McmcSettings read_mcmc(const Config& root, int* chains) {
  const Config c = root.section("mcmc");
  McmcSettings m;
  m.draws = c.get<long>("draws", 1000);
  m.burn_in = c.get<long>("burn_in", 1000);
  m.adapt_window = c.get<long>("adapt_window", std::min<long>(800, m.burn_in));
  m.thin = c.get<long>("thin", 1);
  if (chains) *chains = c.get<int>("chains", 1);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("mcmc: ") + e.what());
  }
  return m;
}

/// `{ start 1.0  prior inverse_gamma  a 2  b 1 }`, `prior uniform lower .. upper ..`, `prior fixed`.
inline ScalarPrior read_param(const Config& c, double& start, ScalarPrior fallback) {
  start = c.get<double>("start", start);
  const std::string kind = c.get<std::string>("prior", "");
  if (kind.empty()) return fallback;
  if (kind == "fixed") return ScalarPrior::fixed();
  if (kind == "inverse_gamma") return ScalarPrior::inverse_gamma(c.get<double>("a"), c.get<double>("b"));
  if (kind == "uniform") {
    const double lo = c.get<double>("lower"), hi = c.get<double>("upper");
    if (!(lo < hi)) throw config_error("uniform prior needs lower < upper");
    if (!(start > lo && start < hi)) start = 0.5 * (lo + hi);
    return ScalarPrior::uniform(lo, hi);
  }
  throw config_error("unknown prior '" + kind + "' (inverse_gamma, uniform, fixed)");
}

inline CovarianceFamily read_family(const Config& c) {
  const std::string f = c.get<std::string>("family", "exponential");
  if (f == "exponential") return CovarianceFamily::kExponential;
  if (f == "matern") return CovarianceFamily::kMatern;
  throw config_error("unknown covariance family '" + f + "'");
}

inline SpatialComponent read_spatial(const Config& c) {
  SpatialComponent s;
  s.family = read_family(c);
  s.regional = c.get<bool>("regional", false);
  s.variance_prior = read_param(c.section("tau2"), s.variance, s.variance_prior);
  s.phi_prior = read_param(c.section("phi"), s.phi, s.phi_prior);
  s.eta_prior = read_param(c.section("eta"), s.eta, s.eta_prior);
  return s;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw config_error(msg);
}

/// Converts a fitted chain's replicate matrices into D/GRS/WAIC and the
/// long-format draws for `assess`.
inline void add_predictive(FitOutput& out, const MatrixXd& reps, const MatrixXd& logd,
                           const std::vector<double>& y, const std::vector<long>& ids) {
  if (reps.rows() < 2) return;
  const PredictiveSummary s = PredictiveSummary::from_draws(reps, logd);
  out.metrics["D"] = metric_D(s, y);
  try {
    out.metrics["GRS"] = metric_GRS(s, y);
  } catch (const undefined_score& e) {
    out.metrics["GRS"] = nullptr;
    out.warnings.push_back(e.what());
  }
  const WaicResult w = metric_WAIC(s);
  out.metrics["WAIC"] = w.waic;
  out.metrics["WAIC_se"] = w.se;
  out.metrics["lppd"] = w.lppd;
  out.metrics["p_waic"] = w.p_waic;
  for (Eigen::Index i = 0; i < reps.cols(); ++i)
    for (Eigen::Index l = 0; l < reps.rows(); ++l)
      out.predictive_draws.push_back({ids[static_cast<std::size_t>(i)], l, reps(l, i), logd(l, i)});
}

inline FitOutput fit_srswor_model(const Config& cfg, const Dataset& d, double level, RngHandle& rng) {
  const Config c = cfg.section("srswor");
  SrsworPrior prior = SrsworPrior::reference();
  prior.theta = c.get<double>("theta", prior.theta);
  prior.n0 = c.get<double>("n0", prior.n0);
  prior.a0 = c.get<double>("a0", prior.a0);
  prior.b0 = c.get<double>("b0", prior.b0);
  const long N = c.get<long>("population_size", static_cast<long>(d.population().size()));
  const long ndraws = c.get<long>("draws", 10000);
  const auto y = d.sampled_values();
  const SrsworPosterior post = fit_srswor(y, N, prior);
  FitOutput out;
  const PosteriorDraws draws = population_mean_posterior_draws(post, ndraws, rng);
  const VectorXd mean = draws.column("pop_mean");
  out.population_mean = summarize(mean, level);
  out.estimates["population_mean"] = interval_json(*out.population_mean);
  out.estimates["population_total"] = interval_json(VectorXd(mean * static_cast<double>(N)), level);
  out.estimates["sigma2"] = interval_json(draws.column("sigma2"), level);
  out.estimates["posterior"] = {{"a1", post.a1},
                                {"b1", post.b1},
                                {"location", population_mean_location(post)},
                                {"scale2_given_sigma2", population_mean_scale2(post)},
                                {"t_df", 2.0 * post.a1},
                                {"t_scale2", population_mean_scale2(post) * post.b1 / post.a1}};
  return out;
}

inline FitOutput fit_ht_model(const Config& cfg, const Dataset& d, bool exact) {
  const Config c = cfg.section("ht");
  const std::string check = c.get<std::string>("design_check", "enforce");
  require(check == "enforce" || check == "warn", "ht.design_check must be 'enforce' or 'warn'");
  const auto pop = d.population();
  InclusionProbs p;
  std::map<std::size_t, std::size_t> pos;
  for (std::size_t i : pop) {
    if (!d.rows[i].inclusion_prob)
      throw ingest_error("sample file", 0, "unit " + std::to_string(d.rows[i].unit_id) + " has no inclusion_prob");
    pos[i] = p.pi.size();
    p.pi.push_back(*d.rows[i].inclusion_prob);
  }
  for (std::size_t i : d.sampled()) p.sampled.push_back(pos.at(i));
  const auto y = d.sampled_values();
  const auto mode = check == "enforce" ? DesignSizeCheck::kEnforce : DesignSizeCheck::kWarn;
  const HtModelFit fit = exact ? fit_ht_exact(y, p, mode) : fit_ht_approx(y, p, mode);
  FitOutput out;
  out.warnings = fit.warnings;
  const double N = static_cast<double>(pop.size());
  out.estimates["population_total"] = {{"mean", fit.total_post_mean}};
  out.estimates["population_mean"] = {{"mean", fit.total_post_mean / N}};
  out.estimates["ht_estimator"] = ht_estimator(y, p);
  out.estimates["beta"] = {{"mean", fit.beta_post_mean}};
  return out;
}

inline FitOutput fit_two_stage_model(const Config& cfg, const Dataset& d, double level, RngHandle& rng) {
  const Config c = cfg.section("two_stage");
  const auto pop = d.population();
  if (!d.has_clusters(pop)) throw ingest_error("sample file", 0, "two_stage needs cluster_id for every unit");
  std::map<long, std::size_t> label_to_primary;
  TwoStageConfig tc;
  for (std::size_t i : pop) {
    const long lab = *d.rows[i].cluster_id;
    if (!label_to_primary.count(lab)) {
      label_to_primary[lab] = tc.M.size();
      tc.M.push_back(0);
    }
    ++tc.M[label_to_primary[lab]];
  }
  const double gamma2 = c.get<double>("gamma2");
  tc.gamma2.assign(tc.M.size(), gamma2);
  const Config pc = c.section("prior");
  tc.prior.c0 = pc.get<double>("c0", 0.0);
  tc.prior.n0 = pc.get<double>("n0", 0.0);
  tc.prior.a0 = pc.get<double>("a0", 0.0);
  tc.prior.b0 = pc.get<double>("b0", 0.0);
  const long ndraws = c.get<long>("draws", 4000);
  tc.validate();

  std::map<std::size_t, std::vector<double>> ys;
  for (std::size_t i : d.sampled()) ys[label_to_primary.at(*d.rows[i].cluster_id)].push_back(*d.rows[i].value);
  std::vector<PrimaryBlock> blocks;
  for (auto& [k, v] : ys) blocks.push_back({k, v});
  std::vector<PrimarySample> samples;
  for (const auto& b : blocks) samples.push_back({b.primary, BlockSummary::of(b.y)});
  const NuDeltaState st = fit_two_stage(tc, samples);

  const double Ntot = static_cast<double>(pop.size());
  OmegaWeights w = OmegaWeights::population_total(tc);
  const VectorXd total = omega_draws(st, tc, w, blocks, ndraws, rng);
  const VectorXd mean = total / Ntot;
  FitOutput out;
  out.population_mean = summarize(mean, level);
  out.estimates["population_mean"] = interval_json(*out.population_mean);
  out.estimates["population_total"] = interval_json(total, level);
  const PosteriorDraws nd = draw_nu_delta(st, ndraws, rng);
  out.estimates["nu"] = interval_json(nd.column("nu"), level);
  out.estimates["delta2"] = interval_json(nd.column("delta2"), level);
  out.estimates["posterior"] = {{"c", st.c}, {"C_inv", st.C_inv}, {"a", st.a}, {"b", st.b}};
  return out;
}

inline FitOutput fit_stream_regress_model(const Config& cfg, const Dataset& d, double level, RngHandle& rng) {
  const Config c = cfg.section("stream_regress");
  const auto sampled = d.sampled();
  const auto unsampled = d.unsampled();
  const MatrixXd Xs = d.design(sampled);
  const double precision = c.get<double>("prior_precision", 1e-6);
  RegressionPrior prior = RegressionPrior::isotropic(VectorXd::Zero(Xs.cols()), precision, c.get<double>("a0", 0.0),
                                                     c.get<double>("b0", 0.0));
  const long ndraws = c.get<long>("draws", 4000);
  // One block per cluster when clusters are present, otherwise one block.
  std::map<long, std::vector<std::size_t>> blocks;
  for (std::size_t r = 0; r < sampled.size(); ++r)
    blocks[d.rows[sampled[r]].cluster_id.value_or(0)].push_back(r);
  RegressionState st = RegressionState::from_prior(prior);
  const auto y = d.sampled_values();
  for (const auto& [lab, rows] : blocks) {
    MatrixXd Xb(static_cast<Eigen::Index>(rows.size()), Xs.cols());
    VectorXd yb(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      Xb.row(static_cast<Eigen::Index>(k)) = Xs.row(static_cast<Eigen::Index>(rows[k]));
      yb(static_cast<Eigen::Index>(k)) = y[rows[k]];
    }
    st = update_block(st, Xb, yb, SymMatrix::identity(Xb.rows()));
  }
  const PosteriorDraws post = draw_regression_posterior(st, ndraws, rng);
  FitOutput out;
  out.estimates["sigma2"] = interval_json(post.column("sigma2"), level);
  for (Eigen::Index k = 0; k < st.p(); ++k) {
    const std::string nm = "beta[" + std::to_string(k) + "]";
    out.estimates[nm] = interval_json(post.column(nm), level);
  }
  double ysum = 0.0;
  for (double v : y) ysum += v;
  VectorXd total = VectorXd::Constant(ndraws, ysum);
  if (!unsampled.empty()) {
    const PosteriorDraws pred =
        predict_in_block(post, d.design(unsampled), SymMatrix::identity(static_cast<Eigen::Index>(unsampled.size())), rng);
    total += pred.values().rowwise().sum();
  }
  const double N = static_cast<double>(sampled.size() + unsampled.size());
  out.population_mean = summarize(VectorXd(total / N), level);
  out.estimates["population_mean"] = interval_json(*out.population_mean);
  out.estimates["population_total"] = interval_json(total, level);
  out.estimates["blocks"] = st.blocks_seen;
  return out;
}

inline UnitSet unit_set(const Dataset& d, std::span<const std::size_t> idx, const MatrixXd& X) {
  UnitSet u;
  u.X = X;
  for (std::size_t i : idx) {
    u.id.push_back(d.rows[i].unit_id);
    u.loc.push_back(Location{d.rows[i].x.value_or(0.0), d.rows[i].y.value_or(0.0)});
    if (d.rows[i].cluster_id) u.cluster.push_back(*d.rows[i].cluster_id);
  }
  if (!u.cluster.empty() && u.cluster.size() != idx.size())
    throw ingest_error("sample file", 0, "cluster_id must be given for every unit or none");
  return u;
}

/// Cluster-indicator design (one mean per cluster) over the given units.
inline MatrixXd cluster_design(const Dataset& d, std::span<const std::size_t> idx, const std::vector<long>& labels) {
  MatrixXd X = MatrixXd::Zero(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto it = std::find(labels.begin(), labels.end(), *d.rows[idx[r]].cluster_id);
    if (it == labels.end()) throw config_error("krige: cluster mean requested for a cluster without sampled units");
    X(static_cast<Eigen::Index>(r), it - labels.begin()) = 1.0;
  }
  return X;
}

inline FitOutput fit_krige_model(const Config& cfg, const Dataset& d, const McmcSettings& mcmc, int chains,
                                 double level, RngHandle& rng) {
  const Config c = cfg.section("krige");
  const auto sampled = d.sampled();
  const auto unsampled = d.unsampled();
  const std::string mean = c.get<std::string>("mean", "intercept");
  PartitionedGaussianModel m;
  if (mean == "intercept") {
    m.sampled = unit_set(d, sampled, d.design(sampled));
    m.unsampled = unit_set(d, unsampled, d.design(unsampled));
  } else if (mean == "cluster") {
    if (!d.has_clusters(d.population())) throw ingest_error("sample file", 0, "mean 'cluster' needs cluster_id");
    std::vector<long> labels;
    for (std::size_t i : sampled)
      if (std::find(labels.begin(), labels.end(), *d.rows[i].cluster_id) == labels.end())
        labels.push_back(*d.rows[i].cluster_id);
    std::sort(labels.begin(), labels.end());
    m.sampled = unit_set(d, sampled, cluster_design(d, sampled, labels));
    m.unsampled = unit_set(d, unsampled, cluster_design(d, unsampled, labels));
  } else {
    throw config_error("krige.mean must be 'intercept' or 'cluster'");
  }
  m.beta_prior = BetaPrior::vague(m.p(), c.get<double>("beta_prior_variance", 1e6));
  m.covariance.nugget_prior = read_param(c.section("sigma2"), m.covariance.nugget, m.covariance.nugget_prior);
  if (c.has("cluster")) {
    ClusterComponent cc;
    cc.prior = read_param(c.section("cluster"), cc.variance, cc.prior);
    m.covariance.cluster = cc;
  }
  for (const auto& s : c.sections("spatial")) m.covariance.spatial.push_back(read_spatial(s));
  const bool needs_coords = !m.covariance.spatial.empty();
  if (needs_coords && !d.has_coords(d.population())) throw ingest_error("sample file", 0, "spatial terms need x, y");
  KrigeOptions opt;
  opt.mcmc = mcmc;
  opt.chains = chains;
  opt.predict = true;
  opt.assess = true;
  const auto y = d.sampled_values();
  const KrigeResult r = krige_posterior_draws(m, y, opt, rng);
  FitOutput out;
  out.diagnostics = r.diagnostics;
  const VectorXd pm = population_mean_draws(r, m, y);
  out.population_mean = summarize(pm, level);
  out.estimates["population_mean"] = interval_json(*out.population_mean);
  out.estimates["population_total"] =
      interval_json(VectorXd(pm * static_cast<double>(sampled.size() + unsampled.size())), level);
  for (std::size_t k = 0; k < r.draws.names().size(); ++k) {
    const auto& nm = r.draws.names()[k];
    if (nm.rfind("Y[", 0) == 0) continue;
    out.estimates[nm] = interval_json(VectorXd(r.draws.values().col(static_cast<Eigen::Index>(k))), level);
  }
  add_predictive(out, r.replicates, r.pointwise_log_density, y, m.sampled.id);
  return out;
}

inline FitOutput fit_nonignorable_model(const Config& cfg, const Dataset& d, const McmcSettings& mcmc, int chains,
                                        double level, RngHandle& rng) {
  const Config c = cfg.section("nonignorable");
  std::vector<std::size_t> all(d.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  NonignorableModel m;
  m.units = unit_set(d, all, d.design(all));
  for (const auto& r : d.rows) m.u.push_back(r.u_flag);
  for (const auto& r : d.rows)
    if (!r.z_flag) throw ingest_error("sample file", 0, "nonignorable needs z_flag at every location");
  m.beta_prior = BetaPrior::vague(m.p(), c.get<double>("beta_prior_variance", 1e6));
  m.sigma2_prior = read_param(c.section("sigma2"), m.sigma2, m.sigma2_prior);
  if (c.has("w")) m.w = read_spatial(c.section("w"));
  m.model_inclusion = c.get<bool>("inclusion", true);
  if (m.model_inclusion) {
    if (c.get<bool>("inclusion_covariates", false)) m.XZ = d.design(all, false);
    const Config bz = c.section("beta_z");
    const auto start = bz.get_list<double>("start", std::vector<double>(static_cast<std::size_t>(m.pz()), 0.0));
    require(static_cast<Eigen::Index>(start.size()) == m.pz(), "nonignorable.beta_z.start needs " +
                                                                    std::to_string(m.pz()) + " values");
    m.beta_z = Eigen::Map<const VectorXd>(start.data(), m.pz());
    const auto fixed = bz.get_list<int>("fixed", {});
    require(fixed.empty() || static_cast<Eigen::Index>(fixed.size()) == m.pz(),
            "nonignorable.beta_z.fixed needs one 0/1 per coefficient");
    for (int f : fixed) m.beta_z_fixed.push_back(f != 0);
    m.beta_z_prior_sd = bz.get<double>("prior_sd", 10.0);
    m.slope_starts = bz.get_list<double>("slope_starts", m.slope_starts);
    m.pilot_iterations = bz.get<long>("pilot_iterations", m.pilot_iterations);
    if (c.has("omega")) m.omega = read_spatial(c.section("omega"));
  }
  if ((m.w || m.omega) && !d.has_coords(d.population())) throw ingest_error("sample file", 0, "spatial terms need x, y");
  std::vector<bool> z;
  for (std::size_t i = 0; i < d.size(); ++i) z.push_back(d.z[i]);
  const auto y = d.sampled_values();
  const NonignorableResult r = fit_nonignorable(m, z, y, mcmc, rng, chains);
  FitOutput out;
  out.diagnostics = r.diagnostics;
  const VectorXd pm = r.draws.column("pop_mean");
  out.population_mean = summarize(pm, level);
  out.estimates["population_mean"] = interval_json(*out.population_mean);
  out.estimates["population_total"] =
      interval_json(VectorXd(pm * static_cast<double>(d.population().size())), level);
  for (std::size_t k = 0; k < r.draws.names().size(); ++k) {
    const auto& nm = r.draws.names()[k];
    if (nm.rfind("Y[", 0) == 0 || nm == "pop_mean") continue;
    out.estimates[nm] = interval_json(VectorXd(r.draws.values().col(static_cast<Eigen::Index>(k))), level);
  }
  std::vector<long> ids;
  for (std::size_t i : d.sampled()) ids.push_back(d.rows[i].unit_id);
  add_predictive(out, r.replicates, r.pointwise_log_density, y, ids);
  return out;
}

/// Lattice (rook) adjacency over an r x c grid, row-major vertex ids.
inline MatrixXd grid_adjacency(long rows, long cols) {
  std::vector<Edge> e;
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) {
      if (j + 1 < cols) e.push_back({i * cols + j, i * cols + j + 1, 1.0});
      if (i + 1 < rows) e.push_back({i * cols + j, (i + 1) * cols + j, 1.0});
    }
  return adjacency_from_edges(rows * cols, e);
}

/// `graphical { q 2  variable_edges "0 1 1"  rho 0.5  grid_rows 3  grid_cols 3  rho_s "0.4 0.6" }`
inline PrecisionAssembly read_graphical(const Config& c) {
  const long q = c.get<long>("q");
  const auto ve = c.get_list<double>("variable_edges");
  require(ve.size() % 3 == 0, "graphical.variable_edges takes (i j weight) triples");
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < ve.size(); k += 3)
    edges.push_back({static_cast<long>(ve[k]), static_cast<long>(ve[k + 1]), ve[k + 2]});
  const VariableGraph vg(adjacency_from_edges(q, edges), c.get<double>("rho", 0.0));
  const SpatialGraph sg(grid_adjacency(c.get<long>("grid_rows"), c.get<long>("grid_cols")));
  const auto rho_s = c.get_list<double>("rho_s");
  require(static_cast<long>(rho_s.size()) == q, "graphical.rho_s needs one value per variable");
  std::vector<MatrixXd> R;
  for (double r : rho_s) R.push_back(car_factor(sg, r));
  return assemble_Q(vg, std::move(R));
}

inline FitOutput fit_graphical_model(const Config& cfg, const Dataset& d) {
  const PrecisionAssembly a = read_graphical(cfg.section("graphical"));
  const auto pop = d.population();
  require(static_cast<Eigen::Index>(pop.size()) == a.N() * a.q(),
          "graphical: data must hold N q = " + std::to_string(a.N() * a.q()) + " values");
  VectorXd y(a.N() * a.q());
  std::vector<std::pair<long, std::size_t>> order;
  for (std::size_t i : pop) {
    if (!d.rows[i].value) throw ingest_error("sample file", 0, "graphical needs every value");
    order.push_back({d.rows[i].unit_id, i});
  }
  std::sort(order.begin(), order.end());
  for (std::size_t k = 0; k < order.size(); ++k) y(static_cast<Eigen::Index>(k)) = *d.rows[order[k].second].value;
  FitOutput out;
  const double brook = brook_joint_density(a.conditionals(), y);
  out.estimates["log_det_Q"] = a.log_det();
  out.estimates["brook_log_density_ratio"] = brook;
  out.estimates["log_density"] =
      0.5 * a.log_det() - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) + brook;
  return out;
}

inline FitOutput fit_model(const std::string& model, const Config& cfg, const Dataset& d, const McmcSettings& mcmc,
                           int chains, double level, RngHandle& rng) {
  if (model == "srswor") return fit_srswor_model(cfg, d, level, rng);
  if (model == "ht_exact") return fit_ht_model(cfg, d, true);
  if (model == "ht_approx") return fit_ht_model(cfg, d, false);
  if (model == "two_stage") return fit_two_stage_model(cfg, d, level, rng);
  if (model == "stream_regress") return fit_stream_regress_model(cfg, d, level, rng);
  if (model == "krige") return fit_krige_model(cfg, d, mcmc, chains, level, rng);
  if (model == "nonignorable") return fit_nonignorable_model(cfg, d, mcmc, chains, level, rng);
  if (model == "graphical") return fit_graphical_model(cfg, d);
  throw config_error("unknown model '" + model +
                     "' (srswor, ht_exact, ht_approx, two_stage, stream_regress, krige, nonignorable, graphical)");
}

inline bool model_uses_mcmc(const std::string& model) { return model == "krige" || model == "nonignorable"; }

}  // namespace fpbayes::cli
