#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fpbayes/cli/models.hpp"
#include "fpbayes/design_sim.hpp"

#ifndef FPBAYES_VERSION
#define FPBAYES_VERSION "0.0.0"
#endif

namespace fpbayes::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIngest = 2, kDiagnostics = 3 };

struct RunOptions {
  std::string command;  // simulate | fit | assess | replicate
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;  // empty: stdout
  bool allow_unconverged = false;
};

inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace detail {

/// Relative paths in a config are taken relative to the config file.
inline std::string resolve(const std::string& config_path, const std::string& p) {
  const std::filesystem::path fp(p);
  if (fp.is_absolute()) return p;
  return (std::filesystem::path(config_path).parent_path() / fp).lexically_normal().string();
}

inline VectorXd list_vector(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline CovarianceSpec read_cov_spec(const Config& c) {
  CovarianceSpec s;
  s.family = read_family(c);
  s.nugget = c.get<double>("nugget", 0.0);
  s.partial_sill = c.get<double>("partial_sill", 1.0);
  s.phi = c.get<double>("phi", 1.0);
  s.eta = c.get<double>("eta", 0.5);
  s.validate();
  return s;
}

inline std::vector<Location> uniform_coords(long N, RngHandle& rng) {
  std::vector<Location> out;
  for (long i = 0; i < N; ++i) {
    const double x = rng.uniform();
    out.push_back({x, rng.uniform()});
  }
  return out;
}

inline MatrixXd normal_matrix(long rows, long cols, RngHandle& rng) {
  MatrixXd m(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) m(i, j) = rng.standard_normal();
  return m;
}

}  // namespace detail

struct Simulated {
  FinitePopulation population;
  std::map<std::string, double> truth;
  DesignDraw design;
  std::optional<PrecisionAssembly> graph;  // keeps a graphical spec alive
};

/// Builds and samples one synthetic population from `population { }` and
/// `design { }` blocks.
inline Simulated simulate_once(const Config& pc, const Config& dc, RngHandle& rng) {
  Simulated sim;
  const std::string kind = pc.get<std::string>("kind");
  GeneratedPopulation gen{FinitePopulation{}, PopulationTruth{"", {}}};
  std::optional<MatrixXd> covs;  // exported covariates, without the intercept column
  if (kind == "iid") {
    gen = generate_population(IidSpec{pc.get<long>("N"), pc.get<double>("mean", 0.0), pc.get<double>("variance", 1.0)},
                              rng);
  } else if (kind == "two_stage") {
    TwoStageSpec s;
    const long primaries = pc.get<long>("primaries");
    const auto sizes = pc.get_list<long>("sizes");
    require(sizes.size() == 1 || static_cast<long>(sizes.size()) == primaries,
            "population.sizes takes one size or one per primary");
    for (long i = 0; i < primaries; ++i) s.M.push_back(sizes.size() == 1 ? sizes[0] : sizes[static_cast<std::size_t>(i)]);
    s.nu = pc.get<double>("nu", 0.0);
    s.delta2 = pc.get<double>("delta2", 1.0);
    s.gamma2 = pc.get<double>("gamma2", 1.0);
    gen = generate_population(s, rng);
  } else if (kind == "gp") {
    GpSpec s;
    const long N = pc.get<long>("N");
    const long k = pc.get<long>("covariates", 0);
    s.coords = detail::uniform_coords(N, rng);
    covs = detail::normal_matrix(N, k, rng);
    s.X.resize(N, k + 1);
    s.X.col(0).setOnes();
    s.X.rightCols(k) = *covs;
    s.beta = detail::list_vector(pc.get_list<double>("beta", {0.0}));
    require(s.beta.size() == k + 1, "population.beta needs 1 + covariates values");
    s.cov = detail::read_cov_spec(pc);
    gen = generate_population(s, rng);
  } else if (kind == "clustered_spatial") {
    ClusteredSpatialSpec s;
    const long N = pc.get<long>("N");
    const long K = pc.get<long>("clusters");
    require(K >= 1 && K <= N, "population.clusters must lie in [1, N]");
    const std::string layout = pc.get<std::string>("layout", "compact");
    s.coords = detail::uniform_coords(N, rng);
    for (long i = 0; i < N; ++i) {
      if (layout == "compact")
        s.cluster_of.push_back(std::min(K - 1, static_cast<long>(s.coords[static_cast<std::size_t>(i)].x * K)));
      else if (layout == "interleaved")
        s.cluster_of.push_back(i % K);
      else
        throw config_error("population.layout must be 'compact' or 'interleaved'");
    }
    s.mu = pc.get<double>("mu", 0.0);
    s.cluster_var = pc.get<double>("cluster_var", 1.0);
    s.cov = detail::read_cov_spec(pc);
    gen = generate_population(s, rng);
  } else if (kind == "graphical") {
    sim.graph.emplace(read_graphical(pc.section("graphical")));
    gen = generate_population(GraphicalSpec{&*sim.graph}, rng);
    for (Eigen::Index i = 0; i < sim.graph->q(); ++i)
      for (Eigen::Index s = 0; s < sim.graph->N(); ++s) gen.population.cluster_of.push_back(static_cast<long>(i));
  } else {
    throw config_error("unknown population.kind '" + kind + "' (iid, two_stage, gp, clustered_spatial, graphical)");
  }
  sim.population = std::move(gen.population);
  if (covs) sim.population.covariates = *covs;
  sim.truth = gen.truth.parameters();

  if (pc.has("structural_zeros")) {
    const Config z = pc.section("structural_zeros");
    require(!sim.population.coords.empty(), "structural_zeros needs a spatial population");
    const auto n = static_cast<Eigen::Index>(sim.population.N());
    CovarianceSpec v = detail::read_cov_spec(z);
    sim.population.u_flags = generate_u_flags(sim.population.coords, MatrixXd::Ones(n, 1),
                                              VectorXd::Constant(1, z.get<double>("intercept")), v, rng);
  }
  sim.truth["population_mean"] = sim.population.mean();
  sim.truth["population_total"] = sim.population.total();

  const std::string dk = dc.get<std::string>("kind");
  DesignSpec design;
  if (dk == "srswor") {
    design = SrsworDesign{dc.get<long>("n")};
  } else if (dk == "two_stage") {
    TwoStageDesign t;
    t.n = dc.get<long>("n");
    const auto m = dc.get_list<long>("m");
    require(!m.empty(), "design.m is required");
    long primaries = 0;
    for (long c : sim.population.cluster_of) primaries = std::max(primaries, c + 1);
    for (long i = 0; i < primaries; ++i) t.m.push_back(m.size() == 1 ? m[0] : m.at(static_cast<std::size_t>(i)));
    design = t;
  } else if (dk == "bernoulli_logit") {
    BernoulliLogitDesign b;
    b.b0 = dc.get<double>("b0");
    b.b1 = dc.get<double>("b1");
    b.b_covariates = detail::list_vector(dc.get_list<double>("b_covariates"));
    if (dc.has("omega")) b.omega = detail::read_cov_spec(dc.section("omega"));
    design = b;
  } else {
    throw config_error("unknown design.kind '" + dk + "' (srswor, two_stage, bernoulli_logit)");
  }
  sim.design = execute_design(sim.population, design, rng);
  return sim;
}

inline std::vector<std::string> covariate_names(const FinitePopulation& p) {
  std::vector<std::string> out;
  for (Eigen::Index k = 0; k < p.covariates.cols(); ++k) out.push_back("cov_" + std::to_string(k + 1));
  return out;
}

/// Population table (all units, true values) and sample table (values only
/// at sampled units).
inline std::pair<UnitTable, UnitTable> simulated_tables(const Simulated& sim) {
  const FinitePopulation& p = sim.population;
  UnitTable pop;
  pop.columns = {"unit_id", "value"};
  if (!p.coords.empty()) pop.columns.insert(pop.columns.end(), {"x", "y"});
  if (!p.cluster_of.empty()) pop.columns.push_back("cluster_id");
  pop.columns.push_back("u_flag");
  pop.covariate_names = covariate_names(p);
  UnitTable smp = pop;
  smp.columns.insert(smp.columns.end(), {"z_flag", "inclusion_prob"});
  for (const auto& c : pop.covariate_names) {
    pop.columns.push_back(c);
    smp.columns.push_back(c);
  }
  for (std::size_t i = 0; i < p.N(); ++i) {
    UnitRecord r;
    r.unit_id = static_cast<long>(i) + 1;
    r.value = p.Y[i];
    if (!p.coords.empty()) {
      r.x = p.coords[i].x;
      r.y = p.coords[i].y;
    }
    if (!p.cluster_of.empty()) r.cluster_id = p.cluster_of[i];
    r.u_flag = p.in_population(i);
    for (Eigen::Index k = 0; k < p.covariates.cols(); ++k)
      r.covariates.push_back(p.covariates(static_cast<Eigen::Index>(i), k));
    pop.rows.push_back(r);
    r.z_flag = static_cast<bool>(sim.design.z[i]);
    r.inclusion_prob = sim.design.inclusion_prob[i];
    if (!*r.z_flag) r.value.reset();
    smp.rows.push_back(r);
  }
  return {pop, smp};
}

inline json base_document(const std::string& command, const std::string& config_text, std::uint64_t seed) {
  json doc;
  doc["command"] = command;
  doc["provenance"] = {{"config_hash", "fnv1a64:" + fnv1a_hex(config_text)},
                       {"seed", seed},
                       {"version", FPBAYES_VERSION}};
  return doc;
}

inline json diagnostics_json(const std::vector<ChainDiagnostics>& d) {
  json out = json::array();
  for (const auto& x : d)
    out.push_back({{"parameter", x.parameter}, {"acceptance_rate", x.acceptance_rate}, {"step", x.step}, {"ok", x.ok}});
  return out;
}

struct CommandResult {
  json doc;
  bool converged = true;
};

inline CommandResult command_fit(const Config& cfg, const std::string& config_path, RngHandle& rng) {
  const std::string model = cfg.get<std::string>("model");
  const double level = cfg.get<double>("level", 0.95);
  require(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
  const Config data = cfg.section("data");
  const UnitTable sample = read_unit_csv(detail::resolve(config_path, data.get<std::string>("sample")));
  std::optional<UnitTable> population;
  if (data.has("population"))
    population = read_unit_csv(detail::resolve(config_path, data.get<std::string>("population")));
  const Dataset d = make_dataset(sample, population ? &*population : nullptr);
  int chains = 1;
  McmcSettings mcmc;
  if (model_uses_mcmc(model)) mcmc = read_mcmc(cfg, &chains);
  const std::string draws_out = cfg.get<std::string>("draws_out", "");

  const FitOutput fit = fit_model(model, cfg, d, mcmc, chains, level, rng);
  cfg.check_unknown();
  CommandResult r;
  r.converged = fit.converged();
  r.doc["model"] = model;
  r.doc["sizes"] = {{"units", d.size()}, {"population", d.population().size()}, {"sampled", d.sampled().size()}};
  r.doc["estimates"] = fit.estimates;
  r.doc["metrics"] = fit.metrics;
  r.doc["diagnostics"] = {{"converged", r.converged}, {"chains", diagnostics_json(fit.diagnostics)}};
  r.doc["warnings"] = fit.warnings;
  if (!draws_out.empty()) {
    if (fit.predictive_draws.empty()) throw config_error("draws_out: model '" + model + "' produces no predictive draws");
    std::ofstream out(detail::resolve(config_path, draws_out));
    if (!out) throw ingest_error(draws_out, 0, "cannot open file for writing");
    write_draws_csv(out, fit.predictive_draws);
  }
  return r;
}

inline CommandResult command_simulate(const Config& cfg, const std::string& config_path, RngHandle& rng) {
  const Config pc = cfg.section("population");
  const Config dc = cfg.section("design");
  const std::string pop_out = cfg.get<std::string>("population_out");
  const std::string sample_out = cfg.get<std::string>("sample_out");
  Simulated sim = simulate_once(pc, dc, rng);
  cfg.check_unknown();
  const auto [pop, smp] = simulated_tables(sim);
  write_unit_csv(detail::resolve(config_path, pop_out), pop);
  write_unit_csv(detail::resolve(config_path, sample_out), smp);
  CommandResult r;
  r.doc["sizes"] = {{"units", sim.population.N()},
                    {"population", sim.population.population_size()},
                    {"sampled", sim.design.sampled.size()}};
  r.doc["truth"] = sim.truth;
  r.doc["files"] = {{"population", pop_out}, {"sample", sample_out}};
  return r;
}

inline CommandResult command_assess(const Config& cfg, const std::string& config_path) {
  const Config c = cfg.section("assess");
  const auto draws = read_draws_csv(detail::resolve(config_path, c.get<std::string>("draws")));
  const UnitTable sample = read_unit_csv(detail::resolve(config_path, c.get<std::string>("sample")));
  cfg.check_unknown();
  std::map<long, double> observed;
  for (const auto& row : sample.rows)
    if (row.value && row.z_flag.value_or(true)) observed[row.unit_id] = *row.value;
  std::map<long, std::map<long, std::pair<double, double>>> by_unit;
  for (const auto& d : draws) {
    if (!observed.count(d.unit)) throw ingest_error("draws file", 0, "unit " + std::to_string(d.unit) + " has no observed value");
    if (!by_unit[d.unit].emplace(d.draw, std::make_pair(d.value, d.logdensity)).second)
      throw ingest_error("draws file", 0, "duplicate draw for unit " + std::to_string(d.unit));
  }
  const std::size_t L = by_unit.begin()->second.size();
  MatrixXd reps(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(by_unit.size()));
  MatrixXd logd(reps.rows(), reps.cols());
  std::vector<double> y;
  Eigen::Index col = 0;
  for (const auto& [unit, m] : by_unit) {
    if (m.size() != L) throw ingest_error("draws file", 0, "units carry different numbers of draws");
    Eigen::Index row = 0;
    for (const auto& [draw, v] : m) {
      reps(row, col) = v.first;
      logd(row, col) = v.second;
      ++row;
    }
    y.push_back(observed.at(unit));
    ++col;
  }
  FitOutput out;
  std::vector<long> ids;
  for (const auto& kv : by_unit) ids.push_back(kv.first);
  add_predictive(out, reps, logd, y, ids);
  CommandResult r;
  r.doc["sizes"] = {{"units", by_unit.size()}, {"draws", L}};
  r.doc["metrics"] = out.metrics;
  r.doc["warnings"] = out.warnings;
  return r;
}

/// Dataset straight from a simulated population, without a CSV round trip.
inline Dataset dataset_from(const Simulated& sim) {
  const auto tables = simulated_tables(sim);
  return make_dataset(tables.second, nullptr);
}

inline CommandResult command_replicate(const Config& cfg, bool allow_unconverged, RngHandle& rng) {
  const Config rc = cfg.section("replicate");
  const long R = rc.get<long>("replicates");
  require(R >= 1, "replicate.replicates must be >= 1");
  const double level = cfg.get<double>("level", 0.95);
  const Config pc = rc.section("population");
  const Config dc = rc.section("design");
  struct Entry {
    std::string name;
    std::string model;
    Config cfg;
    McmcSettings mcmc;
    int chains = 1;
  };
  std::vector<Entry> entries;
  for (const auto& f : rc.sections("fit")) {
    Entry e{f.get<std::string>("name"), f.get<std::string>("model"), f, {}, 1};
    if (model_uses_mcmc(e.model)) e.mcmc = read_mcmc(f, &e.chains);
    entries.push_back(e);
  }
  require(!entries.empty(), "replicate needs at least one fit { } block");

  struct Tally {
    std::vector<double> err;
    long covered = 0, with_interval = 0, unconverged = 0;
    double width = 0.0;
    long best_D = 0, best_GRS = 0, best_WAIC = 0;
  };
  std::vector<Tally> tally(entries.size());
  bool first = true;
  for (long rep = 0; rep < R; ++rep) {
    RngHandle rr = rng.substream(static_cast<std::uint64_t>(rep));
    const Simulated sim = simulate_once(pc, dc, rr);
    const Dataset d = dataset_from(sim);
    const double truth = sim.population.mean();
    std::vector<std::optional<double>> D(entries.size()), GRS(entries.size()), WAIC(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
      RngHandle fr = rr.substream(k + 1);
      const FitOutput fit = fit_model(entries[k].model, entries[k].cfg, d, entries[k].mcmc, entries[k].chains, level, fr);
      Tally& t = tally[k];
      if (!fit.converged()) ++t.unconverged;
      t.err.push_back(fit.estimates.at("population_mean").at("mean").get<double>() - truth);
      if (fit.population_mean) {
        ++t.with_interval;
        t.width += fit.population_mean->upper - fit.population_mean->lower;
        if (fit.population_mean->lower <= truth && truth <= fit.population_mean->upper) ++t.covered;
      }
      auto metric = [&](const char* m) -> std::optional<double> {
        if (!fit.metrics.contains(m) || fit.metrics.at(m).is_null()) return std::nullopt;
        return fit.metrics.at(m).get<double>();
      };
      D[k] = metric("D");
      GRS[k] = metric("GRS");
      WAIC[k] = metric("WAIC");
    }
    auto pick = [&](const std::vector<std::optional<double>>& v, bool lower_better, long Tally::*field) {
      std::optional<std::size_t> best;
      for (std::size_t k = 0; k < v.size(); ++k)
        if (v[k] && (!best || (lower_better ? *v[k] < *v[*best] : *v[k] > *v[*best]))) best = k;
      if (best) ++(tally[*best].*field);
    };
    if (first) {
      cfg.check_unknown();
      first = false;
    }
    pick(D, true, &Tally::best_D);
    pick(GRS, false, &Tally::best_GRS);
    pick(WAIC, true, &Tally::best_WAIC);
  }

  CommandResult r;
  r.doc["replicates"] = R;
  json table = json::array();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Tally& t = tally[k];
    double bias = 0.0, mse = 0.0;
    for (double e : t.err) {
      bias += e;
      mse += e * e;
    }
    bias /= static_cast<double>(R);
    mse /= static_cast<double>(R);
    json row{{"name", entries[k].name}, {"model", entries[k].model}, {"bias", bias}, {"rmse", std::sqrt(mse)}};
    if (t.with_interval > 0) {
      row["coverage"] = static_cast<double>(t.covered) / static_cast<double>(t.with_interval);
      row["mean_width"] = t.width / static_cast<double>(t.with_interval);
    } else {
      row["coverage"] = nullptr;
      row["mean_width"] = nullptr;
    }
    row["selected"] = {{"D", t.best_D}, {"GRS", t.best_GRS}, {"WAIC", t.best_WAIC}};
    row["unconverged"] = t.unconverged;
    if (t.unconverged > 0) r.converged = false;
    table.push_back(row);
  }
  r.doc["level"] = level;
  r.doc["summary"] = table;
  if (!r.converged && allow_unconverged)
    r.doc["warnings"] = {"some replicate fits failed chain diagnostics"};
  return r;
}

inline void emit(const json& doc, const std::string& out) {
  const std::string text = doc.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw ingest_error(out, 0, "cannot open output file");
  f << text;
}

/// Runs one subcommand; returns the process exit code and reports errors on `err`.
inline int run(const RunOptions& opt, std::ostream& err = std::cerr) {
  try {
    const std::string text = read_text(opt.config_path);
    const Config cfg = Config::parse(text, opt.config_path);
    const std::uint64_t seed = opt.seed ? *opt.seed : cfg.get<std::uint64_t>("seed", 0);
    const bool timing = cfg.get<bool>("timing", false);
    RngHandle rng(seed);
    const auto t0 = std::chrono::steady_clock::now();
    CommandResult r;
    if (opt.command == "fit")
      r = command_fit(cfg, opt.config_path, rng);
    else if (opt.command == "simulate")
      r = command_simulate(cfg, opt.config_path, rng);
    else if (opt.command == "assess")
      r = command_assess(cfg, opt.config_path);
    else if (opt.command == "replicate")
      r = command_replicate(cfg, opt.allow_unconverged, rng);
    else
      throw config_error("unknown command '" + opt.command + "'");
    json doc = base_document(opt.command, text, seed);
    doc.update(r.doc);
    if (timing)
      doc["timing"] = {{"wall_seconds",
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    emit(doc, opt.out);
    if (!r.converged && !opt.allow_unconverged) {
      err << "error: chain diagnostics failed (rerun with --allow-unconverged to accept)\n";
      return kDiagnostics;
    }
    return kOk;
  } catch (const ingest_error& e) {
    err << "ingestion error: " << e.what() << '\n';
    return kIngest;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace fpbayes::cli
