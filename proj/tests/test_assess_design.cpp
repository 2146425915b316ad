#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "fpbayes/assess.hpp"
#include "fpbayes/design_sim.hpp"
#include "fpbayes/ht_bridge.hpp"
#include "fpbayes/kriging.hpp"
#include "test_support.hpp"

using namespace fpbayes;
using fpbayes::testing::mean_se;

namespace {

PredictiveSummary summary(std::vector<double> mean, std::vector<double> var, MatrixXd ld = MatrixXd()) {
  PredictiveSummary s;
  s.rep_mean = Eigen::Map<VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  s.rep_var = Eigen::Map<VectorXd>(var.data(), static_cast<Eigen::Index>(var.size()));
  s.log_density = std::move(ld);
  return s;
}

}  // namespace

// ----------------------------------------------------------------- assess --

TEST(MetricD, HandCases) {
  const std::vector<double> y{1.5, -2.0, 0.25};
  EXPECT_EQ(metric_D(summary(y, {0.0, 0.0, 0.0}), y), 0.0);
  EXPECT_NEAR(metric_D(summary({0.0}, {1.0}), std::vector<double>{3.0}), 10.0, 1e-12);
}

TEST(MetricD, DecreasesAsMeansApproachData) {
  const std::vector<double> y{2.0, -1.0, 4.0};
  double prev = std::numeric_limits<double>::infinity();
  for (double t = 0.0; t <= 1.0; t += 0.1) {
    std::vector<double> m;
    for (double v : y) m.push_back(t * v);
    const double d = metric_D(summary(m, {0.5, 0.5, 0.5}), y);
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(MetricGRS, HandCases) {
  const std::vector<double> y{0.3, 1.0, -4.0};
  EXPECT_NEAR(metric_GRS(summary(y, {1.0, 1.0, 1.0}), y), 0.0, 1e-12);
  EXPECT_NEAR(metric_GRS(summary({0.0}, {std::numbers::e}), std::vector<double>{0.0}), -1.0, 1e-12);
}

TEST(MetricGRS, InflatingVarianceAtPerfectMeansLowersScore) {
  const std::vector<double> y{0.3, 1.0};
  double prev = metric_GRS(summary(y, {1.0, 1.0}), y);
  for (double v = 1.1; v < 10.0; v += 0.3) {
    const double g = metric_GRS(summary(y, {v, v}), y);
    EXPECT_LT(g, prev);
    prev = g;
  }
}

TEST(MetricGRS, ZeroVarianceIsUndefined) {
  const std::vector<double> y{0.0, 1.0};
  EXPECT_THROW(metric_GRS(summary(y, {1.0, 0.0}), y), undefined_score);
  EXPECT_THROW(metric_D(summary(y, {1.0}), y), std::invalid_argument);
}

TEST(MetricWAIC, TwoDrawHandCase) {
  MatrixXd ld(2, 1);
  ld << -1.0, -3.0;
  const auto r = metric_WAIC(summary({0.0}, {1.0}, ld));
  const double first = -2.0 * std::log((std::exp(-1.0) + std::exp(-3.0)) / 2.0);
  EXPECT_NEAR(r.p_waic, 2.0, 1e-12);
  EXPECT_NEAR(r.waic, first + 4.0, 1e-12);
  EXPECT_EQ(r.se, 0.0);
}

TEST(MetricWAIC, DegeneratePosteriorHasZeroPenalty) {
  MatrixXd ld(3, 2);
  ld.col(0).setConstant(0.1);
  ld.col(1).setConstant(-7.3);
  const auto r = metric_WAIC(summary({0.0, 0.0}, {1.0, 1.0}, ld));
  EXPECT_EQ(r.p_waic, 0.0);
  EXPECT_NEAR(r.waic, -2.0 * (0.1 - 7.3), 1e-12);
}

TEST(MetricWAIC, LogSumExpMatchesDirectAverage) {
  RngHandle rng(71);
  MatrixXd ld(500, 8);
  for (Eigen::Index i = 0; i < ld.size(); ++i) ld(i) = -1.0 - rng.uniform() * 3.0;
  const auto r = metric_WAIC(summary(std::vector<double>(8, 0.0), std::vector<double>(8, 1.0), ld));
  double direct = 0.0;
  for (Eigen::Index i = 0; i < 8; ++i) direct += std::log(ld.col(i).array().exp().mean());
  EXPECT_NEAR(r.lppd, direct, 1e-12 * std::abs(direct));
}

TEST(MetricWAIC, StandardErrorFromPointwiseContributions) {
  MatrixXd ld(2, 2);
  ld << -1.0, -2.0, -1.0, -2.0;  // zero penalty, pointwise waic 2 and 4
  const auto r = metric_WAIC(summary({0.0, 0.0}, {1.0, 1.0}, ld));
  EXPECT_NEAR(r.waic, 6.0, 1e-12);
  EXPECT_NEAR(r.se, std::sqrt(2.0 * 2.0), 1e-12);
}

TEST(MetricWAIC, Preconditions) {
  EXPECT_THROW(metric_WAIC(summary({0.0}, {1.0}, MatrixXd::Zero(1, 1))), std::invalid_argument);
  MatrixXd ld(2, 1);
  ld << -1.0, -std::numeric_limits<double>::infinity();
  EXPECT_THROW(metric_WAIC(summary({0.0}, {1.0}, ld)), std::domain_error);
}

TEST(Metrics, OrderInvarianceAndReproducibility) {
  RngHandle rng(72);
  const Eigen::Index L = 200, n = 12;
  MatrixXd rep(L, n), ld(L, n);
  std::vector<double> y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = rng.standard_normal();
    for (Eigen::Index l = 0; l < L; ++l) {
      rep(l, i) = rng.standard_normal();
      ld(l, i) = -0.5 * std::pow(y[static_cast<std::size_t>(i)] - rep(l, i), 2);
    }
  }
  const auto s = PredictiveSummary::from_draws(rep, ld);
  const double d = metric_D(s, y), g = metric_GRS(s, y);
  const auto w = metric_WAIC(s);
  EXPECT_EQ(metric_D(s, y), d);
  EXPECT_EQ(metric_GRS(s, y), g);

  Eigen::PermutationMatrix<Eigen::Dynamic> pu(n), pd(L);
  pu.setIdentity();
  pd.setIdentity();
  for (Eigen::Index k = n; k > 1; --k) std::swap(pu.indices()(k - 1), pu.indices()(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(k)))));
  for (Eigen::Index k = L; k > 1; --k) std::swap(pd.indices()(k - 1), pd.indices()(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(k)))));
  const MatrixXd rep2 = pd * rep * pu, ld2 = pd * ld * pu;
  std::vector<double> y2(n);
  for (Eigen::Index i = 0; i < n; ++i) y2[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(pu.indices()(i))];
  const auto s2 = PredictiveSummary::from_draws(rep2, ld2);
  EXPECT_NEAR(metric_D(s2, y2), d, 1e-12 * std::abs(d));
  EXPECT_NEAR(metric_GRS(s2, y2), g, 1e-12 * std::abs(g));
  EXPECT_NEAR(metric_WAIC(s2).waic, w.waic, 1e-12 * std::abs(w.waic));
}

TEST(Metrics, SummaryUsesUnbiasedVariance) {
  MatrixXd rep(3, 1);
  rep << 1.0, 2.0, 6.0;
  const auto s = PredictiveSummary::from_draws(rep, MatrixXd());
  EXPECT_DOUBLE_EQ(s.rep_mean(0), 3.0);
  EXPECT_DOUBLE_EQ(s.rep_var(0), 7.0);
  EXPECT_THROW(PredictiveSummary::from_draws(rep, MatrixXd::Zero(2, 1)), std::invalid_argument);
  EXPECT_THROW(PredictiveSummary::from_draws(MatrixXd::Zero(1, 1), MatrixXd()), std::invalid_argument);
}

TEST(Metrics, WaicPrefersSpatialModelOnSpatialData) {
  RngHandle rng(73);
  int spatial_wins = 0;
  const int reps = 30;
  for (int r = 0; r < reps; ++r) {
    RngHandle rr = rng.substream(static_cast<std::uint64_t>(r));
    GpSpec gs;
    for (int i = 0; i < 100; ++i) gs.coords.push_back({rr.uniform(), rr.uniform()});
    gs.X = MatrixXd::Ones(100, 1);
    gs.beta = VectorXd::Constant(1, 1.0);
    gs.cov = {CovarianceFamily::kExponential, 0.2, 1.0, 3.0, 0.5};
    const auto pop = generate_population(gs, rr).population;
    const auto d = execute_design(pop, SrsworDesign{60}, rr);

    PartitionedGaussianModel m;
    m.sampled.X = MatrixXd::Ones(60, 1);
    for (std::size_t k = 0; k < d.sampled.size(); ++k) {
      m.sampled.id.push_back(static_cast<long>(d.sampled[k]));
      m.sampled.loc.push_back(pop.coords[d.sampled[k]]);
    }
    m.unsampled.X = MatrixXd(0, 1);
    m.beta_prior = BetaPrior::vague(1, 100.0);
    m.covariance.nugget = 0.5;
    KrigeOptions opt;
    opt.mcmc = {1000, 500, 400, 1};
    opt.predict = false;
    const auto indep = krige_posterior_draws(m, d.y, opt, rr);
    SpatialComponent sc;
    sc.variance = 0.5;
    sc.phi = 2.0;
    sc.phi_prior = ScalarPrior::uniform(0.3, 30.0);
    m.covariance.spatial.push_back(sc);
    const auto spatial = krige_posterior_draws(m, d.y, opt, rr);
    const double wi = metric_WAIC(PredictiveSummary::from_draws(indep.replicates, indep.pointwise_log_density)).waic;
    const double ws = metric_WAIC(PredictiveSummary::from_draws(spatial.replicates, spatial.pointwise_log_density)).waic;
    spatial_wins += ws < wi ? 1 : 0;
  }
  EXPECT_GE(spatial_wins, 24) << spatial_wins << " of " << reps;
}

// ------------------------------------------------------------- population --

TEST(Population, IidMoments) {
  RngHandle rng(74);
  const auto g = generate_population(IidSpec{10000, 0.0, 1.0}, rng);
  const auto ms = mean_se(g.population.Y);
  EXPECT_NEAR(ms.mean, 0.0, 3.0 * ms.se);
  EXPECT_NEAR(ms.var, 1.0, 3.0 * std::sqrt(2.0 / 10000.0));
  EXPECT_EQ(g.truth.model(), "iid");
  EXPECT_EQ(g.truth.parameter("variance"), 1.0);
}

TEST(Population, TwoStageWithoutVarianceIsConstant) {
  RngHandle rng(75);
  const auto g = generate_population(TwoStageSpec{{3, 5, 2}, 1.75, 0.0, 1.0}, rng);
  ASSERT_EQ(g.population.N(), 10u);
  for (double v : g.population.Y) EXPECT_EQ(v, 1.75);
  EXPECT_EQ(g.population.cluster_of[4], 1);
  EXPECT_THROW(generate_population(TwoStageSpec{{3, 0}, 0.0, 1.0, 1.0}, rng), std::invalid_argument);
}

TEST(Population, GpVariogramIncreasesWithDistance) {
  RngHandle rng(76);
  const int bins = 5;
  const double width = 0.1;
  std::vector<double> gamma(bins, 0.0), count(bins, 0.0);
  for (int rep = 0; rep < 20; ++rep) {
    GpSpec gs;
    for (int i = 0; i < 250; ++i) gs.coords.push_back({rng.uniform(), rng.uniform()});
    gs.X = MatrixXd::Ones(250, 1);
    gs.beta = VectorXd::Zero(1);
    gs.cov = {CovarianceFamily::kExponential, 0.1, 1.0, 5.0, 0.5};
    const auto pop = generate_population(gs, rng).population;
    for (std::size_t a = 0; a < pop.N(); ++a)
      for (std::size_t b = 0; b < a; ++b) {
        const auto k = static_cast<int>(distance(pop.coords[a], pop.coords[b]) / width);
        if (k >= bins) continue;
        gamma[static_cast<std::size_t>(k)] += 0.5 * std::pow(pop.Y[a] - pop.Y[b], 2);
        count[static_cast<std::size_t>(k)] += 1.0;
      }
  }
  for (int k = 1; k < bins; ++k)
    EXPECT_GT(gamma[static_cast<std::size_t>(k)] / count[static_cast<std::size_t>(k)],
              gamma[static_cast<std::size_t>(k - 1)] / count[static_cast<std::size_t>(k - 1)])
        << k;
}

TEST(Population, GraphicalDrawHasAssemblySize) {
  const PrecisionAssembly pa(MatrixXd::Identity(2, 2), {MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3)});
  RngHandle rng(77);
  const auto g = generate_population(GraphicalSpec{&pa}, rng);
  EXPECT_EQ(g.population.N(), 6u);
  EXPECT_THROW(generate_population(GraphicalSpec{}, rng), std::invalid_argument);
}

// ----------------------------------------------------------------- design --

TEST(Design, SrsworSubsetsAreUniform) {
  FinitePopulation pop;
  pop.Y = {1.0, 2.0, 3.0, 4.0};
  RngHandle rng(78);
  std::map<std::vector<std::size_t>, double> freq;
  const int R = 60000;
  for (int r = 0; r < R; ++r) freq[execute_design(pop, SrsworDesign{2}, rng).sampled] += 1.0;
  ASSERT_EQ(freq.size(), 6u);
  double chi2 = 0.0;
  for (const auto& [k, c] : freq) chi2 += std::pow(c - R / 6.0, 2) / (R / 6.0);
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(5.0), chi2));
  EXPECT_GT(p, 0.001);
}

TEST(Design, TwoStageInclusionFrequency) {
  RngHandle rng(79);
  const auto pop = generate_population(TwoStageSpec{{4, 6, 5, 3, 8}, 0.0, 1.0, 1.0}, rng).population;
  const TwoStageDesign design{2, {2, 3, 1, 3, 4}};
  const int R = 20000;
  std::vector<double> hits(pop.N(), 0.0);
  DesignDraw d;
  for (int r = 0; r < R; ++r) {
    d = execute_design(pop, design, rng);
    for (std::size_t i : d.sampled) hits[i] += 1.0;
  }
  const std::vector<long> M{4, 6, 5, 3, 8};
  for (std::size_t i = 0; i < pop.N(); ++i) {
    const auto c = static_cast<std::size_t>(pop.cluster_of[i]);
    const double pi = (2.0 / 5.0) * (static_cast<double>(design.m[c]) / static_cast<double>(M[c]));
    EXPECT_DOUBLE_EQ(d.inclusion_prob[i], pi);
    const double se = std::sqrt(pi * (1.0 - pi) / R);
    EXPECT_NEAR(hits[i] / R, pi, 3.0 * se) << i;
  }
  EXPECT_THROW(execute_design(pop, TwoStageDesign{2, {2, 3}}, rng), std::invalid_argument);
  EXPECT_THROW(execute_design(pop, TwoStageDesign{2, {5, 3, 1, 3, 4}}, rng), std::invalid_argument);
}

TEST(Design, LogitWithoutSlopeIgnoresY) {
  RngHandle rng(80);
  const auto pop = generate_population(IidSpec{20000, 0.0, 1.0}, rng).population;
  auto corr = [&](double b1) {
    const auto d = execute_design(pop, BernoulliLogitDesign{-0.5, b1, VectorXd(), std::nullopt}, rng);
    std::vector<double> z(pop.N());
    for (std::size_t i = 0; i < pop.N(); ++i) z[i] = d.z[i] ? 1.0 : 0.0;
    const auto mz = mean_se(z), my = mean_se(pop.Y);
    double c = 0.0;
    for (std::size_t i = 0; i < pop.N(); ++i) c += (z[i] - mz.mean) * (pop.Y[i] - my.mean);
    return c / (static_cast<double>(pop.N() - 1) * std::sqrt(mz.var * my.var));
  };
  EXPECT_LT(std::abs(corr(0.0)), 3.0 / std::sqrt(20000.0));
  EXPECT_GT(corr(1.5), 0.2);
}

TEST(Design, StructuralZerosStayOutOfSample) {
  FinitePopulation pop;
  pop.Y = {1, 2, 3, 4, 5, 6};
  pop.u_flags = {true, false, true, true, false, true};
  EXPECT_EQ(pop.population_size(), 4u);
  EXPECT_DOUBLE_EQ(pop.total(), 1 + 3 + 4 + 6);
  RngHandle rng(81);
  for (int r = 0; r < 200; ++r) {
    const auto d = execute_design(pop, SrsworDesign{3}, rng);
    EXPECT_FALSE(d.z[1] || d.z[4]);
    EXPECT_EQ(d.inclusion_prob[1], 0.0);
    EXPECT_DOUBLE_EQ(d.inclusion_prob[0], 0.75);
    const auto b = execute_design(pop, BernoulliLogitDesign{3.0, 0.0, VectorXd(), std::nullopt}, rng);
    EXPECT_FALSE(b.z[1] || b.z[4]);
  }
  EXPECT_THROW(execute_design(pop, SrsworDesign{5}, rng), std::invalid_argument);
}

TEST(Design, ReproducibleFromSeed) {
  RngHandle g(82);
  const auto pop = generate_population(IidSpec{300, 1.0, 2.0}, g).population;
  const DesignSpec designs[] = {SrsworDesign{40}, BernoulliLogitDesign{-1.0, 0.8, VectorXd(), std::nullopt}};
  for (const auto& ds : designs) {
    RngHandle a(5, 9), b(5, 9);
    EXPECT_EQ(execute_design(pop, ds, a).z, execute_design(pop, ds, b).z);
  }
}

TEST(Design, SrsworHtIsDesignUnbiased) {
  RngHandle rng(83);
  const auto pop = generate_population(IidSpec{200, 5.0, 4.0}, rng).population;
  std::vector<double> est;
  for (int r = 0; r < 10000; ++r) {
    const auto d = execute_design(pop, SrsworDesign{20}, rng);
    est.push_back(ht_estimator(d.y, InclusionProbs{d.inclusion_prob, d.sampled}));
  }
  const auto ms = mean_se(est);
  EXPECT_NEAR(ms.mean, pop.total(), 3.0 * ms.se);
}
