#include <gtest/gtest.h>

#include <cmath>

#include "fpbayes/graph_pop.hpp"
#include "test_support.hpp"

using namespace fpbayes;
using fpbayes::testing::max_rel_err;
using fpbayes::testing::random_spd;

namespace {

MatrixXd random_nonsingular(Eigen::Index n, RngHandle& rng) {
  MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) R(i, j) = rng.standard_normal();
  R.diagonal().array() += 3.0;
  return R;
}

MatrixXd path_graph(long n) {
  std::vector<Edge> e;
  for (long i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, 1.0});
  return adjacency_from_edges(n, e);
}

MatrixXd random_graph(long n, RngHandle& rng) {
  std::vector<Edge> e;
  for (long i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, 0.5 + rng.uniform()});
  for (long i = 0; i < n; ++i)
    for (long j = i + 2; j < n; ++j)
      if (rng.uniform() < 0.3) e.push_back({i, j, 0.5 + rng.uniform()});
  return adjacency_from_edges(n, e);
}

double quad(const MatrixXd& Q, const VectorXd& y) { return y.dot(Q * y); }

}  // namespace

// ------------------------------------------------------------------ brook --

TEST(Brook, BivariateMatchesClosedForm) {
  for (double rho : {-0.7, 0.0, 0.4, 0.9}) {
    FullConditionals fc;
    fc.N = 1;
    fc.Gamma = {MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1)};
    fc.A[{0, 1}] = MatrixXd::Constant(1, 1, rho);
    fc.A[{1, 0}] = MatrixXd::Constant(1, 1, rho);
    const MatrixXd Q = precision_from_conditionals(fc);
    EXPECT_NEAR(Q(0, 1), -rho, 1e-15);
    // Bivariate normal, variances 1/(1-rho^2), correlation rho.
    const double s2 = 1.0 / (1.0 - rho * rho);
    for (auto [a, b] : std::vector<std::pair<double, double>>{{1.0, 0.5}, {-2.0, 1.3}, {0.0, 3.0}}) {
      const double expect = -(a * a - 2.0 * rho * a * b + b * b) / (2.0 * s2 * (1.0 - rho * rho));
      EXPECT_NEAR(brook_joint_density(fc, (VectorXd(2) << a, b).finished()), expect, 1e-12);
    }
  }
}

TEST(Brook, NoCouplingFactorizes) {
  RngHandle rng(51);
  FullConditionals fc;
  fc.N = 3;
  for (int i = 0; i < 3; ++i) fc.Gamma.push_back(random_spd(3, rng));
  VectorXd y(9);
  for (Eigen::Index k = 0; k < 9; ++k) y(k) = rng.standard_normal();
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) {
    const VectorXd yi = y.segment(3 * i, 3);
    expect += -0.5 * yi.dot(fc.Gamma[static_cast<std::size_t>(i)].inverse() * yi);
  }
  EXPECT_NEAR(brook_joint_density(fc, y), expect, 1e-12);
}

TEST(Brook, TelescopingEqualsQuadraticForm) {
  RngHandle rng(52);
  for (int sys = 0; sys < 5; ++sys) {
    const MatrixXd Q = random_spd(6, rng, 1.0);
    const auto fc = full_conditionals_from_Q(Q, 3);
    for (int rep = 0; rep < 100; ++rep) {
      VectorXd y(6);
      for (Eigen::Index k = 0; k < 6; ++k) y(k) = 2.0 * rng.standard_normal();
      EXPECT_NEAR(brook_joint_density(fc, y), -0.5 * quad(Q, y), 1e-9);
    }
  }
}

TEST(Brook, AsymmetricSystemRejected) {
  FullConditionals fc;
  fc.N = 1;
  fc.Gamma = {MatrixXd::Ones(1, 1), MatrixXd::Constant(1, 1, 2.0)};
  fc.A[{0, 1}] = MatrixXd::Constant(1, 1, 0.3);
  fc.A[{1, 0}] = MatrixXd::Constant(1, 1, 0.3);  // Gamma_1^{-1} A_10 = 0.15 != 0.3
  try {
    brook_joint_density(fc, VectorXd::Ones(2));
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("A_10"), std::string::npos) << e.what();
  }
}

TEST(Brook, WrongLengthRejected) {
  FullConditionals fc;
  fc.N = 2;
  fc.Gamma = {MatrixXd::Identity(2, 2)};
  EXPECT_THROW(brook_joint_density(fc, VectorXd::Ones(3)), std::invalid_argument);
}

// -------------------------------------------------------------- assembly --

TEST(Assembly, RoundTripThroughConditionals) {
  RngHandle rng(53);
  const VariableGraph vg(path_graph(3), 0.6);
  std::vector<MatrixXd> R;
  for (int i = 0; i < 3; ++i) R.push_back(random_nonsingular(4, rng));
  const auto pa = assemble_Q(vg, R);
  const MatrixXd Q = pa.dense();
  const auto fc = pa.conditionals();
  EXPECT_LE(max_rel_err(precision_from_conditionals(fc), Q), 1e-9);
  const auto back = full_conditionals_from_Q(Q, 3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_LE(max_rel_err(back.Gamma[static_cast<std::size_t>(i)], fc.Gamma[static_cast<std::size_t>(i)]), 1e-9);
    for (Eigen::Index j = 0; j < 3; ++j)
      if (i != j) EXPECT_LE((back.A_block(i, j) - fc.A_block(i, j)).cwiseAbs().maxCoeff(), 1e-9);
  }
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd y(12);
    for (Eigen::Index k = 0; k < 12; ++k) y(k) = rng.standard_normal();
    EXPECT_NEAR(brook_joint_density(fc, y), -0.5 * quad(Q, y), 1e-9);
  }
}

TEST(Assembly, NonEdgeBlocksAreExactlyZero) {
  RngHandle rng(54);
  const VariableGraph vg(path_graph(3), 0.4);  // no edge 0-2
  std::vector<MatrixXd> R;
  for (int i = 0; i < 3; ++i) R.push_back(random_nonsingular(3, rng));
  const auto pa = assemble_Q(vg, R);
  EXPECT_TRUE((pa.block(0, 2).array() == 0.0).all());
  EXPECT_TRUE((pa.dense().block(0, 6, 3, 3).array() == 0.0).all());
  EXPECT_FALSE((pa.block(0, 1).array() == 0.0).all());
  EXPECT_EQ(pa.conditionals().A.count({0, 2}), 0u);
}

TEST(Assembly, LogDetMatchesDense) {
  RngHandle rng(55);
  for (int rep = 0; rep < 10; ++rep) {
    const VariableGraph vg(random_graph(3, rng), 0.3);
    std::vector<MatrixXd> R;
    for (int i = 0; i < 3; ++i) R.push_back(random_nonsingular(4, rng));
    const auto pa = assemble_Q(vg, R);
    const Eigen::LLT<MatrixXd> llt(pa.dense());
    ASSERT_EQ(llt.info(), Eigen::Success);
    const double dense = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    EXPECT_LE(std::abs(pa.log_det() - dense), 1e-8 * std::max(1.0, std::abs(dense)));
  }
}

TEST(Assembly, SharedFactorIsSeparable) {
  RngHandle rng(56);
  const VariableGraph vg(random_graph(4, rng), -0.5);
  const MatrixXd R = random_nonsingular(3, rng);
  const auto pa = assemble_Q(vg, std::vector<MatrixXd>(4, R));
  const MatrixXd RtR = R.transpose() * R;
  MatrixXd kron(12, 12);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) kron.block(3 * i, 3 * j, 3, 3) = vg.Lambda()(i, j) * RtR;
  EXPECT_LE(max_rel_err(pa.dense(), kron), 1e-13);
}

TEST(Assembly, Preconditions) {
  const VariableGraph vg(path_graph(2), 0.2);
  MatrixXd singular = MatrixXd::Ones(2, 2);
  EXPECT_THROW(assemble_Q(vg, {MatrixXd::Identity(2, 2), singular}), std::domain_error);
  EXPECT_THROW(assemble_Q(vg, {MatrixXd::Identity(2, 2)}), std::invalid_argument);
  EXPECT_THROW(assemble_Q(vg, {MatrixXd::Identity(2, 2), MatrixXd::Identity(3, 3)}), std::invalid_argument);
}

TEST(VariableGraphs, RhoRangeAndIsolatedVertices) {
  const MatrixXd W = path_graph(3);
  const VariableGraph ok(W, 0.5);
  const auto [lo, hi] = ok.admissible_rho();
  EXPECT_NEAR(hi, 1.0, 1e-12);
  EXPECT_NEAR(lo, -1.0, 1e-12);
  EXPECT_THROW(VariableGraph(W, 1.0), std::invalid_argument);
  EXPECT_THROW(VariableGraph(W, -1.0 - 1e-9), std::invalid_argument);
  EXPECT_THROW(VariableGraph(adjacency_from_edges(3, {{0, 1, 1.0}}), 0.1), std::invalid_argument);
  EXPECT_THROW(adjacency_from_edges(3, {{0, 0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(adjacency_from_edges(3, {{0, 3, 1.0}}), std::out_of_range);
}

// -------------------------------------------------------------------- car --

TEST(Car, ZeroRhoGivesDegrees) {
  RngHandle rng(57);
  const SpatialGraph sg(random_graph(7, rng));
  const MatrixXd D = sg.degrees().asDiagonal();
  for (auto form : {CarFactorForm::kCachedEigen, CarFactorForm::kSymmetricRoot}) {
    const MatrixXd R = car_factor(sg, 0.0, form);
    EXPECT_LE(max_rel_err(R.transpose() * R, D), 1e-12);
  }
}

TEST(Car, TwoNodePathHalf) {
  const SpatialGraph sg(path_graph(2));
  const MatrixXd expect = (MatrixXd(2, 2) << 1.0, -0.5, -0.5, 1.0).finished();
  for (auto form : {CarFactorForm::kCachedEigen, CarFactorForm::kSymmetricRoot}) {
    const MatrixXd R = car_factor(sg, 0.5, form);
    EXPECT_LE((R.transpose() * R - expect).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_LE((car_factor(sg, 0.5, CarFactorForm::kSymmetricRoot) -
             car_factor(sg, 0.5, CarFactorForm::kSymmetricRoot).transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Car, AdmissibilityBoundary) {
  RngHandle rng(58);
  const SpatialGraph sg(random_graph(6, rng));
  const auto [lo, hi] = sg.admissible_rho();
  EXPECT_THROW(car_factor(sg, hi + 1e-12), std::invalid_argument);
  EXPECT_THROW(car_factor(sg, lo - 1e-12), std::invalid_argument);
  EXPECT_NO_THROW(car_factor(sg, 0.999 * hi));
}

TEST(Car, FactorReproducesPrecisionOnRandomGraphs) {
  RngHandle rng(59);
  for (int rep = 0; rep < 20; ++rep) {
    const SpatialGraph sg(random_graph(3 + static_cast<long>(rng.uniform_index(20)), rng));
    const MatrixXd& U = sg.eigenvectors();
    EXPECT_LE((U.transpose() * U - MatrixXd::Identity(sg.N(), sg.N())).cwiseAbs().maxCoeff(), 1e-10);
    const auto [lo, hi] = sg.admissible_rho();
    const double rho = lo + (hi - lo) * (0.05 + 0.9 * rng.uniform());
    for (auto form : {CarFactorForm::kCachedEigen, CarFactorForm::kSymmetricRoot}) {
      const MatrixXd R = car_factor(sg, rho, form);
      EXPECT_LE(max_rel_err(R.transpose() * R, sg.precision(rho)), 1e-8);
    }
  }
}

TEST(Car, PermutedVertexOrderGivesSimilarQ) {
  RngHandle rng(60);
  const long N = 8;
  const MatrixXd W = random_graph(N, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> P(N);
  P.setIdentity();
  for (long k = N; k > 1; --k) std::swap(P.indices()(k - 1), P.indices()(static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(k)))));
  const MatrixXd Wp = P * W * P.transpose();
  const SpatialGraph a(W), b(Wp);
  const VariableGraph vg(path_graph(2), 0.5);
  const auto qa = assemble_Q(vg, {car_factor(a, 0.3), car_factor(a, -0.6)}).dense();
  const auto qb = assemble_Q(vg, {car_factor(b, 0.3), car_factor(b, -0.6)}).dense();
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd y(2 * N);
    for (Eigen::Index k = 0; k < y.size(); ++k) y(k) = rng.standard_normal();
    VectorXd yp(2 * N);
    yp.head(N) = P * y.head(N);
    yp.tail(N) = P * y.tail(N);
    EXPECT_NEAR(quad(qa, y), quad(qb, yp), 1e-9 * std::abs(quad(qa, y)));
  }
}

// --------------------------------------------------------------- sampling --

TEST(GraphSampling, IdentityPrecisionIsStandardNormal) {
  const PrecisionAssembly pa(MatrixXd::Identity(2, 2), {MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3)});
  RngHandle rng(61);
  std::vector<double> v;
  for (int l = 0; l < 20000; ++l) {
    const VectorXd y = sample_graph_population(pa, rng);
    v.insert(v.end(), y.data(), y.data() + y.size());
  }
  EXPECT_GT(fpbayes::testing::ks_pvalue(v, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }), 1e-3);
}

TEST(GraphSampling, EmpiricalPrecisionMatchesQ) {
  RngHandle rng(62);
  const VariableGraph vg(path_graph(2), 0.6);
  const SpatialGraph sg(path_graph(3));
  const auto pa = assemble_Q(vg, {car_factor(sg, 0.5), car_factor(sg, -0.4)});
  const long L = 100000;
  MatrixXd Y(L, 6);
  for (long l = 0; l < L; ++l) Y.row(l) = sample_graph_population(pa, rng).transpose();
  const MatrixXd C = Y.transpose() * Y / static_cast<double>(L);
  const MatrixXd Q = pa.dense();
  EXPECT_LT((C.inverse() - Q).norm() / Q.norm(), 0.05);
}

TEST(GraphSampling, NonEdgePartialCorrelationVanishes) {
  RngHandle rng(63);
  const VariableGraph vg(path_graph(3), 0.7);  // variables 0 and 2 are not adjacent
  const SpatialGraph sg(path_graph(2));
  const auto pa = assemble_Q(vg, {car_factor(sg, 0.3), car_factor(sg, 0.5), car_factor(sg, -0.2)});
  const long L = 100000;
  MatrixXd Y(L, 6);
  for (long l = 0; l < L; ++l) Y.row(l) = sample_graph_population(pa, rng).transpose();
  const MatrixXd P = (Y.transpose() * Y / static_cast<double>(L)).inverse();
  for (int a = 0; a < 2; ++a)
    for (int b = 4; b < 6; ++b) {
      const double pc = -P(a, b) / std::sqrt(P(a, a) * P(b, b));
      EXPECT_LT(std::abs(pc), 3.0 / std::sqrt(static_cast<double>(L))) << a << "," << b;
    }
  // An edge does show up.
  EXPECT_GT(std::abs(P(0, 2) / std::sqrt(P(0, 0) * P(2, 2))), 20.0 / std::sqrt(static_cast<double>(L)));
}
