#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fpbayes/rng.hpp"
#include "fpbayes/stat_kernels.hpp"

namespace fpbayes {

struct Edge {
  long i = 0;
  long j = 0;
  double weight = 1.0;
};

/// Symmetric adjacency from a 0-based undirected edge list.
inline MatrixXd adjacency_from_edges(long n, const std::vector<Edge>& edges) {
  if (n <= 0) throw std::invalid_argument("adjacency_from_edges: vertex count must be positive");
  MatrixXd W = MatrixXd::Zero(n, n);
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
      throw std::out_of_range("adjacency_from_edges: vertex id outside [0, n)");
    if (e.i == e.j) throw std::invalid_argument("adjacency_from_edges: self loops are not allowed");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw std::invalid_argument("adjacency_from_edges: edge weights must be positive");
    W(e.i, e.j) = W(e.j, e.i) = e.weight;
  }
  return W;
}

namespace detail {

inline void check_adjacency(const MatrixXd& W, const char* what) {
  if (W.rows() != W.cols() || W.rows() == 0) throw std::invalid_argument(std::string(what) + ": W must be square");
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    if (W(i, i) != 0.0) throw std::invalid_argument(std::string(what) + ": W must have a zero diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (W(i, j) != W(j, i)) throw std::invalid_argument(std::string(what) + ": W must be symmetric");
      if (W(i, j) < 0.0) throw std::invalid_argument(std::string(what) + ": W must be nonnegative");
    }
  }
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    if (!(W.row(i).sum() > 0.0))
      throw std::invalid_argument(std::string(what) + ": every vertex needs at least one neighbour");
}

/// Eigenpairs of D^{-1/2} W D^{-1/2}.
inline Eigen::SelfAdjointEigenSolver<MatrixXd> normalized_eigen(const MatrixXd& W, const VectorXd& d) {
  const VectorXd s = d.array().rsqrt();
  MatrixXd Wn = s.asDiagonal() * W * s.asDiagonal();
  Wn = 0.5 * (Wn + Wn.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Wn);
  if (es.info() != Eigen::Success) throw std::runtime_error("graph: eigendecomposition failed");
  return es;
}

}  // namespace detail

/// Inter-variable graph with Laplacian-type Lambda = D - rho W.
class VariableGraph {
 public:
  VariableGraph(MatrixXd W, double rho) : W_{std::move(W)}, rho_{rho} {
    detail::check_adjacency(W_, "VariableGraph");
    d_ = W_.rowwise().sum();
    const auto es = detail::normalized_eigen(W_, d_);
    zeta_min_ = es.eigenvalues().minCoeff();
    zeta_max_ = es.eigenvalues().maxCoeff();
    if (!(rho_ > 1.0 / zeta_min_ && rho_ < 1.0 / zeta_max_))
      throw std::invalid_argument("VariableGraph: rho must lie in (1/zeta_min, 1/zeta_max) = (" +
                                  std::to_string(1.0 / zeta_min_) + ", " + std::to_string(1.0 / zeta_max_) + ")");
    Lambda_ = -rho_ * W_;
    Lambda_.diagonal() = d_;
    CholFactor check(Lambda_);
    if (check.jitter() > 0.0) throw std::invalid_argument("VariableGraph: Lambda is not positive definite");
  }

  Eigen::Index q() const noexcept { return W_.rows(); }
  double rho() const noexcept { return rho_; }
  const MatrixXd& W() const noexcept { return W_; }
  const MatrixXd& Lambda() const noexcept { return Lambda_; }
  std::pair<double, double> admissible_rho() const { return {1.0 / zeta_min_, 1.0 / zeta_max_}; }

 private:
  MatrixXd W_;
  double rho_;
  VectorXd d_;
  double zeta_min_ = 0.0;
  double zeta_max_ = 0.0;
  MatrixXd Lambda_;
};

enum class CarFactorForm {
  kCachedEigen,    // R = (sum_j sqrt(1 - zeta_j rho) u_j u_j^T) D^{1/2}, from the cached eigenpairs
  kSymmetricRoot   // R = (D - rho W)^{1/2}, recomputed per rho
};

/// Spatial graph over the N population units with the eigenpairs of
/// D^{-1/2} W D^{-1/2} computed once at construction.
class SpatialGraph {
 public:
  explicit SpatialGraph(MatrixXd W) : W_{std::move(W)} {
    detail::check_adjacency(W_, "SpatialGraph");
    d_ = W_.rowwise().sum();
    const auto es = detail::normalized_eigen(W_, d_);
    zeta_ = es.eigenvalues();
    U_ = es.eigenvectors();
  }

  Eigen::Index N() const noexcept { return W_.rows(); }
  const MatrixXd& W() const noexcept { return W_; }
  const VectorXd& degrees() const noexcept { return d_; }
  const VectorXd& zeta() const noexcept { return zeta_; }
  const MatrixXd& eigenvectors() const noexcept { return U_; }

  /// Open interval of rho keeping 1 - zeta_j rho > 0 for all j.
  std::pair<double, double> admissible_rho() const { return {1.0 / zeta_.minCoeff(), 1.0 / zeta_.maxCoeff()}; }

  bool admissible(double rho) const {
    for (Eigen::Index j = 0; j < zeta_.size(); ++j)
      if (!(1.0 - zeta_(j) * rho > 0.0)) return false;
    return std::isfinite(rho);
  }

  MatrixXd precision(double rho) const {
    MatrixXd P = -rho * W_;
    P.diagonal() = d_;
    return P;
  }

 private:
  MatrixXd W_;
  VectorXd d_;
  VectorXd zeta_;
  MatrixXd U_;
};

/// Factor R with R^T R = D - rho W.
inline MatrixXd car_factor(const SpatialGraph& sg, double rho, CarFactorForm form = CarFactorForm::kCachedEigen) {
  if (!sg.admissible(rho)) {
    const auto [lo, hi] = sg.admissible_rho();
    throw std::invalid_argument("car_factor: rho = " + std::to_string(rho) + " outside the admissible interval (" +
                                std::to_string(lo) + ", " + std::to_string(hi) + ")");
  }
  if (form == CarFactorForm::kSymmetricRoot) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sg.precision(rho));
    if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0))
      throw std::domain_error("car_factor: D - rho W is not positive definite");
    return es.operatorSqrt();
  }
  const VectorXd s = (1.0 - sg.zeta().array() * rho).sqrt();
  const MatrixXd& U = sg.eigenvectors();
  return U * s.asDiagonal() * U.transpose() * sg.degrees().array().sqrt().matrix().asDiagonal();
}

/// Full conditionals Y_i | Y_-i ~ N(sum_j A_ij Y_j, Gamma_i), i = 1..q, each
/// Y_i of length N. Missing A blocks are zero.
struct FullConditionals {
  Eigen::Index N = 0;
  std::vector<MatrixXd> Gamma;
  std::map<std::pair<Eigen::Index, Eigen::Index>, MatrixXd> A;

  Eigen::Index q() const noexcept { return static_cast<Eigen::Index>(Gamma.size()); }

  MatrixXd A_block(Eigen::Index i, Eigen::Index j) const {
    const auto it = A.find({i, j});
    return it == A.end() ? MatrixXd::Zero(N, N) : it->second;
  }
};

/// Q = M^{-1}(I - A): Q_ii = Gamma_i^{-1}, Q_ij = -Gamma_i^{-1} A_ij. Throws
/// with the offending block when the result is not symmetric.
inline MatrixXd precision_from_conditionals(const FullConditionals& fc, double tol = 1e-9) {
  const Eigen::Index q = fc.q(), N = fc.N;
  if (q == 0 || N <= 0) throw std::invalid_argument("full conditionals: empty system");
  for (const auto& [key, blk] : fc.A) {
    if (key.first == key.second) throw std::invalid_argument("full conditionals: A_ii must be zero");
    if (key.first < 0 || key.second < 0 || key.first >= q || key.second >= q || blk.rows() != N || blk.cols() != N)
      throw std::invalid_argument("full conditionals: A block out of range or mis-sized");
  }
  std::vector<MatrixXd> Ginv;
  for (const auto& G : fc.Gamma) {
    if (G.rows() != N || G.cols() != N) throw std::invalid_argument("full conditionals: Gamma_i must be N x N");
    Ginv.push_back(CholFactor{SymMatrix{G}}.solve(MatrixXd::Identity(N, N)));
  }
  MatrixXd Q = MatrixXd::Zero(N * q, N * q);
  for (Eigen::Index i = 0; i < q; ++i) {
    Q.block(i * N, i * N, N, N) = Ginv[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < q; ++j)
      if (j != i && fc.A.count({i, j}))
        Q.block(i * N, j * N, N, N) = -Ginv[static_cast<std::size_t>(i)] * fc.A.at({i, j});
  }
  const double scale = Q.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const double asym = (Q.block(i * N, j * N, N, N) - Q.block(j * N, i * N, N, N).transpose()).cwiseAbs().maxCoeff();
      if (asym > tol * scale)
        throw std::invalid_argument("full conditionals: Gamma_" + std::to_string(i) + "^{-1} A_" + std::to_string(i) +
                                    std::to_string(j) + " differs from (Gamma_" + std::to_string(j) + "^{-1} A_" +
                                    std::to_string(j) + std::to_string(i) + ")^T by " + std::to_string(asym));
    }
  Q = 0.5 * (Q + Q.transpose());
  CholFactor pd(Q);
  if (pd.jitter() > 0.0) throw std::domain_error("full conditionals: induced Q is not positive definite");
  return Q;
}

/// log p(y) - log p(0) by Brook's lemma along the path 0 -> y, one variable
/// at a time: sum_i log p(y_i | y_<i, 0_>i) - log p(0_i | y_<i, 0_>i).
inline double brook_joint_density(const FullConditionals& fc, const VectorXd& y) {
  precision_from_conditionals(fc);
  const Eigen::Index q = fc.q(), N = fc.N;
  if (y.size() != q * N) throw std::invalid_argument("brook_joint_density: y has the wrong length");
  double total = 0.0;
  for (Eigen::Index i = 0; i < q; ++i) {
    VectorXd mean = VectorXd::Zero(N);
    for (Eigen::Index j = 0; j < i; ++j)
      if (fc.A.count({i, j})) mean += fc.A.at({i, j}) * y.segment(j * N, N);
    const CholFactor G(SymMatrix{fc.Gamma[static_cast<std::size_t>(i)]});
    const VectorXd at_y = G.solve_lower(VectorXd(y.segment(i * N, N) - mean));
    const VectorXd at_0 = G.solve_lower(VectorXd(-mean));
    total += -0.5 * at_y.squaredNorm() + 0.5 * at_0.squaredNorm();
  }
  return total;
}

/// Inverse map: Gamma_i = Q_ii^{-1}, A_ij = -Q_ii^{-1} Q_ij.
inline FullConditionals full_conditionals_from_Q(const MatrixXd& Q, Eigen::Index q) {
  if (q <= 0 || Q.rows() % q != 0 || Q.rows() != Q.cols())
    throw std::invalid_argument("full_conditionals_from_Q: Q is not Nq x Nq");
  FullConditionals fc;
  fc.N = Q.rows() / q;
  const Eigen::Index N = fc.N;
  for (Eigen::Index i = 0; i < q; ++i) {
    const MatrixXd Qii = Q.block(i * N, i * N, N, N);
    const CholFactor f(Qii);
    MatrixXd G = f.solve(MatrixXd::Identity(N, N));
    fc.Gamma.push_back(0.5 * (G + G.transpose()));
    for (Eigen::Index j = 0; j < q; ++j) {
      if (j == i) continue;
      const auto Qij = Q.block(i * N, j * N, N, N);
      if ((Qij.array() != 0.0).any()) fc.A[{i, j}] = -f.solve(MatrixXd(Qij));
    }
  }
  return fc;
}

/// Q = R~^T (Lambda (x) I) R~, R~ = diag(R_1..R_q), held in factored form.
class PrecisionAssembly {
 public:
  PrecisionAssembly(MatrixXd Lambda, std::vector<MatrixXd> R) : Lambda_{std::move(Lambda)}, R_{std::move(R)} {
    if (R_.empty() || static_cast<Eigen::Index>(R_.size()) != Lambda_.rows())
      throw std::invalid_argument("assemble_Q: need one factor per variable");
    N_ = R_.front().rows();
    log_det_ = 0.0;
    for (std::size_t i = 0; i < R_.size(); ++i) {
      if (R_[i].rows() != N_ || R_[i].cols() != N_) throw std::invalid_argument("assemble_Q: factors must be N x N");
      const Eigen::PartialPivLU<MatrixXd> lu(R_[i]);
      const VectorXd diag = lu.matrixLU().diagonal();
      double lad = 0.0;
      for (Eigen::Index k = 0; k < diag.size(); ++k) {
        if (diag(k) == 0.0 || !std::isfinite(diag(k)))
          throw std::domain_error("assemble_Q: factor R_" + std::to_string(i) + " is singular");
        lad += std::log(std::abs(diag(k)));
      }
      const double cond_guard = diag.cwiseAbs().minCoeff() / diag.cwiseAbs().maxCoeff();
      if (cond_guard < 1e-14) throw std::domain_error("assemble_Q: factor R_" + std::to_string(i) + " is singular");
      log_det_ += 2.0 * lad;
    }
    const CholFactor L(Lambda_);
    if (L.jitter() > 0.0) throw std::domain_error("assemble_Q: Lambda is not positive definite");
    lambda_lower_ = L.lower();
    log_det_ += static_cast<double>(N_) * L.log_det();
  }

  Eigen::Index q() const noexcept { return Lambda_.rows(); }
  Eigen::Index N() const noexcept { return N_; }
  const MatrixXd& Lambda() const noexcept { return Lambda_; }
  const std::vector<MatrixXd>& factors() const noexcept { return R_; }
  double log_det() const noexcept { return log_det_; }

  /// Q_ij = lambda_ij R_i^T R_j; exactly zero when lambda_ij = 0.
  MatrixXd block(Eigen::Index i, Eigen::Index j) const {
    const double lij = Lambda_(i, j);
    if (lij == 0.0) return MatrixXd::Zero(N_, N_);
    return lij * R_[static_cast<std::size_t>(i)].transpose() * R_[static_cast<std::size_t>(j)];
  }

  MatrixXd dense() const {
    if (N_ * q() > 2000) throw std::length_error("PrecisionAssembly: dense Q limited to N q <= 2000");
    MatrixXd Q(N_ * q(), N_ * q());
    for (Eigen::Index i = 0; i < q(); ++i)
      for (Eigen::Index j = 0; j < q(); ++j) Q.block(i * N_, j * N_, N_, N_) = block(i, j);
    return Q;
  }

  /// Gamma_i^{-1} = lambda_ii R_i^T R_i, A_ij = -(lambda_ij / lambda_ii) R_i^{-1} R_j.
  FullConditionals conditionals() const {
    FullConditionals fc;
    fc.N = N_;
    for (Eigen::Index i = 0; i < q(); ++i) {
      const auto& Ri = R_[static_cast<std::size_t>(i)];
      const MatrixXd Ginv = Lambda_(i, i) * Ri.transpose() * Ri;
      MatrixXd G = CholFactor{Ginv}.solve(MatrixXd::Identity(N_, N_));
      fc.Gamma.push_back(0.5 * (G + G.transpose()));
      const Eigen::PartialPivLU<MatrixXd> lu(Ri);
      for (Eigen::Index j = 0; j < q(); ++j)
        if (j != i && Lambda_(i, j) != 0.0)
          fc.A[{i, j}] = -(Lambda_(i, j) / Lambda_(i, i)) * lu.solve(R_[static_cast<std::size_t>(j)]);
    }
    return fc;
  }

  /// Y ~ N(0, Q^{-1}): V = Z L_Lambda^{-1} has rows with covariance
  /// Lambda^{-1}; Y_i = R_i^{-1} v_i.
  VectorXd draw(RngHandle& rng) const {
    MatrixXd Z(N_, q());
    for (Eigen::Index c = 0; c < q(); ++c)
      for (Eigen::Index r = 0; r < N_; ++r) Z(r, c) = rng.standard_normal();
    const MatrixXd V = lambda_lower_.triangularView<Eigen::Lower>().solve<Eigen::OnTheRight>(Z);
    VectorXd y(N_ * q());
    for (Eigen::Index i = 0; i < q(); ++i)
      y.segment(i * N_, N_) = R_[static_cast<std::size_t>(i)].partialPivLu().solve(VectorXd(V.col(i)));
    return y;
  }

 private:
  MatrixXd Lambda_;
  std::vector<MatrixXd> R_;
  Eigen::Index N_ = 0;
  MatrixXd lambda_lower_;
  double log_det_ = 0.0;
};

inline PrecisionAssembly assemble_Q(const VariableGraph& vg, std::vector<MatrixXd> factors) {
  return PrecisionAssembly(vg.Lambda(), std::move(factors));
}

inline VectorXd sample_graph_population(const PrecisionAssembly& assembly, RngHandle& rng) {
  return assembly.draw(rng);
}

}  // namespace fpbayes
