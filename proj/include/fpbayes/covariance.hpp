#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fpbayes/stat_kernels.hpp"

namespace fpbayes {

/// Planar coordinates; distances are Euclidean. Projecting geodetic
/// coordinates is the caller's job.
struct Location {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Location& a, const Location& b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class CovarianceFamily { kExponential, kMatern };

/// Isotropic covariance with a nugget at zero distance:
/// C(0) = nugget + partial_sill, C(d) = partial_sill * rho(d; phi, eta) for d > 0.
struct CovarianceSpec {
  CovarianceFamily family = CovarianceFamily::kExponential;
  double nugget = 0.0;        // micro-scale / measurement variance
  double partial_sill = 1.0;  // spatial variance
  double phi = 1.0;           // decay
  double eta = 0.5;           // Matern smoothness

  void validate() const {
    if (!(nugget >= 0.0) || !(partial_sill >= 0.0))
      throw std::invalid_argument("CovarianceSpec: variances must be nonnegative");
    if (!(phi > 0.0) || !std::isfinite(phi)) throw std::invalid_argument("CovarianceSpec: phi must be > 0");
    if (family == CovarianceFamily::kMatern && (!(eta > 0.0) || !std::isfinite(eta)))
      throw std::invalid_argument("CovarianceSpec: Matern smoothness must be > 0");
  }
};

/// Correlation at distance d > 0 (no nugget).
inline double spatial_correlation(const CovarianceSpec& spec, double d) {
  if (spec.family == CovarianceFamily::kExponential) return std::exp(-spec.phi * d);
  const double x = std::sqrt(2.0 * spec.eta) * d * spec.phi;
  if (x > 700.0) return 0.0;
  const double log_val = (1.0 - spec.eta) * std::log(2.0) - std::lgamma(spec.eta) +
                         spec.eta * std::log(x) + std::log(std::cyl_bessel_k(spec.eta, x));
  return std::exp(log_val);
}

inline double covariance_value(const CovarianceSpec& spec, double d) {
  spec.validate();
  if (!(d >= 0.0)) throw std::invalid_argument("covariance_value: distance must be >= 0");
  if (d == 0.0) return spec.nugget + spec.partial_sill;
  return spec.partial_sill * spatial_correlation(spec, d);
}

/// Cross-covariance between two location sets; coincident locations pick up
/// the nugget, so a location paired with itself gives C(0).
inline MatrixXd covariance_matrix(const CovarianceSpec& spec, std::span<const Location> a,
                                  std::span<const Location> b) {
  spec.validate();
  MatrixXd K(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = distance(a[i], b[j]);
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          d == 0.0 ? spec.nugget + spec.partial_sill : spec.partial_sill * spatial_correlation(spec, d);
    }
  return K;
}

inline MatrixXd covariance_matrix(const CovarianceSpec& spec, std::span<const Location> locs) {
  MatrixXd K = covariance_matrix(spec, locs, locs);
  return 0.5 * (K + K.transpose());
}

}  // namespace fpbayes
