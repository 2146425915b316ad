#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fpbayes {

/// Draws stored row-per-draw, one named column per quantity.
class PosteriorDraws {
 public:
  PosteriorDraws() = default;
  PosteriorDraws(std::vector<std::string> names, Eigen::Index ndraws)
      : names_{std::move(names)},
        values_(Eigen::MatrixXd::Zero(ndraws, static_cast<Eigen::Index>(names_.size()))) {}

  Eigen::Index ndraws() const noexcept { return values_.rows(); }
  Eigen::Index nquantities() const noexcept { return values_.cols(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  Eigen::MatrixXd& values() noexcept { return values_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }

  double& operator()(Eigen::Index draw, Eigen::Index col) { return values_(draw, col); }
  double operator()(Eigen::Index draw, Eigen::Index col) const { return values_(draw, col); }

  Eigen::Index index_of(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw std::out_of_range("PosteriorDraws: no column named " + name);
    return static_cast<Eigen::Index>(it - names_.begin());
  }

  bool has(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
  }

  Eigen::VectorXd column(const std::string& name) const { return values_.col(index_of(name)); }

 private:
  std::vector<std::string> names_;
  Eigen::MatrixXd values_;
};

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7, the R default).
inline double quantile_type7(std::vector<double> x, double p) {
  if (x.empty()) throw std::invalid_argument("quantile_type7: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_type7: p outside [0, 1]");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

struct IntervalSummary {
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
};

/// Mean, sd (L - 1 divisor) and equal-tailed credible interval.
inline IntervalSummary summarize(std::span<const double> draws, double level = 0.95) {
  if (draws.empty()) throw std::invalid_argument("summarize: no draws");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("summarize: level outside (0, 1)");
  IntervalSummary s;
  s.level = level;
  double sum = 0.0;
  for (double d : draws) sum += d;
  s.mean = sum / static_cast<double>(draws.size());
  double ss = 0.0;
  for (double d : draws) ss += (d - s.mean) * (d - s.mean);
  s.sd = draws.size() > 1 ? std::sqrt(ss / static_cast<double>(draws.size() - 1)) : 0.0;
  std::vector<double> v(draws.begin(), draws.end());
  s.lower = quantile_type7(v, 0.5 * (1.0 - level));
  s.upper = quantile_type7(std::move(v), 1.0 - 0.5 * (1.0 - level));
  return s;
}

inline IntervalSummary summarize(const Eigen::VectorXd& draws, double level = 0.95) {
  return summarize(std::span<const double>(draws.data(), static_cast<std::size_t>(draws.size())),
                   level);
}

}  // namespace fpbayes
