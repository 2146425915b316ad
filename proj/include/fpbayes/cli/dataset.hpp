#pragma once

#include <map>
#include <span>
#include <optional>
#include <string>
#include <vector>

#include "fpbayes/io.hpp"
#include "fpbayes/stat_kernels.hpp"

namespace fpbayes::cli {

/// All units a fit can see: the sample file's rows plus, when a population
/// file is given, its remaining rows as unsampled units (values hidden).
struct Dataset {
  std::vector<UnitRecord> rows;
  std::vector<std::string> covariate_names;
  std::vector<bool> z;

  std::size_t size() const noexcept { return rows.size(); }

  std::vector<std::size_t> population() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].u_flag) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> sampled() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (z[i]) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> unsampled() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].u_flag && !z[i]) out.push_back(i);
    return out;
  }

  std::vector<double> sampled_values() const {
    std::vector<double> y;
    for (std::size_t i : sampled()) y.push_back(*rows[i].value);
    return y;
  }

  bool has_coords(std::span<const std::size_t> idx) const {
    for (std::size_t i : idx)
      if (!rows[i].x) return false;
    return true;
  }

  bool has_clusters(std::span<const std::size_t> idx) const {
    for (std::size_t i : idx)
      if (!rows[i].cluster_id) return false;
    return true;
  }

  /// [1, cov_*] design rows.
  MatrixXd design(std::span<const std::size_t> idx, bool intercept = true) const {
    const auto k = static_cast<Eigen::Index>(covariate_names.size());
    MatrixXd X(static_cast<Eigen::Index>(idx.size()), k + (intercept ? 1 : 0));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      Eigen::Index c = 0;
      if (intercept) X(static_cast<Eigen::Index>(r), c++) = 1.0;
      for (Eigen::Index j = 0; j < k; ++j)
        X(static_cast<Eigen::Index>(r), c++) = rows[idx[r]].covariates[static_cast<std::size_t>(j)];
    }
    return X;
  }
};

inline Dataset make_dataset(const UnitTable& sample, const UnitTable* population) {
  Dataset d;
  d.covariate_names = sample.covariate_names;
  std::map<long, std::size_t> by_id;
  for (const auto& r : sample.rows) {
    by_id[r.unit_id] = d.rows.size();
    d.rows.push_back(r);
    d.z.push_back(r.z_flag ? *r.z_flag : r.value.has_value());
  }
  if (population) {
    if (population->covariate_names != sample.covariate_names)
      throw ingest_error("population file", 0, "covariate columns differ from the sample file");
    for (const auto& r : population->rows) {
      if (by_id.count(r.unit_id)) continue;
      UnitRecord u = r;
      u.value.reset();
      u.z_flag = false;
      d.rows.push_back(u);
      d.z.push_back(false);
    }
  }
  for (std::size_t i = 0; i < d.rows.size(); ++i)
    if (d.z[i] && !d.rows[i].value)
      throw ingest_error("sample file", 0, "unit " + std::to_string(d.rows[i].unit_id) + " is sampled but has no value");
  return d;
}

}  // namespace fpbayes::cli
