#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpbayes {

/// Malformed or unreadable input. `line` is 1-based (the header is line 1),
/// 0 when the problem is not tied to a line.
class ingest_error : public std::runtime_error {
 public:
  ingest_error(const std::string& file, std::size_t line, const std::string& msg)
      : std::runtime_error(file + (line ? ":" + std::to_string(line) + " (row " + std::to_string(line - 1) + ")" : "") +
                           ": " + msg),
        line_{line} {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// One row of the population/sample schema
/// `unit_id, value, x, y, cluster_id, u_flag[, z_flag, inclusion_prob][, cov_*]`.
struct UnitRecord {
  long unit_id = 0;
  std::optional<double> value;
  std::optional<double> x;
  std::optional<double> y;
  std::optional<long> cluster_id;
  bool u_flag = true;
  std::optional<bool> z_flag;
  std::optional<double> inclusion_prob;
  std::vector<double> covariates;
};

struct UnitTable {
  std::vector<std::string> columns;
  std::vector<std::string> covariate_names;  // cov_* columns, in file order
  std::vector<UnitRecord> rows;

  bool has(const std::string& c) const {
    for (const auto& s : columns)
      if (s == c) return true;
    return false;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "na" || s == "NaN"; }

inline double parse_double(const std::string& s, const std::string& file, std::size_t line, const std::string& col) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (!s.empty() && *b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || ptr != e || !std::isfinite(v))
    throw ingest_error(file, line, "column '" + col + "': '" + s + "' is not a finite number");
  return v;
}

inline long parse_long(const std::string& s, const std::string& file, std::size_t line, const std::string& col) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ingest_error(file, line, "column '" + col + "': '" + s + "' is not an integer");
  return v;
}

inline bool parse_flag(const std::string& s, const std::string& file, std::size_t line, const std::string& col) {
  if (s == "1" || s == "true" || s == "TRUE") return true;
  if (s == "0" || s == "false" || s == "FALSE") return false;
  throw ingest_error(file, line, "column '" + col + "': '" + s + "' is not a 0/1 flag");
}

}  // namespace detail

inline UnitTable parse_unit_csv(std::istream& in, const std::string& name = "<csv>") {
  static const std::vector<std::string> known{"unit_id", "value",  "x",      "y",
                                              "cluster_id", "u_flag", "z_flag", "inclusion_prob"};
  UnitTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::trim(line).empty()) break;
  }
  if (lineno == 0 || detail::trim(line).empty()) throw ingest_error(name, 0, "empty file, header expected");
  t.columns = detail::split_csv(line);
  std::map<std::string, std::size_t> pos;
  for (std::size_t k = 0; k < t.columns.size(); ++k) {
    const auto& c = t.columns[k];
    const bool is_cov = c.rfind("cov_", 0) == 0 && c.size() > 4;
    if (!is_cov && std::find(known.begin(), known.end(), c) == known.end())
      throw ingest_error(name, lineno, "unknown column '" + c + "'");
    if (pos.count(c)) throw ingest_error(name, lineno, "duplicate column '" + c + "'");
    pos[c] = k;
    if (is_cov) t.covariate_names.push_back(c);
  }
  if (!pos.count("unit_id")) throw ingest_error(name, lineno, "missing required column 'unit_id'");
  if (!pos.count("value")) throw ingest_error(name, lineno, "missing required column 'value'");
  if (pos.count("x") != pos.count("y")) throw ingest_error(name, lineno, "columns 'x' and 'y' must appear together");

  std::map<long, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != t.columns.size())
      throw ingest_error(name, lineno,
                         "expected " + std::to_string(t.columns.size()) + " fields, found " + std::to_string(f.size()));
    UnitRecord r;
    auto cell = [&](const char* c) -> const std::string* {
      const auto it = pos.find(c);
      return it == pos.end() ? nullptr : &f[it->second];
    };
    if (detail::is_missing(*cell("unit_id"))) throw ingest_error(name, lineno, "unit_id is missing");
    r.unit_id = detail::parse_long(*cell("unit_id"), name, lineno, "unit_id");
    if (seen.count(r.unit_id))
      throw ingest_error(name, lineno, "duplicate unit_id " + std::to_string(r.unit_id));
    seen[r.unit_id] = lineno;
    if (!detail::is_missing(*cell("value"))) r.value = detail::parse_double(*cell("value"), name, lineno, "value");
    if (const auto* s = cell("x"); s && !detail::is_missing(*s)) r.x = detail::parse_double(*s, name, lineno, "x");
    if (const auto* s = cell("y"); s && !detail::is_missing(*s)) r.y = detail::parse_double(*s, name, lineno, "y");
    if (r.x.has_value() != r.y.has_value()) throw ingest_error(name, lineno, "x and y must both be present or both missing");
    if (const auto* s = cell("cluster_id"); s && !detail::is_missing(*s))
      r.cluster_id = detail::parse_long(*s, name, lineno, "cluster_id");
    if (const auto* s = cell("u_flag"); s && !detail::is_missing(*s))
      r.u_flag = detail::parse_flag(*s, name, lineno, "u_flag");
    if (const auto* s = cell("z_flag"); s && !detail::is_missing(*s))
      r.z_flag = detail::parse_flag(*s, name, lineno, "z_flag");
    if (const auto* s = cell("inclusion_prob"); s && !detail::is_missing(*s)) {
      r.inclusion_prob = detail::parse_double(*s, name, lineno, "inclusion_prob");
      if (!(*r.inclusion_prob >= 0.0 && *r.inclusion_prob <= 1.0))
        throw ingest_error(name, lineno, "inclusion_prob must lie in [0, 1]");
    }
    for (const auto& c : t.covariate_names) {
      const auto& s = f[pos[c]];
      if (detail::is_missing(s)) throw ingest_error(name, lineno, "covariate '" + c + "' is missing");
      r.covariates.push_back(detail::parse_double(s, name, lineno, c));
    }
    if (r.z_flag.value_or(false) && !r.value) throw ingest_error(name, lineno, "sampled unit has no value");
    if (!r.u_flag && r.z_flag.value_or(false)) throw ingest_error(name, lineno, "structural-zero unit marked as sampled");
    t.rows.push_back(std::move(r));
  }
  if (t.rows.empty()) throw ingest_error(name, 0, "no data rows");
  return t;
}

inline UnitTable read_unit_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ingest_error(path, 0, "cannot open file");
  return parse_unit_csv(in, path);
}

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

}  // namespace detail

inline void write_unit_csv(std::ostream& out, const UnitTable& t) {
  for (std::size_t k = 0; k < t.columns.size(); ++k) out << (k ? "," : "") << t.columns[k];
  out << '\n';
  for (const auto& r : t.rows) {
    std::size_t cov = 0;
    for (std::size_t k = 0; k < t.columns.size(); ++k) {
      const auto& c = t.columns[k];
      if (k) out << ',';
      if (c == "unit_id") out << r.unit_id;
      else if (c == "value") { if (r.value) out << detail::format_double(*r.value); }
      else if (c == "x") { if (r.x) out << detail::format_double(*r.x); }
      else if (c == "y") { if (r.y) out << detail::format_double(*r.y); }
      else if (c == "cluster_id") { if (r.cluster_id) out << *r.cluster_id; }
      else if (c == "u_flag") out << (r.u_flag ? 1 : 0);
      else if (c == "z_flag") { if (r.z_flag) out << (*r.z_flag ? 1 : 0); }
      else if (c == "inclusion_prob") { if (r.inclusion_prob) out << detail::format_double(*r.inclusion_prob); }
      else out << detail::format_double(r.covariates.at(cov++));
    }
    out << '\n';
  }
}

inline void write_unit_csv(const std::string& path, const UnitTable& t) {
  std::ofstream out(path);
  if (!out) throw ingest_error(path, 0, "cannot open file for writing");
  write_unit_csv(out, t);
}

/// Long-format posterior predictive draws: `unit, draw, value, logdensity`.
struct DrawRecord {
  long unit = 0;
  long draw = 0;
  double value = 0.0;
  double logdensity = 0.0;
};

inline std::vector<DrawRecord> parse_draws_csv(std::istream& in, const std::string& name = "<draws>") {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ingest_error(name, 0, "empty file, header expected");
  ++lineno;
  const auto header = detail::split_csv(line);
  if (header != std::vector<std::string>{"unit", "draw", "value", "logdensity"})
    throw ingest_error(name, lineno, "header must be 'unit,draw,value,logdensity'");
  std::vector<DrawRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 4) throw ingest_error(name, lineno, "expected 4 fields, found " + std::to_string(f.size()));
    out.push_back({detail::parse_long(f[0], name, lineno, "unit"), detail::parse_long(f[1], name, lineno, "draw"),
                   detail::parse_double(f[2], name, lineno, "value"),
                   detail::parse_double(f[3], name, lineno, "logdensity")});
  }
  if (out.empty()) throw ingest_error(name, 0, "no draws");
  return out;
}

inline std::vector<DrawRecord> read_draws_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ingest_error(path, 0, "cannot open file");
  return parse_draws_csv(in, path);
}

inline void write_draws_csv(std::ostream& out, const std::vector<DrawRecord>& d) {
  out << "unit,draw,value,logdensity\n";
  for (const auto& r : d)
    out << r.unit << ',' << r.draw << ',' << detail::format_double(r.value) << ','
        << detail::format_double(r.logdensity) << '\n';
}

}  // namespace fpbayes
