#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pinnode/errors.hpp"
#include "pinnode/sweep.hpp"

namespace pinnode {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Values are either scalars or bracketed lists; a bare scalar is a list of
// one.  Returns the element strings.
inline std::vector<std::string> split_list(const std::string& value, int line,
                                           const std::string& key) {
  std::string v = trim(value);
  if (v.empty()) throw parse_error("empty value for key '" + key + "'", line, key);
  if (v.front() == '[') {
    if (v.back() != ']') throw parse_error("unterminated list for key '" + key + "'", line, key);
    v = v.substr(1, v.size() - 2);
  }
  std::vector<std::string> items;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  items.push_back(trim(cur));
  for (const auto& it : items)
    if (it.empty()) throw parse_error("empty list element for key '" + key + "'", line, key);
  return items;
}

inline long parse_long(const std::string& s, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw parse_error("key '" + key + "': '" + s + "' is not an integer", line, key);
  }
}

inline double parse_float(const std::string& s, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw parse_error("key '" + key + "': '" + s + "' is not a number", line, key);
  }
}

template <typename T>
void check_allowed(const std::vector<T>& values, const std::vector<T>& allowed, int line,
                   const std::string& key, const std::string& allowed_text) {
  for (const T& v : values) {
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::ostringstream os;
      os << "key '" << key << "': value " << v << " not in " << allowed_text;
      throw parse_error(os.str(), line, key);
    }
  }
}

}  // namespace detail

// Sweep config text: `key = value` entries separated by newlines or commas
// (commas inside [...] belong to the list); `#` starts a comment.  Unknown or
// duplicate keys are errors that name the key and line.
inline SweepSpec parse_config(const std::string& text) {
  using detail::trim;
  std::vector<std::pair<int, std::string>> entries;  // (line, key=value)
  {
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
      ++lineno;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw = raw.substr(0, hash);
      int depth = 0;
      std::string cur;
      for (char c : raw) {
        if (c == '[') ++depth;
        if (c == ']') --depth;
        if (c == ',' && depth == 0) {
          if (!trim(cur).empty()) entries.emplace_back(lineno, trim(cur));
          cur.clear();
        } else {
          cur += c;
        }
      }
      if (!trim(cur).empty()) entries.emplace_back(lineno, trim(cur));
    }
  }

  SweepSpec spec;
  bool have_benchmark = false;
  std::set<std::string> seen;
  for (const auto& [line, entry] : entries) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw parse_error("expected key = value, got '" + entry + "'", line);
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));
    if (key.empty()) throw parse_error("missing key before '='", line);
    std::string canon = key;
    if (key == "seed") canon = "seeds";
    if (key == "collocation") canon = "D";
    if (!seen.insert(canon).second) throw parse_error("duplicate key '" + key + "'", line, key);

    if (key == "benchmark") {
      if (value == "shm")
        spec.benchmark = OdeKind::Shm;
      else if (value == "heat")
        spec.benchmark = OdeKind::Heat;
      else
        throw parse_error("key 'benchmark': '" + value + "' not in {shm, heat}", line, key);
      have_benchmark = true;
    } else if (key == "complexity") {
      spec.complexities.clear();
      for (const auto& s : detail::split_list(value, line, key))
        spec.complexities.push_back(detail::parse_long(s, line, key));
    } else if (key == "depth") {
      spec.depths.clear();
      for (const auto& s : detail::split_list(value, line, key))
        spec.depths.push_back(static_cast<int>(detail::parse_long(s, line, key)));
      detail::check_allowed(spec.depths, {2, 4, 8}, line, key, "{2, 4, 8}");
    } else if (key == "width") {
      spec.widths.clear();
      for (const auto& s : detail::split_list(value, line, key))
        spec.widths.push_back(static_cast<int>(detail::parse_long(s, line, key)));
      detail::check_allowed(spec.widths, {64, 128}, line, key, "{64, 128}");
    } else if (key == "lr") {
      spec.lrs.clear();
      for (const auto& s : detail::split_list(value, line, key))
        spec.lrs.push_back(detail::parse_float(s, line, key));
      detail::check_allowed(spec.lrs, {1e-3, 1e-4}, line, key, "{0.001, 0.0001}");
    } else if (key == "arch") {
      spec.archs.clear();
      for (const auto& s : detail::split_list(value, line, key)) {
        try {
          spec.archs.push_back(parse_arch(s));
        } catch (const config_error&) {
          throw parse_error("key 'arch': '" + s + "' not in {mlp, resnet}", line, key);
        }
      }
    } else if (key == "formulation") {
      spec.formulations.clear();
      for (const auto& s : detail::split_list(value, line, key)) {
        try {
          spec.formulations.push_back(parse_formulation(s));
        } catch (const config_error&) {
          throw parse_error("key 'formulation': '" + s + "' not in {uniform, adaptive}", line,
                            key);
        }
      }
    } else if (key == "seeds" || key == "seed") {
      spec.seeds.clear();
      for (const auto& s : detail::split_list(value, line, key)) {
        const long v = detail::parse_long(s, line, key);
        if (v < 0) throw parse_error("key '" + key + "': seeds must be >= 0", line, key);
        spec.seeds.push_back(static_cast<std::uint64_t>(v));
      }
    } else if (key == "iterations") {
      spec.iterations = detail::parse_long(value, line, key);
      if (spec.iterations < 1) throw parse_error("key 'iterations': must be >= 1", line, key);
    } else if (key == "D" || key == "collocation") {
      spec.collocation_override = static_cast<int>(detail::parse_long(value, line, key));
      if (spec.collocation_override < 2)
        throw parse_error("key '" + key + "': must be >= 2", line, key);
    } else if (key == "residual_reduction") {
      if (value == "mean")
        spec.residual_reduction = Reduction::Mean;
      else if (value == "sum")
        spec.residual_reduction = Reduction::Sum;
      else
        throw parse_error("key 'residual_reduction': '" + value + "' not in {mean, sum}", line,
                          key);
    } else if (key == "heat_scaling") {
      if (value == "ic")
        spec.heat_scaling = HeatScaling::Ic;
      else if (value == "residual")
        spec.heat_scaling = HeatScaling::Residual;
      else
        throw parse_error("key 'heat_scaling': '" + value + "' not in {ic, residual}", line, key);
    } else if (key == "rtol") {
      spec.rtol = detail::parse_float(value, line, key);
      if (!(spec.rtol > 0)) throw parse_error("key 'rtol': must be > 0", line, key);
    } else if (key == "atol") {
      spec.atol = detail::parse_float(value, line, key);
      if (!(spec.atol > 0)) throw parse_error("key 'atol': must be > 0", line, key);
    } else if (key == "probes") {
      spec.probes = static_cast<int>(detail::parse_long(value, line, key));
      if (spec.probes < 1) throw parse_error("key 'probes': must be >= 1", line, key);
    } else {
      throw parse_error("unknown key '" + key + "'", line, key);
    }
  }
  if (!have_benchmark) throw parse_error("missing required key 'benchmark'");

  if (spec.complexities.empty()) spec.complexities = default_complexities(spec.benchmark);
  for (long c : spec.complexities) {
    if (spec.benchmark == OdeKind::Shm && c < 1)
      throw parse_error("key 'complexity': horizon multiplier must be >= 1", 0, "complexity");
    if (spec.benchmark == OdeKind::Heat && c < 3)
      throw parse_error("key 'complexity': grid size must be >= 3", 0, "complexity");
  }
  if (spec.depths.empty() || spec.widths.empty() || spec.lrs.empty() || spec.archs.empty() ||
      spec.formulations.empty() || spec.seeds.empty())
    throw parse_error("a grid dimension is empty");
  return spec;
}

inline SweepSpec parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw parse_error("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

// Per-(benchmark, complexity) aggregate over a sweep CSV.
struct SummaryRow {
  std::string benchmark;
  long complexity = 0;
  long runs = 0;
  long diverged = 0;
  double median_rel_error = std::nan("");
  double min_rel_error = std::nan("");
  double median_rel_error_ic = std::nan("");
  std::string best_config;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Aggregates a sweep CSV; diverged rows are counted but excluded from the
// error statistics.
inline std::vector<SummaryRow> summarize_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw parse_error("summary: empty input", 1);
  std::vector<std::string> cols;
  {
    std::string cur;
    for (char c : header) {
      if (c == ',') {
        cols.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    cols.push_back(cur);
  }
  auto col = [&](const std::string& name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw parse_error("summary: missing column '" + name + "'", 1);
    return static_cast<std::size_t>(it - cols.begin());
  };
  const std::size_t c_id = col("config_id"), c_bench = col("benchmark"),
                    c_cplx = col("complexity"), c_div = col("diverged"),
                    c_err = col("rel_error_eval"), c_ic = col("rel_error_ic");

  struct Group {
    long runs = 0, diverged = 0;
    std::vector<double> errs, ics;
    double best = std::numeric_limits<double>::infinity();
    std::string best_id;
  };
  std::map<std::pair<std::string, long>, Group> groups;
  std::string line;
  int lineno = 1;
  long data_rows = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    f.push_back(cur);
    if (f.size() != cols.size())
      throw parse_error("summary: wrong field count on line " + std::to_string(lineno), lineno);
    ++data_rows;
    Group& g = groups[{f[c_bench], detail::parse_long(f[c_cplx], lineno, "complexity")}];
    ++g.runs;
    if (f[c_div] == "1") {
      ++g.diverged;
      continue;
    }
    const double err = detail::parse_float(f[c_err], lineno, "rel_error_eval");
    const double ic = detail::parse_float(f[c_ic], lineno, "rel_error_ic");
    g.errs.push_back(err);
    g.ics.push_back(ic);
    if (err < g.best) {
      g.best = err;
      g.best_id = f[c_id];
    }
  }
  if (data_rows == 0) throw parse_error("summary: no data rows", lineno);

  std::vector<SummaryRow> out;
  for (auto& [key, g] : groups) {
    SummaryRow r;
    r.benchmark = key.first;
    r.complexity = key.second;
    r.runs = g.runs;
    r.diverged = g.diverged;
    r.median_rel_error = median(g.errs);
    r.min_rel_error = g.errs.empty() ? std::nan("") : g.best;
    r.median_rel_error_ic = median(g.ics);
    r.best_config = g.best_id;
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<SummaryRow> summarize_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw parse_error("cannot open '" + path + "'");
  return summarize_csv(is);
}

inline void write_summary(const std::vector<SummaryRow>& rows, std::ostream& os) {
  os << "benchmark,complexity,runs,diverged,median_rel_error,min_rel_error,"
        "median_rel_error_ic,best_config\n";
  for (const auto& r : rows) {
    os << r.benchmark << ',' << r.complexity << ',' << r.runs << ',' << r.diverged << ','
       << format_double(r.median_rel_error) << ',' << format_double(r.min_rel_error) << ','
       << format_double(r.median_rel_error_ic) << ',' << r.best_config << "\n";
  }
}

}  // namespace pinnode
