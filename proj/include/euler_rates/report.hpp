#pragma once

// Sweep configuration, the five suites behind the command-line tool, slope
// fitting and deterministic CSV / JSON / svg-data emission.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "euler_rates/errors.hpp"
#include "euler_rates/kernel_bounds.hpp"
#include "euler_rates/operator_lab.hpp"
#include "euler_rates/parallel.hpp"
#include "euler_rates/quadrature.hpp"
#include "euler_rates/stieltjes.hpp"
#include "json.hpp"

namespace euler_rates {

using OrderedJson = nlohmann::ordered_json;

enum class Suite { kernel, norms, rates, sharpness, limits };
enum class Format { csv, json, svg_data };

inline std::string suite_name(Suite s) {
  switch (s) {
    case Suite::kernel: return "kernel";
    case Suite::norms: return "norms";
    case Suite::rates: return "rates";
    case Suite::sharpness: return "sharpness";
    case Suite::limits: return "limits";
  }
  return "";
}

inline Suite parse_suite(const std::string& s) {
  for (Suite x : {Suite::kernel, Suite::norms, Suite::rates, Suite::sharpness, Suite::limits})
    if (suite_name(x) == s) return x;
  throw ValidationError("suite", "unknown suite \"" + s + "\"");
}

inline std::string format_name(Format f) {
  switch (f) {
    case Format::csv: return "csv";
    case Format::json: return "json";
    case Format::svg_data: return "svg-data";
  }
  return "";
}

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  if (s == "svg-data") return Format::svg_data;
  throw ValidationError("output.format", "expected csv, json or svg-data, got \"" + s + "\"");
}

/// JSON that failed to parse; line and column are 1-based.
class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(std::string path, int line, int column, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

using FunctionSpec = std::variant<StieltjesRep, ProductStieltjes>;

struct OutputSpec {
  std::string path;  // empty: standard output
  Format format = Format::csv;
};

struct SweepConfig {
  Suite suite = Suite::rates;
  std::vector<int> n_grid;
  std::vector<double> t_grid;
  std::vector<double> tau_grid;
  std::vector<double> alpha_list;
  std::vector<double> lambda_grid;
  std::vector<double> floors;
  std::vector<double> deltas;
  int trend_levels = 10;
  std::optional<Generator> generator;
  std::optional<FunctionSpec> function;
  QuadratureSpec quadrature;
  OutputSpec output;
  std::uint64_t seed = 20240601;
};

inline SweepConfig default_config(Suite suite) {
  SweepConfig c;
  c.suite = suite;
  switch (suite) {
    case Suite::kernel:
      for (int n = 1; n <= 16; ++n) c.n_grid.push_back(n);
      c.n_grid.insert(c.n_grid.end(), {32, 64});
      c.t_grid = {0.5, 1.0, 2.0};
      c.tau_grid = {0.0, 1e-2, 1e-1, 1.0, 10.0, 100.0};
      break;
    case Suite::norms:
      for (int n = 1; n <= 32; ++n) c.n_grid.push_back(n);
      c.t_grid = {0.5, 1.0, 2.0};
      c.lambda_grid = {0.5, 1.0, 2.0};
      break;
    case Suite::rates:
      for (int k = 4; k <= 12; ++k) c.n_grid.push_back(1 << k);
      c.t_grid = {1.0};
      c.alpha_list = {0.5, 1.0, 1.5, 2.0};
      break;
    case Suite::sharpness:
      c.n_grid = {1, 4, 16, 64};
      c.t_grid = {0.5, 1.0, 2.0};
      break;
    case Suite::limits:
      c.n_grid = {1};
      c.t_grid = {1.0};
      c.alpha_list = {2.0, 3.0};
      c.floors = {1e-2, 1e-3, 1e-4};
      for (int k = 1; k <= 8; ++k) c.deltas.push_back(std::pow(10.0, -k));
      break;
  }
  return c;
}

/// The rate-law spectrum i k / 100, k = 1..100000 (i (0, 1000]).
inline DiagonalGenerator rate_law_generator() { return grid_generator(true, 1000.0, 100000); }

namespace detail {

inline std::vector<double> json_reals(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "expected an array");
  if (j.empty()) throw ValidationError(field, "must be nonempty");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    const double v = json_number(j[i], f);
    if (!std::isfinite(v)) throw ValidationError(f, "must be finite");
    out.push_back(v);
  }
  return out;
}

inline std::vector<double> json_positive(const nlohmann::json& j, const std::string& field, const char* name) {
  auto v = json_reals(j, field);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0)) throw ValidationError(field + "[" + std::to_string(i) + "]", std::string(name) + " must be > 0");
  return v;
}

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1;
  int column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  // nlohmann reports the position just past the offending character
  return {line, std::max(1, column - 1)};
}

}  // namespace detail

/// Validated configuration; keys absent from `j` keep the suite defaults.
inline SweepConfig config_from_json(const nlohmann::json& j, std::optional<Suite> suite_hint = std::nullopt) {
  if (!j.is_object()) throw ValidationError("", "configuration must be a JSON object");
  Suite suite = suite_hint.value_or(Suite::rates);
  if (j.contains("suite")) {
    if (!j["suite"].is_string()) throw ValidationError("suite", "expected a string");
    const Suite named = parse_suite(j["suite"].get<std::string>());
    if (suite_hint && named != *suite_hint) {
      throw ValidationError("suite", "config is for \"" + suite_name(named) + "\" but \"" + suite_name(*suite_hint) +
                                         "\" was requested");
    }
    suite = named;
  } else if (!suite_hint) {
    throw ValidationError("suite", "missing");
  }
  SweepConfig c = default_config(suite);
  for (const auto& [key, value] : j.items()) {
    if (key == "suite") continue;
    if (key == "n_grid") {
      if (!value.is_array()) throw ValidationError(key, "expected an array");
      if (value.empty()) throw ValidationError(key, "must be nonempty");
      c.n_grid.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string f = key + "[" + std::to_string(i) + "]";
        if (!value[i].is_number_integer()) throw ValidationError(f, "expected an integer");
        const auto n = value[i].get<long long>();
        if (n < 1) throw ValidationError(f, "n must be ≥ 1");
        if (n > 100000000) throw ValidationError(f, "n is too large");
        c.n_grid.push_back(static_cast<int>(n));
      }
    } else if (key == "t_grid") {
      c.t_grid = detail::json_positive(value, key, "t");
    } else if (key == "tau_grid") {
      c.tau_grid = detail::json_reals(value, key);
      for (std::size_t i = 0; i < c.tau_grid.size(); ++i)
        if (!(c.tau_grid[i] >= 0.0)) throw ValidationError(key + "[" + std::to_string(i) + "]", "tau must be ≥ 0");
    } else if (key == "alpha_list") {
      c.alpha_list = detail::json_positive(value, key, "alpha");
    } else if (key == "lambda_grid") {
      c.lambda_grid = detail::json_positive(value, key, "lambda");
    } else if (key == "floors") {
      c.floors = detail::json_positive(value, key, "floor");
      for (std::size_t i = 0; i < c.floors.size(); ++i)
        if (c.floors[i] > 1.0) throw ValidationError(key + "[" + std::to_string(i) + "]", "floor must be ≤ 1");
    } else if (key == "deltas") {
      c.deltas = detail::json_positive(value, key, "delta");
    } else if (key == "trend_levels") {
      if (!value.is_number_integer() || value.get<int>() < 1 || value.get<int>() > 15)
        throw ValidationError(key, "expected an integer in [1, 15]");
      c.trend_levels = value.get<int>();
    } else if (key == "generator") {
      c.generator = generator_from_json(value, key);
    } else if (key == "function") {
      if (value.is_object() && value.contains("factors")) {
        c.function = product_from_json(value, key);
      } else {
        c.function = stieltjes_from_json(value, key);
      }
    } else if (key == "quadrature") {
      if (!value.is_object()) throw ValidationError(key, "expected an object");
      for (const auto& [qk, qv] : value.items()) {
        const std::string f = key + "." + qk;
        if (qk == "rel_tol") {
          c.quadrature.rel_tol = detail::json_number(qv, f);
        } else if (qk == "abs_tol") {
          c.quadrature.abs_tol = detail::json_number(qv, f);
        } else if (qk == "truncation_epsilon") {
          c.quadrature.truncation_epsilon = detail::json_number(qv, f);
        } else if (qk == "max_panels") {
          if (!qv.is_number_integer()) throw ValidationError(f, "expected an integer");
          c.quadrature.max_panels = qv.get<int>();
        } else {
          throw ValidationError(f, "unknown key");
        }
      }
      c.quadrature.validate();
    } else if (key == "output") {
      if (!value.is_object()) throw ValidationError(key, "expected an object");
      for (const auto& [ok, ov] : value.items()) {
        const std::string f = key + "." + ok;
        if (ok == "path") {
          if (!ov.is_string()) throw ValidationError(f, "expected a string");
          c.output.path = ov.get<std::string>();
        } else if (ok == "format") {
          if (!ov.is_string()) throw ValidationError(f, "expected a string");
          c.output.format = parse_format(ov.get<std::string>());
        } else {
          throw ValidationError(f, "unknown key");
        }
      }
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw ValidationError(key, "expected a nonnegative integer");
      c.seed = value.get<std::uint64_t>();
    } else {
      throw ValidationError(key, "unknown key");
    }
  }
  if (c.suite == Suite::rates) {
    for (std::size_t i = 0; i < c.alpha_list.size(); ++i)
      if (c.alpha_list[i] > 2.0)
        throw ValidationError("alpha_list[" + std::to_string(i) + "]", "rates need alpha in (0, 2]");
  }
  if (c.function) {
    const bool product = std::holds_alternative<ProductStieltjes>(*c.function);
    if (c.suite == Suite::sharpness && !product)
      throw ValidationError("function", "sharpness needs a product {\"factors\": [f1, f2]}");
    if (c.suite == Suite::limits && !product)
      throw ValidationError("function", "limits need a product {\"factors\": [f1, f2]}");
    if (c.suite == Suite::norms && product)
      throw ValidationError("function", "norms need a single order-2 representation");
    if (c.suite == Suite::norms && std::get<StieltjesRep>(*c.function).alpha != 2.0)
      throw ValidationError("function.alpha", "norms need alpha = 2");
  }
  return c;
}

inline SweepConfig load_config(const std::string& path, std::optional<Suite> suite_hint = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = detail::line_column(text, e.byte);
    throw ConfigParseError(path, line, column, e.what());
  }
  return config_from_json(j, suite_hint);
}

// ------------------------------------------------------------------ tables

using Cell = std::variant<long long, double, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// A log-log polyline for svg-data; kind is "points" or "envelope".
struct Series {
  std::string name;
  std::string kind;
  std::vector<std::pair<double, double>> points;
};

struct SuiteResult {
  Suite suite = Suite::rates;
  Table table;
  std::vector<Series> series;
  OrderedJson summary = OrderedJson::object();
  std::vector<OrderedJson> failures;

  bool pass() const { return failures.empty(); }
};

namespace detail {

inline std::string number_text(double v, const char* fmt = "%.17g") {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline std::string csv_cell(const Cell& c) {
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return number_text(*d);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

inline OrderedJson json_cell(const Cell& c) {
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isfinite(*d)) return *d;
    return number_text(*d);
  }
  if (const auto* b = std::get_if<bool>(&c)) return *b;
  return std::get<std::string>(c);
}

inline void add_point(Series& s, double x, double y) {
  if (x > 0.0 && y > 0.0 && std::isfinite(x) && std::isfinite(y)) s.points.emplace_back(std::log10(x), std::log10(y));
}

}  // namespace detail

inline std::string format_table(const SuiteResult& r, Format format) {
  std::string out;
  if (format == Format::csv) {
    for (std::size_t i = 0; i < r.table.columns.size(); ++i) out += (i ? "," : "") + r.table.columns[i];
    out += "\n";
    for (const auto& row : r.table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + detail::csv_cell(row[i]);
      out += "\n";
    }
  } else if (format == Format::json) {
    OrderedJson arr = OrderedJson::array();
    for (const auto& row : r.table.rows) {
      OrderedJson obj = OrderedJson::object();
      for (std::size_t i = 0; i < row.size(); ++i) obj[r.table.columns[i]] = detail::json_cell(row[i]);
      arr.push_back(std::move(obj));
    }
    out = arr.dump(2) + "\n";
  } else {
    out += "# svg-data " + suite_name(r.suite) + ": log10 x, log10 y\n";
    for (const Series& s : r.series) {
      out += "\n# " + s.kind + " " + s.name + "\n";
      for (const auto& [x, y] : s.points) {
        out += detail::number_text(x, "%.10g") + " " + detail::number_text(y, "%.10g") + "\n";
      }
    }
  }
  return out;
}

/// Writes the table; an empty path means standard output.
inline void emit(const SuiteResult& r, Format format, const std::string& path) {
  if (r.table.rows.empty()) throw DomainError("nothing to emit: no records");
  const std::string text = format_table(r, format);
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path);
}

// --------------------------------------------------------------- slope fit

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double standard_error = 0.0;
  int points = 0;
  bool skipped = false;
  std::string reason;
};

inline constexpr double kUnderflowFloor = 1e-14;
inline constexpr int kMinFitPoints = 6;

/// Ordinary least squares of log y on log x.
inline SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  SlopeFit f;
  f.points = static_cast<int>(x.size());
  if (x.size() != y.size()) throw DimensionError("fit needs equally many x and y");
  if (f.points < kMinFitPoints) {
    f.skipped = true;
    f.reason = "fewer than " + std::to_string(kMinFitPoints) + " points";
    return f;
  }
  for (double v : y) {
    if (!(v >= kUnderflowFloor)) {
      f.skipped = true;
      f.reason = "error below 1e-14";
      return f;
    }
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= f.points;
  my /= f.points;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (!(sxx > 0.0)) {
    f.skipped = true;
    f.reason = "x values do not vary";
    return f;
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = std::log(y[i]) - (f.intercept + f.slope * std::log(x[i]));
    rss += e * e;
  }
  f.standard_error = std::sqrt(rss / (f.points - 2) / sxx);
  return f;
}

inline constexpr double kSlopeTolerance = 0.15;

// ------------------------------------------------------------------ suites

namespace detail {

inline OrderedJson failure(const std::string& check, OrderedJson where) {
  OrderedJson f = OrderedJson::object();
  f["check"] = check;
  for (auto& [k, v] : where.items()) f[k] = v;
  return f;
}

inline const char* generator_label(const Generator& g) {
  return std::holds_alternative<DiagonalGenerator>(g) ? "diagonal" : "matrix";
}

}  // namespace detail

inline SuiteResult run_kernel_suite(const SweepConfig& c, int jobs) {
  SuiteResult r{Suite::kernel};
  const auto rep = kernel_bound_suite(c.n_grid, c.t_grid, c.tau_grid, c.quadrature, jobs);
  r.table.columns = {"n", "t", "tau", "q1", "q2", "q_total", "bound_appendix_a", "bound_appendix_b",
                     "bound_main", "ratio_main", "pass"};
  auto probes = rep.probes;
  std::stable_sort(probes.begin(), probes.end(), [](const KernelProbe& a, const KernelProbe& b) {
    return std::tie(a.n, a.t, a.tau) < std::tie(b.n, b.t, b.tau);
  });
  for (const auto& p : probes) {
    r.table.rows.push_back({(long long)p.n, p.t, p.tau, p.q1, p.q2, p.q_total, p.bound_appendix_a,
                            p.bound_appendix_b, p.bound_main, p.ratio_main(), p.pass});
    if (!p.pass) r.failures.push_back(detail::failure("kernel_bound", {{"n", p.n}, {"t", p.t}, {"tau", p.tau}}));
  }
  for (double t : c.t_grid) {
    for (double tau : c.tau_grid) {
      Series pts{"t=" + detail::number_text(t, "%g") + " tau=" + detail::number_text(tau, "%g"), "points"};
      Series env{pts.name, "envelope"};
      for (const auto& p : probes) {
        if (p.t != t || p.tau != tau) continue;
        detail::add_point(pts, p.n, p.q_total);
        detail::add_point(env, p.n, p.bound_main);
      }
      r.series.push_back(std::move(pts));
      r.series.push_back(std::move(env));
    }
  }
  r.summary["max_ratio_main"] = rep.max_ratio_main;
  r.summary["worst"] = {{"n", rep.worst.n}, {"t", rep.worst.t}, {"tau", rep.worst.tau}};
  r.summary["probes"] = probes.size();
  return r;
}

inline SuiteResult run_norms_suite(const SweepConfig& c, int jobs) {
  SuiteResult r{Suite::norms};
  const auto rep = example_norm_suite(c.n_grid, c.t_grid, c.lambda_grid, c.quadrature, jobs);
  r.table.columns = {"n", "t", "lambda", "l_const", "a1_const", "bound_a", "l_linear", "a1_linear",
                     "bound_b", "composite", "bound_c", "pass"};
  double worst_c = 0.0;
  for (const auto& row : rep.rows) {
    r.table.rows.push_back({(long long)row.n, row.t, row.lambda, row.l_const, row.a1_const, row.bound_a,
                            row.l_linear, row.a1_linear, row.bound_b, row.composite, row.bound_c, row.pass});
    worst_c = std::max(worst_c, row.composite / row.bound_c);
    if (!row.pass)
      r.failures.push_back(detail::failure("example_norms", {{"n", row.n}, {"t", row.t}, {"lambda", row.lambda}}));
  }
  for (double t : c.t_grid) {
    for (double lambda : c.lambda_grid) {
      Series pts{"t=" + detail::number_text(t, "%g") + " lambda=" + detail::number_text(lambda, "%g"), "points"};
      Series env{pts.name, "envelope"};
      for (const auto& row : rep.rows) {
        if (row.t != t || row.lambda != lambda) continue;
        detail::add_point(pts, row.n, row.composite);
        detail::add_point(env, row.n, row.bound_c);
      }
      r.series.push_back(std::move(pts));
      r.series.push_back(std::move(env));
    }
  }
  r.summary["rows"] = rep.rows.size();
  r.summary["max_composite_ratio"] = worst_c;
  if (c.function) {
    const auto& f = std::get<StieltjesRep>(*c.function);
    struct Pair {
      int n;
      double t;
    };
    std::vector<Pair> grid;
    for (int n : c.n_grid)
      for (double t : c.t_grid) grid.push_back({n, t});
    const auto hf = parallel_map(grid.size(), jobs,
                                 [&](std::size_t i) { return hf_envelope(f, grid[i].n, grid[i].t, c.quadrature); });
    OrderedJson rows = OrderedJson::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      rows.push_back({{"n", grid[i].n}, {"t", grid[i].t}, {"norm", hf[i].norm}, {"envelope", hf[i].envelope},
                      {"ratio", hf[i].ratio}, {"pass", hf[i].pass}});
      if (!hf[i].pass) r.failures.push_back(detail::failure("hf_envelope", {{"n", grid[i].n}, {"t", grid[i].t}}));
    }
    r.summary["hf_envelope"] = rows;
  }
  return r;
}

inline SuiteResult run_rate_sweep(const SweepConfig& c, int jobs) {
  SuiteResult r{Suite::rates};
  const Generator gen = c.generator ? *c.generator : Generator(rate_law_generator());
  const int d = dim(gen);
  r.table.columns = {"n", "t", "alpha", "error", "envelope", "ratio", "tail_budget", "intermediate", "bound", "pass"};
  OrderedJson fits = OrderedJson::array();
  for (double alpha : c.alpha_list) {
    const RateVector rv = rate_vector(d, alpha, c.seed);
    const StieltjesRep f = power_rep(alpha);
    const Vector fx = function_apply(f, gen, rv.x, c.quadrature);
    const double komatsu = std::visit([&](const auto& g) { return komatsu_norm(g, alpha, rv.x); }, gen);
    struct Pair {
      int n;
      double t;
    };
    std::vector<Pair> grid;
    for (int n : c.n_grid)
      for (double t : c.t_grid) grid.push_back({n, t});
    const auto recs = parallel_map(grid.size(), jobs, [&](std::size_t i) {
      return std::visit(
          [&](const auto& g) {
            const int n = grid[i].n;
            const double t = grid[i].t;
            std::array<RateRecord, 3> out{th1_bound_check(g, f, n, t, rv.x, c.quadrature, &fx),
                                          corm0_power_check(g, alpha, n, t, rv.x),
                                          thmint_bound_check(g, alpha, n, t, rv.x, komatsu)};
            for (auto& rec : out) {
              rec.alpha = alpha;
              rec.tail_budget = c.generator ? 0.0 : rv.tail_budget;
            }
            return out;
          },
          gen);
    });
    for (const auto& triple : recs) {
      for (const RateRecord& rec : triple) {
        r.table.rows.push_back({(long long)rec.n, rec.t, rec.alpha, rec.error, rec.envelope, rec.ratio,
                                rec.tail_budget, rec.intermediate, rec.bound, rec.pass()});
        if (!rec.pass()) {
          r.failures.push_back(detail::failure(
              "rate_bound", {{"bound", rec.bound}, {"n", rec.n}, {"t", rec.t}, {"alpha", alpha}, {"ratio", rec.ratio}}));
        }
      }
    }
    for (double t : c.t_grid) {
      std::vector<double> xs, ys;
      Series pts{"alpha=" + detail::number_text(alpha, "%g") + " t=" + detail::number_text(t, "%g"), "points"};
      Series env{pts.name, "envelope"};
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i].t != t) continue;
        const RateRecord& power = recs[i][1];
        xs.push_back(power.n);
        ys.push_back(power.error);
        detail::add_point(pts, power.n, power.error);
        detail::add_point(env, power.n, power.envelope);
      }
      r.series.push_back(std::move(pts));
      r.series.push_back(std::move(env));
      const SlopeFit fit = fit_loglog(xs, ys);
      const double expected = -alpha / 2.0;
      OrderedJson fj = {{"alpha", alpha}, {"t", t}, {"slope", fit.slope}, {"standard_error", fit.standard_error},
                        {"expected", expected}, {"points", fit.points}, {"skipped", fit.skipped}};
      if (fit.skipped) {
        fj["reason"] = fit.reason;
      } else if (std::abs(fit.slope - expected) > kSlopeTolerance) {
        r.failures.push_back(detail::failure(
            "rate_slope", {{"alpha", alpha}, {"t", t}, {"slope", fit.slope}, {"expected", expected}}));
      }
      fits.push_back(fj);
    }
  }
  r.summary["generator"] = detail::generator_label(gen);
  r.summary["dimension"] = d;
  r.summary["fits"] = fits;
  return r;
}

inline SuiteResult run_sharpness(const SweepConfig& c, int jobs) {
  SuiteResult r{Suite::sharpness};
  std::vector<std::pair<std::string, ProductStieltjes>> functions;
  if (c.function) {
    functions.push_back({"config", std::get<ProductStieltjes>(*c.function)});
  } else {
    functions = product_corpus();
  }
  DiagonalGenerator gen;
  if (c.generator) {
    const auto* d = std::get_if<DiagonalGenerator>(&*c.generator);
    if (!d) throw ValidationError("generator", "sharpness needs a diagonal generator");
    gen = *d;
  } else {
    std::vector<double> probes;
    double top = 0.0;
    for (int n : c.n_grid)
      for (double t : c.t_grid) {
        probes.push_back(std::sqrt(double(n)) / t);
        top = std::max(top, probes.back());
      }
    gen = multiplication_model(4.0 * top, 4096, probes);
  }
  struct Point {
    std::size_t f;
    int n;
    double t;
  };
  std::vector<Point> grid;
  for (std::size_t fi = 0; fi < functions.size(); ++fi)
    for (double t : c.t_grid)
      for (int n : c.n_grid) grid.push_back({fi, n, t});
  const auto recs = parallel_map(grid.size(), jobs, [&](std::size_t i) {
    return sharpness_check(gen, functions[grid[i].f].second, grid[i].n, grid[i].t, c.quadrature);
  });
  r.table.columns = {"function", "n", "t", "opnorm", "lower", "upper", "sandwich", "argmax_im", "holds"};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& s = recs[i];
    const std::string& name = functions[grid[i].f].first;
    r.table.rows.push_back({name, (long long)s.n, s.t, s.opnorm, s.lower, s.upper, s.sandwich, s.argmax.imag(), s.holds});
    lo = std::min(lo, s.sandwich);
    hi = std::max(hi, s.sandwich);
    if (!s.holds) r.failures.push_back(detail::failure("sharpness", {{"function", name}, {"n", s.n}, {"t", s.t}}));
  }
  for (std::size_t fi = 0; fi < functions.size(); ++fi) {
    for (double t : c.t_grid) {
      const std::string base = functions[fi].first + " t=" + detail::number_text(t, "%g");
      Series pts{base, "points"}, up{base + " upper", "envelope"}, low{base + " lower", "envelope"};
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i].f != fi || grid[i].t != t) continue;
        detail::add_point(pts, grid[i].n, recs[i].opnorm);
        detail::add_point(up, grid[i].n, recs[i].upper);
        detail::add_point(low, grid[i].n, recs[i].lower);
      }
      r.series.push_back(std::move(pts));
      r.series.push_back(std::move(up));
      r.series.push_back(std::move(low));
    }
  }
  OrderedJson trend = OrderedJson::object();
  for (const auto& [name, f] : functions) {
    OrderedJson rows = OrderedJson::array();
    for (const TrendRow& row : sharpness_trend(f, c.t_grid.front(), c.trend_levels, c.quadrature)) {
      rows.push_back({{"cutoff", row.cutoff}, {"n", row.n}, {"opnorm", row.opnorm}, {"f_value", row.f_value},
                      {"ratio", row.ratio}});
    }
    trend[name] = rows;
  }
  r.summary["min_sandwich"] = lo;
  r.summary["max_sandwich"] = hi;
  r.summary["sandwich_floor"] = kSharpnessConstant / 12.0;
  r.summary["spectrum_size"] = gen.dim();
  r.summary["trend"] = trend;
  return r;
}

inline SuiteResult run_limits(const SweepConfig& c, int jobs) {
  SuiteResult r{Suite::limits};
  r.table.columns = {"kind", "label", "n", "t", "alpha", "param", "value", "reference"};
  OrderedJson div = OrderedJson::array();
  for (double alpha : c.alpha_list) {
    for (int n : c.n_grid) {
      for (double t : c.t_grid) {
        const DivergenceSweep s = alpha_gt2_divergence(n, t, alpha, c.floors);
        const std::string label = "alpha=" + detail::number_text(alpha, "%g") + " n=" + std::to_string(n) +
                                  " t=" + detail::number_text(t, "%g");
        Series pts{label, "points"}, env{label, "envelope"};
        bool within = true;
        for (std::size_t i = 0; i < s.floors.size(); ++i) {
          r.table.rows.push_back({std::string("divergence"), label, (long long)n, t, alpha, s.floors[i], s.sups[i],
                                  s.predictions[i]});
          detail::add_point(pts, s.floors[i], s.sups[i]);
          detail::add_point(env, s.floors[i], s.predictions[i]);
          const double q = s.sups[i] / s.predictions[i];
          if (!(q <= 2.0 && q >= 0.5)) within = false;
        }
        r.series.push_back(std::move(pts));
        r.series.push_back(std::move(env));
        const double cap = 1.1 * t * t / (2.0 * n);
        const double top = *std::max_element(s.sups.begin(), s.sups.end());
        OrderedJson where = {{"alpha", alpha}, {"n", n}, {"t", t}};
        if (alpha > 2.0) {
          if (!s.diverges) r.failures.push_back(detail::failure("divergence_growth", where));
          if (!within) r.failures.push_back(detail::failure("divergence_prediction", where));
        } else if (alpha == 2.0 && top > cap) {
          r.failures.push_back(detail::failure("boundary_bounded", where));
        }
        div.push_back({{"alpha", alpha}, {"n", n}, {"t", t}, {"growth", s.growth}, {"max", top},
                       {"within_factor_2", within}});
      }
    }
  }
  r.summary["divergence"] = div;

  const ProductStieltjes f = c.function ? std::get<ProductStieltjes>(*c.function)
                                        : ProductStieltjes{atom_rep(0.0, 1.0, 1.0, 1.0), atom_rep(0.0, 1.0, 1.0, 1.0)};
  std::vector<std::pair<std::string, DiagonalGenerator>> models;
  if (c.generator) {
    const auto* d = std::get_if<DiagonalGenerator>(&*c.generator);
    if (!d) throw ValidationError("generator", "limits need a diagonal generator");
    models.push_back({"config", *d});
  } else {
    models.push_back({"imag_axis", grid_generator(true, 5.0, 500, true)});
    models.push_back({"real_axis", grid_generator(false, 5.0, 500, true)});
  }
  const auto dists = parallel_map(models.size(), jobs, [&](std::size_t i) {
    const Vector x = random_unit_vector(models[i].second.dim(), c.seed);
    return shifted_calculus_limit(models[i].second, f, x, c.deltas, c.quadrature);
  });
  OrderedJson shifts = OrderedJson::array();
  for (std::size_t m = 0; m < models.size(); ++m) {
    Series pts{models[m].first, "points"};
    bool monotone = true;
    for (std::size_t i = 0; i < c.deltas.size(); ++i) {
      r.table.rows.push_back({std::string("shift"), models[m].first, (long long)0, 0.0, 0.0, c.deltas[i], dists[m][i],
                              0.0});
      detail::add_point(pts, c.deltas[i], dists[m][i]);
      if (i > 0 && !(dists[m][i] < dists[m][i - 1])) monotone = false;
    }
    r.series.push_back(std::move(pts));
    const bool small = dists[m].back() < 1e-8;
    if (!monotone) r.failures.push_back(detail::failure("shift_monotone", {{"label", models[m].first}}));
    if (!small) r.failures.push_back(detail::failure("shift_limit", {{"label", models[m].first}}));
    shifts.push_back({{"label", models[m].first}, {"monotone", monotone}, {"last", dists[m].back()}});
  }
  r.summary["shifted_limit"] = shifts;
  return r;
}

inline SuiteResult run_suite(const SweepConfig& c, int jobs) {
  if (c.n_grid.empty() || c.t_grid.empty()) throw ValidationError("n_grid", "grids must be nonempty");
  SuiteResult r;
  switch (c.suite) {
    case Suite::kernel: r = run_kernel_suite(c, jobs); break;
    case Suite::norms: r = run_norms_suite(c, jobs); break;
    case Suite::rates: r = run_rate_sweep(c, jobs); break;
    case Suite::sharpness: r = run_sharpness(c, jobs); break;
    case Suite::limits: r = run_limits(c, jobs); break;
  }
  r.summary["suite"] = suite_name(c.suite);
  r.summary["pass"] = r.pass();
  r.summary["failures"] = r.failures.size();
  r.summary["seed"] = c.seed;
  return r;
}

}  // namespace euler_rates
