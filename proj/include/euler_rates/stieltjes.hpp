#pragma once

// Generalized Stieltjes functions of order alpha in (0, 2]:
//   f(z) = a + \int_0^inf mu(dtau) / (z + tau)^alpha
// with mu given by atoms and piecewise-power densities c tau^p on [lo, hi).

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "euler_rates/errors.hpp"
#include "euler_rates/quadrature.hpp"
#include "euler_rates/scalar.hpp"
#include "json.hpp"

namespace euler_rates {

struct Atom {
  double tau = 0.0;
  double weight = 1.0;
};

/// c tau^p on [lo, hi); hi may be +inf.
struct DensityPiece {
  double lo = 0.0;
  double hi = 1.0;
  double coeff = 1.0;
  double exponent = 0.0;
};

struct StieltjesRep {
  double a = 0.0;
  double alpha = 1.0;
  std::vector<Atom> atoms;
  std::vector<DensityPiece> pieces;

  void validate() const {
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("a must be finite and >= 0");
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (0, 2]");
    for (const Atom& at : atoms) {
      if (!(at.tau >= 0.0) || !std::isfinite(at.tau)) throw DomainError("atom tau must be >= 0");
      if (!(at.weight > 0.0) || !std::isfinite(at.weight))
        throw DomainError("atom weight must be > 0");
    }
    for (const DensityPiece& pc : pieces) {
      if (!(pc.lo >= 0.0) || !std::isfinite(pc.lo)) throw DomainError("piece lo must be >= 0");
      if (!(pc.hi > pc.lo)) throw DomainError("piece needs hi > lo");
      if (!(pc.coeff > 0.0) || !std::isfinite(pc.coeff))
        throw DomainError("piece coefficient must be > 0");
      if (!(pc.exponent > -1.0) || !std::isfinite(pc.exponent))
        throw DomainError("piece exponent must be > -1");
      if (std::isinf(pc.hi) && !(alpha - pc.exponent - 1.0 > 0.0)) {
        throw DivergenceError("density c tau^" + std::to_string(pc.exponent) +
                              " on an unbounded interval is not admissible at order " +
                              std::to_string(alpha));
      }
    }
  }

  bool is_zero() const { return a == 0.0 && atoms.empty() && pieces.empty(); }
  bool has_mass_at_zero() const {
    for (const Atom& at : atoms)
      if (at.tau == 0.0) return true;
    for (const DensityPiece& pc : pieces)
      if (pc.lo == 0.0) return true;
    return false;
  }
};

/// f1 * f2 with both factors of order 1.
struct ProductStieltjes {
  StieltjesRep f1;
  StieltjesRep f2;

  void validate() const {
    f1.validate();
    f2.validate();
    if (f1.alpha != 1.0 || f2.alpha != 1.0) throw DomainError("product factors must have order 1");
  }
};

namespace detail {

template <class T>
void accumulate(std::optional<T>& acc, T value) {
  if (acc) {
    *acc += value;
  } else {
    acc.emplace(std::move(value));
  }
}

}  // namespace detail

/// \int R(tau) c tau^p dtau over one density piece, for R(tau) = O(tau^-order)
/// at infinity. Near tau = 0 the substitution tau = T w^{1/(p+1)} removes the
/// power singularity; on an unbounded tail tau = T w^{-1/beta} with
/// beta = order - p - 1 maps [T, inf) onto (0, 1].
template <class R>
auto integrate_density_piece(const DensityPiece& pc, double order, R&& kernel,
                             const QuadratureSpec& spec, double scale = 1.0) {
  using T = std::decay_t<std::invoke_result_t<R&, double>>;
  const double c = pc.coeff;
  const double p = pc.exponent;
  const double split = std::max({pc.lo, 1.0, scale});
  const double head_end = std::min(pc.hi, split);

  std::optional<T> acc;
  if (head_end > pc.lo) {
    if (pc.lo == 0.0) {
      const double q = p + 1.0;
      const double factor = c * std::pow(head_end, q) / q;
      auto g = [&](double w) -> T {
        return factor * kernel(head_end * std::pow(w, 1.0 / q));
      };
      detail::accumulate(acc, T(integrate(g, 0.0, 1.0, spec)));
    } else {
      auto g = [&](double tau) -> T { return c * std::pow(tau, p) * kernel(tau); };
      detail::accumulate(acc, T(integrate(g, pc.lo, head_end, spec)));
    }
  }
  if (pc.hi > split) {
    if (std::isinf(pc.hi)) {
      const double beta = order - p - 1.0;
      if (!(beta > 0.0)) throw DivergenceError("density tail is not integrable");
      const double factor = c * std::pow(split, -beta) / beta;
      auto g = [&](double w) -> T {
        const double tau = split * std::pow(w, -1.0 / beta);
        const double grow = std::pow(tau, order);
        T v = kernel(tau);
        if (!std::isfinite(grow)) return v * 0.0;
        return factor * grow * v;
      };
      detail::accumulate(acc, T(integrate(g, 0.0, 1.0, spec)));
    } else {
      auto g = [&](double tau) -> T { return c * std::pow(tau, p) * kernel(tau); };
      detail::accumulate(acc, T(integrate(g, split, pc.hi, spec)));
    }
  }
  if (!acc) return T(kernel(split) * 0.0);
  return *acc;
}

/// \int R(tau) mu(dtau) (without the constant a). R must decay like
/// tau^-rep.alpha for unbounded pieces. `zero` fixes the result shape.
template <class R, class T>
T integrate_measure(const StieltjesRep& rep, R&& kernel, const QuadratureSpec& spec, double scale,
                    T zero) {
  T acc = std::move(zero);
  for (const Atom& at : rep.atoms) acc += at.weight * kernel(at.tau);
  for (const DensityPiece& pc : rep.pieces) {
    acc += integrate_density_piece(pc, rep.alpha, kernel, spec, scale);
  }
  return acc;
}

namespace detail {

inline Complex shifted_power(Complex z, double tau, double alpha) {
  const Complex w = z + tau;
  if (alpha == 1.0) return 1.0 / w;
  if (alpha == 2.0) return 1.0 / (w * w);
  return std::exp(-alpha * std::log(w));
}

inline void check_argument(const StieltjesRep& f, Complex z) {
  if (z.imag() == 0.0 && z.real() < 0.0) {
    throw DomainError("Stieltjes functions are not defined on the negative real axis");
  }
  if (z == Complex(0.0, 0.0)) {
    for (const Atom& at : f.atoms)
      if (at.tau == 0.0) throw DivergenceError("atom at tau = 0 is infinite at z = 0");
    for (const DensityPiece& pc : f.pieces)
      if (pc.lo == 0.0 && !(pc.exponent - f.alpha > -1.0))
        throw DivergenceError("density near tau = 0 makes f(0) infinite");
  }
}

}  // namespace detail

inline Complex evaluate(const StieltjesRep& f, Complex z, const QuadratureSpec& spec = {}) {
  detail::check_argument(f, z);
  auto kernel = [&](double tau) { return detail::shifted_power(z, tau, f.alpha); };
  return f.a + integrate_measure(f, kernel, spec, std::abs(z), Complex(0.0, 0.0));
}

inline Complex evaluate(const ProductStieltjes& f, Complex z, const QuadratureSpec& spec = {}) {
  return evaluate(f.f1, z, spec) * evaluate(f.f2, z, spec);
}

inline double evaluate_real(const StieltjesRep& f, double s, const QuadratureSpec& spec = {}) {
  return evaluate(f, Complex(s, 0.0), spec).real();
}

/// Order-2 representation of z^-alpha, 0 < alpha <= 2.
inline StieltjesRep power_rep(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("power_rep needs alpha in (0, 2]");
  StieltjesRep f;
  f.alpha = 2.0;
  if (alpha == 2.0) {
    f.atoms.push_back({0.0, 1.0});
    return f;
  }
  const double c = 1.0 / (std::tgamma(alpha) * std::tgamma(2.0 - alpha));
  f.pieces.push_back({0.0, std::numeric_limits<double>::infinity(), c, 1.0 - alpha});
  return f;
}

/// Order-1 representation of z^-beta, 0 < beta <= 1.
inline StieltjesRep order1_power_rep(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("order-1 power needs beta in (0, 1]");
  StieltjesRep f;
  f.alpha = 1.0;
  if (beta == 1.0) {
    f.atoms.push_back({0.0, 1.0});
    return f;
  }
  f.pieces.push_back(
      {0.0, std::numeric_limits<double>::infinity(), std::sin(std::numbers::pi * beta) / std::numbers::pi, -beta});
  return f;
}

/// z^-alpha as the product z^{-alpha/2} z^{-alpha/2}.
inline ProductStieltjes power_product(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("power_product needs alpha in (0, 2]");
  return {order1_power_rep(alpha / 2.0), order1_power_rep(alpha / 2.0)};
}

inline StieltjesRep atom_rep(double tau, double weight, double alpha, double a = 0.0) {
  StieltjesRep f;
  f.a = a;
  f.alpha = alpha;
  f.atoms.push_back({tau, weight});
  return f;
}

/// \int mu(dtau) / (1 + tau)^alpha.
inline double admissibility(const StieltjesRep& f, const QuadratureSpec& spec = {}) {
  f.validate();
  auto kernel = [&](double tau) { return std::pow(1.0 + tau, -f.alpha); };
  const double v = integrate_measure(f, kernel, spec, 1.0, 0.0);
  if (!std::isfinite(v)) throw DivergenceError("admissibility integral is not finite");
  return v;
}

/// 1 / (f1(z) f2(z)).
inline Complex reciprocal_eval(const ProductStieltjes& f, Complex z, const QuadratureSpec& spec = {}) {
  const Complex v = evaluate(f, z, spec);
  if (v == Complex(0.0, 0.0)) throw DomainError("reciprocal of a vanishing function");
  return 1.0 / v;
}

struct AxisBound {
  double lhs = 0.0;
  double rhs_plus = 0.0;
  double rhs_minus = 0.0;
  bool holds = false;
};

/// f(s) against sqrt(2)|f(±is)| for order-1 f; a product of two order-1
/// factors picks up sqrt(2) per factor.
inline AxisBound axis_bound_check(const StieltjesRep& f, double s, const QuadratureSpec& spec = {}) {
  if (f.alpha != 1.0) throw DomainError("axis bound applies to order-1 functions");
  if (!(s > 0.0)) throw DomainError("axis bound needs s > 0");
  AxisBound b;
  b.lhs = evaluate_real(f, s, spec);
  b.rhs_plus = std::numbers::sqrt2 * std::abs(evaluate(f, Complex(0.0, s), spec));
  b.rhs_minus = std::numbers::sqrt2 * std::abs(evaluate(f, Complex(0.0, -s), spec));
  b.holds = b.lhs <= std::min(b.rhs_plus, b.rhs_minus) + kInequalitySlack;
  return b;
}

inline AxisBound axis_bound_check(const ProductStieltjes& f, double s, const QuadratureSpec& spec = {}) {
  f.validate();
  if (!(s > 0.0)) throw DomainError("axis bound needs s > 0");
  AxisBound b;
  b.lhs = evaluate(f, Complex(s, 0.0), spec).real();
  b.rhs_plus = 2.0 * std::abs(evaluate(f, Complex(0.0, s), spec));
  b.rhs_minus = 2.0 * std::abs(evaluate(f, Complex(0.0, -s), spec));
  b.holds = b.lhs <= std::min(b.rhs_plus, b.rhs_minus) + kInequalitySlack;
  return b;
}

namespace detail {

inline void check_laplace_rep(const StieltjesRep& f) {
  if (f.alpha != 2.0 || f.a != 0.0) throw DomainError("Laplace density needs alpha = 2 and a = 0");
}

/// \int_lo^hi tau^p e^{-u tau} dtau for u > 0.
inline double power_exp_integral(const DensityPiece& pc, double u) {
  const double q = pc.exponent + 1.0;
  const double x_lo = u * pc.lo;
  const double x_hi = u * pc.hi;
  const double gamma_q = std::tgamma(q) * std::pow(u, -q);
  double mass;
  if (x_lo >= q) {
    const double qh = std::isinf(x_hi) ? 0.0 : boost::math::gamma_q(q, x_hi);
    mass = boost::math::gamma_q(q, x_lo) - qh;
  } else {
    const double ph = std::isinf(x_hi) ? 1.0 : boost::math::gamma_p(q, x_hi);
    mass = ph - boost::math::gamma_p(q, x_lo);
  }
  return gamma_q * mass;
}

}  // namespace detail

/// m(u) = u \int e^{-u tau} mu(dtau), the Laplace pre-image of an order-2 f.
inline double laplace_density(const StieltjesRep& f, double u) {
  detail::check_laplace_rep(f);
  if (!(u >= 0.0)) throw DomainError("Laplace density needs u >= 0");
  double total = 0.0;
  for (const Atom& at : f.atoms) total += at.weight * u * std::exp(-u * at.tau);
  for (const DensityPiece& pc : f.pieces) {
    if (u == 0.0) {
      // u * mass(u) as u -> 0; only unbounded pieces with p >= 0 survive
      if (std::isinf(pc.hi) && pc.exponent >= 0.0) {
        total += pc.exponent == 0.0 ? pc.coeff : std::numeric_limits<double>::infinity();
      }
      continue;
    }
    total += pc.coeff * u * detail::power_exp_integral(pc, u);
  }
  return total;
}

/// (1 - (1 + w) e^{-w}) / w^2, with its series below w = 1e-4.
inline double second_order_remainder(double w) {
  if (w < 1e-4) return 0.5 - w / 3.0 + w * w / 8.0 - w * w * w / 30.0;
  return (-std::expm1(-w) - w * std::exp(-w)) / (w * w);
}

/// \int_0^v m(u) du = v^2 \int phi(tau v) mu(dtau), phi = second_order_remainder.
inline double laplace_density_primitive(const StieltjesRep& f, double v, const QuadratureSpec& spec = {}) {
  detail::check_laplace_rep(f);
  if (!(v >= 0.0)) throw DomainError("primitive needs v >= 0");
  if (v == 0.0) return 0.0;
  auto kernel = [v](double tau) { return second_order_remainder(tau * v); };
  return v * v * integrate_measure(f, kernel, spec, 1.0 / v, 0.0);
}

/// lim_{u->inf} m(u) / u = mu({0}).
inline double laplace_density_slope(const StieltjesRep& f) {
  detail::check_laplace_rep(f);
  double s = 0.0;
  for (const Atom& at : f.atoms)
    if (at.tau == 0.0) s += at.weight;
  return s;
}

/// r_0(t, tau) = t e^{-t tau} + e^{-t} \int_0^t e^{s(1 - tau)} s (t - s - 2) ds.
inline double regularized_kernel_r0(double t, double tau) {
  if (!(t >= 0.0) || !(tau >= 0.0)) throw DomainError("r0 needs t, tau >= 0");
  if (t == 0.0) return 0.0;
  const double d = 1.0 - tau;
  if (std::abs(d) * t <= 2.0) {
    // power series of the integral in x = d t
    const double x = d * t;
    double sum = 0.0;
    double term = 1.0;  // x^k / k!
    for (int k = 0; k < 200; ++k) {
      const double kk = k;
      const double piece = term * t * t * (t / ((kk + 2.0) * (kk + 3.0)) - 2.0 / (kk + 2.0));
      sum += piece;
      if (std::abs(piece) <= 1e-17 * std::abs(sum) && k > 2) break;
      term *= x / (kk + 1.0);
    }
    return t * std::exp(-t * tau) + std::exp(-t) * sum;
  }
  if (tau == 0.0) return t * std::exp(-t);
  const double d3 = d * d * d;
  const double decay = std::exp(std::log(tau) - tau * t);  // tau e^{-tau t}
  const double first = decay == 0.0 ? 0.0 : (-2.0 + d * tau * t) * decay / d3;
  const double second = (t + (2.0 - t) * tau) * std::exp(-t) / d3;
  return first + second;
}

struct HfPoint {
  Complex z;
  Complex lhs;  // z^2 f(z) / (1 + z)^2
  Complex rhs;  // \int e^{-zt} r(t) dt
  double abs_error = 0.0;
  bool pass = false;
};

struct HfKernelReport {
  std::vector<HfPoint> points;
  std::vector<std::pair<double, double>> r_values;  // (t, r(t))
  double l1_norm = 0.0;                             // \int |r(t)| dt
  double admissibility = 0.0;
  double l1_ratio = 0.0;  // l1_norm / admissibility, finite
  bool pass = false;
};

/// r(t) = \int r_0(t, tau) mu(dtau).
inline double regularized_kernel_r(const StieltjesRep& f, double t, const QuadratureSpec& spec = {}) {
  detail::check_laplace_rep(f);
  auto kernel = [t](double tau) { return regularized_kernel_r0(t, tau); };
  return integrate_measure(f, kernel, spec, 1.0, 0.0);
}

/// Laplace round trip z^2 f(z) / (1 + z)^2 = L[r](z) at z in {1, 2, 1 + i}.
inline HfKernelReport hf_kernel_check(const StieltjesRep& f, std::span<const double> t_grid, double tol,
                                      const QuadratureSpec& spec = {}) {
  detail::check_laplace_rep(f);
  f.validate();
  const QuadratureSpec inner = spec.inner();
  auto r = [&](double t) { return regularized_kernel_r(f, t, inner); };
  HfKernelReport rep;
  rep.pass = true;
  for (Complex z : {Complex(1.0, 0.0), Complex(2.0, 0.0), Complex(1.0, 1.0)}) {
    HfPoint pt;
    pt.z = z;
    pt.lhs = z * z * evaluate(f, z, spec) / ((1.0 + z) * (1.0 + z));
    pt.rhs = laplace_transform(r, z, spec);
    pt.abs_error = std::abs(pt.lhs - pt.rhs);
    pt.pass = pt.abs_error <= tol;
    rep.pass = rep.pass && pt.pass;
    rep.points.push_back(pt);
  }
  for (double t : t_grid) rep.r_values.emplace_back(t, r(t));
  bool density_at_zero = false;
  double min_tau = std::numeric_limits<double>::infinity();
  for (const Atom& at : f.atoms) min_tau = std::min(min_tau, at.tau);
  for (const DensityPiece& pc : f.pieces) {
    min_tau = std::min(min_tau, pc.lo);
    density_at_zero = density_at_zero || pc.lo == 0.0;
  }
  auto abs_r = [&](double t) { return std::abs(r(t)); };
  if (density_at_zero) {
    // r may decay only like a power of t here: map [T, inf) onto (0, 1]
    const double split = 8.0;
    const double breaks[] = {1.0, 2.0, 4.0};
    rep.l1_norm = integrate(abs_r, 0.0, split, spec, breaks) +
                  integrate([&](double w) { return abs_r(split / w) * split / (w * w); }, 0.0, 1.0, spec);
  } else {
    const double rate = (min_tau <= 0.0 || min_tau >= 1.0) ? 1.0 : min_tau;
    rep.l1_norm = halfline_integrate(abs_r, rate, spec);
  }
  rep.admissibility = admissibility(f, spec);
  rep.l1_ratio = rep.admissibility > 0.0 ? rep.l1_norm / rep.admissibility : 0.0;
  rep.pass = rep.pass && std::isfinite(rep.l1_ratio);
  return rep;
}

/// (1 + tau)^2 \int_0^inf |r_0(t, tau)| dt for a single atom.
inline double r0_l1_weighted(double tau, const QuadratureSpec& spec = {}) {
  const double rate = tau <= 0.0 ? 1.0 : std::min(1.0, tau);
  const double l1 =
      halfline_integrate([tau](double t) { return std::abs(regularized_kernel_r0(t, tau)); }, rate, spec);
  return (1.0 + tau) * (1.0 + tau) * l1;
}

/// Built-in order-2 corpus used by the suites.
inline std::vector<std::pair<std::string, StieltjesRep>> order2_corpus() {
  StieltjesRep unit_density;
  unit_density.alpha = 2.0;
  unit_density.pieces.push_back({0.0, 1.0, 1.0, 0.0});
  return {
      {"inv_z2", atom_rep(0.0, 1.0, 2.0)},
      {"inv_z1_2", atom_rep(1.0, 1.0, 2.0)},
      {"unit_density", unit_density},
      {"power_0.5", power_rep(0.5)},
      {"power_1", power_rep(1.0)},
      {"power_1.5", power_rep(1.5)},
  };
}

/// Built-in order-1 corpus: 1/z, 1/(z+1), z^{-1/2}, density 1 on [0,1], 1 + 1/z.
inline std::vector<std::pair<std::string, StieltjesRep>> order1_corpus() {
  StieltjesRep unit_density;
  unit_density.alpha = 1.0;
  unit_density.pieces.push_back({0.0, 1.0, 1.0, 0.0});
  return {
      {"inv_z", atom_rep(0.0, 1.0, 1.0)},
      {"inv_z1", atom_rep(1.0, 1.0, 1.0)},
      {"inv_sqrt", order1_power_rep(0.5)},
      {"unit_density", unit_density},
      {"one_plus_inv_z", atom_rep(0.0, 1.0, 1.0, 1.0)},
  };
}

/// Products used by the sharpness and reciprocal suites.
inline std::vector<std::pair<std::string, ProductStieltjes>> product_corpus() {
  const StieltjesRep inv_z = atom_rep(0.0, 1.0, 1.0);
  const StieltjesRep inv_z1 = atom_rep(1.0, 1.0, 1.0);
  const StieltjesRep one_plus = atom_rep(0.0, 1.0, 1.0, 1.0);
  return {
      {"inv_z2", {inv_z, inv_z}},
      {"one_plus_inv_z_sq", {one_plus, one_plus}},
      {"inv_z_z1", {inv_z, inv_z1}},
  };
}

// ---------------------------------------------------------------- JSON

namespace detail {

inline double json_number(const nlohmann::json& j, const std::string& field, bool allow_inf = false) {
  if (j.is_number()) return j.get<double>();
  if (allow_inf && j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "+inf")) {
    return std::numeric_limits<double>::infinity();
  }
  throw ValidationError(field, allow_inf ? "expected a number or \"inf\"" : "expected a number");
}

inline nlohmann::json json_bound(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace detail

inline StieltjesRep stieltjes_from_json(const nlohmann::json& j, const std::string& field = "function") {
  if (!j.is_object()) throw ValidationError(field, "expected an object");
  StieltjesRep f;
  for (const auto& [key, value] : j.items()) {
    const std::string sub = field + "." + key;
    if (key == "a") {
      f.a = detail::json_number(value, sub);
    } else if (key == "alpha") {
      f.alpha = detail::json_number(value, sub);
    } else if (key == "atoms") {
      if (!value.is_array()) throw ValidationError(sub, "expected an array of [tau, weight]");
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string at = sub + "[" + std::to_string(i) + "]";
        if (!value[i].is_array() || value[i].size() != 2) throw ValidationError(at, "expected [tau, weight]");
        f.atoms.push_back({detail::json_number(value[i][0], at), detail::json_number(value[i][1], at)});
      }
    } else if (key == "pieces") {
      if (!value.is_array()) throw ValidationError(sub, "expected an array of [lo, hi, c, p]");
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string pc = sub + "[" + std::to_string(i) + "]";
        if (!value[i].is_array() || value[i].size() != 4) throw ValidationError(pc, "expected [lo, hi, c, p]");
        f.pieces.push_back({detail::json_number(value[i][0], pc), detail::json_number(value[i][1], pc, true),
                            detail::json_number(value[i][2], pc), detail::json_number(value[i][3], pc)});
      }
    } else {
      throw ValidationError(sub, "unknown key");
    }
  }
  try {
    f.validate();
  } catch (const std::exception& e) {
    throw ValidationError(field, e.what());
  }
  return f;
}

inline nlohmann::ordered_json stieltjes_to_json(const StieltjesRep& f) {
  nlohmann::ordered_json j;
  j["a"] = f.a;
  j["alpha"] = f.alpha;
  j["atoms"] = nlohmann::ordered_json::array();
  for (const Atom& at : f.atoms) j["atoms"].push_back({at.tau, at.weight});
  j["pieces"] = nlohmann::ordered_json::array();
  for (const DensityPiece& pc : f.pieces) {
    j["pieces"].push_back({pc.lo, detail::json_bound(pc.hi), pc.coeff, pc.exponent});
  }
  return j;
}

inline ProductStieltjes product_from_json(const nlohmann::json& j, const std::string& field = "function") {
  if (!j.is_object()) throw ValidationError(field, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "factors") throw ValidationError(field + "." + key, "unknown key");
  }
  if (!j.contains("factors")) throw ValidationError(field + ".factors", "missing");
  const auto& fs = j.at("factors");
  if (!fs.is_array() || fs.size() != 2) throw ValidationError(field + ".factors", "expected two factors");
  ProductStieltjes p{stieltjes_from_json(fs[0], field + ".factors[0]"),
                     stieltjes_from_json(fs[1], field + ".factors[1]")};
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw ValidationError(field, e.what());
  }
  return p;
}

inline nlohmann::ordered_json product_to_json(const ProductStieltjes& p) {
  nlohmann::ordered_json j;
  j["factors"] = {stieltjes_to_json(p.f1), stieltjes_to_json(p.f2)};
  return j;
}

}  // namespace euler_rates
