#pragma once

// Laplace-domain error kernels of Delta_{n,t} f for f = a + L[m]:
//   q_{n,t}(u)  with  Delta_{n,t}(z) (L m)(z) = \int_0^inf e^{-uz} q_{n,t}(u) du,
// the majorant L_{n,t}[m], the quantities Q^(1), Q^(2), Q_{n,t}(tau) for
// m(v) = v e^{-tau v}, and the suites checking their bounds.
//
// Every expectation below is E[g(S)] for S ~ Gamma(n, 1), i.e.
// (1/(n-1)!) \int s^{n-1} e^{-s} g(s) ds, and delta(s) = t (1 - s/n).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "euler_rates/errors.hpp"
#include "euler_rates/parallel.hpp"
#include "euler_rates/quadrature.hpp"
#include "euler_rates/scalar.hpp"
#include "euler_rates/stieltjes.hpp"

namespace euler_rates {

/// f = constant + L[m]; `primitive` is M(v) = \int_0^v m and `slope` is
/// lim_{u->inf} m(u)/u. `difference(v, d)` may supply m(v + d) - m(v)
/// without cancellation.
struct LaplaceDensity {
  std::function<double(double)> m;
  std::function<double(double)> primitive;
  double slope = 0.0;
  double constant = 0.0;
  std::function<double(double, double)> difference;
  bool singular_origin = false;  // m not smooth at u = 0 (power law there)
  double scale = 0.0;            // width of a feature of m at u = 0, if any

  double diff(double v, double d) const { return difference ? difference(v, d) : m(v + d) - m(v); }
};

/// m = 1, f = 1/z.
inline LaplaceDensity constant_density() {
  return {[](double) { return 1.0; }, [](double v) { return v; }, 0.0, 0.0,
          [](double, double) { return 0.0; }};
}

/// m(v) = v, f = 1/z^2.
inline LaplaceDensity linear_density() {
  return {[](double v) { return v; }, [](double v) { return 0.5 * v * v; }, 1.0, 0.0,
          [](double, double d) { return d; }};
}

/// (v + d) e^{-tau (v + d)} - v e^{-tau v}
inline double shifted_atom_difference(double tau, double v, double d) {
  const double shifted = std::exp(-tau * (v + d));
  if (tau * std::abs(d) > 1.0) return v * (shifted - std::exp(-tau * v)) + d * shifted;
  return v * std::exp(-tau * v) * std::expm1(-tau * d) + d * shifted;
}

/// m(v) = v e^{-tau v}, f = 1/(z + tau)^2.
inline LaplaceDensity shifted_atom_density(double tau) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  LaplaceDensity d{[tau](double v) { return v * std::exp(-tau * v); },
                   [tau](double v) { return v * v * second_order_remainder(tau * v); }, tau == 0.0 ? 1.0 : 0.0,
                   0.0, [tau](double v, double d) { return shifted_atom_difference(tau, v, d); }};
  if (tau > 0.0) d.scale = 1.0 / tau;
  return d;
}

/// Laplace pre-image of an order-2 Stieltjes function (constant kept aside).
inline LaplaceDensity stieltjes_density(const StieltjesRep& f, const QuadratureSpec& spec = {}) {
  if (f.alpha != 2.0) throw DomainError("Laplace density needs an order-2 representation");
  f.validate();
  StieltjesRep g = f;
  g.a = 0.0;
  // an integrable singularity at 0 is hit exactly by rounded nodes; that point carries no mass
  LaplaceDensity d{[g](double u) {
                     const double m = laplace_density(g, std::max(u, 0.0));
                     return std::isfinite(m) ? m : 0.0;
                   },
                   [g, spec](double v) { return laplace_density_primitive(g, v, spec); },
                   laplace_density_slope(g), f.a, {}};
  for (const DensityPiece& pc : g.pieces)
    if (std::isinf(pc.hi)) d.singular_origin = true;
  if (g.pieces.empty()) {
    d.difference = [g](double v, double dv) {
      double s = 0.0;
      for (const Atom& at : g.atoms) s += at.weight * shifted_atom_difference(at.tau, v, dv);
      return s;
    };
  }
  return d;
}

namespace detail {

template <class Fn>
auto nested(Fn&& fn) {
  try {
    return fn();
  } catch (const NestedQuadratureError&) {
    throw;
  } catch (const QuadratureError& e) {
    throw NestedQuadratureError(std::string("inner integral: ") + e.what());
  }
}

/// E[g(S); S <= upper] for g with an integrable singularity at s = upper;
/// the last stretch below upper is mapped by s = upper - y^2.
template <class G>
double expectation_singular_upper(G&& g, int n, const QuadratureSpec& spec, double upper) {
  const GammaWindow window = gamma_window(n, spec.truncation_epsilon);
  if (upper <= window.lo) return 0.0;
  const double h = std::min(upper, std::sqrt(static_cast<double>(n)));
  const double s0 = upper - h;
  if (s0 >= window.hi) return gamma_weight_integrate(g, n, spec, {}, upper);
  const GammaWeight weight(n);
  const double bulk = s0 > window.lo ? gamma_weight_integrate(g, n, spec, {}, s0) : 0.0;
  auto mapped = [&](double y) {
    const double s = upper - y * y;
    return 2.0 * y * weight(s) * g(s);
  };
  return bulk + integrate(mapped, 0.0, std::sqrt(h), spec);
}

/// \int_0^end g with an integrable singularity of g at 0 when `singular`;
/// [0, breaks[0]] is then mapped by v = y^2.
template <class G>
double integrate_from_origin(G&& g, double end, const QuadratureSpec& spec, const std::vector<double>& breaks,
                             bool singular) {
  if (!singular || breaks.empty()) return integrate(g, 0.0, end, spec, breaks);
  const double b0 = breaks.front();
  auto mapped = [&](double y) { return 2.0 * y * g(y * y); };
  return integrate(mapped, 0.0, std::sqrt(b0), spec) +
         integrate(g, b0, end, spec, std::vector<double>(breaks.begin() + 1, breaks.end()));
}

}  // namespace detail

/// D(v) = E[(m(v + delta) - m(v)) 1{S <= n(v/t + 1)}]; the inner bracket of
/// the second L_{n,t} term.
inline double shifted_difference(const LaplaceDensity& d, double v, int n, double t,
                                 const QuadratureSpec& inner) {
  const double nn = n;
  const double upper = nn * (v / t + 1.0);
  auto g = [&](double s) { return d.diff(v, t * (1.0 - s / nn)); };
  std::vector<double> kinks;
  if (d.scale > 0.0) {
    const double hi = gamma_window(n, inner.truncation_epsilon).hi;
    for (double w = d.scale; w < upper && upper - (nn / t) * w > 0.0; w *= 2.0) {
      const double s = upper - (nn / t) * w;
      if (s < hi) kinks.push_back(s);
      if (s < 0.5 * upper) break;
    }
  }
  return detail::nested([&] {
    if (d.singular_origin) return detail::expectation_singular_upper(g, n, inner, upper);
    return gamma_weight_integrate(g, n, inner, kinks, upper);
  });
}

/// q_{n,t}(u) including the constant's contribution a (n/t) w(nu/t); the
/// matching atom -a delta_t is left out.
inline double q_kernel(double u, int n, double t, const LaplaceDensity& d, const QuadratureSpec& spec = {}) {
  detail::check_steps(n, t);
  if (!(u >= 0.0)) throw DomainError("q_kernel needs u >= 0");
  const double nn = n;
  const double x = nn * u / t;
  double q;
  if (u < t) {
    if (x <= gamma_window(n, spec.truncation_epsilon).lo) {
      q = 0.0;
    } else {
      auto g = [&](double s) { return d.m(u - t * s / nn); };
      q = d.singular_origin ? detail::expectation_singular_upper(g, n, spec, x)
                            : gamma_weight_integrate(g, n, spec, {}, x);
    }
  } else {
    q = shifted_difference(d, u - t, n, t, spec) - d.m(u - t) * boost::math::gamma_q(nn, x);
  }
  if (d.constant != 0.0) q += d.constant * (nn / t) * GammaWeight(n)(x);
  return q;
}

template <class Fm>
  requires std::is_invocable_r_v<double, Fm&, double>
double q_kernel(double u, int n, double t, Fm&& m, const QuadratureSpec& spec = {}) {
  LaplaceDensity d;
  d.m = std::forward<Fm>(m);
  return q_kernel(u, n, t, d, spec);
}

namespace detail {

/// V past which S <= n(v/t+1) holds up to truncation_epsilon and D keeps one
/// sign (checked on samples out to 64 V).
inline double tail_start(const std::function<double(double)>& D, const LaplaceDensity& d, int n, double t,
                         const QuadratureSpec& spec) {
  const double hi = gamma_window(n, spec.truncation_epsilon).hi;
  double v = std::max(t, t * (hi / n - 1.0));
  for (int attempt = 0; attempt < 40; ++attempt, v *= 2.0) {
    int sign = 0;
    bool ok = true;
    auto probe = [&](double x) {
      const double val = D(x);
      if (!std::isfinite(val)) {
        ok = false;
        return;
      }
      // values at rounding level of m are treated as zero
      const double noise = 1e-12 * (std::abs(d.m(x)) + std::abs(d.m(x + t)));
      const int sg = val > noise ? 1 : (val < -noise ? -1 : 0);
      if (sg == 0) return;
      if (sign == 0) sign = sg;
      if (sg != sign) ok = false;
    };
    for (int j = 0; j <= 8 && ok; ++j) probe(v * (1.0 + j / 8.0));
    for (int k = 2; k <= 6 && ok; ++k) probe(v * std::ldexp(1.0, k));
    if (ok) return v;
  }
  throw QuadratureError("no sign-definite tail found for the shifted difference");
}

/// \int_V^inf D(v) dv = slope t^2/(2n) - E[M(V + delta) - M(V)].
inline double tail_integral(const LaplaceDensity& d, double v, int n, double t, const QuadratureSpec& inner) {
  const double nn = n;
  const double mv = d.primitive(v);
  auto g = [&](double s) { return d.primitive(v + t * (1.0 - s / nn)) - mv; };
  const double expectation =
      nested([&] { return gamma_weight_integrate(g, n, inner, {}, nn * (v / t + 1.0)); });
  return d.slope * t * t / (2.0 * nn) - expectation;
}

inline std::vector<double> dyadic_breaks(double unit, double end) {
  std::vector<double> b;
  for (int k = -8; k <= 60; ++k) {
    const double x = std::ldexp(unit, k);
    if (x >= end) break;
    b.push_back(x);
  }
  return b;
}

}  // namespace detail

struct LValue {
  double first = 0.0;   // E[M(t |1 - S/n|)]
  double second = 0.0;  // \int_0^inf |D(v)| dv
  double total() const { return first + second; }
};

inline LValue l_functional_parts(const LaplaceDensity& d, int n, double t, const QuadratureSpec& spec = {}) {
  detail::check_steps(n, t);
  const double nn = n;
  const QuadratureSpec inner = spec.inner();
  LValue out;
  const double kink[] = {nn};
  out.first = gamma_weight_integrate([&](double s) { return d.primitive(t * std::abs(1.0 - s / nn)); }, n,
                                     spec, kink);
  std::function<double(double)> D = [&](double v) { return shifted_difference(d, v, n, t, inner); };
  const double v_tail = detail::tail_start(D, d, n, t, spec);
  const auto breaks = detail::dyadic_breaks(t, v_tail);
  out.second = detail::integrate_from_origin([&](double v) { return std::abs(D(v)); }, v_tail, spec, breaks,
                                             d.singular_origin) +
               std::abs(detail::tail_integral(d, v_tail, n, t, inner));
  return out;
}

/// L_{n,t}[m].
inline double l_functional(const LaplaceDensity& d, int n, double t, const QuadratureSpec& spec = {}) {
  return l_functional_parts(d, n, t, spec).total();
}

/// \int_0^inf |q_{n,t}(u)| du plus |a| for the atom of a Delta_{n,t}: the
/// A^1_+ norm of Delta_{n,t} f for f = a + L[m].
inline double a1_norm(const LaplaceDensity& d, int n, double t, const QuadratureSpec& spec = {}) {
  detail::check_steps(n, t);
  const double nn = n;
  const QuadratureSpec inner = spec.inner();
  const GammaWeight weight(n);
  auto head = [&](double u) { return std::abs(q_kernel(u, n, t, d, inner)); };
  const auto head_breaks = detail::dyadic_breaks(t, t);
  const double part1 = integrate(head, 0.0, t, spec, head_breaks);

  // u = v + t
  auto body = [&](double v) {
    const double x = nn * (v / t + 1.0);
    double q = shifted_difference(d, v, n, t, inner) - d.m(v) * boost::math::gamma_q(nn, x);
    if (d.constant != 0.0) q += d.constant * (nn / t) * weight(x);
    return q;
  };
  std::function<double(double)> D = body;
  const double v_tail = detail::tail_start(D, d, n, t, spec);
  const auto breaks = detail::dyadic_breaks(t, v_tail);
  const double part2 = detail::integrate_from_origin([&](double v) { return std::abs(body(v)); }, v_tail, spec,
                                                     breaks, d.singular_origin) +
                       std::abs(detail::tail_integral(d, v_tail, n, t, inner));
  return std::abs(d.constant) + part1 + part2;
}

/// A^1_+ norm of Delta_{n,t} f for an order-2 Stieltjes f.
inline double a1_norm_delta(const StieltjesRep& f, int n, double t, const QuadratureSpec& spec = {}) {
  if (f.is_zero()) return 0.0;
  return a1_norm(stieltjes_density(f, spec.inner()), n, t, spec);
}

// ----------------------------------------------------------- Q_{n,t}(tau)

/// Q^(1)_{n,t}(tau) / (n-1)! = E[t^2 (1 - S/n)^2 phi(tau t |1 - S/n|)].
inline double q1(double tau, int n, double t, const QuadratureSpec& spec = {}) {
  detail::check_steps(n, t);
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  const double nn = n;
  const double kink[] = {nn};
  return gamma_weight_integrate(
      [&](double s) {
        const double d = 1.0 - s / nn;
        return t * t * d * d * second_order_remainder(tau * t * std::abs(d));
      },
      n, spec, kink);
}

/// Q^(2)_{n,t}(tau) / (n-1)! = \int_0^inf e^{-tau v} psi(v) dv / (n-1)!.
inline double q2(double tau, int n, double t, const QuadratureSpec& spec = {}) {
  detail::check_steps(n, t);
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  const double nn = n;
  if (tau == 0.0) {
    // psi(v)/(n-1)! = t E[(S/n - 1) 1{S > U}] = t U^n e^{-U} / n!, U = n(v/t + 1)
    auto psi = [&](double v) { return t * boost::math::gamma_p_derivative(nn + 1.0, nn * (v / t + 1.0)); };
    return halfline_integrate(psi, nn / t, spec);
  }
  const LaplaceDensity d = shifted_atom_density(tau);
  const QuadratureSpec inner = spec.inner();
  auto g = [&](double v) { return std::abs(shifted_difference(d, v, n, t, inner)); };
  std::vector<double> kinks{t};
  for (double b = 1.0 / tau; b < t; b *= 2.0) kinks.push_back(b);
  for (double b = 2.0 * t; b < 1.0 / tau; b *= 2.0) kinks.push_back(b);
  // v + delta reaches 0 on S ~ n (v/t + 1), so the Gamma tail caps the decay rate
  return halfline_integrate(g, std::min(tau, nn / t), spec, kinks);
}

struct KernelProbe {
  int n = 1;
  double t = 1.0;
  double tau = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double q_total = 0.0;
  double bound_appendix_a = 0.0;  // 2 / tau^2
  double bound_appendix_b = 0.0;  // 3 t^2 / n
  double bound_main = 0.0;        // 12 / (sqrt(n)/t + tau)^2
  bool pass = false;

  /// tau t |1 - s/n|
  double w(double s) const { return tau * t * std::abs(1.0 - s / n); }
  double ratio_main() const { return bound_main > 0.0 ? q_total / bound_main : 0.0; }
};

inline constexpr double kKernelSlack = 1e-6;

inline KernelProbe q_total(double tau, int n, double t, const QuadratureSpec& spec = {}) {
  KernelProbe p;
  p.n = n;
  p.t = t;
  p.tau = tau;
  p.q1 = q1(tau, n, t, spec);
  p.q2 = q2(tau, n, t, spec);
  p.q_total = p.q1 + p.q2;
  p.bound_appendix_a = tau > 0.0 ? 2.0 / (tau * tau) : std::numeric_limits<double>::infinity();
  p.bound_appendix_b = 3.0 * t * t / n;
  const double root = std::sqrt(static_cast<double>(n)) / t + tau;
  p.bound_main = 12.0 / (root * root);
  const double appendix = std::min(p.bound_appendix_a, p.bound_appendix_b);
  p.pass = p.q1 >= 0.0 && p.q2 >= 0.0 && p.q_total <= appendix * (1.0 + kKernelSlack) &&
           p.q_total <= p.bound_main * (1.0 + kKernelSlack) && appendix <= p.bound_main * (1.0 + kKernelSlack);
  return p;
}

struct KernelSuiteReport {
  std::vector<KernelProbe> probes;
  std::vector<KernelProbe> violations;
  double max_ratio_main = 0.0;
  KernelProbe worst;
  bool pass = true;
};

inline KernelSuiteReport kernel_bound_suite(const std::vector<int>& n_set, const std::vector<double>& t_set,
                                            const std::vector<double>& tau_set, const QuadratureSpec& spec = {},
                                            int jobs = 1) {
  struct Triple {
    int n;
    double t;
    double tau;
  };
  std::vector<Triple> grid;
  for (int n : n_set)
    for (double t : t_set)
      for (double tau : tau_set) grid.push_back({n, t, tau});
  KernelSuiteReport rep;
  rep.probes = parallel_map(grid.size(), jobs, [&](std::size_t i) {
    return q_total(grid[i].tau, grid[i].n, grid[i].t, spec);
  });
  for (const auto& p : rep.probes) {
    if (!p.pass) {
      rep.violations.push_back(p);
      rep.pass = false;
    }
    if (p.ratio_main() >= rep.max_ratio_main) {
      rep.max_ratio_main = p.ratio_main();
      rep.worst = p;
    }
  }
  return rep;
}

// ------------------------------------------------------------ examples

struct ExampleNormRow {
  int n = 1;
  double t = 1.0;
  double lambda = 1.0;
  double l_const = 0.0;    // L[1]
  double a1_const = 0.0;   // ||Delta / z||
  double bound_a = 0.0;    // t / sqrt(n)
  double l_linear = 0.0;   // L[v]
  double a1_linear = 0.0;  // ||Delta / z^2||
  double bound_b = 0.0;    // 3 t^2 / (2n)
  double composite = 0.0;  // 2 + 2 lambda L[1] + lambda^2 L[v]
  double bound_c = 0.0;    // 2 (1 + lambda t / sqrt(n))^2
  double delta_norm = 0.0;  // ||Delta_{n,t}||: Gamma density mass + unit atom
  bool pass = false;
};

struct ExampleNormReport {
  std::vector<ExampleNormRow> rows;
  bool pass = true;
};

inline ExampleNormReport example_norm_suite(const std::vector<int>& n_set, const std::vector<double>& t_set,
                                            const std::vector<double>& lambda_set,
                                            const QuadratureSpec& spec = {}, int jobs = 1) {
  struct Pair {
    int n;
    double t;
  };
  std::vector<Pair> grid;
  for (int n : n_set)
    for (double t : t_set) grid.push_back({n, t});
  const LaplaceDensity one = constant_density();
  const LaplaceDensity lin = linear_density();
  struct Values {
    double lc, ac, ll, al, dn;
  };
  const auto values = parallel_map(grid.size(), jobs, [&](std::size_t i) {
    const int n = grid[i].n;
    const double t = grid[i].t;
    Values v;
    v.lc = l_functional(one, n, t, spec);
    v.ac = a1_norm(one, n, t, spec);
    v.ll = l_functional(lin, n, t, spec);
    v.al = a1_norm(lin, n, t, spec);
    v.dn = gamma_weight_integrate([](double) { return 1.0; }, n, spec) + 1.0;
    return v;
  });
  ExampleNormReport rep;
  const double slack = 1.0 + kKernelSlack;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (double lambda : lambda_set) {
      ExampleNormRow r;
      r.n = grid[i].n;
      r.t = grid[i].t;
      r.lambda = lambda;
      const double root = std::sqrt(static_cast<double>(r.n));
      r.l_const = values[i].lc;
      r.a1_const = values[i].ac;
      r.bound_a = r.t / root;
      r.l_linear = values[i].ll;
      r.a1_linear = values[i].al;
      r.bound_b = 3.0 * r.t * r.t / (2.0 * r.n);
      r.delta_norm = values[i].dn;
      r.composite = r.delta_norm + 2.0 * lambda * r.l_const + lambda * lambda * r.l_linear;
      const double c = 1.0 + lambda * r.t / root;
      r.bound_c = 2.0 * c * c;
      r.pass = r.a1_const <= r.l_const * slack && r.l_const <= r.bound_a * slack &&
               r.a1_linear <= r.l_linear * slack && r.l_linear <= r.bound_b * slack &&
               r.composite <= r.bound_c * slack && std::abs(r.delta_norm - 2.0) <= 1e-9;
      rep.pass = rep.pass && r.pass;
      rep.rows.push_back(r);
    }
  }
  return rep;
}

struct HfEnvelope {
  double norm = 0.0;
  double envelope = 0.0;
  double ratio = 0.0;
  bool pass = true;
};

/// ||Delta_{n,t} f|| against 12 f(sqrt(n)/t).
inline HfEnvelope hf_envelope(const StieltjesRep& f, int n, double t, const QuadratureSpec& spec = {}) {
  detail::check_steps(n, t);
  HfEnvelope h;
  if (f.is_zero()) return h;
  h.norm = a1_norm_delta(f, n, t, spec);
  h.envelope = 12.0 * evaluate_real(f, std::sqrt(static_cast<double>(n)) / t, spec);
  h.ratio = h.envelope > 0.0 ? h.norm / h.envelope : 0.0;
  h.pass = h.ratio <= 1.0 + kKernelSlack;
  return h;
}

/// \int Q_{n,t}(tau) mu(dtau), the middle of the chain
/// ||Delta f|| <= \int Q mu <= 12 f(sqrt(n)/t).
inline double mixed_kernel_integral(const StieltjesRep& f, int n, double t, const QuadratureSpec& spec = {},
                                    const QuadratureSpec& tau_spec = {1e-6, 1e-12, 512, 1e-16}) {
  if (f.alpha != 2.0 || f.a != 0.0) throw DomainError("mixed kernel integral needs alpha = 2, a = 0");
  auto kernel = [&](double tau) { return q_total(tau, n, t, spec).q_total; };
  return integrate_measure(f, kernel, tau_spec, std::sqrt(static_cast<double>(n)) / t, 0.0);
}

}  // namespace euler_rates
