#pragma once

// Adaptive Gauss-Kronrod (7/15) integration on finite intervals, plus the two
// semi-infinite flavours the lab needs: Gamma-weighted averages
//   (1/(n-1)!) \int_0^inf s^{n-1} e^{-s} g(s) ds
// and exponentially decaying half-line integrals (incl. Laplace transforms).
//
// Integrands may return double, std::complex<double>, or any vector-like type
// for which Magnitude<T> is specialized (see operator_lab.hpp for Eigen).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "euler_rates/errors.hpp"

namespace euler_rates {

struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_panels = 4096;
  double truncation_epsilon = 1e-16;

  void validate() const {
    if (!(rel_tol > 0.0)) throw ValidationError("quadrature.rel_tol", "must be positive");
    if (!(abs_tol > 0.0)) throw ValidationError("quadrature.abs_tol", "must be positive");
    if (!(truncation_epsilon > 0.0))
      throw ValidationError("quadrature.truncation_epsilon", "must be positive");
    if (max_panels < 8) throw ValidationError("quadrature.max_panels", "must be >= 8");
  }

  /// Tolerances for the inner integral of a nested computation.
  QuadratureSpec inner() const {
    QuadratureSpec s = *this;
    s.rel_tol = rel_tol / 10.0;
    s.abs_tol = abs_tol / 10.0;
    return s;
  }
};

/// Shape parameter of the weight s^{n-1} e^{-s} / (n-1)!.
struct GammaWeight {
  int n = 1;

  explicit GammaWeight(int shape) : n(shape) {
    if (n < 1) throw DomainError("Gamma weight needs n >= 1");
    log_norm_ = std::lgamma(static_cast<double>(n));
  }

  double operator()(double s) const {
    if (s < 0.0) return 0.0;
    if (n == 1) return std::exp(-s);
    if (s == 0.0) return 0.0;
    return std::exp((n - 1) * std::log(s) - s - log_norm_);
  }

 private:
  double log_norm_ = 0.0;
};

template <class T, class Enable = void>
struct Magnitude;

template <>
struct Magnitude<double> {
  static double of(double v) { return std::abs(v); }
};

template <>
struct Magnitude<std::complex<double>> {
  static double of(const std::complex<double>& v) { return std::abs(v); }
};

template <class T>
struct QuadratureResult {
  T value;
  double error = 0.0;
  double l1 = 0.0;  // estimate of the integral of |f|
  int panels = 0;
};

namespace detail {

inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Kronrod abscissae (descending) and weights; Gauss weights sit on the odd slots.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Panel {
  double a;
  double b;
  T value;
  double error;
  double l1;
};

template <class T, class F>
Panel<T> gauss_kronrod_15(F& f, double a, double b) {
  using M = Magnitude<T>;
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  T fc = f(center);
  T resk = fc * kWgk[7];
  T resg = fc * kWg[3];
  double resabs = kWgk[7] * M::of(fc);

  T fv1[7];
  T fv2[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    fv1[j] = f(center - dx);
    fv2[j] = f(center + dx);
    resk = resk + (fv1[j] + fv2[j]) * kWgk[j];
    resabs += kWgk[j] * (M::of(fv1[j]) + M::of(fv2[j]));
    if (j % 2 == 1) resg = resg + (fv1[j] + fv2[j]) * kWg[j / 2];
  }

  const T mean = resk * 0.5;
  double resasc = kWgk[7] * M::of(fc - mean);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (M::of(fv1[j] - mean) + M::of(fv2[j] - mean));
  }

  const double scale = std::abs(half);
  double err = M::of(resk - resg) * scale;
  resasc *= scale;
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  return Panel<T>{a, b, resk * half, err, resabs * scale};
}

inline std::vector<double> panel_edges(double a, double b, std::span<const double> breakpoints) {
  std::vector<double> edges{a};
  for (double p : breakpoints) {
    if (std::isfinite(p) && p > a && p < b) edges.push_back(p);
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace detail

/// Globally adaptive G7/K15 integration of f over [a, b]. The interval is
/// first split at every breakpoint strictly inside (a, b); the worst panel is
/// bisected until the summed error estimate meets
///   max(abs_tol, rel_tol |I|, 50 eps \int|f|).
template <class F>
auto integrate_detailed(F&& f, double a, double b, const QuadratureSpec& spec,
                        std::span<const double> breakpoints = {})
    -> QuadratureResult<std::decay_t<std::invoke_result_t<F&, double>>> {
  using T = std::decay_t<std::invoke_result_t<F&, double>>;
  using M = Magnitude<T>;
  using detail::Panel;

  if (!(a <= b)) throw DomainError("integrate: need a <= b");
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("integrate: finite limits required");

  if (a == b) {
    if constexpr (std::is_same_v<T, double> || std::is_same_v<T, std::complex<double>>) {
      return {T{}, 0.0, 0.0, 0};
    } else {
      return {T(f(a) * 0.0), 0.0, 0.0, 0};
    }
  }

  const auto edges = detail::panel_edges(a, b, breakpoints);
  std::vector<Panel<T>> panels;
  panels.reserve(std::max<std::size_t>(64, edges.size() * 4));
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    panels.push_back(detail::gauss_kronrod_15<T>(f, edges[i], edges[i + 1]));
  }
  const auto by_error = [](const Panel<T>& x, const Panel<T>& y) { return x.error < y.error; };
  std::make_heap(panels.begin(), panels.end(), by_error);

  constexpr double kRoundoff = 50.0 * std::numeric_limits<double>::epsilon();
  const auto totals = [&]() {
    // Sum in interval order so the result does not depend on heap layout.
    std::vector<const Panel<T>*> ordered;
    ordered.reserve(panels.size());
    for (const auto& p : panels) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(), [](auto* x, auto* y) { return x->a < y->a; });
    QuadratureResult<T> r{ordered.front()->value, 0.0, 0.0, static_cast<int>(panels.size())};
    for (std::size_t i = 1; i < ordered.size(); ++i) r.value = r.value + ordered[i]->value;
    for (const auto* p : ordered) {
      r.error += p->error;
      r.l1 += p->l1;
    }
    return r;
  };

  double error = 0.0;
  double l1 = 0.0;
  for (const auto& p : panels) {
    error += p.error;
    l1 += p.l1;
  }
  T value = panels.front().value;
  for (std::size_t i = 1; i < panels.size(); ++i) value = value + panels[i].value;

  while (true) {
    const double tol = std::max({spec.abs_tol, spec.rel_tol * M::of(value), kRoundoff * l1});
    if (error <= tol) return totals();
    if (static_cast<int>(panels.size()) >= spec.max_panels) {
      throw QuadratureError("quadrature did not converge on [" + detail::short_number(a) + ", " +
                            detail::short_number(b) + "] within " + std::to_string(spec.max_panels) +
                            " panels (error " + detail::short_number(error) + ", tolerance " +
                            detail::short_number(tol) + ")");
    }
    std::pop_heap(panels.begin(), panels.end(), by_error);
    Panel<T> worst = std::move(panels.back());
    panels.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw QuadratureError("quadrature panel underflow near " + detail::short_number(worst.a));
    }
    auto left = detail::gauss_kronrod_15<T>(f, worst.a, mid);
    auto right = detail::gauss_kronrod_15<T>(f, mid, worst.b);
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    value = value + (left.value + right.value - worst.value);
    panels.push_back(std::move(left));
    std::push_heap(panels.begin(), panels.end(), by_error);
    panels.push_back(std::move(right));
    std::push_heap(panels.begin(), panels.end(), by_error);
    error = std::max(error, 0.0);
  }
}

template <class F>
auto integrate(F&& f, double a, double b, const QuadratureSpec& spec,
               std::span<const double> breakpoints = {}) {
  return integrate_detailed(std::forward<F>(f), a, b, spec, breakpoints).value;
}

/// Interval carrying all but truncation_epsilon of the Gamma(n, 1) mass,
/// also against integrands growing like s^growth_degree. Never narrower than
/// n ± 12 sqrt(n).
struct GammaWindow {
  double lo = 0.0;
  double hi = 0.0;
};

inline GammaWindow gamma_window(int n, double truncation_epsilon, double growth_degree = 2.0) {
  // inverse incomplete gamma is costly and the same few shapes recur
  thread_local std::map<std::tuple<int, double, double>, GammaWindow> cache;
  const auto key = std::make_tuple(n, truncation_epsilon, growth_degree);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const double nn = n;
  const double spread = 12.0 * std::sqrt(nn);
  const double eps = std::clamp(truncation_epsilon, 1e-300, 0.5);
  GammaWindow w;
  w.lo = std::max(0.0, std::min(nn - spread, boost::math::gamma_p_inv(nn, eps)));
  w.hi = std::max(nn + spread, boost::math::gamma_q_inv(nn + growth_degree, eps));
  if (cache.size() > 4096) cache.clear();
  cache.emplace(key, w);
  return w;
}

/// (1/(n-1)!) \int_0^upper s^{n-1} e^{-s} g(s) ds.
///
/// The range is cut to gamma_window(n) and split at s = n, at n ± 3 sqrt(n),
/// n ± 6 sqrt(n), and at every caller-declared kink. `upper` truncates the
/// integral (it is also treated as a kink).
template <class G>
auto gamma_weight_integrate(G&& g, int n, const QuadratureSpec& spec,
                            std::span<const double> kinks = {},
                            double upper = std::numeric_limits<double>::infinity()) {
  const GammaWeight weight(n);
  const GammaWindow window = gamma_window(n, spec.truncation_epsilon);
  const double lo = window.lo;
  const double hi = std::max(lo, std::min(window.hi, upper));

  const double nn = n;
  const double root = std::sqrt(nn);
  std::vector<double> breaks{nn, nn - 3 * root, nn + 3 * root, nn - 6 * root, nn + 6 * root};
  breaks.insert(breaks.end(), kinks.begin(), kinks.end());

  auto integrand = [&](double s) { return g(s) * weight(s); };
  return integrate(integrand, lo, hi, spec, breaks);
}

struct MomentRecord {
  int n = 0;
  double id1 = 0.0;  // \int w      -> 1
  double id2 = 0.0;  // \int w (1 - s/n)   -> 0
  double id3 = 0.0;  // \int w (1 - s/n)^2 -> 1/n
  double dev1 = 0.0;
  double dev2 = 0.0;
  double dev3 = 0.0;
  bool pass = false;
};

inline constexpr double kMomentTolerance = 1e-9;

/// The three Gamma-moment identities for n = 1..n_max.
inline std::vector<MomentRecord> moment_identity_suite(int n_max,
                                                       const QuadratureSpec& spec = {}) {
  if (n_max < 1 || n_max > 1024) throw DomainError("moment suite needs 1 <= n_max <= 1024");
  std::vector<MomentRecord> out;
  out.reserve(n_max);
  for (int n = 1; n <= n_max; ++n) {
    const double nn = n;
    MomentRecord r;
    r.n = n;
    r.id1 = gamma_weight_integrate([](double) { return 1.0; }, n, spec);
    r.id2 = gamma_weight_integrate([nn](double s) { return 1.0 - s / nn; }, n, spec);
    r.id3 = gamma_weight_integrate(
        [nn](double s) {
          const double d = 1.0 - s / nn;
          return d * d;
        },
        n, spec);
    r.dev1 = std::abs(r.id1 - 1.0);
    r.dev2 = std::abs(r.id2);
    r.dev3 = std::abs(r.id3 - 1.0 / nn);
    r.pass = r.dev1 < kMomentTolerance && r.dev2 < kMomentTolerance && r.dev3 < kMomentTolerance;
    out.push_back(r);
  }
  return out;
}

namespace detail {

/// Smallest V = V0 * 2^k such that samples of |g| on [V, 2V] fall below
/// truncation_epsilon times the largest magnitude seen so far.
template <class G>
double halfline_cutoff(G& g, double decay_rate, double start, const QuadratureSpec& spec) {
  using T = std::decay_t<std::invoke_result_t<G&, double>>;
  using M = Magnitude<T>;
  const double unit = 1.0 / decay_rate;

  double scale = 0.0;
  for (int i = 0; i < 32; ++i) scale = std::max(scale, M::of(g(4.0 * unit * (i + 0.5) / 32.0)));

  double cutoff = std::max(unit, start);
  for (int k = 0; k < 64; ++k) {
    double tail = 0.0;
    for (int j = 0; j <= 16; ++j) tail = std::max(tail, M::of(g(cutoff * (1.0 + j / 16.0))));
    if (!std::isfinite(tail)) {
      throw InvalidHintError("half-line integrand is not finite near v = " + short_number(cutoff));
    }
    if (tail <= spec.truncation_epsilon * scale || (tail == 0.0 && scale == 0.0)) return cutoff;
    if (decay_rate * cutoff > 800.0) {
      throw InvalidHintError("half-line integrand does not decay at the hinted rate " +
                             short_number(decay_rate) + " (|g| = " + short_number(tail) +
                             " at v = " + short_number(cutoff) + ")");
    }
    scale = std::max(scale, tail);
    cutoff *= 2.0;
  }
  throw InvalidHintError("half-line cutoff search exhausted");
}

}  // namespace detail

/// \int_0^inf g(v) dv for |g(v)| <= C e^{-decay_rate v} eventually.
///
/// The range is truncated at the first V (doubling search) past which sampled
/// |g| is below truncation_epsilon relative to its observed size, then split
/// at 2^k / decay_rate, at declared kinks and, if panel_length > 0, every
/// panel_length.
template <class G>
auto halfline_integrate(G&& g, double decay_rate, const QuadratureSpec& spec,
                        std::span<const double> kinks = {}, double panel_length = 0.0) {
  if (!(decay_rate > 0.0) || !std::isfinite(decay_rate)) {
    throw DomainError("halfline_integrate needs a positive decay rate");
  }
  double start = 0.0;
  for (double k : kinks) start = std::max(start, k);
  const double cutoff = detail::halfline_cutoff(g, decay_rate, start, spec);

  std::vector<double> breaks(kinks.begin(), kinks.end());
  for (double b = 1.0 / decay_rate; b < cutoff; b *= 2.0) breaks.push_back(b);
  if (panel_length > 0.0) {
    const double count = cutoff / panel_length;
    const double max_extra = spec.max_panels / 2.0;
    const double step = count > max_extra ? panel_length * std::ceil(count / max_extra) : panel_length;
    for (double b = step; b < cutoff; b += step) breaks.push_back(b);
  }
  return integrate(g, 0.0, cutoff, spec, breaks);
}

/// \int_0^inf e^{-s z} m(s) ds for Re z > 0; panels follow the oscillation
/// period pi / |Im z|.
template <class Fm>
std::complex<double> laplace_transform(Fm&& m, std::complex<double> z, const QuadratureSpec& spec,
                                       std::span<const double> kinks = {}) {
  if (!(z.real() > 0.0)) throw DomainError("laplace_transform needs Re z > 0");
  auto integrand = [&](double s) { return std::exp(-s * z) * m(s); };
  const double period = z.imag() != 0.0 ? std::numbers::pi / std::abs(z.imag()) : 0.0;
  return halfline_integrate(integrand, z.real(), spec, kinks, period);
}

}  // namespace euler_rates
