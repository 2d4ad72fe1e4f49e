#pragma once

// Scalar symbols of the Euler (backward) approximation:
//   e_t(z)       = exp(-t z)
//   r_{n,t}(z)   = (1 + t z / n)^{-n}
//   Delta_{n,t}  = r_{n,t} - e_t
// evaluated on the closed right half plane.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "euler_rates/errors.hpp"

namespace euler_rates {

using Complex = std::complex<double>;

/// Slack used for every floating-point check of a strict inequality.
inline constexpr double kInequalitySlack = 1e-12;

/// 1 - 1/sqrt(2): lower bound of |Delta_{n,t}(±i sqrt(n)/t)|.
inline constexpr double kImaginaryProbeBound = 1.0 - 1.0 / std::numbers::sqrt2;

/// Below this |t z| the small-z ratio switches to its series expansion.
inline constexpr double kSmallZSeriesThreshold = 1e-4;

struct ScalarPoint {
  Complex z;
  int n = 1;
  double t = 1.0;

  double step() const { return t / n; }

  void validate() const {
    if (n < 1) throw DomainError("n must be >= 1");
    if (!(t > 0.0)) throw DomainError("t must be > 0");
    if (z.real() < 0.0) throw DomainError("Re z must be >= 0");
  }
};

namespace detail {

inline void check_steps(int n, double t) {
  if (n < 1) throw DomainError("n must be >= 1, got " + std::to_string(n));
  if (!(t > 0.0)) throw DomainError("t must be > 0");
}

/// log(1 + w) without losing the real part when |w| is tiny.
inline Complex log1p(Complex w) {
  if (std::abs(w) > 0.5) return std::log(1.0 + w);
  const double a = w.real();
  const double b = w.imag();
  return {0.5 * std::log1p(a * (2.0 + a) + b * b), std::atan2(b, 1.0 + a)};
}

}  // namespace detail

/// e^{-t z}.
inline Complex semigroup_scalar(Complex z, double t) {
  if (!(t >= 0.0)) throw DomainError("t must be >= 0");
  return std::exp(-t * z);
}

/// (1 + t z / n)^{-n}, computed as exp(-n Log(1 + t z / n)) so that n in the
/// millions neither overflows nor loses the phase.
inline Complex euler_rational(Complex z, int n, double t) {
  detail::check_steps(n, t);
  const Complex w = (t / n) * z;
  if (w == Complex(-1.0, 0.0)) throw PoleError("1 + t z / n = 0");
  return std::exp(-static_cast<double>(n) * detail::log1p(w));
}

inline Complex delta_scalar(Complex z, int n, double t) {
  return euler_rational(z, n, t) - semigroup_scalar(z, t);
}

inline Complex euler_rational(const ScalarPoint& p) { return euler_rational(p.z, p.n, p.t); }
inline Complex delta_scalar(const ScalarPoint& p) { return delta_scalar(p.z, p.n, p.t); }

/// Delta_{n,t}(z) / z^2. For |t z| below kSmallZSeriesThreshold the Taylor
/// series of both symbols is used (four terms of the quotient); otherwise the
/// quotient is formed directly.
inline Complex delta_over_z_squared(Complex z, int n, double t) {
  detail::check_steps(n, t);
  if (std::abs(t * z) < kSmallZSeriesThreshold) {
    const double nn = n;
    const double c2 = t * t / (2.0 * nn);
    const double c3 = -std::pow(t, 3) * (3.0 * nn + 2.0) / (6.0 * nn * nn);
    const double c4 = std::pow(t, 4) * (6.0 * nn * nn + 11.0 * nn + 6.0) / (24.0 * nn * nn * nn);
    const double c5 = -std::pow(t, 5) * (((10.0 * nn + 35.0) * nn + 50.0) * nn + 24.0) /
                      (120.0 * nn * nn * nn * nn);
    return c2 + z * (c3 + z * (c4 + z * c5));
  }
  return delta_scalar(z, n, t) / (z * z);
}

/// Delta_{n,t}(z) / z^2 for small real z > 0; tends to t^2 / (2n).
inline double delta_small_z_ratio(int n, double t, double z) {
  if (!(z > 0.0 && z <= 1e-3)) throw DomainError("small-z ratio needs 0 < z <= 1e-3");
  return delta_over_z_squared(Complex(z, 0.0), n, t).real();
}

struct LowerBoundProbe {
  double value = 0.0;
  double bound = kImaginaryProbeBound;
  bool holds = false;
};

/// |Delta_{n,t}(sign * i sqrt(n) / t)| against 1 - 1/sqrt(2). The value does
/// not depend on t: t z / n = ±i / sqrt(n) and t z = ±i sqrt(n).
inline LowerBoundProbe delta_lower_bound_probe(int n, double t, int sign) {
  detail::check_steps(n, t);
  if (sign != 1 && sign != -1) throw DomainError("sign must be +1 or -1");
  const Complex z(0.0, sign * std::sqrt(static_cast<double>(n)) / t);
  LowerBoundProbe probe;
  probe.value = std::abs(delta_scalar(z, n, t));
  probe.holds = probe.value >= probe.bound - kInequalitySlack;
  return probe;
}

}  // namespace euler_rates
