#pragma once

// Generator models (sampled spectra and dense matrices) and the operator-level
// checks: semigroup and Euler application, f(A) through resolvents, Komatsu
// and Favard norms, the upper bounds 12 M f(sqrt(n)/t) and
// 8 M (t/sqrt(n))^alpha ||x||_{D^alpha}, and the spectral lower bound
// c f(sqrt(n)/t).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "euler_rates/errors.hpp"
#include "euler_rates/parallel.hpp"
#include "euler_rates/quadrature.hpp"
#include "euler_rates/scalar.hpp"
#include "euler_rates/stieltjes.hpp"
#include "json.hpp"

namespace euler_rates {

using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

template <>
struct Magnitude<Vector> {
  static double of(const Vector& v) { return v.norm(); }
};

/// 1/2 (1 - 1/sqrt(2)).
inline constexpr double kSharpnessConstant = 0.5 * (1.0 - 1.0 / std::numbers::sqrt2);
inline constexpr double kRatioSlack = 1e-6;

enum class NormModel { l2, linf };

struct DiagonalGenerator {
  std::vector<Complex> eigenvalues;
  std::vector<std::string> labels;
  NormModel norm_model = NormModel::l2;

  void validate() const {
    if (eigenvalues.empty()) throw DomainError("diagonal generator needs at least one eigenvalue");
    for (const Complex& z : eigenvalues) {
      if (!(z.real() >= 0.0) || !std::isfinite(z.imag())) throw DomainError("eigenvalues need Re z >= 0");
    }
    if (!labels.empty() && labels.size() != eigenvalues.size())
      throw DimensionError("labels must match the eigenvalue count");
  }

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  double M() const { return 1.0; }
  bool injective() const {
    return std::none_of(eigenvalues.begin(), eigenvalues.end(), [](Complex z) { return z == Complex{}; });
  }
};

struct SemigroupBound {
  double M = 1.0;
  double max_sampled = 1.0;
  double argmax_t = 0.0;
};

/// Samples ||e^{-tA}||_2 on t = 10^{-3..3} (25 points); M = 1.05 * max.
inline SemigroupBound estimate_semigroup_bound(const Matrix& a) {
  SemigroupBound b;
  b.max_sampled = 1.0;
  for (int j = 0; j < 25; ++j) {
    const double t = std::pow(10.0, -3.0 + 6.0 * j / 24.0);
    const Matrix e = (-t * a).exp();
    const double s = Eigen::JacobiSVD<Matrix>(e).singularValues()(0);
    if (s > b.max_sampled) {
      b.max_sampled = s;
      b.argmax_t = t;
    }
  }
  b.M = 1.05 * b.max_sampled;
  return b;
}

struct MatrixGenerator {
  Matrix matrix;
  double M = 0.0;  // 0 means estimate

  static MatrixGenerator with_estimated_bound(Matrix a) {
    MatrixGenerator g{std::move(a), 0.0};
    g.validate();
    g.M = estimate_semigroup_bound(g.matrix).M;
    return g;
  }

  void validate() const {
    if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) throw DimensionError("matrix must be square");
    if (!matrix.allFinite()) throw DomainError("matrix entries must be finite");
    if (M > 0.0) {
      const SemigroupBound b = estimate_semigroup_bound(matrix);
      if (b.max_sampled > M * (1.0 + 1e-6)) {
        throw DomainError("sampled ||e^{-tA}|| = " + std::to_string(b.max_sampled) + " exceeds M = " +
                          std::to_string(M));
      }
    }
  }

  int dim() const { return static_cast<int>(matrix.rows()); }
};

using Generator = std::variant<DiagonalGenerator, MatrixGenerator>;

inline int dim(const Generator& g) {
  return std::visit([](const auto& a) { return a.dim(); }, g);
}

inline double semigroup_bound(const DiagonalGenerator& g) { return g.M(); }
inline double semigroup_bound(const MatrixGenerator& g) { return g.M; }
inline double semigroup_bound(const Generator& g) {
  return std::visit([](const auto& a) { return semigroup_bound(a); }, g);
}

inline double vector_norm(const DiagonalGenerator& g, const Vector& x) {
  return g.norm_model == NormModel::linf ? x.lpNorm<Eigen::Infinity>() : x.norm();
}
inline double vector_norm(const MatrixGenerator&, const Vector& x) { return x.norm(); }
inline double vector_norm(const Generator& g, const Vector& x) {
  return std::visit([&](const auto& a) { return vector_norm(a, x); }, g);
}

namespace detail {

template <class G>
void check_dim(const G& g, const Vector& x) {
  if (x.size() != g.dim()) {
    throw DimensionError("vector of length " + std::to_string(x.size()) + " for a generator of dimension " +
                         std::to_string(g.dim()));
  }
}

inline Complex expm1(Complex w) {
  if (std::abs(w) < 1e-5) return w * (1.0 + w * (0.5 + w / 6.0));
  return std::exp(w) - 1.0;
}

/// LU of (shift I + scale A) with a conditioning check.
inline Eigen::PartialPivLU<Matrix> factor(const Matrix& a, Complex shift, double scale) {
  const Matrix b = shift * Matrix::Identity(a.rows(), a.cols()) + scale * a;
  Eigen::PartialPivLU<Matrix> lu(b);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) throw SingularSolveError("resolvent matrix is numerically singular (rcond " + short_number(rc) + ")");
  return lu;
}

template <class Fn>
Vector map_diagonal(const DiagonalGenerator& g, const Vector& x, Fn&& fn) {
  check_dim(g, x);
  Vector y(x.size());
  for (int k = 0; k < x.size(); ++k) y(k) = fn(g.eigenvalues[k]) * x(k);
  return y;
}

}  // namespace detail

// ----------------------------------------------------- semigroup and Euler

inline Vector semigroup_apply(const DiagonalGenerator& g, double t, const Vector& x) {
  if (!(t >= 0.0)) throw DomainError("t must be >= 0");
  return detail::map_diagonal(g, x, [t](Complex z) { return semigroup_scalar(z, t); });
}

inline Vector semigroup_apply(const MatrixGenerator& g, double t, const Vector& x) {
  if (!(t >= 0.0)) throw DomainError("t must be >= 0");
  detail::check_dim(g, x);
  if (t == 0.0) return x;
  const Matrix e = (-t * g.matrix).exp();
  return e * x;
}

inline Vector euler_apply(const DiagonalGenerator& g, int n, double t, const Vector& x) {
  detail::check_steps(n, t);
  return detail::map_diagonal(g, x, [n, t](Complex z) { return euler_rational(z, n, t); });
}

/// n solves with I + (t/n) A, one factorization.
inline Vector euler_apply(const MatrixGenerator& g, int n, double t, const Vector& x) {
  detail::check_steps(n, t);
  detail::check_dim(g, x);
  const auto lu = detail::factor(g.matrix, 1.0, t / n);
  Vector y = x;
  for (int j = 0; j < n; ++j) y = lu.solve(y);
  return y;
}

inline Vector delta_apply(const DiagonalGenerator& g, int n, double t, const Vector& x) {
  detail::check_steps(n, t);
  return detail::map_diagonal(g, x, [n, t](Complex z) { return delta_scalar(z, n, t); });
}

inline Vector delta_apply(const MatrixGenerator& g, int n, double t, const Vector& x) {
  return euler_apply(g, n, t, x) - semigroup_apply(g, t, x);
}

inline Vector semigroup_apply(const Generator& g, double t, const Vector& x) {
  return std::visit([&](const auto& a) { return semigroup_apply(a, t, x); }, g);
}
inline Vector euler_apply(const Generator& g, int n, double t, const Vector& x) {
  return std::visit([&](const auto& a) { return euler_apply(a, n, t, x); }, g);
}
inline Vector delta_apply(const Generator& g, int n, double t, const Vector& x) {
  return std::visit([&](const auto& a) { return delta_apply(a, n, t, x); }, g);
}

// ------------------------------------------------------ functional calculus

namespace detail {

inline Complex evaluate_on_spectrum(const StieltjesRep& f, Complex z, const QuadratureSpec& spec) {
  try {
    return evaluate(f, z, spec);
  } catch (const DivergenceError& e) {
    throw NonInjectiveError(std::string("f(A) needs an injective A: ") + e.what());
  }
}

/// (A + tau)^{-alpha} x for alpha in {1, 2}.
inline Vector resolvent_power(const Matrix& a, double tau, double alpha, const Vector& x) {
  if (alpha != 1.0 && alpha != 2.0) throw DomainError("matrix resolvent path needs alpha = 1 or 2");
  try {
    const auto lu = factor(a, tau, 1.0);
    Vector y = lu.solve(x);
    if (alpha == 2.0) y = lu.solve(y);
    return y;
  } catch (const SingularSolveError& e) {
    if (tau == 0.0) throw NonInjectiveError(std::string("tau = 0 resolvent of a non-injective A: ") + e.what());
    throw;
  }
}

}  // namespace detail

/// f(A) x coordinate-wise: f(z_k) x_k.
inline Vector function_apply(const StieltjesRep& f, const DiagonalGenerator& g, const Vector& x,
                             const QuadratureSpec& spec = {}) {
  f.validate();
  return detail::map_diagonal(g, x, [&](Complex z) { return detail::evaluate_on_spectrum(f, z, spec); });
}

/// f(A) x = a x + sum_j w_j (A + tau_j)^{-alpha} x + \int (A + tau)^{-alpha} x c tau^p dtau,
/// every quadrature node being a resolvent application.
inline Vector function_apply_quadrature(const StieltjesRep& f, const DiagonalGenerator& g, const Vector& x,
                                        const QuadratureSpec& spec = {}) {
  f.validate();
  detail::check_dim(g, x);
  if (!g.injective() && f.has_mass_at_zero()) {
    for (const Complex& z : g.eigenvalues)
      if (z == Complex{}) detail::evaluate_on_spectrum(f, z, spec);
  }
  double scale = 1.0;
  for (const Complex& z : g.eigenvalues) scale = std::max(scale, std::abs(z));
  auto kernel = [&](double tau) -> Vector {
    Vector y(x.size());
    for (int k = 0; k < x.size(); ++k) {
      const Complex z = g.eigenvalues[k];
      y(k) = (z == Complex{} && tau == 0.0) ? Complex{} : detail::shifted_power(z, tau, f.alpha) * x(k);
    }
    return y;
  };
  return f.a * x + integrate_measure(f, kernel, spec, scale, Vector(Vector::Zero(x.size())));
}

inline Vector function_apply_quadrature(const StieltjesRep& f, const MatrixGenerator& g, const Vector& x,
                                        const QuadratureSpec& spec = {}) {
  f.validate();
  detail::check_dim(g, x);
  const double scale = std::max(1.0, g.matrix.norm());
  auto kernel = [&](double tau) -> Vector { return detail::resolvent_power(g.matrix, tau, f.alpha, x); };
  return f.a * x + integrate_measure(f, kernel, spec, scale, Vector(Vector::Zero(x.size())));
}

inline Vector function_apply(const StieltjesRep& f, const MatrixGenerator& g, const Vector& x,
                             const QuadratureSpec& spec = {}) {
  return function_apply_quadrature(f, g, x, spec);
}

inline Vector function_apply(const StieltjesRep& f, const Generator& g, const Vector& x,
                             const QuadratureSpec& spec = {}) {
  return std::visit([&](const auto& a) { return function_apply(f, a, x, spec); }, g);
}

/// (f1 f2)(A) x = f1(A) f2(A) x.
template <class G>
Vector function_apply(const ProductStieltjes& f, const G& g, const Vector& x, const QuadratureSpec& spec = {}) {
  f.validate();
  return function_apply(f.f1, g, function_apply(f.f2, g, x, spec), spec);
}

/// A^{-alpha} x through the order-2 representation of z^{-alpha}.
template <class G>
Vector fractional_power_apply(const G& g, double alpha, const Vector& x, const QuadratureSpec& spec = {}) {
  return function_apply(power_rep(alpha), g, x, spec);
}

/// A^alpha x, principal branch.
inline Vector forward_power_apply(const DiagonalGenerator& g, double alpha, const Vector& x) {
  if (!(alpha >= 0.0)) throw DomainError("power must be >= 0");
  return detail::map_diagonal(g, x, [alpha](Complex z) {
    if (z == Complex{}) return alpha == 0.0 ? Complex(1.0) : Complex{};
    return std::pow(z, alpha);
  });
}

inline Vector forward_power_apply(const MatrixGenerator& g, double alpha, const Vector& x) {
  if (!(alpha >= 0.0)) throw DomainError("power must be >= 0");
  detail::check_dim(g, x);
  if (alpha == std::floor(alpha)) {
    Vector y = x;
    for (int j = 0; j < static_cast<int>(alpha); ++j) y = g.matrix * y;
    return y;
  }
  const Matrix p = g.matrix.pow(alpha);
  return p * x;
}

inline Vector forward_power_apply(const Generator& g, double alpha, const Vector& x) {
  return std::visit([&](const auto& a) { return forward_power_apply(a, alpha, x); }, g);
}

/// g(A) x for g = 1/f, f = f1 f2; at z = 0 a singular f gives g(0) = 0.
inline Vector reciprocal_apply(const ProductStieltjes& f, const DiagonalGenerator& g, const Vector& x,
                               double shift = 0.0, const QuadratureSpec& spec = {}) {
  f.validate();
  return detail::map_diagonal(g, x, [&](Complex z) {
    const Complex w = z + shift;
    try {
      return reciprocal_eval(f, w, spec);
    } catch (const DivergenceError&) {
      return Complex{};
    }
  });
}

// ----------------------------------------------------------- Komatsu/Favard

namespace detail {

/// max of h over lambda = 10^{lo..hi} (61 points), refined by golden section
/// in log lambda around the grid argmax to relative width 1e-4.
template <class H>
double log_grid_sup(H&& h, double lo, double hi) {
  constexpr int kPoints = 61;
  std::vector<double> vals(kPoints);
  int best = 0;
  for (int j = 0; j < kPoints; ++j) {
    vals[j] = h(std::pow(10.0, lo + (hi - lo) * j / (kPoints - 1)));
    if (vals[j] > vals[best]) best = j;
  }
  const double step = (hi - lo) / (kPoints - 1);
  double a = lo + step * std::max(best - 1, 0);
  double b = lo + step * std::min(best + 1, kPoints - 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto at = [&](double e) { return h(std::pow(10.0, e)); };
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = at(c);
  double fd = at(d);
  double top = std::max({vals[best], fc, fd});
  const double tol = 1e-4 / std::log(10.0);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = at(d);
    }
    top = std::max({top, fc, fd});
  }
  return top;
}

inline Vector komatsu_vector(const DiagonalGenerator& g, double lambda, const Vector& x) {
  return map_diagonal(g, x, [lambda](Complex z) {
    const Complex r = z / (z + lambda);
    return r * r;
  });
}

inline Vector komatsu_vector(const MatrixGenerator& g, double lambda, const Vector& x) {
  const auto lu = factor(g.matrix, lambda, 1.0);
  Vector y = lu.solve(g.matrix * x);
  return lu.solve(g.matrix * y);
}

inline Vector favard_vector(const DiagonalGenerator& g, double t, const Vector& x) {
  return map_diagonal(g, x, [t](Complex z) {
    const Complex d = detail::expm1(-t * z);
    return d * d;
  });
}

inline Vector favard_vector(const MatrixGenerator& g, double t, const Vector& x) {
  Matrix d = (-t * g.matrix).exp();
  d -= Matrix::Identity(g.dim(), g.dim());
  return d * (d * x);
}

}  // namespace detail

/// [A (A + lambda)^{-1}]^2 x.
template <class G>
Vector komatsu_vector(const G& g, double lambda, const Vector& x) {
  detail::check_dim(g, x);
  return detail::komatsu_vector(g, lambda, x);
}

/// ||x|| + sup_{lambda > 0} lambda^alpha ||[A (A + lambda)^{-1}]^2 x||, lambda in 10^{[-6, 6]}.
template <class G>
double komatsu_norm(const G& g, double alpha, const Vector& x) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("Komatsu norm needs alpha in (0, 2]");
  detail::check_dim(g, x);
  auto h = [&](double lambda) {
    return std::pow(lambda, alpha) * vector_norm(g, detail::komatsu_vector(g, lambda, x));
  };
  return vector_norm(g, x) + detail::log_grid_sup(h, -6.0, 6.0);
}

/// ||x|| + sup_{t > 0} ||(e^{-tA} - I)^2 x|| / t^alpha, t in 10^{[-6, 3]}; for
/// alpha = 2 the t -> 0 limit ||A^2 x|| is included.
template <class G>
double favard_seminorm(const G& g, double alpha, const Vector& x) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("Favard seminorm needs alpha in (0, 2]");
  detail::check_dim(g, x);
  auto h = [&](double t) { return vector_norm(g, detail::favard_vector(g, t, x)) / std::pow(t, alpha); };
  double sup = detail::log_grid_sup(h, -6.0, 3.0);
  if (alpha == 2.0) sup = std::max(sup, vector_norm(g, forward_power_apply(g, 2.0, x)));
  return vector_norm(g, x) + sup;
}

// ------------------------------------------------------------- rate records

struct RateRecord {
  std::string bound;  // th1, corm0, thmint
  int n = 1;
  double t = 1.0;
  double alpha = 0.0;
  double error = 0.0;
  double envelope = 0.0;
  double ratio = 0.0;
  double tail_budget = 0.0;
  double intermediate = std::numeric_limits<double>::quiet_NaN();  // 8 M ||[A(A+lambda)^{-1}]^2 x|| at lambda = sqrt(n)/t

  bool pass() const {
    if (!(ratio <= 1.0 + kRatioSlack)) return false;
    return std::isnan(intermediate) || error <= intermediate * (1.0 + kRatioSlack);
  }
};

inline double safe_ratio(double error, double envelope) {
  if (envelope > 0.0) return error / envelope;
  return error == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

/// ||f(A) Delta x|| against 12 M ||x|| f(sqrt(n)/t). `fx` may carry f(A) x
/// so that sweeps apply f(A) once (f(A) and Delta(A) commute).
template <class G>
RateRecord th1_bound_check(const G& g, const StieltjesRep& f, int n, double t, const Vector& x,
                           const QuadratureSpec& spec = {}, const Vector* fx = nullptr) {
  detail::check_steps(n, t);
  RateRecord r{"th1", n, t};
  r.error = fx ? vector_norm(g, delta_apply(g, n, t, *fx))
               : vector_norm(g, function_apply(f, g, delta_apply(g, n, t, x), spec));
  r.envelope = 12.0 * semigroup_bound(g) * vector_norm(g, x) * evaluate_real(f, std::sqrt(double(n)) / t, spec);
  r.ratio = safe_ratio(r.error, r.envelope);
  return r;
}

/// ||Delta x|| against 12 M ||g(A) x|| / g(sqrt(n)/t), g = 1/f.
template <class G>
RateRecord corm0_bound_check(const G& g, const ProductStieltjes& f, int n, double t, const Vector& x,
                             const QuadratureSpec& spec = {}) {
  detail::check_steps(n, t);
  RateRecord r{"corm0", n, t};
  r.error = vector_norm(g, delta_apply(g, n, t, x));
  const double probe = evaluate(f, Complex(std::sqrt(double(n)) / t, 0.0), spec).real();
  r.envelope = 12.0 * semigroup_bound(g) * vector_norm(g, reciprocal_apply(f, g, x, 0.0, spec)) * probe;
  r.ratio = safe_ratio(r.error, r.envelope);
  return r;
}

/// The g = z^alpha case: ||Delta x|| against 12 M ||A^alpha x|| (t/sqrt(n))^alpha.
template <class G>
RateRecord corm0_power_check(const G& g, double alpha, int n, double t, const Vector& x) {
  detail::check_steps(n, t);
  RateRecord r{"corm0", n, t, alpha};
  r.error = vector_norm(g, delta_apply(g, n, t, x));
  r.envelope = 12.0 * semigroup_bound(g) * vector_norm(g, forward_power_apply(g, alpha, x)) *
               std::pow(t / std::sqrt(double(n)), alpha);
  r.ratio = safe_ratio(r.error, r.envelope);
  return r;
}

/// ||Delta x|| against 8 M (t/sqrt(n))^alpha ||x||_{D^alpha}; `intermediate` is
/// 2 M (1 + lambda t/sqrt(n))^2 ||[A(A+lambda)^{-1}]^2 x|| at lambda = sqrt(n)/t.
template <class G>
RateRecord thmint_bound_check(const G& g, double alpha, int n, double t, const Vector& x,
                              double komatsu = std::numeric_limits<double>::quiet_NaN()) {
  detail::check_steps(n, t);
  RateRecord r{"thmint", n, t, alpha};
  const double m = semigroup_bound(g);
  const double lambda = std::sqrt(double(n)) / t;
  if (std::isnan(komatsu)) komatsu = komatsu_norm(g, alpha, x);
  r.error = vector_norm(g, delta_apply(g, n, t, x));
  r.envelope = 8.0 * m * std::pow(t / std::sqrt(double(n)), alpha) * komatsu;
  r.intermediate = 8.0 * m * vector_norm(g, komatsu_vector(g, lambda, x));
  r.ratio = safe_ratio(r.error, r.envelope);
  return r;
}

// -------------------------------------------------------------- sharpness

struct SharpnessRecord {
  int n = 1;
  double t = 1.0;
  double opnorm = 0.0;
  double lower = 0.0;
  double upper = 0.0;  // 12 M f(sqrt(n)/t)
  double sandwich = 0.0;  // opnorm / upper
  Complex argmax;
  bool holds = false;
};

inline constexpr double kSharpnessSlack = 1e-12;

/// max_k |f(z_k) Delta_{n,t}(z_k)| against c f(sqrt(n)/t); the probe
/// i sqrt(n)/t or -i sqrt(n)/t must be an eigenvalue.
inline SharpnessRecord sharpness_check(const DiagonalGenerator& g, const ProductStieltjes& f, int n, double t,
                                       const QuadratureSpec& spec = {}) {
  detail::check_steps(n, t);
  f.validate();
  const double s = std::sqrt(double(n)) / t;
  const double tol = 1e-12 * std::max(1.0, s);
  const bool found = std::any_of(g.eigenvalues.begin(), g.eigenvalues.end(), [&](Complex z) {
    return std::abs(z - Complex(0.0, s)) <= tol || std::abs(z - Complex(0.0, -s)) <= tol;
  });
  if (!found) throw MissingProbeError("spectrum lacks the probe eigenvalue +-i " + detail::short_number(s));
  SharpnessRecord r{n, t};
  for (const Complex& z : g.eigenvalues) {
    if (z == Complex{}) continue;
    const double v = std::abs(evaluate(f, z, spec) * delta_scalar(z, n, t));
    if (v > r.opnorm) {
      r.opnorm = v;
      r.argmax = z;
    }
  }
  const double fs = evaluate(f, Complex(s, 0.0), spec).real();
  r.lower = kSharpnessConstant * fs;
  r.upper = 12.0 * g.M() * fs;
  r.sandwich = r.opnorm / r.upper;
  r.holds = r.opnorm >= r.lower - kSharpnessSlack && r.opnorm <= r.upper * (1.0 + kRatioSlack);
  return r;
}

struct TrendRow {
  double cutoff = 0.0;
  int n = 1;
  double opnorm = 0.0;
  double f_value = 0.0;
  double ratio = 0.0;
};

/// For spectrum i 2^k (k = 0..K) and n = (2^K t)^2: the ratio
/// max |f Delta_{n,t}| / f(sqrt(n)/t) over growing cutoffs 2^K.
inline std::vector<TrendRow> sharpness_trend(const ProductStieltjes& f, double t, int levels,
                                             const QuadratureSpec& spec = {}) {
  if (!(t > 0.0)) throw DomainError("t must be > 0");
  std::vector<TrendRow> rows;
  for (int level = 0; level < levels; ++level) {
    TrendRow row;
    row.cutoff = std::ldexp(1.0, level);
    const double target = row.cutoff * t;
    row.n = std::max(1, static_cast<int>(std::lround(target * target)));
    for (int k = 0; k <= level; ++k) {
      const Complex z(0.0, std::ldexp(1.0, k));
      row.opnorm = std::max(row.opnorm, std::abs(evaluate(f, z, spec) * delta_scalar(z, row.n, t)));
    }
    row.f_value = evaluate(f, Complex(std::sqrt(double(row.n)) / t, 0.0), spec).real();
    row.ratio = row.opnorm / row.f_value;
    rows.push_back(row);
  }
  return rows;
}

// --------------------------------------------------------------- limits

/// ||g(A + delta) x - g(A) x|| along the given shifts, g = 1/f.
inline std::vector<double> shifted_calculus_limit(const DiagonalGenerator& g, const ProductStieltjes& f,
                                                  const Vector& x, const std::vector<double>& deltas,
                                                  const QuadratureSpec& spec = {}) {
  const Vector base = reciprocal_apply(f, g, x, 0.0, spec);
  std::vector<double> out;
  for (double d : deltas) {
    if (!(d > 0.0)) throw DomainError("shifts must be positive");
    out.push_back(vector_norm(g, reciprocal_apply(f, g, x, d, spec) - base));
  }
  return out;
}

struct DivergenceSweep {
  double alpha = 0.0;
  std::vector<double> floors;
  std::vector<double> sups;
  std::vector<double> predictions;  // floor^{2-alpha} t^2/(2n)
  double growth = 0.0;              // last / first
  bool diverges = false;            // growth > 1e2
};

/// sup over {eps, 2 eps, ..., 1} of |z^{-alpha} Delta_{n,t}(z)| for each floor eps.
inline DivergenceSweep alpha_gt2_divergence(int n, double t, double alpha, const std::vector<double>& floors) {
  detail::check_steps(n, t);
  if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
  if (floors.empty()) throw DomainError("floor sequence is empty");
  DivergenceSweep s{alpha, floors};
  for (double eps : floors) {
    if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("floors must lie in (0, 1]");
    const auto count = static_cast<long>(std::floor(1.0 / eps + 1e-9));
    double sup = 0.0;
    for (long k = 1; k <= count; ++k) {
      const double z = eps * k;
      const double v = std::pow(z, 2.0 - alpha) * std::abs(delta_over_z_squared(Complex(z, 0.0), n, t));
      sup = std::max(sup, v);
    }
    s.sups.push_back(sup);
    s.predictions.push_back(std::pow(eps, 2.0 - alpha) * t * t / (2.0 * n));
  }
  s.growth = s.sups.back() / s.sups.front();
  s.diverges = s.growth > 1e2;
  return s;
}

// ---------------------------------------------------------------- corpora

/// Eigenvalues scale * k / points (k = 1..points, or 0..points) on the
/// imaginary or the real half axis.
inline DiagonalGenerator grid_generator(bool imaginary, double max, int points, bool include_zero = false) {
  if (points < 1) throw DomainError("grid needs at least one point");
  if (!(max > 0.0)) throw DomainError("grid needs max > 0");
  DiagonalGenerator g;
  for (int k = include_zero ? 0 : 1; k <= points; ++k) {
    const double s = max * k / points;
    g.eigenvalues.push_back(imaginary ? Complex(0.0, s) : Complex(s, 0.0));
  }
  return g;
}

/// Multiplication by i s on a grid of (0, max] with every probe i p inserted exactly.
inline DiagonalGenerator multiplication_model(double max, int points, const std::vector<double>& probes) {
  DiagonalGenerator g = grid_generator(true, max, points);
  for (double p : probes) {
    const Complex z(0.0, p);
    if (std::find(g.eigenvalues.begin(), g.eigenvalues.end(), z) == g.eigenvalues.end()) g.eigenvalues.push_back(z);
  }
  std::sort(g.eigenvalues.begin(), g.eigenvalues.end(),
            [](Complex a, Complex b) { return a.imag() < b.imag(); });
  return g;
}

struct RateVector {
  Vector x;
  double tail_budget = 0.0;  // norm of the dropped tail k > dim, relative to the kept part
};

/// x_k = k^{-alpha-0.6} e^{i theta_k}, theta_k from a seeded generator, unit norm.
inline RateVector rate_vector(int dim, double alpha, std::uint64_t seed) {
  if (dim < 1) throw DomainError("dimension must be >= 1");
  std::mt19937_64 rng(seed);
  RateVector rv{Vector(dim)};
  const double p = 2.0 * (alpha + 0.6);
  double kept = 0.0;
  for (int k = 1; k <= dim; ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double mag = std::pow(static_cast<double>(k), -alpha - 0.6);
    rv.x(k - 1) = std::polar(mag, theta);
    kept += mag * mag;
  }
  rv.x /= std::sqrt(kept);
  // sum_{k > dim} k^{-p} ~ \int_{dim+1/2}^inf
  const double tail = std::pow(dim + 0.5, 1.0 - p) / (p - 1.0);
  rv.tail_budget = std::sqrt(tail / kept);
  return rv;
}

/// Deterministic unit vector with seeded complex Gaussian coordinates.
inline Vector random_unit_vector(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  Vector x(dim);
  for (int k = 0; k < dim; ++k) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double th = 2.0 * std::numbers::pi * uniform();
    x(k) = std::polar(r, th);
  }
  return x / x.norm();
}

// ----------------------------------------------------------------- JSON

namespace detail {

inline Complex json_complex(const nlohmann::json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ValidationError(field, "expected a number or [re, im]");
}

inline nlohmann::ordered_json complex_json(Complex z) { return {z.real(), z.imag()}; }

}  // namespace detail

inline Vector vector_from_json(const nlohmann::json& j, const std::string& field = "vector") {
  if (!j.is_array() || j.empty()) throw ValidationError(field, "expected a nonempty array of [re, im]");
  Vector x(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    x(static_cast<int>(i)) = detail::json_complex(j[i], field + "[" + std::to_string(i) + "]");
  }
  return x;
}

inline nlohmann::ordered_json vector_to_json(const Vector& x) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (int k = 0; k < x.size(); ++k) j.push_back(detail::complex_json(x(k)));
  return j;
}

/// {"type":"diagonal","eigenvalues":[[re,im],...],"labels":[...],"norm":"l2"|"linf"},
/// {"type":"matrix","data":[[...],...],"M":...} or
/// {"type":"grid","axis":"imaginary"|"real","max":5,"points":500,"include_zero":false,"probes":[...]}.
inline Generator generator_from_json(const nlohmann::json& j, const std::string& field = "generator") {
  if (!j.is_object()) throw ValidationError(field, "expected an object");
  if (!j.contains("type") || !j["type"].is_string()) throw ValidationError(field + ".type", "missing or not a string");
  const std::string type = j["type"].get<std::string>();
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : j.items()) {
      if (key == "type") continue;
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        throw ValidationError(field + "." + key, "unknown key");
    }
  };
  auto wrap = [&](auto&& build) -> Generator {
    try {
      return build();
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError(field, e.what());
    }
  };
  if (type == "diagonal") {
    allow({"eigenvalues", "labels", "norm"});
    return wrap([&] {
      DiagonalGenerator g;
      if (!j.contains("eigenvalues")) throw ValidationError(field + ".eigenvalues", "missing");
      const auto& ev = j["eigenvalues"];
      if (!ev.is_array()) throw ValidationError(field + ".eigenvalues", "expected an array");
      for (std::size_t i = 0; i < ev.size(); ++i) {
        g.eigenvalues.push_back(detail::json_complex(ev[i], field + ".eigenvalues[" + std::to_string(i) + "]"));
      }
      if (j.contains("labels")) {
        if (!j["labels"].is_array()) throw ValidationError(field + ".labels", "expected an array of strings");
        for (const auto& l : j["labels"]) {
          if (!l.is_string()) throw ValidationError(field + ".labels", "expected an array of strings");
          g.labels.push_back(l.get<std::string>());
        }
      }
      if (j.contains("norm")) {
        const auto& nm = j["norm"];
        if (nm == "l2") {
          g.norm_model = NormModel::l2;
        } else if (nm == "linf") {
          g.norm_model = NormModel::linf;
        } else {
          throw ValidationError(field + ".norm", "expected \"l2\" or \"linf\"");
        }
      }
      g.validate();
      return Generator(g);
    });
  }
  if (type == "matrix") {
    allow({"data", "M"});
    return wrap([&] {
      if (!j.contains("data") || !j["data"].is_array() || j["data"].empty())
        throw ValidationError(field + ".data", "expected a nonempty array of rows");
      const auto& rows = j["data"];
      const auto n = static_cast<int>(rows.size());
      Matrix a(n, n);
      for (int r = 0; r < n; ++r) {
        const std::string rf = field + ".data[" + std::to_string(r) + "]";
        if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != n)
          throw ValidationError(rf, "expected a row of length " + std::to_string(n));
        for (int c = 0; c < n; ++c) a(r, c) = detail::json_complex(rows[r][c], rf + "[" + std::to_string(c) + "]");
      }
      if (j.contains("M")) {
        const double m = detail::json_number(j["M"], field + ".M");
        if (!(m >= 1.0)) throw ValidationError(field + ".M", "must be >= 1");
        MatrixGenerator g{a, m};
        g.validate();
        return Generator(g);
      }
      return Generator(MatrixGenerator::with_estimated_bound(a));
    });
  }
  if (type == "grid") {
    allow({"axis", "max", "points", "include_zero", "probes"});
    return wrap([&] {
      const std::string axis = j.value("axis", std::string("imaginary"));
      if (axis != "imaginary" && axis != "real") throw ValidationError(field + ".axis", "expected \"imaginary\" or \"real\"");
      const double max = j.contains("max") ? detail::json_number(j["max"], field + ".max") : 5.0;
      if (j.contains("points") && !j["points"].is_number_integer())
        throw ValidationError(field + ".points", "expected an integer");
      const int points = j.value("points", 500);
      if (points < 1) throw ValidationError(field + ".points", "must be >= 1");
      if (j.contains("include_zero") && !j["include_zero"].is_boolean())
        throw ValidationError(field + ".include_zero", "expected a boolean");
      DiagonalGenerator g = grid_generator(axis == "imaginary", max, points, j.value("include_zero", false));
      if (j.contains("probes")) {
        if (axis != "imaginary") throw ValidationError(field + ".probes", "probes need the imaginary axis");
        if (!j["probes"].is_array()) throw ValidationError(field + ".probes", "expected an array");
        std::vector<double> probes;
        for (std::size_t i = 0; i < j["probes"].size(); ++i)
          probes.push_back(detail::json_number(j["probes"][i], field + ".probes[" + std::to_string(i) + "]"));
        DiagonalGenerator m = multiplication_model(max, points, probes);
        if (j.value("include_zero", false)) m.eigenvalues.insert(m.eigenvalues.begin(), Complex{});
        g = m;
      }
      g.validate();
      return Generator(g);
    });
  }
  throw ValidationError(field + ".type", "unknown generator type \"" + type + "\"");
}

inline nlohmann::ordered_json generator_to_json(const Generator& gen) {
  nlohmann::ordered_json j;
  if (const auto* d = std::get_if<DiagonalGenerator>(&gen)) {
    j["type"] = "diagonal";
    j["eigenvalues"] = nlohmann::ordered_json::array();
    for (const Complex& z : d->eigenvalues) j["eigenvalues"].push_back(detail::complex_json(z));
    if (!d->labels.empty()) j["labels"] = d->labels;
    j["norm"] = d->norm_model == NormModel::linf ? "linf" : "l2";
  } else {
    const auto& m = std::get<MatrixGenerator>(gen);
    j["type"] = "matrix";
    j["data"] = nlohmann::ordered_json::array();
    for (int r = 0; r < m.dim(); ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (int c = 0; c < m.dim(); ++c) row.push_back(detail::complex_json(m.matrix(r, c)));
      j["data"].push_back(row);
    }
    j["M"] = m.M;
  }
  return j;
}

}  // namespace euler_rates
