#include "euler_rates/kernel_bounds.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "gtest/gtest.h"

namespace euler_rates {
namespace {

using boost::math::gamma_p;
using boost::math::gamma_q;

const QuadratureSpec kSpec{};

// E|1 - S/n| for S ~ Gamma(n, 1).
double mean_abs_deviation(int n) {
  const double nn = n;
  return 2.0 * std::exp(nn * std::log(nn) - nn - std::lgamma(nn + 1.0));
}

// Boost adaptive Gauss-Kronrod, used as an independent integrator.
template <class F>
double boost_integrate(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12);
}

TEST(QKernel, Examples) {
  EXPECT_EQ(q_kernel(0.0, 3, 1.0, [](double) { return 1.0; }), 0.0);
  EXPECT_NEAR(q_kernel(0.5, 1, 1.0, [](double) { return 1.0; }), 1.0 - std::exp(-0.5), 1e-13);
  EXPECT_NEAR(q_kernel(2.0, 1, 1.0, [](double) { return 1.0; }), -std::exp(-2.0), 1e-13);
}

TEST(QKernel, LinearDensityClosedForm) {
  // m(v) = v: q(u) = u P(n, x) - t P(n+1, x) - (u - t)_+, x = n u / t
  const LaplaceDensity lin = linear_density();
  for (int n : {1, 3, 16}) {
    for (double t : {0.5, 2.0}) {
      for (double u : {0.1, 0.49, 0.7, 1.3, 3.0}) {
        const double x = n * u / t;
        const double oracle = u * gamma_p(n, x) - t * gamma_p(n + 1, x) - std::max(u - t, 0.0);
        EXPECT_NEAR(q_kernel(u, n, t, lin), oracle, 1e-11) << n << " " << t << " " << u;
      }
    }
  }
}

TEST(QKernel, LaplaceRoundTrip) {
  struct Case {
    LaplaceDensity d;
    std::function<Complex(Complex)> transform;
  };
  const std::vector<Case> cases = {
      {constant_density(), [](Complex z) { return 1.0 / z; }},
      {linear_density(), [](Complex z) { return 1.0 / (z * z); }},
      {shifted_atom_density(1.0), [](Complex z) { return 1.0 / ((z + 1.0) * (z + 1.0)); }},
  };
  for (const auto& c : cases) {
    for (int n : {1, 4}) {
      for (double t : {1.0, 2.0}) {
        const double kink[] = {t};
        for (Complex z : {Complex(1.0, 0.0), Complex(2.0, 0.0), Complex(1.0, 1.0)}) {
          const Complex lhs = laplace_transform([&](double u) { return q_kernel(u, n, t, c.d); }, z, kSpec, kink);
          const Complex rhs = delta_scalar(z, n, t) * c.transform(z);
          EXPECT_LT(std::abs(lhs - rhs), 1e-7) << n << " " << t << " " << z;
        }
      }
    }
  }
}

TEST(LFunctional, Examples) {
  EXPECT_NEAR(l_functional(constant_density(), 1, 1.0), 2.0 / std::numbers::e, 1e-8);
  EXPECT_LE(l_functional(constant_density(), 4, 1.0), 0.5);
  EXPECT_LE(l_functional(linear_density(), 2, 1.0), 0.75);
}

TEST(LFunctional, ClosedForms) {
  for (int n : {1, 2, 5, 16, 64}) {
    for (double t : {0.5, 1.0, 2.0}) {
      EXPECT_NEAR(l_functional(constant_density(), n, t), t * mean_abs_deviation(n), 1e-10) << n << " " << t;
      // t^2/(2n) + (t^2/n) Q(n+1, n)
      const double lin = t * t / (2.0 * n) + t * t / n * gamma_q(n + 1.0, static_cast<double>(n));
      EXPECT_NEAR(l_functional(linear_density(), n, t), lin, 1e-10 * lin) << n << " " << t;
    }
  }
}

TEST(A1Norm, ConstantDensityEqualsMeanAbsoluteDeviation) {
  for (int n : {1, 3, 16}) {
    for (double t : {0.5, 2.0}) {
      EXPECT_NEAR(a1_norm(constant_density(), n, t), t * mean_abs_deviation(n), 1e-9) << n << " " << t;
    }
  }
}

TEST(A1Norm, LinearDensityAgainstBoostIntegration) {
  for (int n : {1, 4, 9}) {
    for (double t : {0.5, 1.0}) {
      auto q = [&](double u) {
        const double x = n * u / t;
        return std::abs(u * gamma_p(n, x) - t * gamma_p(n + 1, x) - std::max(u - t, 0.0));
      };
      const double oracle = boost_integrate(q, 0.0, t) + boost_integrate(q, t, 4.0 * t) +
                            boost_integrate(q, 4.0 * t, 80.0 * t);
      EXPECT_NEAR(a1_norm(linear_density(), n, t) / oracle, 1.0, 1e-8) << n << " " << t;
    }
  }
}

TEST(A1Norm, ConstantTermAddsDeltaNorm) {
  // f = 1: ||Delta_{n,t}|| = 2
  LaplaceDensity zero{[](double) { return 0.0; }, [](double) { return 0.0; }, 0.0, 1.0};
  EXPECT_NEAR(a1_norm(zero, 3, 1.0), 2.0, 1e-9);
}

TEST(A1NormDelta, Examples) {
  const StieltjesRep inv_z2 = atom_rep(0.0, 1.0, 2.0);
  EXPECT_LE(a1_norm_delta(inv_z2, 1, 1.0), 1.5);
  EXPECT_LE(a1_norm_delta(atom_rep(1.0, 1.0, 2.0), 4, 2.0), 3.0);
  for (int n : {4, 8, 16}) {
    const double ratio = a1_norm_delta(inv_z2, 4 * n, 1.0) / a1_norm_delta(inv_z2, n, 1.0);
    EXPECT_GE(ratio, 0.2) << n;
    EXPECT_LE(ratio, 0.3) << n;
  }
}

TEST(A1NormDelta, StieltjesDensityMatchesDirectDensity) {
  EXPECT_NEAR(a1_norm_delta(atom_rep(0.0, 1.0, 2.0), 3, 1.0), a1_norm(linear_density(), 3, 1.0), 1e-10);
  EXPECT_NEAR(a1_norm_delta(atom_rep(1.0, 1.0, 2.0), 3, 1.0), a1_norm(shifted_atom_density(1.0), 3, 1.0),
              1e-10);
}

TEST(A1NormDelta, BelowLFunctional) {
  for (const auto& [name, f] : order2_corpus()) {
    const LaplaceDensity d = stieltjes_density(f);
    for (int n : {1, 5}) {
      const double a1 = a1_norm(d, n, 1.0);
      const double l = l_functional(d, n, 1.0);
      EXPECT_LE(a1, l * (1.0 + 1e-8)) << name << " " << n;
    }
  }
}

TEST(QTotal, TauZeroClosedForms) {
  for (int n : {1, 2, 7, 32}) {
    for (double t : {0.5, 1.0, 2.0}) {
      EXPECT_NEAR(q1(0.0, n, t), t * t / (2.0 * n), 1e-12);
      EXPECT_NEAR(q2(0.0, n, t), t * t / n * gamma_q(n + 1.0, static_cast<double>(n)), 1e-12);
    }
  }
  const KernelProbe p = q_total(0.0, 1, 1.0);
  EXPECT_NEAR(p.q1, 0.5, 1e-12);
  EXPECT_NEAR(p.q_total, 0.5 + 2.0 / std::numbers::e, 1e-11);
  EXPECT_LE(p.q_total, 3.0);
  EXPECT_LE(p.q_total, 12.0);
  EXPECT_TRUE(p.pass);
}

TEST(QTotal, Examples) {
  EXPECT_LE(q_total(0.0, 2, 1.0).q_total, 1.5);
  const KernelProbe far = q_total(10.0, 1, 1.0);
  EXPECT_LE(far.q_total, 0.02);
  EXPECT_NEAR(far.bound_appendix_a, 0.02, 1e-15);
  const KernelProbe big = q_total(1.0, 64, 1.0);
  EXPECT_NEAR(big.bound_main, 12.0 / 81.0, 1e-15);
  EXPECT_LE(big.q_total, big.bound_main);
  EXPECT_NEAR(big.w(32.0), 0.5, 1e-15);
}

TEST(QTotal, MatchesLFunctionalOfShiftedAtom) {
  for (double tau : {0.0, 0.1, 1.0, 10.0}) {
    for (int n : {1, 6}) {
      const double l = l_functional(shifted_atom_density(tau), n, 1.0);
      const double q = q_total(tau, n, 1.0).q_total;
      EXPECT_NEAR(l / q, 1.0, 1e-8) << tau << " " << n;
    }
  }
}

TEST(QTotal, Q2AgainstBoostNestedIntegration) {
  for (double tau : {0.5, 3.0}) {
    for (int n : {1, 3}) {
      const double t = 1.0;
      auto psi = [&](double v) {
        const double upper = n * (v / t + 1.0);
        auto inner = [&](double s) {
          const double d = t * (1.0 - s / n);
          const double body = (v + d) * std::exp(-tau * (v + d)) - v * std::exp(-tau * v);
          return std::exp((n - 1) * std::log(s) - s - std::lgamma(n)) * body;
        };
        return std::abs(boost_integrate(inner, 0.0, std::min(upper, 200.0)));
      };
      const double oracle = boost_integrate(psi, 0.0, 1.0) + boost_integrate(psi, 1.0, 60.0 / tau);
      EXPECT_NEAR(q2(tau, n, t) / oracle, 1.0, 1e-7) << tau << " " << n;
    }
  }
}

TEST(QTotal, LargeTauAsymptotics) {
  // m = v e^{-tau v} has mass 1/tau^2 within O(1/tau) of the origin; the two
  // halves of D split it as P(S >= n) and P(S <= n), up to O(1/tau)
  for (int n : {1, 4}) {
    for (double tau : {1e4, 1e6}) {
      const KernelProbe p = q_total(tau, n, 1.0);
      EXPECT_NEAR(tau * tau * p.q2, 1.0, 50.0 / tau) << n << " " << tau;
      EXPECT_NEAR(tau * tau * p.q1, 1.0, 50.0 / tau) << n << " " << tau;
      EXPECT_LE(p.q_total, p.bound_appendix_a * (1.0 + kKernelSlack));
    }
  }
}

TEST(KernelSuite, SmallGridPasses) {
  const auto rep = kernel_bound_suite({1, 2, 3, 4, 5, 6, 7, 8}, {0.5, 1.0, 2.0}, {0.0, 0.1, 1.0, 10.0});
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.probes.size(), 96u);
  EXPECT_GT(rep.max_ratio_main, 0.0);
  EXPECT_LE(rep.max_ratio_main, 1.0);
}

TEST(ExampleNormSuite, SixteenSteps) {
  const auto rep = example_norm_suite({16}, {1.0}, {1.0});
  ASSERT_EQ(rep.rows.size(), 1u);
  const auto& r = rep.rows[0];
  EXPECT_LE(r.l_const, 0.25);
  EXPECT_LE(r.l_linear, 3.0 / 32.0);
  EXPECT_LE(r.composite, 3.125);
  EXPECT_NEAR(r.bound_c, 3.125, 1e-15);
  EXPECT_NEAR(r.delta_norm, 2.0, 1e-12);
  EXPECT_TRUE(rep.pass);
}

TEST(HfEnvelope, Examples) {
  const auto a = hf_envelope(atom_rep(0.0, 1.0, 2.0), 9, 1.0);
  EXPECT_NEAR(a.envelope, 12.0 / 9.0, 1e-14);
  EXPECT_TRUE(a.pass);
  const auto b = hf_envelope(atom_rep(1.0, 1.0, 2.0), 4, 2.0);
  EXPECT_NEAR(b.envelope, 3.0, 1e-14);
  EXPECT_TRUE(b.pass);
  StieltjesRep zero;
  zero.alpha = 2.0;
  const auto c = hf_envelope(zero, 4, 1.0);
  EXPECT_EQ(c.norm, 0.0);
  EXPECT_EQ(c.envelope, 0.0);
  EXPECT_EQ(c.ratio, 0.0);
}

TEST(HfEnvelope, ConstantTerm) {
  const StieltjesRep f = atom_rep(0.0, 1.0, 2.0, 0.5);
  const auto h = hf_envelope(f, 4, 1.0);
  EXPECT_GT(h.norm, a1_norm_delta(atom_rep(0.0, 1.0, 2.0), 4, 1.0));
  EXPECT_TRUE(h.pass);
}

TEST(DominationChain, CorpusSample) {
  for (const auto& [name, f] : order2_corpus()) {
    if (name != "inv_z1_2" && name != "unit_density" && name != "power_1.5") continue;
    for (int n : {1, 4}) {
      const double t = 1.0;
      const double a1 = a1_norm_delta(f, n, t);
      const double mixed = mixed_kernel_integral(f, n, t);
      const double env = 12.0 * evaluate_real(f, std::sqrt(static_cast<double>(n)) / t);
      EXPECT_LE(a1, mixed * (1.0 + 1e-6)) << name << " " << n;
      EXPECT_LE(mixed, env * (1.0 + 1e-6)) << name << " " << n;
    }
  }
}

}  // namespace
}  // namespace euler_rates
