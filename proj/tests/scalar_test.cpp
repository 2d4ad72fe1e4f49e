#include "euler_rates/scalar.hpp"

#include <cmath>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "gtest/gtest.h"

namespace euler_rates {
namespace {

using Wide = boost::multiprecision::cpp_bin_float_50;

// exp(-n Log(1 + t z / n)) in 50-digit arithmetic.
Complex wide_euler_rational(Complex z, int n, double t) {
  const Wide h = Wide(t) / n;
  const Wide re = 1 + h * Wide(z.real());
  const Wide im = h * Wide(z.imag());
  const Wide log_mod = log(re * re + im * im) / 2;
  const Wide arg = atan2(im, re);
  const Wide mod = exp(-n * log_mod);
  const Wide phase = -n * arg;
  return {static_cast<double>(mod * cos(phase)), static_cast<double>(mod * sin(phase))};
}

TEST(SemigroupScalar, Examples) {
  EXPECT_EQ(semigroup_scalar({0.0, 0.0}, 5.0), Complex(1.0, 0.0));
  EXPECT_NEAR(semigroup_scalar({1.0, 0.0}, 1.0).real(), 0.36787944117144233, 1e-16);
  const Complex rot = semigroup_scalar({0.0, 1.0}, 1.0);
  EXPECT_NEAR(rot.real(), std::cos(1.0), 1e-15);
  EXPECT_NEAR(rot.imag(), -std::sin(1.0), 1e-15);
}

TEST(EulerRational, Examples) {
  EXPECT_NEAR(std::abs(euler_rational({0.0, 0.0}, 7, 3.0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(euler_rational({1.0, 0.0}, 2, 2.0).real(), 0.25, 1e-15);
  EXPECT_NEAR(euler_rational({1.0, 0.0}, 4, 2.0).real(), 1.0 / std::pow(1.5, 4), 1e-15);
  EXPECT_NEAR(euler_rational({1.0, 0.0}, 4, 2.0).real(), 0.19753086419753085, 1e-15);
}

TEST(EulerRational, PoleAndArguments) {
  EXPECT_THROW(euler_rational({-2.0, 0.0}, 2, 1.0), PoleError);
  EXPECT_THROW(euler_rational({1.0, 0.0}, 0, 1.0), DomainError);
  EXPECT_THROW(euler_rational({1.0, 0.0}, 1, 0.0), DomainError);
}

TEST(EulerRational, LargeNMatchesWideOracle) {
  const Complex z(0.0, 1.0);
  const Complex r = euler_rational(z, 1000000, 1.0);
  const Complex oracle = wide_euler_rational(z, 1000000, 1.0);
  EXPECT_GT(std::abs(r), 0.0);
  EXPECT_LE(std::abs(r), 1.0);
  EXPECT_NEAR(std::abs(r - oracle), 0.0, 1e-10);
}

TEST(EulerRational, WideOracleOverRandomPoints) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> re(0.0, 20.0);
  std::uniform_real_distribution<double> im(-50.0, 50.0);
  std::uniform_int_distribution<int> steps(1, 100000);
  for (int i = 0; i < 200; ++i) {
    const Complex z(re(rng), im(rng));
    const int n = steps(rng);
    const Complex r = euler_rational(z, n, 0.7);
    EXPECT_NEAR(std::abs(r - wide_euler_rational(z, n, 0.7)), 0.0, 1e-12) << z << " n=" << n;
  }
}

TEST(DeltaScalar, Examples) {
  EXPECT_EQ(delta_scalar({0.0, 0.0}, 5, 2.0), Complex(0.0, 0.0));
  EXPECT_NEAR(delta_scalar({1.0, 0.0}, 1, 1.0).real(), 0.5 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(delta_scalar({1.0, 0.0}, 1, 1.0).real(), 0.13212056, 1e-8);
  // 1/(1+i) - e^{-i}
  const Complex d = delta_scalar({0.0, 1.0}, 1, 1.0);
  const Complex oracle = 1.0 / Complex(1.0, 1.0) - std::exp(Complex(0.0, -1.0));
  EXPECT_NEAR(std::abs(d - oracle), 0.0, 1e-15);
  EXPECT_NEAR(d.real(), -0.0403023, 1e-7);
  EXPECT_NEAR(d.imag(), 0.3414710, 1e-7);
  EXPECT_NEAR(std::abs(d), 0.3438411, 1e-7);
}

TEST(DeltaScalar, ContractiveOnRightHalfPlane) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> re(0.0, 100.0);
  std::uniform_real_distribution<double> im(-100.0, 100.0);
  std::uniform_int_distribution<int> steps(1, 5000);
  std::uniform_real_distribution<double> time(0.01, 10.0);
  for (int i = 0; i < 5000; ++i) {
    const Complex z(i % 5 == 0 ? 0.0 : re(rng), im(rng));
    const int n = steps(rng);
    const double t = time(rng);
    EXPECT_LE(std::abs(euler_rational(z, n, t)), 1.0 + 1e-15);
    EXPECT_LE(std::abs(delta_scalar(z, n, t)), 2.0 + 1e-15);
  }
}

TEST(DeltaScalar, HalvesWhenStepsDouble) {
  for (Complex z : {Complex(1.0, 0.0), Complex(0.0, 1.0), Complex(1.0, 1.0)}) {
    for (int n = 256; n <= 65536; n *= 2) {
      const double ratio = std::abs(delta_scalar(z, 2 * n, 1.0)) / std::abs(delta_scalar(z, n, 1.0));
      EXPECT_GE(ratio, 0.4) << z << " n=" << n;
      EXPECT_LE(ratio, 0.6) << z << " n=" << n;
    }
  }
}

TEST(LowerBoundProbe, Examples) {
  const auto p = delta_lower_bound_probe(1, 1.0, 1);
  EXPECT_NEAR(p.value, 0.3438411, 1e-7);
  EXPECT_NEAR(p.bound, 0.2928932, 1e-7);
  EXPECT_TRUE(p.holds);

  const auto q = delta_lower_bound_probe(1, 17.3, 1);
  EXPECT_NEAR(q.value, p.value, 1e-14);

  const auto r = delta_lower_bound_probe(10000, 1.0, -1);
  EXPECT_GE(r.value, 0.2928932);
  EXPECT_TRUE(r.holds);
  EXPECT_THROW(delta_lower_bound_probe(1, 1.0, 0), DomainError);
}

TEST(LowerBoundProbe, HoldsAcrossStepsAndTimes) {
  for (double t : {0.01, 1.0, 100.0}) {
    for (int n = 1; n <= 10000; ++n) {
      ASSERT_TRUE(delta_lower_bound_probe(n, t, 1).holds) << "n=" << n << " t=" << t;
      ASSERT_TRUE(delta_lower_bound_probe(n, t, -1).holds) << "n=" << n << " t=" << t;
    }
  }
}

TEST(SmallZRatio, LimitValues) {
  EXPECT_NEAR(delta_small_z_ratio(1, 1.0, 1e-9), 0.5, 1e-8);
  EXPECT_NEAR(delta_small_z_ratio(8, 2.0, 1e-9), 0.25, 1e-8);
  EXPECT_NEAR(delta_small_z_ratio(1, 1.0, 1e-3) / 0.5, 1.0, 1e-3 * 5.0 / 3.0 + 1e-6);
  EXPECT_THROW(delta_small_z_ratio(1, 1.0, 0.0), DomainError);
  EXPECT_THROW(delta_small_z_ratio(1, 1.0, 0.1), DomainError);
}

TEST(SmallZRatio, SeriesMatchesWideOracleNearThreshold) {
  for (int n : {1, 3, 50, 1000}) {
    for (double t : {0.5, 1.0, 2.0}) {
      for (double frac : {0.99, 1.01}) {
        const double z = frac * kSmallZSeriesThreshold / t;
        const Wide wz(z);
        const Wide r = pow(1 + Wide(t) * wz / n, -n);
        const Wide e = exp(-Wide(t) * wz);
        const double oracle = static_cast<double>((r - e) / (wz * wz));
        const double got = delta_over_z_squared(Complex(z, 0.0), n, t).real();
        // above the switch the direct quotient carries ~eps n / (t z)^2 error
        const double tol = frac < 1.0 ? 1e-12 : 1e-15 * n / (t * z * t * z);
        EXPECT_NEAR(got / oracle, 1.0, tol) << n << " " << t << " " << frac;
      }
    }
  }
}

TEST(SmallZRatio, WideOracleAtOneMillionth) {
  // Delta(z)/z^2 = t^2/(2n) - t^3 (3n+2)/(6n^2) z + O(z^2): the first-order
  // relative deviation at z = 1e-6 is t (3n+2)/(3n) * 1e-6.
  for (int n : {1, 2, 10, 100, 1000}) {
    for (double t : {0.1, 0.5, 1.0}) {
      const double z = 1e-6;
      const double ratio = delta_small_z_ratio(n, t, z);
      const double limit = t * t / (2.0 * n);
      const double predicted = t * (3.0 * n + 2.0) / (3.0 * n) * z;
      EXPECT_NEAR((limit - ratio) / limit, predicted, 1e-11) << n << " " << t;
      if (predicted < 1e-6) {
        EXPECT_LT(std::abs(ratio - limit) / limit, 1e-6);
      }
    }
  }
}

}  // namespace
}  // namespace euler_rates
