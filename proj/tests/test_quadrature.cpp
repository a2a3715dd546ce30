#include "hjgeo/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hjgeo/rng.hpp"

namespace {

using hjgeo::integrate;
using hjgeo::Rng;

TEST(Quadrature, PolynomialIsExact) {
  const auto r = integrate([](double x) { return x * x * x; }, 0.0, 1.0);
  EXPECT_NEAR(r.value, 0.25, 1e-15);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.intervals, 1);
}

TEST(Quadrature, SmoothExponential) {
  const auto r = integrate([](double x) { return std::exp(x); }, 0.0, 1.0);
  EXPECT_NEAR(r.value, std::exp(1.0) - 1.0, 1e-13);
  EXPECT_TRUE(r.converged);
}

TEST(Quadrature, SquareRootTurningPoint) {
  // The reduced solver's integrand behaves like sqrt(q_hi - q) at turning
  // points; the rule must converge to 1e-12 there without endpoint evaluation.
  const auto r = integrate([](double x) { return std::sqrt(1.0 - x); }, 0.0,
                           1.0);
  EXPECT_NEAR(r.value, 2.0 / 3.0, 1e-12);
  EXPECT_TRUE(r.converged);

  const auto half_circle =
      integrate([](double x) { return std::sqrt(1.0 - x * x); }, -1.0, 1.0);
  EXPECT_NEAR(half_circle.value, std::numbers::pi / 2.0, 1e-12);
}

TEST(Quadrature, ToleranceHalvingStaysWithinReportedEstimate) {
  const auto f = [](double x) { return std::cos(3.0 * x) / (1.1 + x); };
  const auto coarse = integrate(f, 0.0, 2.0, 1e-9, 1e-9);
  const auto fine = integrate(f, 0.0, 2.0, 5e-10, 5e-10);
  EXPECT_LE(std::fabs(coarse.value - fine.value), coarse.error);
}

TEST(Quadrature, ReversedLimitsNegate) {
  const auto forward = integrate([](double x) { return std::sin(x); }, 0.0, 2.0);
  const auto backward = integrate([](double x) { return std::sin(x); }, 2.0, 0.0);
  EXPECT_DOUBLE_EQ(forward.value, -backward.value);
}

TEST(Quadrature, EmptyInterval) {
  const auto r = integrate([](double) { return 1e9; }, 0.7, 0.7);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_TRUE(r.converged);
}

TEST(Quadrature, DeterministicSubdivision) {
  const auto f = [](double x) { return std::sqrt(std::fabs(x - 0.3)); };
  const auto a = integrate(f, 0.0, 1.0);
  const auto b = integrate(f, 0.0, 1.0);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.intervals, b.intervals);
}

TEST(Rng, SeededStreamsReproduce) {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c(123), d(124);
  bool differs = false;
  for (int i = 0; i < 10; ++i) differs |= (c.next_u64() != d.next_u64());
  EXPECT_TRUE(differs);
}

TEST(Rng, SubstreamsDecorrelate) {
  Rng a(5, 0), b(5, 1);
  bool differs = false;
  for (int i = 0; i < 10; ++i) differs |= (a.next_u64() != b.next_u64());
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformRangeAndDeterminism) {
  Rng a(9);
  std::vector<double> first;
  for (int i = 0; i < 1000; ++i) {
    const double v = a.uniform(-2.0, 3.0);
    EXPECT_GE(v, -2.0);
    EXPECT_LT(v, 3.0);
    first.push_back(v);
  }
  Rng b(9);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(first[i], b.uniform(-2.0, 3.0));
}

}  // namespace
