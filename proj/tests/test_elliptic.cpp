#include "hjgeo/elliptic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hjgeo/quadrature.hpp"
#include "hjgeo/rng.hpp"

namespace {

using hjgeo::carlson_rc;
using hjgeo::carlson_rd;
using hjgeo::carlson_rf;
using hjgeo::carlson_rj;
using hjgeo::ellip_E;
using hjgeo::ellip_F;
using hjgeo::ellip_Pi;
using hjgeo::EllipticConvention;
using hjgeo::mtt_domain_halfwidth;
using hjgeo::mtt_reduced_closed_form;
using hjgeo::mtt_theta_roots;

struct MttCase {
  double j1, j2, m, k;
};

const MttCase kCases[] = {
    {1.0, -1.0, 0.0, 1.0},
    {1.0, -1.0, 0.5, 0.5},
    {1.2, -0.8, 0.3, 4.0},
};

// Right-hand side of the reduced equation solved for the derivative.
double mtt_integrand(double q, const MttCase& c) {
  const double theta = c.k * c.k * q * q;
  const double d = -c.j1 * c.j1 * theta * theta -
                   (c.m * c.m + 3.0 * c.j1 * c.j1) * theta -
                   4.0 * (c.m * c.m + 2.0 * c.j1 * c.j2 + c.j2 * c.j2);
  return (2.0 * c.k * (c.j1 + c.j2) * q + 2.0 * std::sqrt(d)) /
         (4.0 + c.k * c.k * q * q);
}

TEST(Carlson, ReferenceValues) {
  EXPECT_NEAR(carlson_rf(1.0, 2.0, 4.0), 0.6850858166334359, 1e-13);
  EXPECT_NEAR(carlson_rd(0.0, 2.0, 1.0), 1.7972103521033884, 1e-13);
  EXPECT_NEAR(carlson_rj(0.0, 1.0, 2.0, 3.0), 0.7768862377858233, 1e-13);
  EXPECT_NEAR(carlson_rc(2.0, 3.0), 0.6154797086703874, 1e-13);
  EXPECT_NEAR(carlson_rc(0.0, 1.0), M_PI / 2.0, 1e-13);
}

TEST(Carlson, PrincipalValueForNegativeSecondArgument) {
  EXPECT_NEAR(carlson_rc(2.0, -3.0), 0.33339691011136727, 1e-13);
}

TEST(Carlson, SymmetryAndDegenerations) {
  hjgeo::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const double x = rng.uniform(0.1, 4.0);
    const double y = rng.uniform(0.1, 4.0);
    const double z = rng.uniform(0.1, 4.0);
    const double p = rng.uniform(0.1, 4.0);
    const double rf = carlson_rf(x, y, z);
    EXPECT_NEAR(rf, carlson_rf(z, x, y), 1e-13);
    EXPECT_NEAR(rf, carlson_rf(y, z, x), 1e-13);
    EXPECT_NEAR(carlson_rf(x, x, x), 1.0 / std::sqrt(x), 1e-13);
    EXPECT_NEAR(carlson_rd(x, x, x), std::pow(x, -1.5), 1e-13);
    // R_J collapses to R_D when the fourth argument repeats the third.
    EXPECT_NEAR(carlson_rj(x, y, z, z), carlson_rd(x, y, z), 5e-13);
    // R_C is the x = y degeneration of R_F.
    EXPECT_NEAR(carlson_rc(x, p), carlson_rf(x, p, p), 1e-13);
  }
}

TEST(Carlson, HalvingTheThresholdIsStable) {
  EXPECT_NEAR(carlson_rf(1.0, 2.0, 4.0, 1e-3), carlson_rf(1.0, 2.0, 4.0, 5e-4),
              1e-12);
  EXPECT_NEAR(carlson_rd(0.0, 2.0, 1.0, 1e-3), carlson_rd(0.0, 2.0, 1.0, 5e-4),
              1e-12);
  EXPECT_NEAR(carlson_rj(0.0, 1.0, 2.0, 3.0, 1e-3),
              carlson_rj(0.0, 1.0, 2.0, 3.0, 5e-4), 1e-12);
  EXPECT_NEAR(carlson_rc(2.0, 3.0, 1e-3), carlson_rc(2.0, 3.0, 5e-4), 1e-12);
}

TEST(Carlson, DomainErrors) {
  EXPECT_THROW(carlson_rf(-1.0, 1.0, 1.0), std::domain_error);
  EXPECT_THROW(carlson_rf(0.0, 0.0, 1.0), std::domain_error);
  EXPECT_THROW(carlson_rd(1.0, 1.0, 0.0), std::domain_error);
  EXPECT_THROW(carlson_rj(1.0, 1.0, 1.0, 0.0), std::domain_error);
  EXPECT_THROW(carlson_rc(1.0, 0.0), std::domain_error);
}

TEST(Legendre, ZeroArgumentAndZeroParameter) {
  EXPECT_EQ(ellip_F(0.0, 0.7), 0.0);
  EXPECT_EQ(ellip_E(0.0, 0.7), 0.0);
  EXPECT_EQ(ellip_Pi(0.0, 0.2, 0.7), 0.0);
  EXPECT_NEAR(ellip_F(0.5, 0.0), std::asin(0.5), 1e-13);
  EXPECT_NEAR(ellip_E(0.5, 0.0), std::asin(0.5), 1e-13);
}

TEST(Legendre, ReferenceValues) {
  EXPECT_NEAR(ellip_F(0.5, 0.3), 0.5306368995398675, 1e-13);
  EXPECT_NEAR(ellip_E(0.5, 0.3), 0.5167249408944272, 1e-13);
  EXPECT_NEAR(ellip_Pi(0.5, 0.2, 0.3), 0.540206298588139, 1e-13);
  // Complete cases (z = 1).
  EXPECT_NEAR(ellip_F(1.0, 0.5), 1.8540746773013719, 1e-12);
  EXPECT_NEAR(ellip_E(1.0, 0.3), 1.4453630644126653, 1e-12);
}

TEST(Legendre, MatchesDefiningIntegrals) {
  const double z = 0.5;
  const double m_ell = 0.3;
  const double a = 0.2;
  const double phi = std::asin(z);
  const auto f_integrand = [&](double t) {
    return 1.0 / std::sqrt(1.0 - m_ell * std::sin(t) * std::sin(t));
  };
  const auto e_integrand = [&](double t) {
    return std::sqrt(1.0 - m_ell * std::sin(t) * std::sin(t));
  };
  const auto pi_integrand = [&](double t) {
    const double s2 = std::sin(t) * std::sin(t);
    return 1.0 / ((1.0 - a * s2) * std::sqrt(1.0 - m_ell * s2));
  };
  EXPECT_NEAR(ellip_F(z, m_ell), hjgeo::integrate(f_integrand, 0.0, phi).value,
              1e-10);
  EXPECT_NEAR(ellip_E(z, m_ell), hjgeo::integrate(e_integrand, 0.0, phi).value,
              1e-10);
  EXPECT_NEAR(ellip_Pi(z, a, m_ell),
              hjgeo::integrate(pi_integrand, 0.0, phi).value, 1e-10);
}

TEST(Legendre, DomainErrors) {
  EXPECT_THROW(ellip_F(1.2, 0.3), std::domain_error);
  EXPECT_THROW(ellip_F(-0.1, 0.3), std::domain_error);
  EXPECT_THROW(ellip_F(0.9, 2.0), std::domain_error);
  EXPECT_THROW(ellip_Pi(0.9, 2.0, 0.1), std::domain_error);
}

TEST(MttClosedForm, ThetaRoots) {
  const auto r1 = mtt_theta_roots(1.0, -1.0, 0.0);
  EXPECT_NEAR(r1.theta_plus, 1.0, 1e-14);
  EXPECT_NEAR(r1.theta_minus, -4.0, 1e-14);
  const auto r2 = mtt_theta_roots(1.0, -1.0, 0.5);
  EXPECT_NEAR(r2.theta_plus, 0.75, 1e-14);
  EXPECT_NEAR(r2.theta_minus, -4.0, 1e-14);
  const auto r3 = mtt_theta_roots(1.2, -0.8, 0.3);
  EXPECT_NEAR(r3.theta_plus, 0.8457822080391667, 1e-13);
  EXPECT_NEAR(r3.theta_minus, -3.908282208039166, 1e-13);
  EXPECT_NEAR(mtt_domain_halfwidth(1.2, -0.8, 0.3, 4.0), 0.22991604555238837,
              1e-13);
}

TEST(MttClosedForm, InadmissibleParametersThrow) {
  EXPECT_THROW(mtt_theta_roots(0.0, -1.0, 0.0), std::domain_error);
  EXPECT_THROW(mtt_theta_roots(1.0, 1.0, 10.0), std::domain_error);
  EXPECT_THROW(mtt_theta_roots(1.0, -1.0, 2.0), std::domain_error);
  EXPECT_THROW(mtt_reduced_closed_form(0.0, 1.0, 1.0, 10.0, 1.0),
               std::domain_error);
  EXPECT_THROW(mtt_reduced_closed_form(0.0, 1.0, -1.0, 0.0, -1.0),
               std::invalid_argument);
}

TEST(MttClosedForm, DomainEdgeThrows) {
  const double half = mtt_domain_halfwidth(1.0, -1.0, 0.0, 1.0);
  EXPECT_NEAR(half, 1.0, 1e-14);
  EXPECT_THROW(mtt_reduced_closed_form(half, 1.0, -1.0, 0.0, 1.0),
               std::domain_error);
  EXPECT_THROW(mtt_reduced_closed_form(-half, 1.0, -1.0, 0.0, 1.0),
               std::domain_error);
  EXPECT_NO_THROW(mtt_reduced_closed_form(0.999 * half, 1.0, -1.0, 0.0, 1.0));
}

TEST(MttClosedForm, NormalizedAtZeroAndReferenceValues) {
  EXPECT_EQ(mtt_reduced_closed_form(0.0, 1.0, -1.0, 0.0, 1.0), 0.0);
  EXPECT_NEAR(mtt_reduced_closed_form(0.5, 1.0, -1.0, 0.0, 1.0),
              0.47363542236726364, 1e-12);
  EXPECT_NEAR(mtt_reduced_closed_form(0.15, 1.2, -0.8, 0.3, 4.0),
              0.15776797791729479, 1e-12);
  EXPECT_NEAR(mtt_reduced_closed_form(-0.15, 1.2, -0.8, 0.3, 4.0),
              -0.14053243866908432, 1e-12);
}

TEST(MttClosedForm, MatchesQuadratureOfTheIntegrand) {
  for (const auto& c : kCases) {
    const double half = mtt_domain_halfwidth(c.j1, c.j2, c.m, c.k);
    for (double frac : {-0.9, -0.5, -0.1, 0.2, 0.6, 0.95}) {
      const double q = frac * half;
      const double numeric =
          hjgeo::integrate([&](double t) { return mtt_integrand(t, c); }, 0.0,
                           q)
              .value;
      EXPECT_NEAR(mtt_reduced_closed_form(q, c.j1, c.j2, c.m, c.k), numeric,
                  1e-8)
          << "j1=" << c.j1 << " q=" << q;
    }
  }
}

TEST(MttClosedForm, EvenOddSplitIdentity) {
  // S(q) + S(-q) isolates the logarithmic (even) part of the antiderivative.
  const MttCase c = kCases[2];
  for (double q : {0.05, 0.1, 0.2}) {
    const double sum = mtt_reduced_closed_form(q, c.j1, c.j2, c.m, c.k) +
                       mtt_reduced_closed_form(-q, c.j1, c.j2, c.m, c.k);
    const double even =
        2.0 * (c.j1 + c.j2) / c.k * std::log(1.0 + c.k * c.k * q * q / 4.0);
    EXPECT_NEAR(sum, even, 1e-12);
  }
}

TEST(MttClosedForm, DerivativeMatchesTheIntegrand) {
  const double h = 1e-6;
  for (const auto& c : kCases) {
    const double half = mtt_domain_halfwidth(c.j1, c.j2, c.m, c.k);
    double worst = 0.0;
    for (int i = 1; i <= 50; ++i) {
      // Interior points, away from the square-root turning points.
      const double q = (-0.9 + 1.8 * (i - 1) / 49.0) * half;
      const double fd =
          (mtt_reduced_closed_form(q + h, c.j1, c.j2, c.m, c.k) -
           mtt_reduced_closed_form(q - h, c.j1, c.j2, c.m, c.k)) /
          (2.0 * h);
      worst = std::max(worst, std::fabs(fd - mtt_integrand(q, c)));
    }
    EXPECT_LE(worst, 1e-6) << "j1=" << c.j1 << " k=" << c.k;
  }
}

TEST(MttClosedForm, OnlyOneArgumentConventionSurvives) {
  // The derivative identity is the arbiter between the four possible
  // readings of the elliptic-integral arguments.
  const MttCase c = kCases[0];
  const double h = 1e-6;
  const double q = 0.4;
  const auto fd_mismatch = [&](EllipticConvention conv) {
    const double fd = (mtt_reduced_closed_form(q + h, c.j1, c.j2, c.m, c.k,
                                               conv) -
                       mtt_reduced_closed_form(q - h, c.j1, c.j2, c.m, c.k,
                                               conv)) /
                      (2.0 * h);
    return std::fabs(fd - mtt_integrand(q, c));
  };
  EXPECT_LE(fd_mismatch(EllipticConvention::sine_parameter), 1e-6);
  EXPECT_GE(fd_mismatch(EllipticConvention::sine_modulus), 0.1);
  EXPECT_GE(fd_mismatch(EllipticConvention::amplitude_parameter), 0.1);
  EXPECT_GE(fd_mismatch(EllipticConvention::amplitude_modulus), 0.1);
}

}  // namespace
