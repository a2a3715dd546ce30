#include "hjgeo/reduced_hj.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "hjgeo/box.hpp"
#include "hjgeo/chart.hpp"
#include "hjgeo/elliptic.hpp"
#include "hjgeo/expr.hpp"
#include "hjgeo/frame.hpp"
#include "hjgeo/rng.hpp"

namespace {

using hjgeo::assemble_quadratic;
using hjgeo::Box;
using hjgeo::CanonicalChart;
using hjgeo::Expr;
using hjgeo::FrameMetric;
using hjgeo::Interval;
using hjgeo::ReducedCandidate;
using hjgeo::ReducedQuadratic;
using hjgeo::solve_branch;
using hjgeo::verify_reduced;

Expr parse_k(const std::string& text, double k) {
  return Expr::parse(text).substitute({{"k", k}});
}

CanonicalChart mtt_chart(double k) {
  std::vector<std::vector<Expr>> zeta;
  zeta.push_back({Expr::constant(0.0)});
  zeta.push_back({Expr::constant(1.0)});
  zeta.push_back({Expr::constant(0.0)});
  zeta.push_back({parse_k("-(k/2)*q1", k)});
  std::vector<Expr> chi = {Expr::parse("j1"), Expr::constant(0.0),
                           parse_k("k*j1*q1", k), Expr::parse("j2")};
  std::vector<Expr> phi = {parse_k("exp(k*x2/2)*(q1 - x4)", k)};
  return CanonicalChart(1, 2, std::move(zeta), std::move(chi), std::move(phi));
}

FrameMetric mtt_metric() {
  Eigen::MatrixXd g(4, 4);
  g << 1, 0, 0, -1,
       0, -1, 0, 0,
       0, 0, -1, 0,
       -1, 0, 0, 0;
  return FrameMetric(g);
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

const Interval kMttWindow{-4.0, 4.0};

ReducedQuadratic mtt_quadratic(double k, double j1, double j2, double m) {
  return assemble_quadratic(mtt_chart(k), mtt_metric(), vec2(j1, j2), m,
                            kMttWindow);
}

TEST(AssembleQuadratic, MttCoefficientsMatchHandDerivation) {
  const auto rq = mtt_quadratic(1.0, 1.0, -1.0, 0.0);
  EXPECT_EQ(rq.orientation, -1.0);
  for (double q : {-2.0, -0.5, 0.0, 0.3, 1.7}) {
    EXPECT_NEAR(rq.A(q), 1.0 + q * q / 4.0, 1e-12);
    EXPECT_NEAR(rq.B(q), 0.0, 1e-12);
    EXPECT_NEAR(rq.Cc(q), q * q - 1.0, 1e-12);
  }
}

TEST(AssembleQuadratic, LinearTermTracksOrbitParameters) {
  const double k = 0.5;
  const double j1 = 1.2, j2 = -0.8;
  const auto rq = mtt_quadratic(k, j1, j2, 0.3);
  for (double q : {-1.0, 0.25, 2.0}) {
    EXPECT_NEAR(rq.B(q), -k * q * (j1 + j2), 1e-12);
    EXPECT_NEAR(rq.A(q), 1.0 + k * k * q * q / 4.0, 1e-12);
    EXPECT_NEAR(rq.Cc(q),
                k * k * j1 * j1 * q * q + 2.0 * j1 * j2 + j2 * j2 + 0.09,
                1e-12);
  }
}

TEST(AssembleQuadratic, QuadraticIdentityAgainstTransitionFunctions) {
  const double k = 1.0;
  const auto chart = mtt_chart(k);
  const auto metric = mtt_metric();
  const Eigen::VectorXd j = vec2(0.9, -1.1);
  const double m = 0.2;
  const auto rq = assemble_quadratic(chart, metric, j, m, kMttWindow);
  hjgeo::Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const double q = rng.uniform(-2.0, 2.0);
    const double p = rng.uniform(-3.0, 3.0);
    Eigen::VectorXd qv(1), pv(1);
    qv << q;
    pv << p;
    const Eigen::VectorXd f = chart.f_eval(qv, pv, j);
    const double direct = f.dot(metric.ginv() * f) - m * m;
    const double quadratic = rq.A(q) * p * p + rq.B(q) * p + rq.Cc(q);
    EXPECT_NEAR(quadratic, rq.orientation * direct, 1e-10);
  }
}

TEST(AssembleQuadratic, ZeroMomentumReducesToConstantTerm) {
  const auto chart = mtt_chart(1.0);
  const auto metric = mtt_metric();
  const Eigen::VectorXd j = vec2(1.0, -1.0);
  const auto rq = assemble_quadratic(chart, metric, j, 0.4, kMttWindow);
  hjgeo::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double q = rng.uniform(-2.0, 2.0);
    Eigen::VectorXd qv(1);
    qv << q;
    const Eigen::VectorXd f =
        chart.f_eval(qv, Eigen::VectorXd::Zero(1), j);
    EXPECT_NEAR(rq.Cc(q),
                rq.orientation * (f.dot(metric.ginv() * f) - 0.16), 1e-12);
  }
}

TEST(AssembleQuadratic, RejectsBadInputs) {
  // r = 0 chart has no scalar quadratic.
  std::vector<std::vector<Expr>> zeta(4);
  std::vector<Expr> chi = {Expr::parse("j1"), Expr::parse("j2"),
                           Expr::parse("j3"), Expr::parse("j4")};
  const CanonicalChart point_chart(0, 4, std::move(zeta), std::move(chi), {});
  const FrameMetric euclid(Eigen::MatrixXd::Identity(4, 4));
  Eigen::VectorXd j4(4);
  j4 << 1, 0, 0, 0;
  EXPECT_THROW(assemble_quadratic(point_chart, euclid, j4, 1.0),
               std::invalid_argument);
  // Window must straddle zero.
  EXPECT_THROW(assemble_quadratic(mtt_chart(1.0), mtt_metric(),
                                  vec2(1.0, -1.0), 0.0, Interval{0.5, 2.0}),
               std::invalid_argument);
  // Wrong orbit-parameter count.
  EXPECT_THROW(assemble_quadratic(mtt_chart(1.0), mtt_metric(), j4, 0.0),
               std::invalid_argument);
}

TEST(SolveBranch, MttReferenceCaseDomainAndSlope) {
  const auto sol = solve_branch(mtt_quadratic(1.0, 1.0, -1.0, 0.0), 1);
  EXPECT_EQ(sol.branch(), 1);
  EXPECT_NEAR(sol.derivative(0.0), 1.0, 1e-12);
  EXPECT_NEAR(sol.q_lo(), -1.0, 1e-10);
  EXPECT_NEAR(sol.q_hi(), 1.0, 1e-10);
  EXPECT_FALSE(sol.truncated_lo());
  EXPECT_FALSE(sol.truncated_hi());
}

TEST(SolveBranch, SecondReferenceCase) {
  const auto sol = solve_branch(mtt_quadratic(0.5, 1.0, -1.0, 0.5), 1);
  EXPECT_NEAR(sol.derivative(0.0), std::sqrt(3.0) / 2.0, 1e-12);
  EXPECT_NEAR(sol.q_hi(), std::sqrt(0.75) / 0.5, 1e-10);
  EXPECT_NEAR(sol.q_lo(), -sol.q_hi(), 1e-10);
}

TEST(SolveBranch, EmptyDomainReportsDiscriminantPeak) {
  try {
    solve_branch(mtt_quadratic(1.0, 1.0, 1.0, 10.0), 1);
    FAIL() << "expected a domain error";
  } catch (const std::domain_error& err) {
    EXPECT_NE(std::string(err.what()).find("discriminant"), std::string::npos);
    EXPECT_NE(std::string(err.what()).find("inadmissible"), std::string::npos);
  }
}

TEST(SolveBranch, ConstantCoefficientsGiveLinearSolution) {
  const double m = 0.7;
  ReducedQuadratic rq;
  rq.A = [](double) { return 1.0; };
  rq.B = [](double) { return 0.0; };
  rq.Cc = [m](double) { return -m * m; };
  rq.window = Interval{-2.0, 2.0};
  rq.j = Eigen::VectorXd(0);
  rq.m = m;
  const auto sol = solve_branch(rq, 1);
  EXPECT_TRUE(sol.truncated_lo());
  EXPECT_TRUE(sol.truncated_hi());
  EXPECT_EQ(sol.q_lo(), -2.0);
  EXPECT_EQ(sol.q_hi(), 2.0);
  for (double q : {-2.0, -0.3, 0.0, 1.9}) {
    EXPECT_NEAR(sol.derivative(q), m, 1e-14);
  }
  EXPECT_NEAR(sol.value(1.5), 1.5 * m, 1e-12);
}

TEST(SolveBranch, FlatChartThroughTheFullPipeline) {
  // n = 1 chart with zeta = 1, chi = 0: A = 1, B = 0, Cc = -m^2.
  std::vector<std::vector<Expr>> zeta;
  zeta.push_back({Expr::constant(1.0)});
  const CanonicalChart chart(1, 0, std::move(zeta), {Expr::constant(0.0)},
                             {Expr::parse("x1 + q1")});
  const FrameMetric metric(Eigen::MatrixXd::Identity(1, 1));
  const auto rq =
      assemble_quadratic(chart, metric, Eigen::VectorXd(0), 0.3);
  EXPECT_EQ(rq.orientation, 1.0);
  const auto sol = solve_branch(rq, 1);
  EXPECT_NEAR(sol.derivative(0.5), 0.3, 1e-14);
  EXPECT_NEAR(sol.value(-0.5), -0.15, 1e-12);
}

TEST(SolveBranch, BranchSymmetryWhenLinearTermVanishes) {
  const auto rq = mtt_quadratic(1.0, 1.0, -1.0, 0.0);
  const auto plus = solve_branch(rq, 1);
  const auto minus = solve_branch(rq, -1);
  for (double q : {-0.9, -0.4, 0.2, 0.7}) {
    EXPECT_NEAR(minus.derivative(q), -plus.derivative(q), 1e-13);
    EXPECT_NEAR(minus.value(q), -plus.value(q), 1e-11);
  }
}

TEST(SolveBranch, RejectsBadBranch) {
  EXPECT_THROW(solve_branch(mtt_quadratic(1.0, 1.0, -1.0, 0.0), 2),
               std::invalid_argument);
}

TEST(ReducedSolution, VanishesAtZeroAndDerivativeConsistent) {
  const auto sol = solve_branch(mtt_quadratic(1.0, 1.0, -1.0, 0.1), 1);
  EXPECT_EQ(sol.value(0.0), 0.0);
  const double h = 1e-6;
  for (double q : {-0.6, -0.2, 0.3, 0.8}) {
    const double fd = (sol.value(q + h) - sol.value(q - h)) / (2.0 * h);
    EXPECT_NEAR(fd, sol.derivative(q), 1e-8);
  }
}

TEST(ReducedSolution, QueriesOutsideTheDomainThrow) {
  const auto sol = solve_branch(mtt_quadratic(1.0, 1.0, -1.0, 0.0), 1);
  EXPECT_THROW(sol.derivative(1.5), std::domain_error);
  EXPECT_THROW(sol.derivative(sol.q_hi()), std::domain_error);
  EXPECT_THROW(sol.value(1.5), std::domain_error);
  // The endpoint singularity of p is integrable: value converges there.
  EXPECT_TRUE(std::isfinite(sol.value(sol.q_hi())));
}

TEST(ReducedSolution, HalvedToleranceStaysWithinReportedError) {
  const auto sol = solve_branch(mtt_quadratic(1.0, 1.0, -1.0, 0.0), 1);
  for (double q : {0.35, 0.95}) {
    const auto loose = sol.value_with_error(q, 1e-9, 1e-9);
    const auto tight = sol.value_with_error(q, 5e-10, 5e-10);
    EXPECT_LE(std::fabs(loose.value - tight.value), loose.error);
  }
}

TEST(ReducedSolution, GaugeOffsetShiftsValuesOnly) {
  auto sol = solve_branch(mtt_quadratic(1.0, 1.0, -1.0, 0.0), 1);
  const double base = sol.value(0.5);
  const double slope = sol.derivative(0.5);
  sol.set_gauge_offset(0.25);
  EXPECT_NEAR(sol.value(0.5), base + 0.25, 1e-14);
  EXPECT_EQ(sol.derivative(0.5), slope);
}

TEST(ReducedSolution, MatchesClosedFormAcrossTheInterior) {
  struct Case {
    double k, j1, j2, m;
  };
  const Case cases[] = {
      {1.0, 1.0, -1.0, 0.0}, {0.5, 1.0, -1.0, 0.5}, {4.0, 1.2, -0.8, 0.3}};
  for (const auto& c : cases) {
    const auto sol = solve_branch(mtt_quadratic(c.k, c.j1, c.j2, c.m), 1);
    const double half = hjgeo::mtt_domain_halfwidth(c.j1, c.j2, c.m, c.k);
    EXPECT_NEAR(sol.q_hi(), half, 1e-10);
    double worst = 0.0;
    for (int i = 0; i <= 40; ++i) {
      const double q = (-0.95 + 1.9 * i / 40.0) * half;
      worst = std::max(
          worst, std::fabs(sol.value(q) - hjgeo::mtt_reduced_closed_form(
                                              q, c.j1, c.j2, c.m, c.k)));
    }
    EXPECT_LE(worst, 1e-8) << "k=" << c.k << " j1=" << c.j1;
  }
}

TEST(VerifyReduced, SolverOutputFedBackPasses) {
  const auto chart = mtt_chart(1.0);
  const auto metric = mtt_metric();
  const Eigen::VectorXd j = vec2(1.0, -1.0);
  const auto sol = solve_branch(
      assemble_quadratic(chart, metric, j, 0.0, kMttWindow), 1);
  ReducedCandidate candidate;
  candidate.value = [&sol](const Eigen::VectorXd& q) { return sol.value(q[0]); };
  candidate.gradient = [&sol](const Eigen::VectorXd& q) {
    Eigen::VectorXd g(1);
    g[0] = sol.derivative(q[0]);
    return g;
  };
  const Box q_box{Interval{-0.95, 0.95}};
  const auto report =
      verify_reduced(chart, metric, j, 0.0, candidate, 200, 0, q_box);
  EXPECT_TRUE(report.all_pass());
  EXPECT_LE(report.find("reduced-hj-residual")->residual, 1e-10);
}

TEST(VerifyReduced, ZeroFunctionFails) {
  const auto chart = mtt_chart(1.0);
  const auto metric = mtt_metric();
  const Eigen::VectorXd j = vec2(1.0, -1.0);
  ReducedCandidate zero;
  zero.value = [](const Eigen::VectorXd&) { return 0.0; };
  zero.gradient = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(1).eval();
  };
  const auto report = verify_reduced(chart, metric, j, 0.0, zero, 100, 0,
                                     Box{Interval{-0.95, 0.95}});
  EXPECT_FALSE(report.all_pass());
  EXPECT_GE(report.find("reduced-hj-residual")->residual, 0.05);
}

TEST(VerifyReduced, PerturbedSolutionFails) {
  const auto chart = mtt_chart(1.0);
  const auto metric = mtt_metric();
  const Eigen::VectorXd j = vec2(1.0, -1.0);
  const auto sol = solve_branch(
      assemble_quadratic(chart, metric, j, 0.0, kMttWindow), 1);
  ReducedCandidate skewed;
  skewed.value = [&sol](const Eigen::VectorXd& q) {
    return sol.value(q[0]) + 0.01 * q[0];
  };
  skewed.gradient = [&sol](const Eigen::VectorXd& q) {
    Eigen::VectorXd g(1);
    g[0] = sol.derivative(q[0]) + 0.01;
    return g;
  };
  const auto report = verify_reduced(chart, metric, j, 0.0, skewed, 100, 0,
                                     Box{Interval{-0.95, 0.95}});
  EXPECT_FALSE(report.all_pass());
  EXPECT_GE(report.find("reduced-hj-residual")->residual, 1e-3);
}

TEST(PointOrbit, ConstraintResidual) {
  std::vector<std::vector<Expr>> zeta(4);
  std::vector<Expr> chi = {Expr::parse("j1"), Expr::parse("j2"),
                           Expr::parse("j3"), Expr::parse("j4")};
  const CanonicalChart chart(0, 4, std::move(zeta), std::move(chi), {});
  const FrameMetric euclid(Eigen::MatrixXd::Identity(4, 4));
  Eigen::VectorXd j(4);
  j << 0.3, -0.4, 1.2, 0.0;
  const double m = j.norm();
  EXPECT_LE(hjgeo::reduced_constraint_residual(chart, euclid, j, m), 1e-14);
  EXPECT_NEAR(hjgeo::reduced_constraint_residual(chart, euclid, j, m + 0.1),
              std::fabs(j.squaredNorm() - (m + 0.1) * (m + 0.1)), 1e-14);
  EXPECT_THROW(
      hjgeo::reduced_constraint_residual(mtt_chart(1.0), mtt_metric(),
                                         vec2(1.0, -1.0), 0.0),
      std::invalid_argument);
}

}  // namespace
