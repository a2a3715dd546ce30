#include "hjgeo/complete_integral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "hjgeo/model.hpp"
#include "hjgeo/reduced_hj.hpp"
#include "hjgeo/rng.hpp"

namespace {

using hjgeo::AdmissiblePoint;
using hjgeo::AdmissibleSampler;
using hjgeo::closedness_check;
using hjgeo::CompleteIntegral;
using hjgeo::HjResidual;
using hjgeo::line_integral;
using hjgeo::ModelSpec;
using hjgeo::Report;
using hjgeo::Rng;
using hjgeo::verify_complete;

Eigen::VectorXd vec4(double a, double b, double c, double d) {
  Eigen::VectorXd v(4);
  v << a, b, c, d;
  return v;
}

const ModelSpec& mtt() {
  static const ModelSpec spec = ModelSpec::builtin("mtt");
  return spec;
}

/// The curved model's line-integral term in closed form (k = 1):
/// -j1 x1 - (2 j1 + j2) x2 + k j1 (x4 - q) x3.
double mtt_potential(const Eigen::VectorXd& x, double q, double j1, double j2,
                     double k) {
  return -j1 * x[0] - (2.0 * j1 + j2) * x[1] + k * j1 * (x[3] - q) * x[2];
}

std::string report_text(const Report& report) {
  std::ostringstream out;
  report.print(out);
  return out.str();
}

TEST(LineIntegral, VanishesAtBasePoint) {
  Eigen::VectorXd q(1), j(2);
  q << 0.3;
  j << 1.0, -1.0;
  const double value = line_integral(mtt().chart(), mtt().frame(),
                                     mtt().base_point(), mtt().base_point(),
                                     q, j);
  EXPECT_EQ(value, 0.0);
}

TEST(LineIntegral, MatchesClosedFormPotential) {
  Rng rng(21);
  Eigen::VectorXd q(1), j(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = sample_box(mtt().x_box(), rng);
    q << rng.uniform(-0.5, 0.5);
    j << rng.uniform(0.5, 1.5), rng.uniform(-1.5, -0.5);
    const double numeric = line_integral(mtt().chart(), mtt().frame(),
                                         mtt().base_point(), x, q, j);
    const double closed = mtt_potential(x, q[0], j[0], j[1], 1.0);
    EXPECT_NEAR(numeric, closed, 1e-9) << "trial " << trial;
  }
}

TEST(LineIntegral, TriangleLoopVanishes) {
  Rng rng(5);
  Eigen::VectorXd q(1), j(2);
  q << 0.2;
  j << 1.1, -0.7;
  const auto& chart = mtt().chart();
  const auto& frame = mtt().frame();
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd a = sample_box(mtt().x_box(), rng);
    const Eigen::VectorXd b = sample_box(mtt().x_box(), rng);
    const Eigen::VectorXd base = mtt().base_point();
    const double loop = line_integral(chart, frame, base, a, q, j) +
                        line_integral(chart, frame, a, b, q, j) +
                        line_integral(chart, frame, b, base, q, j);
    EXPECT_NEAR(loop, 0.0, 1e-9) << "trial " << trial;
  }
}

TEST(Closedness, PassesForBundledModels) {
  Eigen::VectorXd q(1), j(2);
  q << 0.3;
  j << 1.0, -1.0;
  for (double k : {1.0, 4.0}) {
    const ModelSpec spec = ModelSpec::builtin("mtt", {{"k", k}});
    const Report report = closedness_check(spec.chart(), spec.frame(), q, j,
                                           20, 2, spec.x_box());
    EXPECT_TRUE(report.all_pass()) << "k = " << k << "\n" << report_text(report);
  }
  const ModelSpec flat = ModelSpec::builtin("flat4");
  const Report report = closedness_check(
      flat.chart(), flat.frame(), Eigen::VectorXd(0),
      vec4(0.3, -0.4, 0.5, 0.2), 20, 2, flat.x_box());
  EXPECT_TRUE(report.all_pass()) << report_text(report);
}

TEST(Closedness, DoubledChiComponentFails) {
  nlohmann::json doc = ModelSpec::builtin("mtt").to_json();
  doc["chart"]["chi"][2] = "2*k*j1*q1";
  const ModelSpec broken(doc);
  Eigen::VectorXd q(1), j(2);
  q << 0.3;
  j << 1.0, -1.0;
  const Report report = closedness_check(broken.chart(), broken.frame(), q, j,
                                         20, 2, broken.x_box());
  EXPECT_FALSE(report.all_pass());
  EXPECT_GT(report.max_residual(), 0.05);

  Eigen::VectorXd alpha(4);
  alpha << 0.3, 1.0, -1.0, 0.1;
  EXPECT_THROW(
      {
        try {
          CompleteIntegral::from_model(broken, alpha);
        } catch (const std::runtime_error& err) {
          EXPECT_NE(std::string(err.what()).find("closedness"),
                    std::string::npos);
          throw;
        }
      },
      std::runtime_error);
}

TEST(CompleteIntegral, BaseValueEqualsReducedValue) {
  Eigen::VectorXd alpha(4);
  alpha << 0.4, 1.0, -1.0, 0.3;
  const CompleteIntegral s = CompleteIntegral::from_model(mtt(), alpha);
  EXPECT_NEAR(s.value(mtt().base_point()), s.reduced().value(0.4), 1e-12);
}

TEST(CompleteIntegral, FrozenAnchorValue) {
  Eigen::VectorXd alpha(4);
  alpha << 0.2, 1.0, -1.0, 0.1;
  const CompleteIntegral s = CompleteIntegral::from_model(mtt(), alpha);
  const Eigen::VectorXd x = vec4(0.3, -0.2, 0.4, 0.1);
  EXPECT_NEAR(s.value(x), -0.050124667975602203, 1e-11);
}

TEST(CompleteIntegral, HjResidualSmallOnAdmissibleSamples) {
  AdmissibleSampler sampler(mtt(), 1, 17);
  for (int trial = 0; trial < 10; ++trial) {
    const AdmissiblePoint point = sampler.sample();
    const CompleteIntegral s = CompleteIntegral::from_model(
        mtt(), point.alpha, 1, /*preflight_closedness=*/false);
    const HjResidual hj = s.hj_residual(point.x);
    EXPECT_LT(hj.residual, 1e-8) << "trial " << trial;
    EXPECT_LT(hj.discrepancy, 1e-10) << "trial " << trial;
  }
}

TEST(CompleteIntegral, FlatModelIsExactlyLinear) {
  const ModelSpec flat = ModelSpec::builtin("flat4");
  const Eigen::VectorXd alpha = vec4(0.3, -0.4, 0.5, 0.2);
  const CompleteIntegral s = CompleteIntegral::from_model(flat, alpha);
  EXPECT_THROW(s.reduced(), std::logic_error);

  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd x = sample_box(flat.x_box(), rng);
    EXPECT_NEAR(s.value(x), alpha.dot(x), 1e-12);
    EXPECT_LT((s.grad_x(x) - alpha).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((s.grad_alpha(x) - x).cwiseAbs().maxCoeff(), 1e-9);
    const HjResidual hj = s.hj_residual(x);
    EXPECT_LT(hj.residual, 1e-14);
    EXPECT_NEAR(std::fabs(s.nondegeneracy(x)), 1.0, 1e-9);
  }
}

TEST(CompleteIntegral, WrongMassShowsUpAsResidual) {
  Eigen::VectorXd j(2);
  j << 1.0, -1.0;
  const double m_true = 0.5;
  const double m_wrong = 0.3;
  const auto rq = hjgeo::assemble_quadratic(mtt().chart(), mtt().metric(), j,
                                            m_true, mtt().q_window());
  auto solution = hjgeo::solve_branch(rq, 1);
  Eigen::VectorXd alpha(4);
  alpha << 0.1, j[0], j[1], m_wrong;
  const CompleteIntegral s(mtt(), alpha, 1, solution);
  const Eigen::VectorXd x = vec4(0.05, -0.1, 0.08, 0.02);
  const HjResidual hj = s.hj_residual(x);
  EXPECT_NEAR(hj.residual, m_true * m_true - m_wrong * m_wrong, 1e-6);
}

TEST(CompleteIntegral, NondegenerateNearBasePoint) {
  Eigen::VectorXd alpha(4);
  alpha << 0.0, 1.0, -1.0, 0.1;
  const CompleteIntegral s = CompleteIntegral::from_model(mtt(), alpha);
  EXPECT_GT(std::fabs(s.nondegeneracy(vec4(0.05, -0.02, 0.04, 0.01))), 1e-6);
}

TEST(CompleteIntegral, GaugeOffsetShiftsValueOnly) {
  Eigen::VectorXd alpha(4);
  alpha << 0.2, 1.0, -1.0, 0.3;
  const CompleteIntegral s = CompleteIntegral::from_model(mtt(), alpha);
  auto shifted = s.reduced();
  shifted.set_gauge_offset(2.5);
  const CompleteIntegral s2(mtt(), alpha, 1, shifted);

  const Eigen::VectorXd x = vec4(0.3, -0.2, 0.4, 0.1);
  EXPECT_NEAR(s2.value(x) - s.value(x), 2.5, 1e-12);
  EXPECT_NEAR(s2.hj_residual(x).residual, s.hj_residual(x).residual, 1e-10);
  EXPECT_NEAR(s2.nondegeneracy(x), s.nondegeneracy(x), 1e-10);
}

TEST(CompleteIntegral, BothBranchesSolveTheEquation) {
  Eigen::VectorXd alpha(4);
  alpha << 0.1, 1.0, -1.0, 0.2;
  const Eigen::VectorXd x = vec4(0.1, -0.05, 0.2, 0.03);
  for (int branch : {1, -1}) {
    const CompleteIntegral s = CompleteIntegral::from_model(mtt(), alpha,
                                                            branch);
    EXPECT_LT(s.hj_residual(x).residual, 1e-8) << "branch " << branch;
  }
}

TEST(CompleteIntegral, GradAlphaMatchesReducedDerivativeAtBase) {
  // At x = x0, phi(x0, q) = q so dS/dq = dS~/dq = p(q).
  Eigen::VectorXd alpha(4);
  alpha << 0.3, 1.0, -1.0, 0.2;
  const CompleteIntegral s = CompleteIntegral::from_model(mtt(), alpha);
  const Eigen::VectorXd grad = s.grad_alpha(mtt().base_point());
  EXPECT_NEAR(grad[0], s.reduced().derivative(0.3), 1e-5);
}

TEST(CompleteIntegral, AlphaSizeIsValidated) {
  Eigen::VectorXd bad(3);
  bad << 0.1, 1.0, -1.0;
  EXPECT_THROW(CompleteIntegral::from_model(mtt(), bad),
               std::invalid_argument);
}

TEST(VerifyComplete, PassesForBundledModels) {
  for (double k : {1.0, 4.0}) {
    const ModelSpec spec = ModelSpec::builtin("mtt", {{"k", k}});
    const Report report = verify_complete(spec, 1, 10, 23);
    EXPECT_TRUE(report.all_pass()) << "k = " << k << "\n" << report_text(report);
  }
  const Report flat = verify_complete(ModelSpec::builtin("flat4"), 1, 10, 23);
  EXPECT_TRUE(flat.all_pass()) << report_text(flat);
}

}  // namespace
