#include "hjgeo/geodesic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hjgeo/complete_integral.hpp"
#include "hjgeo/model.hpp"

namespace {

using hjgeo::CompleteIntegral;
using hjgeo::GeodesicState;
using hjgeo::hamiltonian;
using hjgeo::integrate_geodesic;
using hjgeo::jacobi_consistency;
using hjgeo::killing_momenta;
using hjgeo::ModelSpec;
using hjgeo::Report;
using hjgeo::Trajectory;
using hjgeo::write_trajectory_csv;

Eigen::VectorXd vec4(double a, double b, double c, double d) {
  Eigen::VectorXd v(4);
  v << a, b, c, d;
  return v;
}

const ModelSpec& mtt() {
  static const ModelSpec spec = ModelSpec::builtin("mtt");
  return spec;
}

GeodesicState state_at(const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
  GeodesicState s;
  s.x = x;
  s.p = p;
  return s;
}

TEST(Geodesic, FlatModelGivesExactStraightLine) {
  const ModelSpec flat = ModelSpec::builtin("flat4");
  const GeodesicState start =
      state_at(Eigen::VectorXd::Zero(4), vec4(1.0, 0.0, 0.0, 0.0));
  const Trajectory traj = integrate_geodesic(flat, start, 1.0, 0.1);
  ASSERT_EQ(traj.size(), 11u);
  const GeodesicState& last = traj.back();
  EXPECT_DOUBLE_EQ(last.t, 1.0);
  EXPECT_LT((last.x - vec4(1.0, 0.0, 0.0, 0.0)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((last.p - start.p).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_DOUBLE_EQ(hamiltonian(flat, last.x, last.p), 0.5);
}

TEST(Geodesic, MttEnergyIsConserved) {
  const GeodesicState start =
      state_at(vec4(0.1, -0.2, 0.15, 0.05), vec4(0.3, -0.2, 0.5, 0.4));
  const Trajectory traj = integrate_geodesic(mtt(), start, 10.0, 1e-3);
  const double h0 = hamiltonian(mtt(), start.x, start.p);
  double max_drift = 0.0;
  for (const GeodesicState& s : traj) {
    max_drift =
        std::max(max_drift, std::fabs(hamiltonian(mtt(), s.x, s.p) - h0));
  }
  EXPECT_LT(max_drift, 1e-8);
}

TEST(Geodesic, MttKillingMomentaAreConserved) {
  const GeodesicState start =
      state_at(vec4(0.1, -0.2, 0.15, 0.05), vec4(0.3, -0.2, 0.5, 0.4));
  const Trajectory traj = integrate_geodesic(mtt(), start, 10.0, 1e-3);
  const Eigen::VectorXd charges0 = killing_momenta(mtt(), start.x, start.p);
  double max_drift = 0.0;
  for (const GeodesicState& s : traj) {
    max_drift = std::max(max_drift, (killing_momenta(mtt(), s.x, s.p) -
                                     charges0)
                                        .cwiseAbs()
                                        .maxCoeff());
  }
  EXPECT_LT(max_drift, 1e-8);
}

TEST(Jacobi, MatchedMomentumKeepsConstantsConstant) {
  Eigen::VectorXd alpha(4);
  alpha << 0.0, 1.0, -1.0, 0.1;
  const CompleteIntegral s = CompleteIntegral::from_model(mtt(), alpha);
  const Eigen::VectorXd x0 = mtt().base_point();
  const GeodesicState start = state_at(x0, s.grad_x(x0));
  EXPECT_NEAR(hamiltonian(mtt(), start.x, start.p), 0.5 * 0.1 * 0.1, 1e-12);

  const Trajectory traj = integrate_geodesic(mtt(), start, 0.5, 1e-3);
  const Report report = jacobi_consistency(s, traj, 40);
  EXPECT_TRUE(report.all_pass());
  for (const auto& check : report.checks()) {
    if (check.tolerance > 0.0) EXPECT_LT(check.residual, 1e-5) << check.name;
  }
}

TEST(Jacobi, MismatchedMomentumDrifts) {
  Eigen::VectorXd alpha(4);
  alpha << 0.0, 1.0, -1.0, 0.1;
  const CompleteIntegral s = CompleteIntegral::from_model(mtt(), alpha);
  const Eigen::VectorXd x0 = mtt().base_point();
  const GeodesicState start = state_at(x0, -s.grad_x(x0));

  const Trajectory traj = integrate_geodesic(mtt(), start, 0.5, 1e-3);
  const Report report = jacobi_consistency(s, traj, 20);
  EXPECT_FALSE(report.all_pass());
  double worst = 0.0;
  for (const auto& check : report.checks()) {
    worst = std::max(worst, check.residual);
  }
  EXPECT_GT(worst, 1e-2);
}

TEST(Jacobi, DomainExitIsTruncatedAndReported) {
  // A matched geodesic turns around at the reduced-domain ends, so exit the
  // domain with a synthetic path: x4 marches until phi(x, q) = -x4 leaves
  // the admissible interval (half-width just under 1 for these parameters).
  Eigen::VectorXd alpha(4);
  alpha << 0.0, 1.0, -1.0, 0.1;
  const CompleteIntegral s = CompleteIntegral::from_model(mtt(), alpha);
  Trajectory synthetic;
  for (int i = 0; i <= 20; ++i) {
    GeodesicState state;
    state.t = 0.1 * i;
    state.x = vec4(0.0, 0.0, 0.0, 0.06 * i);
    state.p = Eigen::VectorXd::Zero(4);
    synthetic.push_back(state);
  }
  const Report report = jacobi_consistency(s, synthetic, 30);
  const auto* coverage = report.find("jacobi-trajectory-coverage");
  ASSERT_NE(coverage, nullptr);
  EXPECT_NE(coverage->note.find("truncated"), std::string::npos)
      << coverage->note;
}

TEST(Trajectory, CsvHasHeaderAndFullPrecision) {
  const ModelSpec flat = ModelSpec::builtin("flat4");
  const GeodesicState start =
      state_at(vec4(0.0, 0.25, 0.0, 0.0), vec4(0.1, -0.7, 0.3, 0.2));
  const Trajectory traj = integrate_geodesic(flat, start, 0.2, 0.1);
  std::ostringstream out;
  write_trajectory_csv(out, flat, traj);

  std::istringstream lines(out.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "t,x1,x2,x3,x4,p1,p2,p3,p4,H");

  std::vector<std::string> rows;
  std::string row;
  while (std::getline(lines, row)) rows.push_back(row);
  ASSERT_EQ(rows.size(), traj.size());

  // Every printed value must round-trip to the exact double.
  std::istringstream cells(rows.back());
  std::string cell;
  std::vector<double> values;
  while (std::getline(cells, cell, ',')) values.push_back(std::stod(cell));
  ASSERT_EQ(values.size(), 10u);
  EXPECT_EQ(values[0], traj.back().t);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(values[static_cast<std::size_t>(1 + i)], traj.back().x[i]);
    EXPECT_EQ(values[static_cast<std::size_t>(5 + i)], traj.back().p[i]);
  }
  EXPECT_EQ(values[9], hamiltonian(flat, traj.back().x, traj.back().p));
}

TEST(Trajectory, BadInputsAreRejected) {
  const ModelSpec flat = ModelSpec::builtin("flat4");
  const GeodesicState start =
      state_at(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4));
  EXPECT_THROW(integrate_geodesic(flat, start, 1.0, 0.0),
               std::invalid_argument);
  EXPECT_THROW(integrate_geodesic(flat, start, -1.0, 0.1),
               std::invalid_argument);
  GeodesicState short_state;
  short_state.x = Eigen::VectorXd::Zero(3);
  short_state.p = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(integrate_geodesic(flat, short_state, 1.0, 0.1),
               std::invalid_argument);

  Eigen::VectorXd alpha(4);
  alpha << 0.0, 1.0, -1.0, 0.1;
  const CompleteIntegral s = CompleteIntegral::from_model(mtt(), alpha);
  EXPECT_THROW(jacobi_consistency(s, Trajectory{}), std::invalid_argument);
}

}  // namespace
