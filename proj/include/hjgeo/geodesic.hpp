#pragma once

/// Geodesic flow of H(x, p) = 1/2 g^{ij}(x) p_i p_j integrated with classic
/// fixed-step RK4, conserved Killing momenta, CSV trajectory output, and the
/// Jacobi-method consistency test: with the initial momentum matched to a
/// complete integral (p(0) = dS/dx), every dS/dalpha_c is a constant of
/// motion along the flow.
///
/// The contravariant metric is contracted through the frame,
/// g^{ij} = xi_a^i G^{ab} xi_b^j, so dH/dx uses the symbolic derivatives of
/// the frame expressions rather than finite differences.

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjgeo/complete_integral.hpp"
#include "hjgeo/model.hpp"
#include "hjgeo/report.hpp"

namespace hjgeo {

struct GeodesicState {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd p;
};

using Trajectory = std::vector<GeodesicState>;

inline double hamiltonian(const ModelSpec& model, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& p) {
  const Eigen::VectorXd u = model.frame().eval(x) * p;  // frame momenta
  return 0.5 * u.dot(model.metric().ginv() * u);
}

/// Conserved charges <eta_i, p> of the model's Killing fields.
inline Eigen::VectorXd killing_momenta(const ModelSpec& model,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& p) {
  return model.killing().field().eval(x) * p;
}

/// Fixed-step RK4 trajectory of Hamilton's equations, sampled at every
/// multiple of dt up to t_max (inclusive of the start state).
inline Trajectory integrate_geodesic(const ModelSpec& model,
                                     const GeodesicState& start, double t_max,
                                     double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("geodesic step dt must be positive");
  }
  if (t_max < 0.0) {
    throw std::invalid_argument("geodesic horizon t_max must be nonnegative");
  }
  const int n = model.n();
  if (start.x.size() != n || start.p.size() != n) {
    throw std::invalid_argument("geodesic state must have the manifold "
                                "dimension");
  }

  const Eigen::MatrixXd& ginv = model.metric().ginv();
  const auto derivative = [&](const Eigen::VectorXd& x,
                              const Eigen::VectorXd& p,
                              Eigen::VectorXd& x_dot, Eigen::VectorXd& p_dot) {
    const Eigen::MatrixXd xi = model.frame().eval(x);
    const auto dxi = model.frame().eval_derivatives(x);
    const Eigen::VectorXd w = ginv * (xi * p);  // G^{ab} u_b
    x_dot = xi.transpose() * w;
    p_dot.resize(n);
    for (int k = 0; k < n; ++k) {
      p_dot[k] = -w.dot(dxi[static_cast<std::size_t>(k)] * p);
    }
  };

  const auto steps = static_cast<long>(std::llround(t_max / dt));
  Trajectory trajectory;
  trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  trajectory.push_back(start);

  Eigen::VectorXd x = start.x;
  Eigen::VectorXd p = start.p;
  Eigen::VectorXd k1x(n), k1p(n), k2x(n), k2p(n), k3x(n), k3p(n), k4x(n),
      k4p(n);
  for (long step = 0; step < steps; ++step) {
    derivative(x, p, k1x, k1p);
    derivative(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p, k2x, k2p);
    derivative(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p, k3x, k3p);
    derivative(x + dt * k3x, p + dt * k3p, k4x, k4p);
    x += (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    p += (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    GeodesicState state;
    state.t = start.t + static_cast<double>(step + 1) * dt;
    state.x = x;
    state.p = p;
    trajectory.push_back(std::move(state));
  }
  return trajectory;
}

/// CSV rows `t,x1..xn,p1..pn,H` with 17 significant digits.
inline void write_trajectory_csv(std::ostream& out, const ModelSpec& model,
                                 const Trajectory& trajectory) {
  const int n = model.n();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= n; ++i) out << ",p" << i;
  out << ",H\n";
  char buffer[32];
  const auto emit = [&](double value) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    out << buffer;
  };
  for (const GeodesicState& state : trajectory) {
    emit(state.t);
    for (int i = 0; i < n; ++i) {
      out << ',';
      emit(state.x[i]);
    }
    for (int i = 0; i < n; ++i) {
      out << ',';
      emit(state.p[i]);
    }
    out << ',';
    emit(hamiltonian(model, state.x, state.p));
    out << '\n';
  }
}

/// Drift of each Jacobi constant along the trajectory.  The constants are
/// beta_c = dS/dalpha_c - t dh/dalpha_c, where h(alpha) = m^2(alpha)/2 is
/// the conserved Hamiltonian value: parameters that leave m fixed (q and j)
/// have constant dS/dalpha_c outright, while the mass parameter carries the
/// linear affine-time term (rate dh/dm = m).  At most `max_evaluations`
/// samples are evaluated (evenly strided).  Leaving the admissible domain
/// truncates the scan and is reported in the summary note, not treated as a
/// failure.
inline Report jacobi_consistency(const CompleteIntegral& s,
                                 const Trajectory& trajectory,
                                 int max_evaluations = 200) {
  if (trajectory.empty()) {
    throw std::invalid_argument("jacobi consistency needs a nonempty "
                                "trajectory");
  }
  const Eigen::VectorXd reference = s.grad_alpha(trajectory.front().x);
  Eigen::VectorXd drift = Eigen::VectorXd::Zero(reference.size());

  // dh/dalpha_c with h = m^2/2, by central differences (exact for the
  // rank-one case where m^2 is the squared trailing entry).
  Eigen::VectorXd rate(s.alpha().size());
  for (Eigen::Index c = 0; c < rate.size(); ++c) {
    const double h = 1e-6 * (1.0 + std::fabs(s.alpha()[c]));
    Eigen::VectorXd plus = s.alpha();
    Eigen::VectorXd minus = s.alpha();
    plus[c] += h;
    minus[c] -= h;
    rate[c] = (CompleteIntegral::mass_squared_of(s.model(), plus) -
               CompleteIntegral::mass_squared_of(s.model(), minus)) /
              (4.0 * h);
  }

  const auto count = static_cast<long>(trajectory.size());
  const long stride =
      std::max(1L, count / std::max(1, max_evaluations));
  bool truncated = false;
  double truncated_at = 0.0;
  long evaluated = 1;
  for (long i = stride; i < count; i += stride) {
    // Always include the final state on the last pass.
    const long index = (i + stride >= count) ? count - 1 : i;
    try {
      const GeodesicState& state = trajectory[static_cast<std::size_t>(index)];
      const Eigen::VectorXd grad = s.grad_alpha(state.x);
      const Eigen::VectorXd expected =
          reference + (state.t - trajectory.front().t) * rate;
      drift = drift.cwiseMax((grad - expected).cwiseAbs());
      ++evaluated;
    } catch (const std::domain_error&) {
      truncated = true;
      truncated_at = trajectory[static_cast<std::size_t>(index)].t;
      break;
    }
    if (index == count - 1) break;
  }

  Report report;
  for (Eigen::Index c = 0; c < drift.size(); ++c) {
    report.add("jacobi-constant-" + std::to_string(c + 1), drift[c], 1e-5);
  }
  std::string note = std::to_string(evaluated) + " of " +
                     std::to_string(count) + " samples evaluated";
  if (truncated) {
    note += "; truncated at t = " + std::to_string(truncated_at) +
            " (left the admissible domain)";
  }
  report.add_flag("jacobi-trajectory-coverage", true, note);
  return report;
}

}  // namespace hjgeo
