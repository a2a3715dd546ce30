#pragma once

/// The reduced Hamilton-Jacobi equation on the chart coordinate.  For r = 1
/// charts, substituting p = dS/dq into G^{ij} f_i f_j = m^2 yields a scalar
/// quadratic
///   A(q) p^2 + B(q) p + Cc(q) = 0,
///   A = G^{ij} zeta_i zeta_j,  B = 2 G^{ij} zeta_i chi_j,
///   Cc = G^{ij} chi_i chi_j - m^2,
/// solved explicitly per branch: p(q) = (-B +/- sqrt(B^2 - 4 A Cc)) / (2 A),
/// and integrated to S(q) = int_0^q p(u) du by adaptive quadrature (so
/// S(0) = 0).  The stored coefficients are sign-normalized so that A(0) > 0
/// (the raw contraction can come out globally negated for indefinite frame
/// metrics, which leaves the roots untouched); the applied factor is recorded
/// in `orientation`.
///
/// The domain is the maximal interval around q = 0 on which the discriminant
/// stays positive, located on a 10,000-point grid over the search window and
/// bisection-refined to 1e-12.  Endpoints are simple zeros of the
/// discriminant, so p has an integrable square-root singularity there and
/// the quadrature converges on the closed interval.
///
/// For r >= 2 no quadrature procedure is offered; `verify_reduced` checks a
/// user-supplied candidate solution by direct substitution.  Solutions
/// recompute values purely (no cache), so concurrent queries are safe.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "hjgeo/box.hpp"
#include "hjgeo/chart.hpp"
#include "hjgeo/frame.hpp"
#include "hjgeo/quadrature.hpp"
#include "hjgeo/report.hpp"
#include "hjgeo/rng.hpp"

namespace hjgeo {

/// Coefficients of the reduced quadratic in p, as functions of q, for fixed
/// orbit parameters j and mass m.
struct ReducedQuadratic {
  std::function<double(double)> A;
  std::function<double(double)> B;
  std::function<double(double)> Cc;
  /// Sign applied to the raw contraction so that A(0) > 0; the identity is
  /// A p^2 + B p + Cc = orientation * (G^{ij} f_i f_j - m^2).
  double orientation = 1.0;
  /// Search window for the domain scan (must contain q = 0).
  Interval window{-1.0, 1.0};
  Eigen::VectorXd j;
  double m = 0.0;

  double discriminant(double q) const {
    const double b = B(q);
    return b * b - 4.0 * A(q) * Cc(q);
  }
};

/// Contracts the chart's zeta and chi with the inverse frame metric.  Only
/// r = 1 charts admit the scalar quadratic; anything else is rejected.
inline ReducedQuadratic assemble_quadratic(const CanonicalChart& chart,
                                           const FrameMetric& metric,
                                           const Eigen::VectorXd& j, double m,
                                           Interval window = Interval{-1.0,
                                                                      1.0}) {
  if (chart.r() != 1) {
    throw std::invalid_argument(
        "reduced solver requires a one-dimensional chart (r = 1), got r = " +
        std::to_string(chart.r()));
  }
  if (metric.dim() != chart.n()) {
    throw std::invalid_argument("chart and frame metric disagree on the "
                                "algebra dimension");
  }
  if (static_cast<int>(j.size()) != chart.s()) {
    throw std::invalid_argument("orbit parameter vector has wrong size");
  }
  if (!(window.lo < 0.0 && window.hi > 0.0)) {
    throw std::invalid_argument("the search window must contain q = 0");
  }

  struct Payload {
    CanonicalChart chart;
    Eigen::MatrixXd ginv;
    Eigen::VectorXd j;
  };
  const auto payload =
      std::make_shared<const Payload>(Payload{chart, metric.ginv(), j});

  const auto zeta_vec = [payload](double q) {
    Eigen::VectorXd qv(1);
    qv[0] = q;
    return Eigen::VectorXd(payload->chart.zeta_at(qv).col(0));
  };
  const auto chi_vec = [payload](double q) {
    Eigen::VectorXd qv(1);
    qv[0] = q;
    return payload->chart.chi_at(qv, payload->j);
  };

  ReducedQuadratic rq;
  rq.window = window;
  rq.j = j;
  rq.m = m;
  {
    const Eigen::VectorXd z0 = zeta_vec(0.0);
    rq.orientation = (z0.dot(payload->ginv * z0) < 0.0) ? -1.0 : 1.0;
  }
  const double orient = rq.orientation;
  rq.A = [payload, zeta_vec, orient](double q) {
    const Eigen::VectorXd z = zeta_vec(q);
    return orient * z.dot(payload->ginv * z);
  };
  rq.B = [payload, zeta_vec, chi_vec, orient](double q) {
    return orient * 2.0 * zeta_vec(q).dot(payload->ginv * chi_vec(q));
  };
  rq.Cc = [payload, chi_vec, orient, m](double q) {
    const Eigen::VectorXd c = chi_vec(q);
    return orient * (c.dot(payload->ginv * c) - m * m);
  };
  return rq;
}

/// One branch of the reduced solution: the derivative p(q), the quadrature
/// value S(q), and the refined domain.
class ReducedSolution {
 public:
  ReducedSolution(ReducedQuadratic rq, int branch, double q_lo, double q_hi,
                  bool truncated_lo, bool truncated_hi)
      : rq_(std::move(rq)),
        branch_(static_cast<double>(branch)),
        q_lo_(q_lo),
        q_hi_(q_hi),
        truncated_lo_(truncated_lo),
        truncated_hi_(truncated_hi) {}

  int branch() const { return branch_ > 0.0 ? 1 : -1; }
  double q_lo() const { return q_lo_; }
  double q_hi() const { return q_hi_; }
  /// True when the respective end is the search-window edge rather than a
  /// zero of the discriminant.
  bool truncated_lo() const { return truncated_lo_; }
  bool truncated_hi() const { return truncated_hi_; }
  const Eigen::VectorXd& j() const { return rq_.j; }
  double m() const { return rq_.m; }
  const ReducedQuadratic& quadratic() const { return rq_; }

  /// p(q) = (-B + branch * sqrt(B^2 - 4 A Cc)) / (2 A).  Defined on the open
  /// domain; a truncated end is a regular point and stays admissible.
  double derivative(double q) const {
    const bool inside_lo = truncated_lo_ ? q >= q_lo_ : q > q_lo_;
    const bool inside_hi = truncated_hi_ ? q <= q_hi_ : q < q_hi_;
    if (!inside_lo || !inside_hi) {
      throw std::domain_error("reduced solution queried at q = " +
                              std::to_string(q) + " outside the domain (" +
                              std::to_string(q_lo_) + ", " +
                              std::to_string(q_hi_) + ")");
    }
    return derivative_clamped(q);
  }

  /// S(q) = int_0^q p(u) du; q may sit on the closed domain (the endpoint
  /// singularity of p is integrable).
  double value(double q) const { return value_with_error(q).value; }

  QuadratureResult value_with_error(double q, double abs_tol = 1e-12,
                                    double rel_tol = 1e-12) const {
    if (!(q >= q_lo_ && q <= q_hi_)) {
      throw std::domain_error("reduced solution queried at q = " +
                              std::to_string(q) + " outside the domain [" +
                              std::to_string(q_lo_) + ", " +
                              std::to_string(q_hi_) + "]");
    }
    QuadratureResult result = integrate(
        [this](double u) { return derivative_clamped(u); }, 0.0, q, abs_tol,
        rel_tol);
    result.value += gauge_offset_;
    return result;
  }

  /// Additive gauge constant folded into value(); solutions of the reduced
  /// equation are only defined up to one, and tests exercise that freedom.
  void set_gauge_offset(double offset) { gauge_offset_ = offset; }
  double gauge_offset() const { return gauge_offset_; }

 private:
  /// Interior evaluation for quadrature: rounding can push the discriminant
  /// to a tiny negative just inside a refined endpoint, so clamp at zero.
  double derivative_clamped(double q) const {
    const double disc = std::max(rq_.discriminant(q), 0.0);
    return (-rq_.B(q) + branch_ * std::sqrt(disc)) / (2.0 * rq_.A(q));
  }

  ReducedQuadratic rq_;
  double branch_;
  double q_lo_;
  double q_hi_;
  bool truncated_lo_;
  bool truncated_hi_;
  double gauge_offset_ = 0.0;
};

/// Locates the maximal positive-discriminant interval around q = 0 (grid
/// scan plus bisection to 1e-12) and wraps the chosen branch.  Throws
/// std::domain_error when the discriminant is not positive at q = 0,
/// reporting its maximum over the window (inadmissible parameters).
inline ReducedSolution solve_branch(const ReducedQuadratic& rq,
                                    int branch = 1) {
  if (branch != 1 && branch != -1) {
    throw std::invalid_argument("branch must be +1 or -1");
  }
  const double lo = rq.window.lo;
  const double hi = rq.window.hi;
  if (!(lo < 0.0 && hi > 0.0)) {
    throw std::invalid_argument("the search window must contain q = 0");
  }
  constexpr int kGridPoints = 10000;
  const double step = (hi - lo) / (kGridPoints - 1);

  if (!(rq.discriminant(0.0) > 0.0)) {
    double best = -std::numeric_limits<double>::infinity();
    double best_q = lo;
    for (int i = 0; i < kGridPoints; ++i) {
      const double q = lo + i * step;
      const double d = rq.discriminant(q);
      if (d > best) {
        best = d;
        best_q = q;
      }
    }
    throw std::domain_error(
        "reduced equation has an empty domain around q = 0: the discriminant "
        "peaks at " +
        std::to_string(best) + " (q = " + std::to_string(best_q) +
        "); the parameters (j, m) are inadmissible");
  }

  // Bisection refinement of a discriminant zero bracketed by
  // (positive_q, nonpositive_q).
  const auto refine = [&rq](double positive_q, double nonpositive_q) {
    while (std::fabs(nonpositive_q - positive_q) > 1e-12) {
      const double mid = 0.5 * (positive_q + nonpositive_q);
      if (rq.discriminant(mid) > 0.0) {
        positive_q = mid;
      } else {
        nonpositive_q = mid;
      }
    }
    return 0.5 * (positive_q + nonpositive_q);
  };

  // Scan outward from the origin in grid steps until the discriminant dies
  // or the window ends.
  const auto scan = [&](double direction, double edge) {
    double inside = 0.0;
    for (int i = 1;; ++i) {
      const double q = direction * i * step;
      const bool past_edge = direction > 0.0 ? q >= edge : q <= edge;
      if (past_edge) {
        if (rq.discriminant(edge) > 0.0) {
          return std::pair<double, bool>{edge, true};
        }
        return std::pair<double, bool>{refine(inside, edge), false};
      }
      if (!(rq.discriminant(q) > 0.0)) {
        return std::pair<double, bool>{refine(inside, q), false};
      }
      inside = q;
    }
  };

  const auto [q_hi, truncated_hi] = scan(1.0, hi);
  const auto [q_lo, truncated_lo] = scan(-1.0, lo);
  return ReducedSolution(rq, branch, q_lo, q_hi, truncated_lo, truncated_hi);
}

/// A candidate solution of the reduced equation, supplied with its gradient
/// (the only data entering the residual).
struct ReducedCandidate {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

/// Residual check for any r: max over sampled q of
/// |G^{ij} f_i(q, dS(q)) f_j(q, dS(q)) - m^2|.
inline Report verify_reduced(const CanonicalChart& chart,
                             const FrameMetric& metric,
                             const Eigen::VectorXd& j, double m,
                             const ReducedCandidate& candidate, int samples,
                             std::uint64_t seed, const Box& q_box) {
  if (!candidate.gradient) {
    throw std::invalid_argument("candidate solution must supply a gradient");
  }
  require_box_dim(q_box, chart.r(), "q");
  const Eigen::MatrixXd& ginv = metric.ginv();
  Rng rng(seed);
  double worst = 0.0;
  for (int sample = 0; sample < samples; ++sample) {
    const Eigen::VectorXd q = sample_box(q_box, rng);
    const Eigen::VectorXd p = candidate.gradient(q);
    const Eigen::VectorXd f = chart.f_eval(q, p, j);
    worst = std::max(worst, std::fabs(f.dot(ginv * f) - m * m));
  }
  Report report;
  report.add("reduced-hj-residual", worst, 1e-10,
             std::to_string(samples) + " samples");
  return report;
}

/// Point-orbit degeneration (r = 0): the reduced equation collapses to the
/// algebraic constraint G^{ij} chi_i(j) chi_j(j) = m^2; returns its residual.
inline double reduced_constraint_residual(const CanonicalChart& chart,
                                          const FrameMetric& metric,
                                          const Eigen::VectorXd& j, double m) {
  if (chart.r() != 0) {
    throw std::invalid_argument("constraint form applies to r = 0 charts");
  }
  const Eigen::VectorXd chi = chart.chi_at(Eigen::VectorXd(0), j);
  return std::fabs(chi.dot(metric.ginv() * chi) - m * m);
}

}  // namespace hjgeo
