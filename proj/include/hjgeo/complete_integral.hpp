#pragma once

/// Complete integral S(x; alpha) on the spacetime: the reduced solution
/// composed with phi plus the line integral of the chart one-form
/// chi_k(phi(x,q); lambda(j)) omega^k(x) along the straight segment from the
/// base point.  Provides evaluation, both gradients, the Hamilton--Jacobi
/// residual through two independent contraction routes, and the mixed-Hessian
/// nondegeneracy determinant det || d^2 S / dx dalpha ||.
///
/// Parameter layout: alpha = (q, j_1..j_s, m) for rank-one reductions
/// (1 + s + 1 = n entries) and alpha = (j_1..j_s) with s = n for rank-zero
/// (point-orbit) models, where m is then fixed by the constraint.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hjgeo/box.hpp"
#include "hjgeo/chart.hpp"
#include "hjgeo/frame.hpp"
#include "hjgeo/model.hpp"
#include "hjgeo/quadrature.hpp"
#include "hjgeo/reduced_hj.hpp"
#include "hjgeo/report.hpp"
#include "hjgeo/rng.hpp"

namespace hjgeo {

/// Integral of chi_k(phi(., q); lambda(j)) omega^k along the straight
/// segment x0 -> x, by adaptive quadrature.
inline double line_integral(const CanonicalChart& chart,
                            const FrameField& frame,
                            const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& x,
                            const Eigen::VectorXd& q,
                            const Eigen::VectorXd& j,
                            double abs_tol = 1e-12) {
  if (x0.size() != frame.dim() || x.size() != frame.dim()) {
    throw std::invalid_argument("line integral endpoints must have the "
                                "manifold dimension");
  }
  const Eigen::VectorXd direction = x - x0;
  if (direction.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const auto integrand = [&](double t) {
    const Eigen::VectorXd point = x0 + t * direction;
    const Eigen::VectorXd q_prime = chart.phi_eval(point, q);
    const Eigen::VectorXd chi = chart.chi_at(q_prime, j);
    const Eigen::MatrixXd w = coframe_at(frame, point);  // row k = omega^k
    return chi.dot(w * direction);
  };
  return integrate(integrand, 0.0, 1.0, abs_tol).value;
}

/// Exterior-derivative check of the one-form a_l(x) = chi_k(phi(x,q)) w^k_l:
/// max over samples and index pairs of |d_i a_l - d_l a_i| by central finite
/// differences.  A pass certifies that the line integral above is
/// path-independent.
inline Report closedness_check(const CanonicalChart& chart,
                               const FrameField& frame,
                               const Eigen::VectorXd& q,
                               const Eigen::VectorXd& j, int samples,
                               std::uint64_t seed, const Box& x_box) {
  const int n = frame.dim();
  require_box_dim(x_box, n, "x");
  const auto one_form = [&](const Eigen::VectorXd& point) -> Eigen::VectorXd {
    const Eigen::VectorXd q_prime = chart.phi_eval(point, q);
    const Eigen::VectorXd chi = chart.chi_at(q_prime, j);
    return coframe_at(frame, point).transpose() * chi;
  };

  const double h = 1e-5;
  Rng rng(seed);
  double max_curl = 0.0;
  for (int sample = 0; sample < samples; ++sample) {
    const Eigen::VectorXd x = sample_box(x_box, rng);
    Eigen::MatrixXd jacobian(n, n);  // (i, l): d_i a_l
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd x_plus = x;
      Eigen::VectorXd x_minus = x;
      x_plus[i] += h;
      x_minus[i] -= h;
      jacobian.row(i) = ((one_form(x_plus) - one_form(x_minus)) / (2.0 * h))
                            .transpose();
    }
    max_curl = std::max(max_curl,
                        (jacobian - jacobian.transpose()).cwiseAbs().maxCoeff());
  }

  Report report;
  report.add("one-form-closedness", max_curl, 1e-6,
             std::to_string(samples) + " samples, central differences");
  return report;
}

/// Hamilton--Jacobi residual measured through the frame contraction and the
/// coordinate-metric contraction; `discrepancy` is their disagreement.
struct HjResidual {
  double residual = 0.0;
  double discrepancy = 0.0;
};

class CompleteIntegral {
 public:
  /// Builds S(x; alpha) for the model, solving the reduced equation
  /// internally (rank-one models).  With `preflight_closedness`, first runs
  /// closedness_check and refuses to build a path-dependent integral.
  static CompleteIntegral from_model(const ModelSpec& model,
                                     const Eigen::VectorXd& alpha,
                                     int branch = 1,
                                     bool preflight_closedness = true) {
    auto shared = std::make_shared<const ModelSpec>(model);
    CompleteIntegral s(shared, alpha, branch);
    if (preflight_closedness) {
      const Report closed =
          closedness_check(shared->chart(), shared->frame(), s.q_param(),
                           s.j_param(), 10, 0, shared->x_box());
      if (!closed.all_pass()) {
        throw std::runtime_error(
            "chart one-form fails the closedness check (max curl residual " +
            std::to_string(closed.max_residual()) +
            "); the line integral would be path-dependent");
      }
    }
    return s;
  }

  /// Injection constructor: accepts an externally solved reduced solution
  /// (possibly with a gauge offset, or solved for different parameters than
  /// alpha claims).  No closedness preflight.
  CompleteIntegral(const ModelSpec& model, const Eigen::VectorXd& alpha,
                   int branch, ReducedSolution solution)
      : CompleteIntegral(std::make_shared<const ModelSpec>(model), alpha,
                         branch, std::move(solution)) {}

  const ModelSpec& model() const { return *model_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  int branch() const { return branch_; }

  /// Chart parameter block of alpha (empty for rank zero).
  Eigen::VectorXd q_param() const { return alpha_.head(model_->r()); }
  Eigen::VectorXd j_param() const {
    return alpha_.segment(model_->r(), model_->s());
  }
  /// Mass parameter: trailing alpha entry for rank one, derived from the
  /// constraint chi G^{-1} chi = m^2 for rank zero.
  double m_squared() const { return m_squared_; }

  const ReducedSolution& reduced() const {
    if (!reduced_) {
      throw std::logic_error("rank-zero complete integral has no reduced "
                             "solution");
    }
    return *reduced_;
  }

  double value(const Eigen::VectorXd& x) const {
    return value_impl(*model_, reduced_, alpha_, x);
  }

  /// Analytic coordinate gradient d_k S = omega^i_k f_i evaluated through
  /// the frame identity.
  Eigen::VectorXd grad_x(const Eigen::VectorXd& x) const {
    return grad_x_impl(*model_, reduced_, alpha_, x);
  }

  /// Central finite differences in alpha, h = 1e-6 (1 + |alpha_c|); the
  /// reduced equation is re-solved for each perturbed parameter set.
  Eigen::VectorXd grad_alpha(const Eigen::VectorXd& x) const {
    const auto n_params = alpha_.size();
    Eigen::VectorXd grad(n_params);
    for (Eigen::Index c = 0; c < n_params; ++c) {
      const double h = 1e-6 * (1.0 + std::fabs(alpha_[c]));
      Eigen::VectorXd plus = alpha_;
      Eigen::VectorXd minus = alpha_;
      plus[c] += h;
      minus[c] -= h;
      const double s_plus =
          value_impl(*model_, rebuild_solution(*model_, plus, branch_), plus, x);
      const double s_minus = value_impl(
          *model_, rebuild_solution(*model_, minus, branch_), minus, x);
      grad[c] = (s_plus - s_minus) / (2.0 * h);
    }
    return grad;
  }

  HjResidual hj_residual(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd f = frame_momenta(x);
    const Eigen::MatrixXd& ginv = model_->metric().ginv();

    const double frame_route = f.dot(ginv * f);

    const Eigen::MatrixXd xi = model_->frame().eval(x);
    const Eigen::VectorXd ds = coframe_at(model_->frame(), x).transpose() * f;
    const Eigen::MatrixXd g_up = xi.transpose() * ginv * xi;
    const double coordinate_route = ds.dot(g_up * ds);

    HjResidual out;
    out.residual = std::max(std::fabs(frame_route - m_squared_),
                            std::fabs(coordinate_route - m_squared_));
    out.discrepancy = std::fabs(frame_route - coordinate_route);
    return out;
  }

  /// det || d^2 S / dx^i dalpha_c ||: analytic in x, central differences in
  /// alpha with h = 1e-5 (1 + |alpha_c|).
  double nondegeneracy(const Eigen::VectorXd& x) const {
    const auto n_params = alpha_.size();
    Eigen::MatrixXd mixed(model_->n(), n_params);
    for (Eigen::Index c = 0; c < n_params; ++c) {
      const double h = 1e-5 * (1.0 + std::fabs(alpha_[c]));
      Eigen::VectorXd plus = alpha_;
      Eigen::VectorXd minus = alpha_;
      plus[c] += h;
      minus[c] -= h;
      const Eigen::VectorXd g_plus = grad_x_impl(
          *model_, rebuild_solution(*model_, plus, branch_), plus, x);
      const Eigen::VectorXd g_minus = grad_x_impl(
          *model_, rebuild_solution(*model_, minus, branch_), minus, x);
      mixed.col(c) = (g_plus - g_minus) / (2.0 * h);
    }
    return mixed.determinant();
  }

  /// Momenta f_i(phi(x,q), dS~/dq|_phi; lambda(j)) -- the frame derivatives
  /// xi_i S through the chart identity.
  Eigen::VectorXd frame_momenta(const Eigen::VectorXd& x) const {
    return frame_momenta_impl(*model_, reduced_, alpha_, x);
  }

  /// m^2 as a function of an arbitrary parameter vector (trailing entry
  /// squared for rank one, the chi G^{-1} chi constraint for rank zero).
  static double mass_squared_of(const ModelSpec& model,
                                const Eigen::VectorXd& alpha) {
    return mass_squared(model, alpha);
  }

 private:
  CompleteIntegral(std::shared_ptr<const ModelSpec> model,
                   const Eigen::VectorXd& alpha, int branch)
      : model_(std::move(model)), alpha_(alpha), branch_(branch) {
    check_alpha(*model_, alpha_);
    reduced_ = rebuild_solution(*model_, alpha_, branch_);
    m_squared_ = mass_squared(*model_, alpha_);
  }

  CompleteIntegral(std::shared_ptr<const ModelSpec> model,
                   const Eigen::VectorXd& alpha, int branch,
                   ReducedSolution solution)
      : model_(std::move(model)),
        alpha_(alpha),
        branch_(branch),
        reduced_(std::move(solution)) {
    check_alpha(*model_, alpha_);
    m_squared_ = mass_squared(*model_, alpha_);
  }

  static void check_alpha(const ModelSpec& model, const Eigen::VectorXd& alpha) {
    if (model.r() > 1) {
      throw std::logic_error("only rank-zero and rank-one reductions are "
                             "supported");
    }
    const int expected =
        model.r() == 1 ? 1 + model.s() + 1 : model.s();
    if (alpha.size() != expected) {
      throw std::invalid_argument(
          "alpha must have " + std::to_string(expected) + " entries (got " +
          std::to_string(alpha.size()) + ")");
    }
  }

  static double mass_squared(const ModelSpec& model,
                             const Eigen::VectorXd& alpha) {
    if (model.r() == 1) {
      const double m = alpha[alpha.size() - 1];
      return m * m;
    }
    const Eigen::VectorXd chi =
        model.chart().chi_at(Eigen::VectorXd(0), alpha);
    return chi.dot(model.metric().ginv() * chi);
  }

  static std::optional<ReducedSolution> rebuild_solution(
      const ModelSpec& model, const Eigen::VectorXd& alpha, int branch) {
    if (model.r() == 0) return std::nullopt;
    const Eigen::VectorXd j = alpha.segment(1, model.s());
    const double m = alpha[alpha.size() - 1];
    const ReducedQuadratic rq =
        assemble_quadratic(model.chart(), model.metric(), j, m,
                           model.q_window());
    return solve_branch(rq, branch);
  }

  static Eigen::VectorXd frame_momenta_impl(
      const ModelSpec& model, const std::optional<ReducedSolution>& reduced,
      const Eigen::VectorXd& alpha, const Eigen::VectorXd& x) {
    const Eigen::VectorXd q = alpha.head(model.r());
    const Eigen::VectorXd j = alpha.segment(model.r(), model.s());
    const Eigen::VectorXd q_prime = model.chart().phi_eval(x, q);
    Eigen::VectorXd p(model.r());
    if (reduced) p[0] = reduced->derivative(q_prime[0]);
    return model.chart().f_eval(q_prime, p, j);
  }

  static Eigen::VectorXd grad_x_impl(const ModelSpec& model,
                                     const std::optional<ReducedSolution>& sol,
                                     const Eigen::VectorXd& alpha,
                                     const Eigen::VectorXd& x) {
    const Eigen::VectorXd f = frame_momenta_impl(model, sol, alpha, x);
    return coframe_at(model.frame(), x).transpose() * f;
  }

  static double value_impl(const ModelSpec& model,
                           const std::optional<ReducedSolution>& reduced,
                           const Eigen::VectorXd& alpha,
                           const Eigen::VectorXd& x) {
    const Eigen::VectorXd q = alpha.head(model.r());
    const Eigen::VectorXd j = alpha.segment(model.r(), model.s());
    double s_tilde = 0.0;
    if (reduced) {
      const Eigen::VectorXd q_prime = model.chart().phi_eval(x, q);
      s_tilde = reduced->value(q_prime[0]);
    }
    return s_tilde + line_integral(model.chart(), model.frame(),
                                   model.base_point(), x, q, j);
  }

  std::shared_ptr<const ModelSpec> model_;
  Eigen::VectorXd alpha_;
  int branch_ = 1;
  std::optional<ReducedSolution> reduced_;
  double m_squared_ = 0.0;
};

/// One admissible draw: a parameter vector alpha and a point x with
/// phi(x, q) inside the (slightly shrunk) reduced domain.
struct AdmissiblePoint {
  Eigen::VectorXd x;
  Eigen::VectorXd alpha;
};

/// Rejection sampler for admissible (x, alpha) pairs: (j, m) from the model
/// boxes with inadmissible parameter sets discarded, q from the reduced
/// domain shrunk by 5% on each side (avoiding the turning points), and x
/// from the model box conditioned on phi(x, q) landing in the same shrunk
/// domain.
class AdmissibleSampler {
 public:
  AdmissibleSampler(const ModelSpec& model, int branch, std::uint64_t seed)
      : model_(std::make_shared<const ModelSpec>(model)),
        branch_(branch),
        rng_(seed) {
    if (model_->r() > 1) {
      throw std::logic_error("only rank-zero and rank-one reductions are "
                             "supported");
    }
  }

  AdmissiblePoint sample() {
    if (model_->r() == 0) {
      AdmissiblePoint out;
      out.alpha = sample_box(model_->j_box(), rng_);
      out.x = sample_box(model_->x_box(), rng_);
      return out;
    }
    const int s = model_->s();
    for (int attempt = 0; attempt < 200; ++attempt) {
      const Eigen::VectorXd j = sample_box(model_->j_box(), rng_);
      const double m =
          rng_.uniform(model_->m_range().lo, model_->m_range().hi);
      std::optional<ReducedSolution> solution;
      try {
        const ReducedQuadratic rq = assemble_quadratic(
            model_->chart(), model_->metric(), j, m, model_->q_window());
        solution = solve_branch(rq, branch_);
      } catch (const std::domain_error&) {
        continue;  // inadmissible (j, m): empty reduced domain
      }
      const double width = solution->q_hi() - solution->q_lo();
      const double lo = solution->q_lo() + 0.05 * width;
      const double hi = solution->q_hi() - 0.05 * width;
      const double q = rng_.uniform(lo, hi);
      for (int inner = 0; inner < 500; ++inner) {
        const Eigen::VectorXd x = sample_box(model_->x_box(), rng_);
        Eigen::VectorXd q_vec(1);
        q_vec[0] = q;
        const double q_prime = model_->chart().phi_eval(x, q_vec)[0];
        if (q_prime <= lo || q_prime >= hi) continue;
        AdmissiblePoint out;
        out.x = x;
        out.alpha.resize(1 + s + 1);
        out.alpha[0] = q;
        out.alpha.segment(1, s) = j;
        out.alpha[1 + s] = m;
        return out;
      }
    }
    throw std::runtime_error("could not draw an admissible (x, alpha) sample; "
                             "check the model's sampling boxes");
  }

 private:
  std::shared_ptr<const ModelSpec> model_;
  int branch_;
  Rng rng_;
};

/// Sweep over admissible samples: HJ residual and route discrepancy,
/// nondegeneracy of the mixed Hessian, the finite-difference cross-check of
/// the frame identity xi_i S = f_i, and one closedness preflight.
inline Report verify_complete(const ModelSpec& model, int branch, int samples,
                              std::uint64_t seed) {
  Report report;
  AdmissibleSampler sampler(model, branch, seed);

  {
    const AdmissiblePoint probe = sampler.sample();
    const Eigen::VectorXd q = probe.alpha.head(model.r());
    const Eigen::VectorXd j = probe.alpha.segment(model.r(), model.s());
    report.merge(closedness_check(model.chart(), model.frame(), q, j, 10,
                                  seed, model.x_box()));
  }

  double max_residual = 0.0;
  double max_discrepancy = 0.0;
  double min_det = std::numeric_limits<double>::infinity();
  double max_fd_mismatch = 0.0;
  for (int k = 0; k < samples; ++k) {
    const AdmissiblePoint point = sampler.sample();
    const CompleteIntegral s =
        CompleteIntegral::from_model(model, point.alpha, branch,
                                     /*preflight_closedness=*/false);
    const HjResidual hj = s.hj_residual(point.x);
    max_residual = std::max(max_residual, hj.residual);
    max_discrepancy = std::max(max_discrepancy, hj.discrepancy);
    min_det = std::min(min_det, std::fabs(s.nondegeneracy(point.x)));

    // Five-point directional derivative of S along each frame field.
    const Eigen::MatrixXd xi = model.frame().eval(point.x);
    const Eigen::VectorXd f = s.frame_momenta(point.x);
    const double h = 1e-3;
    for (int i = 0; i < model.n(); ++i) {
      const Eigen::VectorXd v = xi.row(i).transpose();
      const auto along = [&](double t) { return s.value(point.x + t * v); };
      const double fd = (-along(2.0 * h) + 8.0 * along(h) - 8.0 * along(-h) +
                         along(-2.0 * h)) /
                        (12.0 * h);
      max_fd_mismatch = std::max(max_fd_mismatch, std::fabs(fd - f[i]));
    }
  }

  report.add("complete-hj-residual", max_residual, 1e-8,
             std::to_string(samples) + " admissible samples");
  report.add("complete-route-discrepancy", max_discrepancy, 1e-8,
             "frame vs coordinate contraction");
  report.add_flag("complete-nondegeneracy", min_det > 1e-6,
                  "min |det d2S/dx dalpha| = " + std::to_string(min_det));
  report.add("complete-frame-derivative-fd", max_fd_mismatch, 1e-7,
             "five-point differences along xi_i vs f_i");
  return report;
}

}  // namespace hjgeo
