#pragma once

/// Canonical charts on coadjoint orbits.  A chart supplies the transition
/// functions f_i(q,p;j) = zeta_i^a(q) p_a + chi_i(q;j) that realize the
/// algebra coordinates in Darboux variables (q,p) on an orbit through
/// lambda(j), together with the companion map phi(x,q) that transports the
/// chart along the group action on the base manifold.
///
/// All chart data is model input; this header evaluates it and verifies the
/// defining conditions numerically:
///   - base value        chi_i(0;j) = lambda_i(j)
///   - canonical bracket {f_i, f_j} = C_ij^k f_k in the (q,p) variables
///   - zeta closure      [zeta_i, zeta_j]^b = C_ij^k zeta_k^b
///   - chi compatibility zeta_i^a d_a chi_j - zeta_j^a d_a chi_i = C_ij^k chi_k
///   - rank conditions   rank zeta = r and rank [df/dq, df/dp] = 2r
///   - equivariance      xi_i^l(x) d_l phi^a(x,q) = zeta_i^a(phi(x,q))
/// Point orbits (r = 0) are supported degenerately: f_i = chi_i(j) and phi is
/// empty.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjgeo/box.hpp"
#include "hjgeo/expr.hpp"
#include "hjgeo/frame.hpp"
#include "hjgeo/lie_algebra.hpp"
#include "hjgeo/report.hpp"
#include "hjgeo/rng.hpp"

namespace hjgeo {

/// Parametrization j -> lambda(j) of the orbit space: an n-vector of
/// expressions in j1..js picking one regular covector per orbit.
class OrbitParametrization {
 public:
  /// lam[i] = lambda_i in variables j1..js; constants must already be
  /// substituted.
  OrbitParametrization(int s, std::vector<Expr> lam)
      : s_(s), lam_(std::move(lam)) {
    if (s_ < 0) throw std::invalid_argument("orbit parameter count negative");
    const auto vars = coordinate_names(s_, "j");
    compiled_.reserve(lam_.size());
    for (const Expr& e : lam_) compiled_.emplace_back(e, vars);
  }

  int s() const { return s_; }
  int n() const { return static_cast<int>(lam_.size()); }
  const Expr& component(int i) const {
    return lam_[static_cast<std::size_t>(i)];
  }

  Eigen::VectorXd lambda(const Eigen::VectorXd& j) const {
    if (static_cast<int>(j.size()) != s_) {
      throw std::invalid_argument("orbit parameter vector has wrong size");
    }
    const std::span<const double> slots(j.data(), static_cast<std::size_t>(s_));
    Eigen::VectorXd out(n());
    for (int i = 0; i < n(); ++i) {
      out[i] = compiled_[static_cast<std::size_t>(i)].eval(slots);
    }
    return out;
  }

 private:
  int s_;
  std::vector<Expr> lam_;
  std::vector<CompiledExpr> compiled_;
};

class CanonicalChart {
 public:
  /// zeta[i][a] = zeta_i^a in q1..qr, chi[i] = chi_i in q1..qr and j1..js,
  /// phi[a] = phi^a in x1..xn and q1..qr (n = chi.size(), r = phi.size()).
  /// Constants must already be substituted.
  CanonicalChart(int r, int s, std::vector<std::vector<Expr>> zeta,
                 std::vector<Expr> chi, std::vector<Expr> phi)
      : n_(static_cast<int>(chi.size())),
        r_(r),
        s_(s),
        zeta_(std::move(zeta)),
        chi_(std::move(chi)),
        phi_(std::move(phi)) {
    if (r_ < 0 || s_ < 0) {
      throw std::invalid_argument("chart ranks must be non-negative");
    }
    if (static_cast<int>(zeta_.size()) != n_) {
      throw std::invalid_argument("zeta must have one row per algebra index");
    }
    if (static_cast<int>(phi_.size()) != r_) {
      throw std::invalid_argument("phi must have one component per chart "
                                  "coordinate");
    }
    const auto q_names = coordinate_names(r_, "q");
    auto chi_names = q_names;
    for (const auto& name : coordinate_names(s_, "j")) chi_names.push_back(name);
    auto phi_names = coordinate_names(n_, "x");
    for (const auto& name : q_names) phi_names.push_back(name);

    zeta_compiled_.resize(static_cast<std::size_t>(n_));
    zeta_derivs_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      auto& row = zeta_[static_cast<std::size_t>(i)];
      if (static_cast<int>(row.size()) != r_) {
        throw std::invalid_argument("zeta row " + std::to_string(i + 1) +
                                    " has wrong component count");
      }
      auto& crow = zeta_compiled_[static_cast<std::size_t>(i)];
      auto& drow = zeta_derivs_[static_cast<std::size_t>(i)];
      crow.reserve(row.size());
      drow.resize(row.size());
      for (int a = 0; a < r_; ++a) {
        const Expr& e = row[static_cast<std::size_t>(a)];
        crow.emplace_back(e, q_names);
        auto& cell = drow[static_cast<std::size_t>(a)];
        cell.reserve(static_cast<std::size_t>(r_));
        for (int b = 0; b < r_; ++b) {
          cell.emplace_back(e.diff(q_names[static_cast<std::size_t>(b)]),
                            q_names);
        }
      }
    }

    chi_compiled_.reserve(chi_.size());
    chi_derivs_.resize(chi_.size());
    for (int i = 0; i < n_; ++i) {
      const Expr& e = chi_[static_cast<std::size_t>(i)];
      chi_compiled_.emplace_back(e, chi_names);
      auto& drow = chi_derivs_[static_cast<std::size_t>(i)];
      drow.reserve(static_cast<std::size_t>(r_));
      for (int a = 0; a < r_; ++a) {
        drow.emplace_back(e.diff(q_names[static_cast<std::size_t>(a)]),
                          chi_names);
      }
    }

    phi_compiled_.reserve(phi_.size());
    phi_dx_.resize(phi_.size());
    phi_dq_.resize(phi_.size());
    for (int a = 0; a < r_; ++a) {
      const Expr& e = phi_[static_cast<std::size_t>(a)];
      phi_compiled_.emplace_back(e, phi_names);
      auto& dx_row = phi_dx_[static_cast<std::size_t>(a)];
      dx_row.reserve(static_cast<std::size_t>(n_));
      for (int l = 0; l < n_; ++l) {
        dx_row.emplace_back(e.diff(phi_names[static_cast<std::size_t>(l)]),
                            phi_names);
      }
      auto& dq_row = phi_dq_[static_cast<std::size_t>(a)];
      dq_row.reserve(static_cast<std::size_t>(r_));
      for (int b = 0; b < r_; ++b) {
        dq_row.emplace_back(e.diff(q_names[static_cast<std::size_t>(b)]),
                            phi_names);
      }
    }
  }

  int n() const { return n_; }
  int r() const { return r_; }
  int s() const { return s_; }

  const Expr& zeta_component(int i, int a) const {
    return zeta_[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
  }
  const Expr& chi_component(int i) const {
    return chi_[static_cast<std::size_t>(i)];
  }
  const Expr& phi_component(int a) const {
    return phi_[static_cast<std::size_t>(a)];
  }

  /// Z(i,a) = zeta_i^a(q).
  Eigen::MatrixXd zeta_at(const Eigen::VectorXd& q) const {
    check_size(q, r_, "q");
    const std::span<const double> slots(q.data(), static_cast<std::size_t>(r_));
    Eigen::MatrixXd out(n_, r_);
    for (int i = 0; i < n_; ++i) {
      for (int a = 0; a < r_; ++a) {
        out(i, a) = zeta_compiled_[static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(a)]
                                      .eval(slots);
      }
    }
    return out;
  }

  /// Partial-derivative slices: out[a](i,b) = d zeta_i^b / d q^a.
  std::vector<Eigen::MatrixXd> zeta_derivatives(const Eigen::VectorXd& q) const {
    check_size(q, r_, "q");
    const std::span<const double> slots(q.data(), static_cast<std::size_t>(r_));
    std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(r_),
                                     Eigen::MatrixXd(n_, r_));
    for (int i = 0; i < n_; ++i) {
      for (int b = 0; b < r_; ++b) {
        for (int a = 0; a < r_; ++a) {
          out[static_cast<std::size_t>(a)](i, b) =
              zeta_derivs_[static_cast<std::size_t>(i)]
                          [static_cast<std::size_t>(b)]
                          [static_cast<std::size_t>(a)]
                              .eval(slots);
        }
      }
    }
    return out;
  }

  Eigen::VectorXd chi_at(const Eigen::VectorXd& q,
                         const Eigen::VectorXd& j) const {
    const std::vector<double> slots = join(q, r_, "q", j, s_, "j");
    Eigen::VectorXd out(n_);
    for (int i = 0; i < n_; ++i) {
      out[i] = chi_compiled_[static_cast<std::size_t>(i)].eval(slots);
    }
    return out;
  }

  /// D(i,a) = d chi_i / d q^a at (q,j).
  Eigen::MatrixXd chi_derivatives(const Eigen::VectorXd& q,
                                  const Eigen::VectorXd& j) const {
    const std::vector<double> slots = join(q, r_, "q", j, s_, "j");
    Eigen::MatrixXd out(n_, r_);
    for (int i = 0; i < n_; ++i) {
      for (int a = 0; a < r_; ++a) {
        out(i, a) = chi_derivs_[static_cast<std::size_t>(i)]
                               [static_cast<std::size_t>(a)]
                                   .eval(slots);
      }
    }
    return out;
  }

  /// f_i(q,p;j) = zeta_i^a(q) p_a + chi_i(q;j).
  Eigen::VectorXd f_eval(const Eigen::VectorXd& q, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& j) const {
    check_size(p, r_, "p");
    return zeta_at(q) * p + chi_at(q, j);
  }

  Eigen::VectorXd phi_eval(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& q) const {
    const std::vector<double> slots = join(x, n_, "x", q, r_, "q");
    Eigen::VectorXd out(r_);
    for (int a = 0; a < r_; ++a) {
      out[a] = phi_compiled_[static_cast<std::size_t>(a)].eval(slots);
    }
    return out;
  }

  /// J(a,l) = d phi^a / d x^l at (x,q).
  Eigen::MatrixXd phi_jacobian_x(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& q) const {
    const std::vector<double> slots = join(x, n_, "x", q, r_, "q");
    Eigen::MatrixXd out(r_, n_);
    for (int a = 0; a < r_; ++a) {
      for (int l = 0; l < n_; ++l) {
        out(a, l) = phi_dx_[static_cast<std::size_t>(a)]
                           [static_cast<std::size_t>(l)]
                               .eval(slots);
      }
    }
    return out;
  }

  /// J(a,b) = d phi^a / d q^b at (x,q).
  Eigen::MatrixXd phi_jacobian_q(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& q) const {
    const std::vector<double> slots = join(x, n_, "x", q, r_, "q");
    Eigen::MatrixXd out(r_, r_);
    for (int a = 0; a < r_; ++a) {
      for (int b = 0; b < r_; ++b) {
        out(a, b) = phi_dq_[static_cast<std::size_t>(a)]
                           [static_cast<std::size_t>(b)]
                               .eval(slots);
      }
    }
    return out;
  }

 private:
  static void check_size(const Eigen::VectorXd& v, int expected,
                         const char* name) {
    if (static_cast<int>(v.size()) != expected) {
      throw std::invalid_argument(std::string(name) +
                                  " vector has wrong size");
    }
  }

  static std::vector<double> join(const Eigen::VectorXd& a, int na,
                                  const char* a_name, const Eigen::VectorXd& b,
                                  int nb, const char* b_name) {
    check_size(a, na, a_name);
    check_size(b, nb, b_name);
    std::vector<double> slots;
    slots.reserve(static_cast<std::size_t>(na + nb));
    slots.insert(slots.end(), a.data(), a.data() + na);
    slots.insert(slots.end(), b.data(), b.data() + nb);
    return slots;
  }

  int n_;
  int r_;
  int s_;
  std::vector<std::vector<Expr>> zeta_;
  std::vector<Expr> chi_;
  std::vector<Expr> phi_;
  std::vector<std::vector<CompiledExpr>> zeta_compiled_;
  // zeta_derivs_[i][b][a] = d zeta_i^b / d q^a
  std::vector<std::vector<std::vector<CompiledExpr>>> zeta_derivs_;
  std::vector<CompiledExpr> chi_compiled_;
  std::vector<std::vector<CompiledExpr>> chi_derivs_;  // [i][a]
  std::vector<CompiledExpr> phi_compiled_;
  std::vector<std::vector<CompiledExpr>> phi_dx_;  // [a][l]
  std::vector<std::vector<CompiledExpr>> phi_dq_;  // [a][b]
};

/// Chart verification sweep over random (q,p,j): base value against
/// lambda(j), the canonical Poisson bracket, zeta closure, chi compatibility,
/// both rank conditions, and regularity of lambda(j).
inline Report verify_chart(const CanonicalChart& chart,
                           const OrbitParametrization& orbit,
                           const StructureConstants& constants, int samples,
                           std::uint64_t seed, const Box& q_box,
                           const Box& p_box, const Box& j_box) {
  const int n = chart.n();
  const int r = chart.r();
  const int s = chart.s();
  if (orbit.n() != n || constants.dim() != n) {
    throw std::invalid_argument("chart, orbit, and constants disagree on the "
                                "algebra dimension");
  }
  if (orbit.s() != s) {
    throw std::invalid_argument("chart and orbit disagree on the orbit "
                                "parameter count");
  }
  require_box_dim(q_box, r, "q");
  require_box_dim(p_box, r, "p");
  require_box_dim(j_box, s, "j");

  Report report;
  Rng rng(seed);
  double max_base = 0.0;
  double max_bracket = 0.0;
  double max_zeta_closure = 0.0;
  double max_chi_compat = 0.0;
  bool zeta_rank_ok = true;
  bool immersion_rank_ok = true;
  bool lambda_regular = true;
  const Eigen::VectorXd q0 = Eigen::VectorXd::Zero(r);

  for (int sample = 0; sample < samples; ++sample) {
    const Eigen::VectorXd q = sample_box(q_box, rng);
    const Eigen::VectorXd p = sample_box(p_box, rng);
    const Eigen::VectorXd j = sample_box(j_box, rng);
    const Eigen::VectorXd lam = orbit.lambda(j);

    lambda_regular = lambda_regular &&
                     corank(lie_poisson_matrix(constants, lam)) == s;
    max_base = std::max(
        max_base, (chart.chi_at(q0, j) - lam).cwiseAbs().maxCoeff());

    const Eigen::MatrixXd zeta = chart.zeta_at(q);
    const auto dzeta = chart.zeta_derivatives(q);
    const Eigen::MatrixXd dchi = chart.chi_derivatives(q, j);
    const Eigen::VectorXd chi = chart.chi_at(q, j);
    const Eigen::VectorXd f = zeta * p + chi;

    // df_i/dq^a, assembled from the linear-in-p form.
    Eigen::MatrixXd dfdq(n, r);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < r; ++a) {
        double value = dchi(i, a);
        for (int b = 0; b < r; ++b) {
          value += dzeta[static_cast<std::size_t>(a)](i, b) * p[b];
        }
        dfdq(i, a) = value;
      }
    }

    for (int i = 0; i < n; ++i) {
      for (int jj = i + 1; jj < n; ++jj) {
        // {f_i, f_j} = sum_a df_i/dp_a df_j/dq^a - df_i/dq^a df_j/dp_a.
        double pb = 0.0;
        for (int a = 0; a < r; ++a) {
          pb += zeta(i, a) * dfdq(jj, a) - dfdq(i, a) * zeta(jj, a);
        }
        double expected_f = 0.0;
        for (int k = 0; k < n; ++k) expected_f += constants(i, jj, k) * f[k];
        max_bracket = std::max(max_bracket, std::fabs(pb - expected_f));

        for (int b = 0; b < r; ++b) {
          double closure = 0.0;
          for (int a = 0; a < r; ++a) {
            closure += zeta(i, a) * dzeta[static_cast<std::size_t>(a)](jj, b) -
                       zeta(jj, a) * dzeta[static_cast<std::size_t>(a)](i, b);
          }
          double expected_zeta = 0.0;
          for (int k = 0; k < n; ++k) {
            expected_zeta += constants(i, jj, k) * zeta(k, b);
          }
          max_zeta_closure =
              std::max(max_zeta_closure, std::fabs(closure - expected_zeta));
        }

        double compat = 0.0;
        for (int a = 0; a < r; ++a) {
          compat += zeta(i, a) * dchi(jj, a) - zeta(jj, a) * dchi(i, a);
        }
        double expected_chi = 0.0;
        for (int k = 0; k < n; ++k) expected_chi += constants(i, jj, k) * chi[k];
        max_chi_compat =
            std::max(max_chi_compat, std::fabs(compat - expected_chi));
      }
    }

    if (r > 0) {
      zeta_rank_ok = zeta_rank_ok && numeric_rank(zeta) == r;
      Eigen::MatrixXd jac(n, 2 * r);
      jac.leftCols(r) = dfdq;
      jac.rightCols(r) = zeta;
      immersion_rank_ok = immersion_rank_ok && numeric_rank(jac) == 2 * r;
    }
  }

  report.add_flag("orbit-regularity", lambda_regular,
                  "corank of the Lie-Poisson matrix at lambda(j) equals s");
  report.add("chart-base-value", max_base, 1e-12, "chi(0;j) vs lambda(j)");
  report.add("chart-canonical-bracket", max_bracket, 1e-9,
             std::to_string(samples) + " samples");
  report.add("chart-zeta-closure", max_zeta_closure, 1e-9);
  report.add("chart-chi-compatibility", max_chi_compat, 1e-9);
  report.add_flag("chart-zeta-rank", zeta_rank_ok,
                  "rank zeta = r at sampled q");
  report.add_flag("chart-immersion-rank", immersion_rank_ok,
                  "rank [df/dq, df/dp] = 2r at sampled (q,p,j)");
  return report;
}

/// Equivariance of phi against a frame: xi_i^l(x) d_l phi^a = zeta_i^a(phi),
/// the base-point identity phi(x0,q) = q, and invertibility of d phi/d q.
inline Report verify_equivariance(const CanonicalChart& chart,
                                  const FrameField& frame,
                                  const Eigen::VectorXd& x0, int samples,
                                  std::uint64_t seed, const Box& x_box,
                                  const Box& q_box) {
  const int n = chart.n();
  const int r = chart.r();
  if (frame.dim() != n) {
    throw std::invalid_argument("chart and frame disagree on the manifold "
                                "dimension");
  }
  require_box_dim(x_box, n, "x");
  require_box_dim(q_box, r, "q");

  Report report;
  // With no q variables there is no phi map; every condition is vacuous.
  if (r == 0) {
    const std::string note = "vacuous: chart has no q variables";
    report.add("chart-equivariance", 0.0, 1e-9, note);
    report.add("phi-base-point", 0.0, 0.0, note);
    report.add_flag("phi-q-jacobian", true, note);
    return report;
  }
  Rng rng(seed);
  double max_equivariance = 0.0;
  double max_base_point = 0.0;
  double min_jac = std::numeric_limits<double>::infinity();

  for (int sample = 0; sample < samples; ++sample) {
    const Eigen::VectorXd x = sample_box(x_box, rng);
    const Eigen::VectorXd q = sample_box(q_box, rng);

    max_base_point = std::max(
        max_base_point,
        (chart.phi_eval(x0, q) - q).cwiseAbs().maxCoeff());

    const Eigen::MatrixXd xi = frame.eval(x);
    const Eigen::MatrixXd dphi = chart.phi_jacobian_x(x, q);
    const Eigen::MatrixXd zeta_at_phi = chart.zeta_at(chart.phi_eval(x, q));
    // Row i of xi * dphi^T is xi_i applied to each phi^a.
    const Eigen::MatrixXd pushed = xi * dphi.transpose();
    max_equivariance =
        std::max(max_equivariance,
                 (pushed - zeta_at_phi).cwiseAbs().maxCoeff());

    min_jac = std::min(min_jac,
                       frame_det_relative(chart.phi_jacobian_q(x, q)));
  }

  report.add("chart-equivariance", max_equivariance, 1e-9,
             std::to_string(samples) + " samples");
  report.add("phi-base-point", max_base_point, 0.0, "phi(x0,q) = q exactly");
  report.add_flag("phi-q-jacobian", min_jac > 1e-10,
                  "min relative |det d phi/d q| = " + std::to_string(min_jac));
  return report;
}

}  // namespace hjgeo
