#pragma once

/// Invariant frame {xi_i}, its dual coframe {omega^i}, the constant frame
/// metric G_ij, and the contravariant metric assembly
/// g^{ij}(x) = G^{kl} xi_k^i(x) xi_l^j(x), together with the numeric checks
/// that the frame actually represents the claimed algebra (bracket closure)
/// and that optional Killing fields commute with it.
///
/// Conventions: the frame matrix Xi(x) has row i equal to the components of
/// the i-th field, Xi[i][j] = xi_i^j(x); the coframe matrix W(x) has row i
/// equal to omega^i and satisfies W * Xi^T = I, i.e. <omega^i, xi_j> =
/// delta^i_j.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjgeo/box.hpp"
#include "hjgeo/expr.hpp"
#include "hjgeo/lie_algebra.hpp"
#include "hjgeo/report.hpp"
#include "hjgeo/rng.hpp"

namespace hjgeo {

/// Coordinate variable names "x1".."xn" (or another stem).
inline std::vector<std::string> coordinate_names(int n,
                                                 const std::string& stem = "x") {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) names.push_back(stem + std::to_string(i));
  return names;
}

class FrameField {
 public:
  /// components[i][j] = xi_i^j in variables x1..xn; constants must already be
  /// substituted.
  explicit FrameField(std::vector<std::vector<Expr>> components)
      : n_(static_cast<int>(components.size())),
        components_(std::move(components)) {
    const auto vars = coordinate_names(n_);
    compiled_.resize(static_cast<std::size_t>(n_));
    derivatives_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      if (static_cast<int>(components_[static_cast<std::size_t>(i)].size()) != n_) {
        throw std::invalid_argument("frame row " + std::to_string(i + 1) +
                                    " has wrong component count");
      }
      compiled_[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(n_));
      derivatives_[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(n_));
      for (int j = 0; j < n_; ++j) {
        const Expr& e = components_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        compiled_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            CompiledExpr(e, vars);
        auto& drow = derivatives_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        drow.reserve(static_cast<std::size_t>(n_));
        for (int k = 0; k < n_; ++k) {
          drow.emplace_back(e.diff(vars[static_cast<std::size_t>(k)]), vars);
        }
      }
    }
  }

  int dim() const { return n_; }

  const Expr& component(int i, int j) const {
    return components_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }

  /// Frame matrix Xi(x), row i = xi_i.
  Eigen::MatrixXd eval(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd xi(n_, n_);
    const std::span<const double> slots(x.data(), static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        xi(i, j) = compiled_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                       .eval(slots);
      }
    }
    return xi;
  }

  /// Partial-derivative slices: out[k](i,j) = d xi_i^j / d x^k.
  std::vector<Eigen::MatrixXd> eval_derivatives(const Eigen::VectorXd& x) const {
    std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(n_),
                                     Eigen::MatrixXd(n_, n_));
    const std::span<const double> slots(x.data(), static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (int k = 0; k < n_; ++k) {
          out[static_cast<std::size_t>(k)](i, j) =
              derivatives_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                          [static_cast<std::size_t>(k)]
                              .eval(slots);
        }
      }
    }
    return out;
  }

  /// Coordinate components of [xi_i, xi_j] at x.
  Eigen::VectorXd bracket_at(int i, int j, const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd xi = eval(x);
    const auto dxi = eval_derivatives(x);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (int l = 0; l < n_; ++l) {
      double sum = 0.0;
      for (int m = 0; m < n_; ++m) {
        sum += xi(i, m) * dxi[static_cast<std::size_t>(m)](j, l) -
               xi(j, m) * dxi[static_cast<std::size_t>(m)](i, l);
      }
      out[l] = sum;
    }
    return out;
  }

 private:
  int n_;
  std::vector<std::vector<Expr>> components_;
  std::vector<std::vector<CompiledExpr>> compiled_;
  std::vector<std::vector<std::vector<CompiledExpr>>> derivatives_;
};

/// Relative nondegeneracy measure: |det Xi| / product of row norms
/// (Hadamard-normalized; 1 for orthogonal frames).
inline double frame_det_relative(const Eigen::MatrixXd& xi) {
  double rows = 1.0;
  for (Eigen::Index i = 0; i < xi.rows(); ++i) rows *= xi.row(i).norm();
  if (rows == 0.0) return 0.0;
  return std::fabs(xi.determinant()) / rows;
}

/// Coframe matrix at x: the inverse of the frame matrix arranged so that row
/// i is omega^i (W * Xi^T = I).  Throws on a singular frame.
inline Eigen::MatrixXd coframe_at(const FrameField& frame,
                                  const Eigen::VectorXd& x) {
  const Eigen::MatrixXd xi = frame.eval(x);
  if (frame_det_relative(xi) <= 1e-10) {
    throw std::runtime_error("singular frame matrix at sample point");
  }
  return xi.transpose().inverse();
}

/// Constant frame metric G_ij with its inverse; validates symmetry and the
/// inverse to 1e-12 on construction.
class FrameMetric {
 public:
  explicit FrameMetric(Eigen::MatrixXd g) : g_(std::move(g)) {
    if (g_.rows() != g_.cols()) {
      throw std::invalid_argument("frame metric must be square");
    }
    if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("frame metric must be symmetric");
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(g_);
    ginv_ = lu.inverse();
    const Eigen::MatrixXd identity =
        Eigen::MatrixXd::Identity(g_.rows(), g_.cols());
    const double residual = (g_ * ginv_ - identity).cwiseAbs().maxCoeff();
    // Negated comparison so a NaN residual (singular input) also throws.
    if (!ginv_.allFinite() || !(residual <= 1e-12)) {
      throw std::invalid_argument("frame metric is numerically singular");
    }
  }

  int dim() const { return static_cast<int>(g_.rows()); }
  const Eigen::MatrixXd& g() const { return g_; }
  const Eigen::MatrixXd& ginv() const { return ginv_; }

 private:
  Eigen::MatrixXd g_;
  Eigen::MatrixXd ginv_;
};

/// Contravariant metric g^{ij}(x) = G^{kl} xi_k^i xi_l^j = Xi^T G^{-1} Xi.
inline Eigen::MatrixXd metric_contravariant(const FrameField& frame,
                                            const FrameMetric& metric,
                                            const Eigen::VectorXd& x) {
  const Eigen::MatrixXd xi = frame.eval(x);
  return xi.transpose() * metric.ginv() * xi;
}

/// Bracket-closure and nondegeneracy sweep: at `samples` random points of
/// `box`, max residual of [xi_i,xi_j]^l - C_ij^k xi_k^l and min relative
/// |det|.
inline Report verify_frame(const FrameField& frame,
                           const StructureConstants& constants, int samples,
                           std::uint64_t seed, const Box& box) {
  const int n = frame.dim();
  require_box_dim(box, n, "x");
  Report report;
  double max_bracket = 0.0;
  double min_det = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd x = sample_box(box, rng);
    const Eigen::MatrixXd xi = frame.eval(x);
    min_det = std::min(min_det, frame_det_relative(xi));
    const auto dxi = frame.eval_derivatives(x);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
          double bracket = 0.0;
          for (int m = 0; m < n; ++m) {
            bracket += xi(i, m) * dxi[static_cast<std::size_t>(m)](j, l) -
                       xi(j, m) * dxi[static_cast<std::size_t>(m)](i, l);
          }
          double expected = 0.0;
          for (int k = 0; k < n; ++k) expected += constants(i, j, k) * xi(k, l);
          max_bracket = std::max(max_bracket, std::fabs(bracket - expected));
        }
      }
    }
  }
  report.add("frame-bracket-closure", max_bracket, 1e-9,
             std::to_string(samples) + " samples");
  report.add_flag("frame-nondegenerate", min_det > 1e-10,
                  "min relative |det| = " + std::to_string(min_det));
  return report;
}

/// Constancy of the frame metric: g_kl(x) xi_i^k xi_j^l == G_ij at random
/// points (with g_kl the inverse of the assembled contravariant metric).
inline double metric_constancy_residual(const FrameField& frame,
                                        const FrameMetric& metric, int samples,
                                        std::uint64_t seed, const Box& box) {
  Rng rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd x = sample_box(box, rng);
    const Eigen::MatrixXd xi = frame.eval(x);
    const Eigen::MatrixXd g_up = xi.transpose() * metric.ginv() * xi;
    const Eigen::MatrixXd g_down = g_up.inverse();
    const Eigen::MatrixXd contraction = xi * g_down * xi.transpose();
    worst = std::max(worst,
                     (contraction - metric.g()).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Optional Killing set; row i of `components` is eta_i.  The fields must
/// commute with the frame ([eta_i, xi_j] = 0) and represent the algebra with
/// the plus sign, [eta_i, eta_j] = +C_ij^k eta_k (the generators of the
/// group action are -eta_i, which absorbs the anti-isomorphism).
class KillingSet {
 public:
  explicit KillingSet(std::vector<std::vector<Expr>> components)
      : field_(std::move(components)) {}

  int dim() const { return field_.dim(); }
  const FrameField& field() const { return field_; }

 private:
  FrameField field_;  // reuses evaluation/derivative machinery
};

inline Report verify_killing(const KillingSet& killing, const FrameField& frame,
                             const StructureConstants& constants, int samples,
                             std::uint64_t seed, const Box& box) {
  const int n = frame.dim();
  Report report;
  double max_commute = 0.0;
  double max_algebra = 0.0;
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd x = sample_box(box, rng);
    const Eigen::MatrixXd xi = frame.eval(x);
    const auto dxi = frame.eval_derivatives(x);
    const Eigen::MatrixXd eta = killing.field().eval(x);
    const auto deta = killing.field().eval_derivatives(x);
    // [eta_i, xi_j] = 0
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
          double bracket = 0.0;
          for (int m = 0; m < n; ++m) {
            bracket += eta(i, m) * dxi[static_cast<std::size_t>(m)](j, l) -
                       xi(j, m) * deta[static_cast<std::size_t>(m)](i, l);
          }
          max_commute = std::max(max_commute, std::fabs(bracket));
        }
      }
    }
    // [eta_i, eta_j] = +C_ij^k eta_k
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
          double bracket = 0.0;
          for (int m = 0; m < n; ++m) {
            bracket += eta(i, m) * deta[static_cast<std::size_t>(m)](j, l) -
                       eta(j, m) * deta[static_cast<std::size_t>(m)](i, l);
          }
          double expected = 0.0;
          for (int k = 0; k < n; ++k) expected += constants(i, j, k) * eta(k, l);
          max_algebra = std::max(max_algebra, std::fabs(bracket - expected));
        }
      }
    }
  }
  report.add("killing-commutes-with-frame", max_commute, 1e-9);
  report.add("killing-algebra-brackets", max_algebra, 1e-9);
  return report;
}

}  // namespace hjgeo
