#pragma once

/// Lie-algebra structure: structure constants with their antisymmetry/Jacobi
/// validation, the Lie–Poisson bracket matrix M_ij(f) = C_ij^k f_k, the
/// algebra index (minimal corank of M over the dual space, sampled), and the
/// subalgebra/polarization checks used to admit a chart.
///
/// Indices are 0-based throughout the C++ API; the `.model` file format uses
/// the 1-based convention and converts on load.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjgeo/report.hpp"
#include "hjgeo/rng.hpp"

namespace hjgeo {

class StructureConstants {
 public:
  explicit StructureConstants(int n) : n_(n), c_(static_cast<std::size_t>(n) * n * n, 0.0) {
    if (n <= 0) throw std::invalid_argument("structure constants need n > 0");
  }

  int dim() const { return n_; }

  double operator()(int i, int j, int k) const { return c_[index(i, j, k)]; }

  /// Sets C_ij^k and C_ji^k = -C_ij^k (antisymmetric completion).
  void set_antisymmetric(int i, int j, int k, double value) {
    c_[index(i, j, k)] = value;
    c_[index(j, i, k)] = -value;
  }

  /// Raw setter (used to build deliberately broken tensors in tests).
  void set_raw(int i, int j, int k, double value) { c_[index(i, j, k)] = value; }

  /// Bracket of two algebra vectors: [u,v]^k = sum_ij u^i v^j C_ij^k.
  Eigen::VectorXd bracket(const Eigen::VectorXd& u,
                          const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      if (u[i] == 0.0) continue;
      for (int j = 0; j < n_; ++j) {
        if (v[j] == 0.0) continue;
        const double uv = u[i] * v[j];
        for (int k = 0; k < n_; ++k) out[k] += uv * (*this)(i, j, k);
      }
    }
    return out;
  }

 private:
  std::size_t index(int i, int j, int k) const {
    if (i < 0 || j < 0 || k < 0 || i >= n_ || j >= n_ || k >= n_) {
      throw std::out_of_range("structure constant index out of range");
    }
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }

  int n_;
  std::vector<double> c_;
};

/// Checks antisymmetry and the Jacobi identity; offending index tuples are
/// listed (1-based, truncated) in the check notes.
inline Report validate_structure(const StructureConstants& c) {
  const int n = c.dim();
  Report report;

  double max_antisym = 0.0;
  std::string antisym_note;
  int antisym_count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double r = std::fabs(c(i, j, k) + c(j, i, k));
        if (r > max_antisym) max_antisym = r;
        if (r > 1e-12 && antisym_count < 4) {
          antisym_note += (antisym_count ? ", " : "at (") +
                          std::to_string(i + 1) + "," + std::to_string(j + 1) +
                          "," + std::to_string(k + 1);
          ++antisym_count;
        }
      }
    }
  }
  if (antisym_count) antisym_note += ")";
  report.add("antisymmetry", max_antisym, 1e-12, antisym_note);

  double max_jacobi = 0.0;
  std::string jacobi_note;
  int jacobi_count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        for (int k = 0; k < n; ++k) {
          double sum = 0.0;
          for (int m = 0; m < n; ++m) {
            sum += c(i, j, m) * c(m, l, k) + c(j, l, m) * c(m, i, k) +
                   c(l, i, m) * c(m, j, k);
          }
          const double r = std::fabs(sum);
          if (r > max_jacobi) max_jacobi = r;
          if (r > 1e-12 && jacobi_count < 4) {
            jacobi_note += (jacobi_count ? ", " : "at (") +
                           std::to_string(i + 1) + "," + std::to_string(j + 1) +
                           "," + std::to_string(l + 1) + ";" +
                           std::to_string(k + 1);
            ++jacobi_count;
          }
        }
      }
    }
  }
  if (jacobi_count) jacobi_note += ")";
  report.add("jacobi", max_jacobi, 1e-12, jacobi_note);
  return report;
}

/// Lie–Poisson bracket matrix: M[i][j] = sum_k C_ij^k f_k.
inline Eigen::MatrixXd lie_poisson_matrix(const StructureConstants& c,
                                          const Eigen::VectorXd& f) {
  const int n = c.dim();
  if (f.size() != n) throw std::invalid_argument("covector dimension mismatch");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) sum += c(i, j, k) * f[k];
      m(i, j) = sum;
    }
  }
  return m;
}

/// Corank by singular values with the relative threshold 1e-9 * sigma_max.
/// The zero matrix has corank n (abelian case).
inline int corank(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sigma = svd.singularValues();
  if (sigma.size() == 0) return 0;
  const double threshold = 1e-9 * sigma[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > threshold) ++rank;
  }
  return static_cast<int>(m.rows()) - rank;
}

/// Matrix rank with the same relative threshold.
inline int numeric_rank(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sigma = svd.singularValues();
  const double threshold = 1e-9 * sigma[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > threshold) ++rank;
  }
  return rank;
}

/// Index of the algebra: minimum corank of the Lie–Poisson matrix over
/// `trials` random covectors with entries uniform in [-1, 1].  Unlucky
/// sampling can only overestimate, never underestimate.
inline int lie_index(const StructureConstants& c, int trials,
                     std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("lie_index needs trials >= 1");
  const int n = c.dim();
  Rng rng(seed);
  int best = n;
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) f[i] = rng.symmetric();
    best = std::min(best, corank(lie_poisson_matrix(c, f)));
  }
  return best;
}

/// Subalgebra candidate: rows of `basis` span h in the e_i basis.
struct Subalgebra {
  Eigen::MatrixXd basis;  // rows are basis vectors

  int dimension() const { return numeric_rank(basis); }
};

/// Max residual of [u,v] after projection onto span(basis), over all basis
/// pairs; closed subalgebras give ~0.
inline double subalgebra_closure_residual(const StructureConstants& c,
                                          const Subalgebra& h) {
  const Eigen::MatrixXd basis_t = h.basis.transpose();  // columns span h
  double worst = 0.0;
  for (Eigen::Index a = 0; a < h.basis.rows(); ++a) {
    for (Eigen::Index b = 0; b < h.basis.rows(); ++b) {
      const Eigen::VectorXd w = c.bracket(h.basis.row(a).transpose(),
                                          h.basis.row(b).transpose());
      const Eigen::VectorXd coeffs =
          basis_t.colPivHouseholderQr().solve(w);
      const double residual = (basis_t * coeffs - w).norm();
      if (residual > worst) worst = residual;
    }
  }
  return worst;
}

struct PolarizationResult {
  bool ok = false;
  Report report;
};

/// Checks that h is a polarization of lam: correct dimension
/// (dim h = n - orbit_dim/2), closure under the bracket, and subordination
/// (<lam,[u,v]> = 0 on h x h).  orbit_dim must be even (symplectic leaves).
inline PolarizationResult check_polarization(const StructureConstants& c,
                                             const Subalgebra& h,
                                             const Eigen::VectorXd& lam,
                                             int orbit_dim) {
  if (orbit_dim % 2 != 0) {
    throw std::invalid_argument(
        "orbit dimension must be even (symplectic leaves); got " +
        std::to_string(orbit_dim));
  }
  const int n = c.dim();
  PolarizationResult result;

  const int dim_h = h.dimension();
  const int expected = n - orbit_dim / 2;
  result.report.add_flag(
      "dimension", dim_h == expected,
      "dim h = " + std::to_string(dim_h) + ", expected n - orbit_dim/2 = " +
          std::to_string(expected));

  result.report.add("closure", subalgebra_closure_residual(c, h), 1e-10);

  double max_pairing = 0.0;
  for (Eigen::Index a = 0; a < h.basis.rows(); ++a) {
    for (Eigen::Index b = 0; b < h.basis.rows(); ++b) {
      const Eigen::VectorXd w = c.bracket(h.basis.row(a).transpose(),
                                          h.basis.row(b).transpose());
      max_pairing = std::max(max_pairing, std::fabs(lam.dot(w)));
    }
  }
  result.report.add("subordination", max_pairing, 1e-10);

  result.ok = result.report.all_pass();
  return result;
}

/// Flow of the coadjoint generator of e_i through lam for time t:
/// (df/dt)_j = -sum_k C[i][j][k] f_k, integrated by RK4 in 1000 fixed steps.
inline Eigen::VectorXd coadjoint_flow(const StructureConstants& c,
                                      const Eigen::VectorXd& lam, int direction,
                                      double t) {
  const int n = c.dim();
  if (direction < 0 || direction >= n) {
    throw std::out_of_range("coadjoint_flow direction out of range");
  }
  const auto rhs = [&](const Eigen::VectorXd& f) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) sum += c(direction, j, k) * f[k];
      out[j] = -sum;
    }
    return out;
  };

  Eigen::VectorXd f = lam;
  const int steps = 1000;
  const double h = t / steps;
  if (h == 0.0) return f;
  for (int step = 0; step < steps; ++step) {
    const Eigen::VectorXd k1 = rhs(f);
    const Eigen::VectorXd k2 = rhs(f + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(f + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(f + h * k3);
    f += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return f;
}

}  // namespace hjgeo
