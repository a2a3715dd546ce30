#pragma once

/// Incomplete Legendre elliptic integrals F, E, Pi via the Carlson symmetric
/// forms R_F, R_C, R_D, R_J (duplication algorithms), plus the closed-form
/// antiderivative of the reduced solver's integrand for the bundled
/// four-dimensional curved model, used as an independent oracle against the
/// numeric quadrature path.
///
/// Convention note: the Legendre forms here take the SINE of the amplitude
/// as their first argument and the PARAMETER m (the squared modulus) as
/// their last:
///   F(z, m)     = int_0^asin(z) dt / sqrt(1 - m sin^2 t)
///   E(z, m)     = int_0^asin(z) sqrt(1 - m sin^2 t) dt
///   Pi(z, a, m) = int_0^asin(z) dt / ((1 - a sin^2 t) sqrt(1 - m sin^2 t))
/// Because tables differ on both choices, the closed form accepts an explicit
/// EllipticConvention; the derivative identity dS/dq = p(q) singles out
/// sine+parameter as the correct reading, and the tests pin that down.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hjgeo {

namespace detail {

inline void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0)) {
    throw std::domain_error(std::string("carlson: argument ") + name +
                            " must be non-negative");
  }
}

}  // namespace detail

/// Carlson symmetric integral R_F(x,y,z).  Arguments non-negative, at most
/// one zero.  `threshold` bounds the scaled differences before the tail
/// series is applied; the truncation error is O(threshold^6).
inline double carlson_rf(double x, double y, double z,
                         double threshold = 1e-3) {
  detail::require_nonnegative(x, "x");
  detail::require_nonnegative(y, "y");
  detail::require_nonnegative(z, "z");
  if (x + y <= 0.0 || y + z <= 0.0 || z + x <= 0.0) {
    throw std::domain_error("carlson: R_F needs at most one zero argument");
  }
  double ave = 0.0, dx = 0.0, dy = 0.0, dz = 0.0;
  do {
    const double sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z);
    const double lam = sx * (sy + sz) + sy * sz;
    x = 0.25 * (x + lam);
    y = 0.25 * (y + lam);
    z = 0.25 * (z + lam);
    ave = (x + y + z) / 3.0;
    dx = (ave - x) / ave;
    dy = (ave - y) / ave;
    dz = (ave - z) / ave;
  } while (std::max({std::fabs(dx), std::fabs(dy), std::fabs(dz)}) >
           threshold);
  const double e2 = dx * dy - dz * dz;
  const double e3 = dx * dy * dz;
  return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) /
         std::sqrt(ave);
}

/// Carlson degenerate integral R_C(x,y); x >= 0, y != 0 (Cauchy principal
/// value for y < 0).
inline double carlson_rc(double x, double y, double threshold = 1e-3) {
  detail::require_nonnegative(x, "x");
  if (y == 0.0) {
    throw std::domain_error("carlson: R_C needs y != 0");
  }
  double xt = x, yt = y, scale = 1.0;
  if (y < 0.0) {
    xt = x - y;
    yt = -y;
    scale = std::sqrt(x) / std::sqrt(xt);
  }
  double ave = 0.0, s = 0.0;
  do {
    const double lam = 2.0 * std::sqrt(xt) * std::sqrt(yt) + yt;
    xt = 0.25 * (xt + lam);
    yt = 0.25 * (yt + lam);
    ave = (xt + 2.0 * yt) / 3.0;
    s = (yt - ave) / ave;
  } while (std::fabs(s) > threshold);
  const double poly =
      1.0 + s * s * (0.3 + s * (1.0 / 7.0 + s * (0.375 + s * 9.0 / 22.0)));
  return scale * poly / std::sqrt(ave);
}

/// Carlson symmetric integral R_D(x,y,z) = R_J(x,y,z,z); x,y non-negative
/// with at most one zero, z > 0.
inline double carlson_rd(double x, double y, double z,
                         double threshold = 1e-3) {
  detail::require_nonnegative(x, "x");
  detail::require_nonnegative(y, "y");
  if (x + y <= 0.0 || !(z > 0.0)) {
    throw std::domain_error("carlson: R_D needs x+y > 0 and z > 0");
  }
  double sum = 0.0;
  double fac = 1.0;
  double ave = 0.0, dx = 0.0, dy = 0.0, dz = 0.0;
  do {
    const double sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z);
    const double lam = sx * (sy + sz) + sy * sz;
    sum += fac / (sz * (z + lam));
    fac *= 0.25;
    x = 0.25 * (x + lam);
    y = 0.25 * (y + lam);
    z = 0.25 * (z + lam);
    ave = 0.2 * (x + y + 3.0 * z);
    dx = (ave - x) / ave;
    dy = (ave - y) / ave;
    dz = (ave - z) / ave;
  } while (std::max({std::fabs(dx), std::fabs(dy), std::fabs(dz)}) >
           threshold);
  const double ea = dx * dy;
  const double eb = dz * dz;
  const double ec = ea - eb;
  const double ed = ea - 6.0 * eb;
  const double ee = ed + ec + ec;
  const double series =
      1.0 +
      ed * (-3.0 / 14.0 + (9.0 / 88.0) * ed - (4.5 / 26.0) * dz * ee) +
      dz * ((1.0 / 6.0) * ee + dz * (-(9.0 / 22.0) * ec + dz * (3.0 / 26.0) * ea));
  return 3.0 * sum + fac * series / (ave * std::sqrt(ave));
}

/// Carlson symmetric integral R_J(x,y,z,p); x,y,z non-negative with at most
/// one zero, p > 0 (the principal-value extension to p < 0 is not needed
/// here and is rejected).
inline double carlson_rj(double x, double y, double z, double p,
                         double threshold = 1e-3) {
  detail::require_nonnegative(x, "x");
  detail::require_nonnegative(y, "y");
  detail::require_nonnegative(z, "z");
  if (x + y <= 0.0 || y + z <= 0.0 || z + x <= 0.0 || !(p > 0.0)) {
    throw std::domain_error(
        "carlson: R_J needs at most one zero argument and p > 0");
  }
  double sum = 0.0;
  double fac = 1.0;
  double ave = 0.0, dx = 0.0, dy = 0.0, dz = 0.0, dp = 0.0;
  do {
    const double sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z);
    const double lam = sx * (sy + sz) + sy * sz;
    const double alpha = p * (sx + sy + sz) + sx * sy * sz;
    const double beta = p * (p + lam) * (p + lam);
    sum += fac * carlson_rc(alpha * alpha, beta, threshold);
    fac *= 0.25;
    x = 0.25 * (x + lam);
    y = 0.25 * (y + lam);
    z = 0.25 * (z + lam);
    p = 0.25 * (p + lam);
    ave = 0.2 * (x + y + z + 2.0 * p);
    dx = (ave - x) / ave;
    dy = (ave - y) / ave;
    dz = (ave - z) / ave;
    dp = (ave - p) / ave;
  } while (std::max({std::fabs(dx), std::fabs(dy), std::fabs(dz),
                     std::fabs(dp)}) > threshold);
  const double ea = dx * (dy + dz) + dy * dz;
  const double eb = dx * dy * dz;
  const double ec = dp * dp;
  const double ed = ea - 3.0 * ec;
  const double ee = eb + 2.0 * dp * (ea - ec);
  const double series =
      1.0 +
      ed * (-3.0 / 14.0 + (9.0 / 88.0) * ed - (4.5 / 26.0) * ee) +
      eb * (1.0 / 6.0 + dp * (-3.0 / 7.0 + dp * (3.0 / 26.0))) +
      dp * ea * (1.0 / 3.0 - dp * 3.0 / 22.0) - (1.0 / 3.0) * dp * ec;
  return 3.0 * sum + fac * series / (ave * std::sqrt(ave));
}

namespace detail {

inline void require_legendre_args(double z, double m_ell) {
  if (!(z >= 0.0 && z <= 1.0)) {
    throw std::domain_error("legendre: first argument must lie in [0,1]");
  }
  if (m_ell * z * z > 1.0) {
    throw std::domain_error("legendre: parameter puts the integrand outside "
                            "the real domain");
  }
}

}  // namespace detail

/// F(z, m) = z R_F(1-z^2, 1-m z^2, 1).
inline double ellip_F(double z, double m_ell) {
  detail::require_legendre_args(z, m_ell);
  if (z == 0.0) return 0.0;
  return z * carlson_rf(1.0 - z * z, 1.0 - m_ell * z * z, 1.0);
}

/// E(z, m) = z R_F(...) - (m/3) z^3 R_D(1-z^2, 1-m z^2, 1).
inline double ellip_E(double z, double m_ell) {
  detail::require_legendre_args(z, m_ell);
  if (z == 0.0) return 0.0;
  const double x = 1.0 - z * z;
  const double y = 1.0 - m_ell * z * z;
  return z * carlson_rf(x, y, 1.0) -
         (m_ell / 3.0) * z * z * z * carlson_rd(x, y, 1.0);
}

/// Pi(z, a, m) = z R_F(...) + (a/3) z^3 R_J(1-z^2, 1-m z^2, 1, 1-a z^2),
/// with characteristic a entering as 1/((1 - a sin^2 t) ...).
inline double ellip_Pi(double z, double a, double m_ell) {
  detail::require_legendre_args(z, m_ell);
  if (z == 0.0) return 0.0;
  const double x = 1.0 - z * z;
  const double y = 1.0 - m_ell * z * z;
  const double p = 1.0 - a * z * z;
  if (!(p > 0.0)) {
    throw std::domain_error("legendre: characteristic pole inside the "
                            "integration range");
  }
  return z * carlson_rf(x, y, 1.0) +
         (a / 3.0) * z * z * z * carlson_rj(x, y, 1.0, p);
}

/// Argument conventions for the closed-form evaluation: first argument sine
/// of the amplitude vs the amplitude itself, last argument parameter m = k^2
/// vs modulus k.
enum class EllipticConvention {
  sine_parameter,
  sine_modulus,
  amplitude_parameter,
  amplitude_modulus,
};

/// Roots theta_+ > 0 > theta_- of the depressed quadratic
/// D(theta) = -j1^2 theta^2 - (m^2 + 3 j1^2) theta - 4 (m^2 + 2 j1 j2 + j2^2)
/// controlling the reduced solution's domain.
struct MttRoots {
  double theta_plus = 0.0;
  double theta_minus = 0.0;
};

/// Computes the roots, throwing std::domain_error when (j,m) is inadmissible
/// (the reduced equation then has no real solution anywhere).
inline MttRoots mtt_theta_roots(double j1, double j2, double m) {
  if (j1 == 0.0) {
    throw std::domain_error("mtt: j1 must be nonzero (regular orbit)");
  }
  const double m2 = m * m;
  const double delta = (m2 - j1 * j1 + 4.0 * j1 * j2) *
                       (m2 - 9.0 * j1 * j1 - 4.0 * j1 * j2);
  if (!(delta > 0.0)) {
    throw std::domain_error("mtt: inadmissible (j,m): discriminant " +
                            std::to_string(delta) + " is not positive");
  }
  const double sqrt_delta = std::sqrt(delta);
  if (!(sqrt_delta > m2 + 3.0 * j1 * j1)) {
    throw std::domain_error(
        "mtt: inadmissible (j,m): sqrt(discriminant) = " +
        std::to_string(sqrt_delta) + " does not exceed m^2 + 3 j1^2 = " +
        std::to_string(m2 + 3.0 * j1 * j1));
  }
  MttRoots roots;
  roots.theta_plus = (sqrt_delta - (m2 + 3.0 * j1 * j1)) / (2.0 * j1 * j1);
  roots.theta_minus = -(sqrt_delta + (m2 + 3.0 * j1 * j1)) / (2.0 * j1 * j1);
  return roots;
}

/// Half-width of the open interval on which the reduced solution exists:
/// |q| < sqrt(theta_+)/k.
inline double mtt_domain_halfwidth(double j1, double j2, double m, double k) {
  if (!(k > 0.0)) {
    throw std::invalid_argument("mtt: the model constant k must be positive");
  }
  return std::sqrt(mtt_theta_roots(j1, j2, m).theta_plus) / k;
}

/// Closed-form reduced solution, normalized so the value at q = 0 vanishes.
/// The elliptic bracket is an antiderivative in |q| only (its argument
/// sqrt(1 - k^2 q^2 / theta_+) is even in q), so it is extended oddly; the
/// logarithmic term is already even, matching the even part of the
/// integrand.
inline double mtt_reduced_closed_form(
    double q, double j1, double j2, double m, double k,
    EllipticConvention convention = EllipticConvention::sine_parameter) {
  if (!(k > 0.0)) {
    throw std::invalid_argument("mtt: the model constant k must be positive");
  }
  const MttRoots roots = mtt_theta_roots(j1, j2, m);
  const double tp = roots.theta_plus;
  const double tm = roots.theta_minus;
  const double halfwidth = std::sqrt(tp) / k;
  if (!(std::fabs(q) < halfwidth)) {
    throw std::domain_error("mtt: q = " + std::to_string(q) +
                            " outside the open domain (-" +
                            std::to_string(halfwidth) + ", " +
                            std::to_string(halfwidth) + ")");
  }

  const double spread = std::sqrt(tp - tm);
  const double m_ell = tp / (tp - tm);
  const double a = tp / (4.0 + tp);

  const auto bracket = [&](double qq) {
    double first = std::sqrt(1.0 - k * k * qq * qq / tp);
    double last = m_ell;
    switch (convention) {
      case EllipticConvention::sine_parameter:
        break;
      case EllipticConvention::sine_modulus:
        last = m_ell * m_ell;
        break;
      case EllipticConvention::amplitude_parameter:
        first = std::sin(first);
        break;
      case EllipticConvention::amplitude_modulus:
        first = std::sin(first);
        last = m_ell * m_ell;
        break;
    }
    return spread * ellip_E(first, last) -
           (4.0 + tp) / spread * ellip_F(first, last) +
           (4.0 + tm) / spread * ellip_Pi(first, a, last);
  };

  const double even_part =
      (j1 + j2) / k * std::log(1.0 + k * k * q * q / 4.0);
  const double sign_q = (q > 0.0) ? 1.0 : (q < 0.0 ? -1.0 : 0.0);
  const double odd_part = sign_q * (2.0 * std::fabs(j1) / k) *
                          (bracket(std::fabs(q)) - bracket(0.0));
  return even_part + odd_part;
}

}  // namespace hjgeo
