#pragma once

/// Adaptive Gauss–Kronrod quadrature (7-point Gauss / 15-point Kronrod pair,
/// worst-interval-first bisection).  Nodes are strictly interior, so
/// integrable endpoint behaviour (e.g. square-root turning points of the
/// reduced solver) needs no special casing.  Subdivision order is fully
/// deterministic: ties in the error heap are broken by insertion order.

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace hjgeo {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;   ///< accumulated error estimate
  int intervals = 0;    ///< number of Kronrod panels evaluated
  bool converged = false;
};

namespace detail {

// 7/15 Gauss–Kronrod nodes and weights on [-1, 1] (positive half; the rule is
// symmetric).  Even indices of `kronrod_x` are the embedded Gauss points.
inline constexpr double kronrod_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kronrod_w[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gauss_w[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b;
  double value;
  double error;
  std::uint64_t order;  // insertion counter for deterministic tie-breaking
};

struct PanelWorse {
  bool operator()(const Panel& lhs, const Panel& rhs) const {
    if (lhs.error != rhs.error) return lhs.error < rhs.error;
    return lhs.order > rhs.order;  // older panel first on ties
  }
};

/// Evaluates the G7/K15 pair on [a, b]; returns the Kronrod value and a
/// QUADPACK-style scaled error estimate.
template <typename F>
Panel kronrod_panel(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(center - half * kronrod_x[i]);
    fv[14 - i] = f(center + half * kronrod_x[i]);
  }
  fv[7] = f(center);

  double result_kronrod = kronrod_w[7] * fv[7];
  double result_gauss = gauss_w[3] * fv[7];
  double result_abs = kronrod_w[7] * std::fabs(fv[7]);
  for (int i = 0; i < 7; ++i) {
    const double pair = fv[i] + fv[14 - i];
    result_kronrod += kronrod_w[i] * pair;
    if (i % 2 == 1) result_gauss += gauss_w[i / 2] * pair;
    result_abs += kronrod_w[i] * (std::fabs(fv[i]) + std::fabs(fv[14 - i]));
  }
  const double mean = 0.5 * result_kronrod;
  double result_asc = kronrod_w[7] * std::fabs(fv[7] - mean);
  for (int i = 0; i < 7; ++i) {
    result_asc += kronrod_w[i] *
                  (std::fabs(fv[i] - mean) + std::fabs(fv[14 - i] - mean));
  }

  double err = std::fabs(result_kronrod - result_gauss) * half;
  result_abs *= std::fabs(half);
  result_asc *= std::fabs(half);
  if (result_asc != 0.0 && err != 0.0) {
    err = result_asc * std::fmin(1.0, std::pow(200.0 * err / result_asc, 1.5));
  }
  const double eps = std::numeric_limits<double>::epsilon();
  if (result_abs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::fmax(err, 50.0 * eps * result_abs);
  }
  return Panel{a, b, result_kronrod * half, err, 0};
}

}  // namespace detail

/// Integrates f over [a, b] to the requested absolute/relative tolerance.
/// The returned error field is the accumulated per-panel estimate; callers
/// relying on tolerance halving (convergence audits) compare against it.
template <typename F>
QuadratureResult integrate(F&& f, double a, double b, double abs_tol = 1e-12,
                           double rel_tol = 1e-12, int max_intervals = 2000) {
  QuadratureResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }

  std::uint64_t counter = 0;
  std::priority_queue<detail::Panel, std::vector<detail::Panel>,
                      detail::PanelWorse>
      heap;
  detail::Panel first = detail::kronrod_panel(f, a, b);
  first.order = counter++;
  heap.push(first);
  out.intervals = 1;

  double total_value = first.value;
  double total_error = first.error;
  while (out.intervals < max_intervals) {
    const double tolerance = std::fmax(abs_tol, rel_tol * std::fabs(total_value));
    if (total_error <= tolerance) break;
    detail::Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    detail::Panel left = detail::kronrod_panel(f, worst.a, mid);
    detail::Panel right = detail::kronrod_panel(f, mid, worst.b);
    left.order = counter++;
    right.order = counter++;
    total_value += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    out.intervals += 1;
  }

  out.value = sign * total_value;
  out.error = total_error;
  out.converged =
      total_error <= std::fmax(abs_tol, rel_tol * std::fabs(total_value));
  return out;
}

}  // namespace hjgeo
