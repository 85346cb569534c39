#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace polyflow::quadrature {

struct QuadratureNotConverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

namespace detail {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
constexpr double xgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
constexpr double wgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
constexpr double wg[4] = {0.129484966168870, 0.279705391489277,
                          0.381830050505119, 0.417959183673469};

template <class F>
inline void gk15(const F& f, double a, double b, double& value, double& err) {
  const double c = 0.5 * (a + b), hl = 0.5 * (b - a);
  const double fc = f(c);
  double res_g = wg[3] * fc;
  double res_k = wgk[7] * fc;
  for (int j = 0; j < 7; ++j) {
    const double x = hl * xgk[j];
    const double fsum = f(c - x) + f(c + x);
    res_k += wgk[j] * fsum;
    if (j % 2 == 1) res_g += wg[j / 2] * fsum;
  }
  value = res_k * hl;
  err = std::abs((res_k - res_g) * hl);
}

template <class F>
inline void adapt(const F& f, double a, double b, double tol, int depth,
                  QuadResult& out) {
  double v, e;
  gk15(f, a, b, v, e);
  if (e <= tol || depth > 48) {
    if (depth > 48 && e > tol)
      throw QuadratureNotConverged("adaptive quadrature: recursion limit");
    out.value += v;
    out.error += e;
    out.panels++;
    return;
  }
  const double m = 0.5 * (a + b);
  adapt(f, a, m, 0.5 * tol, depth + 1, out);
  adapt(f, m, b, 0.5 * tol, depth + 1, out);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod 7-15 panels on [a, b].
template <class F>
QuadResult integrate(const F& f, double a, double b, double tol = 1e-10) {
  QuadResult out;
  detail::adapt(f, a, b, tol, 0, out);
  return out;
}

/// Improper integral over [a, inf): direct part up to r0, then the
/// compactified tail via u = 1/r.
template <class F>
QuadResult integrate_to_infinity(const F& f, double a, double r0,
                                 double tol = 1e-10) {
  QuadResult head = integrate(f, a, r0, 0.5 * tol);
  auto tail_f = [&](double u) { return f(1.0 / u) / (u * u); };
  QuadResult tail = integrate(tail_f, 1e-14, 1.0 / r0, 0.5 * tol);
  QuadResult out;
  out.value = head.value + tail.value;
  out.error = head.error + tail.error;
  out.panels = head.panels + tail.panels;
  return out;
}

}  // namespace polyflow::quadrature
