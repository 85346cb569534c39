#include "polyflow/dynamics.hpp"

#include <cmath>

namespace polyflow::dynamics {

LinearizationData linearization() {
  LinearizationData L;
  L.A << 0, 1, 0, 0,
         0, 0, 1, 0,
         0, 0, 0, 1,
        -9, 0, 10, 0;
  L.eigenvalues = {-3, -1, 1, 3};
  L.eigenvectors << 1, 1, 1, 1,
                   -3, -1, 1, 3,
                    9, 1, 1, 9,
                  -27, -1, 1, 27;
  L.char_poly = {9, 0, -10, 0, 1};
  return L;
}

Eigen::Matrix4d linearization_matrix() {
  return linearization().A.cast<double>();
}

bool eigenpairs_exact(const LinearizationData& L) {
  for (int j = 0; j < 4; ++j) {
    const auto v = L.eigenvectors.col(j);
    const auto Av = (L.A * v).eval();
    for (int i = 0; i < 4; ++i)
      if (Av[i] != L.eigenvalues[j] * v[i]) return false;
  }
  return true;
}

std::int64_t char_poly_det(const LinearizationData& L, std::int64_t lambda) {
  // integer cofactor expansion of det(A - lambda I)
  std::int64_t M[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) M[i][j] = L.A(i, j) - (i == j ? lambda : 0);
  auto det3 = [&](int r0, int r1, int r2, int c0, int c1, int c2) {
    return M[r0][c0] * (M[r1][c1] * M[r2][c2] - M[r1][c2] * M[r2][c1]) -
           M[r0][c1] * (M[r1][c0] * M[r2][c2] - M[r1][c2] * M[r2][c0]) +
           M[r0][c2] * (M[r1][c0] * M[r2][c1] - M[r1][c1] * M[r2][c0]);
  };
  std::int64_t det = 0;
  int sign = 1;
  const int cols[4] = {0, 1, 2, 3};
  for (int j = 0; j < 4; ++j) {
    int cc[3], k = 0;
    for (int c : cols)
      if (c != j) cc[k++] = c;
    det += sign * M[0][j] * det3(1, 2, 3, cc[0], cc[1], cc[2]);
    sign = -sign;
  }
  return det;
}

Vec4 heteroclinic_state(double s) {
  const double sech = 1.0 / std::cosh(s);
  const double th = std::tanh(s);
  return {2.0 * std::atan(std::exp(s)), sech, -sech * th,
          sech * (th * th - sech * sech)};
}

PhaseState seed_unstable(double phi1, double phi3, double cap) {
  const double r = std::hypot(phi1, phi3);
  if (r > cap) throw SeedTooLarge("seed_unstable: |(phi1, phi3)| exceeds cap");
  // linear part of the unstable-manifold graph over the (Phi1, Phi3) plane
  return {0.0, Vec4{phi1, 0.75 * phi1 + 0.25 * phi3, phi3,
                    -2.25 * phi1 + 3.25 * phi3}};
}

namespace {

GuardSet make_guards(const OrbitOptions& o) {
  GuardSet g;
  g.blowup_norm = o.blowup_norm;
  g.event_tol = o.event_tol;
  if (o.phi3_events) {
    g.events.push_back({EventKind::Phi3HitsPlusOne,
                        [](double, const Vec4& y) { return y[2] - 1.0; }, +1,
                        false, true});
    g.events.push_back({EventKind::Phi3HitsMinusOne,
                        [](double, const Vec4& y) { return y[2] + 1.0; }, -1,
                        false, true});
  }
  if (o.phi2_events)
    g.events.push_back({EventKind::Phi2Zero,
                        [](double, const Vec4& y) { return y[1]; }, 0, false,
                        false});
  if (o.phi1_target) {
    const double a = *o.phi1_target;
    g.events.push_back({EventKind::Custom,
                        [a](double, const Vec4& y) { return y[0] - a; }, 0,
                        true, true});
  }
  return g;
}

}  // namespace

Orbit integrate_orbit(const PhaseState& seed, double s_span,
                      const OrbitOptions& opts) {
  Orbit orb;
  orb.seed = seed.phi;
  orb.seed_s = seed.s;
  orb.trajectory = integrate_adaptive(
      [](double, const Vec4& y) { return phase_rhs(y); }, seed,
      seed.s + s_span, opts.tol, make_guards(opts));
  return orb;
}

Orbit integrate_orbit(const PhaseState& seed, double s_span, double tol) {
  OrbitOptions o;
  o.tol = tol;
  return integrate_orbit(seed, s_span, o);
}

Trajectory integrate_backward(const PhaseState& seed, double s_back,
                              double tol) {
  GuardSet g;
  g.blowup_norm = 1e6;
  return integrate_adaptive(
      [](double, const Vec4& y) { return (-phase_rhs(y)).eval(); },
      PhaseState{0.0, seed.phi}, s_back, tol, g);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

namespace {

// s* and tail-exponent fit for a blown-up orbit; mirror-normalized.
double estimate_s_max(const Trajectory& tr) {
  const auto states = tr.states();
  const double sgn = states.back().phi[0] >= 0 ? 1.0 : -1.0;
  std::vector<double> ts, ws;
  for (const auto& st : states) {
    const double p4 = sgn * st.phi[3];
    if (p4 > 1.0) {
      ts.push_back(st.s);
      ws.push_back(std::pow(p4, -1.0 / 3.0));
    }
  }
  if (ts.size() < 8) return tr.s_end();
  const std::size_t k = ts.size() - std::max<std::size_t>(4, ts.size() * 3 / 10);
  std::vector<double> tt(ts.begin() + k, ts.end()), ww(ws.begin() + k, ws.end());
  const double slope = fit_slope(tt, ww);
  if (!(slope < 0.0)) return tr.s_end();
  double mt = 0, mw = 0;
  for (std::size_t i = 0; i < tt.size(); ++i) {
    mt += tt[i];
    mw += ww[i];
  }
  mt /= double(tt.size());
  mw /= double(tt.size());
  return mt - mw / slope;  // where the fitted Phi4^{-1/3} line hits zero
}

}  // namespace

OrbitClass classify(const Orbit& orbit, double shadow_tol) {
  const Trajectory& tr = orbit.trajectory;

  if (tr.guard_fired()) {
    OrbitClass c;
    c.tag = OrbitClass::Tag::Blowup;
    c.sign = tr.back().phi[0] >= 0 ? +1 : -1;
    c.s_max_estimate = estimate_s_max(tr);
    return c;
  }

  // shadow test against +-Y, aligned at the phi1 = +-pi/2 crossing
  for (int sign : {+1, -1}) {
    const double level = sign * M_PI / 2.0;
    // find the crossing on dense output
    double s_cross = std::numeric_limits<double>::quiet_NaN();
    const auto states = tr.states();
    for (std::size_t i = 1; i < states.size(); ++i) {
      const double a = states[i - 1].phi[0] - level;
      const double b = states[i].phi[0] - level;
      if (a == 0.0 || (a < 0.0) != (b < 0.0)) {
        double lo = states[i - 1].s, hi = states[i].s;
        for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double g = tr.eval(mid)[0] - level;
          if ((g < 0.0) == (a < 0.0))
            lo = mid;
          else
            hi = mid;
        }
        s_cross = 0.5 * (lo + hi);
        break;
      }
    }
    if (!std::isfinite(s_cross)) continue;

    double dist = 0.0;
    const double ds = 0.01;
    for (double s = tr.s_begin(); s <= tr.s_end(); s += ds) {
      const Vec4 yv = sign * heteroclinic_state(s - s_cross);
      dist = std::max(dist, (tr.eval(s) - yv).norm());
      if (dist > shadow_tol) break;
    }
    if (dist <= shadow_tol) {
      OrbitClass c;
      c.tag = OrbitClass::Tag::HeteroclinicShadow;
      c.sign = sign;
      c.shadow_distance = dist;
      return c;
    }
  }

  throw UndecidedOrbit("classify: neither criterion met; extend the span");
}

Orbit integrate_and_classify(const PhaseState& seed, double s_span, double tol,
                             double shadow_tol, int max_extensions) {
  double span = s_span;
  for (int k = 0; k <= max_extensions; ++k) {
    Orbit orb = integrate_orbit(seed, span, tol);
    try {
      orb.cls = classify(orb, shadow_tol);
      return orb;
    } catch (const UndecidedOrbit&) {
      span *= 1.5;
    }
  }
  throw UndecidedOrbit("integrate_and_classify: span extensions exhausted");
}

DecayReport backward_decay_check(const PhaseState& seed, double s_back,
                                 double tol) {
  const Trajectory tr = integrate_backward(seed, s_back, tol);

  // |Phi| decays until backward integration noise (growing like e^{3 sigma})
  // takes over, so fit log|Phi| between the initial transient and the norm
  // minimum.
  const int n = 400;
  std::vector<double> sig(n + 1), lognorm(n + 1);
  int i_min = n;
  for (int i = 0; i <= n; ++i) {
    sig[i] = s_back * double(i) / n;
    lognorm[i] = std::log(tr.eval(sig[i]).norm());
    if (lognorm[i] < lognorm[i_min]) i_min = i;
  }
  DecayReport rep;
  rep.window_lo = std::min(1.0, 0.2 * s_back);
  rep.window_hi = std::max(rep.window_lo + 0.5, 0.95 * sig[i_min]);
  std::vector<double> xs, ys;
  for (int i = 0; i <= n; ++i)
    if (sig[i] >= rep.window_lo && sig[i] <= rep.window_hi) {
      xs.push_back(sig[i]);
      ys.push_back(lognorm[i]);
    }
  rep.n_samples = static_cast<int>(xs.size());
  rep.rate = xs.size() >= 4 ? -fit_slope(xs, ys) : 0.0;
  rep.pass = rep.rate >= 1.0 - 0.05;
  return rep;
}

}  // namespace polyflow::dynamics
