#include "polyflow/maps.hpp"

#include "polyflow/quadrature.hpp"
#include "polyflow/reduction.hpp"

#include <cmath>

namespace polyflow::maps {

using dynamics::F1;
using dynamics::F2;
using dynamics::phase_rhs;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

BiharmonicMapProfile bubble(double lambda, const RadialGrid& grid) {
  if (!(lambda > 0.0)) throw std::invalid_argument("bubble: lambda must be > 0");
  grid.validate();
  BiharmonicMapProfile p;
  p.kind = BiharmonicMapProfile::Kind::Bubble;
  p.lambda = lambda;
  p.grid = grid;
  const int n = grid.size();
  p.psi.resize(n);
  p.dpsi.resize(n);
  p.d2psi.resize(n);
  p.d3psi.resize(n);
  p.d4psi.resize(n);
  for (int j = 0; j < n; ++j) {
    const double r = grid.nodes[j];
    const double q = 1.0 + lambda * lambda * r * r;
    p.psi[j] = 2.0 * std::atan(lambda * r);
    p.dpsi[j] = 2.0 * lambda / q;
    p.d2psi[j] = -4.0 * std::pow(lambda, 3) * r / (q * q);
    p.d3psi[j] = -4.0 * std::pow(lambda, 3) * (1.0 - 3.0 * lambda * lambda * r * r) /
                 (q * q * q);
    p.d4psi[j] = 48.0 * std::pow(lambda, 5) * r * (1.0 - lambda * lambda * r * r) /
                 (q * q * q * q);
  }
  p.boundary_value = 2.0 * std::atan(lambda * grid.r_max());
  {
    const double r = grid.r_max();
    p.boundary_derivative = 2.0 * lambda / (1.0 + lambda * lambda * r * r);
  }
  p.eval2 = [lambda](double r) -> std::array<double, 3> {
    const double q = 1.0 + lambda * lambda * r * r;
    return {2.0 * std::atan(lambda * r), 2.0 * lambda / q,
            -4.0 * lambda * lambda * lambda * r / (q * q)};
  };
  return p;
}

namespace {

// chain-rule transfer of a phase state to r-derivatives of psi(r) = Phi1(log r);
// the fourth derivative closes through the flow field.
void state_to_derivatives(const Vec4& phi, double r, double& d1, double& d2,
                          double& d3, double& d4) {
  const double p2 = phi[1], p3 = phi[2], p4 = phi[3];
  const double dp4 = F1(phi[0], p3) + p2 * p2 * F2(phi[0], p3);
  const double r2 = r * r, r3 = r2 * r, r4 = r2 * r2;
  d1 = p2 / r;
  d2 = (p3 - p2) / r2;
  d3 = (p4 - 3.0 * p3 + 2.0 * p2) / r3;
  d4 = (dp4 - 6.0 * p4 + 11.0 * p3 - 6.0 * p2) / r4;
}

BiharmonicMapProfile trivial_profile(const RadialGrid& grid) {
  BiharmonicMapProfile p;
  p.kind = BiharmonicMapProfile::Kind::Trivial;
  p.grid = grid;
  const int n = grid.size();
  p.psi = Eigen::ArrayXd::Zero(n);
  p.dpsi = Eigen::ArrayXd::Zero(n);
  p.d2psi = Eigen::ArrayXd::Zero(n);
  p.d3psi = Eigen::ArrayXd::Zero(n);
  p.d4psi = Eigen::ArrayXd::Zero(n);
  p.eval2 = [](double) -> std::array<double, 3> { return {0.0, 0.0, 0.0}; };
  return p;
}

}  // namespace

BiharmonicMapProfile construct_map(double a, const RadialGrid& grid,
                                   const ConstructOptions& opts) {
  grid.validate();
  if (a == 0.0) return trivial_profile(grid);

  const double sgn = a > 0.0 ? 1.0 : -1.0;
  const PhaseState seed = dynamics::seed_unstable(sgn * opts.eps * opts.seed_dir[0],
                                                  sgn * opts.eps * opts.seed_dir[1]);

  // Phi1 ~ (1/3) log Phi4 near blowup, so the guard must sit beyond the
  // target level for the crossing event to fire first
  const double guard =
      std::min(1e300, std::max(1e6, std::exp(3.0 * (std::abs(a) + 2.0))));

  dynamics::OrbitOptions oo;
  oo.tol = opts.tol;
  oo.blowup_norm = guard;
  oo.phi3_events = false;
  oo.phi2_events = false;

  GuardSet g;
  g.blowup_norm = guard;
  EventSpec cross;
  cross.kind = EventKind::Custom;
  cross.value = [a](double, const Vec4& y) { return y[0] - a; };
  cross.direction = 0;
  cross.terminal = opts.first_crossing;
  cross.once = opts.first_crossing;
  g.events.push_back(cross);

  Trajectory forward = integrate_adaptive(
      [](double, const Vec4& y) { return phase_rhs(y); }, seed, seed.s + 80.0,
      opts.tol, g);

  double s_a = kNaN;
  for (const auto& e : forward.events())
    if (e.kind == EventKind::Custom) s_a = e.s;  // last crossing wins
  if (!std::isfinite(s_a))
    throw TargetUnreachableOnOrbit(
        "construct_map: Phi1 never reached the target before the guard");

  // refine the crossing on dense output until |Phi1 - a| is at event scale
  {
    double lo = s_a - 1e-6, hi = s_a + 1e-6;
    lo = std::max(lo, forward.s_begin());
    hi = std::min(hi, forward.s_end());
    const double ga = forward.eval(lo)[0] - a;
    if ((ga < 0.0) != (forward.eval(hi)[0] - a < 0.0)) {
      while (hi - lo > 1e-14) {
        const double mid = 0.5 * (lo + hi);
        if ((forward.eval(mid)[0] - a < 0.0) == (ga < 0.0))
          lo = mid;
        else
          hi = mid;
      }
      s_a = 0.5 * (lo + hi);
    }
  }

  const auto fwd = std::make_shared<const Trajectory>(std::move(forward));
  const auto bwd = std::make_shared<const Trajectory>(
      dynamics::integrate_backward(seed, opts.backward_span, opts.tol));

  BiharmonicMapProfile p;
  p.kind = BiharmonicMapProfile::Kind::OrbitShot;
  p.grid = grid;
  p.seed = seed.phi;
  p.s_shift = s_a;

  auto state_at = [fwd, bwd, s_a](double s_rel) -> Vec4 {
    const double s = s_a + s_rel;  // absolute orbit time
    if (s >= fwd->s_begin()) return fwd->eval(std::min(s, fwd->s_end()));
    const double sigma = fwd->s_begin() - s;  // backward clock
    if (sigma >= bwd->s_end()) return Vec4::Zero();
    return bwd->eval(sigma);
  };

  const int n = grid.size();
  p.psi.resize(n);
  p.dpsi.resize(n);
  p.d2psi.resize(n);
  p.d3psi.resize(n);
  p.d4psi.resize(n);
  p.psi[0] = 0.0;
  p.dpsi[0] = kNaN;
  p.d2psi[0] = kNaN;
  p.d3psi[0] = kNaN;
  p.d4psi[0] = kNaN;
  for (int j = 1; j < n; ++j) {
    const double r = grid.nodes[j];
    const Vec4 st = state_at(std::log(r));
    p.psi[j] = st[0];
    state_to_derivatives(st, r, p.dpsi[j], p.d2psi[j], p.d3psi[j], p.d4psi[j]);
  }
  {
    const Vec4 st = state_at(0.0);
    p.boundary_value = st[0];
    p.boundary_derivative = st[1];
  }
  p.eval2 = [state_at](double r) -> std::array<double, 3> {
    if (!(r > 0.0)) return {0.0, 0.0, 0.0};
    const Vec4 st = state_at(std::log(r));
    return {st[0], st[1] / r, (st[2] - st[1]) / (r * r)};
  };
  return p;
}

BiharmonicMapProfile construct_map(double a, double tol, const RadialGrid& grid) {
  ConstructOptions opts;
  opts.tol = tol;
  return construct_map(a, grid, opts);
}

namespace {

// (L0 sin psi)^2 + (L1 cos psi)^2 from psi, psi', psi''
double energy_density(double r, double psi, double d1, double d2, int d) {
  const double sp = std::sin(psi), cp = std::cos(psi);
  const double dd = d - 1.0;
  const double l0 = -(cp * d2 - sp * d1 * d1) - dd / r * cp * d1 +
                    dd / (r * r) * sp;
  const double l1 = -(-sp * d2 - cp * d1 * d1) + dd / r * sp * d1;
  return l0 * l0 + l1 * l1;
}

}  // namespace

EnergyReport bi_energy(const BiharmonicMapProfile& profile, double outer_radius,
                       double quad_tol) {
  if (!profile.eval2)
    throw std::invalid_argument("bi_energy: profile has no continuous evaluator");
  auto f = [&](double r) {
    if (r <= 0.0) return 0.0;
    const auto v = profile.eval2(r);
    return energy_density(r, v[0], v[1], v[2], 4) * r * r * r;
  };
  const double vol_s3 = 2.0 * M_PI * M_PI;
  EnergyReport rep;
  if (std::isinf(outer_radius)) {
    if (profile.kind != BiharmonicMapProfile::Kind::Bubble &&
        profile.kind != BiharmonicMapProfile::Kind::Trivial)
      throw std::invalid_argument("bi_energy: infinite domain needs an entire profile");
    const double r0 = profile.lambda > 0 ? std::max(1.0, 2.0 / profile.lambda) : 1.0;
    const auto q = quadrature::integrate_to_infinity(f, 0.0, r0, quad_tol);
    rep.value = vol_s3 * q.value;
    rep.error_estimate = vol_s3 * q.error;
    rep.infinite_domain = true;
    rep.outer_radius = std::numeric_limits<double>::infinity();
  } else {
    const auto q = quadrature::integrate(f, 0.0, outer_radius, quad_tol);
    rep.value = vol_s3 * q.value;
    rep.error_estimate = vol_s3 * q.error;
    rep.outer_radius = outer_radius;
  }
  return rep;
}

double bi_energy_discrete(const Eigen::ArrayXd& psi, const RadialGrid& grid,
                          double a1, int d) {
  const int n = grid.size();
  const double h = grid.h();
  // centered first/second differences with odd extension at the origin and
  // the boundary-derivative ghost at r_max
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(n);
  for (int j = 1; j < n; ++j) {
    const double r = grid.nodes[j];
    const double pm = j == 1 ? -psi[1] : psi[j - 1];
    const double pp = j == n - 1 ? psi[n - 2] + 2.0 * h * a1 : psi[j + 1];
    const double d1 = (pp - pm) / (2.0 * h);
    const double d2 = (pm - 2.0 * psi[j] + pp) / (h * h);
    w[j] = energy_density(r, psi[j], d1, d2, d) * r * r * r;
  }
  double sum = 0.0;  // trapezoid; integrand vanishes at r = 0
  for (int j = 1; j < n; ++j) sum += 0.5 * (w[j - 1] + w[j]) * h;
  return 2.0 * M_PI * M_PI * sum;
}

GrowthReport origin_growth_check(const BiharmonicMapProfile& profile,
                                 double r_cut) {
  GrowthReport rep;
  rep.r_cut = r_cut;
  rep.finite = true;
  for (int j = 1; j < profile.size(); ++j) {
    const double r = profile.grid.nodes[j];
    if (r > r_cut) break;
    const double a = std::abs(profile.psi[j]) / r;
    const double b = std::isfinite(profile.dpsi[j]) ? std::abs(profile.dpsi[j]) : 0.0;
    const double c =
        std::isfinite(profile.d2psi[j]) ? std::abs(profile.d2psi[j]) / r : 0.0;
    if (!std::isfinite(a)) rep.finite = false;
    rep.sup_psi_over_r = std::max(rep.sup_psi_over_r, a);
    rep.sup_dpsi = std::max(rep.sup_dpsi, b);
    rep.sup_d2psi_over_r = std::max(rep.sup_d2psi_over_r, c);
  }
  return rep;
}

Eigen::Matrix4d v_transform_matrix() {
  Eigen::Matrix4d P;
  P << 1, 1, 1, 1,
       1, 3, -1, -3,
       1, 9, 1, 9,
       1, 27, -1, -27;
  return P;
}

Eigen::Matrix4d v_transform_inverse() {
  // exact rational inverse (Lagrange coefficients of the node set {1,3,-1,-3})
  Eigen::Matrix4d Pi;
  Pi << 9.0 / 16, 9.0 / 16, -1.0 / 16, -1.0 / 16,
       -1.0 / 16, -1.0 / 48, 1.0 / 16, 1.0 / 48,
        9.0 / 16, -9.0 / 16, -1.0 / 16, 1.0 / 16,
       -1.0 / 16, 1.0 / 48, 1.0 / 16, -1.0 / 48;
  return Pi;
}

VDecayReport v_decay_check(const PhaseState& seed, double s_back, double tol) {
  const Trajectory tr = dynamics::integrate_backward(seed, s_back, tol);
  const Eigen::Matrix4d Pi = v_transform_inverse();

  const int n = 600;
  std::vector<std::array<double, 4>> logv(n + 1);
  std::vector<double> sig(n + 1);
  for (int i = 0; i <= n; ++i) {
    sig[i] = s_back * double(i) / n;
    const Vec4 V = Pi * tr.eval(sig[i]);
    for (int c = 0; c < 4; ++c)
      logv[i][c] = std::log(std::max(std::abs(V[c]), 1e-300));
  }

  VDecayReport rep;
  rep.window[0] = std::min(0.5, 0.1 * s_back);
  double win_hi = 0.9 * s_back;
  for (int c = 0; c < 4; ++c) {
    // the signal decays until the backward error floor; fit up to the minimum
    int i_min = 0;
    for (int i = 1; i <= n; ++i)
      if (logv[i][c] < logv[i_min][c]) i_min = i;
    const double hi = std::max(rep.window[0] + 0.4, 0.95 * sig[i_min]);
    win_hi = std::min(win_hi, hi);
    std::vector<double> xs, ys;
    for (int i = 0; i <= n; ++i)
      if (sig[i] >= rep.window[0] && sig[i] <= hi) {
        xs.push_back(sig[i]);
        ys.push_back(logv[i][c]);
      }
    if (xs.size() < 8)
      throw InsufficientTail("v_decay_check: fit window too short");
    rep.rates[c] = -dynamics::fit_slope(xs, ys);
  }
  rep.window[1] = win_hi;
  rep.pass = rep.rates[0] >= 1.0 - 0.05 && rep.rates[1] >= 3.0 - 0.15 &&
             rep.rates[2] >= 3.0 - 0.15 && rep.rates[3] >= 3.0 - 0.15;
  return rep;
}

Eigen::ArrayXd ode_residual(const BiharmonicMapProfile& profile) {
  const int n = profile.size();
  Eigen::ArrayXd res(n);
  res.setConstant(kNaN);
  for (int j = 0; j < n; ++j) {
    const double r = profile.grid.nodes[j];
    if (!(r > 0.0)) continue;
    if (!std::isfinite(profile.d4psi[j])) continue;
    res[j] = std::abs(reduction::biharmonic_rhs_closed(
        profile.psi[j], profile.dpsi[j], profile.d2psi[j], profile.d3psi[j],
        profile.d4psi[j], r, 4));
  }
  return res;
}

double ode_residual_max(const BiharmonicMapProfile& profile, double band_lo,
                        double band_hi) {
  const Eigen::ArrayXd res = ode_residual(profile);
  double mx = 0.0;
  for (int j = 0; j < profile.size(); ++j) {
    const double r = profile.grid.nodes[j];
    if (r < band_lo || r > band_hi) continue;
    if (std::isfinite(res[j])) mx = std::max(mx, res[j]);
  }
  return mx;
}

}  // namespace polyflow::maps
