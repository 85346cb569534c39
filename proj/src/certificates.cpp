#include "polyflow/certificates.hpp"

#include <cmath>
#include <random>

namespace polyflow::certificates {

using dynamics::heteroclinic_state;
using dynamics::phase_rhs;

namespace {

constexpr double kC0 = 0.99;  // c0 = 99/100

// golden-section maximization of a 11D function on [a, b]
template <class F>
double golden_max(F f, double a, double b, int iters = 80) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    }
  }
  return std::max(f1, f2);
}

}  // namespace

CertificateReport verify_qgrad_bound(long grid_n, double fy_lo, double fy_hi) {
  if (grid_n < 10000)
    throw std::invalid_argument("verify_qgrad_bound: grid_n must be >= 1e4");

  CertificateReport rep;
  rep.lemma_id = "qgrad";
  rep.bound_claimed = kC0;

  // q_grad is linear in fy, so the fy-grid maximum sits at an endpoint;
  // scan x densely and keep the best cells for golden-section polish
  auto row_max = [&](double x) {
    const double c = std::cos(2.0 * x), s = std::sin(2.0 * x);
    const double den = (7.0 + 3.0 * c) * (7.0 + 3.0 * c);
    const double base = 3.0 * (9.0 + 21.0 * c) / den;
    const double sl = 6.0 * s / den;
    return base + std::max(sl * fy_lo, sl * fy_hi);
  };

  double best = -std::numeric_limits<double>::infinity();
  long best_i = 0;
  const double x_lo = -M_PI / 2.0, x_hi = M_PI / 2.0;
  for (long i = 1; i <= grid_n; ++i) {
    const double x = x_lo + (x_hi - x_lo) * double(i) / double(grid_n);
    const double v = row_max(x);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  const double cell = (x_hi - x_lo) / double(grid_n);
  const double xa = x_lo + cell * double(best_i - 2);
  const double xb = x_lo + cell * double(best_i + 2);
  const double polished = golden_max(row_max, xa, xb);
  rep.bound_observed = std::max(best, polished);
  rep.witness.emplace_back("argmax_x", x_lo + cell * double(best_i));

  // analytic f-minimum against a dense grid plus polish
  double fmin_grid = 0.0;
  double fmin_arg = 0.0;
  const long fn = std::max(grid_n / 10, 100000L);
  for (long i = 0; i <= fn; ++i) {
    const double y = M_PI * double(i) / double(fn);
    const double v = f_aux(y);
    if (v < fmin_grid) {
      fmin_grid = v;
      fmin_arg = y;
    }
  }
  const double fmin_polished =
      -golden_max([&](double y) { return -f_aux(y); }, fmin_arg - M_PI / fn,
                  fmin_arg + M_PI / fn);
  rep.details["f_min_observed"] = fmin_polished;
  rep.details["f_min_closed"] = f_min_closed();
  rep.details["f_min_error"] = std::abs(fmin_polished - f_min_closed());
  rep.details["fy_lo"] = fy_lo;
  rep.details["fy_hi"] = fy_hi;
  rep.details["grid_n"] = double(grid_n);

  rep.pass = rep.bound_observed <= kC0 + 1e-9 &&
             rep.details["f_min_error"] <= 1e-9;
  return rep;
}

ConeTag cone_membership(const Vec4& x) {
  auto in_lambda_plus = [](double a, double b) { return a >= 0.0 && b >= 2.0 * a; };
  auto in_lambda_minus = [](double a, double b) { return a <= 0.0 && b <= 2.0 * a; };
  ConeTag t;
  t.in_w_plus = in_lambda_plus(x[0], x[2]) && in_lambda_plus(x[1], x[3]);
  t.in_w_minus = in_lambda_minus(x[0], x[2]) && in_lambda_minus(x[1], x[3]);
  t.in_w_plus_star = t.in_w_plus && x[2] != 0.0;
  t.in_w_minus_star = t.in_w_minus && x[2] != 0.0;
  return t;
}

namespace {

// Joint flow of Phi and the reference Y0 (integrated, not evaluated, so both
// see the same integrator): state = (Phi, Y0) in R^8.
struct DeviationRun {
  double s0;
  Vec4 x0;
  double exit_s = std::numeric_limits<double>::quiet_NaN();
  double min_margin = std::numeric_limits<double>::infinity();
  double min_diff_ineq = std::numeric_limits<double>::infinity();
  bool exited = false;
};

// evolve Phi = Y0 + X with X(s0) in W+* (mirror = false) or W-* (true);
// track cone margins of X until the Phi3 = +-1 crossing
DeviationRun run_deviation(double s0, const Vec4& x0, double horizon,
                           double tol, bool mirror) {
  DeviationRun out{s0, x0};
  const double sgn = mirror ? -1.0 : 1.0;

  const Vec4 phi0 = sgn * (heteroclinic_state(s0) + x0);

  GuardSet g;
  g.blowup_norm = 1e6;
  EventSpec exit_ev;
  exit_ev.kind = mirror ? EventKind::Phi3HitsMinusOne : EventKind::Phi3HitsPlusOne;
  exit_ev.value = [sgn](double, const Vec4& y) { return sgn * y[2] - 1.0; };
  exit_ev.direction = +1;
  exit_ev.terminal = true;
  exit_ev.once = true;
  g.events.push_back(exit_ev);

  const Trajectory tr = integrate_adaptive(
      [](double, const Vec4& y) { return phase_rhs(y); },
      PhaseState{s0, phi0}, s0 + horizon, tol, g);

  for (const auto& e : tr.events())
    if (e.kind == exit_ev.kind) {
      out.exited = true;
      out.exit_s = e.s;
    }

  const double s_hi = out.exited ? out.exit_s : tr.s_end();
  const int n = 2000;
  for (int i = 0; i <= n; ++i) {
    const double s = s0 + (s_hi - s0) * double(i) / n;
    const Vec4 x = sgn * tr.eval(s) - heteroclinic_state(s);
    const double m = std::min(std::min(x[0], x[1]),
                              std::min(x[2] - 2.0 * x[0], x[3] - 2.0 * x[1]));
    out.min_margin = std::min(out.min_margin, m);
    // dX4 >= 4 (X3 - c0 X1) in the (mirror-normalized) deviation
    const Vec4 phi = sgn * tr.eval(s);
    const Vec4 y0 = heteroclinic_state(s);
    const double dx4 = phase_rhs(phi)[3] - phase_rhs(y0)[3];
    out.min_diff_ineq =
        std::min(out.min_diff_ineq, dx4 - 4.0 * (x[2] - kC0 * x[0]));
  }
  return out;
}

// deterministic sample family: s0 with Y1(s0) in a small range, X1 = 0,
// small X3 > 0, X2 and X4 inside the cone
std::vector<std::pair<double, Vec4>> make_samples(int n_samples) {
  std::mt19937 rng(20240811u);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<std::pair<double, Vec4>> ss;
  ss.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double y1 = 5e-3 + 2e-2 * u01(rng);
    const double s0 = std::log(std::tan(0.5 * y1));
    const double x3 = std::pow(10.0, -3.5 + 2.0 * u01(rng));  // 10^-3.5 .. 10^-1.5
    const double x2 = 0.25 * x3 * u01(rng);
    const double x4 = 2.0 * x2 + x3 * (0.5 + u01(rng));
    ss.emplace_back(s0, Vec4{0.0, x2, x3, x4});
  }
  return ss;
}

}  // namespace

CertificateReport check_cone_invariance(int n_samples, double horizon,
                                        double tol,
                                        std::vector<InvarianceSample>* out) {
  if (n_samples < 1)
    throw std::invalid_argument("check_cone_invariance: n_samples >= 1");

  CertificateReport rep;
  rep.lemma_id = "cone-invariance";
  rep.bound_claimed = 0.0;  // margins must stay nonnegative (up to slack)
  const double slack = 1e3 * tol;

  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_ineq = std::numeric_limits<double>::infinity();
  int n_exit = 0;
  const auto samples = make_samples(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const bool mirror = i % 2 == 1;
    const auto& [s0, x0] = samples[i];
    const DeviationRun r = run_deviation(s0, x0, horizon, tol, mirror);
    worst_margin = std::min(worst_margin, r.min_margin);
    worst_ineq = std::min(worst_ineq, r.min_diff_ineq);
    if (r.exited) n_exit++;
    if (out)
      out->push_back({r.s0, r.x0, r.exit_s, r.min_margin, r.min_diff_ineq,
                      r.s0 + std::sqrt(3.0 / (2.0 * r.x0[2])), mirror});
  }
  rep.bound_observed = worst_margin;
  rep.details["min_margin"] = worst_margin;
  rep.details["min_diff_ineq"] = worst_ineq;
  rep.details["n_samples"] = n_samples;
  rep.details["n_exited"] = n_exit;
  rep.details["tol"] = tol;
  rep.pass = worst_margin >= -slack && worst_ineq >= -slack &&
             n_exit == n_samples;
  return rep;
}

CertificateReport check_exit_bound(int n_samples, double tol,
                                   std::vector<InvarianceSample>* out) {
  CertificateReport rep;
  rep.lemma_id = "exit-bound";
  std::vector<InvarianceSample> rows;
  const CertificateReport inv = check_cone_invariance(n_samples, 200.0, tol, &rows);
  (void)inv;
  double worst_gap = std::numeric_limits<double>::infinity();
  bool all_exited = true;
  for (const auto& r : rows) {
    if (!std::isfinite(r.exit_s)) {
      all_exited = false;
      continue;
    }
    worst_gap = std::min(worst_gap, r.exit_bound - r.exit_s);
  }
  rep.bound_observed = worst_gap;  // bound minus actual exit time; must be >= 0
  rep.bound_claimed = 0.0;
  rep.details["n_samples"] = n_samples;
  rep.details["min_bound_minus_exit"] = worst_gap;
  rep.pass = all_exited && worst_gap >= -1e-6;
  if (out) *out = std::move(rows);
  return rep;
}

LateLifeTag late_life_membership(const Vec4& phi, double sigma) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("late_life_membership: sigma must be > 0");
  LateLifeTag t;
  t.in_s2 = phi[2] >= 1.0 && phi[3] >= 0.0;
  t.in_s1 = t.in_s2 && phi[1] >= sigma;
  return t;
}

CertificateReport check_late_life_invariance(int n_samples, double sigma,
                                             double tol) {
  CertificateReport rep;
  rep.lemma_id = "late-life-invariance";
  std::mt19937 rng(77250811u);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  double min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    Vec4 y0{2.0 * u01(rng) - 1.0, sigma + u01(rng), 1.0 + u01(rng), u01(rng)};
    GuardSet g;
    g.blowup_norm = 1e6;
    const Trajectory tr = integrate_adaptive(
        [](double, const Vec4& y) { return phase_rhs(y); }, PhaseState{0.0, y0},
        50.0, tol, g);
    const int n = 500;
    for (int k = 0; k <= n; ++k) {
      const double s = tr.s_begin() +
                       (tr.s_end() - tr.s_begin()) * double(k) / n;
      const Vec4 y = tr.eval(s);
      min_margin = std::min({min_margin, y[1] - sigma, y[2] - 1.0, y[3]});
    }
  }
  rep.bound_observed = min_margin;
  rep.details["sigma"] = sigma;
  rep.details["n_samples"] = n_samples;
  rep.pass = min_margin >= -1e3 * tol;
  return rep;
}

BlowupDiagnostics blowup_diagnostics(const dynamics::Orbit& orbit) {
  const Trajectory& tr = orbit.trajectory;
  if (!tr.guard_fired())
    throw std::invalid_argument("blowup_diagnostics: orbit did not blow up");

  const double sgn = tr.back().phi[0] >= 0.0 ? 1.0 : -1.0;

  // dense tail sampling, mirror-normalized so Phi4 > 0
  std::vector<double> ss, p1, p2, p3, p4;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double s = tr.s_begin() + (tr.s_end() - tr.s_begin()) * double(i) / n;
    const Vec4 y = sgn * tr.eval(s);
    if (y[3] > 1.0) {
      ss.push_back(s);
      p1.push_back(y[0]);
      p2.push_back(y[1]);
      p3.push_back(y[2]);
      p4.push_back(y[3]);
    }
  }
  if (ss.size() < 50)
    throw InsufficientTail("blowup_diagnostics: fewer than 50 tail samples");

  BlowupDiagnostics d;
  d.n_tail = static_cast<int>(ss.size());

  // s* from the linear law Phi4^{-1/3} ~ alpha (s* - s), last 30% of samples
  const std::size_t k0 = ss.size() - std::max<std::size_t>(8, ss.size() * 3 / 10);
  std::vector<double> tt(ss.begin() + k0, ss.end());
  std::vector<double> ww;
  for (std::size_t i = k0; i < ss.size(); ++i) ww.push_back(std::pow(p4[i], -1.0 / 3.0));
  const double slope_w = dynamics::fit_slope(tt, ww);
  double mt = 0, mw = 0;
  for (std::size_t i = 0; i < tt.size(); ++i) {
    mt += tt[i];
    mw += ww[i];
  }
  mt /= double(tt.size());
  mw /= double(tt.size());
  d.s_star = mt - mw / slope_w;

  std::vector<double> lx, ly, lp1;
  for (std::size_t i = k0; i < ss.size(); ++i) {
    if (d.s_star - ss[i] <= 0.0) continue;
    lx.push_back(std::log(d.s_star - ss[i]));
    ly.push_back(std::log(p4[i]));
    lp1.push_back(p1[i]);
  }
  d.phi4_slope = dynamics::fit_slope(lx, ly);
  d.phi1_log_coeff = -dynamics::fit_slope(lx, lp1);
  // R^2 of the Phi1 ~ log(s* - s) fit
  {
    const double b = -d.phi1_log_coeff;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += lp1[i];
    }
    mx /= double(lx.size());
    my /= double(lx.size());
    double ssr = 0, sst = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double fit = my + b * (lx[i] - mx);
      ssr += (lp1[i] - fit) * (lp1[i] - fit);
      sst += (lp1[i] - my) * (lp1[i] - my);
    }
    d.phi1_r2 = sst > 0 ? 1.0 - ssr / sst : 1.0;
  }

  // z-rectangle over the last decade of Phi4 growth
  const double p4_hi = p4.back();
  d.z1_min = d.z2_min = std::numeric_limits<double>::infinity();
  d.z1_max = d.z2_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ss.size(); ++i) {
    if (p4[i] < 0.1 * p4_hi) continue;
    const double z1 = p2[i] / std::cbrt(p4[i]);
    const double z2 = p3[i] / std::pow(p4[i], 2.0 / 3.0);
    d.z1_min = std::min(d.z1_min, z1);
    d.z1_max = std::max(d.z1_max, z1);
    d.z2_min = std::min(d.z2_min, z2);
    d.z2_max = std::max(d.z2_max, z2);
  }
  return d;
}

KEstimate estimate_K(std::span<const double> eps_ladder, int n_angles,
                     double tol) {
  if (n_angles < 16)
    throw std::invalid_argument("estimate_K: n_angles must be >= 16");

  KEstimate est;
  for (const double eps : eps_ladder) {
    KEstimateRow row;
    row.eps = eps;
    for (int k = 0; k < n_angles; ++k) {
      const double th = 2.0 * M_PI * double(k) / double(n_angles);
      const PhaseState seed =
          dynamics::seed_unstable(eps * std::cos(th), eps * std::sin(th));
      if (seed.phi.norm() == 0.0) continue;
      dynamics::OrbitOptions opt;
      opt.tol = tol;
      const dynamics::Orbit orb = dynamics::integrate_orbit(seed, 200.0, opt);
      row.n_orbits++;
      double first_exit = std::numeric_limits<double>::infinity();
      for (const auto& e : orb.events()) {
        if (e.kind == EventKind::Phi2Zero) {
          row.k_emp = std::max(row.k_emp, std::abs(e.state.phi[0]));
          row.n_zero_events++;
        }
        if ((e.kind == EventKind::Phi3HitsPlusOne ||
             e.kind == EventKind::Phi3HitsMinusOne) &&
            e.s < first_exit) {
          first_exit = e.s;
          row.c_emp = std::max(
              row.c_emp, std::hypot(e.state.phi[0], e.state.phi[1]));
        }
      }
    }
    est.rows.push_back(row);
  }

  for (std::size_t i = 1; i < est.rows.size(); ++i) {
    const auto& a = est.rows[i - 1];
    const auto& b = est.rows[i];
    if (a.k_emp > 0)
      est.max_rel_change_k =
          std::max(est.max_rel_change_k, std::abs(b.k_emp - a.k_emp) / a.k_emp);
    if (a.c_emp > 0)
      est.max_rel_change_c =
          std::max(est.max_rel_change_c, std::abs(b.c_emp - a.c_emp) / a.c_emp);
  }
  est.k_stable = est.max_rel_change_k < 0.10;
  est.c_stable = est.max_rel_change_c < 0.10;

  // near-heteroclinic supplement: W-* perturbations of Y track the orbit
  // toward pi before turning around, which the angle sweep cannot resolve
  for (double x3 : {1e-3, 1e-4, 1e-5}) {
    const double s0 = std::log(std::tan(0.5 * 1e-2));
    const Vec4 x0{0.0, 0.25 * x3, x3, 2.0 * x3};
    const Vec4 phi0 = heteroclinic_state(s0) - x0;  // W-* side deviation
    dynamics::OrbitOptions opt;
    opt.tol = tol;
    const dynamics::Orbit orb =
        dynamics::integrate_orbit(PhaseState{s0, phi0}, 200.0, opt);
    for (const auto& e : orb.events())
      if (e.kind == EventKind::Phi2Zero)
        est.k_near_heteroclinic =
            std::max(est.k_near_heteroclinic, std::abs(e.state.phi[0]));
  }
  return est;
}

}  // namespace polyflow::certificates
