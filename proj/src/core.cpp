#include "polyflow/core.hpp"

#include <algorithm>
#include <cmath>

namespace polyflow {

RadialGrid RadialGrid::uniform(int n, double r_max) {
  if (n < 8) throw GridTooCoarse("RadialGrid: need at least 8 nodes");
  if (!(r_max > 0.0)) throw std::invalid_argument("RadialGrid: r_max must be positive");
  RadialGrid g;
  g.nodes = Eigen::ArrayXd::LinSpaced(n, 0.0, r_max);
  g.spacing = GridSpacing::Uniform;
  return g;
}

RadialGrid RadialGrid::geometric(int n, double r_min, double r_max) {
  if (n < 8) throw GridTooCoarse("RadialGrid: need at least 8 nodes");
  if (!(0.0 < r_min && r_min < r_max))
    throw std::invalid_argument("RadialGrid: need 0 < r_min < r_max");
  RadialGrid g;
  g.nodes.resize(n);
  g.nodes[0] = 0.0;
  const double q = std::pow(r_max / r_min, 1.0 / double(n - 2));
  for (int k = 0; k < n - 1; ++k) g.nodes[k + 1] = r_min * std::pow(q, k);
  g.nodes[n - 1] = r_max;  // pin the endpoint against pow rounding
  g.spacing = GridSpacing::Geometric;
  return g;
}

void RadialGrid::validate() const {
  if (size() < 8) throw GridTooCoarse("RadialGrid: need at least 8 nodes");
  if (nodes[0] != 0.0) throw std::invalid_argument("RadialGrid: first node must be 0");
  for (int i = 1; i < size(); ++i)
    if (!(nodes[i] > nodes[i - 1]))
      throw std::invalid_argument("RadialGrid: nodes must be strictly increasing");
}

void RadialProfile::validate() const {
  grid.validate();
  if (values.size() != grid.nodes.size())
    throw std::invalid_argument("RadialProfile: values/grid size mismatch");
  if (!values.isFinite().all())
    throw NonFiniteState("RadialProfile: non-finite values");
  if (odd_about_origin && values[0] != 0.0)
    throw std::invalid_argument("RadialProfile: odd profile must vanish at r = 0");
}

bool RadialGrid::same_as(const RadialGrid& o) const {
  return spacing == o.spacing && nodes.size() == o.nodes.size() &&
         (nodes == o.nodes).all();
}

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::Phi3HitsPlusOne: return "Phi3HitsPlusOne";
    case EventKind::Phi3HitsMinusOne: return "Phi3HitsMinusOne";
    case EventKind::Phi2Zero: return "Phi2Zero";
    case EventKind::BlowupGuard: return "BlowupGuard";
    case EventKind::Custom: return "Custom";
  }
  return "?";
}

Vec4 Trajectory::eval(double s) const {
  if (steps_.empty()) return y_begin_;
  if (s <= s_begin_) return y_begin_;
  if (s >= s_end_) return y_end_;
  // binary search for the step containing s
  std::size_t lo = 0, hi = steps_.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (steps_[mid].s0 <= s)
      lo = mid;
    else
      hi = mid - 1;
  }
  return steps_[lo].eval(s);
}

bool Trajectory::guard_fired() const {
  for (const auto& e : events_)
    if (e.kind == EventKind::BlowupGuard) return true;
  return false;
}

std::vector<PhaseState> Trajectory::states() const {
  std::vector<PhaseState> out;
  out.reserve(steps_.size() + 1);
  out.push_back(front());
  for (const auto& st : steps_) out.push_back({st.s0 + st.h, st.eval(st.s0 + st.h)});
  if (!out.empty()) out.back() = back();
  return out;
}

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat (5th minus embedded 4th order)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output coefficients
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

struct EventWork {
  const EventSpec* spec;
  double g_prev;
  bool done = false;  // for once-only events
};

double guard_value(const Vec4& y, double thresh) { return y.norm() - thresh; }

}  // namespace

Trajectory integrate_adaptive(const RhsFn& rhs, const PhaseState& start,
                              double s_end, double tol, const GuardSet& guards) {
  if (!(tol > 0.0)) throw std::invalid_argument("integrate_adaptive: tol must be > 0");
  if (!(s_end > start.s))
    throw std::invalid_argument("integrate_adaptive: s_end must exceed start.s");
  if (!start.phi.allFinite())
    throw NonFiniteState("integrate_adaptive: non-finite start state");

  Trajectory traj;
  traj.s_begin_ = start.s;
  traj.y_begin_ = start.phi;
  traj.s_end_ = start.s;
  traj.y_end_ = start.phi;

  const double span = s_end - start.s;
  const double h_min = guards.min_step_rel * span;

  double s = start.s;
  Vec4 y = start.phi;

  Vec4 k1 = rhs(s, y);
  traj.stats_.rhs_evals++;
  if (!k1.allFinite()) throw NonFiniteState("integrate_adaptive: rhs non-finite at start");

  // event bookkeeping (norm guard handled as an implicit extra event)
  std::vector<EventWork> ev;
  ev.reserve(guards.events.size());
  for (const auto& e : guards.events) ev.push_back({&e, e.value(s, y), false});
  double guard_prev =
      guards.blowup_norm > 0 ? guard_value(y, guards.blowup_norm) : -1.0;

  // deterministic initial step from the local scale
  double h;
  {
    const double dy = y.norm() + tol;
    const double df = k1.norm() + tol;
    h = std::clamp(0.01 * dy / df, 1e-8 * span, 0.1 * span);
  }

  const double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  double facold = 1e-4;
  bool rejected_last = false;

  while (s < s_end) {
    if (h < h_min) throw StepUnderflow("integrate_adaptive: step size underflow");
    if (s + h > s_end) h = s_end - s;

    const Vec4 k2 = rhs(s + c2 * h, y + h * (a21 * k1));
    const Vec4 k3 = rhs(s + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec4 k4 = rhs(s + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec4 k5 =
        rhs(s + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec4 k6 = rhs(
        s + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec4 y1 =
        y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec4 k7 = rhs(s + h, y1);
    traj.stats_.rhs_evals += 6;

    if (!y1.allFinite() || !k7.allFinite())
      throw NonFiniteState("integrate_adaptive: non-finite state encountered");

    const Vec4 errv =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double sc = tol + tol * std::max(std::abs(y[i]), std::abs(y1[i]));
      const double q = errv[i] / sc;
      err += q * q;
    }
    err = std::sqrt(err / 4.0);

    if (err <= 1.0) {
      // accept: dense coefficients
      DenseStep st;
      st.s0 = s;
      st.h = h;
      st.r1 = y;
      st.r2 = y1 - y;
      st.r3 = h * k1 - st.r2;
      st.r4 = st.r2 - h * k7 - st.r3;
      st.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      traj.steps_.push_back(st);
      traj.stats_.accepted++;

      // scan for events on [s, s+h]; terminal events truncate the run
      double s_stop = s + h;
      bool stop = false;
      EventKind stop_kind = EventKind::Custom;

      auto locate = [&](auto&& gfun, double ga, double gb, double sa,
                        double sb) {
        // bisection on dense output to guards.event_tol in s
        while (sb - sa > guards.event_tol) {
          const double sm = 0.5 * (sa + sb);
          const double gm = gfun(sm);
          if ((ga < 0.0) == (gm < 0.0)) {
            sa = sm;
            ga = gm;
          } else {
            sb = sm;
            gb = gm;
          }
        }
        (void)gb;
        return sb;
      };

      if (guards.blowup_norm > 0) {
        const double gv = guard_value(y1, guards.blowup_norm);
        if (guard_prev < 0.0 && gv >= 0.0) {
          auto g = [&](double ss) {
            return guard_value(st.eval(ss), guards.blowup_norm);
          };
          const double se = locate(g, guard_prev, gv, s, s + h);
          traj.events_.push_back(
              {EventKind::BlowupGuard, se, {se, st.eval(se)}});
          stop = true;
          stop_kind = EventKind::BlowupGuard;
          s_stop = se;
        }
        guard_prev = gv;
      }

      // sub-sample each step so multiple crossings of one function are seen
      constexpr int kScan = 8;
      for (auto& w : ev) {
        if (w.done) continue;
        double sa = s;
        double ga = w.g_prev;
        for (int i = 1; i <= kScan; ++i) {
          double sb = s + h * double(i) / kScan;
          if (sb > s_stop) sb = s_stop;
          if (sb <= sa) break;
          const double gb = w.spec->value(sb, st.eval(sb));
          const bool crossed =
              (ga < 0.0 && gb >= 0.0 && w.spec->direction >= 0) ||
              (ga > 0.0 && gb <= 0.0 && w.spec->direction <= 0);
          if (crossed) {
            auto g = [&](double ss) { return w.spec->value(ss, st.eval(ss)); };
            const double se = locate(g, ga, gb, sa, sb);
            if (se <= s_stop) {
              traj.events_.push_back({w.spec->kind, se, {se, st.eval(se)}});
              if (w.spec->once) w.done = true;
              if (w.spec->terminal && se < s_stop) {
                stop = true;
                stop_kind = w.spec->kind;
                s_stop = se;
              }
              if (w.done || stop) break;
            }
          }
          sa = sb;
          ga = gb;
        }
        w.g_prev = ga;
      }

      if (stop) {
        (void)stop_kind;
        // drop events past the stop point, keep order by s
        std::vector<OrbitEvent> kept;
        for (auto& e : traj.events_)
          if (e.s <= s_stop + guards.event_tol) kept.push_back(e);
        traj.events_ = std::move(kept);
        std::stable_sort(
            traj.events_.begin(), traj.events_.end(),
            [](const OrbitEvent& a, const OrbitEvent& b) { return a.s < b.s; });
        traj.s_end_ = s_stop;
        traj.y_end_ = st.eval(s_stop);
        // trim the last dense step to the stop point (kept as-is; eval clamps)
        return traj;
      }

      s += h;
      y = y1;
      k1 = k7;  // FSAL
      traj.s_end_ = s;
      traj.y_end_ = y;

      const double fac11 = std::pow(std::max(err, 1e-16), expo1);
      double fac = fac11 / std::pow(facold, beta);
      const double facmax = rejected_last ? 1.0 : 10.0;
      fac = std::clamp(fac / safe, 1.0 / facmax, 1.0 / 0.2);
      h = h / fac;
      facold = std::max(err, 1e-4);
      rejected_last = false;
    } else {
      traj.stats_.rejected++;
      const double fac11 = std::pow(err, expo1);
      h = h / std::min(1.0 / 0.2, fac11 / safe);
      rejected_last = true;
    }
  }

  return traj;
}

}  // namespace polyflow
