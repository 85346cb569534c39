#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyflow {

using Vec4 = Eigen::Vector4d;

struct StepUnderflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GridTooCoarse : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dimension d and order m of the polyharmonic flow.
struct FlowParams {
  int d;
  int m;

  FlowParams(int d_, int m_) : d(d_), m(m_) {
    if (d < 2) throw std::invalid_argument("FlowParams: d must be >= 2");
    if (m < 1) throw std::invalid_argument("FlowParams: m must be >= 1");
  }

  // energy-critical case is d = 2m (biharmonic: d = 4, m = 2)
  bool critical() const { return d == 2 * m; }
};

enum class GridSpacing { Uniform, Geometric };

struct RadialGrid {
  Eigen::ArrayXd nodes;  // first node 0, strictly increasing
  GridSpacing spacing = GridSpacing::Uniform;

  static RadialGrid uniform(int n, double r_max);
  // node 0, then r_min * q^k up to r_max (n nodes total)
  static RadialGrid geometric(int n, double r_min, double r_max);

  int size() const { return static_cast<int>(nodes.size()); }
  double r_max() const { return nodes[nodes.size() - 1]; }
  // mesh width; only meaningful for uniform grids
  double h() const { return nodes[1] - nodes[0]; }
  bool is_uniform() const { return spacing == GridSpacing::Uniform; }

  void validate() const;
  bool same_as(const RadialGrid& o) const;
};

/// Scalar profile sampled on a radial grid with parity metadata.
struct RadialProfile {
  RadialGrid grid;
  Eigen::ArrayXd values;
  bool odd_about_origin = true;

  void validate() const;
  int size() const { return static_cast<int>(values.size()); }
};

/// Phase-space point: phi = (phi, d_s phi, d_s^2 phi, d_s^3 phi) at log-radial time s.
struct PhaseState {
  double s = 0.0;
  Vec4 phi = Vec4::Zero();
};

enum class EventKind {
  Phi3HitsPlusOne,
  Phi3HitsMinusOne,
  Phi2Zero,
  BlowupGuard,
  Custom,
};

const char* event_kind_name(EventKind k);

struct OrbitEvent {
  EventKind kind;
  double s;
  PhaseState state;
};

/// Scalar event function g(s, y); an event fires where g crosses zero.
struct EventSpec {
  EventKind kind = EventKind::Custom;
  std::function<double(double, const Vec4&)> value;
  int direction = 0;     // +1 up-crossings, -1 down-crossings, 0 both
  bool terminal = false;
  bool once = false;     // record only the first occurrence
};

struct GuardSet {
  double blowup_norm = 1e6;  // <= 0 disables the norm guard
  std::vector<EventSpec> events;
  double event_tol = 1e-10;      // bisection tolerance in s
  double min_step_rel = 1e-13;   // relative to interval length
};

struct StepStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t rhs_evals = 0;
};

// One accepted step with its dense-output coefficients.
struct DenseStep {
  double s0 = 0.0;
  double h = 0.0;
  Vec4 r1, r2, r3, r4, r5;

  Vec4 eval(double s) const {
    const double th = (s - s0) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

using RhsFn = std::function<Vec4(double, const Vec4&)>;

/// Dense trajectory of an adaptive integration run.
class Trajectory {
 public:
  double s_begin() const { return s_begin_; }
  double s_end() const { return s_end_; }
  PhaseState front() const { return {s_begin_, y_begin_}; }
  PhaseState back() const { return {s_end_, y_end_}; }

  // dense-output query; s clamped to [s_begin, s_end]
  Vec4 eval(double s) const;
  PhaseState at(double s) const { return {s, eval(s)}; }

  const std::vector<DenseStep>& steps() const { return steps_; }
  const std::vector<OrbitEvent>& events() const { return events_; }
  const StepStats& stats() const { return stats_; }
  bool guard_fired() const;
  // accepted step endpoints, including the initial state
  std::vector<PhaseState> states() const;

 private:
  friend Trajectory integrate_adaptive(const RhsFn&, const PhaseState&, double,
                                       double, const GuardSet&);
  std::vector<DenseStep> steps_;
  std::vector<OrbitEvent> events_;
  StepStats stats_;
  double s_begin_ = 0.0, s_end_ = 0.0;
  Vec4 y_begin_ = Vec4::Zero(), y_end_ = Vec4::Zero();
};

/// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) with PI step control,
/// 4th-order dense output, and bisection-localized events.
Trajectory integrate_adaptive(const RhsFn& rhs, const PhaseState& start,
                              double s_end, double tol,
                              const GuardSet& guards = {});

}  // namespace polyflow
