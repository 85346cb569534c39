#pragma once

#include "polyflow/core.hpp"

#include <array>
#include <memory>
#include <optional>

namespace polyflow::dynamics {

struct SeedTooLarge : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UndecidedOrbit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double F1(double phi1, double phi3) {
  return -4.5 * std::sin(2.0 * phi1) + (7.0 + 3.0 * std::cos(2.0 * phi1)) * phi3;
}
inline double F2(double phi1, double phi3) {
  return 3.0 * (2.0 * phi3 - std::sin(2.0 * phi1));
}

/// Right-hand side of the autonomous first-order phase system.
inline Vec4 phase_rhs(const Vec4& phi) {
  return {phi[1], phi[2], phi[3],
          F1(phi[0], phi[2]) + phi[1] * phi[1] * F2(phi[0], phi[2])};
}

/// Linearization at the origin: matrix, spectrum, integer eigenvectors,
/// characteristic polynomial coefficients (constant term first).
struct LinearizationData {
  Eigen::Matrix<std::int64_t, 4, 4> A;
  std::array<std::int64_t, 4> eigenvalues;            // -3, -1, 1, 3
  Eigen::Matrix<std::int64_t, 4, 4> eigenvectors;     // columns, same order
  std::array<std::int64_t, 5> char_poly;              // 9, 0, -10, 0, 1
};
LinearizationData linearization();
Eigen::Matrix4d linearization_matrix();

/// Exact integer check A v = lambda v for all four pairs.
bool eigenpairs_exact(const LinearizationData& L);
/// det(A - lambda I) evaluated in integer arithmetic.
std::int64_t char_poly_det(const LinearizationData& L, std::int64_t lambda);

/// Heteroclinic orbit Y(s) from y(s) = 2 arctan(e^s).
Vec4 heteroclinic_state(double s);
inline PhaseState heteroclinic(double s) { return {s, heteroclinic_state(s)}; }

/// Linear-graph seed on the unstable plane at s = 0.
PhaseState seed_unstable(double phi1, double phi3, double cap = 1e-2);

struct OrbitClass {
  enum class Tag { HeteroclinicShadow, Blowup };
  Tag tag;
  int sign = +1;
  double s_max_estimate = std::numeric_limits<double>::quiet_NaN();
  double shadow_distance = std::numeric_limits<double>::quiet_NaN();
};

struct Orbit {
  Trajectory trajectory;
  std::optional<OrbitClass> cls;
  Vec4 seed = Vec4::Zero();
  double seed_s = 0.0;

  const std::vector<OrbitEvent>& events() const { return trajectory.events(); }
  bool blew_up() const { return trajectory.guard_fired(); }
};

struct OrbitOptions {
  double tol = 1e-10;
  double blowup_norm = 1e6;
  double event_tol = 1e-10;
  bool phi3_events = true;   // first +-1 crossings
  bool phi2_events = true;   // all zero crossings
  std::optional<double> phi1_target;  // terminal event at phi1 = target
};

/// Forward integration with the standard event set.
Orbit integrate_orbit(const PhaseState& seed, double s_span, double tol);
Orbit integrate_orbit(const PhaseState& seed, double s_span,
                      const OrbitOptions& opts);

/// Dichotomy classification; throws UndecidedOrbit if the span is too short.
OrbitClass classify(const Orbit& orbit, double shadow_tol = 1e-2);

/// classify with automatic span extension
Orbit integrate_and_classify(const PhaseState& seed, double s_span, double tol,
                             double shadow_tol = 1e-2, int max_extensions = 6);

struct DecayReport {
  double rate = 0.0;        // fitted exponential decay rate of |Phi|
  double window_lo = 0.0, window_hi = 0.0;
  int n_samples = 0;
  bool pass = false;        // rate >= 1 - 0.05 (slowest unstable rate)
};

/// Integrates backward from a near-origin seed and fits the decay rate of |Phi|.
DecayReport backward_decay_check(const PhaseState& seed, double s_back,
                                 double tol = 1e-12);

/// Backward trajectory in sigma = seed.s - s (runs the negated field forward).
Trajectory integrate_backward(const PhaseState& seed, double s_back, double tol);

/// least-squares slope of y against x
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace polyflow::dynamics
