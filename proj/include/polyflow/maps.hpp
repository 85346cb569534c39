#pragma once

#include "polyflow/core.hpp"
#include "polyflow/dynamics.hpp"

#include <array>
#include <functional>
#include <memory>

namespace polyflow::maps {

struct TargetUnreachableOnOrbit : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientTail : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Equivariant steady-profile candidate on [0, 1] (or any radial grid),
/// with derivatives attached and a continuous evaluator for quadrature.
struct BiharmonicMapProfile {
  enum class Kind { Trivial, Bubble, OrbitShot };

  RadialGrid grid;
  Eigen::ArrayXd psi, dpsi, d2psi, d3psi, d4psi;  // NaN where unavailable
  double boundary_value = 0.0;       // psi(1)
  double boundary_derivative = 0.0;  // d_r psi(1)
  Kind kind = Kind::Trivial;
  double lambda = 0.0;               // bubble dilation
  Vec4 seed = Vec4::Zero();          // orbit provenance
  double s_shift = 0.0;              // psi(r) = Phi1(s_shift + log r)

  // psi, psi', psi'' at arbitrary r > 0 (quadrature path)
  std::function<std::array<double, 3>(double)> eval2;

  int size() const { return grid.size(); }
};

/// psi(r) = 2 arctan(lambda r) with analytic derivatives.
BiharmonicMapProfile bubble(double lambda, const RadialGrid& grid);

struct ConstructOptions {
  double tol = 1e-12;
  double eps = 1e-4;                       // seed radius
  std::array<double, 2> seed_dir{1.0, 9.0};  // (phi1, phi3) direction
  bool first_crossing = false;             // default: last crossing
  double backward_span = 25.0;
};

/// Steady profile with psi(1) = a from an unstable-manifold orbit:
/// locates Phi1 = a, s-translates, and samples psi(r) = Phi1(log r).
BiharmonicMapProfile construct_map(double a, double tol, const RadialGrid& grid);
BiharmonicMapProfile construct_map(double a, const RadialGrid& grid,
                                   const ConstructOptions& opts);

struct EnergyReport {
  double value = 0.0;
  double error_estimate = 0.0;
  double outer_radius = 0.0;  // infinity() for the full space
  bool infinite_domain = false;
};

/// Bi-energy 2 pi^2 * Int ((L0 sin psi)^2 + (L1 cos psi)^2) r^3 dr by
/// adaptive Gauss-Kronrod quadrature; infinite domains use a 1/r
/// compactified tail. d = 4 only.
EnergyReport bi_energy(const BiharmonicMapProfile& profile, double outer_radius,
                       double quad_tol = 1e-9);
inline EnergyReport bi_energy_full_space(const BiharmonicMapProfile& p,
                                         double quad_tol = 1e-9) {
  return bi_energy(p, std::numeric_limits<double>::infinity(), quad_tol);
}

/// Discrete bi-energy of grid data (composite trapezoid, FD derivatives);
/// used by the PDE solver's energy trace. a1 pins d_r psi at the last node.
double bi_energy_discrete(const Eigen::ArrayXd& psi, const RadialGrid& grid,
                          double a1, int d = 4);

struct GrowthReport {
  double sup_psi_over_r = 0.0;
  double sup_dpsi = 0.0;
  double sup_d2psi_over_r = 0.0;
  double r_cut = 0.0;
  bool finite = false;
};

/// sup of |psi|/r, |psi'|, |psi''|/r on (0, r_cut] over the profile's nodes.
GrowthReport origin_growth_check(const BiharmonicMapProfile& profile,
                                 double r_cut);

struct VDecayReport {
  std::array<double, 4> rates{};         // fitted decay rates of |V_i|
  std::array<double, 2> window{};        // common fit window in sigma
  bool pass = false;                     // rates >= (1,3,3,3) minus slack
};

/// V(s) = P^{-1} Phi(-s) decay along the backward tail of an
/// unstable-manifold seed.
VDecayReport v_decay_check(const PhaseState& seed, double s_back,
                           double tol = 1e-13);

/// The Vandermonde-type change of basis and its exact inverse.
Eigen::Matrix4d v_transform_matrix();      // P
Eigen::Matrix4d v_transform_inverse();     // P^{-1}, exact rationals

/// Pointwise steady residual of the closed-form reduced equation using the
/// profile's attached derivatives; NaN where derivatives are unavailable.
Eigen::ArrayXd ode_residual(const BiharmonicMapProfile& profile);
double ode_residual_max(const BiharmonicMapProfile& profile,
                        double band_lo = 0.05, double band_hi = 0.95);

}  // namespace polyflow::maps
