#pragma once

#include "polyflow/core.hpp"

#include <vector>

namespace polyflow::reduction {

struct SingularOrigin : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pair {g0, g1}: equatorial component g0 (multiplies x-hat) and polar
/// component g1, sharing one grid. Parity about the origin is tracked per
/// component; g0 odd / g1 even for maps of the form {sin psi, cos psi}.
struct ProfilePair {
  RadialGrid grid;
  Eigen::ArrayXd g0, g1;
  bool g0_odd = true;
  bool g1_odd = false;

  void validate() const;
  // unit-norm check g0^2 + g1^2 = 1 for pairs representing a sphere map
  double max_norm_defect() const;
};

/// d/dt psi on interior nodes; origin excluded (NaN where undefined).
struct ReducedRHS {
  RadialGrid grid;
  Eigen::ArrayXd values;
  int order = 0;  // number of nested operator applications (= m)
  // largest index with a defined value
  int last_valid() const;
};

/// L1 f = -f'' - (d-1)/r f'. Uniform grid, 2nd-order centered stencils,
/// parity extension across r = 0. At the origin: -d f''(0) for even f, else
/// marked singular (NaN). The top node is lost.
RadialProfile apply_L1(const RadialProfile& f, int d);

/// L0 f = -f'' - (d-1)/r f' + (d-1)/r^2 f. At the origin: 0 for odd f
/// (odd limit), else NaN.
RadialProfile apply_L0(const RadialProfile& f, int d);

/// -Delta {g0, g1} = {L0 g0, L1 g1}
ProfilePair neg_laplacian_pair(const ProfilePair& p, int d);

/// Nested-operator reduction: u = {sin psi, cos psi}, v = (-Delta)^m u,
/// then the tangential part -v + (v.u)u projected onto the tangent frame
/// {cos psi, -sin psi}.
ReducedRHS reduced_rhs_numeric(const RadialProfile& psi, const FlowParams& params);

/// Normal component (v.u) removed by the projection, for the tangency check.
Eigen::ArrayXd projection_normal_defect(const RadialProfile& psi,
                                        const FlowParams& params);

/// Closed-form right-hand side of the reduced biharmonic flow (m = 2),
/// evaluated exactly as printed; r > 0.
double biharmonic_rhs_closed(double psi, double dpsi, double d2psi,
                             double d3psi, double d4psi, double r, int d);

struct ConvergenceReport {
  std::vector<double> mesh_width;
  std::vector<double> max_discrepancy;  // on the interior band
  double fitted_rate = 0.0;             // least-squares in log2
  double band_lo = 0.0, band_hi = 0.0;
  bool pass = false;                    // rate >= scheme order - 0.2
};

/// Compares reduced_rhs_numeric against the closed form fed with
/// finite-difference derivatives of psi, over a sequence of grids.
/// profiles[i] is the same test function sampled on grids of increasing
/// resolution; requires d = 4, m = 2.
ConvergenceReport cross_validate(const FlowParams& params,
                                 const std::vector<RadialProfile>& profiles,
                                 double band_lo = 0.05, double band_hi = 1.0);

/// Centered 2nd-order FD derivatives (orders 1..4) of a profile with parity
/// extension at the origin; valid on nodes 2..n-3 (1..n-3 with the extension),
/// NaN elsewhere. Used by the closed-form comparison path and the PDE solver
/// tests.
struct FdDerivatives {
  Eigen::ArrayXd d1, d2, d3, d4;
};
FdDerivatives fd_derivatives(const RadialProfile& psi);

}  // namespace polyflow::reduction
