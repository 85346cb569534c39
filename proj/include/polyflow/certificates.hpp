#pragma once

#include "polyflow/core.hpp"
#include "polyflow/dynamics.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace polyflow::certificates {

struct InsufficientTail : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// f(y) = 1/2 sin(2y) (3 cos(2y) - 2)
inline double f_aux(double y) {
  return 0.5 * std::sin(2.0 * y) * (3.0 * std::cos(2.0 * y) - 2.0);
}

/// min over R of f_aux, in closed form
inline double f_min_closed() {
  return -std::sqrt(169.0 + 38.0 * std::sqrt(19.0)) / 12.0;
}

/// Q(x; fy) = (2 fy + 9 sin 2x) / (14 + 6 cos 2x)
inline double q_func(double x, double fy) {
  return (2.0 * fy + 9.0 * std::sin(2.0 * x)) / (14.0 + 6.0 * std::cos(2.0 * x));
}

/// d/dx Q(x; fy) = 3 (9 + 21 cos 2x + 2 fy sin 2x) / (7 + 3 cos 2x)^2
inline double q_grad(double x, double fy) {
  const double c = std::cos(2.0 * x), s = std::sin(2.0 * x);
  const double den = 7.0 + 3.0 * c;
  return 3.0 * (9.0 + 21.0 * c + 2.0 * fy * s) / (den * den);
}

struct CertificateReport {
  std::string lemma_id;
  double bound_claimed = 0.0;
  double bound_observed = 0.0;
  bool pass = false;
  std::vector<std::pair<std::string, double>> witness;
  std::map<std::string, double> details;
};

/// Maximizes q_grad over x in (-pi/2, pi/2], fy in [fy_lo, fy_hi] on a dense
/// grid with golden-section polish, and checks the c0 = 99/100 bound. Also
/// verifies the analytic f-minimum against the grid minimum.
CertificateReport verify_qgrad_bound(long grid_n, double fy_lo = -2.0,
                                     double fy_hi = 2.0);

struct ConeTag {
  bool in_w_plus = false;
  bool in_w_minus = false;
  bool in_w_plus_star = false;
  bool in_w_minus_star = false;
};

/// Exact product-cone membership: (x1,x3) and (x2,x4) in Lambda+- ; the star
/// variants additionally require x3 != 0.
ConeTag cone_membership(const Vec4& x);

struct InvarianceSample {
  double s0 = 0.0;
  Vec4 x0 = Vec4::Zero();
  double exit_s = 0.0;          // first Phi3 = +-1 time
  double min_margin = 0.0;      // min over s of the four cone margins
  double min_diff_ineq = 0.0;   // min of dX4 -+ 4 (X3 - c0 X1)
  double exit_bound = 0.0;      // s0 + sqrt(3 / (2 X3(0)))
  bool mirrored = false;
};

/// Perturbs a translated heteroclinic inside W+* (mirrored suite in W-*),
/// integrates the full flow, and verifies the deviation stays in the cone
/// until the first Phi3 = +-1 crossing. Also spot-checks the differential
/// inequality dX4 >= 4 (X3 - c0 X1). Deterministic sampling.
CertificateReport check_cone_invariance(int n_samples, double horizon,
                                        double tol = 1e-10,
                                        std::vector<InvarianceSample>* out = nullptr);

/// Verifies the strip-exit time bound s1 <= s0 + sqrt(3 / (2 X3(0))) on the
/// same sample family.
CertificateReport check_exit_bound(int n_samples, double tol = 1e-10,
                                   std::vector<InvarianceSample>* out = nullptr);

struct LateLifeTag {
  bool in_s1 = false;  // Phi2 >= sigma, Phi3 >= 1, Phi4 >= 0
  bool in_s2 = false;  // Phi3 >= 1, Phi4 >= 0
};
LateLifeTag late_life_membership(const Vec4& phi, double sigma);

/// Forward-invariance sweep of S1(sigma) and S2 along integrated orbits up to
/// the blowup guard.
CertificateReport check_late_life_invariance(int n_samples, double sigma = 1e-3,
                                             double tol = 1e-10);

struct BlowupDiagnostics {
  double z1_min = 0, z1_max = 0, z2_min = 0, z2_max = 0;
  double s_star = 0;        // extrapolated blowup time
  double phi4_slope = 0;    // log Phi4 vs log(s* - s); expect -3
  double phi1_log_coeff = 0;  // Phi1 ~ -c log(s* - s)
  double phi1_r2 = 0;
  int n_tail = 0;
};

/// Rescaled-variable and exponent diagnostics on a blown-up orbit's tail.
BlowupDiagnostics blowup_diagnostics(const dynamics::Orbit& orbit);

struct KEstimateRow {
  double eps = 0;
  double k_emp = 0;         // max |Phi1| at Phi2 = 0 events
  double c_emp = 0;         // max |(Phi1, Phi2)| at first |Phi3| = 1 crossing
  int n_orbits = 0;
  int n_zero_events = 0;
};

struct KEstimate {
  std::vector<KEstimateRow> rows;
  double max_rel_change_k = 0;
  double max_rel_change_c = 0;
  bool k_stable = false;  // relative change < 10% across the ladder
  bool c_stable = false;
  // near-heteroclinic supplement: max |Phi1| at Phi2-zeros over orbits seeded
  // as cone perturbations of Y (resolves the turnaround the angle sweep cannot)
  double k_near_heteroclinic = 0;
};

KEstimate estimate_K(std::span<const double> eps_ladder, int n_angles,
                     double tol = 1e-10);

}  // namespace polyflow::certificates
