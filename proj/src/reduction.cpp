#include "polyflow/reduction.hpp"

#include <cmath>
#include <limits>

namespace polyflow::reduction {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_uniform(const RadialGrid& g, int min_nodes, const char* who) {
  g.validate();
  if (!g.is_uniform())
    throw std::invalid_argument(std::string(who) + ": uniform grid required");
  if (g.size() < min_nodes)
    throw GridTooCoarse(std::string(who) + ": grid too coarse");
}
}  // namespace

void ProfilePair::validate() const {
  grid.validate();
  if (g0.size() != grid.nodes.size() || g1.size() != grid.nodes.size())
    throw std::invalid_argument("ProfilePair: size mismatch");
}

double ProfilePair::max_norm_defect() const {
  return (g0 * g0 + g1 * g1 - 1.0).abs().maxCoeff();
}

int ReducedRHS::last_valid() const {
  for (int j = static_cast<int>(values.size()) - 1; j >= 0; --j)
    if (std::isfinite(values[j])) return j;
  return -1;
}

namespace {

// shared stencil loop for L0/L1; with_zeroth adds +(d-1)/r^2 f
Eigen::ArrayXd apply_radial_op(const Eigen::ArrayXd& f, bool f_odd,
                               const RadialGrid& grid, int d, bool with_zeroth) {
  const int n = static_cast<int>(f.size());
  const double h = grid.h();
  const auto& r = grid.nodes;
  Eigen::ArrayXd out(n);
  out.setConstant(kNaN);
  const double par = f_odd ? -1.0 : 1.0;
  for (int j = 1; j < n - 1; ++j) {
    const double fm = j == 1 ? par * f[1] : f[j - 1];  // parity ghost at -h
    const double fpp = (fm - 2.0 * f[j] + f[j + 1]) / (h * h);
    const double fp = (f[j + 1] - fm) / (2.0 * h);
    double v = -fpp - (d - 1) / r[j] * fp;
    if (with_zeroth) v += (d - 1) / (r[j] * r[j]) * f[j];
    out[j] = v;
  }
  // origin limits
  if (!with_zeroth && !f_odd) {
    const double fpp0 = 2.0 * (f[1] - f[0]) / (h * h);  // even extension
    out[0] = -double(d) * fpp0;
  } else if (with_zeroth && f_odd) {
    out[0] = 0.0;
  }
  return out;
}

}  // namespace

RadialProfile apply_L1(const RadialProfile& f, int d) {
  f.validate();
  require_uniform(f.grid, 5, "apply_L1");
  if (d < 2) throw std::invalid_argument("apply_L1: d must be >= 2");
  RadialProfile out;
  out.grid = f.grid;
  out.values = apply_radial_op(f.values, f.odd_about_origin, f.grid, d, false);
  out.odd_about_origin = f.odd_about_origin;  // L1 preserves parity
  return out;
}

RadialProfile apply_L0(const RadialProfile& f, int d) {
  f.validate();
  require_uniform(f.grid, 5, "apply_L0");
  if (d < 2) throw std::invalid_argument("apply_L0: d must be >= 2");
  RadialProfile out;
  out.grid = f.grid;
  out.values = apply_radial_op(f.values, f.odd_about_origin, f.grid, d, true);
  out.odd_about_origin = f.odd_about_origin;  // L0 preserves parity
  return out;
}

ProfilePair neg_laplacian_pair(const ProfilePair& p, int d) {
  p.validate();
  require_uniform(p.grid, 5, "neg_laplacian_pair");
  ProfilePair out;
  out.grid = p.grid;
  out.g0 = apply_radial_op(p.g0, p.g0_odd, p.grid, d, true);   // L0 g0
  out.g1 = apply_radial_op(p.g1, p.g1_odd, p.grid, d, false);  // L1 g1
  out.g0_odd = p.g0_odd;
  out.g1_odd = p.g1_odd;
  return out;
}

namespace {

// v = (-Delta)^m {sin psi, cos psi}; parity ghosts keep the origin usable but
// each application loses the top node.
ProfilePair nested_pair(const RadialProfile& psi, const FlowParams& params) {
  ProfilePair u;
  u.grid = psi.grid;
  u.g0 = psi.values.sin();
  u.g1 = psi.values.cos();
  u.g0_odd = true;
  u.g1_odd = false;
  ProfilePair v = u;
  for (int k = 0; k < params.m; ++k) {
    v = neg_laplacian_pair(v, params.d);
    // NaNs propagate from the lost top nodes on further applications
    for (int j = 0; j < v.grid.size(); ++j) {
      if (!std::isfinite(v.g0[j])) v.g0[j] = kNaN;
      if (!std::isfinite(v.g1[j])) v.g1[j] = kNaN;
    }
  }
  return v;
}

}  // namespace

ReducedRHS reduced_rhs_numeric(const RadialProfile& psi,
                               const FlowParams& params) {
  psi.validate();
  if (!psi.odd_about_origin || psi.values[0] != 0.0)
    throw std::invalid_argument("reduced_rhs_numeric: psi must be odd with psi(0) = 0");
  require_uniform(psi.grid, 4 * params.m + 5, "reduced_rhs_numeric");

  const ProfilePair u{psi.grid, psi.values.sin(), psi.values.cos(), true, false};
  const ProfilePair v = nested_pair(psi, params);

  ReducedRHS out;
  out.grid = psi.grid;
  out.order = params.m;
  const int n = psi.grid.size();
  out.values.resize(n);
  out.values.setConstant(kNaN);
  for (int j = 1; j < n; ++j) {
    if (!std::isfinite(v.g0[j]) || !std::isfinite(v.g1[j])) continue;
    // tangential projection: (-v + (v.u)u) . {cos psi, -sin psi} = -v . tau
    const double c = u.g1[j], s = u.g0[j];  // cos psi, sin psi
    out.values[j] = v.g1[j] * s - v.g0[j] * c;
  }
  return out;
}

Eigen::ArrayXd projection_normal_defect(const RadialProfile& psi,
                                        const FlowParams& params) {
  const ProfilePair u{psi.grid, psi.values.sin(), psi.values.cos(), true, false};
  const ProfilePair v = nested_pair(psi, params);
  const int n = psi.grid.size();
  Eigen::ArrayXd defect(n);
  defect.setConstant(kNaN);
  for (int j = 1; j < n; ++j) {
    if (!std::isfinite(v.g0[j]) || !std::isfinite(v.g1[j])) continue;
    const double vu = v.g0[j] * u.g0[j] + v.g1[j] * u.g1[j];
    const double w0 = -v.g0[j] + vu * u.g0[j];
    const double w1 = -v.g1[j] + vu * u.g1[j];
    defect[j] = std::abs(w0 * u.g0[j] + w1 * u.g1[j]);
  }
  return defect;
}

double biharmonic_rhs_closed(double psi, double dpsi, double d2psi,
                             double d3psi, double d4psi, double r, int d) {
  if (!(r > 0.0)) throw SingularOrigin("biharmonic_rhs_closed: r must be > 0");
  const double s2 = std::sin(2.0 * psi);
  const double c2 = std::cos(2.0 * psi);
  const double dd = static_cast<double>(d);
  const double r2 = r * r, r3 = r2 * r, r4 = r2 * r2;
  return -d4psi
         - 2.0 * (dd - 1.0) / r * d3psi
         + 6.0 * dpsi * dpsi * d2psi
         - (dd - 1.0) / r2 * s2 * dpsi * dpsi
         + 2.0 * (dd - 1.0) / r * dpsi * dpsi * dpsi
         + ((dd - 1.0) * c2 - dd * dd + 5.0 * dd - 4.0) / r2 * d2psi
         + ((dd * dd - 4.0 * dd + 3.0) * c2 + 2.0 * dd * dd - 8.0 * dd + 6.0) / r3 * dpsi
         - 1.5 * (dd * dd - 4.0 * dd + 3.0) / r4 * s2;
}

FdDerivatives fd_derivatives(const RadialProfile& psi) {
  psi.validate();
  require_uniform(psi.grid, 7, "fd_derivatives");
  const int n = psi.grid.size();
  const double h = psi.grid.h();
  const double par = psi.odd_about_origin ? -1.0 : 1.0;
  // parity extension by two nodes below the origin
  Eigen::ArrayXd pe(n + 2);
  pe[0] = par * psi.values[2];
  pe[1] = par * psi.values[1];
  pe.tail(n) = psi.values;
  FdDerivatives fd;
  for (auto* a : {&fd.d1, &fd.d2, &fd.d3, &fd.d4}) {
    a->resize(n);
    a->setConstant(kNaN);
  }
  for (int j = 1; j <= n - 3; ++j) {
    const int e = j + 2;
    fd.d1[j] = (pe[e + 1] - pe[e - 1]) / (2.0 * h);
    fd.d2[j] = (pe[e - 1] - 2.0 * pe[e] + pe[e + 1]) / (h * h);
    fd.d3[j] = (-pe[e - 2] + 2.0 * pe[e - 1] - 2.0 * pe[e + 1] + pe[e + 2]) /
               (2.0 * h * h * h);
    fd.d4[j] = (pe[e - 2] - 4.0 * pe[e - 1] + 6.0 * pe[e] - 4.0 * pe[e + 1] +
                pe[e + 2]) /
               (h * h * h * h);
  }
  return fd;
}

ConvergenceReport cross_validate(const FlowParams& params,
                                 const std::vector<RadialProfile>& profiles,
                                 double band_lo, double band_hi) {
  if (!(params.d == 4 && params.m == 2))
    throw std::invalid_argument("cross_validate: closed form requires d = 4, m = 2");
  if (profiles.size() < 2)
    throw std::invalid_argument("cross_validate: need at least two grids");

  ConvergenceReport rep;
  rep.band_lo = band_lo;
  rep.band_hi = band_hi;
  for (const auto& psi : profiles) {
    const ReducedRHS nested = reduced_rhs_numeric(psi, params);
    const FdDerivatives fd = fd_derivatives(psi);
    double disc = 0.0;
    const int n = psi.grid.size();
    for (int j = 1; j < n; ++j) {
      const double r = psi.grid.nodes[j];
      if (r < band_lo || r > band_hi) continue;
      if (!std::isfinite(nested.values[j]) || !std::isfinite(fd.d4[j])) continue;
      const double cf = biharmonic_rhs_closed(psi.values[j], fd.d1[j], fd.d2[j],
                                              fd.d3[j], fd.d4[j], r, params.d);
      disc = std::max(disc, std::abs(nested.values[j] - cf));
    }
    rep.mesh_width.push_back(psi.grid.h());
    rep.max_discrepancy.push_back(disc);
  }

  // least-squares rate across the grid sequence
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rep.mesh_width.size(); ++i) {
    if (rep.max_discrepancy[i] <= 0.0) continue;
    lx.push_back(std::log2(rep.mesh_width[i]));
    ly.push_back(std::log2(rep.max_discrepancy[i]));
  }
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= double(lx.size());
    my /= double(lx.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    rep.fitted_rate = sxy / sxx;
  } else {
    rep.fitted_rate = std::numeric_limits<double>::infinity();  // all-zero discrepancy
  }
  rep.pass = rep.fitted_rate >= 2.0 - 0.2 || lx.empty();
  return rep;
}

}  // namespace polyflow::reduction
