#pragma once

// Pointwise and weak-form checks of the inequalities satisfied by minimizers
// and flows: energy bounds, subharmonicity of d^2(u, Q), the Bochner sign,
// the sup bound for the energy density, and empirical regularity exponents.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hmflow/error.hpp"
#include "hmflow/grid.hpp"
#include "hmflow/target.hpp"

namespace hmflow {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  int i = -1;  // node of the worst violation
  int k = -1;  // level of the worst violation
  bool informational = false;  // reported, never fails a run
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  void add(CheckResult c) {
    c.pass = c.residual <= c.tolerance;
    checks.push_back(std::move(c));
  }
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass || c.informational; });
  }
  const CheckResult& find(const std::string& name) const {
    for (const CheckResult& c : checks)
      if (c.name == name) return c;
    fail(ErrorCode::invalid_argument, "no check named " + name);
  }
};

// ---------------------------------------------------------------------------
// Energy estimates

/// (a) sup_k E_h(u_k) <= E0 (1 + tol)
/// (b) sum_k d2(u_{k+1}, u_k)^2 / tau <= E0 (1 + tol), the dissipation of the
///     piecewise-geodesic interpolant, with E0 = E_h(u0) = 1/2 int |grad u0|^2
/// (c) second differences of k -> E_h(u_k) >= -tol E0
inline ValidationReport energy_report(const Trajectory& traj, double eps, double E0, double tol = 1e-2) {
  (void)eps;
  check_trajectory(traj);
  ValidationReport rep;
  const int K = traj.K();
  std::vector<double> E(K + 1);
  for (int k = 0; k <= K; ++k) E[k] = ks_energy(traj.maps[k]);

  CheckResult a{"energy_sup"};
  a.tolerance = E0 * tol;
  a.residual = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= K; ++k)
    if (E[k] - E0 > a.residual) {
      a.residual = E[k] - E0;
      a.k = k;
    }
  a.residual = std::max(a.residual, 0.0);
  rep.add(a);

  CheckResult b{"dissipation"};
  double diss = 0.0;
  for (int k = 0; k < K; ++k) {
    const double dd = l2_distance(traj.maps[k + 1], traj.maps[k]);
    diss += dd * dd / traj.tau;
  }
  b.tolerance = E0 * tol;
  b.residual = std::max(0.0, diss - E0);
  rep.add(b);

  CheckResult c{"energy_convexity"};
  c.tolerance = tol * E0;
  for (int k = 1; k < K; ++k) {
    const double second = E[k + 1] - 2.0 * E[k] + E[k - 1];
    if (-second > c.residual) {
      c.residual = -second;
      c.k = k;
    }
  }
  rep.add(c);
  return rep;
}

/// Dissipation sum_k d2(u_{k+1}, u_k)^2 / tau.
inline double dissipation(const Trajectory& traj) {
  double s = 0.0;
  for (int k = 0; k < traj.K(); ++k) {
    const double dd = l2_distance(traj.maps[k + 1], traj.maps[k]);
    s += dd * dd / traj.tau;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Subharmonicity of rho = d^2(u, Q)

struct SubharmonicityOptions {
  double C = 1.0;  // pointwise slack C (h + tau) max e_eps
};

namespace detail {

// Smooth periodic bump in space times a C^3 bump in time, with analytic derivatives.
struct Bump {
  double cx, cy, width_t_lo, width_t_hi;
  int dim;
  double L1, L2;

  static double space1(double x, double c, double L, double& d1, double& d2) {
    const double w = 2.0 * kPi / L;
    const double s = 1.0 + std::cos(w * (x - c));
    const double ds = -w * std::sin(w * (x - c));
    const double dds = -w * w * std::cos(w * (x - c));
    d1 = 2.0 * s * ds;
    d2 = 2.0 * (ds * ds + s * dds);
    return s * s;
  }
  static double time1(double t, double a, double b, double& d1, double& d2) {
    if (t <= a || t >= b) {
      d1 = d2 = 0.0;
      return 0.0;
    }
    const double w = kPi / (b - a);
    const double s = std::sin(w * (t - a)), c = std::cos(w * (t - a));
    // sin^4 and its derivatives
    d1 = 4.0 * w * s * s * s * c;
    d2 = 4.0 * w * w * (3.0 * s * s * c * c - s * s * s * s);
    return s * s * s * s;
  }
  // phi, phi_t, phi_tt, Laplacian phi
  void eval(double x, double y, double t, double& f, double& ft, double& ftt, double& lap) const {
    double ax1, ax2, ay1 = 0.0, ay2 = 0.0, t1, t2;
    const double X = space1(x, cx, L1, ax1, ax2);
    double Y = 1.0;
    if (dim == 2) Y = space1(y, cy, L2, ay1, ay2);
    const double T = time1(t, width_t_lo, width_t_hi, t1, t2);
    f = X * Y * T;
    ft = X * Y * t1;
    ftt = X * Y * t2;
    lap = (ax2 * Y + X * ay2) * T;
  }
};

}  // namespace detail

/// Pointwise r = (D_t - Delta_h - eps D_tt) rho + 2 e_eps at interior levels,
/// plus three weak-form integrals against fixed smooth bumps.
inline ValidationReport subharmonicity_residual(const Trajectory& traj, double eps, const TargetPoint& Q,
                                                const SubharmonicityOptions& opt = {}) {
  check_trajectory(traj);
  require(traj.K() >= 2, ErrorCode::domain_too_small, "subharmonicity needs interior time levels");
  const GridDomain& d = traj.domain();
  const TargetKind& kind = traj.kind();
  const int K = traj.K(), N = d.size();
  const double tau = traj.tau, h2 = d.h * d.h;
  const DensityFields f = density_fields(traj, eps);
  std::vector<std::vector<double>> rho(K + 1, std::vector<double>(N));
  double emax = 0.0;
  for (int k = 0; k <= K; ++k)
    for (int i = 0; i < N; ++i) {
      rho[k][i] = distance_sq(kind, traj.maps[k][i], Q);
      emax = std::max(emax, f.e_eps[k][i]);
    }
  ValidationReport rep;
  CheckResult pw{"subharmonicity"};
  pw.tolerance = opt.C * (d.h + tau) * emax;
  for (int k = 1; k < K; ++k)
    for (int i = 0; i < N; ++i) {
      const auto nb = d.neighbors(i);
      double lap = -2.0 * d.dim * rho[k][i];
      for (int j = 0; j < d.neighbor_count(); ++j) lap += rho[k][nb[j]];
      const double r = (rho[k + 1][i] - rho[k - 1][i]) / (2.0 * tau) - lap / h2 -
                       eps * (rho[k + 1][i] - 2.0 * rho[k][i] + rho[k - 1][i]) / (tau * tau) + 2.0 * f.e_eps[k][i];
      if (r > pw.residual) {
        pw.residual = r;
        pw.i = i;
        pw.k = k;
      }
    }
  rep.add(pw);

  // Weak form: int int rho (-phi_t - Delta phi - eps phi_tt) + 2 e phi <= 0.
  const double T = K * tau;
  const double L1 = d.period(0), L2 = d.dim == 2 ? d.period(1) : 1.0;
  const std::array<detail::Bump, 3> bumps = {
      detail::Bump{0.0, 0.0, 0.1 * T, 0.6 * T, d.dim, L1, L2},
      detail::Bump{0.3 * L1, 0.5 * L2, 0.2 * T, 0.9 * T, d.dim, L1, L2},
      detail::Bump{0.65 * L1, 0.25 * L2, 0.05 * T, 0.45 * T, d.dim, L1, L2},
  };
  const double vol = d.cell_volume() * tau;
  for (std::size_t b = 0; b < bumps.size(); ++b) {
    double lhs = 0.0, scale = 0.0;
    for (int k = 0; k <= K; ++k) {
      const double wt = (k == 0 || k == K) ? 0.5 : 1.0;
      for (int i = 0; i < N; ++i) {
        double phi, pt_, ptt, lap;
        bumps[b].eval(d.i1(i) * d.h, d.i2(i) * d.h, k * tau, phi, pt_, ptt, lap);
        lhs += wt * (rho[k][i] * (-pt_ - lap - eps * ptt) + 2.0 * f.e_eps[k][i] * phi) * vol;
        scale += wt * 2.0 * f.e_eps[k][i] * phi * vol;
      }
    }
    CheckResult w{"subharmonicity_weak_" + std::to_string(b + 1)};
    w.residual = std::max(0.0, lhs);
    w.tolerance = opt.C * (d.h + tau) * scale;
    rep.add(w);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Bochner sign

struct BochnerOptions {
  double C = 0.0;      // lower bound of the domain Ricci curvature, zero on flat tori
  double slack = 10.0; // tolerance slack (h + tau) max e_eps
};

/// b = -eps D_tt e - Delta_h e + D_t e - C e on levels 2..K-2. On the sphere
/// the check is reported as informational.
inline ValidationReport bochner_residual(const Trajectory& traj, double eps, const BochnerOptions& opt = {}) {
  check_trajectory(traj);
  const TargetKind& kind = traj.kind();
  require(kind.smooth(), ErrorCode::unsupported_on_target, "Bochner check needs a smooth target");
  require(traj.K() >= 4, ErrorCode::domain_too_small, "Bochner check needs at least 5 time levels");
  const GridDomain& d = traj.domain();
  const int K = traj.K(), N = d.size();
  const double tau = traj.tau, h2 = d.h * d.h;
  const DensityFields f = density_fields(traj, eps);
  const auto& e = f.e_eps;
  double emax = 0.0;
  for (int k = 2; k <= K - 2; ++k)
    for (int i = 0; i < N; ++i) emax = std::max(emax, e[k][i]);
  CheckResult c{"bochner"};
  c.informational = !kind.npc();
  c.tolerance = opt.slack * (d.h + tau) * emax;
  for (int k = 2; k <= K - 2; ++k)
    for (int i = 0; i < N; ++i) {
      const auto nb = d.neighbors(i);
      double lap = -2.0 * d.dim * e[k][i];
      for (int j = 0; j < d.neighbor_count(); ++j) lap += e[k][nb[j]];
      const double b = -eps * (e[k + 1][i] - 2.0 * e[k][i] + e[k - 1][i]) / (tau * tau) - lap / h2 +
                       (e[k + 1][i] - e[k - 1][i]) / (2.0 * tau) - opt.C * e[k][i];
      if (b > c.residual) {
        c.residual = b;
        c.i = i;
        c.k = k;
      }
    }
  ValidationReport rep;
  rep.add(c);
  return rep;
}

// ---------------------------------------------------------------------------
// Sup bound for the energy density

struct Probe {
  int node = 0;
  double t0 = 0.0;
  double r = 0.1;
};

struct SupBoundResult {
  ValidationReport report;
  std::vector<double> constants;  // fitted c per probe (NaN when skipped)
  double c_fit = 0.0;             // smallest single constant valid for every probe
};

/// For each probe: sup over B_{r/2}(x0) x (t0 - r^2/4, t0 + r^2/4) of e_eps
/// against [eps / r^{n+2} + 1 / r^n] E0. Probes with eps > r^2 are skipped.
inline SupBoundResult sup_bound_check(const Trajectory& traj, double eps, double E0, const std::vector<Probe>& probes,
                                      double c_max = 10.0) {
  check_trajectory(traj);
  require(!probes.empty(), ErrorCode::empty_input, "no probes");
  const GridDomain& d = traj.domain();
  const int K = traj.K(), N = d.size();
  const DensityFields f = density_fields(traj, eps);
  SupBoundResult out;
  CheckResult c{"sup_bound"};
  c.tolerance = c_max;
  for (const Probe& p : probes) {
    if (eps > p.r * p.r) {
      out.constants.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double half = 0.5 * p.r;
    const double tlo = p.t0 - half * half, thi = p.t0 + half * half;
    double lhs = 0.0;
    int wi = -1, wk = -1;
    for (int k = 0; k <= K; ++k) {
      const double t = k * traj.tau;
      if (t <= tlo || t >= thi) continue;
      for (int i = 0; i < N; ++i) {
        if (d.dist_sq(p.node, i) >= half * half) continue;
        if (f.e_eps[k][i] > lhs) {
          lhs = f.e_eps[k][i];
          wi = i;
          wk = k;
        }
      }
    }
    const double bracket = (eps / std::pow(p.r, d.dim + 2) + 1.0 / std::pow(p.r, d.dim)) * E0;
    const double cst = bracket > 0.0 ? lhs / bracket : 0.0;
    out.constants.push_back(cst);
    if (cst > c.residual) {
      c.residual = cst;
      c.i = wi;
      c.k = wk;
    }
  }
  out.c_fit = c.residual;
  out.report.add(c);
  return out;
}

// ---------------------------------------------------------------------------
// Regularity exponents

struct RegularityOptions {
  int level = -1;            // level for the spatial exponents; -1 selects K/2
  std::vector<int> centers;  // empty selects 8 evenly spaced nodes
  double r_max = 0.0;        // largest radius; 0 selects period/8
  int time_node = -1;        // node for the time exponent; -1 selects the domain midline
  double t_lo = 0.0;         // time window for the time exponent; 0 selects 2 tau
  double t_hi = 0.0;         // 0 selects T/4
};

struct RegularityEstimate {
  double alpha = 0.0;
  double lip = 0.0;
  double time_exponent = 0.0;
  std::vector<double> radii;
};

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

inline RegularityEstimate regularity_estimate(const Trajectory& traj, const RegularityOptions& opt = {}) {
  check_trajectory(traj);
  const GridDomain& d = traj.domain();
  const TargetKind& kind = traj.kind();
  const int K = traj.K();
  double period = d.period(0);
  if (d.dim == 2) period = std::min(period, d.period(1));
  const double r_max = opt.r_max > 0.0 ? opt.r_max : period / 8.0;
  RegularityEstimate out;
  for (double r = 2.0 * d.h; r <= r_max * (1.0 + 1e-12); r *= 2.0) out.radii.push_back(r);
  require(out.radii.size() >= 3, ErrorCode::domain_too_small, "fewer than 3 dyadic radii fit in the domain");

  const int level = opt.level >= 0 ? opt.level : K / 2;
  require(level <= K, ErrorCode::invalid_argument, "regularity level outside the trajectory");
  const GridMap& u = traj.maps[level];
  std::vector<int> centers = opt.centers;
  if (centers.empty())
    for (int c = 0; c < 8; ++c) centers.push_back(d.index(c * d.n1 / 8, c * d.n2 / 8));
  double slope_sum = 0.0;
  int used = 0;
  for (int c : centers) {
    std::vector<double> lx, ly;
    for (double r : out.radii) {
      const double o = oscillation(u, c, r);
      if (o <= 0.0) continue;
      lx.push_back(std::log(r));
      ly.push_back(std::log(o));
    }
    if (lx.size() < 3) continue;
    slope_sum += detail::ls_slope(lx, ly);
    ++used;
  }
  out.alpha = used > 0 ? std::clamp(slope_sum / used, 1e-12, 1.05) : 0.0;

  const GridMap& last = traj.maps[K];
  for (int i = 0; i < d.size(); ++i) {
    const auto nb = d.neighbors(i);
    for (int j = 0; j < d.neighbor_count(); ++j) out.lip = std::max(out.lip, distance(kind, last[i], last[nb[j]]) / d.h);
  }

  if (K >= 3) {
    const int node = opt.time_node >= 0 ? opt.time_node : d.index(d.n1 / 2, d.n2 / 2);
    const double t_lo = opt.t_lo > 0.0 ? opt.t_lo : 2.0 * traj.tau;
    const double t_hi = opt.t_hi > 0.0 ? opt.t_hi : 0.25 * K * traj.tau;
    std::vector<double> lx, ly;
    for (int k = 1; k <= K; ++k) {
      const double t = k * traj.tau;
      if (t < t_lo * (1.0 - 1e-12) || t > t_hi * (1.0 + 1e-12)) continue;
      const double dd = distance(kind, traj.maps[k][node], traj.maps[0][node]);
      if (dd <= 0.0) continue;
      lx.push_back(std::log(t));
      ly.push_back(std::log(dd));
    }
    if (lx.size() >= 2) out.time_exponent = detail::ls_slope(lx, ly);
  }
  return out;
}

}  // namespace hmflow
