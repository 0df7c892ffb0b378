#pragma once

// Backward heat kernel quantities on a periodic grid:
//   E(R)  = 2 R^2 sum e_eps G h^n          at t = t0 - R^2
//   H(R)  = sum d^2(u, Q) G h^n            at t = t0 - R^2
//   N(R)  = E / H
// The kernel uses the minimal-image displacement and is cut off one node short
// of the antipodal seam on each axis, so maps that are linear in the minimal
// image displacement are admissible test data.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hmflow/error.hpp"
#include "hmflow/grid.hpp"
#include "hmflow/target.hpp"

namespace hmflow {

struct KernelSpec {
  GridDomain domain;
  int x0 = 0;       // center node
  double t0 = 1.0;  // center time

  /// Largest admissible scale: below sqrt(t0) and at most period/8.
  double max_radius() const {
    double p = domain.period(0);
    if (domain.dim == 2) p = std::min(p, domain.period(1));
    return p / 8.0;
  }

  bool in_support(int node) const {
    for (int a = 0; a < domain.dim; ++a) {
      const int from = a == 0 ? domain.i1(x0) : domain.i2(x0);
      const int to = a == 0 ? domain.i1(node) : domain.i2(node);
      if (std::abs(domain.offset(a, from, to)) > domain.extent(a) / 2 - 2) return false;
    }
    return true;
  }

  /// Gaussian mass discarded by the cutoff at scale R (union bound over axes).
  double tail_bound(double R) const {
    double s = 0.0;
    for (int a = 0; a < domain.dim; ++a) {
      const double L = (domain.extent(a) / 2 - 2 + 0.5) * domain.h;
      s += std::erfc(L / (2.0 * R));
    }
    return s;
  }
};

inline double heat_kernel_weight(const KernelSpec& spec, int node, double t) {
  require(t < spec.t0, ErrorCode::invalid_time, "heat kernel needs t < t0");
  if (!spec.in_support(node)) return 0.0;
  const double s = spec.t0 - t;
  const double r2 = spec.domain.dist_sq(spec.x0, node);
  return std::pow(4.0 * kPi * s, -0.5 * spec.domain.dim) * std::exp(-r2 / (4.0 * s));
}

struct ScaleValues {
  double E = 0.0;
  double H = 0.0;
  double level = 0.0;  // fractional time index of t0 - R^2
};

namespace detail {

// e_eps at one level: gradient density plus eps times the time-difference density.
inline std::vector<double> level_energy_density(const Trajectory& traj, int k, double eps) {
  const GridDomain& d = traj.domain();
  std::vector<double> e;
  grad_sq(d, traj.kind(), traj.maps[k].values, e);
  if (eps > 0.0 && traj.K() >= 1) {
    const int K = traj.K();
    const int lo = k == 0 ? 0 : k - 1;
    const int hi = k == K ? K : k + 1;
    const double span = (hi - lo) * traj.tau;
    for (int i = 0; i < d.size(); ++i)
      e[i] += eps * distance_sq(traj.kind(), traj.maps[hi][i], traj.maps[lo][i]) / (span * span);
  }
  return e;
}

inline void check_scale(const Trajectory& traj, const KernelSpec& spec, double R) {
  require(R > 0.0 && R < std::sqrt(spec.t0), ErrorCode::scale_out_of_range, "R must lie in (0, sqrt(t0))");
  require(R <= spec.max_radius() * (1.0 + 1e-12), ErrorCode::scale_out_of_range, "R exceeds period/8");
  const double s = spec.t0 - R * R;
  require(s >= -1e-12 * traj.tau && s <= traj.K() * traj.tau * (1.0 + 1e-12), ErrorCode::scale_out_of_range,
          "t0 - R^2 falls outside the trajectory");
}

}  // namespace detail

inline ScaleValues eh_at_scale(const Trajectory& traj, double eps, const KernelSpec& spec, const TargetPoint& Q,
                               double R) {
  check_trajectory(traj);
  require(spec.domain == traj.domain(), ErrorCode::shape_mismatch, "kernel and trajectory domains differ");
  detail::check_scale(traj, spec, R);
  const double s = std::max(0.0, spec.t0 - R * R);
  const int K = traj.K();
  double pos = s / traj.tau;
  int k = std::min(static_cast<int>(std::floor(pos)), K);
  double theta = pos - k;
  if (theta < 1e-12 || k == K) theta = 0.0;
  ScaleValues out;
  out.level = pos;
  const int N = spec.domain.size();
  std::vector<double> G(N);
  for (int i = 0; i < N; ++i) G[i] = heat_kernel_weight(spec, i, s);
  const double vol = spec.domain.cell_volume();
  auto accumulate = [&](int level, double w) {
    const std::vector<double> e = detail::level_energy_density(traj, level, eps);
    double Es = 0.0, Hs = 0.0;
    for (int i = 0; i < N; ++i) {
      if (G[i] == 0.0) continue;
      Es += e[i] * G[i];
      Hs += distance_sq(traj.kind(), traj.maps[level][i], Q) * G[i];
    }
    out.E += w * 2.0 * R * R * Es * vol;
    out.H += w * Hs * vol;
  };
  accumulate(k, 1.0 - theta);
  if (theta > 0.0) accumulate(k + 1, theta);
  return out;
}

struct FrequencyRow {
  double R = 0.0;
  double E = 0.0;
  double H = 0.0;
  double N = 0.0;
  double level = 0.0;
};

struct FrequencyReport {
  int x0 = 0;
  double t0 = 0.0;
  TargetPoint Q;
  std::vector<FrequencyRow> rows;
  double monotone_violation_max = 0.0;
  double n_limit_estimate = 0.0;
  double tail_bound = 0.0;  // largest discarded kernel mass over the rows
};

/// Evenly spaced scales in [rmin, rmax].
inline std::vector<double> radius_grid(double rmin, double rmax, int count) {
  require(count >= 2 && rmin > 0.0 && rmax > rmin, ErrorCode::invalid_argument, "bad radius grid");
  std::vector<double> R(count);
  for (int i = 0; i < count; ++i) R[i] = rmin + (rmax - rmin) * i / (count - 1);
  return R;
}

inline FrequencyReport frequency_profile(const Trajectory& traj, double eps, const KernelSpec& spec,
                                         const TargetPoint& Q, const std::vector<double>& radii) {
  require(!radii.empty(), ErrorCode::empty_input, "no radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    require(radii[i] > radii[i - 1], ErrorCode::invalid_argument, "radii must be increasing");
  FrequencyReport rep;
  rep.x0 = spec.x0;
  rep.t0 = spec.t0;
  rep.Q = Q;
  for (double R : radii) {
    const ScaleValues v = eh_at_scale(traj, eps, spec, Q, R);
    if (!(v.H > 0.0))
      fail(ErrorCode::degenerate_frequency, "H vanishes at R = " + std::to_string(R) + " (u is constant at Q)");
    rep.rows.push_back(FrequencyRow{R, v.E, v.H, v.E / v.H, v.level});
    rep.tail_bound = std::max(rep.tail_bound, spec.tail_bound(R));
  }
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    rep.monotone_violation_max = std::max(rep.monotone_violation_max, rep.rows[i - 1].N - rep.rows[i].N);
  // Smallest scale that still spans a few cells in space and a time step.
  const double h = spec.domain.h;
  rep.n_limit_estimate = rep.rows.front().N;
  for (const FrequencyRow& r : rep.rows) {
    if (r.R >= 1.5 * h && r.R * r.R >= traj.tau) {
      rep.n_limit_estimate = r.N;
      break;
    }
  }
  return rep;
}

struct StruweRow {
  double R = 0.0;
  double Phi = 0.0;
};

inline std::vector<StruweRow> struwe_profile(const Trajectory& traj, double eps, const KernelSpec& spec,
                                             const std::vector<double>& radii) {
  std::vector<StruweRow> rows;
  const TargetPoint Q = traj.maps.front()[spec.x0];
  for (double R : radii) rows.push_back(StruweRow{R, eh_at_scale(traj, eps, spec, Q, R).E});
  return rows;
}

/// Largest decrease of Phi between consecutive scales.
inline double struwe_violation_max(const std::vector<StruweRow>& rows) {
  double v = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) v = std::max(v, rows[i - 1].Phi - rows[i].Phi);
  return v;
}

/// Time level nearest to t.
inline int level_of(const Trajectory& traj, double t) {
  const int k = static_cast<int>(std::lround(t / traj.tau));
  require(k >= 0 && k <= traj.K(), ErrorCode::invalid_time, "time outside the trajectory");
  return k;
}

/// u^delta = (u, delta * (x - x0)) into product(base, dim, delta), with Q = u^delta(z0).
inline Trajectory augment(const Trajectory& traj, double delta, int x0) {
  check_trajectory(traj);
  require(delta > 0.0, ErrorCode::invalid_argument, "delta must be positive");
  const GridDomain& d = traj.domain();
  const TargetKind kind = TargetKind::product(traj.kind(), d.dim, delta);
  const int bc = traj.kind().coord_count();
  Trajectory out;
  out.tau = traj.tau;
  for (const GridMap& m : traj.maps) {
    std::vector<TargetPoint> v(m.values);
    for (int i = 0; i < d.size(); ++i) {
      v[i].x[bc] = d.offset(0, d.i1(x0), d.i1(i)) * d.h;
      if (d.dim == 2) v[i].x[bc + 1] = d.offset(1, d.i2(x0), d.i2(i)) * d.h;
    }
    out.maps.emplace_back(d, kind, std::move(v));
  }
  return out;
}

inline FrequencyReport augmented_frequency(const Trajectory& traj, double eps, double delta, const KernelSpec& spec,
                                           const std::vector<double>& radii) {
  require(traj.kind().tag != TargetTag::product, ErrorCode::unsupported_on_target, "target is already a product");
  const Trajectory aug = augment(traj, delta, spec.x0);
  const TargetPoint Q = aug.maps[level_of(aug, std::min(spec.t0, aug.K() * aug.tau))][spec.x0];
  return frequency_profile(aug, eps, spec, Q, radii);
}

namespace detail {

inline std::vector<double> chart_coords(const TargetKind& kind, const TargetPoint& p) {
  if (kind.smooth()) {
    const AmbientVec a = ambient_coords(kind, p);
    return std::vector<double>(a.begin(), a.begin() + kind.ambient_dim());
  }
  return embed_coords(kind, p);
}

}  // namespace detail

struct LinearFit {
  double slope_norm = 0.0;  // |A|
  double residual = 0.0;    // root-mean-square misfit
};

/// Least-squares fit c + A (x - x_node) of the embedded values over the nodes
/// within `cells` grid cells of a node.
inline LinearFit local_linear_fit(const GridMap& u, int node, int cells = 2) {
  const GridDomain& d = u.domain;
  const int D = d.dim;
  std::vector<std::vector<double>> ys;
  std::vector<std::array<double, 2>> xs;
  for (int a = -cells; a <= cells; ++a)
    for (int b = (D == 2 ? -cells : 0); b <= (D == 2 ? cells : 0); ++b) {
      const int j = d.index(d.i1(node) + a, d.i2(node) + b);
      xs.push_back({a * d.h, b * d.h});
      ys.push_back(detail::chart_coords(u.kind, u[j]));
    }
  const std::size_t m = xs.size(), L = ys.front().size();
  // Symmetric stencil: the normal equations decouple into means and first moments.
  double sxx = 0.0, syy = 0.0;
  for (const auto& x : xs) {
    sxx += x[0] * x[0];
    syy += x[1] * x[1];
  }
  LinearFit fit;
  double a2 = 0.0, res = 0.0;
  for (std::size_t c = 0; c < L; ++c) {
    double mean = 0.0, gx = 0.0, gy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      mean += ys[i][c];
      gx += ys[i][c] * xs[i][0];
      gy += ys[i][c] * xs[i][1];
    }
    mean /= static_cast<double>(m);
    gx /= sxx;
    gy = D == 2 ? gy / syy : 0.0;
    a2 += gx * gx + gy * gy;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = ys[i][c] - (mean + gx * xs[i][0] + gy * xs[i][1]);
      res += r * r;
    }
  }
  fit.slope_norm = std::sqrt(a2);
  fit.residual = std::sqrt(res / static_cast<double>(m));
  return fit;
}

/// Nodes where the local linear fit misfit is below 0.1 |A| h and |A| > 0.
inline std::vector<int> differentiable_points(const GridMap& u, int cells = 2) {
  std::vector<int> out;
  for (int i = 0; i < u.domain.size(); ++i) {
    const LinearFit f = local_linear_fit(u, i, cells);
    if (f.slope_norm > 0.0 && f.residual < 0.1 * f.slope_norm * u.domain.h) out.push_back(i);
  }
  return out;
}

/// Least-squares slope of log y against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::invalid_argument, "need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, ErrorCode::invalid_argument, "log-log fit needs positive data");
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace hmflow
