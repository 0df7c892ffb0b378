#pragma once

// Reference gradient flows of the discrete energy: minimizing movements
// (implicit Euler in the L2 metric), an explicit ambient scheme for smooth
// targets, the EVI residual, and the long-time harmonic limit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "hmflow/error.hpp"
#include "hmflow/grid.hpp"
#include "hmflow/relax.hpp"
#include "hmflow/target.hpp"

namespace hmflow {

struct MmConfig {
  double tau = 0.01;
  int steps = 100;
  double inner_tol = 1e-10;  // largest node move per inner sweep
  int inner_max_sweeps = 10000;
  double limit_tol = 1e-6;   // harmonic_limit: step change relative to the first step
  double omega = 0.0;        // 0 selects it from the grid
  int threads = 0;

  void validate() const {
    require(tau > 0.0, ErrorCode::invalid_argument, "mm.tau must be positive");
    require(steps >= 1, ErrorCode::invalid_argument, "mm.steps must be >= 1");
    require(inner_tol > 0.0 && limit_tol > 0.0, ErrorCode::invalid_argument, "mm tolerances must be positive");
    require(inner_max_sweeps >= 1, ErrorCode::invalid_argument, "mm.inner_max_sweeps must be >= 1");
  }
};

struct FlowReport {
  std::vector<double> energies;     // E_h(u_k), k = 0..steps
  std::vector<double> dissipation;  // d2(u_{k+1}, u_k)^2 / tau, k = 0..steps-1
  std::vector<double> changes;      // d2(u_{k+1}, u_k)
  double evi_max_residual = std::numeric_limits<double>::quiet_NaN();
  std::optional<GridMap> limit;
  int inner_sweeps = 0;
  bool converged = true;
};

struct FlowResult {
  Trajectory trajectory;
  FlowReport report;
};

namespace detail {

inline void mm_advance(const GridMap& from, GridMap& to, const MmConfig& cfg, int& sweeps) {
  const double omega = cfg.omega > 0.0 ? cfg.omega : mm_auto_omega(from.domain, cfg.tau);
  const int threads = cfg.threads > 0 ? cfg.threads : configured_threads();
  MmStepResult r =
      mm_step(from.domain, from.kind, from.values, cfg.tau, cfg.inner_tol, cfg.inner_max_sweeps, omega, threads);
  sweeps += r.sweeps;
  to = GridMap(from.domain, from.kind, std::move(r.values));
  if (!r.converged)
    throw MaxSweepsExceeded<GridMap>("minimizing movement step did not converge within mm.inner_max_sweeps", to);
}

}  // namespace detail

/// u_{k+1} = argmin_v d2(v, u_k)^2 / (2 tau) + E_h(v).
inline FlowResult minimizing_movement(const GridMap& u0, const MmConfig& cfg) {
  cfg.validate();
  require(u0.kind.npc(), ErrorCode::unsupported_on_target, "minimizing movements need an NPC target");
  FlowResult out;
  out.trajectory.tau = cfg.tau;
  out.trajectory.maps.push_back(u0);
  out.report.energies.push_back(ks_energy(u0));
  for (int k = 0; k < cfg.steps; ++k) {
    GridMap next;
    detail::mm_advance(out.trajectory.maps.back(), next, cfg, out.report.inner_sweeps);
    const double dd = l2_distance(next, out.trajectory.maps.back());
    out.report.changes.push_back(dd);
    out.report.dissipation.push_back(dd * dd / cfg.tau);
    out.report.energies.push_back(ks_energy(next));
    out.trajectory.maps.push_back(std::move(next));
  }
  return out;
}

/// Forward Euler in ambient coordinates, u <- u + dt (Delta_h u - sum_a A(u)(D_a u, D_a u)),
/// followed by the nearest-point retraction. The circle is advanced in its angle.
inline Trajectory explicit_heat_flow(const GridMap& u0, double dt, int steps) {
  const TargetKind& kind = u0.kind;
  const GridDomain& d = u0.domain;
  require(kind.smooth(), ErrorCode::unsupported_on_target, "explicit flow needs a smooth embedded target");
  require(dt > 0.0 && steps >= 0, ErrorCode::invalid_argument, "explicit flow needs dt > 0 and steps >= 0");
  require(dt <= d.h * d.h / (4.0 * d.dim) * (1.0 + 1e-12), ErrorCode::step_too_large,
          "explicit flow needs dt <= h^2 / (4 dim)");
  const int N = d.size(), A = kind.ambient_dim();
  const double h2 = d.h * d.h;
  Trajectory traj;
  traj.tau = dt;
  traj.maps.push_back(u0);
  std::vector<AmbientVec> amb(N);
  for (int s = 0; s < steps; ++s) {
    const GridMap& cur = traj.maps.back();
    std::vector<TargetPoint> next(N);
    if (kind.tag == TargetTag::flat_circle) {
      for (int i = 0; i < N; ++i) {
        const auto nb = d.neighbors(i);
        double lap = 0.0;
        for (int j = 0; j < d.neighbor_count(); ++j) lap += detail::wrap_angle(cur[nb[j]].x[0] - cur[i].x[0]);
        next[i] = pt::circle(cur[i].x[0] + dt * lap / h2);
      }
    } else {
      for (int i = 0; i < N; ++i) amb[i] = ambient_coords(kind, cur[i]);
      for (int i = 0; i < N; ++i) {
        const auto nb = d.neighbors(i);
        AmbientVec upd{};
        for (int c = 0; c < A; ++c) {
          double lap = -2.0 * d.dim * amb[i][c];
          for (int j = 0; j < d.neighbor_count(); ++j) lap += amb[nb[j]][c];
          upd[c] = lap / h2;
        }
        for (int axis = 0; axis < d.dim; ++axis) {
          TangentVector X{cur[i], {}};
          for (int c = 0; c < A; ++c) X.v[c] = (amb[nb[2 * axis + 1]][c] - amb[nb[2 * axis]][c]) / (2.0 * d.h);
          X.v = project_tangent(kind, cur[i], X.v);
          const AmbientVec a = second_fundamental_form(kind, X);
          for (int c = 0; c < A; ++c) upd[c] -= a[c];
        }
        AmbientVec y{};
        for (int c = 0; c < A; ++c) y[c] = amb[i][c] + dt * upd[c];
        next[i] = from_ambient(kind, y);
      }
    }
    traj.maps.emplace_back(d, kind, std::move(next));
  }
  return traj;
}

/// r_k = (d2(u_{k+1}, v)^2 - d2(u_k, v)^2) / (2 tau) + E_h(u_{k+1}) - E_h(v), k = 0..K-1
inline std::vector<double> evi_residuals(const Trajectory& traj, const GridMap& v) {
  check_trajectory(traj);
  check_same_shape(traj.maps.front(), v);
  require(traj.K() >= 1, ErrorCode::empty_input, "evi_residual needs at least one step");
  const double Ev = ks_energy(v);
  std::vector<double> r(traj.K());
  double prev = l2_distance(traj.maps[0], v);
  prev *= prev;
  for (int k = 0; k < traj.K(); ++k) {
    double next = l2_distance(traj.maps[k + 1], v);
    next *= next;
    r[k] = (next - prev) / (2.0 * traj.tau) + ks_energy(traj.maps[k + 1]) - Ev;
    prev = next;
  }
  return r;
}

/// max_k r_k of evi_residuals
inline double evi_residual(const Trajectory& traj, const GridMap& v) {
  const std::vector<double> r = evi_residuals(traj, v);
  return *std::max_element(r.begin(), r.end());
}

struct HarmonicLimit {
  GridMap limit;
  double energy = 0.0;
  int steps = 0;
  FlowReport report;
};

/// Minimizing movements until the step change stays below limit_tol times the
/// first step change for 3 consecutive steps, or cfg.steps is exhausted
/// (report.converged = false).
inline HarmonicLimit harmonic_limit(const GridMap& u0, const MmConfig& cfg) {
  cfg.validate();
  require(u0.kind.npc(), ErrorCode::unsupported_on_target, "harmonic_limit needs an NPC target");
  HarmonicLimit out;
  out.report.energies.push_back(ks_energy(u0));
  GridMap cur = u0;
  double first = -1.0;
  int quiet = 0;
  if (out.report.energies.front() == 0.0) first = 0.0;  // constant map: nothing to do
  for (int k = 0; k < cfg.steps && first != 0.0; ++k) {
    GridMap next;
    detail::mm_advance(cur, next, cfg, out.report.inner_sweeps);
    const double dd = l2_distance(next, cur);
    cur = std::move(next);
    ++out.steps;
    out.report.changes.push_back(dd);
    out.report.dissipation.push_back(dd * dd / cfg.tau);
    out.report.energies.push_back(ks_energy(cur));
    if (first < 0.0) first = dd;
    if (first == 0.0) break;  // u0 is already a fixed point
    quiet = dd <= cfg.limit_tol * first ? quiet + 1 : 0;
    if (quiet >= 3) break;
  }
  out.report.converged = first == 0.0 || quiet >= 3;
  out.energy = out.report.energies.back();
  out.limit = cur;
  out.report.limit = cur;
  return out;
}

}  // namespace hmflow
