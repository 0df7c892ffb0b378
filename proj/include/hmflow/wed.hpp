#pragma once

// Weighted-energy-dissipation (WED) functional
//
//   I_eps[v] = int_0^T e^{-t/eps}/eps * ( eps/2 |v'|^2 + E(v) ) dt
//
// discretized on a uniform time grid and minimized over trajectories with
// v(0) = u0 fixed and a free terminal map.
//
// Quadrature: the kinetic term on [t_k, t_{k+1}] carries the exact weight mass
// m_k = e^{-t_k/eps}(1 - e^{-tau/eps}); the energy at level k carries the mass
// of its dual cell [t_k - tau/2, t_k + tau/2] clipped to [0, T]. The masses of a
// time-constant trajectory sum to 1 - e^{-T/eps} exactly.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "hmflow/error.hpp"
#include "hmflow/grid.hpp"
#include "hmflow/relax.hpp"
#include "hmflow/target.hpp"

namespace hmflow {

enum class InitFill { constant, minimizing_movement };

struct WedConfig {
  double eps = 0.1;
  double tau = 0.01;
  double t_max = 1.0;
  double tol = 1e-10;       // objective decrease per sweep
  double move_tol = 1e-9;   // largest node move per sweep
  int max_sweeps = 20000;
  double omega = 0.0;       // over-relaxation factor; 0 selects it from the grid
  InitFill fill = InitFill::minimizing_movement;
  double weight_scale = 1.0;  // positive rescaling of the node weights; the argmin is unchanged
  int threads = 0;            // 0 reads HMFLOW_THREADS

  int steps() const { return static_cast<int>(std::llround(t_max / tau)); }
};

inline void validate(const WedConfig& c) {
  require(c.eps > 0.0, ErrorCode::invalid_argument, "wed.eps must be positive");
  require(c.tau > 0.0, ErrorCode::invalid_argument, "wed.tau must be positive");
  require(c.tau <= c.eps / 10.0 * (1.0 + 1e-12), ErrorCode::invalid_argument, "wed.tau must be <= wed.eps/10");
  require(c.t_max >= 5.0 * c.eps * (1.0 - 1e-12), ErrorCode::invalid_argument, "wed.t_max must be >= 5*wed.eps");
  require(c.tol > 0.0 && c.move_tol > 0.0, ErrorCode::invalid_argument, "wed tolerances must be positive");
  require(c.max_sweeps >= 1, ErrorCode::invalid_argument, "wed.max_sweeps must be >= 1");
  require(c.weight_scale > 0.0, ErrorCode::invalid_argument, "weight scale must be positive");
  require(c.omega == 0.0 || (c.omega >= 1.0 && c.omega < 2.0), ErrorCode::invalid_argument,
          "wed.omega must be 0 (auto) or in [1, 2)");
  const double K = c.t_max / c.tau;
  require(std::abs(K - std::round(K)) <= 1e-9 * K, ErrorCode::invalid_argument,
          "wed.t_max must be an integer multiple of wed.tau");
}

struct WedSolution {
  Trajectory trajectory;
  std::vector<double> objective_history;
  double el_residual = std::numeric_limits<double>::quiet_NaN();  // smooth kinds only
  double value = 0.0;
  int sweeps = 0;
  double omega = 1.0;
  double truncation_bound = 0.0;  // e^{-T/eps} E_h(u0)
  bool convexity_guaranteed = true;
};

namespace detail {

inline double kinetic_mass(double t, double tau, double eps) { return std::exp(-t / eps) * -std::expm1(-tau / eps); }

inline double energy_mass(int k, int K, double tau, double eps) {
  const double x = tau / (2.0 * eps);
  if (k == 0) return -std::expm1(-x);
  const double base = std::exp(-k * tau / eps);
  if (k == K) return base * std::expm1(x);
  return base * 2.0 * std::sinh(x);
}

// Local weights per level, divided by e^{-t_k/eps} h^dim / 2.
inline std::vector<LevelWeights> wed_level_weights(const GridDomain& d, int K, double tau, double eps, double scale) {
  const double r = tau / eps;
  const double a = eps * std::expm1(r) / (tau * tau);
  const double b = eps * -std::expm1(-r) / (tau * tau);
  const double s = 2.0 * std::sinh(0.5 * r) / (d.h * d.h);
  const double sK = std::expm1(0.5 * r) / (d.h * d.h);
  std::vector<LevelWeights> w(K + 1);
  for (int k = 1; k < K; ++k) w[k] = LevelWeights{scale * a, scale * b, scale * s};
  w[K] = LevelWeights{scale * a, 0.0, scale * sK};
  return w;
}

inline double wed_auto_omega(const GridDomain& d, double tau, double eps) {
  const double diag = 2.0 * eps / (tau * tau) + 2.0 * d.dim / (d.h * d.h);
  return sor_omega(1.0 - 0.25 / eps / diag);
}

inline double wed_objective_values(const GridDomain& d, const TargetKind& kind, std::span<const TargetPoint> buf,
                                   int K, double tau, double eps) {
  const int N = d.size();
  auto level = [&](int k) { return buf.subspan(static_cast<std::size_t>(k) * N, N); };
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    const double m = kinetic_mass(k * tau, tau, eps);
    if (m == 0.0) continue;
    total += m * 0.5 * eps * l2_sq(d, kind, level(k + 1), level(k)) / (tau * tau);
  }
  for (int k = 0; k <= K; ++k) {
    const double w = energy_mass(k, K, tau, eps);
    if (w == 0.0) continue;
    total += w * ks_energy(d, kind, level(k));
  }
  return total;
}

inline std::vector<TargetPoint> flatten(const Trajectory& traj) {
  std::vector<TargetPoint> buf;
  buf.reserve(static_cast<std::size_t>(traj.K() + 1) * traj.domain().size());
  for (const GridMap& m : traj.maps) buf.insert(buf.end(), m.values.begin(), m.values.end());
  return buf;
}

inline Trajectory unflatten(const GridMap& like, const std::vector<TargetPoint>& buf, int K, double tau) {
  const int N = like.domain.size();
  Trajectory t;
  t.tau = tau;
  t.maps.reserve(K + 1);
  for (int k = 0; k <= K; ++k)
    t.maps.emplace_back(like.domain, like.kind,
                        std::vector<TargetPoint>(buf.begin() + static_cast<std::ptrdiff_t>(k) * N,
                                                 buf.begin() + static_cast<std::ptrdiff_t>(k + 1) * N));
  return t;
}

}  // namespace detail

/// Discrete I_eps of a trajectory (un-normalized).
inline double wed_objective(const Trajectory& traj, double eps) {
  check_trajectory(traj);
  require(eps > 0.0, ErrorCode::invalid_argument, "eps must be positive");
  const auto buf = detail::flatten(traj);
  return detail::wed_objective_values(traj.domain(), traj.kind(), buf, traj.K(), traj.tau, eps);
}

/// Largest tangential norm of (-eps D_tt u + D_t u - Delta_h u) over interior
/// space-time nodes, in ambient coordinates.
inline double el_residual(const Trajectory& traj, double eps) {
  check_trajectory(traj);
  const TargetKind& kind = traj.kind();
  require(kind.smooth(), ErrorCode::unsupported_on_target, "el_residual needs a smooth target");
  const GridDomain& d = traj.domain();
  const int K = traj.K(), N = d.size(), A = kind.ambient_dim();
  const double tau = traj.tau, h2 = d.h * d.h;
  std::vector<std::vector<AmbientVec>> amb(K + 1, std::vector<AmbientVec>(N));
  for (int k = 0; k <= K; ++k)
    for (int i = 0; i < N; ++i) amb[k][i] = ambient_coords(kind, traj.maps[k][i]);
  double worst = 0.0;
  for (int k = 1; k < K; ++k) {
    for (int i = 0; i < N; ++i) {
      const auto nb = d.neighbors(i);
      AmbientVec r{};
      for (int c = 0; c < A; ++c) {
        const double up = amb[k + 1][i][c], mid = amb[k][i][c], dn = amb[k - 1][i][c];
        double lap = -2.0 * d.dim * mid;
        for (int j = 0; j < d.neighbor_count(); ++j) lap += amb[k][nb[j]][c];
        r[c] = -eps * (up - 2.0 * mid + dn) / (tau * tau) + (up - dn) / (2.0 * tau) - lap / h2;
      }
      const AmbientVec t = project_tangent(kind, traj.maps[k][i], r);
      worst = std::max(worst, tangent_norm(kind, t));
    }
  }
  return worst;
}

/// Minimizer of the discrete WED functional by red-black geodesic Gauss-Seidel.
/// `start`, when given, replaces the default initial fill (its level 0 is reset to u0).
inline WedSolution minimize_wed(const GridMap& u0, const WedConfig& cfg,
                                const std::optional<Trajectory>& start = std::nullopt) {
  validate(cfg);
  require(u0.kind.npc() || u0.kind.tag == TargetTag::sphere2, ErrorCode::unsupported_on_target,
          "minimize_wed needs an NPC target (sphere allowed as exploratory)");
  const GridDomain& d = u0.domain;
  const int K = cfg.steps(), N = d.size();
  const double tau = cfg.tau, eps = cfg.eps;
  const int threads = cfg.threads > 0 ? cfg.threads : configured_threads();

  std::vector<TargetPoint> buf;
  if (start) {
    require(start->K() == K, ErrorCode::shape_mismatch, "initial trajectory has the wrong number of levels");
    check_trajectory(*start);
    check_same_shape(u0, start->maps.front());
    buf = detail::flatten(*start);
    std::copy(u0.values.begin(), u0.values.end(), buf.begin());
  } else {
    buf.reserve(static_cast<std::size_t>(K + 1) * N);
    buf.insert(buf.end(), u0.values.begin(), u0.values.end());
    std::vector<TargetPoint> cur = u0.values;
    const double mm_omega = detail::mm_auto_omega(d, tau);
    for (int k = 1; k <= K; ++k) {
      if (cfg.fill == InitFill::minimizing_movement)
        cur = detail::mm_step(d, u0.kind, cur, tau, 1e-3 * cfg.move_tol + 1e-12, 200, mm_omega, threads).values;
      buf.insert(buf.end(), cur.begin(), cur.end());
    }
  }

  WedSolution sol;
  sol.convexity_guaranteed = u0.kind.npc();
  sol.omega = cfg.omega > 0.0 ? cfg.omega : detail::wed_auto_omega(d, tau, eps);
  detail::SpaceTimeRelaxer relax(d, u0.kind, buf, K, detail::wed_level_weights(d, K, tau, eps, cfg.weight_scale),
                                 sol.omega, threads);
  double prev = detail::wed_objective_values(d, u0.kind, buf, K, tau, eps);
  bool converged = false;
  while (sol.sweeps < cfg.max_sweeps) {
    const double moved = relax.sweep();
    ++sol.sweeps;
    const double cur = detail::wed_objective_values(d, u0.kind, buf, K, tau, eps);
    sol.objective_history.push_back(cur);
    const double decrease = prev - cur;
    prev = cur;
    if (decrease < cfg.tol && moved <= cfg.move_tol) {
      converged = true;
      break;
    }
  }
  sol.trajectory = detail::unflatten(u0, buf, K, tau);
  sol.value = sol.objective_history.empty() ? prev : sol.objective_history.back();
  sol.truncation_bound = std::exp(-cfg.t_max / eps) * ks_energy(u0);
  if (u0.kind.smooth()) sol.el_residual = el_residual(sol.trajectory, eps);
  if (!converged)
    throw MaxSweepsExceeded<WedSolution>("WED relaxation did not converge within wed.max_sweeps", std::move(sol));
  return sol;
}

inline double value_function(const GridMap& u0, const WedConfig& cfg) { return minimize_wed(u0, cfg).value; }

struct ValueIdentityResiduals {
  double pointwise_identity_max = 0.0;
  double dpp_residual = 0.0;
  std::vector<int> sampled_levels;
  int dpp_level = 0;
};

/// Checks V(u(t_k)) = E_h(u(t_k)) - eps/2 |u'(t_k)|^2 at sampled levels by
/// restarting the minimization at u(t_k), and the dynamic programming
/// principle V(u0) = I_eps[u on [0,T']] + e^{-T'/eps} V(u(T')) at T' = T/2.
inline ValueIdentityResiduals value_identity_residuals(const WedSolution& sol, const WedConfig& cfg) {
  const Trajectory& tr = sol.trajectory;
  check_trajectory(tr);
  const int K = tr.K();
  require(K >= 8, ErrorCode::domain_too_small, "value identities need at least 8 time levels");
  const double tau = tr.tau, eps = cfg.eps;
  ValueIdentityResiduals out;
  out.sampled_levels = {std::max(1, K / 8), std::max(2, K / 4)};
  for (int k : out.sampled_levels) {
    const double V = minimize_wed(tr.maps[k], cfg).value;
    const double speed = l2_distance(tr.maps[k + 1], tr.maps[k - 1]) / (2.0 * tau);
    const double rhs = ks_energy(tr.maps[k]) - 0.5 * eps * speed * speed;
    out.pointwise_identity_max = std::max(out.pointwise_identity_max, std::abs(V - rhs));
  }
  const int Kp = K / 2;
  out.dpp_level = Kp;
  double head = 0.0;
  for (int k = 0; k < Kp; ++k) {
    const double dd = l2_distance(tr.maps[k + 1], tr.maps[k]);
    head += detail::kinetic_mass(k * tau, tau, eps) * 0.5 * eps * dd * dd / (tau * tau);
    head += detail::energy_mass(k, K, tau, eps) * ks_energy(tr.maps[k]);
  }
  // Left half of the dual cell at T'; the restarted run supplies the right half.
  head += std::exp(-Kp * tau / eps) * std::expm1(tau / (2.0 * eps)) * ks_energy(tr.maps[Kp]);
  const double tail = std::exp(-Kp * tau / eps) * minimize_wed(tr.maps[Kp], cfg).value;
  out.dpp_residual = std::abs(sol.value - (head + tail));
  return out;
}

}  // namespace hmflow
