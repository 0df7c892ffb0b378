#pragma once

// Geodesic Gauss-Seidel over a space-time block of grid maps. Level 0 is
// fixed; every node (i, k >= 1) is replaced by the weighted Frechet mean of
// its time neighbors and its spatial neighbors, optionally over-relaxed
// along the geodesic from the old value through the mean.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <span>
#include <thread>
#include <vector>

#include "hmflow/grid.hpp"
#include "hmflow/target.hpp"

namespace hmflow {

/// Worker count from HMFLOW_THREADS (default 1).
inline int configured_threads() {
  const char* env = std::getenv("HMFLOW_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return std::clamp(n, 1, 64);
}

namespace detail {

/// Coefficients of d^2(x, .) in the local objective of a node at level k.
struct LevelWeights {
  double back = 0.0;     // to (i, k-1)
  double fwd = 0.0;      // to (i, k+1); zero at the last level
  double spatial = 0.0;  // to each nearest neighbor at level k
};

class SpaceTimeRelaxer {
 public:
  // values holds K+1 levels of domain.size() points each, level-major.
  SpaceTimeRelaxer(const GridDomain& domain, const TargetKind& kind, std::vector<TargetPoint>& values, int K,
                   std::vector<LevelWeights> weights, double omega, int threads)
      : d_(domain), kind_(kind), u_(values), K_(K), w_(std::move(weights)), omega_(omega), threads_(threads) {
    require(static_cast<int>(w_.size()) == K_ + 1, ErrorCode::shape_mismatch, "one weight set per level");
    require(static_cast<int>(u_.size()) == (K_ + 1) * d_.size(), ErrorCode::shape_mismatch, "value buffer size");
    // Red-black coloring decouples same-colored nodes only when every axis is even.
    parity_ok_ = d_.n1 % 2 == 0 && (d_.dim == 1 || d_.n2 % 2 == 0);
    if (!parity_ok_) threads_ = 1;
  }

  /// One red-black sweep. Returns the largest node displacement.
  double sweep() {
    double moved = 0.0;
    for (int color = 0; color < 2; ++color) moved = std::max(moved, sweep_color(color));
    return moved;
  }

  double omega() const { return omega_; }

 private:
  int color_of(int i, int k) const { return (d_.i1(i) + d_.i2(i) + k) % 2; }

  double sweep_color(int color) {
    const int N = d_.size();
    if (threads_ <= 1) {
      double moved = 0.0;
      for (int k = 1; k <= K_; ++k)
        for (int i = 0; i < N; ++i)
          if (color_of(i, k) == color) moved = std::max(moved, update(i, k));
      return moved;
    }
    // Same-colored nodes are independent, so the result matches the serial order bitwise.
    const int T = threads_;
    std::vector<double> part(T, 0.0);
    std::vector<std::exception_ptr> errors(T);
    std::vector<std::thread> pool;
    for (int t = 0; t < T; ++t) {
      pool.emplace_back([&, t] {
        try {
          double m = 0.0;
          for (int k = 1 + t; k <= K_; k += T)
            for (int i = 0; i < N; ++i)
              if (color_of(i, k) == color) m = std::max(m, update(i, k));
          part[t] = m;
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    return *std::max_element(part.begin(), part.end());
  }

  double update(int i, int k) {
    const int N = d_.size();
    const LevelWeights& w = w_[k];
    std::array<TargetPoint, 6> pts;
    std::array<double, 6> ws{};
    int m = 0;
    pts[m] = u_[(k - 1) * N + i];
    ws[m++] = w.back;
    if (w.fwd > 0.0 && k < K_) {
      pts[m] = u_[(k + 1) * N + i];
      ws[m++] = w.fwd;
    }
    const auto nb = d_.neighbors(i);
    for (int j = 0; j < d_.neighbor_count(); ++j) {
      pts[m] = u_[k * N + nb[j]];
      ws[m++] = w.spatial;
    }
    const std::span<const TargetPoint> P(pts.data(), m);
    const std::span<const double> W(ws.data(), m);
    TargetPoint& x = u_[k * N + i];
    const TargetPoint old = x;
    TargetPoint next = frechet_mean(kind_, P, W, old);
    if (omega_ != 1.0) {
      const TargetPoint over = detail::geodesic_eval(kind_, old, next, omega_);
      // Keep the block objective monotone: accept over-relaxation only if it does not increase it.
      if (weighted_sq_sum(kind_, over, P, W) <= weighted_sq_sum(kind_, old, P, W)) next = over;
    }
    x = next;
    return distance(kind_, old, next);
  }

  const GridDomain& d_;
  const TargetKind& kind_;
  std::vector<TargetPoint>& u_;
  int K_;
  std::vector<LevelWeights> w_;
  double omega_;
  int threads_;
  bool parity_ok_ = true;
};

/// Optimal SOR factor for a Jacobi spectral radius rho, clamped to [1, 1.99].
inline double sor_omega(double rho) {
  rho = std::clamp(rho, 0.0, 1.0);
  return std::clamp(2.0 / (1.0 + std::sqrt(1.0 - rho * rho)), 1.0, 1.99);
}

inline double mm_auto_omega(const GridDomain& d, double tau) {
  const double s = 2.0 * d.dim * tau / (d.h * d.h);
  return sor_omega(s / (1.0 + s));
}

struct MmStepResult {
  std::vector<TargetPoint> values;
  int sweeps = 0;
  bool converged = false;
};

/// argmin_v d2(v, prev)^2 / (2 tau) + E_h(v), started from prev. Stops when
/// the largest node move in a sweep drops to tol.
inline MmStepResult mm_step(const GridDomain& d, const TargetKind& kind, std::span<const TargetPoint> prev,
                            double tau, double tol, int max_sweeps, double omega, int threads) {
  const int N = d.size();
  std::vector<TargetPoint> buf(2 * static_cast<std::size_t>(N));
  std::copy(prev.begin(), prev.end(), buf.begin());
  std::copy(prev.begin(), prev.end(), buf.begin() + N);
  std::vector<LevelWeights> w(2);
  w[1] = LevelWeights{1.0, 0.0, tau / (d.h * d.h)};
  SpaceTimeRelaxer relax(d, kind, buf, 1, w, omega, threads);
  MmStepResult out;
  while (out.sweeps < max_sweeps) {
    const double moved = relax.sweep();
    ++out.sweeps;
    if (moved <= tol) {
      out.converged = true;
      break;
    }
  }
  out.values.assign(buf.begin() + N, buf.end());
  return out;
}

}  // namespace detail
}  // namespace hmflow
