#pragma once

// Flat periodic lattices, target-valued grid maps, trajectories, and the
// discrete Korevaar-Schoen energy with its density fields.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "hmflow/error.hpp"
#include "hmflow/target.hpp"

namespace hmflow {

struct GridDomain {
  int dim = 1;
  int n1 = 4;
  int n2 = 1;
  double h = 1.0;

  static GridDomain line(int n, double h) {
    require(n >= 4, ErrorCode::invalid_argument, "grid needs at least 4 nodes per axis");
    require(h > 0.0, ErrorCode::invalid_argument, "grid spacing must be positive");
    return GridDomain{1, n, 1, h};
  }
  static GridDomain square(int n1, int n2, double h) {
    require(n1 >= 4 && n2 >= 4, ErrorCode::invalid_argument, "grid needs at least 4 nodes per axis");
    require(h > 0.0, ErrorCode::invalid_argument, "grid spacing must be positive");
    return GridDomain{2, n1, n2, h};
  }

  int size() const { return n1 * n2; }
  double cell_volume() const { return dim == 1 ? h : h * h; }
  double volume() const { return cell_volume() * size(); }
  double period(int axis) const { return (axis == 0 ? n1 : n2) * h; }
  int extent(int axis) const { return axis == 0 ? n1 : n2; }

  int index(int i1, int i2 = 0) const {
    i1 %= n1;
    if (i1 < 0) i1 += n1;
    i2 %= n2;
    if (i2 < 0) i2 += n2;
    return i1 + n1 * i2;
  }
  int i1(int idx) const { return idx % n1; }
  int i2(int idx) const { return idx / n1; }

  int neighbor_count() const { return 2 * dim; }

  /// Nearest neighbors with wraparound: -x, +x, -y, +y.
  std::array<int, 4> neighbors(int idx) const {
    const int a = i1(idx), b = i2(idx);
    std::array<int, 4> nb{index(a - 1, b), index(a + 1, b), 0, 0};
    if (dim == 2) {
      nb[2] = index(a, b - 1);
      nb[3] = index(a, b + 1);
    }
    return nb;
  }

  /// Minimal-image integer offset from node a to node b along an axis.
  int offset(int axis, int from, int to) const {
    const int n = extent(axis);
    int m = ((to - from) % n + n) % n;
    if (m > n / 2) m -= n;
    return m;
  }

  /// Minimal-image squared distance between nodes.
  double dist_sq(int a, int b) const {
    const double d1 = offset(0, i1(a), i1(b)) * h;
    double s = d1 * d1;
    if (dim == 2) {
      const double d2 = offset(1, i2(a), i2(b)) * h;
      s += d2 * d2;
    }
    return s;
  }

  friend bool operator==(const GridDomain&, const GridDomain&) = default;
};

struct GridMap {
  GridDomain domain;
  TargetKind kind;
  std::vector<TargetPoint> values;

  GridMap() = default;
  GridMap(const GridDomain& d, const TargetKind& k, std::vector<TargetPoint> v)
      : domain(d), kind(k), values(std::move(v)) {
    require(static_cast<int>(values.size()) == domain.size(), ErrorCode::shape_mismatch,
            "grid map value count does not match the domain");
  }

  static GridMap constant(const GridDomain& d, const TargetKind& k, const TargetPoint& p) {
    return GridMap(d, k, std::vector<TargetPoint>(d.size(), p));
  }

  const TargetPoint& operator[](int i) const { return values[i]; }
  TargetPoint& operator[](int i) { return values[i]; }
  int size() const { return static_cast<int>(values.size()); }
};

struct Trajectory {
  std::vector<GridMap> maps;
  double tau = 1.0;

  int K() const { return static_cast<int>(maps.size()) - 1; }
  double time(int k) const { return k * tau; }
  const GridDomain& domain() const { return maps.front().domain; }
  const TargetKind& kind() const { return maps.front().kind; }
};

using DensityField = std::vector<double>;

struct DensityFields {
  std::vector<DensityField> grad_sq;  // per level
  std::vector<DensityField> time_sq;  // per level; one-sided at the ends
  std::vector<DensityField> e_eps;    // eps * time_sq + grad_sq
};

inline void check_same_shape(const GridMap& u, const GridMap& v) {
  require(u.domain == v.domain && u.size() == v.size(), ErrorCode::shape_mismatch, "grid maps differ in shape");
  require(u.kind == v.kind, ErrorCode::kind_mismatch, "grid maps differ in target kind");
}

inline void check_trajectory(const Trajectory& traj) {
  require(!traj.maps.empty(), ErrorCode::empty_input, "empty trajectory");
  require(traj.tau > 0.0, ErrorCode::invalid_argument, "trajectory time step must be positive");
  for (const GridMap& m : traj.maps) check_same_shape(traj.maps.front(), m);
}

// Span-level kernels shared with the solvers.
namespace detail {

inline double l2_sq(const GridDomain& d, const TargetKind& kind, std::span<const TargetPoint> u,
                    std::span<const TargetPoint> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += distance_sq(kind, u[i], v[i]);
  return s * d.cell_volume();
}

inline double ks_energy(const GridDomain& d, const TargetKind& kind, std::span<const TargetPoint> u) {
  double s = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    const int a = d.i1(i), b = d.i2(i);
    s += distance_sq(kind, u[i], u[d.index(a + 1, b)]);
    if (d.dim == 2) s += distance_sq(kind, u[i], u[d.index(a, b + 1)]);
  }
  return 0.5 * s / (d.h * d.h) * d.cell_volume();
}

inline void grad_sq(const GridDomain& d, const TargetKind& kind, std::span<const TargetPoint> u, DensityField& out) {
  out.assign(d.size(), 0.0);
  const double inv = 1.0 / (2.0 * d.h * d.h);
  for (int i = 0; i < d.size(); ++i) {
    const auto nb = d.neighbors(i);
    double s = 0.0;
    for (int j = 0; j < d.neighbor_count(); ++j) s += distance_sq(kind, u[i], u[nb[j]]);
    out[i] = s * inv;
  }
}

}  // namespace detail

/// (sum_i d^2(u_i, v_i) h^dim)^(1/2)
inline double l2_distance(const GridMap& u, const GridMap& v) {
  check_same_shape(u, v);
  return std::sqrt(detail::l2_sq(u.domain, u.kind, u.values, v.values));
}

/// E_h(u) = 1/2 sum over undirected nearest-neighbor edges of d^2/h^2 * h^dim.
inline double ks_energy(const GridMap& u) { return detail::ks_energy(u.domain, u.kind, u.values); }

inline DensityFields density_fields(const Trajectory& traj, double eps) {
  check_trajectory(traj);
  require(eps >= 0.0, ErrorCode::invalid_argument, "eps must be nonnegative");
  const int K = traj.K();
  const int N = traj.domain().size();
  const TargetKind& kind = traj.kind();
  DensityFields f;
  f.grad_sq.resize(K + 1);
  f.time_sq.assign(K + 1, DensityField(N, 0.0));
  f.e_eps.resize(K + 1);
  for (int k = 0; k <= K; ++k) detail::grad_sq(traj.domain(), kind, traj.maps[k].values, f.grad_sq[k]);
  if (K >= 1) {
    const double tau = traj.tau;
    for (int k = 0; k <= K; ++k) {
      int lo = k - 1, hi = k + 1;
      double span = 2.0 * tau;
      if (k == 0) {
        lo = 0;
        span = tau;
      } else if (k == K) {
        hi = K;
        span = tau;
      }
      if (K == 1) {
        lo = 0;
        hi = 1;
        span = tau;
      }
      for (int i = 0; i < N; ++i)
        f.time_sq[k][i] = distance_sq(kind, traj.maps[hi][i], traj.maps[lo][i]) / (span * span);
    }
  }
  for (int k = 0; k <= K; ++k) {
    f.e_eps[k].resize(N);
    for (int i = 0; i < N; ++i) f.e_eps[k][i] = eps * f.time_sq[k][i] + f.grad_sq[k][i];
  }
  return f;
}

/// Largest pairwise target distance over nodes within domain distance r of the center.
inline double oscillation(const GridMap& u, int center, double r) {
  const GridDomain& d = u.domain;
  for (int a = 0; a < d.dim; ++a)
    require(r <= 0.5 * d.period(a), ErrorCode::invalid_argument, "oscillation radius exceeds half the period");
  std::vector<int> ball;
  const double r2 = r * r * (1.0 + 1e-12);
  for (int i = 0; i < d.size(); ++i)
    if (d.dist_sq(center, i) <= r2) ball.push_back(i);
  double best = 0.0;
  for (std::size_t a = 0; a < ball.size(); ++a)
    for (std::size_t b = a + 1; b < ball.size(); ++b)
      best = std::max(best, distance(u.kind, u[ball[a]], u[ball[b]]));
  return best;
}

}  // namespace hmflow
