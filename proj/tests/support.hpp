#pragma once

// Seeded generators for property tests and a few independent reference
// computations shared by several suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hmflow/hmflow.hpp"

namespace hmtest {

using namespace hmflow;

inline constexpr int kCases = 200;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

  /// A point within roughly `spread` of the base point of the kind.
  TargetPoint point(const TargetKind& kind, double spread = 1.0) {
    switch (kind.tag) {
      case TargetTag::euclidean: {
        TargetPoint p;
        for (int c = 0; c < kind.dim; ++c) p.x[c] = uniform(-spread, spread);
        return p;
      }
      case TargetTag::flat_circle: return pt::circle(uniform(0.0, kTwoPi));
      case TargetTag::sphere2: return pt::sphere(normal(), normal(), normal());
      case TargetTag::hyperbolic2: return pt::hyperbolic_polar(uniform(0.0, spread), uniform(0.0, kTwoPi));
      case TargetTag::spider: return pt::spider(integer(0, kind.rays - 1), uniform(0.0, spread));
      case TargetTag::product: {
        TargetPoint p = point(*kind.base, spread);
        const int bc = kind.base->coord_count();
        for (int c = 0; c < kind.dim; ++c) p.x[bc + c] = uniform(-spread, spread);
        return p;
      }
    }
    return TargetPoint{};
  }

  std::vector<TargetPoint> points(const TargetKind& kind, int m, double spread = 1.0) {
    std::vector<TargetPoint> v(m);
    for (auto& p : v) p = point(kind, spread);
    return v;
  }

  std::vector<double> weights(int m) {
    std::vector<double> w(m);
    for (double& x : w) x = uniform(0.05, 2.0);
    return w;
  }

  GridMap map(const GridDomain& d, const TargetKind& kind, double spread = 1.0) {
    return GridMap(d, kind, points(kind, d.size(), spread));
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline std::vector<TargetKind> npc_kinds() {
  return {TargetKind::euclidean(1), TargetKind::euclidean(3), TargetKind::spider(3), TargetKind::spider(5),
          TargetKind::hyperbolic2(), TargetKind::product(TargetKind::spider(3), 2, 0.5),
          TargetKind::product(TargetKind::hyperbolic2(), 1, 2.0)};
}

inline std::vector<TargetKind> all_kinds() {
  std::vector<TargetKind> k = npc_kinds();
  k.push_back(TargetKind::flat_circle(1.5));
  k.push_back(TargetKind::sphere2());
  return k;
}

/// Euclidean scalar map from a function of the node position.
template <class F>
GridMap scalar_map(const GridDomain& d, F f) {
  std::vector<TargetPoint> v(d.size());
  for (int i = 0; i < d.size(); ++i) v[i].x[0] = f(d.i1(i) * d.h, d.i2(i) * d.h);
  return GridMap(d, TargetKind::euclidean(1), std::move(v));
}

inline double max_abs_diff(const GridMap& a, const GridMap& b) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, distance(a.kind, a[i], b[i]));
  return m;
}

/// Sine amplitude of a scalar map along the first axis (discrete projection).
inline double sine_amplitude(const GridMap& u, int k) {
  const GridDomain& d = u.domain;
  double s = 0.0, n = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    const double b = std::sin(k * 2.0 * kPi * d.i1(i) / d.n1);
    s += u[i].x[0] * b;
    n += b * b;
  }
  return s / n;
}

}  // namespace hmtest
