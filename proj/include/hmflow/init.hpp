#pragma once

// Initial maps. Coordinates run over [0, n h) on each axis; "phase" below is
// 2 pi x / period along the first axis.

#include <cmath>
#include <random>
#include <vector>

#include "hmflow/error.hpp"
#include "hmflow/grid.hpp"
#include "hmflow/target.hpp"

namespace hmflow::init {

/// A reference point of each kind (origin, north pole, hyperboloid vertex, ...).
inline TargetPoint base_point(const TargetKind& kind) {
  switch (kind.tag) {
    case TargetTag::sphere2: return pt::sphere(1.0, 0.0, 0.0);
    case TargetTag::hyperbolic2: return pt::hyperbolic_polar(0.0, 0.0);
    case TargetTag::product: {
      TargetPoint p = base_point(*kind.base);
      return p;
    }
    default: return TargetPoint{};
  }
}

/// Point at signed geodesic coordinate s along a fixed line through the base point.
inline TargetPoint along_line(const TargetKind& kind, double s) {
  switch (kind.tag) {
    case TargetTag::euclidean: {
      TargetPoint p;
      p.x[0] = s;
      return p;
    }
    case TargetTag::flat_circle: return pt::circle(s / kind.radius);
    case TargetTag::sphere2: return pt::sphere(std::cos(s), std::sin(s), 0.0);
    case TargetTag::hyperbolic2: return pt::hyperbolic_polar(std::abs(s), s >= 0.0 ? 0.0 : kPi);
    case TargetTag::spider: return s >= 0.0 ? pt::spider(0, s) : pt::spider(1, -s);
    case TargetTag::product: return along_line(*kind.base, s);
  }
  return TargetPoint{};
}

inline double phase(const GridDomain& d, int i) { return 2.0 * kPi * d.i1(i) / d.n1; }

inline GridMap constant(const GridDomain& d, const TargetKind& kind) {
  return GridMap::constant(d, kind, base_point(kind));
}

/// amplitude * sin(k phase) along a geodesic line of the target.
inline GridMap sine_mode(const GridDomain& d, const TargetKind& kind, int k, double amplitude) {
  std::vector<TargetPoint> v(d.size());
  for (int i = 0; i < d.size(); ++i) v[i] = along_line(kind, amplitude * std::sin(k * phase(d, i)));
  return GridMap(d, kind, std::move(v));
}

/// Loop of winding number `degree`:
///   circle      theta = degree phase + amplitude sin(phase)
///   sphere      equator, angle degree phase
///   hyperbolic  circle of radius `amplitude`, angle degree phase
///   spider      tent excursions of height `amplitude` visiting the rays in turn,
///               `degree` times around
inline GridMap degree_map(const GridDomain& d, const TargetKind& kind, int degree, double amplitude) {
  std::vector<TargetPoint> v(d.size());
  for (int i = 0; i < d.size(); ++i) {
    const double ph = phase(d, i);
    switch (kind.tag) {
      case TargetTag::flat_circle: v[i] = pt::circle(degree * ph + amplitude * std::sin(ph)); break;
      case TargetTag::sphere2: v[i] = pt::sphere(std::cos(degree * ph), std::sin(degree * ph), 0.0); break;
      case TargetTag::hyperbolic2: v[i] = pt::hyperbolic_polar(amplitude, degree * ph); break;
      case TargetTag::spider: {
        const int K = kind.rays;
        const double s = degree * K * ph / (2.0 * kPi);  // excursion coordinate
        const double f = s - std::floor(s);
        const int ray = static_cast<int>(std::floor(s)) % K;
        v[i] = pt::spider(ray, amplitude * (1.0 - std::abs(2.0 * f - 1.0)));
        break;
      }
      default: fail(ErrorCode::unsupported_on_target, "degree_map is not defined for " + kind.name());
    }
  }
  return GridMap(d, kind, std::move(v));
}

/// Independent random values within max_radial of the base point.
inline GridMap random_tree(const GridDomain& d, const TargetKind& kind, unsigned seed, double max_radial) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<TargetPoint> v(d.size());
  for (int i = 0; i < d.size(); ++i) {
    const double r = max_radial * U(rng);
    switch (kind.tag) {
      case TargetTag::spider: v[i] = pt::spider(static_cast<int>(U(rng) * kind.rays) % kind.rays, r); break;
      case TargetTag::hyperbolic2: v[i] = pt::hyperbolic_polar(r, 2.0 * kPi * U(rng)); break;
      case TargetTag::sphere2: {
        const double a = 2.0 * kPi * U(rng);
        v[i] = pt::sphere(std::cos(r), std::sin(r) * std::cos(a), std::sin(r) * std::sin(a));
        break;
      }
      case TargetTag::euclidean:
        for (int c = 0; c < kind.dim; ++c) v[i].x[c] = max_radial * (2.0 * U(rng) - 1.0);
        break;
      case TargetTag::flat_circle: v[i] = pt::circle(r / kind.radius); break;
      case TargetTag::product: {
        const GridMap b = random_tree(GridDomain::line(4, 1.0), *kind.base, seed + 17 + i, max_radial);
        v[i] = b[0];
        const int bc = kind.base->coord_count();
        for (int c = 0; c < kind.dim; ++c) v[i].x[bc + c] = max_radial * (2.0 * U(rng) - 1.0);
        break;
      }
    }
  }
  return GridMap(d, kind, std::move(v));
}

}  // namespace hmflow::init
