#pragma once

// Metric targets for harmonic-map flows: flat spaces, the round sphere, the
// hyperbolic plane (hyperboloid model), spider trees (K half-lines glued at
// one origin) and products of a base with a Euclidean factor.
//
// Points are small fixed-size value types; their payload layout depends on
// the kind (see TargetPoint). All operations are pure functions.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hmflow/error.hpp"

namespace hmflow {

inline constexpr int kMaxCoords = 8;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class TargetTag { euclidean, flat_circle, sphere2, hyperbolic2, spider, product };

inline const char* to_string(TargetTag tag) {
  switch (tag) {
    case TargetTag::euclidean: return "euclidean";
    case TargetTag::flat_circle: return "circle";
    case TargetTag::sphere2: return "sphere";
    case TargetTag::hyperbolic2: return "hyperbolic";
    case TargetTag::spider: return "spider";
    case TargetTag::product: return "product";
  }
  return "unknown";
}

struct TargetKind {
  TargetTag tag = TargetTag::euclidean;
  int dim = 1;          // euclidean: ambient dimension; product: extra dimension
  double radius = 1.0;  // flat_circle
  int rays = 2;         // spider
  double scale = 1.0;   // product: metric weight of the extra coordinates
  std::shared_ptr<const TargetKind> base;  // product only

  static TargetKind euclidean(int L) {
    require(L >= 1 && L <= kMaxCoords, ErrorCode::invalid_argument, "euclidean dimension out of range");
    TargetKind k;
    k.tag = TargetTag::euclidean;
    k.dim = L;
    return k;
  }
  static TargetKind flat_circle(double radius = 1.0) {
    require(radius > 0.0, ErrorCode::invalid_argument, "circle radius must be positive");
    TargetKind k;
    k.tag = TargetTag::flat_circle;
    k.radius = radius;
    return k;
  }
  static TargetKind sphere2() {
    TargetKind k;
    k.tag = TargetTag::sphere2;
    return k;
  }
  static TargetKind hyperbolic2() {
    TargetKind k;
    k.tag = TargetTag::hyperbolic2;
    return k;
  }
  static TargetKind spider(int K) {
    require(K >= 2, ErrorCode::invalid_argument, "spider needs at least two rays");
    TargetKind k;
    k.tag = TargetTag::spider;
    k.rays = K;
    return k;
  }
  static TargetKind product(const TargetKind& base, int extra_dim, double scale) {
    require(base.tag != TargetTag::product, ErrorCode::invalid_argument, "nested products are not supported");
    require(extra_dim >= 1, ErrorCode::invalid_argument, "product extra dimension must be >= 1");
    require(scale > 0.0, ErrorCode::invalid_argument, "product scale must be positive");
    require(base.coord_count() + extra_dim <= kMaxCoords, ErrorCode::invalid_argument,
            "product does not fit in the point payload");
    TargetKind k;
    k.tag = TargetTag::product;
    k.dim = extra_dim;
    k.scale = scale;
    k.base = std::make_shared<const TargetKind>(base);
    return k;
  }

  /// Nonpositively curved in the sense used by the solvers.
  bool npc() const {
    switch (tag) {
      case TargetTag::sphere2: return false;
      case TargetTag::product: return base->npc();
      default: return true;
    }
  }

  /// Smooth embedded kinds that carry tangent spaces and a second fundamental form.
  bool smooth() const {
    return tag == TargetTag::euclidean || tag == TargetTag::flat_circle || tag == TargetTag::sphere2 ||
           tag == TargetTag::hyperbolic2;
  }

  int coord_count() const {
    switch (tag) {
      case TargetTag::euclidean: return dim;
      case TargetTag::flat_circle: return 1;
      case TargetTag::sphere2: return 3;
      case TargetTag::hyperbolic2: return 3;
      case TargetTag::spider: return 1;
      case TargetTag::product: return base->coord_count() + dim;
    }
    return 0;
  }

  /// Dimension of the ambient space of a smooth kind.
  int ambient_dim() const {
    switch (tag) {
      case TargetTag::euclidean: return dim;
      case TargetTag::flat_circle: return 2;
      case TargetTag::sphere2:
      case TargetTag::hyperbolic2: return 3;
      default: return 0;
    }
  }

  std::string name() const {
    switch (tag) {
      case TargetTag::euclidean: return "euclidean(" + std::to_string(dim) + ")";
      case TargetTag::flat_circle: return "circle(" + std::to_string(radius) + ")";
      case TargetTag::sphere2: return "sphere";
      case TargetTag::hyperbolic2: return "hyperbolic";
      case TargetTag::spider: return "spider(" + std::to_string(rays) + ")";
      case TargetTag::product:
        return "product(" + base->name() + "," + std::to_string(dim) + "," + std::to_string(scale) + ")";
    }
    return "unknown";
  }

  friend bool operator==(const TargetKind& a, const TargetKind& b) {
    if (a.tag != b.tag) return false;
    switch (a.tag) {
      case TargetTag::euclidean: return a.dim == b.dim;
      case TargetTag::flat_circle: return a.radius == b.radius;
      case TargetTag::spider: return a.rays == b.rays;
      case TargetTag::product: return a.dim == b.dim && a.scale == b.scale && *a.base == *b.base;
      default: return true;
    }
  }
};

/// Point payload:
///   euclidean   x[0..L)
///   flat_circle x[0] = angle in [0, 2pi)
///   sphere2     x[0..3) unit vector
///   hyperbolic2 x[0..3) on the upper sheet of <p,p> = -1, form (-,+,+)
///   spider      ray, x[0] = radial distance from the origin
///   product     base payload first, then the extra coordinates
struct TargetPoint {
  std::array<double, kMaxCoords> x{};
  int ray = 0;

  friend bool operator==(const TargetPoint&, const TargetPoint&) = default;
};

using AmbientVec = std::array<double, kMaxCoords>;

/// Tangent vector of a smooth kind, stored in ambient coordinates.
struct TangentVector {
  TargetPoint base;
  AmbientVec v{};
};

namespace pt {

inline TargetPoint euclidean(std::initializer_list<double> coords) {
  TargetPoint p;
  int i = 0;
  for (double c : coords) p.x[i++] = c;
  return p;
}

inline TargetPoint circle(double theta) {
  TargetPoint p;
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t -= kTwoPi;
  p.x[0] = t;
  return p;
}

inline TargetPoint sphere(double a, double b, double c) {
  const double n = std::sqrt(a * a + b * b + c * c);
  TargetPoint p;
  p.x[0] = a / n;
  p.x[1] = b / n;
  p.x[2] = c / n;
  return p;
}

/// Hyperboloid point at geodesic distance r from (1,0,0) in direction phi.
inline TargetPoint hyperbolic_polar(double r, double phi) {
  TargetPoint p;
  p.x[0] = std::cosh(r);
  p.x[1] = std::sinh(r) * std::cos(phi);
  p.x[2] = std::sinh(r) * std::sin(phi);
  return p;
}

inline TargetPoint spider(int ray, double radial) {
  TargetPoint p;
  if (radial <= 0.0) {
    p.ray = 0;
    p.x[0] = 0.0;
  } else {
    p.ray = ray;
    p.x[0] = radial;
  }
  return p;
}

inline TargetPoint product(const TargetKind& kind, const TargetPoint& base, std::span<const double> extras) {
  TargetPoint p = base;
  const int bc = kind.base->coord_count();
  for (int i = bc; i < kMaxCoords; ++i) p.x[i] = 0.0;
  for (int i = 0; i < kind.dim; ++i) p.x[bc + i] = i < static_cast<int>(extras.size()) ? extras[i] : 0.0;
  return p;
}

}  // namespace pt

namespace detail {

inline double wrap_angle(double a) { return std::remainder(a, kTwoPi); }

inline double mink(const double* a, const double* b) { return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline double dot3(const double* a, const double* b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline void check_same_kind_point(const TargetKind& kind, const TargetPoint& p) {
  if (kind.tag == TargetTag::spider)
    require(p.ray >= 0 && p.ray < kind.rays, ErrorCode::kind_mismatch, "spider ray index out of range");
}

inline double hyperbolic_distance(const double* p, const double* q) {
  const double pair = -mink(p, q);
  if (pair > 1.5) return std::acosh(pair);
  // <q-p, q-p> = 4 sinh^2(d/2): accurate for nearby points.
  const double d[3] = {q[0] - p[0], q[1] - p[1], q[2] - p[2]};
  const double s = std::max(0.0, mink(d, d));
  return 2.0 * std::asinh(0.5 * std::sqrt(s));
}

inline double sphere_distance(const double* p, const double* q) {
  const double c[3] = {p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0]};
  return std::atan2(std::sqrt(dot3(c, c)), dot3(p, q));
}

// log/exp maps of the sphere and the hyperboloid, 3-vectors in ambient coordinates.
inline void sphere_log(const double* x, const double* p, double* out) {
  const double d = sphere_distance(x, p);
  double diff[3] = {p[0] - x[0], p[1] - x[1], p[2] - x[2]};
  const double proj = -0.5 * dot3(diff, diff);  // x.(p - x)
  double v[3] = {diff[0] - proj * x[0], diff[1] - proj * x[1], diff[2] - proj * x[2]};
  const double nv = std::sqrt(dot3(v, v));
  const double f = nv > 0.0 ? d / nv : 1.0;
  for (int i = 0; i < 3; ++i) out[i] = f * v[i];
}

inline void sphere_exp(const double* x, const double* v, double* out) {
  const double t = std::sqrt(dot3(v, v));
  const double c = std::cos(t);
  const double s = t > 1e-300 ? std::sin(t) / t : 1.0;
  double y[3];
  for (int i = 0; i < 3; ++i) y[i] = c * x[i] + s * v[i];
  const double n = std::sqrt(dot3(y, y));
  for (int i = 0; i < 3; ++i) out[i] = y[i] / n;
}

inline void hyperbolic_normalize(double* y) {
  const double q = -mink(y, y);
  if (q > 0.0) {
    const double n = std::sqrt(q);
    for (int i = 0; i < 3; ++i) y[i] /= n;
  } else {
    // Outside the light cone: project the spatial part onto the sheet.
    y[0] = std::sqrt(1.0 + y[1] * y[1] + y[2] * y[2]);
  }
  if (y[0] < 0.0)
    for (int i = 0; i < 3; ++i) y[i] = -y[i];
}

inline void hyperbolic_log(const double* x, const double* p, double* out) {
  const double diff[3] = {p[0] - x[0], p[1] - x[1], p[2] - x[2]};
  const double s = mink(diff, diff);
  // tangent part of p at x: p + <x,p> x with <x,p> + 1 = -s/2
  double v[3];
  for (int i = 0; i < 3; ++i) v[i] = diff[i] - 0.5 * s * x[i];
  const double d = hyperbolic_distance(x, p);
  const double nv = std::sqrt(std::max(0.0, mink(v, v)));
  const double f = nv > 0.0 ? d / nv : 1.0;
  for (int i = 0; i < 3; ++i) out[i] = f * v[i];
}

inline void hyperbolic_exp(const double* x, const double* v, double* out) {
  const double t = std::sqrt(std::max(0.0, mink(v, v)));
  const double c = std::cosh(t);
  const double s = t > 1e-300 ? std::sinh(t) / t : 1.0;
  double y[3];
  for (int i = 0; i < 3; ++i) y[i] = c * x[i] + s * v[i];
  hyperbolic_normalize(y);
  for (int i = 0; i < 3; ++i) out[i] = y[i];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Distance

inline double distance(const TargetKind& kind, const TargetPoint& p, const TargetPoint& q) {
  switch (kind.tag) {
    case TargetTag::euclidean: {
      double s = 0.0;
      for (int i = 0; i < kind.dim; ++i) {
        const double d = p.x[i] - q.x[i];
        s += d * d;
      }
      return std::sqrt(s);
    }
    case TargetTag::flat_circle:
      return kind.radius * std::abs(detail::wrap_angle(q.x[0] - p.x[0]));
    case TargetTag::sphere2:
      return detail::sphere_distance(p.x.data(), q.x.data());
    case TargetTag::hyperbolic2:
      return detail::hyperbolic_distance(p.x.data(), q.x.data());
    case TargetTag::spider: {
      const double a = p.x[0], b = q.x[0];
      if (p.ray == q.ray || a == 0.0 || b == 0.0) return std::abs(a - b);
      return a + b;
    }
    case TargetTag::product: {
      const double db = distance(*kind.base, p, q);
      const int bc = kind.base->coord_count();
      double s = db * db;
      for (int i = 0; i < kind.dim; ++i) {
        const double d = kind.scale * (p.x[bc + i] - q.x[bc + i]);
        s += d * d;
      }
      return std::sqrt(s);
    }
  }
  return 0.0;
}

inline double distance_sq(const TargetKind& kind, const TargetPoint& p, const TargetPoint& q) {
  if (kind.tag == TargetTag::euclidean) {
    double s = 0.0;
    for (int i = 0; i < kind.dim; ++i) {
      const double d = p.x[i] - q.x[i];
      s += d * d;
    }
    return s;
  }
  const double d = distance(kind, p, q);
  return d * d;
}

// ---------------------------------------------------------------------------
// Validity and canonical form

inline bool is_valid(const TargetKind& kind, const TargetPoint& p, double tol = 1e-12) {
  for (int i = 0; i < kind.coord_count(); ++i)
    if (!std::isfinite(p.x[i])) return false;
  switch (kind.tag) {
    case TargetTag::euclidean: return true;
    case TargetTag::flat_circle: return p.x[0] >= 0.0 && p.x[0] < kTwoPi;
    case TargetTag::sphere2: return std::abs(std::sqrt(detail::dot3(p.x.data(), p.x.data())) - 1.0) <= tol;
    case TargetTag::hyperbolic2:
      return p.x[0] >= 1.0 - tol && std::abs(detail::mink(p.x.data(), p.x.data()) + 1.0) <= tol * p.x[0] * p.x[0];
    case TargetTag::spider:
      return p.x[0] >= 0.0 && p.ray >= 0 && p.ray < kind.rays && (p.x[0] > 0.0 || p.ray == 0);
    case TargetTag::product: return is_valid(*kind.base, p, tol);
  }
  return false;
}

inline TargetPoint canonicalize(const TargetKind& kind, TargetPoint p) {
  switch (kind.tag) {
    case TargetTag::flat_circle: {
      const double rest = p.x[0];
      p = pt::circle(rest);
      return p;
    }
    case TargetTag::spider:
      if (p.x[0] <= 0.0) {
        p.x[0] = 0.0;
        p.ray = 0;
      }
      return p;
    case TargetTag::product: {
      TargetPoint b = canonicalize(*kind.base, p);
      const int bc = kind.base->coord_count();
      for (int i = 0; i < kind.base->coord_count(); ++i) p.x[i] = b.x[i];
      p.ray = b.ray;
      (void)bc;
      return p;
    }
    default: return p;
  }
}

// ---------------------------------------------------------------------------
// Ambient coordinates, tangent spaces, log/exp (smooth kinds only)

inline AmbientVec ambient_coords(const TargetKind& kind, const TargetPoint& p) {
  AmbientVec a{};
  switch (kind.tag) {
    case TargetTag::euclidean:
      for (int i = 0; i < kind.dim; ++i) a[i] = p.x[i];
      return a;
    case TargetTag::flat_circle:
      a[0] = kind.radius * std::cos(p.x[0]);
      a[1] = kind.radius * std::sin(p.x[0]);
      return a;
    case TargetTag::sphere2:
    case TargetTag::hyperbolic2:
      for (int i = 0; i < 3; ++i) a[i] = p.x[i];
      return a;
    default: fail(ErrorCode::unsupported_on_target, "ambient coordinates need a smooth target");
  }
}

/// Nearest-point retraction of an ambient vector onto the target.
inline TargetPoint from_ambient(const TargetKind& kind, const AmbientVec& a) {
  TargetPoint p;
  switch (kind.tag) {
    case TargetTag::euclidean:
      for (int i = 0; i < kind.dim; ++i) p.x[i] = a[i];
      return p;
    case TargetTag::flat_circle: return pt::circle(std::atan2(a[1], a[0]));
    case TargetTag::sphere2: return pt::sphere(a[0], a[1], a[2]);
    case TargetTag::hyperbolic2: {
      double y[3] = {a[0], a[1], a[2]};
      detail::hyperbolic_normalize(y);
      for (int i = 0; i < 3; ++i) p.x[i] = y[i];
      return p;
    }
    default: fail(ErrorCode::unsupported_on_target, "retraction needs a smooth target");
  }
}

/// Tangent inner product at a point (Minkowski on the hyperboloid).
inline double tangent_dot(const TargetKind& kind, const AmbientVec& a, const AmbientVec& b) {
  if (kind.tag == TargetTag::hyperbolic2) return detail::mink(a.data(), b.data());
  double s = 0.0;
  for (int i = 0; i < kind.ambient_dim(); ++i) s += a[i] * b[i];
  return s;
}

inline double tangent_norm(const TargetKind& kind, const AmbientVec& v) {
  return std::sqrt(std::max(0.0, tangent_dot(kind, v, v)));
}

/// Orthogonal projection of an ambient vector onto the tangent space at p.
inline AmbientVec project_tangent(const TargetKind& kind, const TargetPoint& p, const AmbientVec& v) {
  AmbientVec out = v;
  switch (kind.tag) {
    case TargetTag::euclidean: return out;
    case TargetTag::flat_circle: {
      const double t0 = -std::sin(p.x[0]), t1 = std::cos(p.x[0]);
      const double c = v[0] * t0 + v[1] * t1;
      out[0] = c * t0;
      out[1] = c * t1;
      return out;
    }
    case TargetTag::sphere2: {
      const double c = detail::dot3(p.x.data(), v.data());
      for (int i = 0; i < 3; ++i) out[i] = v[i] - c * p.x[i];
      return out;
    }
    case TargetTag::hyperbolic2: {
      const double c = detail::mink(p.x.data(), v.data());
      for (int i = 0; i < 3; ++i) out[i] = v[i] + c * p.x[i];
      return out;
    }
    default: fail(ErrorCode::unsupported_on_target, "tangent projection needs a smooth target");
  }
}

inline double tangency_residual(const TargetKind& kind, const TangentVector& X) {
  switch (kind.tag) {
    case TargetTag::euclidean: return 0.0;
    case TargetTag::flat_circle: {
      const double c = std::cos(X.base.x[0]), s = std::sin(X.base.x[0]);
      return std::abs(X.v[0] * c + X.v[1] * s);
    }
    case TargetTag::sphere2: return std::abs(detail::dot3(X.base.x.data(), X.v.data()));
    case TargetTag::hyperbolic2: return std::abs(detail::mink(X.base.x.data(), X.v.data()));
    default: fail(ErrorCode::unsupported_on_target, "tangent vectors need a smooth target");
  }
}

inline TangentVector log_map(const TargetKind& kind, const TargetPoint& x, const TargetPoint& p) {
  TangentVector out{x, {}};
  switch (kind.tag) {
    case TargetTag::euclidean:
      for (int i = 0; i < kind.dim; ++i) out.v[i] = p.x[i] - x.x[i];
      return out;
    case TargetTag::flat_circle: {
      const double arc = kind.radius * detail::wrap_angle(p.x[0] - x.x[0]);
      out.v[0] = -arc * std::sin(x.x[0]);
      out.v[1] = arc * std::cos(x.x[0]);
      return out;
    }
    case TargetTag::sphere2: detail::sphere_log(x.x.data(), p.x.data(), out.v.data()); return out;
    case TargetTag::hyperbolic2: detail::hyperbolic_log(x.x.data(), p.x.data(), out.v.data()); return out;
    default: fail(ErrorCode::unsupported_on_target, "log map needs a smooth target");
  }
}

inline TargetPoint exp_map(const TargetKind& kind, const TangentVector& X) {
  const TargetPoint& x = X.base;
  TargetPoint out;
  switch (kind.tag) {
    case TargetTag::euclidean:
      for (int i = 0; i < kind.dim; ++i) out.x[i] = x.x[i] + X.v[i];
      return out;
    case TargetTag::flat_circle: {
      const double arc = -X.v[0] * std::sin(x.x[0]) + X.v[1] * std::cos(x.x[0]);
      return pt::circle(x.x[0] + arc / kind.radius);
    }
    case TargetTag::sphere2: detail::sphere_exp(x.x.data(), X.v.data(), out.x.data()); return out;
    case TargetTag::hyperbolic2: detail::hyperbolic_exp(x.x.data(), X.v.data(), out.x.data()); return out;
    default: fail(ErrorCode::unsupported_on_target, "exp map needs a smooth target");
  }
}

// ---------------------------------------------------------------------------
// Geodesics

namespace detail {

// Point at parameter s along the geodesic from p to q; s outside [0,1]
// extends the geodesic where the target allows it (spider: clamped at the origin).
inline TargetPoint geodesic_eval(const TargetKind& kind, const TargetPoint& p, const TargetPoint& q, double s) {
  switch (kind.tag) {
    case TargetTag::euclidean: {
      TargetPoint r;
      for (int i = 0; i < kind.dim; ++i) r.x[i] = p.x[i] + s * (q.x[i] - p.x[i]);
      return r;
    }
    case TargetTag::flat_circle: {
      const double d = wrap_angle(q.x[0] - p.x[0]);
      if (s != 0.0 && s != 1.0 && std::abs(std::abs(d) - kPi) < 1e-12)
        fail(ErrorCode::non_unique_geodesic, "antipodal circle points");
      if (s == 1.0) return q;
      return pt::circle(p.x[0] + s * d);
    }
    case TargetTag::sphere2: {
      if (s == 0.0) return p;
      if (s == 1.0) return q;
      if (dot3(p.x.data(), q.x.data()) <= -1.0 + 1e-12)
        fail(ErrorCode::non_unique_geodesic, "antipodal sphere points");
      TangentVector v = log_map(kind, p, q);
      for (int i = 0; i < 3; ++i) v.v[i] *= s;
      return exp_map(kind, v);
    }
    case TargetTag::hyperbolic2: {
      if (s == 0.0) return p;
      if (s == 1.0) return q;
      TangentVector v = log_map(kind, p, q);
      for (int i = 0; i < 3; ++i) v.v[i] *= s;
      return exp_map(kind, v);
    }
    case TargetTag::spider: {
      double a = p.x[0], b = q.x[0];
      int ra = p.ray, rb = q.ray;
      if (a == 0.0) ra = rb;
      if (b == 0.0) rb = ra;
      if (ra == rb) return pt::spider(ra, a + s * (b - a));
      const double sigma = s * (a + b);
      if (sigma <= a) return pt::spider(ra, a - sigma);
      return pt::spider(rb, sigma - a);
    }
    case TargetTag::product: {
      TargetPoint r = geodesic_eval(*kind.base, p, q, s);
      const int bc = kind.base->coord_count();
      for (int i = 0; i < kind.dim; ++i) r.x[bc + i] = p.x[bc + i] + s * (q.x[bc + i] - p.x[bc + i]);
      return r;
    }
  }
  return p;
}

}  // namespace detail

/// Constant-speed geodesic from p (s = 0) to q (s = 1).
inline TargetPoint geodesic_point(const TargetKind& kind, const TargetPoint& p, const TargetPoint& q, double s) {
  detail::check_same_kind_point(kind, p);
  detail::check_same_kind_point(kind, q);
  require(s >= 0.0 && s <= 1.0, ErrorCode::invalid_argument, "geodesic parameter outside [0,1]");
  return detail::geodesic_eval(kind, p, q, s);
}

/// Contraction R_{lambda,Q}(p): the point at fraction lambda of the way from Q to p.
inline TargetPoint contract(const TargetKind& kind, double lambda, const TargetPoint& Q, const TargetPoint& p) {
  require(kind.npc(), ErrorCode::unsupported_on_target, "contraction needs an NPC target");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::invalid_argument, "lambda outside [0,1]");
  if (kind.tag == TargetTag::flat_circle)
    require(distance(kind, Q, p) < kPi * kind.radius - 1e-12, ErrorCode::non_unique_geodesic,
            "circle contraction needs d(p,Q) < pi*radius");
  if (lambda == 0.0) return Q;
  if (lambda == 1.0) return p;
  return detail::geodesic_eval(kind, Q, p, lambda);
}

/// d^2(P, Q_lambda) - [(1-l) d^2(P,Q) + l d^2(P,R) - l(1-l) d^2(Q,R)], where Q_lambda
/// is on the geodesic from Q to R. Nonpositive on CAT(0) targets.
inline double npc_residual(const TargetKind& kind, const TargetPoint& P, const TargetPoint& Q, const TargetPoint& R,
                           double lambda) {
  const TargetPoint Ql = geodesic_point(kind, Q, R, lambda);
  return distance_sq(kind, P, Ql) -
         ((1.0 - lambda) * distance_sq(kind, P, Q) + lambda * distance_sq(kind, P, R) -
          lambda * (1.0 - lambda) * distance_sq(kind, Q, R));
}

// ---------------------------------------------------------------------------
// Weighted Frechet means

/// sum_i w_i d^2(x, p_i)
inline double weighted_sq_sum(const TargetKind& kind, const TargetPoint& x, std::span<const TargetPoint> points,
                              std::span<const double> weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * distance_sq(kind, x, points[i]);
  return s;
}

namespace detail {

inline TargetPoint spider_mean(const TargetKind& kind, std::span<const TargetPoint> points,
                               std::span<const double> weights, double wsum) {
  // On ray c the objective is sum w (x - s_i)^2 with s_i = +r_i on ray c and -r_i elsewhere.
  double best_f = std::numeric_limits<double>::infinity();
  TargetPoint best;
  for (int c = 0; c < kind.rays; ++c) {
    double m = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r = points[i].x[0];
      m += weights[i] * ((points[i].ray == c || r == 0.0) ? r : -r);
    }
    const double xs = std::max(0.0, m / wsum);
    double f = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r = points[i].x[0];
      const double d = xs - ((points[i].ray == c || r == 0.0) ? r : -r);
      f += weights[i] * d * d;
    }
    if (f < best_f) {
      best_f = f;
      best = pt::spider(c, xs);
    }
  }
  return best;
}

inline TargetPoint circle_mean(const TargetKind& kind, std::span<const TargetPoint> points,
                               std::span<const double> weights, double wsum, const TargetPoint& hint) {
  (void)kind;
  double x = hint.x[0];
  for (int it = 0; it < 50; ++it) {
    double a = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) a += weights[i] * wrap_angle(points[i].x[0] - x);
    a /= wsum;
    x += a;
    if (std::abs(a) <= 1e-15) break;
  }
  return pt::circle(x);
}

// Karcher iteration x <- exp_x(s g) with g = sum w log_x(p) / W. The Hessian
// of the normalized objective lies between 1 and L = sum w phi(d) / W, with
// phi(d) = d coth d on the hyperboloid and 1 on the sphere, so s = 2 / (1 + L)
// is the optimal fixed step. Along a step of length below 1 the bound L grows
// by less than 1 and the step still decreases the objective; longer steps are
// halved until the objective does not increase.
inline TargetPoint karcher_mean(const TargetKind& kind, std::span<const TargetPoint> points,
                                std::span<const double> weights, double wsum, const TargetPoint& hint) {
  TargetPoint x = hint;
  for (int it = 0; it < 500; ++it) {
    TangentVector g{x, {}};
    double L = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const TangentVector l = log_map(kind, x, points[i]);
      const double d = tangent_norm(kind, l.v);
      double phi = 1.0;
      if (kind.tag == TargetTag::hyperbolic2 && d > 1e-8) phi = d / std::tanh(d);
      L += weights[i] * phi;
      for (int c = 0; c < 3; ++c) g.v[c] += weights[i] * l.v[c];
    }
    L /= wsum;
    for (int c = 0; c < 3; ++c) g.v[c] /= wsum;
    const double gn = tangent_norm(kind, g.v);
    if (gn <= 1e-15) break;
    double step = 2.0 / (1.0 + L);
    if (step * gn < 1.0) {
      TangentVector t{x, {}};
      for (int c = 0; c < 3; ++c) t.v[c] = step * g.v[c];
      x = exp_map(kind, t);
      if (step * gn <= 1e-15) break;
      continue;
    }
    const double fx = weighted_sq_sum(kind, x, points, weights);
    bool moved = false;
    while (step > 1e-8) {
      TangentVector t{x, {}};
      for (int c = 0; c < 3; ++c) t.v[c] = step * g.v[c];
      const TargetPoint y = exp_map(kind, t);
      if (weighted_sq_sum(kind, y, points, weights) <= fx) {
        x = y;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return x;
}

}  // namespace detail

/// Minimizer of sum_i w_i d^2(., p_i). `hint` seeds the iterative kinds.
inline TargetPoint frechet_mean(const TargetKind& kind, std::span<const TargetPoint> points,
                                std::span<const double> weights, const TargetPoint& hint) {
  require(!points.empty(), ErrorCode::empty_input, "frechet_mean of no points");
  require(points.size() == weights.size(), ErrorCode::shape_mismatch, "points/weights length mismatch");
  require(kind.npc() || kind.tag == TargetTag::sphere2, ErrorCode::unsupported_on_target,
          "frechet_mean needs an NPC target");
  double wsum = 0.0;
  for (double w : weights) {
    require(w >= 0.0, ErrorCode::invalid_argument, "negative weight");
    wsum += w;
  }
  require(wsum > 0.0, ErrorCode::invalid_argument, "weights sum to zero");
  switch (kind.tag) {
    case TargetTag::euclidean: {
      TargetPoint m;
      for (std::size_t i = 0; i < points.size(); ++i)
        for (int c = 0; c < kind.dim; ++c) m.x[c] += weights[i] * points[i].x[c];
      for (int c = 0; c < kind.dim; ++c) m.x[c] /= wsum;
      return m;
    }
    case TargetTag::flat_circle: return detail::circle_mean(kind, points, weights, wsum, hint);
    case TargetTag::sphere2:
    case TargetTag::hyperbolic2: return detail::karcher_mean(kind, points, weights, wsum, hint);
    case TargetTag::spider: return detail::spider_mean(kind, points, weights, wsum);
    case TargetTag::product: {
      TargetPoint m = frechet_mean(*kind.base, points, weights, hint);
      const int bc = kind.base->coord_count();
      for (int c = 0; c < kind.dim; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * points[i].x[bc + c];
        m.x[bc + c] = s / wsum;
      }
      return m;
    }
  }
  return hint;
}

inline TargetPoint frechet_mean(const TargetKind& kind, std::span<const TargetPoint> points,
                                std::span<const double> weights) {
  require(!points.empty(), ErrorCode::empty_input, "frechet_mean of no points");
  require(kind.npc(), ErrorCode::unsupported_on_target, "frechet_mean needs an NPC target");
  std::size_t best = 0;
  for (std::size_t i = 1; i < weights.size() && i < points.size(); ++i)
    if (weights[i] > weights[best]) best = i;
  return frechet_mean(kind, points, weights, points[best]);
}

// ---------------------------------------------------------------------------
// Curvature data and embeddings

/// Normal component of the ambient acceleration of the geodesic with initial
/// velocity X: A(p)(X, X).
inline AmbientVec second_fundamental_form(const TargetKind& kind, const TangentVector& X) {
  AmbientVec out{};
  const TargetPoint& p = X.base;
  switch (kind.tag) {
    case TargetTag::euclidean: return out;
    case TargetTag::flat_circle: {
      const double n2 = X.v[0] * X.v[0] + X.v[1] * X.v[1];
      const AmbientVec a = ambient_coords(kind, p);
      const double f = -n2 / (kind.radius * kind.radius);
      out[0] = f * a[0];
      out[1] = f * a[1];
      return out;
    }
    case TargetTag::sphere2: {
      const double n2 = detail::dot3(X.v.data(), X.v.data());
      for (int i = 0; i < 3; ++i) out[i] = -n2 * p.x[i];
      return out;
    }
    case TargetTag::hyperbolic2: {
      const double n2 = detail::mink(X.v.data(), X.v.data());
      for (int i = 0; i < 3; ++i) out[i] = n2 * p.x[i];
      return out;
    }
    default: fail(ErrorCode::unsupported_on_target, "second fundamental form needs a smooth embedded target");
  }
}

inline int embed_dim(const TargetKind& kind) {
  switch (kind.tag) {
    case TargetTag::euclidean: return kind.dim;
    case TargetTag::spider: return kind.rays;
    case TargetTag::product: return embed_dim(*kind.base) + kind.dim;
    default: fail(ErrorCode::unsupported_on_target, "no small-scale isometric embedding for " + kind.name());
  }
}

/// Embedding into R^L that is isometric at small scales: spider (k, a) -> a e_k.
inline std::vector<double> embed_coords(const TargetKind& kind, const TargetPoint& p) {
  switch (kind.tag) {
    case TargetTag::euclidean: return std::vector<double>(p.x.begin(), p.x.begin() + kind.dim);
    case TargetTag::spider: {
      std::vector<double> e(kind.rays, 0.0);
      e[p.ray] = p.x[0];
      return e;
    }
    case TargetTag::product: {
      std::vector<double> e = embed_coords(*kind.base, p);
      const int bc = kind.base->coord_count();
      for (int i = 0; i < kind.dim; ++i) e.push_back(kind.scale * p.x[bc + i]);
      return e;
    }
    default: fail(ErrorCode::unsupported_on_target, "no small-scale isometric embedding for " + kind.name());
  }
}

}  // namespace hmflow
