#include <gtest/gtest.h>

#include <complex>
#include <vector>

#include "support.hpp"

using namespace hmflow;
using hmtest::Gen;

namespace {

// Poincare disk image of a hyperboloid point.
std::complex<double> to_disk(const TargetPoint& p) { return {p.x[1] / (1.0 + p.x[0]), p.x[2] / (1.0 + p.x[0])}; }

double disk_distance(const TargetPoint& p, const TargetPoint& q) {
  const auto z = to_disk(p), w = to_disk(q);
  return 2.0 * std::atanh(std::abs(z - w) / std::abs(1.0 - std::conj(w) * z));
}

double chord_distance(const TargetPoint& p, const TargetPoint& q) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += (p.x[c] - q.x[c]) * (p.x[c] - q.x[c]);
  return 2.0 * std::asin(0.5 * std::sqrt(s));
}

double objective(const TargetKind& k, const TargetPoint& x, const std::vector<TargetPoint>& p,
                 const std::vector<double>& w) {
  return weighted_sq_sum(k, x, p, w);
}

// Minimum over one spider ray by golden-section search on the distance objective.
double spider_ray_min(const TargetKind& k, int ray, const std::vector<TargetPoint>& p, const std::vector<double>& w,
                      double& arg) {
  double a = 0.0, b = 10.0;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (objective(k, pt::spider(ray, c), p, w) < objective(k, pt::spider(ray, d), p, w))
      b = d;
    else
      a = c;
  }
  arg = 0.5 * (a + b);
  return objective(k, pt::spider(ray, arg), p, w);
}

}  // namespace

TEST(Distance, SimpleValues) {
  EXPECT_DOUBLE_EQ(distance(TargetKind::euclidean(2), pt::euclidean({0, 0}), pt::euclidean({3, 4})), 5.0);
  const auto sp = TargetKind::spider(3);
  EXPECT_DOUBLE_EQ(distance(sp, pt::spider(1, 0.5), pt::spider(1, 2.0)), 1.5);
  EXPECT_DOUBLE_EQ(distance(sp, pt::spider(1, 0.5), pt::spider(2, 2.0)), 2.5);
  EXPECT_DOUBLE_EQ(distance(sp, pt::spider(2, 0.0), pt::spider(1, 0.7)), 0.7);
  const auto c = TargetKind::flat_circle(2.0);
  EXPECT_NEAR(distance(c, pt::circle(0.1), pt::circle(kTwoPi - 0.1)), 0.4, 1e-14);
  EXPECT_NEAR(distance(TargetKind::sphere2(), pt::sphere(1, 0, 0), pt::sphere(0, 0, 1)), kPi / 2, 1e-15);
  EXPECT_NEAR(distance(TargetKind::hyperbolic2(), pt::hyperbolic_polar(0, 0), pt::hyperbolic_polar(1.3, 2.0)), 1.3,
              1e-14);
}

TEST(Distance, HyperbolicMatchesPoincareDisk) {
  Gen g(1);
  const auto k = TargetKind::hyperbolic2();
  for (int n = 0; n < hmtest::kCases; ++n) {
    const TargetPoint p = g.point(k, 3.0), q = g.point(k, 3.0);
    const double ref = disk_distance(p, q);
    EXPECT_NEAR(distance(k, p, q), ref, 1e-10 * (1.0 + ref));
  }
  // nearby points, where acosh loses half the digits
  const TargetPoint p = pt::hyperbolic_polar(0.4, 1.0), q = pt::hyperbolic_polar(0.4, 1.0 + 1e-9);
  EXPECT_NEAR(distance(k, p, q), std::sinh(0.4) * 1e-9, 1e-6 * std::sinh(0.4) * 1e-9);
}

TEST(Distance, SphereMatchesChord) {
  Gen g(2);
  const auto k = TargetKind::sphere2();
  for (int n = 0; n < hmtest::kCases; ++n) {
    const TargetPoint p = g.point(k), q = g.point(k);
    EXPECT_NEAR(distance(k, p, q), chord_distance(p, q), 1e-12);
  }
}

TEST(Distance, MetricAxioms) {
  Gen g(3);
  for (const auto& k : hmtest::all_kinds()) {
    for (int n = 0; n < hmtest::kCases; ++n) {
      const TargetPoint p = g.point(k, 2.0), q = g.point(k, 2.0), r = g.point(k, 2.0);
      const double pq = distance(k, p, q);
      EXPECT_GE(pq, 0.0);
      EXPECT_NEAR(distance(k, p, p), 0.0, 1e-7) << k.name();
      EXPECT_NEAR(pq, distance(k, q, p), 1e-12 * (1.0 + pq)) << k.name();
      EXPECT_LE(distance(k, p, r), pq + distance(k, q, r) + 1e-10) << k.name();
      EXPECT_NEAR(distance_sq(k, p, q), pq * pq, 1e-11 * (1.0 + pq * pq)) << k.name();
    }
  }
}

TEST(Geodesic, ConstantSpeed) {
  Gen g(4);
  for (const auto& k : hmtest::all_kinds()) {
    for (int n = 0; n < hmtest::kCases; ++n) {
      const TargetPoint p = g.point(k, 2.0), q = g.point(k, 2.0);
      const double s = g.uniform(0.0, 1.0);
      const TargetPoint m = geodesic_point(k, p, q, s);
      const double d = distance(k, p, q);
      EXPECT_TRUE(is_valid(k, m, 1e-10)) << k.name();
      EXPECT_NEAR(distance(k, p, m), s * d, 1e-9 * (1.0 + d)) << k.name();
      EXPECT_NEAR(distance(k, m, q), (1.0 - s) * d, 1e-9 * (1.0 + d)) << k.name();
    }
  }
}

TEST(Geodesic, SpiderCrossesTheOrigin) {
  const auto k = TargetKind::spider(3);
  const TargetPoint m = geodesic_point(k, pt::spider(0, 1.0), pt::spider(2, 3.0), 0.5);
  EXPECT_EQ(m.ray, 2);
  EXPECT_DOUBLE_EQ(m.x[0], 1.0);
  const TargetPoint o = geodesic_point(k, pt::spider(0, 1.0), pt::spider(2, 1.0), 0.5);
  EXPECT_EQ(o, pt::spider(0, 0.0));
}

TEST(Geodesic, AntipodesAreRejected) {
  const auto c = TargetKind::flat_circle();
  try {
    geodesic_point(c, pt::circle(0.0), pt::circle(kPi), 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_unique_geodesic);
  }
  const auto s = TargetKind::sphere2();
  EXPECT_THROW(geodesic_point(s, pt::sphere(0, 0, 1), pt::sphere(0, 0, -1), 0.3), Error);
  EXPECT_THROW(geodesic_point(c, pt::circle(0.0), pt::circle(1.0), 1.5), Error);
}

TEST(Curvature, NpcInequalityHoldsOnNpcKinds) {
  Gen g(5);
  for (const auto& k : hmtest::npc_kinds()) {
    for (int n = 0; n < hmtest::kCases; ++n) {
      const TargetPoint P = g.point(k, 2.0), Q = g.point(k, 2.0), R = g.point(k, 2.0);
      EXPECT_LE(npc_residual(k, P, Q, R, g.uniform(0.0, 1.0)), 1e-9) << k.name();
    }
  }
}

TEST(Curvature, SphereViolatesNpcInequality) {
  const auto k = TargetKind::sphere2();
  const double r = npc_residual(k, pt::sphere(0, 0, 1), pt::sphere(1, 0, 0), pt::sphere(0, 1, 0), 0.5);
  // midpoint of the quarter arc sits at distance pi/2 from the pole; comparison value pi^2/4 - pi^2/16
  EXPECT_NEAR(r, kPi * kPi / 16.0, 1e-12);
}

TEST(Curvature, HyperbolicGapIsStrict) {
  // Equilateral-ish triangle of side ~2: the median is shorter than the Euclidean comparison.
  const auto k = TargetKind::hyperbolic2();
  const double r = npc_residual(k, pt::hyperbolic_polar(1, 0), pt::hyperbolic_polar(1, 2.1), pt::hyperbolic_polar(1, 4.2),
                                0.5);
  EXPECT_LT(r, -1e-2);
}

TEST(Contraction, ShrinksDistances) {
  Gen g(6);
  for (const auto& k : hmtest::npc_kinds()) {
    for (int n = 0; n < hmtest::kCases; ++n) {
      const TargetPoint Q = g.point(k), p = g.point(k, 2.0), q = g.point(k, 2.0);
      const double lam = g.uniform(0.0, 1.0);
      const double lhs = distance(k, contract(k, lam, Q, p), contract(k, lam, Q, q));
      EXPECT_LE(lhs, lam * distance(k, p, q) + 1e-10) << k.name();
    }
  }
  EXPECT_THROW(contract(TargetKind::sphere2(), 0.5, pt::sphere(1, 0, 0), pt::sphere(0, 1, 0)), Error);
}

TEST(LogExp, RoundTrip) {
  Gen g(7);
  for (const auto& k : {TargetKind::euclidean(3), TargetKind::flat_circle(0.7), TargetKind::sphere2(),
                        TargetKind::hyperbolic2()}) {
    for (int n = 0; n < hmtest::kCases; ++n) {
      const TargetPoint x = g.point(k, 2.0), p = g.point(k, 2.0);
      const TangentVector v = log_map(k, x, p);
      EXPECT_LE(tangency_residual(k, v), 1e-10 * (1.0 + tangent_norm(k, v.v))) << k.name();
      EXPECT_NEAR(tangent_norm(k, v.v), distance(k, x, p), 1e-9) << k.name();
      EXPECT_NEAR(distance(k, exp_map(k, v), p), 0.0, 1e-8) << k.name();
    }
  }
}

TEST(SecondFundamentalForm, MatchesGeodesicAcceleration) {
  Gen g(8);
  const double s = 1e-4;
  for (const auto& k : {TargetKind::flat_circle(1.3), TargetKind::sphere2(), TargetKind::hyperbolic2()}) {
    for (int n = 0; n < 50; ++n) {
      const TargetPoint x = g.point(k, 1.5);
      AmbientVec raw{};
      for (int c = 0; c < k.ambient_dim(); ++c) raw[c] = g.normal();
      const AmbientVec v = project_tangent(k, x, raw);
      auto at = [&](double t) {
        TangentVector X{x, {}};
        for (int c = 0; c < 3; ++c) X.v[c] = t * v[c];
        return ambient_coords(k, exp_map(k, X));
      };
      const AmbientVec a = at(s), b = at(-s), m = ambient_coords(k, x);
      const AmbientVec A = second_fundamental_form(k, TangentVector{x, v});
      for (int c = 0; c < k.ambient_dim(); ++c) {
        const double fd = (a[c] - 2.0 * m[c] + b[c]) / (s * s);
        EXPECT_NEAR(A[c], fd, 1e-4 * (1.0 + std::abs(fd))) << k.name();
      }
    }
  }
}

TEST(FrechetMean, EuclideanIsWeightedAverage) {
  const auto k = TargetKind::euclidean(2);
  const std::vector<TargetPoint> p{pt::euclidean({0, 0}), pt::euclidean({4, 2})};
  const std::vector<double> w{1.0, 3.0};
  const TargetPoint m = frechet_mean(k, p, w);
  EXPECT_DOUBLE_EQ(m.x[0], 3.0);
  EXPECT_DOUBLE_EQ(m.x[1], 1.5);
}

TEST(FrechetMean, SpiderMatchesRaySearch) {
  Gen g(9);
  for (int rays : {2, 3, 6}) {
    const auto k = TargetKind::spider(rays);
    for (int n = 0; n < hmtest::kCases; ++n) {
      const int m = g.integer(1, 6);
      const auto p = g.points(k, m, 2.0);
      const auto w = g.weights(m);
      double best = std::numeric_limits<double>::infinity(), arg = 0.0;
      int ray = 0;
      for (int c = 0; c < rays; ++c) {
        double a;
        const double f = spider_ray_min(k, c, p, w, a);
        if (f < best) {
          best = f;
          arg = a;
          ray = c;
        }
      }
      const TargetPoint lib = frechet_mean(k, p, w);
      EXPECT_NEAR(objective(k, lib, p, w), best, 1e-9 * (1.0 + best));
      EXPECT_NEAR(distance(k, lib, pt::spider(ray, arg)), 0.0, 1e-6);
    }
  }
}

TEST(FrechetMean, CircleMatchesFineScan) {
  Gen g(10);
  const auto k = TargetKind::flat_circle();
  for (int n = 0; n < 50; ++n) {
    const double centre = g.uniform(0.0, kTwoPi);
    const int m = g.integer(2, 5);
    std::vector<TargetPoint> p;
    for (int i = 0; i < m; ++i) p.push_back(pt::circle(centre + g.uniform(-0.7, 0.7)));
    const auto w = g.weights(m);
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 200000; ++j) best = std::min(best, objective(k, pt::circle(kTwoPi * j / 200000), p, w));
    const TargetPoint lib = frechet_mean(k, p, w, p[0]);
    EXPECT_LE(objective(k, lib, p, w), best + 1e-12);
    EXPECT_NEAR(objective(k, lib, p, w), best, 1e-8);
  }
}

TEST(FrechetMean, HyperbolicIsStationaryAndMinimal) {
  Gen g(11);
  const auto k = TargetKind::hyperbolic2();
  for (int n = 0; n < hmtest::kCases; ++n) {
    const int m = g.integer(2, 6);
    const auto p = g.points(k, m, 3.0);
    const auto w = g.weights(m);
    const TargetPoint x = frechet_mean(k, p, w);
    AmbientVec grad{};
    for (int i = 0; i < m; ++i) {
      const TangentVector l = log_map(k, x, p[i]);
      for (int c = 0; c < 3; ++c) grad[c] += w[i] * l.v[c];
    }
    EXPECT_LE(tangent_norm(k, grad), 1e-9);
    const double f = objective(k, x, p, w);
    for (int t = 0; t < 20; ++t) {
      AmbientVec raw{g.normal(), g.normal(), g.normal()};
      TangentVector X{x, project_tangent(k, x, raw)};
      for (int c = 0; c < 3; ++c) X.v[c] *= 1e-3;
      EXPECT_GE(objective(k, exp_map(k, X), p, w), f - 1e-12);
    }
  }
}

TEST(FrechetMean, ProductSplitsIntoFactors) {
  Gen g(12);
  const auto base = TargetKind::spider(3);
  const auto k = TargetKind::product(base, 2, 0.5);
  for (int n = 0; n < 50; ++n) {
    const int m = g.integer(1, 5);
    const auto p = g.points(k, m);
    const auto w = g.weights(m);
    const TargetPoint x = frechet_mean(k, p, w);
    const TargetPoint b = frechet_mean(base, p, w);
    EXPECT_EQ(x.ray, b.ray);
    EXPECT_NEAR(x.x[0], b.x[0], 1e-14);
    double W = 0.0, e0 = 0.0;
    for (int i = 0; i < m; ++i) {
      W += w[i];
      e0 += w[i] * p[i].x[1];
    }
    EXPECT_NEAR(x.x[1], e0 / W, 1e-14);
  }
}

TEST(FrechetMean, RejectsBadInput) {
  const auto k = TargetKind::spider(3);
  const std::vector<TargetPoint> none;
  const std::vector<double> nw;
  try {
    frechet_mean(k, none, nw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_input);
  }
  const std::vector<TargetPoint> two{pt::spider(0, 1), pt::spider(1, 1)};
  const std::vector<double> one{1.0};
  try {
    frechet_mean(k, two, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
  }
  const std::vector<double> neg{1.0, -1.0};
  EXPECT_THROW(frechet_mean(k, two, neg), Error);
}

TEST(Kinds, Construction) {
  EXPECT_THROW(TargetKind::spider(1), Error);
  EXPECT_THROW(TargetKind::flat_circle(0.0), Error);
  EXPECT_THROW(TargetKind::product(TargetKind::product(TargetKind::spider(3), 1, 1.0), 1, 1.0), Error);
  EXPECT_TRUE(TargetKind::spider(3).npc());
  EXPECT_FALSE(TargetKind::sphere2().npc());
  EXPECT_FALSE(TargetKind::spider(3).smooth());
  EXPECT_EQ(TargetKind::product(TargetKind::hyperbolic2(), 2, 1.0).coord_count(), 5);
  EXPECT_FALSE(TargetKind::spider(3) == TargetKind::spider(4));
}

TEST(Points, CanonicalForms) {
  const auto k = TargetKind::spider(4);
  TargetPoint p;
  p.ray = 3;
  p.x[0] = 0.0;
  EXPECT_FALSE(is_valid(k, p));
  EXPECT_EQ(canonicalize(k, p), pt::spider(0, 0.0));
  EXPECT_NEAR(canonicalize(TargetKind::flat_circle(), pt::euclidean({-1.0})).x[0], kTwoPi - 1.0, 1e-15);
  EXPECT_TRUE(is_valid(TargetKind::hyperbolic2(), pt::hyperbolic_polar(4.0, 1.0)));
  EXPECT_FALSE(is_valid(TargetKind::sphere2(), pt::euclidean({1, 1, 0})));
  TargetPoint bad = pt::spider(1, 1.0);
  bad.ray = 7;
  EXPECT_THROW(distance(k, geodesic_point(k, bad, pt::spider(0, 1.0), 0.5), bad), Error);
}

TEST(Embedding, SpiderIsIsometricNearRays) {
  const auto k = TargetKind::spider(3);
  const auto e = embed_coords(k, pt::spider(2, 0.8));
  ASSERT_EQ(e.size(), 3u);
  EXPECT_DOUBLE_EQ(e[2], 0.8);
  EXPECT_EQ(embed_dim(TargetKind::product(k, 2, 1.0)), 5);
  EXPECT_THROW(embed_coords(TargetKind::sphere2(), pt::sphere(1, 0, 0)), Error);
}
