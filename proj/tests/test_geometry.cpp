#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shapeflow/geometry.hpp"

using shapeflow::Vec2;

TEST(TriangleQuality, EquilateralIsOneAtAnyScale) {
  for (const double s : {1e-3, 1.0, 250.0}) {
    const Vec2 a(0, 0), b(s, 0), c(0.5 * s, 0.5 * std::sqrt(3.0) * s);
    EXPECT_NEAR(shapeflow::triangle_quality(a, b, c), 1.0, 1e-14);
  }
}

TEST(TriangleQuality, RightIsoscelesMatchesRadiiFormula) {
  const double expected = 2.0 * (2.0 - std::sqrt(2.0)) / std::sqrt(2.0);
  EXPECT_NEAR(shapeflow::triangle_quality({0, 0}, {1, 0}, {0, 1}), expected, 1e-14);
  EXPECT_NEAR(expected, 0.8284, 1e-4);
}

TEST(TriangleQuality, CollinearIsZero) {
  EXPECT_EQ(shapeflow::triangle_quality({0, 0}, {1, 0}, {2, 0}), 0.0);
}

TEST(TriangleQuality, ClockwiseInputUsesAbsoluteArea) {
  EXPECT_NEAR(shapeflow::triangle_quality({0, 0}, {0, 1}, {1, 0}),
              shapeflow::triangle_quality({0, 0}, {1, 0}, {0, 1}), 1e-15);
}

TEST(TriangleQuality, AgreesWithRadiiOracleOnRandomTriangles) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    const Vec2 a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng));
    const double q = shapeflow::triangle_quality(a, b, c);
    EXPECT_NEAR(q, oracle::quality(a, b, c), 1e-10);
    EXPECT_GE(q, 0.0);
    EXPECT_LE(q, 1.0);
  }
}

TEST(TriangleQuality, InvariantUnderSimilarityTransforms) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0), angle(0.0, 2.0 * std::numbers::pi),
      scale(0.01, 100.0);
  for (int k = 0; k < 100; ++k) {
    const Vec2 a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng));
    const double q = shapeflow::triangle_quality(a, b, c);
    if (q < 1e-3) continue;
    Eigen::Rotation2Dd rot(angle(rng));
    const double s = scale(rng);
    const Vec2 shift(u(rng), u(rng));
    auto map = [&](const Vec2 &p) -> Vec2 { return s * (rot * p) + shift; };
    const double q2 = shapeflow::triangle_quality(map(a), map(b), map(c));
    EXPECT_LT(std::abs(q2 - q) / q, 1e-12);
  }
}

TEST(Predicates, OrientationAndIncircleSigns) {
  EXPECT_GT(shapeflow::orient2d({0, 0}, {1, 0}, {0, 1}), 0.0);
  EXPECT_LT(shapeflow::orient2d({0, 0}, {0, 1}, {1, 0}), 0.0);
  EXPECT_EQ(shapeflow::orient2d({0, 0}, {1, 1}, {2, 2}), 0.0);
  EXPECT_GT(shapeflow::incircle({0, 0}, {1, 0}, {0, 1}, {0.4, 0.4}), 0.0);
  EXPECT_LT(shapeflow::incircle({0, 0}, {1, 0}, {0, 1}, {2, 2}), 0.0);
}

TEST(Predicates, CircumcenterIsEquidistant) {
  const Vec2 a(0.3, -0.2), b(1.7, 0.4), c(0.2, 1.9);
  const Vec2 o = shapeflow::circumcenter(a, b, c);
  const double r = shapeflow::circumradius(a, b, c);
  EXPECT_NEAR((o - a).norm(), r, 1e-13);
  EXPECT_NEAR((o - b).norm(), r, 1e-13);
  EXPECT_NEAR((o - c).norm(), r, 1e-13);
}

TEST(Predicates, SegmentIntersection) {
  EXPECT_TRUE(shapeflow::segments_intersect({0, 0}, {1, 1}, {0, 1}, {1, 0}));
  EXPECT_FALSE(shapeflow::segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
  // Shared endpoint only: not an intersection.
  EXPECT_FALSE(shapeflow::segments_intersect({0, 0}, {1, 0}, {1, 0}, {2, 1}));
  // Collinear overlap.
  EXPECT_TRUE(shapeflow::segments_intersect({0, 0}, {2, 0}, {1, 0}, {3, 0}));
}

TEST(Polygon, AreaAndContainment) {
  const std::vector<Vec2> square{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  EXPECT_DOUBLE_EQ(shapeflow::polygon_area(square), 4.0);
  const std::vector<Vec2> reversed(square.rbegin(), square.rend());
  EXPECT_DOUBLE_EQ(shapeflow::polygon_area(reversed), -4.0);
  EXPECT_TRUE(shapeflow::point_in_polygon({1, 1}, square));
  EXPECT_FALSE(shapeflow::point_in_polygon({3, 1}, square));
  EXPECT_NEAR(shapeflow::point_segment_distance({1, 1}, {0, 0}, {2, 0}), 1.0, 1e-15);
  EXPECT_NEAR(shapeflow::point_segment_distance({3, 0}, {0, 0}, {2, 0}), 1.0, 1e-15);
}
