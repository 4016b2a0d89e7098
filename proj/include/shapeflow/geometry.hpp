#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace shapeflow {

using Vec2 = Eigen::Vector2d;

/// Twice the signed area of (a, b, c); positive for counterclockwise order.
inline double orient2d(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

inline double signed_area(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
  return 0.5 * orient2d(a, b, c);
}

/// Positive when d lies strictly inside the circumcircle of the
/// counterclockwise triangle (a, b, c).
double incircle(const Vec2 &a, const Vec2 &b, const Vec2 &c, const Vec2 &d);

Vec2 circumcenter(const Vec2 &a, const Vec2 &b, const Vec2 &c);
double circumradius(const Vec2 &a, const Vec2 &b, const Vec2 &c);

/// Normalized shape measure 2 * inradius / circumradius, in [0, 1].
/// Equals 1 exactly for equilateral triangles and 0 for collinear points.
double triangle_quality(const Vec2 &p0, const Vec2 &p1, const Vec2 &p2);

/// True when the closed segments [a,b] and [c,d] share any point other than
/// a common endpoint.
bool segments_intersect(const Vec2 &a, const Vec2 &b, const Vec2 &c,
                        const Vec2 &d);

/// Signed area of a closed polygon (counterclockwise positive).
double polygon_area(std::span<const Vec2> polygon);

/// Even-odd point-in-polygon test.
bool point_in_polygon(const Vec2 &p, std::span<const Vec2> polygon);

double point_segment_distance(const Vec2 &p, const Vec2 &a, const Vec2 &b);

}  // namespace shapeflow
