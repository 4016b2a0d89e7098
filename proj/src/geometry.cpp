#include "shapeflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shapeflow {

double incircle(const Vec2 &a, const Vec2 &b, const Vec2 &c, const Vec2 &d) {
  const long double adx = a.x() - d.x(), ady = a.y() - d.y();
  const long double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const long double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const long double alift = adx * adx + ady * ady;
  const long double blift = bdx * bdx + bdy * bdy;
  const long double clift = cdx * cdx + cdy * cdy;
  return static_cast<double>(alift * (bdx * cdy - cdx * bdy) +
                             blift * (cdx * ady - adx * cdy) +
                             clift * (adx * bdy - bdx * ady));
}

Vec2 circumcenter(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
  const Vec2 ab = b - a, ac = c - a;
  const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
  const double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
  return a + Vec2((ac.y() * ab2 - ab.y() * ac2) / d,
                  (ab.x() * ac2 - ac.x() * ab2) / d);
}

double circumradius(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
  const double area = std::abs(signed_area(a, b, c));
  if (area == 0.0) return std::numeric_limits<double>::infinity();
  return (b - c).norm() * (a - c).norm() * (a - b).norm() / (4.0 * area);
}

double triangle_quality(const Vec2 &p0, const Vec2 &p1, const Vec2 &p2) {
  const double la = (p1 - p2).norm();
  const double lb = (p0 - p2).norm();
  const double lc = (p0 - p1).norm();
  const double area = std::abs(signed_area(p0, p1, p2));
  const double denom = (la + lb + lc) * la * lb * lc;
  if (area == 0.0 || denom == 0.0) return 0.0;
  // 2 r / R with r = area / s, R = abc / (4 area), s = (a + b + c) / 2
  const double q = 16.0 * area * area / denom;
  return std::clamp(q, 0.0, 1.0);
}

bool segments_intersect(const Vec2 &a, const Vec2 &b, const Vec2 &c,
                        const Vec2 &d) {
  const bool shared = (a == c) || (a == d) || (b == c) || (b == d);
  const double o1 = orient2d(a, b, c), o2 = orient2d(a, b, d);
  const double o3 = orient2d(c, d, a), o4 = orient2d(c, d, b);
  if (shared) {
    // Adjacent segments only conflict when they overlap collinearly.
    if (o1 != 0.0 || o2 != 0.0) return false;
    const Vec2 common = (a == c || a == d) ? a : b;
    const Vec2 u = (a == common ? b : a) - common;
    const Vec2 v = (c == common ? d : c) - common;
    return u.dot(v) > 0.0;
  }
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) &&
      ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
    return true;
  auto on_segment = [](const Vec2 &p, const Vec2 &q, const Vec2 &r) {
    return std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
           std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
  };
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

double polygon_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 &p = polygon[i];
    const Vec2 &q = polygon[(i + 1) % n];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * twice;
}

bool point_in_polygon(const Vec2 &p, std::span<const Vec2> polygon) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 &a = polygon[i];
    const Vec2 &b = polygon[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

double point_segment_distance(const Vec2 &p, const Vec2 &a, const Vec2 &b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

}  // namespace shapeflow
