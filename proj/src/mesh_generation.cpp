#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "shapeflow/error.hpp"
#include "shapeflow/mesh.hpp"
#include "triangulator.hpp"

namespace shapeflow {

namespace {

// target_h bounds the circumradius of interior triangles; generated boundary
// polylines use a spacing of kBoundarySpacing * target_h, close to the
// typical interior edge length that bound produces.
constexpr double kRadiusFactor = 1.0;
constexpr double kBoundarySpacing = 1.3;
constexpr double kRefineQuality = 0.55;
constexpr int kSmoothPasses = 6;

struct Planar {
  std::vector<Vec2> points;
  std::vector<std::array<int, 2>> segments;
  std::vector<Marker> markers;
};

// Appends the open polyline a -> b (excluding b) split into pieces of length
// about h.
void add_straight(Planar &g, const Vec2 &a, const Vec2 &b, double h) {
  const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / h - 1e-9)));
  for (int k = 0; k < n; ++k) g.points.push_back(a + (b - a) * (double(k) / n));
}

void close_loop(Planar &g, std::size_t first, const std::vector<Marker> &markers) {
  const std::size_t count = g.points.size() - first;
  for (std::size_t k = 0; k < count; ++k) {
    const int a = static_cast<int>(first + k);
    const int b = static_cast<int>(first + (k + 1) % count);
    g.segments.push_back({a, b});
    g.markers.push_back(markers[k]);
  }
}

std::vector<Vec2> curve_polygon(const ClosedCurve &curve, double h) {
  // Equal arclength spacing; for circles this is equal angular spacing.
  constexpr int kSamples = 4096;
  std::vector<double> length(kSamples + 1, 0.0);
  for (int k = 0; k < kSamples; ++k) {
    const double t0 = 2.0 * std::numbers::pi * k / kSamples;
    const double t1 = 2.0 * std::numbers::pi * (k + 1) / kSamples;
    length[k + 1] = length[k] + (curve.point(t1) - curve.point(t0)).norm();
  }
  const double perimeter = length.back();
  const int n = std::max(8, static_cast<int>(std::ceil(perimeter / h)));
  std::vector<Vec2> poly;
  poly.reserve(n);
  int seg = 0;
  for (int k = 0; k < n; ++k) {
    const double s = perimeter * k / n;
    while (length[seg + 1] < s) ++seg;
    const double frac = (s - length[seg]) / (length[seg + 1] - length[seg]);
    poly.push_back(curve.point(2.0 * std::numbers::pi * (seg + frac) / kSamples));
  }
  return poly;
}

// Target edge length h(x) = min(h0, min_i (s_i + grading * |x - x_i|)) over
// marked nodes, with s_i the mean length of the marked edges at node i.
class SizeField {
 public:
  SizeField(const Planar &g, double target_h) : target_h_(target_h) {
    std::vector<double> sum(g.points.size(), 0.0);
    std::vector<int> count(g.points.size(), 0);
    for (const auto &s : g.segments) {
      const double len = (g.points[s[0]] - g.points[s[1]]).norm();
      for (const int v : s) {
        sum[v] += len;
        ++count[v];
      }
    }
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      if (count[i] == 0) continue;
      const double s = sum[i] / count[i];
      if (s < 0.95 * target_h) anchors_.push_back({g.points[i], s});
    }
  }

  double operator()(const Vec2 &x) const {
    double h = target_h_;
    for (const auto &a : anchors_) h = std::min(h, a.spacing + kGrading * (x - a.at).norm());
    return h;
  }

 private:
  static constexpr double kGrading = 0.4;
  struct Anchor {
    Vec2 at;
    double spacing;
  };
  double target_h_;
  std::vector<Anchor> anchors_;
};

Mesh triangulate(const Planar &g, double target_h,
                 const detail::Triangulator::RegionFn &region_of) {
  detail::Triangulator tri(g.points, g.segments);
  tri.classify(region_of);
  const SizeField edge_length(g, kBoundarySpacing * target_h);
  const std::size_t max_points = g.points.size() + 200000;
  tri.refine(
      [&](const Vec2 &x) { return edge_length(x) * (kRadiusFactor / kBoundarySpacing); },
      kRefineQuality, max_points);
  tri.smooth(kSmoothPasses);
  auto res = tri.result();
  std::vector<BoundaryEdge> edges;
  edges.reserve(g.segments.size());
  for (std::size_t k = 0; k < g.segments.size(); ++k)
    edges.push_back({g.segments[k][0], g.segments[k][1], g.markers[k]});
  return Mesh(std::move(res.points), std::move(res.triangles), std::move(res.regions),
              std::move(edges));
}

}  // namespace

ClosedCurve ClosedCurve::circle(const Vec2 &center, double radius) {
  return ClosedCurve{center, {radius}, {0.0}};
}

double ClosedCurve::radius(double angle) const {
  double r = 0.0;
  for (std::size_t k = 0; k < cos_coeffs.size(); ++k) r += cos_coeffs[k] * std::cos(k * angle);
  for (std::size_t k = 0; k < sin_coeffs.size(); ++k) r += sin_coeffs[k] * std::sin(k * angle);
  return r;
}

Vec2 ClosedCurve::point(double angle) const {
  return center + radius(angle) * Vec2(std::cos(angle), std::sin(angle));
}

Mesh generate_interface_mesh(const Rect &bounds, const Vec2 &circle_center,
                             double circle_radius, double target_h) {
  require(circle_radius > 0.0, "circle radius must be positive");
  return generate_interface_mesh(bounds, ClosedCurve::circle(circle_center, circle_radius),
                                 target_h);
}

Mesh generate_interface_mesh(const Rect &bounds, const ClosedCurve &curve,
                             double target_h) {
  require(target_h > 0.0 && std::isfinite(target_h), "target_h must be positive");
  require(bounds.xmax > bounds.xmin && bounds.ymax > bounds.ymin, "empty bounds");
  double rmin = 1e300, rmax = 0.0;
  for (int k = 0; k < 720; ++k) {
    const double r = curve.radius(2.0 * std::numbers::pi * k / 720);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  require(rmin > 0.0, "interface curve must be star-shaped with positive radius");
  for (int k = 0; k < 720; ++k) {
    const Vec2 p = curve.point(2.0 * std::numbers::pi * k / 720);
    require(p.x() - bounds.xmin >= target_h && bounds.xmax - p.x() >= target_h &&
                p.y() - bounds.ymin >= target_h && bounds.ymax - p.y() >= target_h,
            "interface must lie strictly inside the bounds with clearance target_h");
  }

  Planar g;
  const Vec2 c00(bounds.xmin, bounds.ymin), c10(bounds.xmax, bounds.ymin);
  const Vec2 c11(bounds.xmax, bounds.ymax), c01(bounds.xmin, bounds.ymax);
  const double spacing = kBoundarySpacing * target_h;
  add_straight(g, c00, c10, spacing);
  add_straight(g, c10, c11, spacing);
  add_straight(g, c11, c01, spacing);
  add_straight(g, c01, c00, spacing);
  close_loop(g, 0, std::vector<Marker>(g.points.size(), Marker::Outer));

  const std::vector<Vec2> loop = curve_polygon(curve, spacing);
  const std::size_t first = g.points.size();
  g.points.insert(g.points.end(), loop.begin(), loop.end());
  close_loop(g, first, std::vector<Marker>(loop.size(), Marker::Shape));

  return triangulate(g, target_h, [&](const Vec2 &p) {
    return point_in_polygon(p, loop) ? kRegionInside : kRegionOutside;
  });
}

std::vector<Vec2> bridge_outline() {
  return {{0, 0}, {0, 1},  {2.5, 4}, {5, 5},   {7.5, 4}, {10, 1},
          {10, 0}, {9, 0}, {5.5, 0}, {4.5, 0}, {1, 0}};
}

std::vector<Hole> bridge_holes() {
  return {{{2.5, 1}, 0.5}, {{3.5, 3}, 0.5}, {{6.5, 3}, 0.5}, {{7.5, 1}, 0.5}};
}

namespace {

Marker bridge_marker(const Vec2 &a, const Vec2 &b) {
  if (a.y() != 0.0 || b.y() != 0.0) return Marker::Outer;
  const double x = 0.5 * (a.x() + b.x());
  if ((x > 0.0 && x < 1.0) || (x > 9.0 && x < 10.0)) return Marker::Dirichlet;
  if (x > 4.5 && x < 5.5) return Marker::NeumannLoad;
  return Marker::Outer;
}

}  // namespace

Mesh generate_bridge_mesh(std::span<const Vec2> outline, std::span<const Hole> holes,
                          double target_h) {
  require(target_h > 0.0 && std::isfinite(target_h), "target_h must be positive");
  require(outline.size() >= 3, "outline needs at least three vertices");
  const std::size_t n = outline.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      require(!segments_intersect(outline[i], outline[(i + 1) % n], outline[j],
                                  outline[(j + 1) % n]),
              "outline is self-intersecting");
    }
  for (std::size_t i = 0; i < holes.size(); ++i) {
    const Hole &h = holes[i];
    require(h.radius > 0.0, "hole radius must be positive");
    require(point_in_polygon(h.center, outline), "hole center outside the outline");
    for (std::size_t k = 0; k < n; ++k)
      require(point_segment_distance(h.center, outline[k], outline[(k + 1) % n]) >
                  h.radius,
              "hole touches the outline");
    for (std::size_t j = i + 1; j < holes.size(); ++j)
      require((h.center - holes[j].center).norm() > h.radius + holes[j].radius,
              "holes intersect");
  }

  Planar g;
  std::vector<Marker> outer_markers;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 a = outline[k], b = outline[(k + 1) % n];
    const std::size_t before = g.points.size();
    add_straight(g, a, b, kBoundarySpacing * target_h);
    for (std::size_t m = before; m < g.points.size(); ++m) {
      const Vec2 p = g.points[m];
      const Vec2 q = (m + 1 < g.points.size()) ? g.points[m + 1] : b;
      outer_markers.push_back(bridge_marker(p, q));
    }
  }
  close_loop(g, 0, outer_markers);

  std::vector<std::vector<Vec2>> hole_loops;
  for (const Hole &h : holes) {
    hole_loops.push_back(curve_polygon(ClosedCurve::circle(h.center, h.radius),
                                       kBoundarySpacing * target_h));
    const std::size_t first = g.points.size();
    g.points.insert(g.points.end(), hole_loops.back().begin(), hole_loops.back().end());
    close_loop(g, first, std::vector<Marker>(hole_loops.back().size(), Marker::Shape));
  }
  const std::vector<Vec2> outline_poly(outline.begin(), outline.end());
  return triangulate(g, target_h, [&](const Vec2 &p) {
    if (!point_in_polygon(p, outline_poly)) return -1;
    for (const auto &loop : hole_loops)
      if (point_in_polygon(p, loop)) return -1;
    return kRegionOutside;
  });
}

bool boundary_self_intersects(const Mesh &mesh) {
  const auto &edges = mesh.boundary_edges();
  const std::size_t m = edges.size();
  // Bounding-box sweep along x keeps this close to linear for polylines.
  std::vector<std::size_t> order(m);
  std::vector<double> lo(m), hi(m);
  for (std::size_t k = 0; k < m; ++k) {
    order[k] = k;
    lo[k] = std::min(mesh.node(edges[k].a).x(), mesh.node(edges[k].b).x());
    hi[k] = std::max(mesh.node(edges[k].a).x(), mesh.node(edges[k].b).x());
  }
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return lo[x] < lo[y]; });
  for (std::size_t i = 0; i < m; ++i) {
    const BoundaryEdge &e = edges[order[i]];
    for (std::size_t j = i + 1; j < m && lo[order[j]] <= hi[order[i]]; ++j) {
      const BoundaryEdge &f = edges[order[j]];
      if (segments_intersect(mesh.node(e.a), mesh.node(e.b), mesh.node(f.a),
                             mesh.node(f.b)))
        return true;
    }
  }
  return false;
}

Mesh remesh(const Mesh &mesh, double target_h) {
  require(target_h > 0.0 && std::isfinite(target_h), "target_h must be positive");
  if (boundary_self_intersects(mesh))
    throw Error(ErrorKind::Mesh, "boundary polylines self-intersect");

  std::vector<int> remap(mesh.node_count(), -1);
  Planar g;
  for (const BoundaryEdge &e : mesh.boundary_edges()) remap[e.a] = remap[e.b] = 0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    if (remap[i] == 0) {
      remap[i] = static_cast<int>(g.points.size());
      g.points.push_back(mesh.node(static_cast<int>(i)));
    }
  // Stretched segments get collinear interior points: the polylines keep
  // their nodes, length and enclosed area, and refinement next to them can
  // terminate.
  const double spacing = kBoundarySpacing * target_h;
  for (const BoundaryEdge &e : mesh.boundary_edges()) {
    const Vec2 a = mesh.node(e.a), b = mesh.node(e.b);
    const double len = (b - a).norm();
    const int pieces = len > 1.2 * spacing ? static_cast<int>(std::ceil(len / spacing)) : 1;
    int from = remap[e.a];
    for (int k = 1; k < pieces; ++k) {
      const int mid = static_cast<int>(g.points.size());
      g.points.push_back(a + (b - a) * (static_cast<double>(k) / pieces));
      g.segments.push_back({from, mid});
      g.markers.push_back(e.marker);
      from = mid;
    }
    g.segments.push_back({from, remap[e.b]});
    g.markers.push_back(e.marker);
  }

  // Regions come from the old mesh: a component keeps the label of the old
  // cell containing its sample point and is dropped when none does.
  auto region_of = [&](const Vec2 &p) {
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
      const Triangle &tri = mesh.triangle(static_cast<int>(t));
      const Vec2 &a = mesh.node(tri[0]), &b = mesh.node(tri[1]), &c = mesh.node(tri[2]);
      if (orient2d(a, b, p) >= 0 && orient2d(b, c, p) >= 0 && orient2d(c, a, p) >= 0)
        return mesh.cell_region()[t];
    }
    return -1;
  };
  return triangulate(g, target_h, region_of);
}

}  // namespace shapeflow
