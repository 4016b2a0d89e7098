#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shapeflow/geometry.hpp"

namespace shapeflow {

enum class Marker : std::uint8_t { Outer, Dirichlet, NeumannLoad, Shape };

std::string to_string(Marker marker);
Marker marker_from_string(const std::string &name);

struct BoundaryEdge {
  int a;
  int b;
  Marker marker;

  bool operator==(const BoundaryEdge &) const = default;
};

using Triangle = std::array<int, 3>;

/// Region labels used by the generators.
inline constexpr int kRegionOutside = 0;
inline constexpr int kRegionInside = 1;

/// Triangular mesh of a planar domain with boundary and interface markers.
///
/// The constructor validates the topology: positively oriented triangles,
/// in-range indices, marked edges that are actual triangle edges, every
/// domain-boundary edge marked, and marked edges forming closed loops.
/// Shape-marked edges may be interior (an interface) or lie on the domain
/// boundary (a hole).
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Vec2> nodes, std::vector<Triangle> triangles,
       std::vector<int> cell_region, std::vector<BoundaryEdge> boundary_edges);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }

  const std::vector<Vec2> &nodes() const { return nodes_; }
  const std::vector<Triangle> &triangles() const { return triangles_; }
  const std::vector<int> &cell_region() const { return cell_region_; }
  const std::vector<BoundaryEdge> &boundary_edges() const { return boundary_; }
  const std::vector<std::uint8_t> &node_is_shape() const { return node_is_shape_; }

  const Vec2 &node(int i) const { return nodes_[i]; }
  const Triangle &triangle(int t) const { return triangles_[t]; }
  double triangle_area(int t) const;

  bool has_marker(Marker marker) const;
  /// Nodes touched by an edge with the given marker, ascending.
  std::vector<int> nodes_with_marker(Marker marker) const;
  /// Nodes on marked edges that are not shape edges; deformation fields
  /// vanish there.
  std::vector<int> fixed_boundary_nodes() const;
  std::vector<int> shape_nodes() const;

  double area() const;
  double marker_length(Marker marker) const;

  /// Same topology and markers with new node positions (validated).
  Mesh with_nodes(std::vector<Vec2> nodes) const;

  bool operator==(const Mesh &) const = default;

 private:
  void validate() const;

  std::vector<Vec2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<int> cell_region_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<std::uint8_t> node_is_shape_;
};

double mesh_quality(const Mesh &mesh);

/// Retraction x -> x + t * field(x). `field` holds interleaved (x, y)
/// components per node. Throws InvertedElement instead of returning a
/// tangled mesh.
Mesh deform(const Mesh &mesh, std::span<const double> field, double t);

/// Closed curve used by the interface generator, parametrized on [0, 2 pi).
struct ClosedCurve {
  Vec2 center;
  /// Radius as a function of the polar angle.
  std::vector<double> cos_coeffs;  // r(th) = sum_k c_k cos(k th) + s_k sin(k th)
  std::vector<double> sin_coeffs;

  static ClosedCurve circle(const Vec2 &center, double radius);
  double radius(double angle) const;
  Vec2 point(double angle) const;
};

struct Rect {
  double xmin, xmax, ymin, ymax;
};

Mesh generate_interface_mesh(const Rect &bounds, const Vec2 &circle_center,
                             double circle_radius, double target_h);
/// Star-shaped interface variant used for ground-truth reference meshes.
Mesh generate_interface_mesh(const Rect &bounds, const ClosedCurve &curve,
                             double target_h);

struct Hole {
  Vec2 center;
  double radius;
};

/// Polygon with circular holes. Outline edges on y = 0 are marked
/// DIRICHLET on [0,1] and [9,10], NEUMANN_LOAD on [4.5,5.5] and OUTER
/// elsewhere; hole boundaries are SHAPE.
Mesh generate_bridge_mesh(std::span<const Vec2> outline,
                          std::span<const Hole> holes, double target_h);

/// Outline and holes of the informed bridge topology.
std::vector<Vec2> bridge_outline();
std::vector<Hole> bridge_holes();

/// Re-triangulates the interior keeping every marked polyline and its node
/// positions bit-for-bit. Marked nodes keep their relative order at the
/// front of the node list. Segments stretched beyond 1.2 times the generator
/// spacing receive extra collinear nodes, placed after the old marked nodes.
/// Throws ErrorKind::Mesh on self-intersecting boundary polylines.
Mesh remesh(const Mesh &mesh, double target_h);

/// True if any two marked edges intersect away from shared endpoints.
bool boundary_self_intersects(const Mesh &mesh);

void write_mesh(const Mesh &mesh, const std::filesystem::path &path);
Mesh read_mesh(const std::filesystem::path &path);

/// Named per-node field appended to the mesh text format.
struct NamedField {
  std::string name;
  int arity;  // 1 or 2
  std::vector<double> values;
};

void write_mesh(const Mesh &mesh, std::span<const NamedField> fields,
                const std::filesystem::path &path);
/// Reads the mesh and any trailing field sections.
Mesh read_mesh(const std::filesystem::path &path, std::vector<NamedField> &fields);

}  // namespace shapeflow
