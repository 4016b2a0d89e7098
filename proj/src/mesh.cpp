#include "shapeflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "shapeflow/error.hpp"

namespace shapeflow {

std::string to_string(Marker marker) {
  switch (marker) {
    case Marker::Outer: return "outer";
    case Marker::Dirichlet: return "dirichlet";
    case Marker::NeumannLoad: return "neumann";
    case Marker::Shape: return "shape";
  }
  return "outer";
}

Marker marker_from_string(const std::string &name) {
  if (name == "outer") return Marker::Outer;
  if (name == "dirichlet") return Marker::Dirichlet;
  if (name == "neumann") return Marker::NeumannLoad;
  if (name == "shape") return Marker::Shape;
  throw Error(ErrorKind::Io, "unknown boundary marker '" + name + "'");
}

Mesh::Mesh(std::vector<Vec2> nodes, std::vector<Triangle> triangles,
           std::vector<int> cell_region, std::vector<BoundaryEdge> boundary_edges)
    : nodes_(std::move(nodes)),
      triangles_(std::move(triangles)),
      cell_region_(std::move(cell_region)),
      boundary_(std::move(boundary_edges)) {
  node_is_shape_.assign(nodes_.size(), 0);
  for (const BoundaryEdge &e : boundary_)
    if (e.marker == Marker::Shape && e.a >= 0 && e.b >= 0 &&
        e.a < static_cast<int>(nodes_.size()) && e.b < static_cast<int>(nodes_.size()))
      node_is_shape_[e.a] = node_is_shape_[e.b] = 1;
  validate();
}

void Mesh::validate() const {
  const int n = static_cast<int>(nodes_.size());
  require(!triangles_.empty(), "mesh has no triangles", ErrorKind::Mesh);
  require(cell_region_.size() == triangles_.size(),
          "cell_region size does not match triangle count", ErrorKind::Mesh);
  for (const Vec2 &p : nodes_)
    require(std::isfinite(p.x()) && std::isfinite(p.y()), "non-finite node",
            ErrorKind::Mesh);

  std::map<std::pair<int, int>, int> edge_use;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const Triangle &tri = triangles_[t];
    for (const int v : tri)
      require(v >= 0 && v < n, "triangle index out of range", ErrorKind::Mesh);
    require(tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2],
            "triangle with repeated vertex", ErrorKind::Mesh);
    const double a = signed_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
    if (!(a > 0.0)) throw InvertedElement(static_cast<int>(t), a);
    for (int i = 0; i < 3; ++i) {
      int u = tri[i], v = tri[(i + 1) % 3];
      if (u > v) std::swap(u, v);
      ++edge_use[{u, v}];
    }
  }
  for (const auto &[edge, count] : edge_use)
    require(count <= 2, "edge shared by more than two triangles", ErrorKind::Mesh);

  std::set<std::pair<int, int>> marked;
  std::vector<int> degree(n, 0);
  for (const BoundaryEdge &e : boundary_) {
    require(e.a >= 0 && e.a < n && e.b >= 0 && e.b < n && e.a != e.b,
            "boundary edge index out of range", ErrorKind::Mesh);
    const std::pair<int, int> key = std::minmax(e.a, e.b);
    require(marked.insert(key).second, "duplicated boundary edge", ErrorKind::Mesh);
    const auto it = edge_use.find(key);
    require(it != edge_use.end(), "boundary edge is not a triangle edge",
            ErrorKind::Mesh);
    if (e.marker != Marker::Shape)
      require(it->second == 1, "non-shape marked edge is interior", ErrorKind::Mesh);
    ++degree[e.a];
    ++degree[e.b];
  }
  for (const auto &[edge, count] : edge_use)
    if (count == 1)
      require(marked.count(edge) != 0, "unmarked domain boundary edge",
              ErrorKind::Mesh);
  for (int v = 0; v < n; ++v)
    require(degree[v] == 0 || degree[v] == 2,
            "marked edges do not form closed loops", ErrorKind::Mesh);
}

double Mesh::triangle_area(int t) const {
  const Triangle &tri = triangles_[t];
  return signed_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
}

bool Mesh::has_marker(Marker marker) const {
  return std::any_of(boundary_.begin(), boundary_.end(),
                     [&](const BoundaryEdge &e) { return e.marker == marker; });
}

std::vector<int> Mesh::nodes_with_marker(Marker marker) const {
  std::vector<int> out;
  for (const BoundaryEdge &e : boundary_)
    if (e.marker == marker) {
      out.push_back(e.a);
      out.push_back(e.b);
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> Mesh::fixed_boundary_nodes() const {
  std::vector<int> out;
  for (const BoundaryEdge &e : boundary_)
    if (e.marker != Marker::Shape) {
      out.push_back(e.a);
      out.push_back(e.b);
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> Mesh::shape_nodes() const { return nodes_with_marker(Marker::Shape); }

double Mesh::area() const {
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) total += triangle_area(t);
  return total;
}

double Mesh::marker_length(Marker marker) const {
  double total = 0.0;
  for (const BoundaryEdge &e : boundary_)
    if (e.marker == marker) total += (nodes_[e.a] - nodes_[e.b]).norm();
  return total;
}

Mesh Mesh::with_nodes(std::vector<Vec2> nodes) const {
  require(nodes.size() == nodes_.size(), "node count mismatch");
  return Mesh(std::move(nodes), triangles_, cell_region_, boundary_);
}

double mesh_quality(const Mesh &mesh) {
  require(mesh.triangle_count() > 0, "mesh_quality of an empty mesh");
  double q = 1.0;
  for (const Triangle &t : mesh.triangles())
    q = std::min(q, triangle_quality(mesh.node(t[0]), mesh.node(t[1]), mesh.node(t[2])));
  return q;
}

Mesh deform(const Mesh &mesh, std::span<const double> field, double t) {
  require(field.size() == 2 * mesh.node_count(),
          "deformation field must have two components per node");
  std::vector<Vec2> moved(mesh.node_count());
  for (std::size_t i = 0; i < moved.size(); ++i)
    moved[i] = mesh.node(static_cast<int>(i)) +
               t * Vec2(field[2 * i], field[2 * i + 1]);
  for (std::size_t k = 0; k < mesh.triangle_count(); ++k) {
    const Triangle &tri = mesh.triangle(static_cast<int>(k));
    const double a = signed_area(moved[tri[0]], moved[tri[1]], moved[tri[2]]);
    if (!(a > 0.0)) throw InvertedElement(static_cast<int>(k), a);
  }
  return mesh.with_nodes(std::move(moved));
}

}  // namespace shapeflow
