#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <unordered_set>
#include <vector>

#include "shapeflow/geometry.hpp"
#include "shapeflow/mesh.hpp"

namespace shapeflow::detail {

/// Constrained Delaunay triangulation with Steiner refinement.
///
/// Input points keep their indices; segments between them are never split,
/// so every constrained polyline survives with its exact node positions.
class Triangulator {
 public:
  using RegionFn = std::function<int(const Vec2 &)>;  // < 0 drops a component
  using SizeFn = std::function<double(const Vec2 &)>;

  Triangulator(std::vector<Vec2> points,
               const std::vector<std::array<int, 2>> &segments);

  /// Labels each connected component (across unconstrained edges) by
  /// evaluating `region_of` at an interior sample point.
  void classify(const RegionFn &region_of);

  /// Inserts circumcenters of triangles that are too large for `size` or
  /// whose quality is below `min_quality`.
  void refine(const SizeFn &size, double min_quality, std::size_t max_points);

  /// Quality-guarded Laplacian smoothing of Steiner points followed by
  /// Delaunay edge flips.
  void smooth(int passes);

  struct Result {
    std::vector<Vec2> points;  // input points first, in input order
    std::vector<Triangle> triangles;
    std::vector<int> regions;
  };
  Result result() const;

  std::size_t input_point_count() const { return input_count_; }

 private:
  enum class State : std::uint8_t { Deleted, Active, Dropped };

  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> n;  // neighbor opposite v[i], -1 on hull
    State state = State::Active;
    int region = 0;
  };

  static std::uint64_t edge_key(int a, int b);
  bool is_constrained(int a, int b) const;
  bool is_super(int v) const { return v >= super_begin_; }
  int edge_index(const Tri &t, int a, int b) const;  // index opposite edge (a,b)
  void replace_neighbor(int tri, int old_nb, int new_nb);

  int new_triangle(int a, int b, int c);
  int locate(const Vec2 &p, int start) const;
  /// Walk that refuses to cross constraints or leave the domain; -1 if so.
  int locate_in_domain(const Vec2 &p, int start) const;
  /// Bowyer-Watson insertion; returns false (and changes nothing) when the
  /// point would encroach a constrained segment and `reject_encroaching`.
  bool insert_point(int vid, int start, bool constrained,
                    bool reject_encroaching);
  void recover_segment(int a, int b);
  bool has_edge(int a, int b) const;
  bool flip(int t, int i);
  void legalize_all();
  std::vector<std::vector<int>> vertex_triangles() const;

  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> free_;
  std::unordered_set<std::uint64_t> constrained_;
  std::vector<std::uint8_t> on_segment_;
  std::size_t input_count_ = 0;
  int super_begin_ = 0;
  int last_ = 0;
  bool classified_ = false;
};

}  // namespace shapeflow::detail
