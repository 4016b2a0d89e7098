#include "triangulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <utility>

#include "shapeflow/error.hpp"

namespace shapeflow::detail {

namespace {

constexpr int next(int i) { return (i + 1) % 3; }
constexpr int prev(int i) { return (i + 2) % 3; }

bool properly_cross(const Vec2 &a, const Vec2 &b, const Vec2 &c, const Vec2 &d) {
  const double o1 = orient2d(a, b, c), o2 = orient2d(a, b, d);
  const double o3 = orient2d(c, d, a), o4 = orient2d(c, d, b);
  return ((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) &&
         ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0));
}

// Strictly inside the circumcircle, with a relative tolerance so that
// cocircular inputs (nodes on a discretized circle) do not cycle flips.
bool in_circle_strict(const Vec2 &a, const Vec2 &b, const Vec2 &c, const Vec2 &d) {
  const double scale = std::max({(a - d).squaredNorm(), (b - d).squaredNorm(),
                                 (c - d).squaredNorm()});
  return incircle(a, b, c, d) > 1e-12 * scale * scale;
}

}  // namespace

std::uint64_t Triangulator::edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

bool Triangulator::is_constrained(int a, int b) const {
  return constrained_.count(edge_key(a, b)) != 0;
}

int Triangulator::edge_index(const Tri &t, int a, int b) const {
  for (int i = 0; i < 3; ++i) {
    const int x = t.v[next(i)], y = t.v[prev(i)];
    if ((x == a && y == b) || (x == b && y == a)) return i;
  }
  return -1;
}

void Triangulator::replace_neighbor(int tri, int old_nb, int new_nb) {
  if (tri < 0) return;
  for (int &n : tris_[tri].n)
    if (n == old_nb) {
      n = new_nb;
      return;
    }
}

int Triangulator::new_triangle(int a, int b, int c) {
  Tri t;
  t.v = {a, b, c};
  t.n = {-1, -1, -1};
  if (!free_.empty()) {
    const int id = free_.back();
    free_.pop_back();
    tris_[id] = t;
    return id;
  }
  tris_.push_back(t);
  return static_cast<int>(tris_.size()) - 1;
}

Triangulator::Triangulator(std::vector<Vec2> points,
                           const std::vector<std::array<int, 2>> &segments)
    : pts_(std::move(points)) {
  input_count_ = pts_.size();
  require(input_count_ >= 3, "triangulation needs at least three points",
          ErrorKind::Mesh);

  Vec2 lo = pts_.front(), hi = pts_.front();
  for (const Vec2 &p : pts_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 c = 0.5 * (lo + hi);
  const double d = std::max((hi - lo).maxCoeff(), 1e-12);
  super_begin_ = static_cast<int>(pts_.size());
  pts_.emplace_back(c.x() - 30.0 * d, c.y() - 15.0 * d);
  pts_.emplace_back(c.x() + 30.0 * d, c.y() - 15.0 * d);
  pts_.emplace_back(c.x(), c.y() + 30.0 * d);
  on_segment_.assign(pts_.size(), 0);
  last_ = new_triangle(super_begin_, super_begin_ + 1, super_begin_ + 2);

  for (int i = 0; i < static_cast<int>(input_count_); ++i)
    insert_point(i, last_, false, false);

  for (const auto &s : segments) {
    require(s[0] != s[1] && s[0] >= 0 && s[1] >= 0 &&
                s[0] < static_cast<int>(input_count_) &&
                s[1] < static_cast<int>(input_count_),
            "invalid constrained segment", ErrorKind::Mesh);
    constrained_.insert(edge_key(s[0], s[1]));
    on_segment_[s[0]] = on_segment_[s[1]] = 1;
  }
  for (const auto &s : segments) recover_segment(s[0], s[1]);
  legalize_all();
}

int Triangulator::locate(const Vec2 &p, int start) const {
  int t = start;
  if (t < 0 || t >= static_cast<int>(tris_.size()) ||
      tris_[t].state == State::Deleted) {
    t = 0;
    while (tris_[t].state == State::Deleted) ++t;
  }
  const std::size_t cap = 4 * tris_.size() + 16;
  for (std::size_t step = 0; step < cap && t >= 0; ++step) {
    const Tri &tri = tris_[t];
    int crossing = -1;
    for (int k = 0; k < 3; ++k) {
      const int i = static_cast<int>((k + step) % 3);
      if (orient2d(pts_[tri.v[next(i)]], pts_[tri.v[prev(i)]], p) < 0.0) {
        crossing = i;
        break;
      }
    }
    if (crossing < 0) return t;
    t = tri.n[crossing];
  }
  for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
    const Tri &tri = tris_[i];
    if (tri.state == State::Deleted) continue;
    if (orient2d(pts_[tri.v[0]], pts_[tri.v[1]], p) >= 0 &&
        orient2d(pts_[tri.v[1]], pts_[tri.v[2]], p) >= 0 &&
        orient2d(pts_[tri.v[2]], pts_[tri.v[0]], p) >= 0)
      return i;
  }
  throw Error(ErrorKind::Mesh, "point location failed");
}

int Triangulator::locate_in_domain(const Vec2 &p, int start) const {
  int t = start;
  const std::size_t cap = 4 * tris_.size() + 16;
  for (std::size_t step = 0; step < cap; ++step) {
    const Tri &tri = tris_[t];
    int crossing = -1;
    for (int k = 0; k < 3; ++k) {
      const int i = static_cast<int>((k + step) % 3);
      if (orient2d(pts_[tri.v[next(i)]], pts_[tri.v[prev(i)]], p) < 0.0) {
        crossing = i;
        break;
      }
    }
    if (crossing < 0) return t;
    const int nb = tri.n[crossing];
    if (nb < 0 || tris_[nb].state != State::Active ||
        is_constrained(tri.v[next(crossing)], tri.v[prev(crossing)]))
      return -1;
    t = nb;
  }
  return -1;
}

bool Triangulator::insert_point(int vid, int start, bool constrained,
                                bool reject_encroaching) {
  const Vec2 p = pts_[vid];
  const int t0 = constrained ? locate_in_domain(p, start) : locate(p, start);
  if (t0 < 0) return false;
  for (int k = 0; k < 3; ++k)
    if (pts_[tris_[t0].v[k]] == p) {
      if (constrained) return false;
      throw Error(ErrorKind::Mesh, "duplicate point in triangulation input");
    }

  auto may_cross = [&](int t, int i) {
    const int nb = tris_[t].n[i];
    if (nb < 0) return false;
    if (!constrained) return true;
    return tris_[nb].state == State::Active &&
           !is_constrained(tris_[t].v[next(i)], tris_[t].v[prev(i)]);
  };

  std::vector<int> cavity{t0};
  std::vector<std::uint8_t> mark(tris_.size(), 0);
  mark[t0] = 1;
  for (std::size_t k = 0; k < cavity.size(); ++k) {
    const int t = cavity[k];
    for (int i = 0; i < 3; ++i) {
      if (!may_cross(t, i)) continue;
      const int nb = tris_[t].n[i];
      if (mark[nb]) continue;
      const Tri &o = tris_[nb];
      if (in_circle_strict(pts_[o.v[0]], pts_[o.v[1]], pts_[o.v[2]], p)) {
        mark[nb] = 1;
        cavity.push_back(nb);
      }
    }
  }

  struct Rim {
    int u, v, outer, owner;
  };
  std::vector<Rim> rim;
  // Shrink the cavity until it is star-shaped with respect to p.
  for (int guard = 0;; ++guard) {
    if (guard > 1000) throw Error(ErrorKind::Mesh, "cavity repair failed");
    rim.clear();
    int offending = -1, grow = -1;
    for (const int t : cavity) {
      for (int i = 0; i < 3; ++i) {
        const int nb = tris_[t].n[i];
        if (nb >= 0 && mark[nb]) continue;
        const int u = tris_[t].v[next(i)], v = tris_[t].v[prev(i)];
        if (orient2d(pts_[u], pts_[v], p) <= 0.0) {
          if (t != t0) {
            offending = t;
          } else if (may_cross(t, i)) {
            grow = nb;
          } else {
            if (constrained) return false;
            throw Error(ErrorKind::Mesh, "degenerate point insertion");
          }
          break;
        }
        rim.push_back({u, v, nb, t});
      }
      if (offending >= 0 || grow >= 0) break;
    }
    if (grow >= 0) {
      mark[grow] = 1;
      cavity.push_back(grow);
      continue;
    }
    if (offending < 0) break;
    mark[offending] = 0;
    cavity.erase(std::find(cavity.begin(), cavity.end(), offending));
  }

  if (reject_encroaching) {
    for (const Rim &r : rim) {
      if (!is_constrained(r.u, r.v)) continue;
      const Vec2 mid = 0.5 * (pts_[r.u] + pts_[r.v]);
      if ((p - mid).norm() < 0.5 * (pts_[r.u] - pts_[r.v]).norm()) return false;
    }
  }

  const int region = tris_[t0].region;
  for (const int t : cavity) {
    tris_[t].state = State::Deleted;
    free_.push_back(t);
  }
  std::vector<std::pair<int, int>> by_start, by_end;
  by_start.reserve(rim.size());
  by_end.reserve(rim.size());
  std::vector<int> created;
  created.reserve(rim.size());
  for (const Rim &r : rim) {
    const int id = new_triangle(r.u, r.v, vid);
    tris_[id].region = region;
    tris_[id].n[2] = r.outer;
    if (r.outer >= 0) tris_[r.outer].n[edge_index(tris_[r.outer], r.u, r.v)] = id;
    by_start.emplace_back(r.u, id);
    by_end.emplace_back(r.v, id);
    created.push_back(id);
  }
  auto find = [](const std::vector<std::pair<int, int>> &list, int key) {
    for (const auto &[k, id] : list)
      if (k == key) return id;
    return -1;
  };
  for (const int id : created) {
    Tri &t = tris_[id];
    t.n[0] = find(by_start, t.v[1]);  // edge (v, p)
    t.n[1] = find(by_end, t.v[0]);    // edge (p, u)
  }
  last_ = created.front();
  return true;
}

bool Triangulator::has_edge(int a, int b) const {
  for (const Tri &t : tris_) {
    if (t.state == State::Deleted) continue;
    if (edge_index(t, a, b) >= 0) return true;
  }
  return false;
}

bool Triangulator::flip(int t, int i) {
  const int u = tris_[t].n[i];
  if (u < 0) return false;
  const int a = tris_[t].v[i], b = tris_[t].v[next(i)], c = tris_[t].v[prev(i)];
  const int j = edge_index(tris_[u], b, c);
  const int d = tris_[u].v[j];
  if (orient2d(pts_[a], pts_[b], pts_[d]) <= 0.0 ||
      orient2d(pts_[a], pts_[d], pts_[c]) <= 0.0)
    return false;
  // u = (d, c, b) starting from j
  const int n_ab = tris_[t].n[prev(i)];
  const int n_ca = tris_[t].n[next(i)];
  const int n_bd = tris_[u].n[next(j)];  // opposite c
  const int n_dc = tris_[u].n[prev(j)];  // opposite b
  Tri &tt = tris_[t];
  tt.v = {a, b, d};
  tt.n = {n_bd, u, n_ab};
  Tri &uu = tris_[u];
  uu.v = {a, d, c};
  uu.n = {n_dc, n_ca, t};
  replace_neighbor(n_bd, u, t);
  replace_neighbor(n_ca, t, u);
  return true;
}

void Triangulator::recover_segment(int a, int b) {
  if (has_edge(a, b)) return;
  const Vec2 &pa = pts_[a], &pb = pts_[b];
  for (int v = 0; v < static_cast<int>(input_count_); ++v) {
    if (v == a || v == b) continue;
    if (orient2d(pa, pb, pts_[v]) == 0.0 &&
        point_segment_distance(pts_[v], pa, pb) == 0.0)
      throw Error(ErrorKind::Mesh, "vertex lies on a constrained segment");
  }
  std::deque<std::pair<int, int>> crossing;
  for (const Tri &t : tris_) {
    if (t.state == State::Deleted) continue;
    for (int i = 0; i < 3; ++i) {
      const int x = t.v[next(i)], y = t.v[prev(i)];
      if (x < y && properly_cross(pa, pb, pts_[x], pts_[y]))
        crossing.emplace_back(x, y);
    }
  }
  std::size_t guard = 0;
  const std::size_t cap = 100 * (crossing.size() + 10) * (crossing.size() + 10);
  while (!crossing.empty()) {
    if (++guard > cap)
      throw Error(ErrorKind::Mesh, "constrained segment recovery failed");
    const auto [x, y] = crossing.front();
    crossing.pop_front();
    int t = -1, i = -1;
    for (int k = 0; k < static_cast<int>(tris_.size()) && t < 0; ++k) {
      if (tris_[k].state == State::Deleted) continue;
      const int e = edge_index(tris_[k], x, y);
      if (e >= 0) {
        t = k;
        i = e;
      }
    }
    if (t < 0) continue;
    if (is_constrained(x, y))
      throw Error(ErrorKind::Mesh, "constrained segments intersect");
    if (!flip(t, i)) {
      crossing.emplace_back(x, y);
      continue;
    }
    // The new diagonal joins v[0] of t and v[1] of t.
    const int p = tris_[t].v[0], q = tris_[t].v[2];
    if (properly_cross(pa, pb, pts_[p], pts_[q])) crossing.emplace_back(p, q);
  }
}

void Triangulator::legalize_all() {
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool changed = false;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      if (tris_[t].state != State::Active) continue;
      for (int i = 0; i < 3; ++i) {
        const int u = tris_[t].n[i];
        if (u < 0 || tris_[u].state != State::Active) continue;
        const int b = tris_[t].v[next(i)], c = tris_[t].v[prev(i)];
        if (is_constrained(b, c)) continue;
        const int d = tris_[u].v[edge_index(tris_[u], b, c)];
        const Tri &tt = tris_[t];
        if (in_circle_strict(pts_[tt.v[0]], pts_[tt.v[1]], pts_[tt.v[2]], pts_[d]) &&
            flip(t, i)) {
          changed = true;
          break;
        }
      }
    }
    if (!changed) return;
  }
}

void Triangulator::classify(const RegionFn &region_of) {
  std::vector<int> component(tris_.size(), -1);
  int count = 0;
  for (int s = 0; s < static_cast<int>(tris_.size()); ++s) {
    if (tris_[s].state == State::Deleted || component[s] >= 0) continue;
    std::vector<int> members{s};
    component[s] = count;
    bool touches_super = false;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Tri &t = tris_[members[k]];
      for (int i = 0; i < 3; ++i) {
        if (is_super(t.v[i])) touches_super = true;
        const int nb = t.n[i];
        if (nb < 0 || component[nb] >= 0) continue;
        if (is_constrained(t.v[next(i)], t.v[prev(i)])) continue;
        component[nb] = count;
        members.push_back(nb);
      }
    }
    int region = -1;
    if (!touches_super) {
      // Sample at the centroid of the largest member for robustness.
      int best = members.front();
      double best_area = -1.0;
      for (const int m : members) {
        const Tri &t = tris_[m];
        const double a = orient2d(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]]);
        if (a > best_area) {
          best_area = a;
          best = m;
        }
      }
      const Tri &t = tris_[best];
      region = region_of((pts_[t.v[0]] + pts_[t.v[1]] + pts_[t.v[2]]) / 3.0);
    }
    for (const int m : members) {
      tris_[m].state = region < 0 ? State::Dropped : State::Active;
      tris_[m].region = region;
    }
    ++count;
  }
  classified_ = true;
}

void Triangulator::refine(const SizeFn &size, double min_quality,
                          std::size_t max_points) {
  require(classified_, "refine requires classify", ErrorKind::Mesh);
  std::set<std::array<int, 3>> rejected;
  for (int pass = 0; pass < 200; ++pass) {
    struct Candidate {
      double score;
      int tri;
      std::array<int, 3> v;
    };
    std::vector<Candidate> bad;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      const Tri &tri = tris_[t];
      if (tri.state != State::Active) continue;
      const Vec2 &a = pts_[tri.v[0]], &b = pts_[tri.v[1]], &c = pts_[tri.v[2]];
      const double q = triangle_quality(a, b, c);
      const double r = circumradius(a, b, c);
      // Segments are never split, so a triangle resting on a segment longer
      // than the local size is allowed the circumradius of the equilateral
      // triangle on it; otherwise refinement next to it never terminates.
      double h = size((a + b + c) / 3.0);
      for (int i = 0; i < 3; ++i) {
        const int u = tri.v[next(i)], w = tri.v[prev(i)];
        if (is_constrained(u, w)) h = std::max(h, (pts_[u] - pts_[w]).norm() / std::sqrt(3.0));
      }
      const double ratio = r / h;
      if (q < min_quality || ratio > 1.0) {
        std::array<int, 3> key = tri.v;
        std::sort(key.begin(), key.end());
        if (rejected.count(key)) continue;
        // Worst quality first, then largest relative size.
        const double score = q < min_quality ? q - 10.0 : -ratio;
        bad.push_back({score, t, key});
      }
    }
    if (bad.empty()) return;
    std::stable_sort(bad.begin(), bad.end(),
                     [](const Candidate &x, const Candidate &y) {
                       return x.score < y.score;
                     });
    std::size_t inserted = 0;
    for (const Candidate &cand : bad) {
      if (pts_.size() >= max_points + 3) return;
      const Tri &tri = tris_[cand.tri];
      std::array<int, 3> now = tri.v;
      std::sort(now.begin(), now.end());
      if (tri.state != State::Active || now != cand.v) continue;
      const Vec2 a = pts_[tri.v[0]], b = pts_[tri.v[1]], c = pts_[tri.v[2]];
      Vec2 target = circumcenter(a, b, c);
      if (!std::isfinite(target.x()) || !std::isfinite(target.y())) {
        rejected.insert(cand.v);
        continue;
      }
      pts_.push_back(target);
      on_segment_.push_back(0);
      const int vid = static_cast<int>(pts_.size()) - 1;
      // A rejected circumcenter lies across a segment or encroaches on one.
      // Segments are never split, so the triangle is left as it is; interior
      // fallbacks next to segments feed an unbounded insertion cascade.
      const bool ok = insert_point(vid, cand.tri, true, true);
      if (ok) {
        ++inserted;
      } else {
        pts_.pop_back();
        on_segment_.pop_back();
        rejected.insert(cand.v);
      }
    }
    if (inserted == 0) return;
  }
}

std::vector<std::vector<int>> Triangulator::vertex_triangles() const {
  std::vector<std::vector<int>> incident(pts_.size());
  for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
    if (tris_[t].state != State::Active) continue;
    for (const int v : tris_[t].v) incident[v].push_back(t);
  }
  return incident;
}

void Triangulator::smooth(int passes) {
  for (int pass = 0; pass < passes; ++pass) {
    const auto incident = vertex_triangles();
    for (int v = super_begin_ + 3; v < static_cast<int>(pts_.size()); ++v) {
      const auto &ring_tris = incident[v];
      if (ring_tris.empty() || on_segment_[v]) continue;
      Vec2 sum = Vec2::Zero();
      int count = 0;
      double old_min = 1.0;
      for (const int t : ring_tris) {
        const Tri &tri = tris_[t];
        for (const int w : tri.v)
          if (w != v) {
            sum += pts_[w];
            ++count;
          }
        old_min = std::min(old_min, triangle_quality(pts_[tri.v[0]], pts_[tri.v[1]],
                                                     pts_[tri.v[2]]));
      }
      const Vec2 old_pos = pts_[v];
      const Vec2 target = sum / count;  // each ring vertex counted twice
      for (const double w : {1.0, 0.5, 0.25}) {
        pts_[v] = old_pos + w * (target - old_pos);
        double new_min = 1.0;
        bool valid = true;
        for (const int t : ring_tris) {
          const Tri &tri = tris_[t];
          const Vec2 &a = pts_[tri.v[0]], &b = pts_[tri.v[1]], &c = pts_[tri.v[2]];
          if (orient2d(a, b, c) <= 0.0) {
            valid = false;
            break;
          }
          new_min = std::min(new_min, triangle_quality(a, b, c));
        }
        if (valid && new_min >= old_min) break;
        pts_[v] = old_pos;
      }
    }
    legalize_all();
  }
}

Triangulator::Result Triangulator::result() const {
  Result out;
  std::vector<int> remap(pts_.size(), -1);
  std::vector<std::uint8_t> used(pts_.size(), 0);
  for (const Tri &t : tris_)
    if (t.state == State::Active)
      for (const int v : t.v) used[v] = 1;
  for (std::size_t i = 0; i < input_count_; ++i) {
    require(used[i] != 0, "input point not covered by the triangulation",
            ErrorKind::Mesh);
    remap[i] = static_cast<int>(out.points.size());
    out.points.push_back(pts_[i]);
  }
  for (std::size_t i = super_begin_ + 3; i < pts_.size(); ++i) {
    if (!used[i]) continue;
    remap[i] = static_cast<int>(out.points.size());
    out.points.push_back(pts_[i]);
  }
  for (const Tri &t : tris_) {
    if (t.state != State::Active) continue;
    for (const int v : t.v)
      require(remap[v] >= 0, "domain triangle touches the bounding triangle",
              ErrorKind::Mesh);
    out.triangles.push_back({remap[t.v[0]], remap[t.v[1]], remap[t.v[2]]});
    out.regions.push_back(t.region);
  }
  return out;
}

}  // namespace shapeflow::detail
