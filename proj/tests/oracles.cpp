#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "shapeflow/geometry.hpp"

namespace oracle {

using namespace shapeflow;

Mesh unit_square(int n) {
  std::vector<Vec2> nodes;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) nodes.emplace_back(double(i) / n, double(j) / n);
  std::vector<Triangle> tris;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  std::vector<BoundaryEdge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({id(i, 0), id(i + 1, 0), Marker::Outer});
  for (int j = 0; j < n; ++j) edges.push_back({id(n, j), id(n, j + 1), Marker::Outer});
  for (int i = n; i > 0; --i) edges.push_back({id(i, n), id(i - 1, n), Marker::Outer});
  for (int j = n; j > 0; --j) edges.push_back({id(0, j), id(0, j - 1), Marker::Outer});
  std::vector<int> regions(tris.size(), kRegionOutside);
  return Mesh(std::move(nodes), std::move(tris), std::move(regions), std::move(edges));
}

Mesh single_triangle(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
  return Mesh({a, b, c}, {{0, 1, 2}}, {kRegionOutside},
              {{0, 1, Marker::Outer}, {1, 2, Marker::Outer}, {2, 0, Marker::Outer}});
}

Mesh small_interface_mesh() {
  return generate_interface_mesh({-1.0, 0.0, -0.5, 0.5}, Vec2(-0.5, 0.0), 0.2, 0.16);
}

double quality(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
  const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
  const double area = 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
  if (area == 0.0) return 0.0;
  const double inradius = area / (0.5 * (la + lb + lc));
  const double circumradius = la * lb * lc / (4.0 * area);
  return 2.0 * inradius / circumradius;
}

Eigen::Matrix3d p1_mass(double area) {
  Eigen::Matrix3d m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return area / 12.0 * m;
}

namespace {

double area_of(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
  return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

// Barycentric gradients from the inverse of the affine interpolation matrix.
std::array<Vec2, 3> barycentric_gradients(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
  Eigen::Matrix3d v;
  v << 1, a.x(), a.y(), 1, b.x(), b.y(), 1, c.x(), c.y();
  const Eigen::Matrix3d inv = v.inverse();  // column k: coefficients of phi_k
  return {Vec2(inv(1, 0), inv(2, 0)), Vec2(inv(1, 1), inv(2, 1)), Vec2(inv(1, 2), inv(2, 2))};
}

std::array<Vec2, 3> corners(const Mesh &mesh, int t) {
  const Triangle &tri = mesh.triangle(t);
  return {mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])};
}

}  // namespace

Eigen::Matrix3d p1_stiffness(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
  const std::array<Vec2, 3> p{a, b, c};
  const double area = area_of(a, b, c);
  Eigen::Vector3d bx, cy;
  for (int i = 0; i < 3; ++i) {
    const Vec2 &pj = p[(i + 1) % 3], &pk = p[(i + 2) % 3];
    bx[i] = pj.y() - pk.y();
    cy[i] = pk.x() - pj.x();
  }
  return (bx * bx.transpose() + cy * cy.transpose()) / (4.0 * area);
}

Eigen::Matrix<double, 6, 6> elasticity(const Vec2 &a, const Vec2 &b, const Vec2 &c, double mu,
                                       double lambda) {
  const auto g = barycentric_gradients(a, b, c);
  Eigen::Matrix<double, 3, 6> bm = Eigen::Matrix<double, 3, 6>::Zero();
  for (int k = 0; k < 3; ++k) {
    bm(0, 2 * k) = g[k].x();
    bm(1, 2 * k + 1) = g[k].y();
    bm(2, 2 * k) = g[k].y();
    bm(2, 2 * k + 1) = g[k].x();
  }
  Eigen::Matrix3d d;
  d << 2 * mu + lambda, lambda, 0, lambda, 2 * mu + lambda, 0, 0, 0, mu;
  return area_of(a, b, c) * bm.transpose() * d * bm;
}

namespace {

Eigen::MatrixXd scatter(const Mesh &mesh, int components, bool stiffness) {
  const auto n = static_cast<Eigen::Index>(mesh.node_count()) * components;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int t = 0; t < static_cast<int>(mesh.triangle_count()); ++t) {
    const auto p = corners(mesh, t);
    const Eigen::Matrix3d e = stiffness ? p1_stiffness(p[0], p[1], p[2])
                                        : p1_mass(area_of(p[0], p[1], p[2]));
    const Triangle &tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < components; ++c)
          out(components * tri[i] + c, components * tri[j] + c) += e(i, j);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd dense_mass(const Mesh &mesh, int components) {
  return scatter(mesh, components, false);
}

Eigen::MatrixXd dense_stiffness(const Mesh &mesh, int components) {
  return scatter(mesh, components, true);
}

Eigen::VectorXd kkt_zero_mean(const Eigen::MatrixXd &k, const Eigen::VectorXd &mass_sums,
                              const Eigen::VectorXd &rhs) {
  const Eigen::Index n = k.rows();
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n + 1, n + 1);
  big.topLeftCorner(n, n) = k;
  big.block(0, n, n, 1) = mass_sums;
  big.block(n, 0, 1, n) = mass_sums.transpose();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b.head(n) = rhs;
  return big.fullPivLu().solve(b).head(n);
}

Eigen::VectorXd composed_hs(const Mesh &mesh, int order, double A, const Eigen::VectorXd &dj) {
  const Eigen::MatrixXd m = dense_mass(mesh, 2);
  const Eigen::MatrixXd b = m + A * dense_stiffness(mesh, 2);
  std::vector<char> fixed(2 * mesh.node_count(), 0);
  for (const int v : mesh.fixed_boundary_nodes()) fixed[2 * v] = fixed[2 * v + 1] = 1;
  std::vector<Eigen::Index> free;
  for (std::size_t d = 0; d < fixed.size(); ++d)
    if (!fixed[d]) free.push_back(static_cast<Eigen::Index>(d));
  const auto nf = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd bf(nf, nf), mf(nf, nf);
  Eigen::VectorXd rhs(nf);
  for (Eigen::Index i = 0; i < nf; ++i) {
    rhs[i] = dj[free[i]];
    for (Eigen::Index j = 0; j < nf; ++j) {
      bf(i, j) = b(free[i], free[j]);
      mf(i, j) = m(free[i], free[j]);
    }
  }
  const Eigen::MatrixXd minv_b = mf.llt().solve(bf);
  Eigen::MatrixXd op = bf;
  for (int j = 1; j < order; ++j) op = op * minv_b;
  const Eigen::VectorXd vf = op.fullPivLu().solve(rhs);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dj.size());
  for (Eigen::Index i = 0; i < nf; ++i) v[free[i]] = vf[i];
  return v;
}

double l2_norm_squared(const Mesh &mesh, const Eigen::VectorXd &values, int components) {
  double sum = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangle_count()); ++t) {
    const Triangle &tri = mesh.triangle(t);
    const auto p = corners(mesh, t);
    const double area = area_of(p[0], p[1], p[2]);
    for (int c = 0; c < components; ++c) {
      const double a = values[components * tri[0] + c], b = values[components * tri[1] + c],
                   d = values[components * tri[2] + c];
      // int_T v^2 = A/6 (a^2 + b^2 + d^2 + ab + bd + da)
      sum += area / 6.0 * (a * a + b * b + d * d + a * b + b * d + d * a);
    }
  }
  return sum;
}

namespace {

struct ElementField {
  double area;
  std::array<Vec2, 3> grad;
};

ElementField element(const Mesh &mesh, int t) {
  const auto p = corners(mesh, t);
  return {area_of(p[0], p[1], p[2]), barycentric_gradients(p[0], p[1], p[2])};
}

Vec2 scalar_gradient(const ElementField &e, const Triangle &tri, const Eigen::VectorXd &v) {
  return v[tri[0]] * e.grad[0] + v[tri[1]] * e.grad[1] + v[tri[2]] * e.grad[2];
}

// (grad W)_{ij} = d W_i / d x_j.
Eigen::Matrix2d vector_gradient(const ElementField &e, const Triangle &tri,
                                const Eigen::VectorXd &w) {
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  for (int k = 0; k < 3; ++k)
    g += Vec2(w[2 * tri[k]], w[2 * tri[k] + 1]) * e.grad[k].transpose();
  return g;
}

double edge_length_rate(const Mesh &mesh, int a, int b, const Eigen::VectorXd &w) {
  const Vec2 tangent = (mesh.node(b) - mesh.node(a)).normalized();
  return tangent.dot(Vec2(w[2 * b] - w[2 * a], w[2 * b + 1] - w[2 * a + 1]));
}

}  // namespace

double interface_derivative(const InterfaceProblem &problem, const Mesh &mesh,
                            const ZeroMeanSolution &state, const ZeroMeanSolution &adjoint,
                            const TargetSample &target, const Eigen::VectorXd &w) {
  const Eigen::VectorXd &y = state.field.values;
  const Eigen::VectorXd &p = adjoint.field.values;
  const Eigen::VectorXd e = y - target.values;
  const Eigen::MatrixXd m = dense_mass(mesh, 1);
  const Eigen::VectorXd me = m * e;
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangle_count()); ++t) {
    const Triangle &tri = mesh.triangle(t);
    const ElementField el = element(mesh, t);
    const Eigen::Matrix2d gw = vector_gradient(el, tri, w);
    const double div = gw.trace();
    const Vec2 gy = scalar_gradient(el, tri, y), gp = scalar_gradient(el, tri, p);
    const Eigen::Vector3d ev(e[tri[0]], e[tri[1]], e[tri[2]]);
    const double int_e2 = ev.dot(p1_mass(el.area) * ev);
    const double p_mean = (p[tri[0]] + p[tri[1]] + p[tri[2]]) / 3.0;
    const double y_mean = (y[tri[0]] + y[tri[1]] + y[tri[2]]) / 3.0;
    const double kappa =
        mesh.cell_region()[t] == kRegionInside ? problem.kappa_in : problem.kappa_out;
    total += (0.5 * int_e2 + el.area * (state.multiplier * p_mean + adjoint.multiplier * y_mean)) *
             div;
    const Eigen::Matrix2d shear = div * Eigen::Matrix2d::Identity() - gw - gw.transpose();
    total += kappa * el.area * gy.dot(shear * gp);
  }
  for (int a = 0; a < static_cast<int>(mesh.node_count()); ++a)
    total -= me[a] * target.gradients[a].dot(Vec2(w[2 * a], w[2 * a + 1]));
  for (const BoundaryEdge &edge : mesh.boundary_edges()) {
    const double rate = edge_length_rate(mesh, edge.a, edge.b, w);
    if (edge.marker == Marker::Outer) total -= problem.flux * 0.5 * (p[edge.a] + p[edge.b]) * rate;
    if (edge.marker == Marker::Shape) total += problem.nu * rate;
  }
  return total;
}

double compliance_derivative(const ComplianceProblem &problem, const Mesh &mesh,
                             const Eigen::VectorXd &y, const Eigen::VectorXd &w) {
  const double mu = problem.lame_mu(), lambda = problem.lame_lambda();
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangle_count()); ++t) {
    const Triangle &tri = mesh.triangle(t);
    const ElementField el = element(mesh, t);
    const Eigen::Matrix2d gw = vector_gradient(el, tri, w);
    const Eigen::Matrix2d gy = vector_gradient(el, tri, y);
    const Eigen::Matrix2d eps = 0.5 * (gy + gy.transpose());
    const Eigen::Matrix2d sigma = 2.0 * mu * eps + lambda * eps.trace() * Eigen::Matrix2d::Identity();
    Vec2 y_mean = Vec2::Zero();
    for (const int v : tri) y_mean += Vec2(y[2 * v], y[2 * v + 1]) / 3.0;
    const double energy = (sigma.cwiseProduct(eps)).sum();
    total += el.area * (2.0 * problem.body_force.dot(y_mean) - energy + problem.volume_weight) *
             gw.trace();
    total += 2.0 * el.area * sigma.cwiseProduct(gy * gw).sum();
  }
  for (const BoundaryEdge &edge : mesh.boundary_edges()) {
    if (edge.marker != Marker::NeumannLoad) continue;
    const Vec2 ua(y[2 * edge.a], y[2 * edge.a + 1]), ub(y[2 * edge.b], y[2 * edge.b + 1]);
    total += problem.load.dot(ua + ub) * edge_length_rate(mesh, edge.a, edge.b, w);
  }
  return total;
}

Eigen::VectorXd random_free_field(const Mesh &mesh, std::mt19937 &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd w(2 * static_cast<Eigen::Index>(mesh.node_count()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = u(rng);
  for (const int v : mesh.fixed_boundary_nodes()) w.segment<2>(2 * v).setZero();
  return w;
}

Eigen::VectorXd smooth_free_field(const Mesh &mesh, double amplitude) {
  Eigen::VectorXd w(2 * static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const Vec2 &x = mesh.node(static_cast<int>(i));
    w[2 * i] = amplitude * std::sin(2.0 * x.x() + x.y());
    w[2 * i + 1] = amplitude * std::cos(x.x() - 3.0 * x.y());
  }
  for (const int v : mesh.fixed_boundary_nodes()) w.segment<2>(2 * v).setZero();
  return w;
}

Eigen::VectorXd random_smooth_free_field(const Mesh &mesh, std::mt19937 &rng) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Vec2 &p : mesh.nodes()) {
    xmin = std::min(xmin, p.x()), xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y()), ymax = std::max(ymax, p.y());
  }
  const double size = std::max(xmax - xmin, ymax - ymin);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_real_distribution<double> freq(1.0, 6.0);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  struct Wave {
    double a, kx, ky, phi;
  };
  Wave waves[2][3];
  for (auto &component : waves)
    for (Wave &w : component) w = {amp(rng), freq(rng) / size, freq(rng) / size, phase(rng)};

  // Cutoff rising linearly over a tenth of the domain from the fixed boundary.
  std::vector<std::pair<Vec2, Vec2>> fixed;
  for (const BoundaryEdge &e : mesh.boundary_edges())
    if (e.marker != Marker::Shape) fixed.emplace_back(mesh.node(e.a), mesh.node(e.b));
  Eigen::VectorXd w(2 * static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const Vec2 &x = mesh.node(static_cast<int>(i));
    double d = 1e300;
    for (const auto &[a, b] : fixed) d = std::min(d, point_segment_distance(x, a, b));
    const double cutoff = std::min(1.0, d / (0.1 * size));
    for (int c = 0; c < 2; ++c) {
      double v = 0.0;
      for (const Wave &wave : waves[c]) v += wave.a * std::sin(wave.kx * x.x() + wave.ky * x.y() + wave.phi);
      w[2 * static_cast<Eigen::Index>(i) + c] = cutoff * v;
    }
  }
  for (const int v : mesh.fixed_boundary_nodes()) w.segment<2>(2 * v).setZero();
  return w;
}

}  // namespace oracle
