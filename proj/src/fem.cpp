#include "shapeflow/fem.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "shapeflow/error.hpp"

namespace shapeflow {

NodalField NodalField::zeros(const Mesh &mesh, Arity arity) {
  return {arity, Eigen::VectorXd::Zero(mesh.node_count() * components(arity))};
}

LinearFunctional LinearFunctional::zeros(const Mesh &mesh, Arity arity) {
  return {arity, Eigen::VectorXd::Zero(mesh.node_count() * components(arity))};
}

double LinearFunctional::operator()(const NodalField &field) const {
  require(field.arity == arity && field.values.size() == coeffs.size(),
          "functional and field have different layouts");
  return coeffs.dot(field.values);
}

ElementGeometry element_geometry(const Mesh &mesh, int triangle) {
  const Triangle &t = mesh.triangle(triangle);
  const Vec2 &p0 = mesh.node(t[0]), &p1 = mesh.node(t[1]), &p2 = mesh.node(t[2]);
  const double twice = orient2d(p0, p1, p2);
  ElementGeometry g;
  g.area = 0.5 * twice;
  // grad lambda_i = rot90(p_{i+2} - p_{i+1}) / (2 |T|)
  g.grad[0] = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / twice;
  g.grad[1] = Vec2(p2.y() - p0.y(), p0.x() - p2.x()) / twice;
  g.grad[2] = Vec2(p0.y() - p1.y(), p1.x() - p0.x()) / twice;
  return g;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(std::size_t n, const Triplets &triplets) {
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

SparseMatrix assemble_mass(const Mesh &mesh, Arity arity) {
  const int nc = components(arity);
  Triplets trip;
  trip.reserve(mesh.triangle_count() * 9 * nc);
  for (int k = 0; k < static_cast<int>(mesh.triangle_count()); ++k) {
    const Triangle &t = mesh.triangle(k);
    const double area = mesh.triangle_area(k);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double v = area / 12.0 * (i == j ? 2.0 : 1.0);
        for (int c = 0; c < nc; ++c) trip.emplace_back(nc * t[i] + c, nc * t[j] + c, v);
      }
  }
  return from_triplets(mesh.node_count() * nc, trip);
}

SparseMatrix assemble_stiffness(const Mesh &mesh, Arity arity,
                                std::span<const double> cell_coeff) {
  require(cell_coeff.size() == mesh.triangle_count(),
          "one stiffness coefficient per cell is required");
  const int nc = components(arity);
  Triplets trip;
  trip.reserve(mesh.triangle_count() * 9 * nc);
  for (int k = 0; k < static_cast<int>(mesh.triangle_count()); ++k) {
    const double coeff = cell_coeff[k];
    require(coeff > 0.0 && std::isfinite(coeff),
            "stiffness coefficients must be positive");
    const Triangle &t = mesh.triangle(k);
    const ElementGeometry g = element_geometry(mesh, k);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double v = coeff * g.area * g.grad[i].dot(g.grad[j]);
        for (int c = 0; c < nc; ++c) trip.emplace_back(nc * t[i] + c, nc * t[j] + c, v);
      }
  }
  return from_triplets(mesh.node_count() * nc, trip);
}

SparseMatrix assemble_elasticity(const Mesh &mesh, std::span<const double> mu,
                                 double lambda) {
  require(mu.size() == mesh.node_count(), "mu must be a nodal field");
  require(lambda >= 0.0, "lambda must be nonnegative");
  for (const double m : mu) require(m > 0.0 && std::isfinite(m), "mu must be positive");
  Triplets trip;
  trip.reserve(mesh.triangle_count() * 36);
  for (int k = 0; k < static_cast<int>(mesh.triangle_count()); ++k) {
    const Triangle &t = mesh.triangle(k);
    const ElementGeometry g = element_geometry(mesh, k);
    const double mu_t = (mu[t[0]] + mu[t[1]] + mu[t[2]]) / 3.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const Vec2 &ga = g.grad[a], &gb = g.grad[b];
        const double dot = ga.dot(gb);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            // 2 mu eps(phi_a e_i) : eps(phi_b e_j) = mu (d_ij ga.gb + ga_j gb_i)
            const double v = g.area * (mu_t * ((i == j ? dot : 0.0) + ga[j] * gb[i]) +
                                       lambda * ga[i] * gb[j]);
            trip.emplace_back(2 * t[a] + i, 2 * t[b] + j, v);
          }
      }
  }
  return from_triplets(2 * mesh.node_count(), trip);
}

Eigen::VectorXd mass_row_sums(const Mesh &mesh) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.node_count());
  for (int k = 0; k < static_cast<int>(mesh.triangle_count()); ++k) {
    const double third = mesh.triangle_area(k) / 3.0;
    for (const int v : mesh.triangle(k)) m[v] += third;
  }
  return m;
}

std::vector<int> node_dofs(std::span<const int> nodes, Arity arity) {
  const int nc = components(arity);
  std::vector<int> dofs;
  dofs.reserve(nodes.size() * nc);
  for (const int v : nodes)
    for (int c = 0; c < nc; ++c) dofs.push_back(nc * v + c);
  return dofs;
}

ConstrainedSystem apply_dirichlet(const SparseMatrix &matrix, const Eigen::VectorXd &rhs,
                                  std::span<const int> dofs,
                                  std::span<const double> values) {
  const Eigen::Index n = matrix.rows();
  require(matrix.cols() == n && rhs.size() == n, "system size mismatch");
  require(values.empty() || values.size() == dofs.size(),
          "one Dirichlet value per constrained dof is required");
  Eigen::VectorXd prescribed = Eigen::VectorXd::Zero(n);
  std::vector<std::uint8_t> fixed(n, 0);
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    require(dofs[k] >= 0 && dofs[k] < n, "Dirichlet dof out of range");
    fixed[dofs[k]] = 1;
    if (!values.empty()) prescribed[dofs[k]] = values[k];
  }
  ConstrainedSystem out;
  out.rhs = rhs;
  Triplets trip;
  trip.reserve(matrix.nonZeros() + n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (fixed[r]) {
      trip.emplace_back(r, r, 1.0);
      out.rhs[r] = prescribed[r];
      continue;
    }
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it) {
      if (fixed[it.col()])
        out.rhs[r] -= it.value() * prescribed[it.col()];
      else
        trip.emplace_back(r, it.col(), it.value());
    }
  }
  out.matrix = from_triplets(static_cast<std::size_t>(n), trip);
  return out;
}

Eigen::VectorXd solve_dense_spd(const SparseMatrix &matrix, const Eigen::VectorXd &rhs) {
  require(matrix.rows() <= 2000, "dense path is limited to n <= 2000");
  const Eigen::MatrixXd dense = Eigen::MatrixXd(matrix);
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() != Eigen::Success)
    throw SolverFailure("dense Cholesky failed: matrix not SPD", 1.0);
  return llt.solve(rhs);
}

ZeroMeanSolution solve_zero_mean(const SparseMatrix &stiffness, const LinearFunctional &rhs,
                                 const Mesh &mesh, NeumannCompatibility policy,
                                 const SolverOptions &options) {
  require(rhs.arity == Arity::Scalar && rhs.coeffs.size() == stiffness.rows() &&
              stiffness.rows() == static_cast<Eigen::Index>(mesh.node_count()),
          "zero-mean solve expects a scalar system on the mesh");
  const Eigen::VectorXd m = mass_row_sums(mesh);
  const double area = m.sum();
  const double total = rhs.coeffs.sum();
  if (policy == NeumannCompatibility::Require) {
    const double scale = rhs.coeffs.cwiseAbs().sum();
    if (std::abs(total) > 1e-10 * std::max(scale, 1e-300))
      throw Error(ErrorKind::InvalidArgument,
                  "Neumann compatibility violated: <rhs, 1> = " + std::to_string(total));
  }
  // Row 1^T of the bordered system gives the multiplier directly; the
  // remaining semidefinite system is consistent.
  ZeroMeanSolution out;
  out.multiplier = total / area;
  const Eigen::VectorXd b = rhs.coeffs - out.multiplier * m;
  Eigen::VectorXd y;
  if (options.kind == SolverKind::Direct) {
    // The consistent singular system is solved with node 0 pinned; the
    // constant is fixed by the projection below.
    const int pin[] = {0};
    const ConstrainedSystem pinned = apply_dirichlet(stiffness, b, pin);
    y = solve_spd(pinned.matrix, pinned.rhs, options);
  } else {
    y = solve_spd(stiffness, b, options);
  }
  y.array() -= m.dot(y) / area;
  out.field = {Arity::Scalar, std::move(y)};
  return out;
}

LinearFunctional boundary_load(const Mesh &mesh, Marker marker, double g) {
  require(mesh.has_marker(marker), "marker " + to_string(marker) + " absent from mesh");
  LinearFunctional f = LinearFunctional::zeros(mesh, Arity::Scalar);
  for (const BoundaryEdge &e : mesh.boundary_edges()) {
    if (e.marker != marker) continue;
    const double half = 0.5 * (mesh.node(e.a) - mesh.node(e.b)).norm();
    f.coeffs[e.a] += g * half;
    f.coeffs[e.b] += g * half;
  }
  return f;
}

LinearFunctional boundary_load(const Mesh &mesh, Marker marker, const Vec2 &g) {
  require(mesh.has_marker(marker), "marker " + to_string(marker) + " absent from mesh");
  LinearFunctional f = LinearFunctional::zeros(mesh, Arity::Vector2);
  for (const BoundaryEdge &e : mesh.boundary_edges()) {
    if (e.marker != marker) continue;
    const double half = 0.5 * (mesh.node(e.a) - mesh.node(e.b)).norm();
    for (const int v : {e.a, e.b}) {
      f.coeffs[2 * v] += g.x() * half;
      f.coeffs[2 * v + 1] += g.y() * half;
    }
  }
  return f;
}

double l2_norm(const Mesh &mesh, const NodalField &field) {
  const int nc = components(field.arity);
  require(field.values.size() == static_cast<Eigen::Index>(mesh.node_count()) * nc,
          "field does not match the mesh");
  double sum = 0.0;
  for (int k = 0; k < static_cast<int>(mesh.triangle_count()); ++k) {
    const Triangle &t = mesh.triangle(k);
    const double area = mesh.triangle_area(k);
    for (int c = 0; c < nc; ++c) {
      const double a = field.values[nc * t[0] + c], b = field.values[nc * t[1] + c],
                   d = field.values[nc * t[2] + c];
      const double s = a + b + d;
      sum += area / 12.0 * (a * a + b * b + d * d + s * s);
    }
  }
  return std::sqrt(std::max(sum, 0.0));
}

double integrate(const Mesh &mesh, const Eigen::VectorXd &scalar_field) {
  require(scalar_field.size() == static_cast<Eigen::Index>(mesh.node_count()),
          "field does not match the mesh");
  return mass_row_sums(mesh).dot(scalar_field);
}

}  // namespace shapeflow
