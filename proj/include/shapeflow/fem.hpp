#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "shapeflow/mesh.hpp"

namespace shapeflow {

/// Number of components per node. Vector fields use interleaved storage:
/// dof 2*i is the x component at node i, dof 2*i+1 the y component.
enum class Arity { Scalar = 1, Vector2 = 2 };

constexpr int components(Arity arity) { return static_cast<int>(arity); }

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// P1 coefficients on mesh nodes.
struct NodalField {
  Arity arity = Arity::Scalar;
  Eigen::VectorXd values;

  static NodalField zeros(const Mesh &mesh, Arity arity);
  std::size_t node_count() const { return values.size() / components(arity); }
  Vec2 at(int node) const { return Vec2(values[2 * node], values[2 * node + 1]); }
};

/// Discrete linear functional W -> sum_k coeffs[k] * W[k] over P1 dofs.
struct LinearFunctional {
  Arity arity = Arity::Scalar;
  Eigen::VectorXd coeffs;

  static LinearFunctional zeros(const Mesh &mesh, Arity arity);
  double operator()(const NodalField &field) const;
  double operator()(const Eigen::VectorXd &dofs) const { return coeffs.dot(dofs); }
};

/// Element geometry of an affine P1 triangle.
struct ElementGeometry {
  double area;
  std::array<Vec2, 3> grad;  // gradients of the three barycentric functions
};
ElementGeometry element_geometry(const Mesh &mesh, int triangle);

SparseMatrix assemble_mass(const Mesh &mesh, Arity arity);

/// sum_T c_T * int_T grad u : grad v, per component for vector fields.
SparseMatrix assemble_stiffness(const Mesh &mesh, Arity arity,
                                std::span<const double> cell_coeff);

/// 2 mu eps(u):eps(v) + lambda div u div v with mu given per node and
/// evaluated at element centroids.
SparseMatrix assemble_elasticity(const Mesh &mesh, std::span<const double> mu,
                                 double lambda);

/// Row sums of the scalar mass matrix: int_Omega phi_i.
Eigen::VectorXd mass_row_sums(const Mesh &mesh);

/// Dofs of the given nodes for a field of the given arity.
std::vector<int> node_dofs(std::span<const int> nodes, Arity arity);

struct ConstrainedSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
};

/// Symmetric elimination: constrained rows and columns are zeroed, the
/// diagonal set to one and the rhs set to the prescribed value (zero by
/// default), with the lifting moved to the free rows.
ConstrainedSystem apply_dirichlet(const SparseMatrix &matrix, const Eigen::VectorXd &rhs,
                                  std::span<const int> dofs,
                                  std::span<const double> values = {});

enum class SolverKind {
  ConjugateGradient,  // Jacobi-preconditioned CG
  Direct,             // sparse LDL^T, for derivative checks
};

struct SolverOptions {
  double rel_tol = 1e-10;
  int max_iter_factor = 10;  // iteration cap = factor * n
  SolverKind kind = SolverKind::ConjugateGradient;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// CG falls back to the direct path when it stagnates above the tolerance.
/// Throws SolverFailure when neither reaches the tolerance.
Eigen::VectorXd solve_spd(const SparseMatrix &matrix, const Eigen::VectorXd &rhs,
                          const SolverOptions &options = {},
                          SolveReport *report = nullptr);

/// Sparse LDL^T factor of one SPD matrix for repeated solves. Each solve
/// applies one step of iterative refinement and throws SolverFailure when
/// the relative residual stays above rel_tol.
class SpdFactorization {
 public:
  explicit SpdFactorization(const SparseMatrix &matrix);
  ~SpdFactorization();
  SpdFactorization(SpdFactorization &&) noexcept;
  SpdFactorization &operator=(SpdFactorization &&) noexcept;

  Eigen::VectorXd solve(const Eigen::VectorXd &rhs, double rel_tol) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Dense Cholesky path for small systems (n <= 2000).
Eigen::VectorXd solve_dense_spd(const SparseMatrix &matrix, const Eigen::VectorXd &rhs);

enum class NeumannCompatibility {
  Require,  // throw if <rhs, 1> is not ~0
  Absorb,   // constant part of the rhs is taken by the multiplier
};

struct ZeroMeanSolution {
  NodalField field;
  /// Lagrange multiplier of the constraint int_Omega y = 0, i.e.
  /// K y + multiplier * m = rhs with m the mass row sums.
  double multiplier = 0.0;
};

/// Solves the bordered system [K m; m^T 0][y; lambda] = [rhs; 0].
ZeroMeanSolution solve_zero_mean(const SparseMatrix &stiffness, const LinearFunctional &rhs,
                                 const Mesh &mesh,
                                 NeumannCompatibility policy = NeumannCompatibility::Require,
                                 const SolverOptions &options = {});

/// Edge quadrature of int_{marker} g v ds (exact for P1 v and constant g).
LinearFunctional boundary_load(const Mesh &mesh, Marker marker, double g);
LinearFunctional boundary_load(const Mesh &mesh, Marker marker, const Vec2 &g);

/// sqrt(v^T M v) with the mass matrix of matching arity.
double l2_norm(const Mesh &mesh, const NodalField &field);

/// Integral of a scalar P1 field.
double integrate(const Mesh &mesh, const Eigen::VectorXd &scalar_field);

}  // namespace shapeflow
