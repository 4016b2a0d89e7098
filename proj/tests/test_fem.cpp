#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shapeflow/error.hpp"
#include "shapeflow/fem.hpp"

using namespace shapeflow;

namespace {

Eigen::MatrixXd dense(const SparseMatrix &m) { return Eigen::MatrixXd(m); }

double max_asymmetry(const SparseMatrix &m) {
  const Eigen::MatrixXd d = dense(m);
  return (d - d.transpose()).cwiseAbs().maxCoeff();
}

std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

Mesh interface_box() {
  return generate_interface_mesh({-1.0, 0.0, -0.5, 0.5}, Vec2(-0.5, 0.0), 0.2, 0.05);
}

// Element matrix of the assembled operator restricted to a one-triangle mesh.
Eigen::MatrixXd on_reference_triangle(const SparseMatrix &m) { return dense(m); }

}  // namespace

TEST(Mass, EntriesSumToAreaTimesArity) {
  const Mesh m = oracle::unit_square(6);
  EXPECT_NEAR(dense(assemble_mass(m, Arity::Scalar)).sum(), 1.0, 1e-12);
  EXPECT_NEAR(dense(assemble_mass(m, Arity::Vector2)).sum(), 2.0, 1e-12);
  EXPECT_NEAR(mass_row_sums(m).sum(), 1.0, 1e-12);
}

TEST(Mass, ReferenceTriangleMatchesAnalyticMatrix) {
  const Mesh m = oracle::single_triangle({0, 0}, {1, 0}, {0, 1});
  const Eigen::MatrixXd diff = on_reference_triangle(assemble_mass(m, Arity::Scalar)) -
                               Eigen::MatrixXd(oracle::p1_mass(0.5));
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mass, AgreesWithElementOracleOnGeneratedMesh) {
  const Mesh m = interface_box();
  for (const int nc : {1, 2}) {
    const Eigen::MatrixXd d =
        dense(assemble_mass(m, nc == 1 ? Arity::Scalar : Arity::Vector2)) -
        oracle::dense_mass(m, nc);
    EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Stiffness, ReferenceTriangleMatchesAnalyticMatrix) {
  const Mesh m = oracle::single_triangle({0, 0}, {1, 0}, {0, 1});
  Eigen::Matrix3d expected;
  expected << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  expected *= 0.5;
  const Eigen::MatrixXd k = dense(assemble_stiffness(m, Arity::Scalar, ones(1)));
  EXPECT_LT((k - Eigen::MatrixXd(expected)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((Eigen::Matrix3d(expected) - oracle::p1_stiffness({0, 0}, {1, 0}, {0, 1}))
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(Stiffness, ConstantsAreInTheKernel) {
  const Mesh m = interface_box();
  const SparseMatrix k = assemble_stiffness(m, Arity::Vector2, ones(m.triangle_count()));
  Eigen::VectorXd cx = Eigen::VectorXd::Zero(k.rows()), cy = cx;
  for (Eigen::Index i = 0; i < k.rows(); i += 2) cx[i] = 1.0, cy[i + 1] = 1.0;
  EXPECT_LT((k * cx).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((k * cy).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stiffness, LinearInCoefficientAndSymmetric) {
  const Mesh m = interface_box();
  std::vector<double> c(m.triangle_count());
  for (std::size_t t = 0; t < c.size(); ++t) c[t] = m.cell_region()[t] == kRegionInside ? 10.0 : 1.0;
  std::vector<double> doubled = c;
  for (double &v : doubled) v *= 2.0;
  const SparseMatrix k = assemble_stiffness(m, Arity::Scalar, c);
  EXPECT_EQ(dense(assemble_stiffness(m, Arity::Scalar, doubled)), 2.0 * dense(k));
  EXPECT_EQ(max_asymmetry(k), 0.0);
  EXPECT_LT((dense(assemble_stiffness(m, Arity::Vector2, ones(m.triangle_count()))) -
             oracle::dense_stiffness(m, 2))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(Stiffness, ExactDirichletEnergyOfLinears) {
  const Mesh m = interface_box();
  const SparseMatrix k = assemble_stiffness(m, Arity::Scalar, ones(m.triangle_count()));
  Eigen::VectorXd u(m.node_count());
  for (std::size_t i = 0; i < m.node_count(); ++i)
    u[i] = 3.0 * m.node(static_cast<int>(i)).x() - 2.0 * m.node(static_cast<int>(i)).y() + 1.0;
  // |grad u|^2 = 13 on a unit-area domain.
  EXPECT_NEAR(u.dot(k * u), 13.0 * m.area(), 1e-12);
}

TEST(Stiffness, RejectsNonpositiveCoefficient) {
  const Mesh m = oracle::single_triangle({0, 0}, {1, 0}, {0, 1});
  EXPECT_THROW(assemble_stiffness(m, Arity::Scalar, std::vector<double>{0.0}), Error);
  EXPECT_THROW(assemble_stiffness(m, Arity::Scalar, std::vector<double>{}), Error);
}

TEST(Elasticity, OneTriangleMatchesVoigtOracle) {
  const Vec2 a(0.1, -0.2), b(1.3, 0.1), c(0.4, 0.9);
  const Mesh m = oracle::single_triangle(a, b, c);
  for (const double lambda : {0.0, 0.7}) {
    const Eigen::MatrixXd k = dense(assemble_elasticity(m, ones(3), lambda));
    EXPECT_LT((k - Eigen::MatrixXd(oracle::elasticity(a, b, c, 1.0, lambda))).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(Elasticity, RigidMotionsAreInTheKernel) {
  const Mesh m = interface_box();
  std::vector<double> mu(m.node_count());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = 5.0 + 10.0 * std::abs(m.node(static_cast<int>(i)).y());
  const SparseMatrix k = assemble_elasticity(m, mu, 0.3);
  EXPECT_LT(max_asymmetry(k), 1e-12);
  const Eigen::Index n = k.rows();
  Eigen::VectorXd tx = Eigen::VectorXd::Zero(n), ty = tx, rot = tx;
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    tx[2 * i] = 1.0;
    ty[2 * i + 1] = 1.0;
    rot[2 * i] = -m.node(static_cast<int>(i)).y();
    rot[2 * i + 1] = m.node(static_cast<int>(i)).x();
  }
  EXPECT_LT((k * tx).norm(), 1e-10);
  EXPECT_LT((k * ty).norm(), 1e-10);
  EXPECT_LT((k * rot).norm(), 1e-10);
}

TEST(Elasticity, RejectsNonpositiveMu) {
  const Mesh m = oracle::single_triangle({0, 0}, {1, 0}, {0, 1});
  EXPECT_THROW(assemble_elasticity(m, std::vector<double>{1.0, 0.0, 1.0}, 0.0), Error);
  EXPECT_THROW(assemble_elasticity(m, ones(3), -1.0), Error);
}

TEST(Dirichlet, EliminationKeepsSymmetryAndZerosConstrainedDofs) {
  const Mesh m = interface_box();
  const SparseMatrix k = assemble_stiffness(m, Arity::Vector2, ones(m.triangle_count()));
  const std::vector<int> fixed = m.fixed_boundary_nodes();
  const std::vector<int> dofs = node_dofs(fixed, Arity::Vector2);
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  Eigen::VectorXd rhs(k.rows());
  for (auto &v : rhs) v = g(rng);
  const ConstrainedSystem sys = apply_dirichlet(k, rhs, dofs);
  EXPECT_EQ(max_asymmetry(sys.matrix), 0.0);
  const Eigen::VectorXd x = solve_spd(sys.matrix, sys.rhs);
  for (const int d : dofs) EXPECT_EQ(x[d], 0.0);
}

TEST(Dirichlet, ZeroRhsGivesZeroField) {
  const Mesh m = interface_box();
  const SparseMatrix k = assemble_stiffness(m, Arity::Vector2, ones(m.triangle_count()));
  const std::vector<int> dofs = node_dofs(m.fixed_boundary_nodes(), Arity::Vector2);
  const ConstrainedSystem sys = apply_dirichlet(k, Eigen::VectorXd::Zero(k.rows()), dofs);
  EXPECT_EQ(solve_spd(sys.matrix, sys.rhs).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dirichlet, PrescribedValuesAreReproduced) {
  const Mesh m = oracle::unit_square(8);
  const SparseMatrix k = assemble_stiffness(m, Arity::Scalar, ones(m.triangle_count()));
  const std::vector<int> nodes = m.fixed_boundary_nodes();
  std::vector<double> values;
  for (const int v : nodes) values.push_back(m.node(v).x() + 2.0 * m.node(v).y());
  const ConstrainedSystem sys =
      apply_dirichlet(k, Eigen::VectorXd::Zero(k.rows()), nodes, values);
  const Eigen::VectorXd x = solve_spd(sys.matrix, sys.rhs);
  // Harmonic linear data is reproduced exactly by P1.
  for (std::size_t i = 0; i < m.node_count(); ++i)
    EXPECT_NEAR(x[i], m.node(static_cast<int>(i)).x() + 2.0 * m.node(static_cast<int>(i)).y(), 1e-9);
}

TEST(SolveSpd, IdentityAndZeroRhs) {
  SparseMatrix eye(5, 5);
  eye.setIdentity();
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, -1.0, 3.0);
  EXPECT_LT((solve_spd(eye, b) - b).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(solve_spd(eye, Eigen::VectorXd::Zero(5)), Eigen::VectorXd::Zero(5));
}

TEST(SolveSpd, RandomSystemMatchesDenseFactorization) {
  std::mt19937 rng(42);
  std::normal_distribution<double> g;
  Eigen::MatrixXd G(50, 50);
  for (auto &v : G.reshaped()) v = g(rng);
  const Eigen::MatrixXd A = G.transpose() * G + Eigen::MatrixXd::Identity(50, 50);
  Eigen::VectorXd b(50);
  for (auto &v : b) v = g(rng);
  const SparseMatrix sparse = A.sparseView();
  for (const SolverKind kind : {SolverKind::ConjugateGradient, SolverKind::Direct}) {
    SolverOptions options;
    options.kind = kind;
    SolveReport report;
    const Eigen::VectorXd x = solve_spd(sparse, b, options, &report);
    EXPECT_LT((x - A.ldlt().solve(b)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((A * x - b).norm() / b.norm(), 1e-10);
  }
}

TEST(SpdFactorization, RepeatedSolvesMatchDenseOracle) {
  const Mesh m = oracle::unit_square(6);
  const SparseMatrix b = assemble_mass(m, Arity::Scalar) +
                         0.3 * assemble_stiffness(m, Arity::Scalar, ones(m.triangle_count()));
  const SpdFactorization f(b);
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd rhs(b.rows());
    for (auto &v : rhs) v = g(rng);
    const Eigen::VectorXd x = f.solve(rhs, 1e-13);
    EXPECT_LT((x - dense(b).ldlt().solve(rhs)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(f.solve(Eigen::VectorXd::Zero(b.rows()), 1e-13).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SolveSpd, NonpositiveDiagonalIsRejected) {
  SparseMatrix m(2, 2);
  m.insert(0, 0) = 1.0;
  m.insert(1, 1) = -1.0;
  try {
    solve_spd(m, Eigen::Vector2d(1.0, 1.0));
    FAIL() << "expected a solver error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Solver);
  }
}

TEST(SolveSpd, SingularSystemThrowsSolverFailure) {
  // Inconsistent rhs: no solution exists, so no path can meet the tolerance.
  SparseMatrix m(2, 2);
  m.insert(0, 0) = 1.0;
  m.insert(0, 1) = 1.0;
  m.insert(1, 0) = 1.0;
  m.insert(1, 1) = 1.0;
  for (const SolverKind kind : {SolverKind::ConjugateGradient, SolverKind::Direct}) {
    SolverOptions options;
    options.kind = kind;
    EXPECT_THROW(solve_spd(m, Eigen::Vector2d(1.0, 0.0), options), SolverFailure);
  }
}

TEST(ZeroMean, MatchesDenseKktOracle) {
  const Mesh m = oracle::small_interface_mesh();
  ASSERT_LE(m.node_count(), 100u);
  std::vector<double> kappa(m.triangle_count());
  for (std::size_t t = 0; t < kappa.size(); ++t)
    kappa[t] = m.cell_region()[t] == kRegionInside ? 10.0 : 1.0;
  const SparseMatrix k = assemble_stiffness(m, Arity::Scalar, kappa);
  std::mt19937 rng(9);
  std::normal_distribution<double> g;
  LinearFunctional rhs = LinearFunctional::zeros(m, Arity::Scalar);
  for (auto &v : rhs.coeffs) v = g(rng);
  rhs.coeffs.array() -= rhs.coeffs.mean();
  const Eigen::VectorXd expected = oracle::kkt_zero_mean(dense(k), mass_row_sums(m), rhs.coeffs);
  for (const SolverKind kind : {SolverKind::ConjugateGradient, SolverKind::Direct}) {
    SolverOptions options;
    options.kind = kind;
    const ZeroMeanSolution sol = solve_zero_mean(k, rhs, m, NeumannCompatibility::Require, options);
    EXPECT_LT((sol.field.values - expected).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT(std::abs(integrate(m, sol.field.values)), 1e-10);
  }
}

TEST(ZeroMean, AbsorbPolicyMovesConstantPartToMultiplier) {
  const Mesh m = oracle::small_interface_mesh();
  const SparseMatrix k = assemble_stiffness(m, Arity::Scalar, ones(m.triangle_count()));
  const LinearFunctional rhs = boundary_load(m, Marker::Outer, 10.0);
  EXPECT_THROW(solve_zero_mean(k, rhs, m), Error);
  const ZeroMeanSolution sol = solve_zero_mean(k, rhs, m, NeumannCompatibility::Absorb);
  EXPECT_NEAR(sol.multiplier, 40.0 / m.area(), 1e-12);
  const Eigen::VectorXd residual = k * sol.field.values + sol.multiplier * mass_row_sums(m) - rhs.coeffs;
  EXPECT_LT(residual.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(std::abs(integrate(m, sol.field.values)), 1e-10);
}

TEST(ZeroMean, ZeroRhsGivesZero) {
  const Mesh m = oracle::unit_square(4);
  const SparseMatrix k = assemble_stiffness(m, Arity::Scalar, ones(m.triangle_count()));
  const ZeroMeanSolution sol = solve_zero_mean(k, LinearFunctional::zeros(m, Arity::Scalar), m);
  EXPECT_EQ(sol.field.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BoundaryLoad, ConstantFluxOverTheBoxBoundary) {
  const Mesh m = interface_box();
  // Perimeter of [-1,0] x [-0.5,0.5] is 4.
  EXPECT_NEAR(boundary_load(m, Marker::Outer, 10.0).coeffs.sum(), 40.0, 1e-12);
  EXPECT_EQ(boundary_load(m, Marker::Outer, 0.0).coeffs.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(boundary_load(m, Marker::NeumannLoad, 1.0), Error);
}

TEST(BoundaryLoad, BridgeVerticalLoad) {
  const Mesh m = generate_bridge_mesh(bridge_outline(), bridge_holes(), 0.25);
  const LinearFunctional f = boundary_load(m, Marker::NeumannLoad, Vec2(0.0, -0.25));
  double fx = 0.0, fy = 0.0;
  for (Eigen::Index i = 0; i < f.coeffs.size(); i += 2) fx += f.coeffs[i], fy += f.coeffs[i + 1];
  EXPECT_EQ(fx, 0.0);
  EXPECT_NEAR(fy, -0.25, 1e-12);
}

TEST(L2Norm, ConstantsAndElementOracle) {
  const Mesh m = oracle::unit_square(5);
  NodalField one{Arity::Scalar, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m.node_count()))};
  EXPECT_NEAR(l2_norm(m, one), 1.0, 1e-12);
  NodalField both{Arity::Vector2, Eigen::VectorXd::Ones(2 * static_cast<Eigen::Index>(m.node_count()))};
  EXPECT_NEAR(l2_norm(m, both), std::sqrt(2.0), 1e-12);

  const Mesh g = interface_box();
  std::mt19937 rng(4);
  std::normal_distribution<double> n;
  NodalField random{Arity::Vector2, Eigen::VectorXd(2 * static_cast<Eigen::Index>(g.node_count()))};
  for (auto &v : random.values) v = n(rng);
  const double oracle_sq = oracle::l2_norm_squared(g, random.values, 2);
  EXPECT_LT(std::abs(l2_norm(g, random) * l2_norm(g, random) - oracle_sq) / oracle_sq, 1e-12);
}
