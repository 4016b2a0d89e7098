#include "shapeflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "shapeflow/error.hpp"

namespace shapeflow {

namespace {

SolverOptions gradient_solver() {
  SolverOptions o;
  o.rel_tol = kGradientSolveTolerance;
  return o;
}

// Tolerance of the mass solves that evaluate the H^s form; far below the
// gradient tolerance so the Riesz check measures the gradient alone.
constexpr double kMassSolveTolerance = 1e-13;

struct ConstrainedOperators {
  std::vector<int> dofs;
  SparseMatrix b;     // M + A K, or the elasticity operator
  SparseMatrix mass;  // vector mass, same elimination
};

ConstrainedOperators build(const MetricSpec &spec, const Mesh &mesh) {
  ConstrainedOperators ops;
  ops.dofs = node_dofs(gradient_constrained_nodes(mesh), Arity::Vector2);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2 * mesh.node_count());
  SparseMatrix b;
  if (spec.kind == MetricSpec::Kind::Hs) {
    const SparseMatrix mass = assemble_mass(mesh, Arity::Vector2);
    const std::vector<double> ones(mesh.triangle_count(), 1.0);
    b = mass + spec.A * assemble_stiffness(mesh, Arity::Vector2, ones);
    ops.mass = apply_dirichlet(mass, zero, ops.dofs).matrix;
  } else {
    const NodalField mu = sp_mu_field(spec, mesh);
    b = assemble_elasticity(mesh, {mu.values.data(), static_cast<std::size_t>(mu.values.size())},
                            0.0);
  }
  ops.b = apply_dirichlet(b, zero, ops.dofs).matrix;
  return ops;
}

Eigen::VectorXd restricted(const Eigen::VectorXd &v, const std::vector<int> &dofs) {
  Eigen::VectorXd out = v;
  for (const int d : dofs) out[d] = 0.0;
  return out;
}

void check_functional(const Mesh &mesh, const LinearFunctional &dj) {
  require(dj.arity == Arity::Vector2 &&
              dj.coeffs.size() == 2 * static_cast<Eigen::Index>(mesh.node_count()),
          "shape derivative must be a vector functional on the mesh");
}

}  // namespace

MetricSpec MetricSpec::hs(int order, double A) {
  MetricSpec m;
  m.kind = Kind::Hs;
  m.order = order;
  m.A = A;
  m.validate();
  return m;
}

MetricSpec MetricSpec::steklov_poincare(double mu_min, double mu_max) {
  MetricSpec m;
  m.kind = Kind::SteklovPoincare;
  m.mu_min = mu_min;
  m.mu_max = mu_max;
  m.validate();
  return m;
}

void MetricSpec::validate() const {
  if (kind == Kind::Hs) {
    require(order >= 1, "Sobolev order must be at least 1");
    require(A > 0.0 && std::isfinite(A), "A must be positive");
  } else {
    require(mu_min > 0.0 && mu_min <= mu_max && std::isfinite(mu_max),
            "need 0 < mu_min <= mu_max");
  }
}

std::string MetricSpec::name() const {
  return kind == Kind::Hs ? "h" + std::to_string(order) : "sp";
}

std::vector<int> gradient_constrained_nodes(const Mesh &mesh) {
  return mesh.fixed_boundary_nodes();
}

NodalField hs_gradient(const MetricSpec &spec, const Mesh &mesh, const LinearFunctional &dj) {
  spec.validate();
  require(spec.kind == MetricSpec::Kind::Hs, "hs_gradient needs an Hs metric");
  check_functional(mesh, dj);
  const ConstrainedOperators ops = build(spec, mesh);
  // One factor serves all s solves. Iterative solves at a fixed tolerance
  // lose about cond(M^-1 B) per stage, which graded meshes cannot afford.
  const SpdFactorization b(ops.b);
  Eigen::VectorXd x = b.solve(restricted(dj.coeffs, ops.dofs), kGradientSolveTolerance);
  for (int j = 1; j < spec.order; ++j)
    x = b.solve(restricted(ops.mass * x, ops.dofs), kGradientSolveTolerance);
  return {Arity::Vector2, restricted(x, ops.dofs)};
}

NodalField sp_mu_field(const MetricSpec &spec, const Mesh &mesh) {
  spec.validate();
  require(spec.kind == MetricSpec::Kind::SteklovPoincare, "sp_mu_field needs an SP metric");
  require(mesh.has_marker(Marker::Shape), "mesh has no SHAPE nodes");
  const std::vector<int> fixed = mesh.fixed_boundary_nodes();
  require(!fixed.empty(), "mesh has no outer boundary nodes");
  std::vector<int> dofs = mesh.shape_nodes();
  std::vector<double> values(dofs.size(), spec.mu_min);
  dofs.insert(dofs.end(), fixed.begin(), fixed.end());
  values.resize(dofs.size(), spec.mu_max);
  const std::vector<double> ones(mesh.triangle_count(), 1.0);
  const ConstrainedSystem sys =
      apply_dirichlet(assemble_stiffness(mesh, Arity::Scalar, ones),
                      Eigen::VectorXd::Zero(mesh.node_count()), dofs, values);
  Eigen::VectorXd mu = solve_spd(sys.matrix, sys.rhs, gradient_solver());
  // Prescribed values are exact; interior values obey the maximum principle
  // up to solver accuracy.
  for (std::size_t k = 0; k < dofs.size(); ++k) mu[dofs[k]] = values[k];
  return {Arity::Scalar, std::move(mu)};
}

NodalField sp_gradient(const MetricSpec &spec, const Mesh &mesh, const LinearFunctional &dj) {
  spec.validate();
  require(spec.kind == MetricSpec::Kind::SteklovPoincare, "sp_gradient needs an SP metric");
  check_functional(mesh, dj);
  const ConstrainedOperators ops = build(spec, mesh);
  const Eigen::VectorXd v =
      SpdFactorization(ops.b).solve(restricted(dj.coeffs, ops.dofs), kGradientSolveTolerance);
  return {Arity::Vector2, restricted(v, ops.dofs)};
}

NodalField riemannian_gradient(const MetricSpec &spec, const Mesh &mesh,
                               const LinearFunctional &dj) {
  return spec.kind == MetricSpec::Kind::Hs ? hs_gradient(spec, mesh, dj)
                                           : sp_gradient(spec, mesh, dj);
}

namespace {

// The discrete H^s form is w^T M P^s v with P = M^-1 B; B = M P is
// symmetric, so it also equals (P^a w)^T M (P^(s-a) v). Splitting the powers
// between both sides keeps the cancellation in P^k v, which grows like
// cond(P)^k for smooth v, to half the order.
class FormEvaluator {
 public:
  FormEvaluator(const MetricSpec &spec, const ConstrainedOperators &ops) : spec_(spec), ops_(ops) {
    if (spec.kind == MetricSpec::Kind::Hs && spec.order > 1) mass_.emplace(ops.mass);
  }

  /// Precomputes the v side.
  void set_left(const Eigen::VectorXd &v) {
    left_ = restricted(v, ops_.dofs);
    if (!mass_) {
      left_ = ops_.b * left_;
      return;
    }
    left_ = ops_.mass * power(std::move(left_), spec_.order - split());
  }

  double apply(const Eigen::VectorXd &w) const {
    Eigen::VectorXd x = restricted(w, ops_.dofs);
    if (mass_) x = power(std::move(x), split());
    return x.dot(left_);
  }

 private:
  int split() const { return spec_.order / 2; }

  Eigen::VectorXd power(Eigen::VectorXd x, int k) const {
    for (int j = 0; j < k; ++j) x = mass_->solve(ops_.b * x, kMassSolveTolerance);
    return x;
  }

  const MetricSpec &spec_;
  const ConstrainedOperators &ops_;
  std::optional<SpdFactorization> mass_;
  Eigen::VectorXd left_;
};

}  // namespace

double metric_inner(const MetricSpec &spec, const Mesh &mesh, const NodalField &v,
                    const NodalField &w) {
  spec.validate();
  const auto n = 2 * static_cast<Eigen::Index>(mesh.node_count());
  require(v.values.size() == n && w.values.size() == n, "fields do not match the mesh");
  const ConstrainedOperators ops = build(spec, mesh);
  FormEvaluator form(spec, ops);
  form.set_left(v.values);
  return form.apply(w.values);
}

double riesz_residual(const MetricSpec &spec, const Mesh &mesh, const NodalField &v,
                      const LinearFunctional &dj, std::span<const NodalField> probes) {
  spec.validate();
  check_functional(mesh, dj);
  require(v.values.size() == dj.coeffs.size(), "gradient does not match the mesh");
  const ConstrainedOperators ops = build(spec, mesh);
  FormEvaluator form(spec, ops);
  form.set_left(v.values);
  double worst = 0.0;
  for (const NodalField &w : probes) {
    require(w.values.size() == dj.coeffs.size(), "probe does not match the mesh");
    const Eigen::VectorXd wf = restricted(w.values, ops.dofs);
    const double lhs = form.apply(wf);
    const double rhs = dj.coeffs.dot(wf);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300));
  }
  return worst;
}

}  // namespace shapeflow
