#include "shapeflow/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shapeflow/error.hpp"

namespace shapeflow {

namespace {

constexpr double kLocateSlack = 1e-12;

std::array<double, 3> barycentric(const Mesh &mesh, int t, const Vec2 &x) {
  const Triangle &tri = mesh.triangle(t);
  const Vec2 &a = mesh.node(tri[0]), &b = mesh.node(tri[1]), &c = mesh.node(tri[2]);
  const double twice = orient2d(a, b, c);
  return {orient2d(x, b, c) / twice, orient2d(a, x, c) / twice, orient2d(a, b, x) / twice};
}

Vec2 closest_point_on_segment(const Vec2 &p, const Vec2 &a, const Vec2 &b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return a;
  const double s = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return a + s * d;
}

// Symmetric 2x2 tensors are stored as full matrices.
using Mat2 = Eigen::Matrix2d;

// (grad y)_{ik} = d_k y_i for a P1 vector field on one element.
Mat2 element_vector_gradient(const Triangle &t, const ElementGeometry &g,
                             const Eigen::VectorXd &y) {
  Mat2 grad = Mat2::Zero();
  for (int v = 0; v < 3; ++v)
    grad += Vec2(y[2 * t[v]], y[2 * t[v] + 1]) * g.grad[v].transpose();
  return grad;
}

Vec2 element_scalar_gradient(const Triangle &t, const ElementGeometry &g,
                             const Eigen::VectorXd &y) {
  return y[t[0]] * g.grad[0] + y[t[1]] * g.grad[1] + y[t[2]] * g.grad[2];
}

void add_vec(Eigen::VectorXd &coeffs, int node, const Vec2 &v) {
  coeffs[2 * node] += v.x();
  coeffs[2 * node + 1] += v.y();
}

// d/dW of the length of edge (a, b) is tau . (W_b - W_a).
void add_edge_length_derivative(Eigen::VectorXd &coeffs, const Mesh &mesh, int a, int b,
                                double weight) {
  const Vec2 tau = (mesh.node(b) - mesh.node(a)).normalized();
  add_vec(coeffs, b, weight * tau);
  add_vec(coeffs, a, -weight * tau);
}

}  // namespace

// ---------------------------------------------------------------------------

ReferenceField::ReferenceField(Mesh mesh, Eigen::VectorXd values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  require(values_.size() == static_cast<Eigen::Index>(mesh_.node_count()),
          "reference values must be nodal");
  require(mesh_.triangle_count() > 0, "reference mesh is empty");
  Vec2 lo = mesh_.node(0), hi = mesh_.node(0);
  for (const Vec2 &p : mesh_.nodes()) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double h = std::sqrt(mesh_.area() / static_cast<double>(mesh_.triangle_count()));
  cell_ = 2.0 * h;
  origin_ = lo;
  nx_ = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cell_)));
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (int t = 0; t < static_cast<int>(mesh_.triangle_count()); ++t) {
    Vec2 tlo = mesh_.node(mesh_.triangle(t)[0]), thi = tlo;
    for (const int v : mesh_.triangle(t)) {
      tlo = tlo.cwiseMin(mesh_.node(v));
      thi = thi.cwiseMax(mesh_.node(v));
    }
    const int i0 = std::clamp(static_cast<int>((tlo.x() - origin_.x()) / cell_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((thi.x() - origin_.x()) / cell_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((tlo.y() - origin_.y()) / cell_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((thi.y() - origin_.y()) / cell_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(t);
  }
}

int ReferenceField::locate(const Vec2 &x) const {
  const int i = std::clamp(static_cast<int>(std::floor((x.x() - origin_.x()) / cell_)), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor((x.y() - origin_.y()) / cell_)), 0, ny_ - 1);
  int best = -1;
  double best_min = -kLocateSlack;
  for (const int t : buckets_[static_cast<std::size_t>(j) * nx_ + i]) {
    const auto l = barycentric(mesh_, t, x);
    const double m = std::min({l[0], l[1], l[2]});
    if (m >= best_min) {
      if (best < 0 || m > best_min) best = t;
      best_min = std::max(best_min, m);
    }
  }
  return best >= 0 ? best : nearest_element(x);
}

int ReferenceField::nearest_element(const Vec2 &x) const {
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int t = 0; t < static_cast<int>(mesh_.triangle_count()); ++t) {
    const Triangle &tri = mesh_.triangle(t);
    double d = std::numeric_limits<double>::infinity();
    for (int e = 0; e < 3; ++e)
      d = std::min(d, point_segment_distance(x, mesh_.node(tri[e]), mesh_.node(tri[(e + 1) % 3])));
    if (d < best_dist) {
      best_dist = d;
      best = t;
    }
  }
  return best;
}

double ReferenceField::value(const Vec2 &x) const {
  const int t = locate(x);
  const Triangle &tri = mesh_.triangle(t);
  for (const int v : tri)
    if (mesh_.node(v) == x) return values_[v];
  auto l = barycentric(mesh_, t, x);
  if (std::min({l[0], l[1], l[2]}) < 0.0) {
    Vec2 best = mesh_.node(tri[0]);
    double best_d = std::numeric_limits<double>::infinity();
    for (int e = 0; e < 3; ++e) {
      const Vec2 c = closest_point_on_segment(x, mesh_.node(tri[e]), mesh_.node(tri[(e + 1) % 3]));
      const double d = (c - x).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    l = barycentric(mesh_, t, best);
  }
  return l[0] * values_[tri[0]] + l[1] * values_[tri[1]] + l[2] * values_[tri[2]];
}

Vec2 ReferenceField::gradient(const Vec2 &x) const {
  const int t = locate(x);
  return element_scalar_gradient(mesh_.triangle(t), element_geometry(mesh_, t), values_);
}

TargetSample sample_target(const ReferenceField &target, const Mesh &mesh) {
  TargetSample s;
  s.values.resize(static_cast<Eigen::Index>(mesh.node_count()));
  s.gradients.resize(mesh.node_count());
  for (int i = 0; i < static_cast<int>(mesh.node_count()); ++i) {
    s.values[i] = target.value(mesh.node(i));
    s.gradients[i] = target.gradient(mesh.node(i));
  }
  // States are zero-mean, so a constant offset in the target cannot be
  // matched. Removing it makes the misfit integrate to zero, which also
  // cancels the offset's own shape derivative. Offsets at round-off level
  // stay, so a transfer onto the reference mesh itself is exact.
  const double offset = integrate(mesh, s.values) / mesh.area();
  if (std::abs(offset) > 1e-12 * std::max(1.0, s.values.cwiseAbs().maxCoeff()))
    s.values.array() -= offset;
  return s;
}

// ---------------------------------------------------------------------------

void InterfaceProblem::validate() const {
  require(kappa_in > 0.0 && kappa_out > 0.0, "conductivities must be positive");
  require(nu >= 0.0, "perimeter weight must be nonnegative");
  require(std::isfinite(flux), "flux must be finite");
}

std::vector<double> InterfaceProblem::kappa(const Mesh &mesh) const {
  std::vector<double> k(mesh.triangle_count());
  for (std::size_t t = 0; t < k.size(); ++t)
    k[t] = mesh.cell_region()[t] == kRegionInside ? kappa_in : kappa_out;
  return k;
}

ZeroMeanSolution interface_state(const InterfaceProblem &problem, const Mesh &mesh) {
  problem.validate();
  const SparseMatrix k = assemble_stiffness(mesh, Arity::Scalar, problem.kappa(mesh));
  return solve_zero_mean(k, boundary_load(mesh, Marker::Outer, problem.flux), mesh,
                         NeumannCompatibility::Absorb, problem.solver);
}

namespace {

// (M e) for a scalar P1 field, element by element.
Eigen::VectorXd mass_times(const Mesh &mesh, const Eigen::VectorXd &e) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(e.size());
  for (int k = 0; k < static_cast<int>(mesh.triangle_count()); ++k) {
    const Triangle &t = mesh.triangle(k);
    const double w = mesh.triangle_area(k) / 12.0;
    const double sum = e[t[0]] + e[t[1]] + e[t[2]];
    for (const int v : t) out[v] += w * (e[v] + sum);
  }
  return out;
}

}  // namespace

ZeroMeanSolution interface_adjoint(const InterfaceProblem &problem, const Mesh &mesh,
                                   const NodalField &y, const Eigen::VectorXd &ybar) {
  problem.validate();
  require(y.values.size() == ybar.size() &&
              ybar.size() == static_cast<Eigen::Index>(mesh.node_count()),
          "state and target must be nodal scalar fields on the mesh");
  const SparseMatrix k = assemble_stiffness(mesh, Arity::Scalar, problem.kappa(mesh));
  return solve_zero_mean(k, {Arity::Scalar, -mass_times(mesh, y.values - ybar)}, mesh,
                         NeumannCompatibility::Absorb, problem.solver);
}

double interface_objective(const InterfaceProblem &problem, const Mesh &mesh,
                           const NodalField &y, const Eigen::VectorXd &ybar) {
  require(y.values.size() == ybar.size() &&
              ybar.size() == static_cast<Eigen::Index>(mesh.node_count()),
          "state and target must be nodal scalar fields on the mesh");
  const double tracking = l2_norm(mesh, {Arity::Scalar, y.values - ybar});
  double value = 0.5 * tracking * tracking;
  if (problem.nu > 0.0) value += problem.nu * mesh.marker_length(Marker::Shape);
  return value;
}

LinearFunctional interface_shape_derivative(const InterfaceProblem &problem,
                                            const Mesh &mesh,
                                            const ZeroMeanSolution &state,
                                            const ZeroMeanSolution &adjoint,
                                            const TargetSample &target) {
  problem.validate();
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  const Eigen::VectorXd &y = state.field.values;
  const Eigen::VectorXd &p = adjoint.field.values;
  require(y.size() == n && p.size() == n && target.values.size() == n &&
              target.gradients.size() == mesh.node_count(),
          "fields do not match the mesh");
  const Eigen::VectorXd e = y - target.values;
  const std::vector<double> kappa = problem.kappa(mesh);
  LinearFunctional dj = LinearFunctional::zeros(mesh, Arity::Vector2);

  for (int k = 0; k < static_cast<int>(mesh.triangle_count()); ++k) {
    const Triangle &t = mesh.triangle(k);
    const ElementGeometry g = element_geometry(mesh, k);
    const Vec2 gy = element_scalar_gradient(t, g, y);
    const Vec2 gp = element_scalar_gradient(t, g, p);
    const double se = e[t[0]] + e[t[1]] + e[t[2]];
    const double int_e2 =
        g.area / 12.0 * (e[t[0]] * e[t[0]] + e[t[1]] * e[t[1]] + e[t[2]] * e[t[2]] + se * se);
    const double p_mean = (p[t[0]] + p[t[1]] + p[t[2]]) / 3.0;
    const double y_mean = (y[t[0]] + y[t[1]] + y[t[2]]) / 3.0;
    // Coefficient of div W from the tracking term and the mean constraint.
    const double div_coeff = 0.5 * int_e2 + g.area * (state.multiplier * p_mean +
                                                      adjoint.multiplier * y_mean);
    const double kk = kappa[k] * g.area;
    for (int a = 0; a < 3; ++a) {
      const Vec2 &ga = g.grad[a];
      const Vec2 c = div_coeff * ga +
                     kk * (gy.dot(gp) * ga - ga.dot(gp) * gy - ga.dot(gy) * gp);
      add_vec(dj.coeffs, t[a], c);
    }
  }

  // Target moving with the nodes.
  const Eigen::VectorXd me = mass_times(mesh, e);
  for (Eigen::Index a = 0; a < n; ++a)
    add_vec(dj.coeffs, static_cast<int>(a), -me[a] * target.gradients[a]);

  // Boundary flux and perimeter terms through edge-length derivatives.
  for (const BoundaryEdge &edge : mesh.boundary_edges()) {
    if (edge.marker == Marker::Outer && problem.flux != 0.0)
      add_edge_length_derivative(dj.coeffs, mesh, edge.a, edge.b,
                                 -problem.flux * 0.5 * (p[edge.a] + p[edge.b]));
    if (edge.marker == Marker::Shape && problem.nu > 0.0)
      add_edge_length_derivative(dj.coeffs, mesh, edge.a, edge.b, problem.nu);
  }
  return dj;
}

ReferenceField make_target(const InterfaceProblem &problem, const Mesh &reference_mesh) {
  ZeroMeanSolution y = interface_state(problem, reference_mesh);
  return ReferenceField(reference_mesh, std::move(y.field.values));
}

NodalField generate_target(const InterfaceProblem &problem, const Mesh &reference_mesh,
                           const Mesh &working_mesh) {
  const ReferenceField field = make_target(problem, reference_mesh);
  return {Arity::Scalar, sample_target(field, working_mesh).values};
}

// ---------------------------------------------------------------------------

void ComplianceProblem::validate() const {
  require(young > 0.0, "Young's modulus must be positive");
  require(poisson >= 0.0 && poisson < 0.5, "Poisson ratio must lie in [0, 0.5)");
  require(volume_weight >= 0.0, "volume weight must be nonnegative");
}

LinearFunctional compliance_load(const ComplianceProblem &problem, const Mesh &mesh) {
  LinearFunctional f = LinearFunctional::zeros(mesh, Arity::Vector2);
  if (problem.body_force != Vec2::Zero())
    for (int k = 0; k < static_cast<int>(mesh.triangle_count()); ++k) {
      const Vec2 share = problem.body_force * (mesh.triangle_area(k) / 3.0);
      for (const int v : mesh.triangle(k)) add_vec(f.coeffs, v, share);
    }
  if (mesh.has_marker(Marker::NeumannLoad))
    f.coeffs += boundary_load(mesh, Marker::NeumannLoad, problem.load).coeffs;
  return f;
}

NodalField compliance_state(const ComplianceProblem &problem, const Mesh &mesh) {
  problem.validate();
  const std::vector<int> clamped = mesh.nodes_with_marker(Marker::Dirichlet);
  require(!clamped.empty(), "compliance problem needs DIRICHLET nodes");
  const std::vector<double> mu(mesh.node_count(), problem.lame_mu());
  const SparseMatrix k = assemble_elasticity(mesh, mu, problem.lame_lambda());
  const ConstrainedSystem sys = apply_dirichlet(k, compliance_load(problem, mesh).coeffs,
                                                node_dofs(clamped, Arity::Vector2));
  return {Arity::Vector2, solve_spd(sys.matrix, sys.rhs, problem.solver)};
}

double compliance_objective(const ComplianceProblem &problem, const Mesh &mesh,
                            const NodalField &y) {
  require(y.arity == Arity::Vector2 &&
              y.values.size() == 2 * static_cast<Eigen::Index>(mesh.node_count()),
          "displacement must be a nodal vector field on the mesh");
  return compliance_load(problem, mesh)(y) + problem.volume_weight * mesh.area();
}

LinearFunctional compliance_shape_derivative(const ComplianceProblem &problem,
                                             const Mesh &mesh, const NodalField &y) {
  problem.validate();
  require(y.arity == Arity::Vector2 &&
              y.values.size() == 2 * static_cast<Eigen::Index>(mesh.node_count()),
          "displacement must be a nodal vector field on the mesh");
  const double mu = problem.lame_mu(), lambda = problem.lame_lambda();
  const Eigen::VectorXd &u = y.values;
  LinearFunctional dj = LinearFunctional::zeros(mesh, Arity::Vector2);

  for (int k = 0; k < static_cast<int>(mesh.triangle_count()); ++k) {
    const Triangle &t = mesh.triangle(k);
    const ElementGeometry g = element_geometry(mesh, k);
    const Mat2 grad = element_vector_gradient(t, g, u);
    const Mat2 eps = 0.5 * (grad + grad.transpose());
    const Mat2 sigma = 2.0 * mu * eps + lambda * eps.trace() * Mat2::Identity();
    const double energy = (sigma.array() * eps.array()).sum();
    Vec2 u_mean = Vec2::Zero();
    for (const int v : t) u_mean += Vec2(u[2 * v], u[2 * v + 1]) / 3.0;
    const double div_coeff =
        g.area * (2.0 * problem.body_force.dot(u_mean) - energy + problem.volume_weight);
    for (int a = 0; a < 3; ++a) {
      const Vec2 &ga = g.grad[a];
      add_vec(dj.coeffs, t[a], div_coeff * ga + 2.0 * g.area * grad.transpose() * sigma * ga);
    }
  }
  for (const BoundaryEdge &edge : mesh.boundary_edges()) {
    if (edge.marker != Marker::NeumannLoad) continue;
    const Vec2 ua(u[2 * edge.a], u[2 * edge.a + 1]), ub(u[2 * edge.b], u[2 * edge.b + 1]);
    add_edge_length_derivative(dj.coeffs, mesh, edge.a, edge.b,
                               problem.load.dot(ua + ub));
  }
  return dj;
}

// ---------------------------------------------------------------------------

InterfaceObjective::InterfaceObjective(InterfaceProblem problem,
                                       std::shared_ptr<const ReferenceField> target)
    : problem_(problem), target_(std::move(target)) {
  problem_.validate();
  require(target_ != nullptr, "interface objective needs a target");
}

Evaluation InterfaceObjective::evaluate(const Mesh &mesh) const {
  const TargetSample ybar = sample_target(*target_, mesh);
  ZeroMeanSolution y = interface_state(problem_, mesh);
  const ZeroMeanSolution p = interface_adjoint(problem_, mesh, y.field, ybar.values);
  Evaluation out;
  out.objective = interface_objective(problem_, mesh, y.field, ybar.values);
  out.derivative = interface_shape_derivative(problem_, mesh, y, p, ybar);
  out.state = std::move(y.field);
  return out;
}

double InterfaceObjective::objective(const Mesh &mesh) const {
  const ZeroMeanSolution y = interface_state(problem_, mesh);
  return interface_objective(problem_, mesh, y.field, sample_target(*target_, mesh).values);
}

ComplianceObjective::ComplianceObjective(ComplianceProblem problem) : problem_(problem) {
  problem_.validate();
}

Evaluation ComplianceObjective::evaluate(const Mesh &mesh) const {
  Evaluation out;
  out.state = compliance_state(problem_, mesh);
  out.objective = compliance_objective(problem_, mesh, out.state);
  out.derivative = compliance_shape_derivative(problem_, mesh, out.state);
  return out;
}

double ComplianceObjective::objective(const Mesh &mesh) const {
  return compliance_objective(problem_, mesh, compliance_state(problem_, mesh));
}

}  // namespace shapeflow
