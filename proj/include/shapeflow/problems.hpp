#pragma once

#include <memory>
#include <vector>

#include "shapeflow/fem.hpp"
#include "shapeflow/mesh.hpp"

namespace shapeflow {

/// P1 field on a fixed reference mesh, evaluated at arbitrary points.
/// Points outside the reference mesh are clamped to the nearest element.
class ReferenceField {
 public:
  ReferenceField(Mesh mesh, Eigen::VectorXd values);

  const Mesh &mesh() const { return mesh_; }
  const Eigen::VectorXd &values() const { return values_; }

  /// Containing element, or the nearest one for outside points.
  int locate(const Vec2 &x) const;
  double value(const Vec2 &x) const;
  /// Gradient of the interpolant on the element returned by locate().
  Vec2 gradient(const Vec2 &x) const;

 private:
  int nearest_element(const Vec2 &x) const;

  Mesh mesh_;
  Eigen::VectorXd values_;
  Vec2 origin_;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// Target values and their spatial gradients at the nodes of a mesh.
struct TargetSample {
  Eigen::VectorXd values;
  std::vector<Vec2> gradients;
};

TargetSample sample_target(const ReferenceField &target, const Mesh &mesh);

// ---------------------------------------------------------------------------
// Interface identification

struct InterfaceProblem {
  double kappa_in = 0.05;
  double kappa_out = 1.0;
  double flux = 10.0;  // Neumann data on OUTER edges
  double nu = 0.0;     // perimeter weight
  SolverOptions solver;

  void validate() const;
  /// kappa per cell from the region labels.
  std::vector<double> kappa(const Mesh &mesh) const;
};

/// Zero-mean solution of the conductivity problem. The multiplier absorbs
/// the net boundary flux.
ZeroMeanSolution interface_state(const InterfaceProblem &problem, const Mesh &mesh);

/// Zero-mean p with int kappa grad phi . grad p = -int (y - ybar) phi.
ZeroMeanSolution interface_adjoint(const InterfaceProblem &problem, const Mesh &mesh,
                                   const NodalField &y, const Eigen::VectorXd &ybar);

/// 1/2 (y - ybar)^T M (y - ybar) + nu * length(shape).
double interface_objective(const InterfaceProblem &problem, const Mesh &mesh,
                           const NodalField &y, const Eigen::VectorXd &ybar);

/// Exact derivative of the discrete objective along nodal vector fields W,
/// with ybar re-evaluated at the moved nodes.
LinearFunctional interface_shape_derivative(const InterfaceProblem &problem,
                                            const Mesh &mesh,
                                            const ZeroMeanSolution &state,
                                            const ZeroMeanSolution &adjoint,
                                            const TargetSample &target);

/// State on the reference mesh wrapped as a field for point evaluation.
ReferenceField make_target(const InterfaceProblem &problem, const Mesh &reference_mesh);

/// Target values transferred to the nodes of a working mesh.
NodalField generate_target(const InterfaceProblem &problem, const Mesh &reference_mesh,
                           const Mesh &working_mesh);

// ---------------------------------------------------------------------------
// Compliance

struct ComplianceProblem {
  Vec2 body_force{0.0, 0.0};
  Vec2 load{0.0, -0.25};  // traction on NEUMANN_LOAD edges
  double young = 1.0;
  double poisson = 0.3;
  double volume_weight = 0.099;
  // Elasticity on thin members is too ill-conditioned for Jacobi CG.
  SolverOptions solver{.kind = SolverKind::Direct};

  void validate() const;
  double lame_mu() const { return young / (2.0 * (1.0 + poisson)); }
  double lame_lambda() const {
    return young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  }
};

/// Body force plus NEUMANN_LOAD traction as a vector functional.
LinearFunctional compliance_load(const ComplianceProblem &problem, const Mesh &mesh);

/// Displacement clamped on DIRICHLET nodes.
NodalField compliance_state(const ComplianceProblem &problem, const Mesh &mesh);

double compliance_objective(const ComplianceProblem &problem, const Mesh &mesh,
                            const NodalField &y);

/// Exact derivative of the discrete compliance along nodal vector fields.
LinearFunctional compliance_shape_derivative(const ComplianceProblem &problem,
                                             const Mesh &mesh, const NodalField &y);

// ---------------------------------------------------------------------------

struct Evaluation {
  double objective = 0.0;
  LinearFunctional derivative;
  NodalField state;
};

/// Objective over meshes consumed by the optimizer.
class ShapeProblem {
 public:
  virtual ~ShapeProblem() = default;
  virtual Evaluation evaluate(const Mesh &mesh) const = 0;
  virtual double objective(const Mesh &mesh) const = 0;
};

class InterfaceObjective : public ShapeProblem {
 public:
  InterfaceObjective(InterfaceProblem problem, std::shared_ptr<const ReferenceField> target);

  Evaluation evaluate(const Mesh &mesh) const override;
  double objective(const Mesh &mesh) const override;

  const InterfaceProblem &problem() const { return problem_; }
  const ReferenceField &target() const { return *target_; }

 private:
  InterfaceProblem problem_;
  std::shared_ptr<const ReferenceField> target_;
};

class ComplianceObjective : public ShapeProblem {
 public:
  explicit ComplianceObjective(ComplianceProblem problem);

  Evaluation evaluate(const Mesh &mesh) const override;
  double objective(const Mesh &mesh) const override;

  const ComplianceProblem &problem() const { return problem_; }

 private:
  ComplianceProblem problem_;
};

}  // namespace shapeflow
