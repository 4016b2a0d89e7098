#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shapeflow/metrics.hpp"
#include "shapeflow/problems.hpp"

namespace shapeflow {

struct StopRule {
  enum class Kind { GradNorm, Plateau };

  Kind kind = Kind::GradNorm;
  double tol = 2e-4;  // GradNorm threshold or Plateau epsilon
  int window = 10;    // Plateau look-back

  static StopRule grad_norm(double tol) { return {Kind::GradNorm, tol, 10}; }
  static StopRule plateau(double eps, int window = 10) { return {Kind::Plateau, eps, window}; }
};

struct DescentConfig {
  MetricSpec metric;
  double stepsize = 0.01;
  int max_iters = 500;
  StopRule stop;
  double remesh_quality_threshold = 0.0;  // 0 disables remeshing
  double remesh_target_h = 0.0;           // required when remeshing is enabled
  int step_halving_cap = 20;
  double quality_drop_factor = 0.5;  // reject steps with quality < factor * current
  bool armijo = false;               // additionally require sufficient decrease
  double armijo_c = 1e-4;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double grad_l2 = 0.0;
  double mesh_quality = 0.0;
  double stepsize = 0.0;  // step taken from this iterate, 0 for the last one
  bool remeshed = false;  // this iterate was produced by a remesh
  double slope = 0.0;     // dJ(-V)
};

enum class Termination { Converged, MaxIters, StepFailure };

std::string to_string(Termination reason);

struct History {
  std::vector<IterationRecord> records;
  Termination reason = Termination::MaxIters;
  int remesh_count = 0;
};

struct StepOutcome {
  Mesh mesh;
  IterationRecord record;
  Evaluation evaluation;
  NodalField gradient;
};

/// One descent step from `mesh` with base stepsize t: evaluates, computes
/// the gradient and retracts along -V, halving t until the moved mesh is
/// admissible. Rejected: inverted elements, crossing boundary edges, and
/// quality below quality_drop_factor times the current one. Throws
/// Error(StepFailure) once the halving cap is spent.
StepOutcome step(const ShapeProblem &problem, const Mesh &mesh, const DescentConfig &config,
                 double t);

bool stop_check(const History &history, const StopRule &rule);

struct RunResult {
  History history;
  Mesh final_mesh;
  NodalField final_state;
  NodalField final_gradient;
};

/// Called after every recorded iterate.
using IterationObserver = std::function<void(const IterationRecord &, const Mesh &)>;

RunResult run(const ShapeProblem &problem, const Mesh &initial, const DescentConfig &config,
              const IterationObserver &observer = {});

}  // namespace shapeflow
