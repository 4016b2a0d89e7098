#include "shapeflow/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "shapeflow/error.hpp"

namespace shapeflow {

void DescentConfig::validate() const {
  metric.validate();
  require(stepsize > 0.0 && std::isfinite(stepsize), "stepsize must be positive");
  require(max_iters >= 1, "max_iters must be at least 1");
  require(stop.tol > 0.0, "stopping tolerance must be positive");
  require(stop.kind != StopRule::Kind::Plateau || stop.window >= 1,
          "plateau window must be at least 1");
  require(remesh_quality_threshold >= 0.0 && remesh_quality_threshold < 1.0,
          "remesh threshold must lie in [0, 1)");
  require(remesh_quality_threshold == 0.0 || remesh_target_h > 0.0,
          "remeshing needs a positive target size");
  require(step_halving_cap >= 0, "halving cap must be nonnegative");
  require(quality_drop_factor >= 0.0 && quality_drop_factor < 1.0,
          "quality drop factor must lie in [0, 1)");
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::Converged: return "converged";
    case Termination::MaxIters: return "max_iters";
    case Termination::StepFailure: return "step_failure";
  }
  return "unknown";
}

namespace {

struct Retraction {
  Mesh mesh;
  double t;
};

Retraction retract(const ShapeProblem &problem, const Mesh &mesh, const NodalField &v,
                   double objective, double slope, double quality,
                   const DescentConfig &config, double t) {
  const Eigen::VectorXd direction = -v.values;
  const std::span<const double> field(direction.data(), static_cast<std::size_t>(direction.size()));
  for (int attempt = 0; attempt <= config.step_halving_cap; ++attempt, t *= 0.5) {
    Mesh moved;
    try {
      moved = deform(mesh, field, t);
    } catch (const InvertedElement &) {
      continue;
    }
    if (mesh_quality(moved) < config.quality_drop_factor * quality) continue;
    // Positive orientation is only local; holes can still fold over each other.
    if (boundary_self_intersects(moved)) continue;
    if (config.armijo && !(problem.objective(moved) <= objective + config.armijo_c * t * slope))
      continue;
    return {std::move(moved), t};
  }
  throw Error(ErrorKind::StepFailure,
              "no admissible step after " + std::to_string(config.step_halving_cap) +
                  " halvings");
}

struct Iterate {
  Evaluation evaluation;
  NodalField gradient;
  IterationRecord record;
};

Iterate evaluate_iterate(const ShapeProblem &problem, const Mesh &mesh,
                         const DescentConfig &config, int iter, bool remeshed) {
  Iterate it;
  it.evaluation = problem.evaluate(mesh);
  it.gradient = riemannian_gradient(config.metric, mesh, it.evaluation.derivative);
  it.record.iter = iter;
  it.record.objective = it.evaluation.objective;
  it.record.grad_l2 = l2_norm(mesh, it.gradient);
  it.record.mesh_quality = mesh_quality(mesh);
  it.record.remeshed = remeshed;
  it.record.slope = -it.evaluation.derivative(it.gradient);
  return it;
}

}  // namespace

StepOutcome step(const ShapeProblem &problem, const Mesh &mesh, const DescentConfig &config,
                 double t) {
  config.validate();
  require(t > 0.0, "stepsize must be positive");
  Iterate it = evaluate_iterate(problem, mesh, config, 0, false);
  StepOutcome out{mesh, it.record, std::move(it.evaluation), std::move(it.gradient)};
  if (out.gradient.values.cwiseAbs().maxCoeff() == 0.0) return out;
  Retraction r = retract(problem, mesh, out.gradient, out.record.objective, out.record.slope,
                         out.record.mesh_quality, config, t);
  out.mesh = std::move(r.mesh);
  out.record.stepsize = r.t;
  return out;
}

bool stop_check(const History &history, const StopRule &rule) {
  require(!history.records.empty(), "stop_check needs a nonempty history");
  const auto &recs = history.records;
  if (rule.kind == StopRule::Kind::GradNorm) return recs.back().grad_l2 < rule.tol;
  const auto w = static_cast<std::size_t>(rule.window);
  if (recs.size() < w + 1) return false;
  const double current = recs.back().objective;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= w; ++m)
    worst = std::max(worst, recs[recs.size() - 1 - m].objective - current);
  return worst < rule.tol;
}

RunResult run(const ShapeProblem &problem, const Mesh &initial, const DescentConfig &config,
              const IterationObserver &observer) {
  config.validate();
  RunResult result;
  History &history = result.history;
  Mesh mesh = initial;
  double t = config.stepsize;
  bool remeshed = false;
  const bool remeshing = config.remesh_quality_threshold > 0.0;

  for (int k = 0;; ++k) {
    Iterate it;
    try {
      it = evaluate_iterate(problem, mesh, config, k, remeshed);
    } catch (const Error &e) {
      // A degenerate iterate can defeat the linear solvers; the run ends at
      // the previous record.
      if (e.kind() != ErrorKind::Solver || k == 0) throw;
      history.reason = Termination::StepFailure;
      break;
    }
    history.records.push_back(it.record);
    IterationRecord &rec = history.records.back();
    result.final_state = std::move(it.evaluation.state);
    result.final_gradient = it.gradient;

    bool done = false;
    if (stop_check(history, config.stop)) {
      history.reason = Termination::Converged;
      done = true;
    } else if (k + 1 >= config.max_iters) {
      history.reason = Termination::MaxIters;
      done = true;
    }
    if (done) {
      if (observer) observer(rec, mesh);
      break;
    }

    std::optional<Retraction> next;
    try {
      next = retract(problem, mesh, it.gradient, rec.objective, rec.slope, rec.mesh_quality,
                     config, t);
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::StepFailure) throw;
    }
    if (next) rec.stepsize = next->t;
    if (observer) observer(rec, mesh);
    if (!next) {
      if (!remeshing || remeshed) {
        history.reason = Termination::StepFailure;
        break;
      }
      // Retry from a fresh triangulation of the same boundary.
      mesh = remesh(mesh, config.remesh_target_h);
      t *= 0.5;
      ++history.remesh_count;
      remeshed = true;
      continue;
    }
    mesh = std::move(next->mesh);
    remeshed = false;

    if (remeshing && mesh_quality(mesh) < config.remesh_quality_threshold) {
      mesh = remesh(mesh, config.remesh_target_h);
      t *= 0.5;
      ++history.remesh_count;
      remeshed = true;
    }
  }
  result.final_mesh = std::move(mesh);
  return result;
}

}  // namespace shapeflow
