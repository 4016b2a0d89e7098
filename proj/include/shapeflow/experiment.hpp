#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "shapeflow/optimizer.hpp"

namespace shapeflow {

enum class ExperimentKind { Interface, Bridge };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string &name);

/// One optimization run with every numerical parameter spelled out. The
/// presets carry the published per-metric parameters.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Interface;
  MetricSpec metric;
  double stepsize = 0.01;
  StopRule stop;
  int max_iters = 500;
  double target_h = 0.035;
  double remesh_quality_threshold = 0.0;
  std::filesystem::path output_dir;  // empty: write nothing

  /// metric_name is one of sp, h1, h2, h3, h4.
  static ExperimentConfig preset(ExperimentKind experiment, const std::string &metric_name);

  void validate() const;
  DescentConfig descent() const;
};

/// Radius profile of the interface used to synthesize the measurement.
ClosedCurve interface_ground_truth();
inline constexpr double kReferenceMeshSize = 0.02;

Rect interface_hold_all();
Mesh initial_mesh(ExperimentKind experiment, double target_h);

/// Objective of the experiment; the interface target is built once on the
/// reference mesh.
std::unique_ptr<ShapeProblem> make_problem(ExperimentKind experiment);

/// history.csv with the header iter,objective,norm_felas,msh_quality,stepsize,remeshed.
void write_history_csv(const History &history, const std::filesystem::path &path);

struct ExperimentResult {
  RunResult run;
  Mesh initial;
  std::string summary;
};

/// "<experiment> <metric> k=.. J=.. |V|=.. phi=.. reason=.. remeshes=..".
std::string summary_line(const ExperimentConfig &config, const History &history);

/// Runs the optimizer and, when output_dir is set, writes history.csv,
/// initial.mesh and final.mesh (with state and gradient fields).
ExperimentResult run_experiment(const ExperimentConfig &config,
                                const IterationObserver &observer = {});

struct GradientReport {
  std::string metric;
  double l2_norm = 0.0;
  double seconds = 0.0;  // gradient solve only
  NodalField gradient;
};

/// Gradients of every listed metric for the shape derivative at the initial
/// shape. Writes gradients.mesh and gradients.csv when output_dir is set.
std::vector<GradientReport> compare_gradients(ExperimentKind experiment,
                                              const std::vector<MetricSpec> &metrics,
                                              double target_h,
                                              const std::filesystem::path &output_dir = {});

struct FdFieldResult {
  double derivative = 0.0;
  std::vector<double> errors;  // one per step
  double order = 0.0;          // least-squares slope of log error against log t
};

struct FdReport {
  std::vector<double> steps;
  std::vector<FdFieldResult> fields;
  double min_order() const;
};

inline const std::vector<double> kFdSteps{1e-2, 1e-3, 1e-4, 1e-5};

/// Compares DJ[W] with one-sided difference quotients for random smooth
/// fields W vanishing on the fixed boundary. The interface measurement is
/// carried with the nodes, so both sides differentiate the same discrete
/// objective.
FdReport fd_check(ExperimentKind experiment, std::uint32_t seed, int field_count,
                  double target_h, const std::vector<double> &steps = kFdSteps);

inline constexpr double kFdInterfaceMeshSize = 0.035;
inline constexpr double kFdBridgeMeshSize = 0.25;

}  // namespace shapeflow
