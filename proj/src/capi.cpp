#include "shapeflow/shapeflow.h"

#include <algorithm>
#include <cstring>
#include <new>
#include <string>

#include "shapeflow/error.hpp"
#include "shapeflow/experiment.hpp"

struct sf_mesh {
  shapeflow::Mesh mesh;
};

struct sf_history {
  shapeflow::History history;
  shapeflow::Mesh final_mesh;
  std::string summary;
};

namespace {

using namespace shapeflow;

thread_local std::string last_error;

sf_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return SF_ERR_INVALID_ARGUMENT;
    case ErrorKind::InvertedElement: return SF_ERR_INVERTED_ELEMENT;
    case ErrorKind::Mesh: return SF_ERR_MESH;
    case ErrorKind::Solver: return SF_ERR_SOLVER;
    case ErrorKind::Io: return SF_ERR_IO;
    case ErrorKind::StepFailure: return SF_ERR_STEP_FAILURE;
  }
  return SF_ERR_INTERNAL;
}

// Runs body, translating exceptions into status codes at the boundary.
template <class F>
sf_status guarded(F &&body) {
  try {
    body();
    last_error.clear();
    return SF_OK;
  } catch (const Error &e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc &) {
    last_error = "out of memory";
  } catch (const std::exception &e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return SF_ERR_INTERNAL;
}

void need(const void *p, const char *name) {
  require(p != nullptr, std::string(name) + " must not be NULL");
}

ExperimentKind kind_of(sf_experiment e) {
  require(e == SF_INTERFACE || e == SF_BRIDGE, "unknown experiment");
  return e == SF_INTERFACE ? ExperimentKind::Interface : ExperimentKind::Bridge;
}

std::string metric_name(const char (&field)[8]) {
  return std::string(field, strnlen(field, sizeof field));
}

void copy_name(const std::string &name, char (&field)[8]) {
  std::memset(field, 0, sizeof field);
  std::memcpy(field, name.data(), std::min(name.size(), sizeof field - 1));
}

MetricSpec metric_of(const sf_config &c) {
  const std::string name = metric_name(c.metric);
  if (name == "sp") return MetricSpec::steklov_poincare(c.mu_min, c.mu_max);
  if (name.size() == 2 && name[0] == 'h' && name[1] >= '1' && name[1] <= '9')
    return MetricSpec::hs(name[1] - '0', c.A);
  throw Error(ErrorKind::InvalidArgument, "unknown metric '" + name + "'");
}

ExperimentConfig config_of(const sf_config &c) {
  ExperimentConfig e;
  e.experiment = kind_of(c.experiment);
  e.metric = metric_of(c);
  e.stepsize = c.stepsize;
  require(c.stop_kind == SF_STOP_GRAD_NORM || c.stop_kind == SF_STOP_PLATEAU,
          "unknown stopping rule");
  e.stop = c.stop_kind == SF_STOP_GRAD_NORM ? StopRule::grad_norm(c.tol)
                                            : StopRule::plateau(c.tol, c.window);
  e.max_iters = c.max_iters;
  e.target_h = c.target_h;
  e.remesh_quality_threshold = c.remesh_threshold;
  e.validate();
  return e;
}

}  // namespace

extern "C" {

const char *sf_last_error(void) { return last_error.c_str(); }

const char *sf_status_string(sf_status status) {
  switch (status) {
    case SF_OK: return "ok";
    case SF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SF_ERR_INVERTED_ELEMENT: return "inverted element";
    case SF_ERR_MESH: return "mesh error";
    case SF_ERR_SOLVER: return "solver failure";
    case SF_ERR_IO: return "i/o error";
    case SF_ERR_STEP_FAILURE: return "step failure";
    case SF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

sf_status sf_mesh_generate(sf_experiment experiment, double target_h, sf_mesh **out) {
  return guarded([&] {
    need(out, "out");
    *out = new sf_mesh{initial_mesh(kind_of(experiment), target_h)};
  });
}

sf_status sf_mesh_read(const char *path, sf_mesh **out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sf_mesh{read_mesh(path)};
  });
}

sf_status sf_mesh_write(const sf_mesh *mesh, const char *path) {
  return guarded([&] {
    need(mesh, "mesh");
    need(path, "path");
    write_mesh(mesh->mesh, path);
  });
}

sf_status sf_mesh_counts(const sf_mesh *mesh, size_t *nodes, size_t *triangles) {
  return guarded([&] {
    need(mesh, "mesh");
    if (nodes) *nodes = mesh->mesh.node_count();
    if (triangles) *triangles = mesh->mesh.triangle_count();
  });
}

sf_status sf_mesh_quality(const sf_mesh *mesh, double *quality) {
  return guarded([&] {
    need(mesh, "mesh");
    need(quality, "quality");
    *quality = shapeflow::mesh_quality(mesh->mesh);
  });
}

void sf_mesh_free(sf_mesh *mesh) { delete mesh; }

sf_status sf_config_preset(sf_experiment experiment, const char *metric, sf_config *out) {
  return guarded([&] {
    need(metric, "metric");
    need(out, "out");
    const ExperimentConfig e = ExperimentConfig::preset(kind_of(experiment), metric);
    sf_config c{};
    c.experiment = experiment;
    copy_name(metric, c.metric);
    c.A = e.metric.A;
    c.mu_min = e.metric.mu_min;
    c.mu_max = e.metric.mu_max;
    c.stepsize = e.stepsize;
    c.stop_kind = e.stop.kind == StopRule::Kind::GradNorm ? SF_STOP_GRAD_NORM : SF_STOP_PLATEAU;
    c.tol = e.stop.tol;
    c.window = e.stop.window;
    c.max_iters = e.max_iters;
    c.target_h = e.target_h;
    c.remesh_threshold = e.remesh_quality_threshold;
    *out = c;
  });
}

sf_status sf_run(const sf_config *config, const char *output_dir, sf_history **out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    ExperimentConfig e = config_of(*config);
    if (output_dir) e.output_dir = output_dir;
    ExperimentResult r = run_experiment(e);
    *out = new sf_history{std::move(r.run.history), std::move(r.run.final_mesh),
                          std::move(r.summary)};
  });
}

sf_status sf_history_length(const sf_history *history, size_t *length) {
  return guarded([&] {
    need(history, "history");
    need(length, "length");
    *length = history->history.records.size();
  });
}

sf_status sf_history_record(const sf_history *history, size_t index, sf_record *out) {
  return guarded([&] {
    need(history, "history");
    need(out, "out");
    require(index < history->history.records.size(), "record index out of range");
    const IterationRecord &r = history->history.records[index];
    *out = sf_record{r.iter, r.objective, r.grad_l2, r.mesh_quality, r.stepsize,
                     r.remeshed ? 1 : 0};
  });
}

sf_status sf_history_termination(const sf_history *history, sf_termination *out) {
  return guarded([&] {
    need(history, "history");
    need(out, "out");
    switch (history->history.reason) {
      case Termination::Converged: *out = SF_CONVERGED; break;
      case Termination::MaxIters: *out = SF_MAX_ITERS; break;
      case Termination::StepFailure: *out = SF_STEP_FAILURE; break;
    }
  });
}

sf_status sf_history_remesh_count(const sf_history *history, int *out) {
  return guarded([&] {
    need(history, "history");
    need(out, "out");
    *out = history->history.remesh_count;
  });
}

sf_status sf_history_summary(const sf_history *history, char *buffer, size_t capacity) {
  return guarded([&] {
    need(history, "history");
    need(buffer, "buffer");
    require(capacity > 0, "capacity must be positive");
    const std::string &s = history->summary;
    const size_t n = std::min(s.size(), capacity - 1);
    std::memcpy(buffer, s.data(), n);
    buffer[n] = '\0';
  });
}

sf_status sf_history_final_mesh(const sf_history *history, sf_mesh **out) {
  return guarded([&] {
    need(history, "history");
    need(out, "out");
    *out = new sf_mesh{history->final_mesh};
  });
}

void sf_history_free(sf_history *history) { delete history; }

sf_status sf_compare_gradients(sf_experiment experiment, const sf_config *configs, size_t count,
                               double target_h, const char *output_dir,
                               sf_gradient_report *reports) {
  return guarded([&] {
    need(configs, "configs");
    need(reports, "reports");
    require(count > 0, "count must be positive");
    std::vector<MetricSpec> metrics;
    for (size_t i = 0; i < count; ++i) metrics.push_back(metric_of(configs[i]));
    const std::vector<GradientReport> r = compare_gradients(
        kind_of(experiment), metrics, target_h, output_dir ? output_dir : "");
    for (size_t i = 0; i < count; ++i) {
      copy_name(r[i].metric, reports[i].metric);
      reports[i].l2_norm = r[i].l2_norm;
      reports[i].seconds = r[i].seconds;
    }
  });
}

sf_status sf_fd_check(sf_experiment experiment, uint32_t seed, int field_count, double target_h,
                      double *orders, double *errors) {
  return guarded([&] {
    need(orders, "orders");
    const FdReport r = fd_check(kind_of(experiment), seed, field_count, target_h);
    for (size_t f = 0; f < r.fields.size(); ++f) {
      orders[f] = r.fields[f].order;
      if (errors)
        for (size_t k = 0; k < r.steps.size(); ++k)
          errors[f * r.steps.size() + k] = r.fields[f].errors[k];
    }
  });
}

}  // extern "C"
