/* C interface to the shape-optimization engine.
 *
 * Every function returns an sf_status. On failure the thread-local message
 * from sf_last_error() describes the cause; output arguments are untouched.
 * Objects returned through pointer arguments are owned by the caller and
 * released with the matching *_free function.
 */
#ifndef SHAPEFLOW_H
#define SHAPEFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SF_API __declspec(dllexport)
#else
#define SF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_ERR_INVALID_ARGUMENT = 1,
  SF_ERR_INVERTED_ELEMENT = 2,
  SF_ERR_MESH = 3,
  SF_ERR_SOLVER = 4,
  SF_ERR_IO = 5,
  SF_ERR_STEP_FAILURE = 6,
  SF_ERR_INTERNAL = 7
} sf_status;

typedef enum sf_experiment { SF_INTERFACE = 0, SF_BRIDGE = 1 } sf_experiment;

typedef enum sf_termination {
  SF_CONVERGED = 0,
  SF_MAX_ITERS = 1,
  SF_STEP_FAILURE = 2
} sf_termination;

typedef enum sf_stop_kind { SF_STOP_GRAD_NORM = 0, SF_STOP_PLATEAU = 1 } sf_stop_kind;

typedef struct sf_mesh sf_mesh;
typedef struct sf_history sf_history;

/* All numeric parameters of one run. Fields that do not apply to the
 * chosen metric are ignored. */
typedef struct sf_config {
  sf_experiment experiment;
  char metric[8]; /* "sp", "h1" .. "h4" */
  double A;
  double mu_min;
  double mu_max;
  double stepsize;
  sf_stop_kind stop_kind;
  double tol;
  int window;
  int max_iters;
  double target_h;
  double remesh_threshold; /* 0 disables remeshing */
} sf_config;

typedef struct sf_record {
  int iter;
  double objective;
  double grad_l2;
  double mesh_quality;
  double stepsize;
  int remeshed;
} sf_record;

typedef struct sf_gradient_report {
  char metric[8];
  double l2_norm;
  double seconds;
} sf_gradient_report;

SF_API const char *sf_last_error(void);
SF_API const char *sf_status_string(sf_status status);

/* Meshes */
SF_API sf_status sf_mesh_generate(sf_experiment experiment, double target_h, sf_mesh **out);
SF_API sf_status sf_mesh_read(const char *path, sf_mesh **out);
SF_API sf_status sf_mesh_write(const sf_mesh *mesh, const char *path);
SF_API sf_status sf_mesh_counts(const sf_mesh *mesh, size_t *nodes, size_t *triangles);
SF_API sf_status sf_mesh_quality(const sf_mesh *mesh, double *quality);
SF_API void sf_mesh_free(sf_mesh *mesh);

/* Optimization runs */
SF_API sf_status sf_config_preset(sf_experiment experiment, const char *metric, sf_config *out);
/* output_dir may be NULL or empty to skip file output. */
SF_API sf_status sf_run(const sf_config *config, const char *output_dir, sf_history **out);
SF_API sf_status sf_history_length(const sf_history *history, size_t *length);
SF_API sf_status sf_history_record(const sf_history *history, size_t index, sf_record *out);
SF_API sf_status sf_history_termination(const sf_history *history, sf_termination *out);
SF_API sf_status sf_history_remesh_count(const sf_history *history, int *out);
/* Copies the summary line, truncated to capacity - 1 characters. */
SF_API sf_status sf_history_summary(const sf_history *history, char *buffer, size_t capacity);
/* Final mesh of the run, as a new object. */
SF_API sf_status sf_history_final_mesh(const sf_history *history, sf_mesh **out);
SF_API void sf_history_free(sf_history *history);

/* Gradients of several metrics at the initial shape. configs[i] supplies
 * the metric parameters; reports must hold count entries. */
SF_API sf_status sf_compare_gradients(sf_experiment experiment, const sf_config *configs,
                                      size_t count, double target_h, const char *output_dir,
                                      sf_gradient_report *reports);

/* Finite-difference validation of the shape derivative. orders receives
 * field_count observed orders; errors, if not NULL, receives
 * field_count * 4 absolute errors for t = 1e-2 .. 1e-5. */
SF_API sf_status sf_fd_check(sf_experiment experiment, uint32_t seed, int field_count,
                             double target_h, double *orders, double *errors);

#ifdef __cplusplus
}
#endif

#endif /* SHAPEFLOW_H */
