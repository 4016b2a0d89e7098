// Command-line driver over the C API.
//
// Exit codes: 0 success, 1 runtime error, 3 run ended by step failure,
// CLI11 codes (nonzero) for usage errors.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shapeflow/shapeflow.h"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kStepFailure = 3;

struct Failure {
  sf_status status;
};

void check(sf_status s) {
  if (s != SF_OK) throw Failure{s};
}

sf_experiment parse_experiment(const std::string &name) {
  return name == "bridge" ? SF_BRIDGE : SF_INTERFACE;
}

std::filesystem::path default_out(const std::string &leaf) {
  const char *env = std::getenv("SHAPEFLOW_OUT");
  const std::filesystem::path base = env && *env ? env : "shapeflow_out";
  return base / leaf;
}

const std::vector<std::string> kExperiments{"interface", "bridge"};
const std::vector<std::string> kMetrics{"sp", "h1", "h2", "h3", "h4"};

struct RunArgs {
  std::string experiment;
  std::string metric;
  double A = 0, t = 0, mu_min = 0, mu_max = 0, tol = 0, target_h = 0, remesh = 0;
  int max_iters = 0;
  std::string out;
  bool quiet = false;
};

struct RunOptions {
  CLI::Option *A, *t, *mu_min, *mu_max, *tol, *max_iters, *target_h, *remesh;
};

int do_run(const RunArgs &a, const RunOptions &o) {
  const sf_experiment exp = parse_experiment(a.experiment);
  sf_config c;
  check(sf_config_preset(exp, a.metric.c_str(), &c));
  if (o.A->count()) c.A = a.A;
  if (o.t->count()) c.stepsize = a.t;
  if (o.mu_min->count()) c.mu_min = a.mu_min;
  if (o.mu_max->count()) c.mu_max = a.mu_max;
  if (o.tol->count()) c.tol = a.tol;
  if (o.max_iters->count()) c.max_iters = a.max_iters;
  if (o.target_h->count()) c.target_h = a.target_h;
  if (o.remesh->count()) c.remesh_threshold = a.remesh;
  const std::string out =
      a.out.empty() ? default_out(a.experiment + "-" + a.metric).string() : a.out;

  sf_history *h = nullptr;
  check(sf_run(&c, out.c_str(), &h));
  char summary[256];
  sf_termination reason = SF_MAX_ITERS;
  const sf_status s1 = sf_history_summary(h, summary, sizeof summary);
  const sf_status s2 = sf_history_termination(h, &reason);
  sf_history_free(h);
  check(s1);
  check(s2);
  std::printf("%s\n", summary);
  if (!a.quiet) std::printf("output: %s\n", out.c_str());
  return reason == SF_STEP_FAILURE ? kStepFailure : 0;
}

int do_compare(const std::string &experiment, const std::vector<std::string> &metrics,
               double target_h, bool have_h, const std::string &out_arg) {
  const sf_experiment exp = parse_experiment(experiment);
  std::vector<sf_config> configs(metrics.size());
  for (std::size_t i = 0; i < metrics.size(); ++i)
    check(sf_config_preset(exp, metrics[i].c_str(), &configs[i]));
  const double h = have_h ? target_h : configs.front().target_h;
  const std::string out = out_arg.empty() ? default_out(experiment + "-gradients").string() : out_arg;
  std::vector<sf_gradient_report> reports(metrics.size());
  check(sf_compare_gradients(exp, configs.data(), configs.size(), h, out.c_str(), reports.data()));
  std::printf("%-6s %14s %12s\n", "metric", "|V|_L2", "time (s)");
  for (const auto &r : reports) std::printf("%-6s %14.6e %12.4f\n", r.metric, r.l2_norm, r.seconds);
  return 0;
}

int do_mesh_gen(const std::string &experiment, double target_h, bool have_h,
                const std::string &out_arg) {
  const sf_experiment exp = parse_experiment(experiment);
  sf_config preset;
  check(sf_config_preset(exp, "sp", &preset));
  const double h = have_h ? target_h : preset.target_h;
  std::filesystem::path out = out_arg.empty() ? default_out("meshes") : std::filesystem::path(out_arg);
  std::filesystem::create_directories(out);
  out /= experiment + ".mesh";

  sf_mesh *m = nullptr;
  check(sf_mesh_generate(exp, h, &m));
  std::size_t nodes = 0, tris = 0;
  double q = 0.0;
  sf_status s = sf_mesh_counts(m, &nodes, &tris);
  if (s == SF_OK) s = sf_mesh_quality(m, &q);
  if (s == SF_OK) s = sf_mesh_write(m, out.string().c_str());
  sf_mesh_free(m);
  check(s);
  std::printf("%s nodes=%zu triangles=%zu quality=%.4f -> %s\n", experiment.c_str(), nodes, tris,
              q, out.string().c_str());
  return 0;
}

int do_fd_check(const std::string &experiment, unsigned seed, int fields, double target_h,
                bool have_h) {
  const sf_experiment exp = parse_experiment(experiment);
  const double h = have_h ? target_h : (exp == SF_INTERFACE ? 0.035 : 0.25);
  std::vector<double> orders(fields), errors(4 * fields);
  check(sf_fd_check(exp, seed, fields, h, orders.data(), errors.data()));
  std::printf("field %12s %12s %12s %12s %8s\n", "t=1e-2", "t=1e-3", "t=1e-4", "t=1e-5", "order");
  for (int f = 0; f < fields; ++f) {
    std::printf("%5d", f);
    for (int k = 0; k < 4; ++k) std::printf(" %12.4e", errors[4 * f + k]);
    std::printf(" %8.3f\n", orders[f]);
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Shape optimization with Sobolev and Steklov-Poincare gradients"};
  app.require_subcommand(1);

  RunArgs ra;
  RunOptions ro{};
  auto *run = app.add_subcommand("run", "Run one optimization with experiment presets");
  run->add_option("experiment", ra.experiment)->required()->check(CLI::IsMember(kExperiments));
  run->add_option("--metric", ra.metric, "sp, h1, h2, h3 or h4")
      ->required()
      ->check(CLI::IsMember(kMetrics));
  ro.A = run->add_option("--A", ra.A, "H^s weight");
  ro.t = run->add_option("--t", ra.t, "base stepsize");
  ro.mu_min = run->add_option("--mu_min", ra.mu_min, "SP stiffness on the shape");
  ro.mu_max = run->add_option("--mu_max", ra.mu_max, "SP stiffness on the outer boundary");
  ro.tol = run->add_option("--tol", ra.tol, "gradient-norm or plateau tolerance");
  ro.max_iters = run->add_option("--max_iters", ra.max_iters, "iteration cap");
  ro.target_h = run->add_option("--target_h", ra.target_h, "mesh size");
  ro.remesh = run->add_option("--remesh", ra.remesh, "remesh quality threshold, 0 disables");
  run->add_option("--out", ra.out, "output directory (default $SHAPEFLOW_OUT/<experiment>-<metric>)");
  run->add_flag("--quiet", ra.quiet);
  run->set_config("--config", "", "file of key = value lines; flags take precedence");

  std::string cexp, cout_dir;
  std::vector<std::string> cmetrics{"sp", "h1", "h2", "h3", "h4"};
  double ch = 0.0;
  auto *cmp = app.add_subcommand("compare-gradients", "Gradient norms at the initial shape");
  cmp->add_option("experiment", cexp)->required()->check(CLI::IsMember(kExperiments));
  cmp->add_option("--metrics", cmetrics)->delimiter(',')->check(CLI::IsMember(kMetrics));
  auto *ch_opt = cmp->add_option("--target_h", ch);
  cmp->add_option("--out", cout_dir);

  std::string mexp, mout;
  double mh = 0.0;
  auto *mg = app.add_subcommand("mesh-gen", "Write the initial mesh of an experiment");
  mg->add_option("experiment", mexp)->required()->check(CLI::IsMember(kExperiments));
  auto *mh_opt = mg->add_option("--target_h", mh);
  mg->add_option("--out", mout, "output directory");

  std::string fexp;
  unsigned seed = 1;
  int fields = 5;
  double fh = 0.0;
  auto *fd = app.add_subcommand("fd-check", "Finite-difference check of the shape derivative");
  fd->add_option("experiment", fexp)->required()->check(CLI::IsMember(kExperiments));
  fd->add_option("--seed", seed);
  fd->add_option("--fields", fields)->check(CLI::Range(1, 100));
  auto *fh_opt = fd->add_option("--target_h", fh);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return do_run(ra, ro);
    if (*cmp) return do_compare(cexp, cmetrics, ch, ch_opt->count() > 0, cout_dir);
    if (*mg) return do_mesh_gen(mexp, mh, mh_opt->count() > 0, mout);
    if (*fd) return do_fd_check(fexp, seed, fields, fh, fh_opt->count() > 0);
  } catch (const Failure &f) {
    std::fprintf(stderr, "error: %s: %s\n", sf_status_string(f.status), sf_last_error());
    return f.status == SF_ERR_STEP_FAILURE ? kStepFailure : kRuntimeError;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
  return 0;
}
