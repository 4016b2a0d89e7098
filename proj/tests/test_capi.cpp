#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "shapeflow/shapeflow.h"

namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string &leaf) {
  const char *root = std::getenv("SHAPEFLOW_TEST_TMP");
  const fs::path dir = fs::path(root ? root : fs::temp_directory_path().string()) / "capi" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(CApi, StatusStrings) {
  EXPECT_STREQ(sf_status_string(SF_OK), "ok");
  EXPECT_NE(std::strlen(sf_status_string(SF_ERR_STEP_FAILURE)), 0u);
}

TEST(CApi, MeshLifecycleAndRoundTrip) {
  sf_mesh *mesh = nullptr;
  ASSERT_EQ(sf_mesh_generate(SF_INTERFACE, 0.05, &mesh), SF_OK);
  size_t nodes = 0, tris = 0;
  ASSERT_EQ(sf_mesh_counts(mesh, &nodes, &tris), SF_OK);
  EXPECT_GT(nodes, 100u);
  double q = 0.0;
  ASSERT_EQ(sf_mesh_quality(mesh, &q), SF_OK);
  EXPECT_GT(q, 0.3);

  const std::string path = (tmp_dir("mesh") / "m.mesh").string();
  ASSERT_EQ(sf_mesh_write(mesh, path.c_str()), SF_OK);
  sf_mesh *back = nullptr;
  ASSERT_EQ(sf_mesh_read(path.c_str(), &back), SF_OK);
  size_t nodes2 = 0, tris2 = 0;
  sf_mesh_counts(back, &nodes2, &tris2);
  EXPECT_EQ(nodes2, nodes);
  EXPECT_EQ(tris2, tris);
  sf_mesh_free(back);
  sf_mesh_free(mesh);
  sf_mesh_free(nullptr);
}

TEST(CApi, ErrorsMapToStatusCodes) {
  sf_mesh *mesh = nullptr;
  EXPECT_EQ(sf_mesh_generate(SF_INTERFACE, -1.0, &mesh), SF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(mesh, nullptr);
  EXPECT_NE(std::strlen(sf_last_error()), 0u);
  EXPECT_EQ(sf_mesh_read("/nonexistent/shapeflow.mesh", &mesh), SF_ERR_IO);
  EXPECT_EQ(sf_mesh_generate(SF_INTERFACE, 0.05, nullptr), SF_ERR_INVALID_ARGUMENT);
  sf_config config;
  EXPECT_EQ(sf_config_preset(SF_BRIDGE, "h7", &config), SF_ERR_INVALID_ARGUMENT);
}

TEST(CApi, PresetAndShortRun) {
  sf_config config;
  ASSERT_EQ(sf_config_preset(SF_INTERFACE, "h2", &config), SF_OK);
  EXPECT_STREQ(config.metric, "h2");
  EXPECT_EQ(config.A, 0.5);
  EXPECT_EQ(config.stepsize, 0.25);
  config.max_iters = 3;
  config.target_h = 0.05;

  const fs::path out = tmp_dir("run");
  sf_history *history = nullptr;
  ASSERT_EQ(sf_run(&config, out.string().c_str(), &history), SF_OK) << sf_last_error();
  size_t length = 0;
  ASSERT_EQ(sf_history_length(history, &length), SF_OK);
  EXPECT_EQ(length, 3u);
  sf_record rec;
  ASSERT_EQ(sf_history_record(history, 2, &rec), SF_OK);
  EXPECT_EQ(rec.iter, 2);
  EXPECT_EQ(sf_history_record(history, 3, &rec), SF_ERR_INVALID_ARGUMENT);
  sf_termination reason;
  ASSERT_EQ(sf_history_termination(history, &reason), SF_OK);
  EXPECT_EQ(reason, SF_MAX_ITERS);
  char summary[256];
  ASSERT_EQ(sf_history_summary(history, summary, sizeof summary), SF_OK);
  EXPECT_EQ(std::string(summary).rfind("interface h2 k=2", 0), 0u) << summary;
  char tiny[4];
  ASSERT_EQ(sf_history_summary(history, tiny, sizeof tiny), SF_OK);
  EXPECT_STREQ(tiny, "int");
  sf_mesh *final_mesh = nullptr;
  ASSERT_EQ(sf_history_final_mesh(history, &final_mesh), SF_OK);
  sf_mesh_free(final_mesh);
  sf_history_free(history);
  EXPECT_TRUE(fs::exists(out / "history.csv"));
}

TEST(CApi, InvalidConfigIsRejected) {
  sf_config config;
  ASSERT_EQ(sf_config_preset(SF_INTERFACE, "sp", &config), SF_OK);
  config.stepsize = -1.0;
  sf_history *history = nullptr;
  EXPECT_EQ(sf_run(&config, nullptr, &history), SF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(history, nullptr);
}

TEST(CApi, CompareGradients) {
  sf_config configs[2];
  ASSERT_EQ(sf_config_preset(SF_INTERFACE, "sp", &configs[0]), SF_OK);
  ASSERT_EQ(sf_config_preset(SF_INTERFACE, "h1", &configs[1]), SF_OK);
  sf_gradient_report reports[2];
  ASSERT_EQ(sf_compare_gradients(SF_INTERFACE, configs, 2, 0.05, nullptr, reports), SF_OK);
  EXPECT_STREQ(reports[0].metric, "sp");
  EXPECT_STREQ(reports[1].metric, "h1");
  for (const sf_gradient_report &r : reports) EXPECT_GT(r.l2_norm, 0.0);
}

TEST(CApi, FiniteDifferenceCheck) {
  double orders[2];
  double errors[8];
  ASSERT_EQ(sf_fd_check(SF_BRIDGE, 5, 2, 0.25, orders, errors), SF_OK);
  for (const double o : orders) EXPECT_GE(o, 0.9);
  for (const double e : errors) EXPECT_GT(e, 0.0);
}
