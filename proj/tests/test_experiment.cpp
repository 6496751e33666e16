#include <gtest/gtest.h>

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dta/errors.hpp"
#include "dta/experiment.hpp"

using namespace dta;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = DTA_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dtasim-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig toy() { return load_config(kConfigs / "toy_two_node.yaml"); }

}  // namespace

TEST(Config, ShippedConfigsRoundTrip) {
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".yaml") continue;
    const auto cfg = load_config(entry.path());
    const auto again = parse_config(serialize_config(cfg));
    EXPECT_TRUE(cfg == again) << entry.path();
    EXPECT_EQ(serialize_config(again), serialize_config(cfg)) << entry.path();
  }
}

TEST(Config, RejectsUnknownKeysAndVersions) {
  const auto text = serialize_config(toy());
  EXPECT_THROW(parse_config(text + "bogus: 1\n"), ConfigError);
  auto cfg = toy();
  cfg.schema_version = 99;
  EXPECT_THROW(parse_config(serialize_config(cfg)), ConfigError);
  EXPECT_THROW(parse_config("name: [unterminated"), ConfigError);
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW(load_config(kConfigs / "does_not_exist.yaml"), ConfigError);
}

TEST(Bounds, ToyReportMatchesHandComputation) {
  const auto rep = cmd_bounds(toy());
  ASSERT_TRUE(rep.resolved);
  const auto& r = *rep.resolved;
  Eigen::Matrix2d ew;
  ew << 0.8, 0.2, 0.2, 0.8;
  EXPECT_LE((expected_weight_matrix(r.model) - ew).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(r.net.lambda2_mean, 0.6, 1e-15);
  EXPECT_NEAR(r.net.lambda2_sq, 0.52, 1e-15);
  EXPECT_NEAR(r.kkt.x_star(0, 0), 1.0, 1e-15);

  const auto json = nlohmann::json::parse(summary_json(rep));
  EXPECT_EQ(json["schema_version"], kSchemaVersion);
  EXPECT_EQ(json["command"], "bounds");
  EXPECT_NEAR(json["spectral"]["lambda2_mean"].get<double>(), 0.6, 1e-15);
}

TEST(Bounds, CompleteGraphUniformWeightsCollapse) {
  auto cfg = toy();
  cfg.network.topology = "complete";
  cfg.network.theta = 1.0;
  cfg.network.proposal_weight = 0.5;
  const auto rep = cmd_bounds(cfg);
  const auto& r = *rep.resolved;
  EXPECT_NEAR(r.net.lambda2_mean, 0.0, 1e-15);
  ASSERT_TRUE(r.optimal);
  EXPECT_NEAR(r.rc.K1p, r.rc.K2p, 1e-15);
  EXPECT_EQ(r.optimal->active_branch, 1);
  EXPECT_NEAR(r.optimal->alpha, 1.0 / 3.0, 1e-15);
}

TEST(Bounds, DisconnectedNetworkIsRejected) {
  auto cfg = toy();
  cfg.network.theta = 0.0;
  EXPECT_THROW(cmd_bounds(cfg), InfeasibleNetworkError);
}

TEST(OutputDir, PrecedenceIsCliThenConfigThenEnv) {
  auto cfg = toy();
  ::setenv(kOutDirEnv, "/tmp/from-env", 1);
  EXPECT_EQ(output_dir(cfg, std::string("/tmp/from-cli")), fs::path("/tmp/from-cli"));
  EXPECT_EQ(output_dir(cfg, std::nullopt), fs::path("/tmp/from-env"));
  cfg.output_dir = "/tmp/from-config";
  EXPECT_EQ(output_dir(cfg, std::nullopt), fs::path("/tmp/from-config"));
  ::unsetenv(kOutDirEnv);
  cfg.output_dir.clear();
  EXPECT_EQ(output_dir(cfg, std::nullopt), fs::path("dtasim-out"));
}

TEST(Run, WritesVersionedCsvAndSummary) {
  const auto dir = scratch("run");
  const auto rep = cmd_run(toy(), dir);
  ASSERT_EQ(rep.points.size(), 1u);
  const auto csv = slurp(dir / rep.points[0].trace_file);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "# dtasim-trace schema_version=1");
  std::getline(lines, line);
  EXPECT_EQ(line, "k,optimality_distance,feasibility_gap,tracking_norm,gradient_dispersion");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 2001u);

  const auto json = nlohmann::json::parse(slurp(dir / "toy_two_node_summary.json"));
  EXPECT_EQ(json["schema_version"], 1);
  EXPECT_TRUE(json["points"][0]["converged"].get<bool>());
}

TEST(Run, SameSeedIsByteIdentical) {
  auto cfg = toy();
  cfg.engine.replicas = 1;
  const auto a = scratch("det-a"), b = scratch("det-b");
  const auto ra = cmd_run(cfg, a);
  cmd_run(cfg, b);
  const auto file = ra.points[0].trace_file;
  EXPECT_EQ(slurp(a / file), slurp(b / file));
  EXPECT_EQ(slurp(a / "toy_two_node_summary.json"), slurp(b / "toy_two_node_summary.json"));
}

TEST(Sweep, ProducesOneTracePerValue) {
  auto cfg = toy();
  cfg.engine.iterations = 500;
  const auto dir = scratch("sweep");
  const std::vector<double> values{0.1, 0.5, 1.0};
  const auto rep = sweep(cfg, "alpha", values, dir);
  ASSERT_EQ(rep.points.size(), 3u);
  for (const auto& p : rep.points) {
    EXPECT_TRUE(fs::exists(dir / p.trace_file)) << p.trace_file;
    EXPECT_EQ(p.axis, "alpha");
  }
  EXPECT_NEAR(rep.points[1].plan.alpha, 0.05, 1e-15);
  EXPECT_THROW(sweep(cfg, "gamma", values, dir), ConfigError);
}

TEST(Sweep, ThetaZeroIsFlaggedNonConvergent) {
  auto cfg = toy();
  cfg.engine.iterations = 4000;
  const auto rep = sweep(cfg, "theta", {0.5, 0.0}, scratch("theta"));
  ASSERT_EQ(rep.points.size(), 2u);
  EXPECT_TRUE(rep.points[0].converged);
  EXPECT_TRUE(rep.points[1].non_convergent);
  EXPECT_FALSE(rep.points[1].converged);
}

TEST(Compare, NoDisturbanceBothConverge) {
  auto cfg = toy();
  cfg.engine.algorithm = "dta-disturbed";
  cfg.engine.x0 = "demand";
  cfg.engine.iterations = 3000;
  const auto rep = cmd_compare(cfg, scratch("compare"));
  ASSERT_TRUE(rep.compare);
  EXPECT_LT(rep.compare->dta.final_distance, 1e-8);
  EXPECT_LT(rep.compare->wga.final_distance, 1e-8);
  EXPECT_LE(rep.compare->max_drift_mismatch, 1e-12);
}
