#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cpreach/harness/pipeline.hpp"

using namespace cpreach;
namespace fs = std::filesystem;

namespace {

fs::path preset(const std::string& name) { return fs::path(CPREACH_SOURCE_DIR) / "presets" / (name + ".json"); }

/// Fresh, empty directory per test.
std::string scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cpreach_harness_" + name);
  fs::remove_all(dir);
  return dir.string();
}

Json small_config_json() {
  return Json::parse(R"({
    "model": {"name": "Linear2D"},
    "K": 5,
    "datasets": {"train": 400, "test": 200, "validate": 300},
    "surrogate": {"hidden": [6], "epochs": 15, "learningRate": 0.003, "batchSize": 64},
    "reach": {"mode": "approx", "partitionsPerDim": [2, 1]},
    "epsilon": 0.2,
    "seeds": {"data": 5, "train": 6, "validate": 7}
  })");
}

PipelineConfig small_config(const std::string& dir) {
  PipelineConfig c = config_from_json(small_config_json());
  c.output_dir = dir;
  return c;
}

void expect_error(ErrorKind kind, const auto& body, const std::string& fragment = "") {
  try {
    body();
    ADD_FAILURE() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
    if (!fragment.empty()) EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

Json artifact_hashes(const std::string& dir) {
  const Json manifest = read_json_file((fs::path(dir) / RunManifest::kFileName).string());
  Json hashes = Json::object();
  for (const auto& [name, entry] : manifest["artifacts"].items()) hashes[name] = entry["sha256"];
  EXPECT_FALSE(hashes.empty()) << dir;
  return hashes;
}

std::size_t line_count(const std::string& path) {
  std::ifstream in(path);
  std::size_t lines = 0;
  for (std::string s; std::getline(in, s);) ++lines;
  return lines;
}

}  // namespace

TEST(Config, PresetsLoadAndValidate) {
  for (const char* name : {"linear2d", "acc", "quadcopter", "laubloomis"}) {
    SCOPED_TRACE(name);
    const PipelineConfig c = load_config(preset(name).string());
    EXPECT_EQ(c.schedule.total(), c.K + 1);
    EXPECT_EQ(c.n(), c.model.state_dim());
  }
  const PipelineConfig lin = load_config(preset("linear2d").string());
  EXPECT_EQ(lin.n(), 2);
  EXPECT_EQ(lin.K, 10);
  EXPECT_EQ(lin.sizes.train, 5000);
  EXPECT_EQ(lin.sizes.test, 2000);
  EXPECT_EQ(lin.epsilon, 0.1);
  EXPECT_EQ(lin.reach.mode, ReachMode::ApproxStar);
  EXPECT_EQ(lin.reach.partitions_per_dim, (std::vector<Eigen::Index>{2, 2}));
  EXPECT_EQ(lin.model.dt, 0.1);
}

TEST(Config, RoundTripsThroughJson) {
  const PipelineConfig c = load_config(preset("acc").string());
  const Json j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
}

TEST(Config, RejectsScheduleNotSummingToHorizon) {
  Json j = small_config_json();
  j["schedule"] = {1, 2, 2};
  expect_error(ErrorKind::Config, [&] { config_from_json(j); }, "schedule");
  j["schedule"] = {2, 4};
  expect_error(ErrorKind::Config, [&] { config_from_json(j); }, "schedule");
}

TEST(Config, RejectsEpsilonOutsideUnitInterval) {
  for (double eps : {0.0, 1.0, -0.1, 1.5}) {
    Json j = small_config_json();
    j["epsilon"] = eps;
    expect_error(ErrorKind::Config, [&] { config_from_json(j); }, "epsilon");
  }
  ConfigOverrides o;
  o.epsilon = 1.0;
  expect_error(ErrorKind::Config, [&] { apply_overrides(small_config("x"), o); }, "epsilon");
}

TEST(Config, RejectsInconsistentFields) {
  Json j = small_config_json();
  j["surrogate"]["hiden"] = {4};
  expect_error(ErrorKind::Config, [&] { config_from_json(j); }, "hiden");
  j = small_config_json();
  j["reach"]["partitionsPerDim"] = {2, 2, 2};
  expect_error(ErrorKind::Config, [&] { config_from_json(j); }, "partitionsPerDim");
  j = small_config_json();
  j["model"]["initialLower"] = {0.0, 0.0, 0.0};
  j["model"]["initialUpper"] = {1.0, 1.0, 1.0};
  expect_error(ErrorKind::Config, [&] { config_from_json(j); }, "dimension");
  j = small_config_json();
  j["reach"]["mode"] = "zonotope";
  expect_error(ErrorKind::Config, [&] { config_from_json(j); }, "zonotope");
  j = small_config_json();
  j["model"]["name"] = "Pendulum";
  expect_error(ErrorKind::Config, [&] { config_from_json(j); }, "Pendulum");
  expect_error(ErrorKind::Config, [&] { load_config("/nonexistent/config.json"); });
}

TEST(Config, OverridesReplaceFields) {
  ConfigOverrides o;
  o.output_dir = "elsewhere";
  o.seed = 99;
  o.mode = ReachMode::ExactStar;
  o.epsilon = 0.05;
  o.component = 1;
  const PipelineConfig c = apply_overrides(small_config("x"), o);
  EXPECT_EQ(c.output_dir, "elsewhere");
  EXPECT_EQ(c.seeds.data, 99u);
  EXPECT_EQ(c.seeds.train, 99u);
  EXPECT_EQ(c.seeds.validate, 99u);
  EXPECT_EQ(c.reach.mode, ReachMode::ExactStar);
  EXPECT_EQ(c.epsilon, 0.05);
  EXPECT_EQ(c.plot.component, 1);
  o = {};
  o.component = 2;
  expect_error(ErrorKind::Config, [&] { apply_overrides(small_config("x"), o); }, "component");
}

TEST(Artifacts, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(std::string("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(std::string()), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Artifacts, FlowpipeDocumentRoundTripsBitExactly) {
  Eigen::VectorXd lo(6), hi(6);
  lo << 0.1, -1.0 / 3.0, 1e-300, -2.5, 0.0, 7.0;
  hi << 0.2, 1.0 / 7.0, 1e-299, -2.0, std::nextafter(0.0, 1.0), 7.0;
  FlowpipeDocument doc{2, 2, "approx", IntervalBox(lo, hi), Json{{"modelHash", "abc"}}, Json{{"delta", 0.9}}};
  const FlowpipeDocument back = FlowpipeDocument::from_json(Json::parse(json_text(doc.to_json())));
  EXPECT_EQ(back.n, 2);
  EXPECT_EQ(back.K, 2);
  EXPECT_EQ(back.mode, "approx");
  EXPECT_EQ(back.bounds, doc.bounds);
  EXPECT_EQ(back.provenance, doc.provenance);
  EXPECT_EQ(back.conformal, doc.conformal);
  EXPECT_EQ(doc.to_json()["steps"][1][0], Json({1e-300, 1e-299}));
}

TEST(Artifacts, MalformedDocumentsAreRejected) {
  Json j = FlowpipeDocument{1, 1, "exact", IntervalBox(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)), {}, {}}.to_json();
  j["steps"].erase(1);
  expect_error(ErrorKind::ShapeMismatch, [&] { FlowpipeDocument::from_json(j); });
  expect_error(ErrorKind::ShapeMismatch, [] { quantiles_from_json(Json{{"n", 1}}); });
}

TEST(Artifacts, QuantileDocumentRoundTrips) {
  QuantileVector q{2, 2, 500, 0.1, 0.975, 489, Eigen::Vector4d(0.1, 0.2, 1.0 / 3.0, 0.4)};
  const Json j = quantiles_to_json(q, "d", "m");
  EXPECT_EQ(j["datasetHash"], "d");
  const QuantileVector back = quantiles_from_json(Json::parse(json_text(j)));
  EXPECT_EQ(back.r_star, q.r_star);
  EXPECT_EQ(back.ell, q.ell);
  EXPECT_EQ(back.delta, q.delta);
  EXPECT_EQ(back.L, q.L);
}

TEST(Simulate, WritesDatasetsOfTheConfiguredShape) {
  PipelineConfig c = load_config(preset("linear2d").string());
  c.sizes = {2000, 500, 100};
  c.output_dir = scratch("simulate_shape");
  cmd_simulate(c);
  const TrajectoryDataset train = load_dataset((fs::path(c.output_dir) / artifact::kTrain).string());
  const TrajectoryDataset test = load_dataset((fs::path(c.output_dir) / artifact::kTest).string());
  EXPECT_EQ(train.size(), 2000);
  EXPECT_EQ(test.size(), 500);
  EXPECT_EQ(train.n, 2);
  EXPECT_EQ(train.K, 10);
  EXPECT_EQ(train.model_name, "Linear2D");
  EXPECT_NE(train.rows.row(0), test.rows.row(0));

  const Json first = artifact_hashes(c.output_dir);
  cmd_simulate(c);
  EXPECT_EQ(artifact_hashes(c.output_dir), first);
}

TEST(Simulate, AccHeaderMatchesFiftyStepConfiguration) {
  PipelineConfig c = load_config(preset("acc").string());
  c.K = 50;
  c.schedule = SubHorizonSchedule::one_step(50);
  c.sizes = {5, 5, 5};
  c.output_dir = scratch("simulate_acc");
  cmd_simulate(c);
  const TrajectoryDataset ds = load_dataset((fs::path(c.output_dir) / artifact::kTest).string());
  EXPECT_EQ(ds.n, 6);
  EXPECT_EQ(ds.K, 50);
}

TEST(Pipeline, RunAllIsDeterministicAndLocationIndependent) {
  PipelineConfig a = small_config(scratch("run_a"));
  PipelineConfig b = small_config(scratch("run_b"));
  const RunReport ra = cmd_run_all(a);
  cmd_run_all(b);
  const Json ha = artifact_hashes(a.output_dir);
  EXPECT_EQ(ha, artifact_hashes(b.output_dir));
  for (const char* name : {artifact::kTrain, artifact::kModel, artifact::kSurrogateFlowpipe, artifact::kQuantiles,
                           artifact::kConfidentFlowpipe, artifact::kCoverage}) {
    EXPECT_TRUE(ha.contains(name)) << name;
  }
  EXPECT_TRUE(ra.inflation_contains_surrogate);
  EXPECT_TRUE(ra.initial_bounds_unchanged);
  EXPECT_TRUE(ra.coverage.passed);
  EXPECT_EQ(ra.manifest["configHash"], ha[artifact::kConfig]);
  for (const char* stage : {"simulate", "train", "reach", "calibrate", "flowpipe", "validate", "plot"}) {
    EXPECT_TRUE(ra.manifest["timings"].contains(stage)) << stage;
  }
}

TEST(Pipeline, StagesReproduceDeletedArtifacts) {
  const PipelineConfig c = small_config(scratch("isolation"));
  cmd_run_all(c);
  const Json before = artifact_hashes(c.output_dir);
  for (const char* name : {artifact::kModel, artifact::kSurrogateFlowpipe, artifact::kQuantiles,
                           artifact::kConfidentFlowpipe}) {
    fs::remove(fs::path(c.output_dir) / name);
  }
  cmd_train(c);
  cmd_reach(c);
  cmd_calibrate(c);
  cmd_flowpipe(c);
  EXPECT_EQ(artifact_hashes(c.output_dir), before);
}

TEST(Pipeline, MissingInputNamesTheFile) {
  const PipelineConfig c = small_config(scratch("missing"));
  expect_error(ErrorKind::Io, [&] { cmd_train(c); }, "train.bin");
}

TEST(Pipeline, TamperedInputIsDetected) {
  const PipelineConfig c = small_config(scratch("tamper"));
  cmd_simulate(c);
  std::ofstream(fs::path(c.output_dir) / artifact::kTrain, std::ios::app) << "x";
  expect_error(ErrorKind::HashMismatch, [&] { cmd_train(c); }, "train.bin");
}

TEST(Pipeline, CalibrationTooSmallAbortsNamingTheStage) {
  PipelineConfig c = small_config(scratch("infeasible"));
  c.epsilon = 0.01;  // delta = 1 - 0.01/10 needs L >= 999
  c.sizes.test = min_calibration_size(delta_from_epsilon(0.01, 2, 5)).exact_min - 1;
  expect_error(ErrorKind::InsufficientCalibration, [&] { cmd_run_all(c); }, "stage calibrate");
  EXPECT_FALSE(fs::exists(fs::path(c.output_dir) / artifact::kConfidentFlowpipe));
  EXPECT_EQ(exit_code(ErrorKind::InsufficientCalibration), 3);
}

TEST(Pipeline, ExitCodes) {
  EXPECT_EQ(exit_code(ErrorKind::Config), 2);
  EXPECT_EQ(exit_code(ErrorKind::BranchBudgetExceeded), 4);
  EXPECT_EQ(exit_code(ErrorKind::Io), 1);
  EXPECT_EQ(kCoverageFailureExit, 5);
}

TEST(Pipeline, ExactModeBudgetSurfacesAsBranchBudgetExceeded) {
  PipelineConfig c = small_config(scratch("budget"));
  c.reach.mode = ReachMode::ExactStar;
  c.reach.max_branches = 1;
  c.hidden = {12};
  cmd_simulate(c);
  cmd_train(c);
  expect_error(ErrorKind::BranchBudgetExceeded, [&] { cmd_reach(c); });
}

TEST(Plot, ConstantBoundsGiveFlatEnvelope) {
  FlowpipeDocument fp{1, 4, "approx", IntervalBox(Eigen::VectorXd::Zero(5), Eigen::VectorXd::Ones(5)), {}, {}};
  const PlotSeries s = plot_series(fp, nullptr, 0);
  EXPECT_EQ(s.lower, Eigen::VectorXd::Zero(5));
  EXPECT_EQ(s.upper, Eigen::VectorXd::Ones(5));
  const std::string csv = plot_csv(s);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,lower,upper,sample_min,sample_mean,sample_max");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0,1,,,");
  EXPECT_NE(plot_svg(s, "flat").find("<svg"), std::string::npos);
  expect_error(ErrorKind::Config, [&] { plot_series(fp, nullptr, 1); }, "component");
}

TEST(Plot, OneRowPerStepAndSamplesInsideWhenCovered) {
  const PipelineConfig c = small_config(scratch("plot"));
  const RunReport r = cmd_run_all(c);
  const fs::path csv = fs::path(c.output_dir) / artifact::plot_csv(0);
  EXPECT_EQ(line_count(csv.string()), static_cast<std::size_t>(c.K + 2));  // header + K + 1 rows
  ASSERT_EQ(r.coverage.coverage, 1.0);
  const FlowpipeDocument X = load_flowpipe((fs::path(c.output_dir) / artifact::kConfidentFlowpipe).string());
  const TrajectoryDataset v = load_dataset((fs::path(c.output_dir) / artifact::kValidate).string());
  for (Eigen::Index comp = 0; comp < c.n(); ++comp) {
    const PlotSeries s = plot_series(X, &v, comp);
    EXPECT_TRUE((s.sample_min->array() >= s.lower.array()).all());
    EXPECT_TRUE((s.sample_max->array() <= s.upper.array()).all());
  }
}

TEST(Plot, ManifestMismatchIsRejected) {
  const PipelineConfig c = small_config(scratch("plot_tamper"));
  cmd_run_all(c);
  const fs::path fp = fs::path(c.output_dir) / artifact::kConfidentFlowpipe;
  Json doc = read_json_file(fp.string());
  doc["steps"][1][0][0] = -1000.0;
  write_json_file(fp.string(), doc);
  expect_error(ErrorKind::HashMismatch, [&] { cmd_plot(c); });
  expect_error(ErrorKind::HashMismatch, [&] { cmd_plot(c, {fp.string(), std::nullopt}); });
}
