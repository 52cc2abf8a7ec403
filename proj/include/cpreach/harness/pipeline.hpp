#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "cpreach/conformal/calibration.hpp"
#include "cpreach/dynamics/dataset_io.hpp"
#include "cpreach/dynamics/simulate.hpp"
#include "cpreach/error.hpp"
#include "cpreach/harness/artifacts.hpp"
#include "cpreach/harness/config.hpp"
#include "cpreach/harness/plot.hpp"
#include "cpreach/reach/flowpipe.hpp"
#include "cpreach/surrogate/compile.hpp"
#include "cpreach/surrogate/composite.hpp"
#include "cpreach/surrogate/model_io.hpp"

namespace cpreach {

namespace artifact {
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kTrain = "train.bin";
inline constexpr const char* kTest = "test.bin";
inline constexpr const char* kValidate = "validate.bin";
inline constexpr const char* kModel = "model.bin";
inline constexpr const char* kSurrogateFlowpipe = "surrogate_flowpipe.json";
inline constexpr const char* kQuantiles = "quantiles.json";
inline constexpr const char* kConfidentFlowpipe = "confident_flowpipe.json";
inline constexpr const char* kCoverage = "coverage.json";

inline std::string plot_csv(Eigen::Index component) { return "plot_c" + std::to_string(component) + ".csv"; }
inline std::string plot_svg(Eigen::Index component) { return "plot_c" + std::to_string(component) + ".svg"; }
}  // namespace artifact

/// Seeds of the three datasets; tags keep the streams disjoint even when the
/// configured seeds coincide.
inline std::uint64_t train_data_seed(const SeedConfig& s) { return mix_seed(s.data, 0); }
inline std::uint64_t test_data_seed(const SeedConfig& s) { return mix_seed(s.data, 1); }
inline std::uint64_t validate_data_seed(const SeedConfig& s) { return mix_seed(s.validate, 2); }

struct CoverageReport {
  double coverage = 0.0;
  double target = 0.0;  // 1 - epsilon
  double slack = 0.0;
  Eigen::Index trajectories = 0;
  bool passed = false;
};

struct RunReport {
  CoverageReport coverage;
  bool inflation_contains_surrogate = false;
  bool initial_bounds_unchanged = false;
  Json manifest;
};

namespace detail {

/// Output directory, resolved config copy and manifest shared by every stage.
class Stage {
 public:
  Stage(const PipelineConfig& cfg, std::string name) : cfg_(cfg), name_(std::move(name)), manifest_(prepare(cfg)) {
    Json config = config_to_json(cfg_);
    config.erase("output");  // artifacts do not depend on where they are written
    write_json_file(manifest_.path_of(artifact::kConfig), config);
    manifest_.set_config(config);
    manifest_.record(artifact::kConfig);
    start_ = std::chrono::steady_clock::now();
  }

  const PipelineConfig& cfg() const { return cfg_; }
  RunManifest& manifest() { return manifest_; }
  std::string path(const std::string& name) const { return manifest_.path_of(name); }

  /// Input artifact path after its hash has been checked.
  std::string input(const std::string& name) {
    const std::string p = path(name);
    require(std::filesystem::exists(p), ErrorKind::Io,
            "missing input '" + p + "'; run the stage that produces it first");
    manifest_.verify(name);
    return p;
  }

  void finish() {
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start_;
    manifest_.set_timing(name_, took.count());
    manifest_.save();
  }

 private:
  static RunManifest prepare(const PipelineConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create output directory '" + cfg.output_dir + "': " + ec.message());
    return RunManifest(cfg.output_dir);
  }

  const PipelineConfig& cfg_;
  std::string name_;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Writes the train, test and validate datasets.
inline void cmd_simulate(const PipelineConfig& cfg) {
  detail::Stage st(cfg, "simulate");
  const struct {
    const char* name;
    Eigen::Index size;
    std::uint64_t seed;
  } sets[] = {{artifact::kTrain, cfg.sizes.train, train_data_seed(cfg.seeds)},
              {artifact::kTest, cfg.sizes.test, test_data_seed(cfg.seeds)},
              {artifact::kValidate, cfg.sizes.validate, validate_data_seed(cfg.seeds)}};
  for (const auto& set : sets) {
    save_dataset(generate_dataset(cfg.model, set.size, cfg.K, set.seed), st.path(set.name));
    st.manifest().record(set.name);
  }
  st.finish();
}

inline void cmd_train(const PipelineConfig& cfg) {
  detail::Stage st(cfg, "train");
  const TrajectoryDataset train = load_dataset(st.input(artifact::kTrain));
  TrainingHyperparams hp = cfg.training;
  hp.seed = cfg.seeds.train;
  save_model(train_composite(train, cfg.schedule, cfg.hidden, hp), st.path(artifact::kModel));
  st.manifest().record(artifact::kModel);
  st.finish();
}

inline SurrogateFlowpipe cmd_reach(const PipelineConfig& cfg) {
  detail::Stage st(cfg, "reach");
  const std::string model_path = st.input(artifact::kModel);
  const CompositeSurrogate F = load_model(model_path);
  require(F.n() == cfg.n() && F.K() == cfg.K, ErrorKind::ShapeMismatch, "model does not match the configured n and K");
  const SurrogateFlowpipe xbar = surrogate_flowpipe(compile_to_single_network(F), cfg.model.initial_box, cfg.reach);
  FlowpipeDocument doc{cfg.n(), cfg.K, to_string(xbar.mode), xbar.bounds, Json::object(), Json()};
  doc.provenance = {{"modelHash", sha256_file(model_path)},
                    {"partitionsPerDim", cfg.reach.partitions_per_dim},
                    {"partitions", xbar.partitions},
                    {"stars", xbar.stars}};
  write_json_file(st.path(artifact::kSurrogateFlowpipe), doc.to_json());
  st.manifest().record(artifact::kSurrogateFlowpipe);
  st.finish();
  return xbar;
}

inline QuantileVector cmd_calibrate(const PipelineConfig& cfg) {
  detail::Stage st(cfg, "calibrate");
  const std::string model_path = st.input(artifact::kModel);
  const std::string test_path = st.input(artifact::kTest);
  const CompositeSurrogate F = load_model(model_path);
  const QuantileVector q = conformal_quantiles(residual_matrix(F, load_dataset(test_path)), cfg.epsilon);
  const CalibrationSize need = min_calibration_size(q.delta);
  Json doc = quantiles_to_json(q, sha256_file(test_path), sha256_file(model_path));
  doc["minCalibrationSize"] = {{"exact", need.exact_min}, {"conservative", need.paper_bound}};
  write_json_file(st.path(artifact::kQuantiles), doc);
  st.manifest().record(artifact::kQuantiles);
  st.finish();
  return q;
}

inline ConfidentFlowpipe cmd_flowpipe(const PipelineConfig& cfg) {
  detail::Stage st(cfg, "flowpipe");
  const std::string xbar_path = st.input(artifact::kSurrogateFlowpipe);
  const std::string q_path = st.input(artifact::kQuantiles);
  const FlowpipeDocument xbar = load_flowpipe(xbar_path);
  const QuantileVector q = quantiles_from_json(read_json_file(q_path));
  require(xbar.n == q.n && xbar.K == q.K, ErrorKind::ShapeMismatch, "flowpipe and quantiles disagree on n or K");
  const ConfidentFlowpipe X = inflate_flowpipe(xbar.bounds, q);
  FlowpipeDocument doc = xbar;
  doc.bounds = X.bounds;
  doc.conformal = {{"surrogateFlowpipeHash", sha256_file(xbar_path)},
                   {"quantileHash", sha256_file(q_path)},
                   {"epsilon", X.epsilon},
                   {"delta", X.delta},
                   {"Delta", X.Delta},
                   {"L", q.L},
                   {"ell", q.ell}};
  write_json_file(st.path(artifact::kConfidentFlowpipe), doc.to_json());
  st.manifest().record(artifact::kConfidentFlowpipe);
  st.finish();
  return X;
}

inline CoverageReport cmd_validate(const PipelineConfig& cfg) {
  detail::Stage st(cfg, "validate");
  const FlowpipeDocument X = load_flowpipe(st.input(artifact::kConfidentFlowpipe));
  const TrajectoryDataset fresh = load_dataset(st.input(artifact::kValidate));
  CoverageReport r;
  r.coverage = empirical_coverage(X.bounds, fresh);
  r.target = 1.0 - cfg.epsilon;
  r.slack = cfg.coverage_slack;
  r.trajectories = fresh.size();
  r.passed = r.coverage >= r.target - r.slack;
  write_json_file(st.path(artifact::kCoverage), Json{{"coverage", r.coverage},
                                                      {"target", r.target},
                                                      {"slack", r.slack},
                                                      {"trajectories", r.trajectories},
                                                      {"passed", r.passed}});
  st.manifest().record(artifact::kCoverage);
  st.finish();
  return r;
}

struct PlotRequest {
  std::optional<std::string> flowpipe;  // defaults to the confident flowpipe in the output directory
  std::optional<std::string> samples;   // defaults to the validate dataset when present
};

/// Writes plot_c<component>.csv and .svg into the output directory.
inline PlotSeries cmd_plot(const PipelineConfig& cfg, const PlotRequest& req = {}) {
  detail::Stage st(cfg, "plot");
  std::string fp_path;
  if (req.flowpipe) {
    fp_path = *req.flowpipe;
    require(std::filesystem::exists(fp_path), ErrorKind::Io, "missing flowpipe '" + fp_path + "'");
    const std::filesystem::path rel = std::filesystem::relative(fp_path, cfg.output_dir);
    if (st.manifest().hash_of(rel.string()) && sha256_file(fp_path) != *st.manifest().hash_of(rel.string())) {
      fail(ErrorKind::HashMismatch, "'" + fp_path + "' does not match the hash recorded in the manifest");
    }
  } else {
    fp_path = st.input(artifact::kConfidentFlowpipe);
  }
  const FlowpipeDocument fp = load_flowpipe(fp_path);
  std::optional<TrajectoryDataset> samples;
  if (req.samples) samples = load_dataset(*req.samples);
  else if (std::filesystem::exists(st.path(artifact::kValidate))) samples = load_dataset(st.input(artifact::kValidate));
  const Eigen::Index c = cfg.plot.component;
  const PlotSeries series = plot_series(fp, samples ? &*samples : nullptr, c, cfg.model.dt);
  write_text_file(st.path(artifact::plot_csv(c)), plot_csv(series));
  write_text_file(st.path(artifact::plot_svg(c)),
                  plot_svg(series, cfg.model.name() + ": x" + std::to_string(c + 1) + ", epsilon = " +
                                       Json(cfg.epsilon).dump()));
  st.manifest().record(artifact::plot_csv(c));
  st.manifest().record(artifact::plot_svg(c));
  st.finish();
  return series;
}

/// simulate -> train -> reach -> calibrate -> flowpipe -> validate -> plot.
/// Stage failures are re-raised with the stage name.
inline RunReport cmd_run_all(const PipelineConfig& cfg) {
  cfg.validate();
  auto run = [](const char* name, const std::function<void()>& body) {
    try {
      body();
    } catch (const Error& e) {
      fail(e.kind(), std::string("stage ") + name + ": " + e.message());
    }
  };
  RunReport report;
  SurrogateFlowpipe xbar;
  ConfidentFlowpipe X;
  run("simulate", [&] { cmd_simulate(cfg); });
  run("train", [&] { cmd_train(cfg); });
  run("reach", [&] { xbar = cmd_reach(cfg); });
  run("calibrate", [&] { cmd_calibrate(cfg); });
  run("flowpipe", [&] { X = cmd_flowpipe(cfg); });
  run("validate", [&] { report.coverage = cmd_validate(cfg); });
  run("plot", [&] { cmd_plot(cfg); });

  const Eigen::Index n = cfg.n();
  report.inflation_contains_surrogate = X.bounds.contains(xbar.bounds);
  report.initial_bounds_unchanged =
      X.bounds.lower().head(n) == xbar.bounds.lower().head(n) && X.bounds.upper().head(n) == xbar.bounds.upper().head(n);
  RunManifest manifest(cfg.output_dir);
  manifest.set("coverage", {{"coverage", report.coverage.coverage}, {"passed", report.coverage.passed}});
  manifest.set("inflationInvariants", {{"containsSurrogate", report.inflation_contains_surrogate},
                                       {"initialBoundsUnchanged", report.initial_bounds_unchanged}});
  manifest.save();
  report.manifest = manifest.json();
  return report;
}

/// CLI exit status for a library error.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::InsufficientCalibration: return 3;
    case ErrorKind::BranchBudgetExceeded: return 4;
    default: return 1;
  }
}

inline constexpr int kCoverageFailureExit = 5;

}  // namespace cpreach
