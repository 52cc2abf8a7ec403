#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpreach/conformal/quantile.hpp"
#include "cpreach/dynamics/system_model.hpp"
#include "cpreach/error.hpp"
#include "cpreach/reach/flowpipe.hpp"
#include "cpreach/surrogate/schedule.hpp"
#include "cpreach/surrogate/training.hpp"

namespace cpreach {

using Json = nlohmann::ordered_json;

inline constexpr double kDefaultCoverageSlack = 0.02;

struct DatasetSizes {
  Eigen::Index train = 0;
  Eigen::Index test = 0;
  Eigen::Index validate = 0;
};

struct SeedConfig {
  std::uint64_t data = 1;
  std::uint64_t train = 2;
  std::uint64_t validate = 3;
};

struct PlotConfig {
  Eigen::Index component = 0;
};

/// Everything one pipeline run depends on. Seeds fully determine every artifact.
struct PipelineConfig {
  SystemModel model;
  Eigen::Index K = 0;
  DatasetSizes sizes;
  SubHorizonSchedule schedule;
  std::vector<Eigen::Index> hidden;
  TrainingHyperparams training;
  ReachConfig reach;
  double epsilon = 0.1;
  double coverage_slack = kDefaultCoverageSlack;
  SeedConfig seeds;
  PlotConfig plot;
  std::string output_dir = "out";

  Eigen::Index n() const { return model.state_dim(); }

  /// Cross-field consistency; raises Config before any compute happens.
  void validate() const {
    try {
      model.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("model: ") + e.message());
    }
    require(K >= 1, ErrorKind::Config, "horizon K must be at least 1");
    require(schedule.total() == K + 1, ErrorKind::Config,
            "schedule sums to " + std::to_string(schedule.total()) + " but K + 1 = " + std::to_string(K + 1));
    require(epsilon > 0.0 && epsilon < 1.0, ErrorKind::Config, "epsilon must lie in (0, 1)");
    require(coverage_slack >= 0.0 && coverage_slack < 1.0, ErrorKind::Config, "coverageSlack must lie in [0, 1)");
    require(sizes.train >= 1 && sizes.test >= 1 && sizes.validate >= 1, ErrorKind::Config,
            "dataset sizes must be positive");
    for (Eigen::Index h : hidden) require(h >= 1, ErrorKind::Config, "hidden layer widths must be positive");
    require(training.epochs >= 0, ErrorKind::Config, "epochs must be nonnegative");
    require(training.batch_size >= 1, ErrorKind::Config, "batchSize must be positive");
    require(training.learning_rate > 0.0, ErrorKind::Config, "learningRate must be positive");
    require(reach.partitions_per_dim.empty() || static_cast<Eigen::Index>(reach.partitions_per_dim.size()) == n(),
            ErrorKind::Config, "partitionsPerDim must have one entry per state dimension");
    std::size_t cells = 1;
    for (Eigen::Index p : reach.partitions_per_dim) {
      require(p >= 1, ErrorKind::Config, "partitionsPerDim entries must be at least 1");
      cells *= static_cast<std::size_t>(p);
      require(cells <= reach.max_partitions, ErrorKind::Config,
              "partition grid exceeds maxPartitions = " + std::to_string(reach.max_partitions));
    }
    require(reach.max_branches >= 1, ErrorKind::Config, "maxBranches must be positive");
    require(plot.component >= 0 && plot.component < n(), ErrorKind::Config,
            "plot component must lie in [0, " + std::to_string(n()) + ")");
  }
};

namespace detail {

inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require(j.is_object(), ErrorKind::Config, where + " must be an object");
  const std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    require(names.count(item.key()) == 1, ErrorKind::Config, "unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
T get_as(const Json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, what + ": " + e.what());
  }
}

inline Eigen::VectorXd vector_from(const Json& j, const std::string& what) {
  const auto v = get_as<std::vector<double>>(j, what);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Eigen::MatrixXd matrix_from(const Json& j, const std::string& what) {
  const auto rows = get_as<std::vector<std::vector<double>>>(j, what);
  require(!rows.empty(), ErrorKind::Config, what + " must not be empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == rows.front().size(), ErrorKind::Config, what + " rows must have equal length");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

inline std::vector<Eigen::Index> index_list(const Json& j, const std::string& what) {
  const auto v = get_as<std::vector<std::int64_t>>(j, what);
  return {v.begin(), v.end()};
}

inline Json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

inline SystemModel model_from_json(const Json& j) {
  check_keys(j, "model", {"name", "dt", "noiseStd", "initialLower", "initialUpper", "linearA", "acc", "feedbackGain"});
  require(j.contains("name"), ErrorKind::Config, "model.name is required");
  SystemModel m = default_model(system_kind_from_string(get_as<std::string>(j["name"], "model.name")));
  if (j.contains("dt")) m.dt = get_as<double>(j["dt"], "model.dt");
  if (j.contains("noiseStd")) m.noise_std = vector_from(j["noiseStd"], "model.noiseStd");
  if (j.contains("initialLower") || j.contains("initialUpper")) {
    require(j.contains("initialLower") && j.contains("initialUpper"), ErrorKind::Config,
            "model.initialLower and model.initialUpper must be given together");
    try {
      m.initial_box = IntervalBox(vector_from(j["initialLower"], "model.initialLower"),
                                  vector_from(j["initialUpper"], "model.initialUpper"));
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("model initial box: ") + e.message());
    }
  }
  if (j.contains("linearA")) {
    const Eigen::MatrixXd a = matrix_from(j["linearA"], "model.linearA");
    require(a.rows() == 2 && a.cols() == 2, ErrorKind::Config, "model.linearA must be 2 x 2");
    m.linear_a = a;
  }
  if (j.contains("acc")) {
    const Json& a = j["acc"];
    check_keys(a, "model.acc", {"kp", "kv", "safeDistance", "uMin", "uMax"});
    if (a.contains("kp")) m.acc.kp = get_as<double>(a["kp"], "model.acc.kp");
    if (a.contains("kv")) m.acc.kv = get_as<double>(a["kv"], "model.acc.kv");
    if (a.contains("safeDistance")) m.acc.safe_distance = get_as<double>(a["safeDistance"], "model.acc.safeDistance");
    if (a.contains("uMin")) m.acc.u_min = get_as<double>(a["uMin"], "model.acc.uMin");
    if (a.contains("uMax")) m.acc.u_max = get_as<double>(a["uMax"], "model.acc.uMax");
    require(m.acc.u_min <= m.acc.u_max, ErrorKind::Config, "model.acc.uMin must not exceed uMax");
  }
  if (j.contains("feedbackGain")) m.feedback_gain = matrix_from(j["feedbackGain"], "model.feedbackGain");
  return m;
}

inline Json model_to_json(const SystemModel& m) {
  Json j;
  j["name"] = m.name();
  j["dt"] = m.dt;
  j["noiseStd"] = vector_json(m.noise_std);
  j["initialLower"] = vector_json(m.initial_box.lower());
  j["initialUpper"] = vector_json(m.initial_box.upper());
  if (m.kind == SystemKind::Linear2D) j["linearA"] = matrix_json(m.linear_a);
  if (m.kind == SystemKind::ACC) {
    j["acc"] = {{"kp", m.acc.kp}, {"kv", m.acc.kv}, {"safeDistance", m.acc.safe_distance},
                {"uMin", m.acc.u_min}, {"uMax", m.acc.u_max}};
  }
  if (m.kind == SystemKind::Quadcopter) j["feedbackGain"] = matrix_json(m.feedback_gain);
  return j;
}

}  // namespace detail

/// Parses and validates a configuration document. Optional sections fall
/// back to defaults; unknown keys are rejected.
inline PipelineConfig config_from_json(const Json& j) {
  using detail::check_keys;
  using detail::get_as;
  check_keys(j, "config",
             {"model", "K", "datasets", "schedule", "surrogate", "reach", "epsilon", "coverageSlack", "seeds", "plot",
              "output"});
  require(j.contains("model") && j.contains("K") && j.contains("datasets"), ErrorKind::Config,
          "config requires model, K and datasets");
  PipelineConfig c;
  c.model = detail::model_from_json(j["model"]);
  c.K = get_as<std::int64_t>(j["K"], "K");
  require(c.K >= 1, ErrorKind::Config, "horizon K must be at least 1");

  const Json& d = j["datasets"];
  check_keys(d, "datasets", {"train", "test", "validate"});
  require(d.contains("train") && d.contains("test") && d.contains("validate"), ErrorKind::Config,
          "datasets requires train, test and validate sizes");
  c.sizes = {get_as<std::int64_t>(d["train"], "datasets.train"), get_as<std::int64_t>(d["test"], "datasets.test"),
             get_as<std::int64_t>(d["validate"], "datasets.validate")};

  try {
    if (!j.contains("schedule") || (j["schedule"].is_string() && j["schedule"] == "oneStep")) {
      c.schedule = SubHorizonSchedule::one_step(c.K);
    } else {
      c.schedule = SubHorizonSchedule(detail::index_list(j["schedule"], "schedule"));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, std::string("schedule: ") + e.message());
  }

  if (j.contains("surrogate")) {
    const Json& s = j["surrogate"];
    check_keys(s, "surrogate",
               {"hidden", "epochs", "learningRate", "batchSize", "beta1", "beta2", "adamEpsilon", "standardize"});
    if (s.contains("hidden")) c.hidden = detail::index_list(s["hidden"], "surrogate.hidden");
    if (s.contains("epochs")) c.training.epochs = get_as<int>(s["epochs"], "surrogate.epochs");
    if (s.contains("learningRate")) c.training.learning_rate = get_as<double>(s["learningRate"], "surrogate.learningRate");
    if (s.contains("batchSize")) c.training.batch_size = get_as<int>(s["batchSize"], "surrogate.batchSize");
    if (s.contains("beta1")) c.training.beta1 = get_as<double>(s["beta1"], "surrogate.beta1");
    if (s.contains("beta2")) c.training.beta2 = get_as<double>(s["beta2"], "surrogate.beta2");
    if (s.contains("adamEpsilon")) c.training.adam_epsilon = get_as<double>(s["adamEpsilon"], "surrogate.adamEpsilon");
    if (s.contains("standardize")) c.training.standardize = get_as<bool>(s["standardize"], "surrogate.standardize");
  }

  if (j.contains("reach")) {
    const Json& r = j["reach"];
    check_keys(r, "reach", {"mode", "partitionsPerDim", "maxBranches", "maxPartitions"});
    if (r.contains("mode")) c.reach.mode = reach_mode_from_string(get_as<std::string>(r["mode"], "reach.mode"));
    if (r.contains("partitionsPerDim")) {
      c.reach.partitions_per_dim = detail::index_list(r["partitionsPerDim"], "reach.partitionsPerDim");
    }
    if (r.contains("maxBranches")) c.reach.max_branches = get_as<std::size_t>(r["maxBranches"], "reach.maxBranches");
    if (r.contains("maxPartitions")) {
      c.reach.max_partitions = get_as<std::size_t>(r["maxPartitions"], "reach.maxPartitions");
    }
  }

  if (j.contains("epsilon")) c.epsilon = get_as<double>(j["epsilon"], "epsilon");
  if (j.contains("coverageSlack")) c.coverage_slack = get_as<double>(j["coverageSlack"], "coverageSlack");
  if (j.contains("seeds")) {
    const Json& s = j["seeds"];
    check_keys(s, "seeds", {"data", "train", "validate"});
    if (s.contains("data")) c.seeds.data = get_as<std::uint64_t>(s["data"], "seeds.data");
    if (s.contains("train")) c.seeds.train = get_as<std::uint64_t>(s["train"], "seeds.train");
    if (s.contains("validate")) c.seeds.validate = get_as<std::uint64_t>(s["validate"], "seeds.validate");
  }
  if (j.contains("plot")) {
    check_keys(j["plot"], "plot", {"component"});
    if (j["plot"].contains("component")) c.plot.component = get_as<std::int64_t>(j["plot"]["component"], "plot.component");
  }
  if (j.contains("output")) c.output_dir = get_as<std::string>(j["output"], "output");
  c.validate();
  return c;
}

/// Fully resolved configuration; parsing it back yields the same config.
inline Json config_to_json(const PipelineConfig& c) {
  Json j;
  j["model"] = detail::model_to_json(c.model);
  j["K"] = c.K;
  j["datasets"] = {{"train", c.sizes.train}, {"test", c.sizes.test}, {"validate", c.sizes.validate}};
  j["schedule"] = c.schedule.pis();
  j["surrogate"] = {{"hidden", c.hidden},
                    {"epochs", c.training.epochs},
                    {"learningRate", c.training.learning_rate},
                    {"batchSize", c.training.batch_size},
                    {"beta1", c.training.beta1},
                    {"beta2", c.training.beta2},
                    {"adamEpsilon", c.training.adam_epsilon},
                    {"standardize", c.training.standardize}};
  j["reach"] = {{"mode", to_string(c.reach.mode)},
                {"partitionsPerDim", c.reach.partitions_per_dim},
                {"maxBranches", c.reach.max_branches},
                {"maxPartitions", c.reach.max_partitions}};
  j["epsilon"] = c.epsilon;
  j["coverageSlack"] = c.coverage_slack;
  j["seeds"] = {{"data", c.seeds.data}, {"train", c.seeds.train}, {"validate", c.seeds.validate}};
  j["plot"] = {{"component", c.plot.component}};
  j["output"] = c.output_dir;
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline PipelineConfig load_config(const std::string& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.message());
  }
  return config_from_json(j);
}

/// Command-line overrides, applied after parsing and re-validated.
struct ConfigOverrides {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;  // replaces every seed
  std::optional<ReachMode> mode;
  std::optional<double> epsilon;
  std::optional<Eigen::Index> component;
};

inline PipelineConfig apply_overrides(PipelineConfig c, const ConfigOverrides& o) {
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.seed) c.seeds = {*o.seed, *o.seed, *o.seed};
  if (o.mode) c.reach.mode = *o.mode;
  if (o.epsilon) c.epsilon = *o.epsilon;
  if (o.component) c.plot.component = *o.component;
  c.validate();
  return c;
}

}  // namespace cpreach
