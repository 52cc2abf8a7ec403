#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cpreach/harness/pipeline.hpp"

using namespace cpreach;

namespace {

void print_coverage(const CoverageReport& r) {
  std::cout << "coverage " << r.coverage << " on " << r.trajectories << " trajectories (target " << r.target
            << ", slack " << r.slack << "): " << (r.passed ? "ok" : "FAILED") << "\n";
}

void print_bounds(const std::string& label, const IntervalBox& b, Eigen::Index n) {
  const Eigen::Index last = b.dim() / n - 1;
  std::cout << label << " at step " << last << ":";
  for (Eigen::Index j = 0; j < n; ++j) {
    std::cout << " x" << j + 1 << " in [" << b.lower(last * n + j) << ", " << b.upper(last * n + j) << "]";
  }
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidence-guaranteed flowpipes from sampled trajectories"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> epsilon;
  std::optional<Eigen::Index> component;
  std::optional<std::string> flowpipe_path, samples_path;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "replace every seed in the config");
    sub->add_option("--mode", mode, "reach mode: exact or approx")->check(CLI::IsMember({"exact", "approx"}));
    sub->add_option("--epsilon", epsilon, "failure probability in (0, 1)");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "sample train, test and validate trajectories");
  CLI::App* train = app.add_subcommand("train", "train the sub-horizon surrogate");
  CLI::App* reach = app.add_subcommand("reach", "surrogate flowpipe by star-set reachability");
  CLI::App* calibrate = app.add_subcommand("calibrate", "conformal quantiles from the test set");
  CLI::App* flowpipe = app.add_subcommand("flowpipe", "inflate the surrogate flowpipe");
  CLI::App* validate = app.add_subcommand("validate", "empirical coverage on fresh trajectories");
  CLI::App* plot = app.add_subcommand("plot", "CSV and SVG envelope for one component");
  CLI::App* run_all = app.add_subcommand("run-all", "every stage in order");
  for (CLI::App* sub : {simulate, train, reach, calibrate, flowpipe, validate, plot, run_all}) common(sub);
  for (CLI::App* sub : {plot, run_all}) sub->add_option("--component", component, "state component to plot (0-based)");
  plot->add_option("--flowpipe", flowpipe_path, "flowpipe document (default: confident flowpipe)");
  plot->add_option("--samples", samples_path, "trajectory dataset for sampled envelopes (default: validate set)");

  CLI11_PARSE(app, argc, argv);

  try {
    ConfigOverrides o;
    o.output_dir = out;
    o.seed = seed;
    if (mode) o.mode = reach_mode_from_string(*mode);
    o.epsilon = epsilon;
    o.component = component;
    const PipelineConfig cfg = apply_overrides(load_config(config_path), o);
    std::cout << std::setprecision(6);

    if (simulate->parsed()) {
      cmd_simulate(cfg);
      const RunManifest m(cfg.output_dir);
      for (const char* name : {artifact::kTrain, artifact::kTest, artifact::kValidate}) {
        std::cout << name << " sha256 " << *m.hash_of(name) << "\n";
      }
      std::cout << "n = " << cfg.n() << ", K = " << cfg.K << ", L_train = " << cfg.sizes.train
                << ", L_test = " << cfg.sizes.test << ", L_validate = " << cfg.sizes.validate << "\n";
    } else if (train->parsed()) {
      cmd_train(cfg);
      std::cout << "model written to " << RunManifest(cfg.output_dir).path_of(artifact::kModel) << "\n";
    } else if (reach->parsed()) {
      const SurrogateFlowpipe xbar = cmd_reach(cfg);
      std::cout << to_string(xbar.mode) << " reach over " << xbar.partitions << " partitions, " << xbar.stars
                << " output stars\n";
      print_bounds("surrogate flowpipe", xbar.bounds, cfg.n());
    } else if (calibrate->parsed()) {
      const QuantileVector q = cmd_calibrate(cfg);
      std::cout << "delta = " << q.delta << ", L = " << q.L << ", ell = " << q.ell << ", max R* = "
                << q.r_star.maxCoeff() << "\n";
    } else if (flowpipe->parsed()) {
      const ConfidentFlowpipe X = cmd_flowpipe(cfg);
      std::cout << "Delta = " << X.Delta << "\n";
      print_bounds("confident flowpipe", X.bounds, cfg.n());
    } else if (validate->parsed()) {
      const CoverageReport r = cmd_validate(cfg);
      print_coverage(r);
      if (!r.passed) return kCoverageFailureExit;
    } else if (plot->parsed()) {
      PlotRequest req{flowpipe_path, samples_path};
      const PlotSeries s = cmd_plot(cfg, req);
      std::cout << "wrote " << artifact::plot_csv(s.component) << " and " << artifact::plot_svg(s.component) << " ("
                << s.steps() << " steps)\n";
    } else if (run_all->parsed()) {
      const RunReport r = cmd_run_all(cfg);
      print_coverage(r.coverage);
      std::cout << "manifest: " << RunManifest(cfg.output_dir).file_path() << "\n";
      if (!r.coverage.passed) return kCoverageFailureExit;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
