#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "driftlab/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Non-stationary bandit experiments: clustering, drift validation, runs, reports"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
  };
  Args cluster_args{"", {}, "out/cluster"};
  Args drift_args{"", {}, "out/drift"};
  Args run_args{"", {}, "out/run"};
  std::string report_dir;

  const auto add_common = [](CLI::App* sub, Args& a) {
    sub->add_option("--config,-c", a.config, "INI configuration file");
    sub->add_option("--set,-s", a.overrides, "Override a key, e.g. experiment.runs=5")
        ->allow_extra_args(false);
    sub->add_option("--out,-o", a.out, "Output directory")->capture_default_str();
  };
  auto* cluster = app.add_subcommand("cluster", "Cluster MovieLens users and write the elbow curve");
  add_common(cluster, cluster_args);
  auto* drift = app.add_subcommand("validate-drift", "Export and check true-mean trajectories");
  add_common(drift, drift_args);
  auto* run = app.add_subcommand("run", "Run the scenario matrix");
  add_common(run, run_args);
  auto* report = app.add_subcommand("report", "Render the summary table of a finished run");
  report->add_option("run_dir", report_dir, "Directory written by `run`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? driftlab::kExitOk : driftlab::kExitInvalid;
  }

  const auto dispatch = [](const std::string& cmd, const Args& a) {
    return driftlab::run_command(cmd, a.config, a.overrides, a.out, std::cout, std::cerr);
  };
  if (*cluster) return dispatch("cluster", cluster_args);
  if (*drift) return dispatch("validate-drift", drift_args);
  if (*run) return dispatch("run", run_args);
  return driftlab::run_command("report", "", {}, report_dir, std::cout, std::cerr);
}
