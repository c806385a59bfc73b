#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "driftlab/config.hpp"
#include "driftlab/experiment.hpp"

namespace driftlab {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;  // validation or invariant failure
inline constexpr int kExitIo = 2;       // I/O or parse failure

// Arm sets named by experiment.datasets, loaded from files when configured
// and synthesised otherwise.
std::shared_ptr<const ArmSet> load_movielens_arms(const Config& cfg, std::ostream& log);
std::shared_ptr<const ArmSet> load_obd_arms(const Config& cfg, std::ostream& log);

// Scenario matrix described by the configuration.
std::vector<ScenarioConfig> configured_scenarios(const Config& cfg, std::ostream& log);

// Writes elbow.csv, assignments.csv and arms.csv.
void cmd_cluster(const Config& cfg, const std::filesystem::path& out_dir, std::ostream& log);

// Writes drift_<scenario>.csv per scenario. Returns false when any drift
// invariant fails; each failure is reported on `log`.
bool cmd_validate_drift(const Config& cfg, const std::filesystem::path& out_dir,
                        std::ostream& log);

// Runs every (scenario, policy, run) episode and writes curves.csv,
// summary.csv, seeds.csv and per-dataset arm metadata.
MatrixResult cmd_run(const Config& cfg, const std::filesystem::path& out_dir,
                     std::ostream& log);

// Renders summary.csv as an aligned table on `out` and writes plot_<scenario>.csv
// series files next to it.
void cmd_report(const std::filesystem::path& run_dir, std::ostream& out);

// Full command dispatch with exception-to-exit-code mapping.
int run_command(const std::string& command, const std::string& config_path,
                const std::vector<std::string>& overrides,
                const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

}  // namespace driftlab
