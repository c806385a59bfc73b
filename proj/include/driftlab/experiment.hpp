#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftlab/bandit.hpp"
#include "driftlab/environment.hpp"
#include "driftlab/ingestion.hpp"

namespace driftlab {

enum class PolicyKind {
  Ucb1,
  Discounted,
  SlidingWindow,
  DualView,
  // Oracle-driven reference policies for regret accounting checks.
  OracleBest,
  OracleWorst,
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::Ucb1;
  double alpha = 1.0;
  double gamma = 0.999;
  std::optional<std::size_t> tau;  // explicit window; otherwise c * T / N
  double c = 1.0;
  Aggregation aggregation = Aggregation::Mean;
  std::optional<double> window_alpha;  // dual view only; defaults to alpha

  std::string label() const;
};

// Tokens: ucb1, ducb, swucb, fdsw-min, fdsw-mean, fdsw-max, oracle-best,
// oracle-worst. Hyperparameters are copied from `defaults`.
PolicySpec parse_policy(std::string_view token, const PolicySpec& defaults = {});
std::string policy_token(const PolicySpec& spec);

// UCB1, D-UCB, SW-UCB and the three dual-view aggregations.
std::vector<PolicySpec> default_policies(const PolicySpec& defaults = {});

struct ScenarioConfig {
  std::string name;
  std::shared_ptr<const ArmSet> arms;
  Dynamics dynamics = Dynamics::Stationary;
  std::int64_t horizon = 100000;
  std::vector<std::int64_t> changepoints;  // abrupt points or gradual window starts
  std::int64_t gradual_duration = 10000;
  std::vector<PolicySpec> policies;
  std::size_t num_runs = 3;
  std::uint64_t base_seed = 0;
  std::int64_t record_stride = 100;
  // Window for policies without an explicit tau when there are no changepoints.
  std::optional<std::size_t> stationary_tau;

  std::vector<DriftEvent> schedule() const;
  // Throws ConfigError on any inconsistency, including unresolvable windows.
  void validate() const;
};

std::size_t resolve_tau(const ScenarioConfig& scenario, const PolicySpec& spec);

// Null for the oracle-driven reference kinds.
std::unique_ptr<Policy> make_policy(const ScenarioConfig& scenario, const PolicySpec& spec);

Environment make_environment(const ScenarioConfig& scenario, std::uint64_t seed);

// Stable hash of (base seed, scenario, policy, run).
std::uint64_t episode_seed(const ScenarioConfig& scenario, const PolicySpec& spec,
                           std::size_t run_index);

// oracle_mean - chosen_mean; a negative gap is an oracle bug and throws.
double step_regret(double oracle_mean, double chosen_mean);
double cumulative_regret(std::span<const double> regrets);

// Rewards for every (step, arm), pre-drawn from an environment so several
// policies can be replayed on identical feedback.
class RewardTape {
 public:
  static RewardTape record(Environment env);

  double reward(std::int64_t t, ArmId arm) const {
    return rewards_[static_cast<std::size_t>(t - 1) * num_arms_ + arm];
  }
  std::size_t num_arms() const { return num_arms_; }
  std::int64_t horizon() const { return horizon_; }

 private:
  std::vector<double> rewards_;
  std::size_t num_arms_ = 0;
  std::int64_t horizon_ = 0;
};

struct TrajectoryRow {
  std::int64_t t;
  ArmId arm;
  double reward;
  double oracle_mean;
  double chosen_mean;
  double regret;
  double cumulative_regret;
};

struct Trajectory {
  std::uint64_t seed = 0;
  std::vector<TrajectoryRow> rows;  // recorded steps only
  std::vector<ArmId> choices;       // every step, when requested
  std::vector<double> step_regrets; // every step, when requested
  double final_regret = 0.0;
};

struct EpisodeOptions {
  bool keep_choices = false;
  bool keep_step_regret = false;
  const RewardTape* tape = nullptr;
  // Called before every decision with the step and the live policy.
  std::function<void(std::int64_t, const Policy&)> observer;
};

// Steps recorded in trajectories: multiples of the stride, every changepoint
// and the step before it, every gradual window end, and the horizon.
std::vector<std::int64_t> record_steps(const ScenarioConfig& scenario);

Trajectory run_episode(const ScenarioConfig& scenario, const PolicySpec& spec,
                       std::size_t run_index, const EpisodeOptions& options = {});

void write_trajectory(std::ostream& out, const Trajectory& trajectory);

struct RunSummary {
  std::string scenario;
  std::string policy;
  std::vector<std::int64_t> t;
  std::vector<double> mean;  // pointwise mean cumulative regret
  std::vector<double> stddev;  // pointwise population standard deviation
  std::vector<double> final_regrets;
  double final_mean = 0.0;
  double final_std = 0.0;
};

RunSummary aggregate_runs(std::span<const Trajectory> runs);

// -- Scenario matrix ----------------------------------------------------------

struct MatrixOptions {
  double scale = 1.0;
  std::int64_t horizon = 100000;
  std::vector<std::int64_t> abrupt_changepoints{30000, 45000, 60000, 90000};
  std::vector<std::int64_t> gradual_starts{30000, 60000};
  std::int64_t gradual_duration = 10000;
  std::size_t runs = 3;
  std::uint64_t base_seed = 20240101;
  std::int64_t record_stride = 100;
  std::vector<PolicySpec> policies = default_policies();
  std::vector<Dynamics> dynamics{Dynamics::Stationary, Dynamics::Abrupt, Dynamics::Gradual};
  std::vector<std::string> datasets{"movielens", "obd"};
  // Synthetic stand-ins are generated for datasets left unset.
  std::shared_ptr<const ArmSet> movielens;
  std::shared_ptr<const ArmSet> obd;
  // Stationary scenarios reuse the abrupt scenario's window c*T/N instead of
  // falling back to tau = T.
  bool stationary_window_from_abrupt = true;
};

// Dataset x dynamics scenarios named "<dataset>-<dynamics>". Horizon,
// changepoints and window durations are multiplied by `scale`.
std::vector<ScenarioConfig> scenario_matrix(const MatrixOptions& options);

// Desk-scale stand-ins for the real datasets.
ArmSet movielens_like_arms(std::uint64_t seed, std::size_t pool_size = 2000);
ArmSet obd_like_arms(std::uint64_t seed, std::size_t pool_size = 20000);

struct SeedRecord {
  std::string scenario;
  std::string policy;
  std::size_t run;
  std::uint64_t seed;
};

struct MatrixResult {
  std::vector<ScenarioConfig> scenarios;
  std::vector<RunSummary> summaries;  // scenario-major, then policy order
  std::vector<SeedRecord> seeds;
  std::vector<Trajectory> trajectories;  // only when kept; same order as seeds
};

struct MatrixRunOptions {
  std::size_t threads = 1;
  bool keep_trajectories = false;
  bool keep_step_regret = false;  // implies keep_trajectories
};

MatrixResult run_matrix(std::vector<ScenarioConfig> scenarios,
                        const MatrixRunOptions& options = {});

void write_curves(std::ostream& out, std::span<const RunSummary> summaries);
// Rows = (dataset, policy), columns = dynamics as "mean ± std" plus numeric
// mean/std columns.
void write_summary(std::ostream& out, const MatrixResult& result);
void write_seeds(std::ostream& out, std::span<const SeedRecord> seeds);

std::string format_mean_std(double mean, double std);

// -- Curve analysis -----------------------------------------------------------

struct StaircasePhase {
  std::int64_t start;
  std::int64_t end;  // inclusive
  double early_mean;  // per-step regret over the first 2*tau steps
  double late_mean;   // per-step regret over the last quarter
  bool holds;
};

// Every phase after the first whose length exceeds 2*tau. `step_regret[t-1]`
// is the (seed-averaged) per-step regret at step t.
std::vector<StaircasePhase> staircase_phases(std::span<const double> step_regret,
                                             std::span<const std::int64_t> changepoints,
                                             std::size_t tau);

// R_T / R_{T/2} from per-step regrets.
double regret_growth_ratio(std::span<const double> step_regret);

}  // namespace driftlab
