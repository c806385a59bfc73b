#include "driftlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

// -- Policy specs -------------------------------------------------------------

std::string PolicySpec::label() const {
  switch (kind) {
    case PolicyKind::Ucb1: return "UCB1";
    case PolicyKind::Discounted: return "D-UCB";
    case PolicyKind::SlidingWindow: return "SW-UCB";
    case PolicyKind::DualView:
      return "FDSW-UCB(" + std::string(to_string(aggregation)) + ")";
    case PolicyKind::OracleBest: return "oracle-best";
    case PolicyKind::OracleWorst: return "oracle-worst";
  }
  return "?";
}

std::string policy_token(const PolicySpec& spec) {
  switch (spec.kind) {
    case PolicyKind::Ucb1: return "ucb1";
    case PolicyKind::Discounted: return "ducb";
    case PolicyKind::SlidingWindow: return "swucb";
    case PolicyKind::DualView: return "fdsw-" + std::string(to_string(spec.aggregation));
    case PolicyKind::OracleBest: return "oracle-best";
    case PolicyKind::OracleWorst: return "oracle-worst";
  }
  return "?";
}

PolicySpec parse_policy(std::string_view token, const PolicySpec& defaults) {
  PolicySpec spec = defaults;
  if (token == "ucb1") {
    spec.kind = PolicyKind::Ucb1;
  } else if (token == "ducb") {
    spec.kind = PolicyKind::Discounted;
  } else if (token == "swucb") {
    spec.kind = PolicyKind::SlidingWindow;
  } else if (token.starts_with("fdsw-")) {
    spec.kind = PolicyKind::DualView;
    spec.aggregation = parse_aggregation(token.substr(5));
  } else if (token == "oracle-best") {
    spec.kind = PolicyKind::OracleBest;
  } else if (token == "oracle-worst") {
    spec.kind = PolicyKind::OracleWorst;
  } else {
    throw ConfigError("unknown policy '" + std::string(token) + "'");
  }
  return spec;
}

std::vector<PolicySpec> default_policies(const PolicySpec& defaults) {
  std::vector<PolicySpec> out;
  for (auto token : {"ucb1", "ducb", "swucb", "fdsw-min", "fdsw-mean", "fdsw-max"}) {
    out.push_back(parse_policy(token, defaults));
  }
  return out;
}

namespace {

bool uses_window(PolicyKind kind) {
  return kind == PolicyKind::SlidingWindow || kind == PolicyKind::DualView;
}

bool uses_discount(PolicyKind kind) {
  return kind == PolicyKind::Discounted || kind == PolicyKind::DualView;
}

}  // namespace

// -- Scenario -----------------------------------------------------------------

std::vector<DriftEvent> ScenarioConfig::schedule() const {
  return make_schedule(dynamics, changepoints, gradual_duration);
}

void ScenarioConfig::validate() const {
  const std::string where = "scenario '" + name + "': ";
  if (name.empty()) throw ConfigError("scenario needs a name");
  if (!arms || arms->pools.empty()) throw ConfigError(where + "no arms");
  if (horizon < 1) throw ConfigError(where + "horizon must be >= 1");
  if (num_runs < 1) throw ConfigError(where + "runs must be >= 1");
  if (record_stride < 1) throw ConfigError(where + "record stride must be >= 1");
  if (policies.empty()) throw ConfigError(where + "no policies");
  if (dynamics == Dynamics::Stationary && !changepoints.empty()) {
    throw ConfigError(where + "stationary scenarios take no changepoints");
  }
  if (dynamics != Dynamics::Stationary && changepoints.empty()) {
    throw ConfigError(where + "drifting scenarios need changepoints");
  }
  for (std::size_t i = 0; i < changepoints.size(); ++i) {
    if (changepoints[i] >= horizon || (i > 0 && changepoints[i] <= changepoints[i - 1])) {
      throw ConfigError(where + "changepoints must be strictly ascending and < horizon");
    }
  }
  try {
    validate_schedule(schedule(), horizon);
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  }
  if (!changepoints.empty() && arms->pools.size() < 4) {
    throw ConfigError(where + "drift needs at least 4 arms");
  }
  for (const auto& p : policies) {
    if (!(p.alpha >= 0.0)) throw ConfigError(where + "alpha must be >= 0");
    if (uses_discount(p.kind) && !(p.gamma > 0.0 && p.gamma <= 1.0)) {
      throw ConfigError(where + "gamma must lie in (0, 1]");
    }
    if (uses_window(p.kind)) resolve_tau(*this, p);
  }
}

std::size_t resolve_tau(const ScenarioConfig& scenario, const PolicySpec& spec) {
  if (spec.tau) {
    if (*spec.tau == 0) throw ConfigError("tau must be >= 1");
    return *spec.tau;
  }
  if (!scenario.changepoints.empty()) {
    return heuristic_window(scenario.horizon, scenario.changepoints.size(), spec.c);
  }
  if (scenario.stationary_tau) return *scenario.stationary_tau;
  throw ConfigError("scenario '" + scenario.name + "': " + spec.label() +
                    " has no window size (no changepoints and no explicit tau)");
}

std::unique_ptr<Policy> make_policy(const ScenarioConfig& scenario, const PolicySpec& spec) {
  const std::size_t k = scenario.arms->pools.size();
  switch (spec.kind) {
    case PolicyKind::Ucb1:
      return std::make_unique<Ucb1Policy>(k, spec.alpha);
    case PolicyKind::Discounted:
      return std::make_unique<DiscountedUcbPolicy>(k, spec.alpha, spec.gamma);
    case PolicyKind::SlidingWindow:
      return std::make_unique<SlidingWindowUcbPolicy>(k, spec.alpha, resolve_tau(scenario, spec));
    case PolicyKind::DualView:
      return std::make_unique<DualViewUcbPolicy>(k, spec.alpha,
                                                 spec.window_alpha.value_or(spec.alpha),
                                                 spec.gamma, resolve_tau(scenario, spec),
                                                 spec.aggregation);
    case PolicyKind::OracleBest:
    case PolicyKind::OracleWorst:
      return nullptr;
  }
  return nullptr;
}

Environment make_environment(const ScenarioConfig& scenario, std::uint64_t seed) {
  std::shared_ptr<const std::vector<RewardPool>> pools(scenario.arms, &scenario.arms->pools);
  return Environment(std::move(pools), scenario.schedule(), scenario.arms->support,
                     scenario.horizon, seed);
}

std::uint64_t episode_seed(const ScenarioConfig& scenario, const PolicySpec& spec,
                           std::size_t run_index) {
  return derive_seed(scenario.base_seed,
                     {scenario.name, spec.label(), std::to_string(run_index)});
}

// -- Regret -------------------------------------------------------------------

namespace {

// Neumaier summation; long runs of equal terms stay correctly rounded.
class CompensatedSum {
 public:
  double add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
    return sum_ + comp_;
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

double step_regret(double oracle_mean, double chosen_mean) {
  const double r = oracle_mean - chosen_mean;
  if (r < 0.0) {
    throw InvariantError("negative regret: oracle mean " + std::to_string(oracle_mean) +
                         " below chosen mean " + std::to_string(chosen_mean));
  }
  return r;
}

double cumulative_regret(std::span<const double> regrets) {
  CompensatedSum sum;
  double total = 0.0;
  for (double r : regrets) total = sum.add(r);
  return total;
}

RewardTape RewardTape::record(Environment env) {
  RewardTape tape;
  tape.num_arms_ = env.num_arms();
  tape.horizon_ = env.horizon();
  tape.rewards_.reserve(static_cast<std::size_t>(tape.horizon_) * tape.num_arms_);
  for (std::int64_t t = 1; t <= tape.horizon_; ++t) {
    for (ArmId a = 0; a < tape.num_arms_; ++a) {
      tape.rewards_.push_back(env.sample_reward(a, t));
    }
  }
  return tape;
}

// -- Episodes -----------------------------------------------------------------

std::vector<std::int64_t> record_steps(const ScenarioConfig& scenario) {
  std::set<std::int64_t> steps{scenario.horizon};
  for (std::int64_t t = scenario.record_stride; t <= scenario.horizon;
       t += scenario.record_stride) {
    steps.insert(t);
  }
  for (const auto& e : scenario.schedule()) {
    steps.insert(e.start_step - 1);
    steps.insert(e.start_step);
    if (e.duration > 0) steps.insert(e.end_step());
  }
  return {steps.begin(), steps.end()};
}

Trajectory run_episode(const ScenarioConfig& scenario, const PolicySpec& spec,
                       std::size_t run_index, const EpisodeOptions& options) {
  Trajectory traj;
  traj.seed = episode_seed(scenario, spec, run_index);
  Environment env = make_environment(scenario, traj.seed);
  auto policy = make_policy(scenario, spec);

  const RewardTape* tape = options.tape;
  if (tape && (tape->num_arms() != env.num_arms() || tape->horizon() < scenario.horizon)) {
    throw ConfigError("reward tape does not cover this scenario");
  }

  const auto steps = record_steps(scenario);
  auto next_record = steps.begin();
  traj.rows.reserve(steps.size());
  if (options.keep_choices) traj.choices.reserve(static_cast<std::size_t>(scenario.horizon));
  if (options.keep_step_regret) {
    traj.step_regrets.reserve(static_cast<std::size_t>(scenario.horizon));
  }

  CompensatedSum sum;
  double total = 0.0;
  for (std::int64_t t = 1; t <= scenario.horizon; ++t) {
    const OracleView best = env.oracle(t);
    ArmId arm = 0;
    if (policy) {
      if (options.observer) options.observer(t, *policy);
      arm = policy->select();
    } else if (spec.kind == PolicyKind::OracleBest) {
      arm = best.best_arm;
    } else {
      double worst = env.true_mean_at(0, t);
      for (ArmId a = 1; a < env.num_arms(); ++a) {
        const double m = env.true_mean_at(a, t);
        if (m < worst) {
          worst = m;
          arm = a;
        }
      }
    }

    const double reward = tape ? tape->reward(t, arm) : env.sample_reward(arm, t);
    if (policy) policy->observe(arm, reward);

    const double chosen_mean = env.true_mean_at(arm, t);
    const double r = step_regret(best.best_mean, chosen_mean);
    const double previous = total;
    total = sum.add(r);
    if (total < previous) throw InvariantError("cumulative regret decreased");

    if (options.keep_choices) traj.choices.push_back(arm);
    if (options.keep_step_regret) traj.step_regrets.push_back(r);
    if (next_record != steps.end() && *next_record == t) {
      traj.rows.push_back({t, arm, reward, best.best_mean, chosen_mean, r, total});
      ++next_record;
    }
  }
  traj.final_regret = total;
  return traj;
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory) {
  out << "t,arm,reward,oracle_mean,chosen_mean,r_t,R_t\n";
  char buf[256];
  for (const auto& r : trajectory.rows) {
    std::snprintf(buf, sizeof buf, "%lld,%zu,%.10g,%.10g,%.10g,%.10g,%.6f\n",
                  static_cast<long long>(r.t), r.arm, r.reward, r.oracle_mean,
                  r.chosen_mean, r.regret, r.cumulative_regret);
    out << buf;
  }
}

RunSummary aggregate_runs(std::span<const Trajectory> runs) {
  if (runs.empty()) throw ConfigError("aggregate_runs needs at least one run");
  const auto& first = runs.front().rows;
  for (const auto& run : runs) {
    if (run.rows.size() != first.size()) throw InvariantError("runs recorded different steps");
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (run.rows[i].t != first[i].t) throw InvariantError("runs recorded different steps");
    }
  }

  auto mean_std = [](std::span<const double> xs) {
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*lo == *hi) return std::pair{*lo, 0.0};
    const double n = static_cast<double>(xs.size());
    const double mean = std::clamp(std::accumulate(xs.begin(), xs.end(), 0.0) / n, *lo, *hi);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(ss / n)};
  };

  RunSummary s;
  std::vector<double> column(runs.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    for (std::size_t r = 0; r < runs.size(); ++r) {
      column[r] = runs[r].rows[i].cumulative_regret;
    }
    const auto [m, sd] = mean_std(column);
    s.t.push_back(first[i].t);
    s.mean.push_back(m);
    s.stddev.push_back(sd);
  }
  for (const auto& run : runs) s.final_regrets.push_back(run.final_regret);
  std::tie(s.final_mean, s.final_std) = mean_std(s.final_regrets);
  return s;
}

// -- Matrix -------------------------------------------------------------------

ArmSet movielens_like_arms(std::uint64_t seed, std::size_t pool_size) {
  static constexpr double kMeans[] = {3.300, 3.375, 3.450, 3.525, 3.600,
                                      3.675, 3.750, 3.825, 3.900};
  auto arms = synth_arms(kMeans, SupportKind::Ratings, pool_size,
                         derive_seed(seed, {"movielens-like"}), "movielens");
  for (auto& label : arms.labels) label = "synthetic_" + label;
  return arms;
}

ArmSet obd_like_arms(std::uint64_t seed, std::size_t pool_size) {
  std::vector<double> ctr(80);
  for (std::size_t i = 0; i < ctr.size(); ++i) ctr[i] = 0.002 + 0.00005 * static_cast<double>(i);
  auto arms = synth_arms(ctr, SupportKind::Bernoulli, pool_size,
                         derive_seed(seed, {"obd-like"}), "obd");
  for (auto& label : arms.labels) label = "synthetic_" + label;
  return arms;
}

std::vector<ScenarioConfig> scenario_matrix(const MatrixOptions& options) {
  if (!(options.scale > 0.0)) throw ConfigError("scale must be > 0");
  auto scaled = [&](std::int64_t v) {
    return std::max<std::int64_t>(1, std::llround(static_cast<double>(v) * options.scale));
  };
  auto scaled_list = [&](const std::vector<std::int64_t>& v) {
    std::vector<std::int64_t> out;
    for (auto x : v) out.push_back(scaled(x));
    return out;
  };

  std::vector<std::shared_ptr<const ArmSet>> datasets;
  for (const auto& name : options.datasets) {
    if (name == "movielens") {
      datasets.push_back(options.movielens ? options.movielens
                                           : std::make_shared<const ArmSet>(
                                                 movielens_like_arms(options.base_seed)));
    } else if (name == "obd") {
      datasets.push_back(options.obd ? options.obd
                                     : std::make_shared<const ArmSet>(
                                           obd_like_arms(options.base_seed)));
    } else {
      throw ConfigError("unknown dataset '" + name + "' (expected movielens or obd)");
    }
  }

  const std::int64_t horizon = scaled(options.horizon);
  std::vector<ScenarioConfig> out;
  for (const auto& arms : datasets) {
    for (Dynamics d : options.dynamics) {
      ScenarioConfig s;
      s.name = arms->name + "-" + to_string(d);
      s.arms = arms;
      s.dynamics = d;
      s.horizon = horizon;
      s.gradual_duration = scaled(options.gradual_duration);
      if (d == Dynamics::Abrupt) s.changepoints = scaled_list(options.abrupt_changepoints);
      if (d == Dynamics::Gradual) s.changepoints = scaled_list(options.gradual_starts);
      s.policies = options.policies;
      s.num_runs = options.runs;
      s.base_seed = options.base_seed;
      s.record_stride = options.record_stride;
      if (d == Dynamics::Stationary) {
        if (options.stationary_window_from_abrupt && !options.abrupt_changepoints.empty()) {
          for (auto& p : s.policies) {
            if (uses_window(p.kind) && !p.tau) {
              p.tau = heuristic_window(horizon, options.abrupt_changepoints.size(), p.c);
            }
          }
        }
        s.stationary_tau = static_cast<std::size_t>(horizon);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

MatrixResult run_matrix(std::vector<ScenarioConfig> scenarios, const MatrixRunOptions& options) {
  for (const auto& s : scenarios) s.validate();

  struct Job {
    std::size_t scenario;
    std::size_t policy;
    std::size_t run;
  };
  std::vector<Job> jobs;
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    for (std::size_t pi = 0; pi < scenarios[si].policies.size(); ++pi) {
      for (std::size_t r = 0; r < scenarios[si].num_runs; ++r) jobs.push_back({si, pi, r});
    }
  }

  std::vector<Trajectory> results(jobs.size());
  EpisodeOptions episode_options;
  episode_options.keep_step_regret = options.keep_step_regret;

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        const auto& job = jobs[i];
        const auto& sc = scenarios[job.scenario];
        results[i] = run_episode(sc, sc.policies[job.policy], job.run, episode_options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, jobs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  MatrixResult out;
  std::size_t cursor = 0;
  for (const auto& sc : scenarios) {
    for (const auto& spec : sc.policies) {
      std::span<const Trajectory> runs(results.data() + cursor, sc.num_runs);
      RunSummary summary = aggregate_runs(runs);
      summary.scenario = sc.name;
      summary.policy = spec.label();
      out.summaries.push_back(std::move(summary));
      for (std::size_t r = 0; r < sc.num_runs; ++r) {
        out.seeds.push_back({sc.name, spec.label(), r, results[cursor + r].seed});
      }
      cursor += sc.num_runs;
    }
  }
  if (options.keep_trajectories || options.keep_step_regret) out.trajectories = std::move(results);
  out.scenarios = std::move(scenarios);
  return out;
}

// -- Output -------------------------------------------------------------------

std::string format_mean_std(double mean, double std) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.2f \xC2\xB1 %.2f", mean, std);
  return buf;
}

void write_curves(std::ostream& out, std::span<const RunSummary> summaries) {
  out << "scenario,policy,t,mean_cum_regret,std_cum_regret\n";
  char buf[96];
  for (const auto& s : summaries) {
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%lld,%.6f,%.6f\n", static_cast<long long>(s.t[i]),
                    s.mean[i], s.stddev[i]);
      out << s.scenario << ',' << s.policy << ',' << buf;
    }
  }
}

void write_summary(std::ostream& out, const MatrixResult& result) {
  static constexpr Dynamics kColumns[] = {Dynamics::Stationary, Dynamics::Abrupt,
                                          Dynamics::Gradual};
  // (dataset, policy) rows in first-seen order.
  std::vector<std::pair<std::string, std::string>> rows;
  std::map<std::tuple<std::string, std::string, Dynamics>, const RunSummary*> cells;
  std::size_t cursor = 0;
  for (const auto& sc : result.scenarios) {
    for (std::size_t p = 0; p < sc.policies.size(); ++p, ++cursor) {
      const auto& summary = result.summaries.at(cursor);
      std::pair key{sc.arms->name, summary.policy};
      if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
      cells[{key.first, key.second, sc.dynamics}] = &summary;
    }
  }

  out << "dataset,policy";
  for (Dynamics d : kColumns) out << ',' << to_string(d);
  for (Dynamics d : kColumns) out << ',' << to_string(d) << "_mean," << to_string(d) << "_std";
  out << '\n';
  char buf[96];
  for (const auto& [dataset, policy] : rows) {
    out << dataset << ',' << policy;
    for (Dynamics d : kColumns) {
      const auto it = cells.find({dataset, policy, d});
      out << ',';
      if (it != cells.end()) out << format_mean_std(it->second->final_mean, it->second->final_std);
    }
    for (Dynamics d : kColumns) {
      const auto it = cells.find({dataset, policy, d});
      if (it != cells.end()) {
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f", it->second->final_mean, it->second->final_std);
        out << buf;
      } else {
        out << ",,";
      }
    }
    out << '\n';
  }
}

void write_seeds(std::ostream& out, std::span<const SeedRecord> seeds) {
  out << "scenario,policy,run,seed\n";
  for (const auto& s : seeds) {
    out << s.scenario << ',' << s.policy << ',' << s.run << ',' << s.seed << '\n';
  }
}

// -- Curve analysis -----------------------------------------------------------

std::vector<StaircasePhase> staircase_phases(std::span<const double> step_regret,
                                             std::span<const std::int64_t> changepoints,
                                             std::size_t tau) {
  const auto horizon = static_cast<std::int64_t>(step_regret.size());
  const auto window = static_cast<std::int64_t>(2 * tau);
  auto mean_over = [&](std::int64_t from, std::int64_t to) {  // inclusive, 1-based
    double s = 0.0;
    for (std::int64_t t = from; t <= to; ++t) s += step_regret[static_cast<std::size_t>(t - 1)];
    return s / static_cast<double>(to - from + 1);
  };
  std::vector<StaircasePhase> phases;
  for (std::size_t i = 0; i < changepoints.size(); ++i) {
    const std::int64_t start = changepoints[i];
    const std::int64_t end = i + 1 < changepoints.size() ? changepoints[i + 1] - 1 : horizon;
    const std::int64_t length = end - start + 1;
    if (length <= window) continue;
    const std::int64_t quarter = std::max<std::int64_t>(1, length / 4);
    StaircasePhase p{start, end, mean_over(start, start + window - 1),
                     mean_over(end - quarter + 1, end), false};
    p.holds = p.late_mean <= 0.5 * p.early_mean;
    phases.push_back(p);
  }
  return phases;
}

double regret_growth_ratio(std::span<const double> step_regret) {
  const std::size_t half = step_regret.size() / 2;
  const double first = cumulative_regret(step_regret.first(half));
  return cumulative_regret(step_regret) / first;
}

}  // namespace driftlab
