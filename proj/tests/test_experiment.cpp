#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/experiment.hpp"

using namespace driftlab;

namespace {

std::shared_ptr<const ArmSet> bernoulli_arms(const std::vector<double>& means,
                                             std::size_t pool = 1000) {
  return std::make_shared<const ArmSet>(synth_arms(means, SupportKind::Bernoulli, pool, 1, "toy"));
}

ScenarioConfig toy_scenario(std::vector<double> means, std::int64_t horizon,
                            std::vector<PolicySpec> policies) {
  ScenarioConfig s;
  s.name = "toy";
  s.arms = bernoulli_arms(means);
  s.horizon = horizon;
  s.policies = std::move(policies);
  s.num_runs = 1;
  s.base_seed = 5;
  s.record_stride = 10;
  s.stationary_tau = static_cast<std::size_t>(horizon);
  return s;
}

PolicySpec kind(PolicyKind k) {
  PolicySpec p;
  p.kind = k;
  return p;
}

Trajectory with_final(double value, std::vector<std::int64_t> steps) {
  Trajectory t;
  for (auto s : steps) t.rows.push_back({s, 0, 0, 0, 0, 0, value});
  t.final_regret = value;
  return t;
}

}  // namespace

TEST(StepRegret, Examples) {
  EXPECT_NEAR(step_regret(0.8, 0.5), 0.3, 1e-15);
  EXPECT_EQ(step_regret(0.42, 0.42), 0.0);
  EXPECT_EQ(step_regret(4.0, 1.0), 3.0);
  EXPECT_THROW(step_regret(0.5, 0.6), InvariantError);
}

TEST(CumulativeRegret, Examples) {
  const std::vector<double> r{0.3, 0.0, 0.2};
  EXPECT_NEAR(cumulative_regret(r), 0.5, 1e-15);
  EXPECT_EQ(cumulative_regret(std::vector<double>(50, 0.0)), 0.0);
}

TEST(RunEpisode, FixedPolicies) {
  auto s = toy_scenario({0.9, 0.1}, 100, {kind(PolicyKind::OracleWorst)});
  EXPECT_NEAR(run_episode(s, s.policies[0], 0).final_regret, 80.0, 1e-9);
  s.horizon = 1000;
  EXPECT_NEAR(run_episode(s, s.policies[0], 0).final_regret, 800.0, 1e-9);
  EXPECT_EQ(run_episode(s, kind(PolicyKind::OracleBest), 0).final_regret, 0.0);
}

TEST(RunEpisode, ReplayIsBitIdentical) {
  auto s = toy_scenario({0.9, 0.6, 0.5, 0.2}, 2000, {kind(PolicyKind::DualView)});
  const EpisodeOptions o{.keep_choices = true, .keep_step_regret = true};
  const auto a = run_episode(s, s.policies[0], 3, o);
  const auto b = run_episode(s, s.policies[0], 3, o);
  EXPECT_EQ(a.choices, b.choices);
  EXPECT_EQ(a.step_regrets, b.step_regrets);
  EXPECT_EQ(a.final_regret, b.final_regret);
  EXPECT_NE(a.seed, run_episode(s, s.policies[0], 4).seed);
}

TEST(RunEpisode, RecordsCoverBoundaries) {
  auto s = toy_scenario({0.9, 0.6, 0.5, 0.2}, 1000, {kind(PolicyKind::Ucb1)});
  s.dynamics = Dynamics::Gradual;
  s.changepoints = {205};
  s.gradual_duration = 50;
  const auto steps = record_steps(s);
  for (std::int64_t t : {204, 205, 255, 10, 1000}) {
    EXPECT_NE(std::find(steps.begin(), steps.end(), t), steps.end()) << t;
  }
  const auto traj = run_episode(s, s.policies[0], 0);
  ASSERT_EQ(traj.rows.size(), steps.size());
  for (std::size_t i = 1; i < traj.rows.size(); ++i) {
    EXPECT_GE(traj.rows[i].cumulative_regret, traj.rows[i - 1].cumulative_regret);
    EXPECT_GE(traj.rows[i].regret, 0.0);
    EXPECT_DOUBLE_EQ(traj.rows[i].regret, traj.rows[i].oracle_mean - traj.rows[i].chosen_mean);
  }
}

TEST(Validation, WindowPolicyNeedsTau) {
  auto s = toy_scenario({0.9, 0.1}, 100, {kind(PolicyKind::SlidingWindow)});
  s.stationary_tau.reset();
  EXPECT_THROW(s.validate(), ConfigError);
  s.policies[0].tau = 10;
  EXPECT_NO_THROW(s.validate());
}

TEST(Validation, ChangepointsAscendingAndInsideHorizon) {
  auto s = toy_scenario({0.9, 0.6, 0.5, 0.2}, 100, {kind(PolicyKind::Ucb1)});
  s.dynamics = Dynamics::Abrupt;
  s.changepoints = {50, 40};
  EXPECT_THROW(s.validate(), ConfigError);
  s.changepoints = {50, 100};
  EXPECT_THROW(s.validate(), ConfigError);
  s.changepoints = {50, 60};
  EXPECT_NO_THROW(s.validate());
}

TEST(AggregateRuns, PopulationStd) {
  const std::vector<Trajectory> runs{with_final(10, {1, 2}), with_final(20, {1, 2}),
                                     with_final(30, {1, 2})};
  const auto s = aggregate_runs(runs);
  EXPECT_DOUBLE_EQ(s.final_mean, 20.0);
  EXPECT_NEAR(s.final_std, 8.16496580927726, 1e-12);
  EXPECT_EQ(s.t, (std::vector<std::int64_t>{1, 2}));
}

TEST(AggregateRuns, SingleAndIdenticalRunsHaveZeroStd) {
  const std::vector<Trajectory> one{with_final(0.1, {1, 2})};
  EXPECT_EQ(aggregate_runs(one).final_std, 0.0);
  const std::vector<Trajectory> same{with_final(0.1, {1, 2}), with_final(0.1, {1, 2}),
                                     with_final(0.1, {1, 2})};
  const auto s = aggregate_runs(same);
  EXPECT_EQ(s.final_mean, 0.1);
  for (double sd : s.stddev) EXPECT_EQ(sd, 0.0);
}

TEST(AggregateRuns, MisalignedStepsRejected) {
  const std::vector<Trajectory> runs{with_final(1, {1, 2}), with_final(2, {1, 3})};
  EXPECT_THROW(aggregate_runs(runs), InvariantError);
}

TEST(ScenarioMatrix, FullScaleLayout) {
  MatrixOptions o;
  o.movielens = std::make_shared<const ArmSet>(movielens_like_arms(1, 200));
  o.obd = std::make_shared<const ArmSet>(obd_like_arms(1, 20000));
  const auto m = scenario_matrix(o);
  ASSERT_EQ(m.size(), 6u);
  for (const auto& s : m) {
    EXPECT_EQ(s.horizon, 100000);
    EXPECT_EQ(s.num_runs, 3u);
    if (s.dynamics == Dynamics::Abrupt) {
      EXPECT_EQ(s.changepoints, (std::vector<std::int64_t>{30000, 45000, 60000, 90000}));
    }
    if (s.dynamics == Dynamics::Gradual) {
      EXPECT_EQ(s.changepoints, (std::vector<std::int64_t>{30000, 60000}));
      EXPECT_EQ(s.gradual_duration, 10000);
    }
    EXPECT_NO_THROW(s.validate());
  }
  EXPECT_EQ(m[0].name, "movielens-stationary");
}

TEST(ScenarioMatrix, DeskScale) {
  MatrixOptions o;
  o.scale = 0.1;
  o.datasets = {"movielens"};
  o.movielens = std::make_shared<const ArmSet>(movielens_like_arms(1, 200));
  const auto m = scenario_matrix(o);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[1].horizon, 10000);
  EXPECT_EQ(m[1].changepoints, (std::vector<std::int64_t>{3000, 4500, 6000, 9000}));
  EXPECT_EQ(m[2].gradual_duration, 1000);
  EXPECT_EQ(resolve_tau(m[1], parse_policy("swucb")), 2500u);
  // Stationary window policies borrow the abrupt-scenario heuristic.
  EXPECT_EQ(resolve_tau(m[0], m[0].policies[2]), 2500u);
  EXPECT_EQ(resolve_tau(m[0], parse_policy("swucb")), 10000u);
}

TEST(Policies, TokensRoundTrip) {
  for (const auto& p : default_policies()) {
    EXPECT_EQ(parse_policy(policy_token(p)).label(), p.label());
  }
  EXPECT_EQ(parse_policy("fdsw-max").label(), "FDSW-UCB(max)");
  EXPECT_THROW(parse_policy("thompson"), ConfigError);
}

TEST(Staircase, AdaptivePolicyRecoversWithinPhases) {
  // Long phases relative to a short window, so every phase qualifies.
  ScenarioConfig s;
  s.name = "staircase";
  s.arms = std::make_shared<const ArmSet>(
      synth_arms(std::vector<double>{0.9, 0.7, 0.5, 0.3, 0.1}, SupportKind::Bernoulli, 1000, 3));
  s.dynamics = Dynamics::Abrupt;
  s.horizon = 8000;
  s.changepoints = {2000, 4000, 6000};
  PolicySpec sw = parse_policy("swucb");
  sw.tau = 200;
  s.policies = {sw};
  s.num_runs = 3;
  s.base_seed = 1;
  for (std::size_t run = 0; run < 3; ++run) {
    const auto traj = run_episode(s, sw, run, {.keep_step_regret = true});
    const auto phases = staircase_phases(traj.step_regrets, s.changepoints, 200);
    ASSERT_EQ(phases.size(), 3u);
    for (const auto& p : phases) EXPECT_TRUE(p.holds) << p.start << ' ' << p.early_mean << ' ' << p.late_mean;
  }
}

TEST(Staircase, ShortPhasesAreSkipped) {
  const std::vector<double> flat(100, 1.0);
  const std::vector<std::int64_t> cps{40, 60};
  EXPECT_TRUE(staircase_phases(flat, cps, 30).empty());
  const auto p = staircase_phases(flat, cps, 5);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_FALSE(p[0].holds);
}

TEST(GrowthRatio, LinearAndSublinear) {
  EXPECT_NEAR(regret_growth_ratio(std::vector<double>(100, 0.2)), 2.0, 1e-12);
  std::vector<double> decaying(100, 0.0);
  decaying[0] = 1.0;
  EXPECT_DOUBLE_EQ(regret_growth_ratio(decaying), 1.0);
}

TEST(Writers, HeadersAndFormat) {
  EXPECT_EQ(format_mean_std(1525.0, 12.345), "1525.00 ± 12.35");
  auto s = toy_scenario({0.9, 0.1}, 50, {kind(PolicyKind::Ucb1)});
  std::ostringstream out;
  write_trajectory(out, run_episode(s, s.policies[0], 0));
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "t,arm,reward,oracle_mean,chosen_mean,r_t,R_t");
}

TEST(RunMatrix, ThreadCountDoesNotChangeResults) {
  MatrixOptions o;
  o.scale = 0.01;
  o.runs = 2;
  o.record_stride = 10;
  o.movielens = std::make_shared<const ArmSet>(movielens_like_arms(1, 200));
  o.obd = std::make_shared<const ArmSet>(obd_like_arms(1, 20000));
  const auto serial = run_matrix(scenario_matrix(o), {.threads = 1});
  const auto parallel = run_matrix(scenario_matrix(o), {.threads = 4});
  std::ostringstream a, b;
  write_curves(a, serial.summaries);
  write_curves(b, parallel.summaries);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(serial.summaries.size(), 6u * 6u);
}
