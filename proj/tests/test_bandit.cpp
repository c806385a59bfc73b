#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "driftlab/bandit.hpp"
#include "driftlab/errors.hpp"

using namespace driftlab;

namespace {

// Reference values evaluated outside this code base (plain scalar formula).
constexpr double kUcbExample = 1.5729830131446736;
constexpr double kDiscountedExample = 3.5729830131446736;
constexpr double kWindowExample = 5.5729830131446736;

WindowState window_with(std::size_t tau, const std::vector<std::vector<double>>& windows) {
  WindowState w(windows.size(), tau);
  for (std::size_t a = 0; a < windows.size(); ++a) {
    for (double r : windows[a]) w.push(a, r);
  }
  return w;
}

}  // namespace

TEST(Ucb1Score, Examples) {
  EXPECT_NEAR(ucb1_score(0.5, 4, 100, 1.0), kUcbExample, 1e-12);
  EXPECT_DOUBLE_EQ(ucb1_score(3.0, 7, 50, 0.0), 3.0);
  EXPECT_DOUBLE_EQ(ucb1_score(3.0, 1, 1, 1.0), 3.0);
}

TEST(Ucb1Score, RejectsZeroPulls) {
  EXPECT_THROW(ucb1_score(0.5, 0, 10, 1.0), std::invalid_argument);
  EXPECT_THROW(ucb1_score(0.5, 1, 0, 1.0), std::invalid_argument);
}

TEST(Ucb1State, ScoreUsesRoundsElapsed) {
  Ucb1State s(2);
  for (int i = 0; i < 4; ++i) s.update(0, 0.5);
  for (int i = 0; i < 96; ++i) s.update(1, 0.0);
  EXPECT_EQ(s.rounds(), 100u);
  EXPECT_EQ(s.pulls(0) + s.pulls(1), s.rounds());
  EXPECT_NEAR(s.score(0, 1.0), kUcbExample, 1e-12);
}

TEST(DiscountedScore, Examples) {
  DiscountedState s({5.0, 0.0}, {2.0, 8.0}, 0.9);
  EXPECT_DOUBLE_EQ(s.total_count(), 10.0);
  EXPECT_NEAR(s.score(0, 1.0), kDiscountedExample, 1e-12);
  EXPECT_DOUBLE_EQ(s.score(0, 0.0), 2.5);

  DiscountedState one({0.0}, {1.0}, 0.9);
  EXPECT_DOUBLE_EQ(one.score(0, 1.0), 0.0);
}

TEST(DiscountedUpdate, DecaysEveryArmAndCreditsChosen) {
  DiscountedState s({10.0, 4.0}, {5.0, 2.0}, 0.9);
  s.update(0, 1.0);
  EXPECT_NEAR(s.sum(0), 10.0, 1e-12);
  EXPECT_NEAR(s.count(0), 5.5, 1e-12);
  EXPECT_NEAR(s.sum(1), 3.6, 1e-12);
  EXPECT_NEAR(s.count(1), 1.8, 1e-12);
}

TEST(DiscountedUpdate, GammaOneIsRawSums) {
  DiscountedState s({4.0, 1.0}, {2.0, 3.0}, 1.0);
  s.update(0, 0.5);
  EXPECT_DOUBLE_EQ(s.sum(0), 4.5);
  EXPECT_DOUBLE_EQ(s.count(0), 3.0);
  EXPECT_DOUBLE_EQ(s.sum(1), 1.0);
  EXPECT_DOUBLE_EQ(s.count(1), 3.0);
}

TEST(DiscountedState, RejectsBadGamma) {
  EXPECT_THROW(DiscountedState(2, 0.0), std::invalid_argument);
  EXPECT_THROW(DiscountedState(2, 1.5), std::invalid_argument);
}

TEST(DiscountedState, CountBoundAndNonNegativity) {
  const double gamma = 0.95;
  DiscountedState s(3, gamma);
  std::mt19937_64 rng(11);
  for (int u = 1; u <= 2000; ++u) {
    s.update(rng() % 3, static_cast<double>(rng() % 2));
    const double bound = (1.0 - std::pow(gamma, u)) / (1.0 - gamma);
    for (ArmId a = 0; a < 3; ++a) {
      ASSERT_GE(s.count(a), 0.0);
      ASSERT_LE(s.count(a), bound + 1e-9);
      ASSERT_LT(s.count(a), 1.0 / (1.0 - gamma));
      if (s.count(a) == 0.0) ASSERT_EQ(s.sum(a), 0.0);
    }
  }
}

TEST(WindowPush, Examples) {
  auto w = window_with(3, {{1, 0, 1}});
  w.push(0, 0);
  EXPECT_EQ(w.window(0), (std::deque<double>{0, 1, 0}));

  auto below = window_with(3, {{1}});
  below.push(0, 5);
  EXPECT_EQ(below.window(0), (std::deque<double>{1, 5}));

  auto single = window_with(1, {{2}});
  single.push(0, 4);
  EXPECT_EQ(single.window(0), (std::deque<double>{4}));
}

TEST(WindowPush, OtherArmsUntouched) {
  auto w = window_with(2, {{1, 2}, {3}});
  w.push(0, 9);
  EXPECT_EQ(w.window(1), (std::deque<double>{3}));
  EXPECT_EQ(w.total_size(), 3u);
}

TEST(WindowScore, Examples) {
  auto w = window_with(16, {{4, 5}, {0, 0, 0, 0, 0, 0, 0, 0}});
  EXPECT_NEAR(w.score(0, 1.0), kWindowExample, 1e-12);
  EXPECT_DOUBLE_EQ(w.score(0, 0.0), 4.5);
  auto one = window_with(4, {{1}});
  EXPECT_DOUBLE_EQ(one.score(0, 1.0), 1.0);
}

TEST(WindowState, CapacityAndOrderProperty) {
  const std::size_t tau = 7;
  WindowState w(4, tau);
  std::vector<std::vector<double>> pushed(4);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5000; ++i) {
    const ArmId a = rng() % 4;
    const double r = static_cast<double>(rng() % 1000) / 7.0;
    w.push(a, r);
    pushed[a].push_back(r);
    ASSERT_LE(w.size(a), tau);
    const auto& q = w.window(a);
    const auto n = q.size();
    for (std::size_t j = 0; j < n; ++j) ASSERT_EQ(q[j], pushed[a][pushed[a].size() - n + j]);
    double s = 0;
    for (double v : q) s += v;
    ASSERT_NEAR(w.mean(a), s / n, 1e-9);
  }
}

TEST(HeuristicWindow, Examples) {
  EXPECT_EQ(heuristic_window(100000, 4, 1.0), 25000u);
  EXPECT_EQ(heuristic_window(100000, 4, 0.5), 12500u);
  EXPECT_EQ(heuristic_window(10, 100, 0.001), 1u);
  EXPECT_THROW(heuristic_window(100000, 0, 1.0), ConfigError);
}

TEST(Aggregate, Examples) {
  EXPECT_DOUBLE_EQ(aggregate(Aggregation::Mean, 2, 4), 3);
  EXPECT_DOUBLE_EQ(aggregate(Aggregation::Max, 2, 4), 4);
  EXPECT_DOUBLE_EQ(aggregate(Aggregation::Min, 2, 4), 2);
  EXPECT_EQ(parse_aggregation("max"), Aggregation::Max);
  EXPECT_EQ(to_string(Aggregation::Min), "min");
}

TEST(SelectArm, ColdArmsFirstThenArgmaxLowestIndex) {
  const std::vector<double> scores{1.0, 3.0, 3.0};
  const std::vector<ArmId> cold{2};
  EXPECT_EQ(select_arm(scores, cold), 2u);
  EXPECT_EQ(select_arm(scores, {}), 1u);
}

TEST(Policies, ColdStartIsRoundRobin) {
  Ucb1Policy p(4, 1.0);
  for (ArmId expected = 0; expected < 4; ++expected) {
    const ArmId a = p.select();
    EXPECT_EQ(a, expected);
    p.observe(a, 0.0);
  }
}

TEST(DualView, UpdatesBothViewsIdentically) {
  DualViewUcbPolicy p(2, 1.0, 0.9, 3, Aggregation::Mean);
  p.observe(0, 1.0);
  EXPECT_DOUBLE_EQ(p.discounted().sum(0), 1.0);
  EXPECT_DOUBLE_EQ(p.discounted().count(0), 1.0);
  EXPECT_EQ(p.windowed().window(0), (std::deque<double>{1.0}));
  p.observe(1, 0.0);
  p.observe(0, 1.0);
  EXPECT_NEAR(p.discounted().sum(0), 0.81 + 1.0, 1e-12);
  EXPECT_EQ(p.windowed().size(0), 2u);
  EXPECT_EQ(p.name(), "FDSW-UCB(mean)");
}

TEST(DualView, DegenerateViewsAgreeOnMeans) {
  DualViewUcbPolicy p(3, 1.0, 1.0, 1000, Aggregation::Min);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    p.observe(rng() % 3, static_cast<double>(rng() % 6));
    for (ArmId a = 0; a < 3; ++a) {
      if (p.is_cold(a)) continue;
      ASSERT_DOUBLE_EQ(p.discounted().mean(a), p.windowed().mean(a));
    }
  }
}

namespace {

std::vector<ArmId> drive(Policy& p, const std::vector<std::vector<double>>& tape) {
  std::vector<ArmId> picks;
  for (const auto& row : tape) {
    const ArmId a = p.select();
    picks.push_back(a);
    p.observe(a, row[a]);
  }
  return picks;
}

std::vector<std::vector<double>> random_tape(std::size_t steps, std::size_t arms,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.4);
  std::vector<std::vector<double>> tape(steps, std::vector<double>(arms));
  for (auto& row : tape) {
    for (std::size_t a = 0; a < arms; ++a) row[a] = coin(rng) ? 1.0 + 0.1 * a : 0.0;
  }
  return tape;
}

}  // namespace

TEST(Policies, DegenerateConfigsMatchUcb1) {
  const auto tape = random_tape(1500, 4, 99);
  Ucb1Policy ucb(4, 1.0);
  const auto reference = drive(ucb, tape);
  DiscountedUcbPolicy d(4, 1.0, 1.0);
  SlidingWindowUcbPolicy sw(4, 1.0, tape.size());
  EXPECT_EQ(drive(d, tape), reference);
  EXPECT_EQ(drive(sw, tape), reference);
  for (auto agg : {Aggregation::Min, Aggregation::Mean, Aggregation::Max}) {
    DualViewUcbPolicy f(4, 1.0, 1.0, tape.size(), agg);
    EXPECT_EQ(drive(f, tape), reference) << to_string(agg);
  }
}

TEST(Policies, DeterministicReplay) {
  const auto tape = random_tape(800, 5, 7);
  DualViewUcbPolicy a(5, 0.7, 0.99, 50, Aggregation::Max);
  DualViewUcbPolicy b(5, 0.7, 0.99, 50, Aggregation::Max);
  EXPECT_EQ(drive(a, tape), drive(b, tape));
}

TEST(Policies, ScoreDominanceInExplorationWeight) {
  const auto tape = random_tape(300, 3, 17);
  SlidingWindowUcbPolicy lo(3, 0.5, 40);
  SlidingWindowUcbPolicy hi(3, 2.0, 40);
  for (const auto& row : tape) {
    const ArmId a = lo.select();
    lo.observe(a, row[a]);
    hi.observe(a, row[a]);
    for (ArmId k = 0; k < 3; ++k) {
      if (lo.is_cold(k)) continue;
      ASSERT_LE(lo.score(k), hi.score(k));
    }
  }
}

TEST(Policies, ShiftCovariance) {
  // Adding a constant to every reward shifts every mean by that constant and
  // leaves the selection sequence unchanged.
  auto tape = random_tape(600, 4, 23);
  auto shifted = tape;
  for (auto& row : shifted) {
    for (double& r : row) r += 2.0;
  }
  DiscountedUcbPolicy a(4, 1.0, 0.98);
  DiscountedUcbPolicy b(4, 1.0, 0.98);
  std::vector<ArmId> pa, pb;
  for (std::size_t t = 0; t < tape.size(); ++t) {
    const ArmId x = a.select();
    const ArmId y = b.select();
    pa.push_back(x);
    pb.push_back(y);
    a.observe(x, tape[t][x]);
    b.observe(y, shifted[t][y]);
    if (x == y && !a.is_cold(x)) ASSERT_NEAR(b.score(x) - a.score(x), 2.0, 1e-9);
  }
  EXPECT_EQ(pa, pb);
}

TEST(Policies, DiscountedArmTurnsColdAgain) {
  DiscountedUcbPolicy p(2, 1.0, 0.5);
  p.observe(0, 1.0);
  for (int i = 0; i < 40; ++i) p.observe(1, 0.0);
  EXPECT_TRUE(p.is_cold(0));
  EXPECT_EQ(p.select(), 0u);
}

TEST(Policies, ScoresAreNanForColdArms) {
  SlidingWindowUcbPolicy p(3, 1.0, 5);
  p.observe(1, 0.5);
  const auto s = p.scores();
  EXPECT_TRUE(std::isnan(s[0]));
  EXPECT_FALSE(std::isnan(s[1]));
}
