#include "driftlab/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "driftlab/errors.hpp"

namespace driftlab {

RewardPool::RewardPool(std::vector<double> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw ConfigError("reward pool must not be empty");
  mean_ = std::accumulate(samples_.begin(), samples_.end(), 0.0) /
          static_cast<double>(samples_.size());
  const auto [lo, hi] = std::minmax_element(samples_.begin(), samples_.end());
  min_ = *lo;
  max_ = *hi;
}

double pool_mean(const RewardPool& pool) {
  const auto s = pool.samples();
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

std::string to_string(Dynamics dynamics) {
  switch (dynamics) {
    case Dynamics::Stationary: return "stationary";
    case Dynamics::Abrupt: return "abrupt";
    case Dynamics::Gradual: return "gradual";
  }
  return "?";
}

Dynamics parse_dynamics(const std::string& text) {
  if (text == "stationary") return Dynamics::Stationary;
  if (text == "abrupt") return Dynamics::Abrupt;
  if (text == "gradual") return Dynamics::Gradual;
  throw ConfigError("unknown dynamics '" + text + "'");
}

void validate_schedule(std::span<const DriftEvent> events, std::int64_t horizon) {
  std::int64_t previous_end = 1;
  for (const auto& e : events) {
    if (e.kind == DriftKind::AbruptSwap && e.duration != 0) {
      throw ConfigError("abrupt drift events have zero duration");
    }
    if (e.kind == DriftKind::GradualSwap && e.duration <= 0) {
      throw ConfigError("gradual drift windows need a positive duration");
    }
    if (e.start_step <= previous_end) {
      throw ConfigError("drift events must start after step 1, be ascending and "
                        "not overlap (event at " +
                        std::to_string(e.start_step) + ")");
    }
    if (e.end_step() > horizon) {
      throw ConfigError("drift event at " + std::to_string(e.start_step) +
                        " does not fit in horizon " + std::to_string(horizon));
    }
    previous_end = e.end_step();
  }
}

std::vector<DriftEvent> make_schedule(Dynamics dynamics,
                                      std::span<const std::int64_t> starts,
                                      std::int64_t gradual_duration) {
  std::vector<DriftEvent> events;
  if (dynamics == Dynamics::Stationary) return events;
  for (auto s : starts) {
    if (dynamics == Dynamics::Abrupt) {
      events.push_back({DriftKind::AbruptSwap, s, 0});
    } else {
      events.push_back({DriftKind::GradualSwap, s, gradual_duration});
    }
  }
  return events;
}

std::vector<ArmId> rank_arms(std::span<const double> arm_means) {
  std::vector<ArmId> order(arm_means.size());
  std::iota(order.begin(), order.end(), ArmId{0});
  std::stable_sort(order.begin(), order.end(), [&](ArmId a, ArmId b) {
    return arm_means[a] > arm_means[b];
  });
  return order;
}

std::array<std::pair<ArmId, ArmId>, 2> swap_pairs(std::span<const double> arm_means) {
  if (arm_means.size() < 4) {
    throw ConfigError("Top-2/Bottom-2 swaps need at least 4 arms");
  }
  const auto order = rank_arms(arm_means);
  const std::size_t last = order.size() - 1;
  return {{{order[0], order[last]}, {order[1], order[last - 1]}}};
}

Assignment rank_swap(const Assignment& assignment, std::span<const RewardPool> pools) {
  std::vector<double> means(assignment.size());
  for (std::size_t a = 0; a < assignment.size(); ++a) {
    means[a] = pools[assignment[a]].mean();
  }
  Assignment next = assignment;
  for (const auto& [hi, lo] : swap_pairs(means)) std::swap(next[hi], next[lo]);
  return next;
}

double gradual_lambda(std::int64_t t, std::int64_t start, std::int64_t duration) {
  if (duration <= 0 || t < start || t > start + duration) {
    throw std::invalid_argument("gradual_lambda: t outside drift window");
  }
  return static_cast<double>(t - start) / static_cast<double>(duration);
}

// -- Environment --------------------------------------------------------------

Environment::Environment(std::vector<RewardPool> pools, std::vector<DriftEvent> schedule,
                         RewardSupport support, std::int64_t horizon,
                         std::uint64_t seed)
    : Environment(std::make_shared<const std::vector<RewardPool>>(std::move(pools)),
                  std::move(schedule), support, horizon, seed) {}

Environment::Environment(std::shared_ptr<const std::vector<RewardPool>> pools,
                         std::vector<DriftEvent> schedule, RewardSupport support,
                         std::int64_t horizon, std::uint64_t seed)
    : pools_(std::move(pools)),
      schedule_(std::move(schedule)),
      support_(support),
      horizon_(horizon),
      rng_(seed) {
  if (!pools_ || pools_->empty()) throw ConfigError("environment needs at least one arm");
  if (horizon_ < 1) throw ConfigError("horizon must be >= 1");
  for (const auto& p : *pools_) {
    if (!support_.contains(p.min()) || !support_.contains(p.max())) {
      throw ConfigError("reward pool has samples outside the declared support");
    }
  }
  validate_schedule(schedule_, horizon_);
  if (!schedule_.empty() && pools_->size() < 4) {
    throw ConfigError("Top-2/Bottom-2 drift needs at least 4 arms");
  }

  Assignment initial(pools_->size());
  std::iota(initial.begin(), initial.end(), std::size_t{0});
  assignments_.push_back(std::move(initial));
  for (std::size_t i = 0; i < schedule_.size(); ++i) {
    assignments_.push_back(rank_swap(assignments_.back(), *pools_));
  }
}

const Assignment& Environment::assignment_after(std::ptrdiff_t index) const {
  return assignments_.at(static_cast<std::size_t>(index + 1));
}

Environment::Phase Environment::phase_at(std::int64_t t) const {
  // Last event whose start is <= t.
  auto it = std::upper_bound(
      schedule_.begin(), schedule_.end(), t,
      [](std::int64_t step, const DriftEvent& e) { return step < e.start_step; });
  if (it == schedule_.begin()) return {-1, 1.0};
  const auto index = std::distance(schedule_.begin(), it) - 1;
  const auto& e = schedule_[static_cast<std::size_t>(index)];
  if (e.kind == DriftKind::GradualSwap && t < e.end_step()) {
    return {index, gradual_lambda(t, e.start_step, e.duration)};
  }
  return {index, 1.0};
}

double Environment::true_mean_at(ArmId arm, std::int64_t t) const {
  const Phase p = phase_at(t);
  const std::size_t target = assignment_after(p.event).at(arm);
  if (p.event < 0 || p.lambda >= 1.0) return (*pools_)[target].mean();
  const std::size_t source = assignment_after(p.event - 1)[arm];
  if (source == target) return (*pools_)[source].mean();
  return (1.0 - p.lambda) * (*pools_)[source].mean() + p.lambda * (*pools_)[target].mean();
}

std::vector<double> Environment::true_means_at(std::int64_t t) const {
  std::vector<double> means(num_arms());
  for (ArmId a = 0; a < num_arms(); ++a) means[a] = true_mean_at(a, t);
  return means;
}

OracleView Environment::oracle(std::int64_t t) const {
  OracleView view{true_mean_at(0, t), 0};
  for (ArmId a = 1; a < num_arms(); ++a) {
    const double m = true_mean_at(a, t);
    if (m > view.best_mean) view = {m, a};
  }
  return view;
}

double Environment::draw_from(std::size_t pool) {
  const auto samples = (*pools_)[pool].samples();
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  return samples[pick(rng_)];
}

double Environment::sample_reward(ArmId arm, std::int64_t t) {
  const Phase p = phase_at(t);
  const std::size_t target = assignment_after(p.event).at(arm);
  if (p.event < 0 || p.lambda >= 1.0) return draw_from(target);
  const std::size_t source = assignment_after(p.event - 1)[arm];
  if (source == target) return draw_from(source);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  return draw_from(coin(rng_) < p.lambda ? target : source);
}

std::vector<std::int64_t> Environment::boundary_steps() const {
  std::vector<std::int64_t> steps;
  for (const auto& e : schedule_) {
    steps.push_back(e.start_step);
    if (e.duration > 0) steps.push_back(e.end_step());
  }
  return steps;
}

// -- Export and validation ----------------------------------------------------

std::vector<MeanSample> export_mean_trajectories(const Environment& env,
                                                 std::int64_t stride) {
  if (stride < 1) throw ConfigError("export stride must be >= 1");
  const std::int64_t horizon = env.horizon();
  std::set<std::int64_t> steps{1, horizon};
  for (std::int64_t t = stride; t <= horizon; t += stride) steps.insert(t);
  for (auto b : env.boundary_steps()) {
    if (b - 1 >= 1) steps.insert(b - 1);
    steps.insert(b);
  }
  std::vector<MeanSample> rows;
  rows.reserve(steps.size() * env.num_arms());
  for (auto t : steps) {
    for (ArmId a = 0; a < env.num_arms(); ++a) {
      rows.push_back({t, a, env.true_mean_at(a, t)});
    }
  }
  return rows;
}

void write_mean_trajectories(std::ostream& out, std::span<const MeanSample> rows) {
  out << "t,arm_id,true_mean\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.12g", r.true_mean);
    out << r.t << ',' << r.arm << ',' << buf << '\n';
  }
}

namespace {

constexpr double kLineTolerance = 1e-12;

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

void check_conservation(const Environment& env, std::int64_t t,
                        const std::vector<double>& reference,
                        std::vector<DriftViolation>& out) {
  const auto means = env.true_means_at(t);
  if (sorted(means) != reference) {
    out.push_back({t, 0, "multiset of true means differs from the initial one"});
  }
}

}  // namespace

std::vector<DriftViolation> validate_drift(const Environment& env) {
  std::vector<DriftViolation> violations;
  const auto reference = sorted(env.true_means_at(1));
  const auto& events = env.schedule();

  for (const auto& e : events) {
    const auto before = env.true_means_at(e.start_step - 1);
    auto expected = before;
    for (const auto& [hi, lo] : swap_pairs(before)) {
      std::swap(expected[hi], expected[lo]);
    }

    if (e.kind == DriftKind::AbruptSwap) {
      const auto after = env.true_means_at(e.start_step);
      for (ArmId a = 0; a < after.size(); ++a) {
        if (after[a] != expected[a]) {
          violations.push_back({e.start_step, a,
                                "abrupt step does not land on the rank-paired mean"});
        }
      }
    } else {
      const double span = static_cast<double>(e.duration);
      for (std::int64_t t = e.start_step; t <= e.end_step(); ++t) {
        const double frac = static_cast<double>(t - e.start_step) / span;
        for (ArmId a = 0; a < before.size(); ++a) {
          const double line = before[a] + (expected[a] - before[a]) * frac;
          const double got = env.true_mean_at(a, t);
          if (std::abs(got - line) > kLineTolerance * std::max(1.0, std::abs(line))) {
            violations.push_back({t, a, "gradual mean leaves the interpolation line"});
          }
        }
      }
    }
    check_conservation(env, e.start_step - 1, reference, violations);
    check_conservation(env, e.end_step(), reference, violations);
  }

  // Conservation at regular points outside every drift window.
  const std::int64_t stride = std::max<std::int64_t>(1, env.horizon() / 1000);
  for (std::int64_t t = 1; t <= env.horizon(); t += stride) {
    const bool inside = std::any_of(events.begin(), events.end(), [&](const DriftEvent& e) {
      return e.duration > 0 && t > e.start_step && t < e.end_step();
    });
    if (!inside) check_conservation(env, t, reference, violations);
  }
  return violations;
}

}  // namespace driftlab
