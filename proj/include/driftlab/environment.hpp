#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftlab/bandit.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

// Empirical rewards backing one arm; sampled uniformly with replacement.
class RewardPool {
 public:
  explicit RewardPool(std::vector<double> samples);

  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double mean() const { return mean_; }
  double min() const { return min_; }
  double max() const { return max_; }

 private:
  std::vector<double> samples_;
  double mean_;
  double min_;
  double max_;
};

double pool_mean(const RewardPool& pool);

struct RewardSupport {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
};

inline constexpr RewardSupport kBernoulliSupport{0.0, 1.0};
inline constexpr RewardSupport kRatingSupport{1.0, 5.0};

enum class DriftKind { AbruptSwap, GradualSwap };

struct DriftEvent {
  DriftKind kind = DriftKind::AbruptSwap;
  std::int64_t start_step = 0;
  std::int64_t duration = 0;  // 0 for abrupt events

  std::int64_t end_step() const { return start_step + duration; }
};

enum class Dynamics { Stationary, Abrupt, Gradual };

std::string to_string(Dynamics dynamics);
Dynamics parse_dynamics(const std::string& text);

// Throws ConfigError unless events are sorted, start at step >= 2, do not
// overlap and fit inside the horizon.
void validate_schedule(std::span<const DriftEvent> events, std::int64_t horizon);

std::vector<DriftEvent> make_schedule(Dynamics dynamics,
                                      std::span<const std::int64_t> starts,
                                      std::int64_t gradual_duration);

// Pool index backing each arm.
using Assignment = std::vector<std::size_t>;

// Arm indices ordered best-first by mean; equal means keep index order.
std::vector<ArmId> rank_arms(std::span<const double> arm_means);

// The (best, worst) and (second best, second worst) arm pairs.
std::array<std::pair<ArmId, ArmId>, 2> swap_pairs(std::span<const double> arm_means);

// Exchanges the pools of the Top-2 and Bottom-2 arms, pairing rank 1 with the
// last rank and rank 2 with the second-to-last.
Assignment rank_swap(const Assignment& assignment,
                     std::span<const RewardPool> pools);

// (t - start) / duration for start <= t <= start + duration.
double gradual_lambda(std::int64_t t, std::int64_t start, std::int64_t duration);

struct OracleView {
  double best_mean;
  ArmId best_arm;
};

// Semi-synthetic environment. Pool assignments for every drift event are
// resolved at construction, so mean queries are pure functions of t; only
// reward sampling advances the random stream.
class Environment {
 public:
  Environment(std::vector<RewardPool> pools, std::vector<DriftEvent> schedule,
              RewardSupport support, std::int64_t horizon, std::uint64_t seed);
  // Pools are immutable, so episodes can share one copy.
  Environment(std::shared_ptr<const std::vector<RewardPool>> pools,
              std::vector<DriftEvent> schedule, RewardSupport support,
              std::int64_t horizon, std::uint64_t seed);

  std::size_t num_arms() const { return pools_->size(); }
  std::int64_t horizon() const { return horizon_; }
  const std::vector<RewardPool>& pools() const { return *pools_; }
  const std::vector<DriftEvent>& schedule() const { return schedule_; }
  RewardSupport support() const { return support_; }

  // Pool assignment in force after event `index` completes; -1 = initial.
  const Assignment& assignment_after(std::ptrdiff_t index) const;

  double true_mean_at(ArmId arm, std::int64_t t) const;
  std::vector<double> true_means_at(std::int64_t t) const;
  OracleView oracle(std::int64_t t) const;

  double sample_reward(ArmId arm, std::int64_t t);

  // Steps at which the mean structure changes: abrupt points, gradual window
  // starts and ends.
  std::vector<std::int64_t> boundary_steps() const;

  void reseed(std::uint64_t seed) { rng_.seed(seed); }

 private:
  struct Phase {
    std::ptrdiff_t event;  // -1 before the first event
    double lambda;         // blend weight toward the event's target assignment
  };
  Phase phase_at(std::int64_t t) const;
  double draw_from(std::size_t pool);

  std::shared_ptr<const std::vector<RewardPool>> pools_;
  std::vector<DriftEvent> schedule_;
  std::vector<Assignment> assignments_;  // [0] initial, [i+1] after event i
  RewardSupport support_;
  std::int64_t horizon_;
  Rng rng_;
};

struct MeanSample {
  std::int64_t t;
  ArmId arm;
  double true_mean;
};

// True means of every arm at t = 1, every multiple of `stride`, the horizon,
// and both sides of every drift boundary.
std::vector<MeanSample> export_mean_trajectories(const Environment& env,
                                                 std::int64_t stride);

void write_mean_trajectories(std::ostream& out, std::span<const MeanSample> rows);

struct DriftViolation {
  std::int64_t t;
  ArmId arm;
  std::string what;
};

// Checks the mean trajectory against the drift contract: abrupt points move
// exactly the rank-paired arms onto their partners' means, gradual windows
// are affine between the swapped endpoints, and the multiset of means is
// unchanged outside drift windows. Empty result means all checks passed.
std::vector<DriftViolation> validate_drift(const Environment& env);

}  // namespace driftlab
