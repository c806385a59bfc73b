#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace driftlab {

using ArmId = std::size_t;

// Discounted counts at or below this are treated as "never pulled".
inline constexpr double kColdCount = 1e-9;

enum class Aggregation { Mean, Max, Min };

std::string_view to_string(Aggregation kind);
Aggregation parse_aggregation(std::string_view text);

/// alpha * sqrt(max(0, ln(total)) / count). Shared by every UCB-family score
/// so that degenerate configurations produce bit-identical values.
double exploration_bonus(double total, double count, double alpha);

/// mean + alpha * sqrt(ln(rounds) / pulls). `pulls` must be >= 1.
double ucb1_score(double mean, std::size_t pulls, std::size_t rounds,
                  double alpha);

/// Window length c*T/N rounded to the nearest integer and clamped to >= 1.
/// Throws ConfigError when there are no changepoints to divide by.
std::size_t heuristic_window(std::int64_t horizon, std::size_t num_changepoints,
                             double c);

double aggregate(Aggregation kind, double x, double y);

/// Lowest-index cold arm if any, else the argmax of `scores` (ties go to the
/// lowest index).
ArmId select_arm(std::span<const double> scores, std::span<const ArmId> cold_arms);

// -- Learning state -----------------------------------------------------------

class Ucb1State {
 public:
  explicit Ucb1State(std::size_t num_arms);

  void update(ArmId arm, double reward);

  std::size_t num_arms() const { return pulls_.size(); }
  std::size_t pulls(ArmId arm) const { return pulls_.at(arm); }
  double reward_sum(ArmId arm) const { return reward_sums_.at(arm); }
  std::size_t rounds() const { return rounds_; }
  double mean(ArmId arm) const;
  bool is_cold(ArmId arm) const { return pulls_.at(arm) == 0; }
  double score(ArmId arm, double alpha) const;

 private:
  std::vector<double> reward_sums_;
  std::vector<std::size_t> pulls_;
  std::size_t rounds_ = 0;
};

// Exponentially discounted sums and counts. Every update decays all arms by
// gamma, then credits the chosen arm with the reward and a unit count.
class DiscountedState {
 public:
  DiscountedState(std::size_t num_arms, double gamma);

  // Used by tests to start from hand-picked statistics.
  DiscountedState(std::vector<double> sums, std::vector<double> counts,
                  double gamma);

  void update(ArmId chosen, double reward);

  std::size_t num_arms() const { return counts_.size(); }
  double gamma() const { return gamma_; }
  double sum(ArmId arm) const { return sums_.at(arm); }
  double count(ArmId arm) const { return counts_.at(arm); }
  double total_count() const { return total_count_; }
  bool is_cold(ArmId arm) const { return counts_.at(arm) <= kColdCount; }

  double mean(ArmId arm) const;
  double bonus(ArmId arm, double alpha) const;
  double score(ArmId arm, double alpha) const;

 private:
  void refresh_total();

  std::vector<double> sums_;
  std::vector<double> counts_;
  double gamma_;
  double total_count_ = 0.0;
};

// One bounded FIFO of rewards per arm. Pushing to a full window evicts its
// oldest reward; other arms' windows are untouched.
class WindowState {
 public:
  WindowState(std::size_t num_arms, std::size_t tau);

  void push(ArmId chosen, double reward);

  std::size_t num_arms() const { return windows_.size(); }
  std::size_t tau() const { return tau_; }
  const std::deque<double>& window(ArmId arm) const { return windows_.at(arm); }
  std::size_t size(ArmId arm) const { return windows_.at(arm).size(); }
  std::size_t total_size() const { return total_size_; }
  bool is_cold(ArmId arm) const { return windows_.at(arm).empty(); }

  double mean(ArmId arm) const;
  double score(ArmId arm, double alpha) const;

 private:
  std::vector<std::deque<double>> windows_;
  std::vector<double> sums_;
  std::vector<std::size_t> evictions_;
  std::size_t tau_;
  std::size_t total_size_ = 0;
};

// -- Policies -----------------------------------------------------------------

class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual std::size_t num_arms() const = 0;
  virtual bool is_cold(ArmId arm) const = 0;
  // Only meaningful for warm arms.
  virtual double score(ArmId arm) const = 0;
  virtual void observe(ArmId arm, double reward) = 0;

  std::vector<ArmId> cold_arms() const;
  // Scores of every arm; cold arms report NaN.
  std::vector<double> scores() const;
  ArmId select() const;
};

class Ucb1Policy final : public Policy {
 public:
  Ucb1Policy(std::size_t num_arms, double alpha);

  std::string name() const override { return "UCB1"; }
  std::size_t num_arms() const override { return state_.num_arms(); }
  bool is_cold(ArmId arm) const override { return state_.is_cold(arm); }
  double score(ArmId arm) const override { return state_.score(arm, alpha_); }
  void observe(ArmId arm, double reward) override { state_.update(arm, reward); }

  const Ucb1State& state() const { return state_; }

 private:
  Ucb1State state_;
  double alpha_;
};

class DiscountedUcbPolicy final : public Policy {
 public:
  DiscountedUcbPolicy(std::size_t num_arms, double alpha, double gamma);

  std::string name() const override { return "D-UCB"; }
  std::size_t num_arms() const override { return state_.num_arms(); }
  bool is_cold(ArmId arm) const override { return state_.is_cold(arm); }
  double score(ArmId arm) const override { return state_.score(arm, alpha_); }
  void observe(ArmId arm, double reward) override { state_.update(arm, reward); }

  const DiscountedState& state() const { return state_; }
  double alpha() const { return alpha_; }

 private:
  DiscountedState state_;
  double alpha_;
};

class SlidingWindowUcbPolicy final : public Policy {
 public:
  SlidingWindowUcbPolicy(std::size_t num_arms, double alpha, std::size_t tau);

  std::string name() const override { return "SW-UCB"; }
  std::size_t num_arms() const override { return state_.num_arms(); }
  bool is_cold(ArmId arm) const override { return state_.is_cold(arm); }
  double score(ArmId arm) const override { return state_.score(arm, alpha_); }
  void observe(ArmId arm, double reward) override { state_.push(arm, reward); }

  const WindowState& state() const { return state_; }

 private:
  WindowState state_;
  double alpha_;
};

// Discounted (long-term) and windowed (short-term) views of the same reward
// stream, fused per arm by an aggregation function.
class DualViewUcbPolicy final : public Policy {
 public:
  DualViewUcbPolicy(std::size_t num_arms, double alpha, double gamma,
                    std::size_t tau, Aggregation aggregation);
  DualViewUcbPolicy(std::size_t num_arms, double discounted_alpha,
                    double window_alpha, double gamma, std::size_t tau,
                    Aggregation aggregation);

  std::string name() const override;
  std::size_t num_arms() const override { return discounted_.num_arms(); }
  bool is_cold(ArmId arm) const override {
    return discounted_.is_cold(arm) || windowed_.is_cold(arm);
  }
  double score(ArmId arm) const override;
  void observe(ArmId arm, double reward) override;

  // (discounted-view score, window-view score) for a warm arm.
  std::pair<double, double> view_scores(ArmId arm) const;

  const DiscountedState& discounted() const { return discounted_; }
  const WindowState& windowed() const { return windowed_; }
  Aggregation aggregation() const { return aggregation_; }

 private:
  DiscountedState discounted_;
  WindowState windowed_;
  double discounted_alpha_;
  double window_alpha_;
  Aggregation aggregation_;
};

}  // namespace driftlab
