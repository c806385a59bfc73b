#include "driftlab/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "driftlab/errors.hpp"

namespace driftlab {

std::string_view to_string(Aggregation kind) {
  switch (kind) {
    case Aggregation::Mean: return "mean";
    case Aggregation::Max: return "max";
    case Aggregation::Min: return "min";
  }
  return "?";
}

Aggregation parse_aggregation(std::string_view text) {
  if (text == "mean") return Aggregation::Mean;
  if (text == "max") return Aggregation::Max;
  if (text == "min") return Aggregation::Min;
  throw ConfigError("unknown aggregation '" + std::string(text) +
                    "' (expected mean, max or min)");
}

double exploration_bonus(double total, double count, double alpha) {
  return alpha * std::sqrt(std::max(0.0, std::log(total)) / count);
}

double ucb1_score(double mean, std::size_t pulls, std::size_t rounds,
                  double alpha) {
  if (pulls == 0 || rounds == 0) {
    throw std::invalid_argument("ucb1_score: pulls and rounds must be >= 1");
  }
  return mean + exploration_bonus(static_cast<double>(rounds),
                                  static_cast<double>(pulls), alpha);
}

std::size_t heuristic_window(std::int64_t horizon, std::size_t num_changepoints,
                             double c) {
  if (num_changepoints == 0) {
    throw ConfigError(
        "window heuristic needs at least one changepoint; set tau explicitly "
        "for stationary scenarios");
  }
  if (horizon < 1 || !(c > 0.0)) {
    throw ConfigError("window heuristic needs horizon >= 1 and c > 0");
  }
  const double raw = c * static_cast<double>(horizon) /
                     static_cast<double>(num_changepoints);
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(raw)));
}

double aggregate(Aggregation kind, double x, double y) {
  switch (kind) {
    case Aggregation::Mean: return (x + y) / 2.0;
    case Aggregation::Max: return std::max(x, y);
    case Aggregation::Min: return std::min(x, y);
  }
  throw std::invalid_argument("aggregate: bad kind");
}

ArmId select_arm(std::span<const double> scores, std::span<const ArmId> cold_arms) {
  if (!cold_arms.empty()) {
    return *std::min_element(cold_arms.begin(), cold_arms.end());
  }
  if (scores.empty()) throw ConfigError("select_arm: no arms");
  ArmId best = 0;
  for (ArmId a = 1; a < scores.size(); ++a) {
    if (scores[a] > scores[best]) best = a;
  }
  return best;
}

// -- Ucb1State ----------------------------------------------------------------

Ucb1State::Ucb1State(std::size_t num_arms)
    : reward_sums_(num_arms, 0.0), pulls_(num_arms, 0) {
  if (num_arms == 0) throw ConfigError("policy needs at least one arm");
}

void Ucb1State::update(ArmId arm, double reward) {
  reward_sums_.at(arm) += reward;
  ++pulls_[arm];
  ++rounds_;
}

double Ucb1State::mean(ArmId arm) const {
  if (pulls_.at(arm) == 0) throw std::invalid_argument("mean of unpulled arm");
  return reward_sums_[arm] / static_cast<double>(pulls_[arm]);
}

double Ucb1State::score(ArmId arm, double alpha) const {
  return ucb1_score(mean(arm), pulls_[arm], rounds_, alpha);
}

// -- DiscountedState ----------------------------------------------------------

DiscountedState::DiscountedState(std::size_t num_arms, double gamma)
    : DiscountedState(std::vector<double>(num_arms, 0.0),
                      std::vector<double>(num_arms, 0.0), gamma) {}

DiscountedState::DiscountedState(std::vector<double> sums,
                                 std::vector<double> counts, double gamma)
    : sums_(std::move(sums)), counts_(std::move(counts)), gamma_(gamma) {
  if (counts_.empty()) throw ConfigError("policy needs at least one arm");
  if (sums_.size() != counts_.size()) {
    throw std::invalid_argument("sums and counts differ in length");
  }
  if (!(gamma_ > 0.0 && gamma_ <= 1.0)) {
    throw ConfigError("discount factor must lie in (0, 1]");
  }
  for (double n : counts_) {
    if (n < 0.0) throw std::invalid_argument("negative discounted count");
  }
  refresh_total();
}

void DiscountedState::update(ArmId chosen, double reward) {
  if (chosen >= counts_.size()) throw std::out_of_range("arm index");
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    sums_[j] *= gamma_;
    counts_[j] *= gamma_;
  }
  sums_[chosen] += reward;
  counts_[chosen] += 1.0;
  refresh_total();
}

void DiscountedState::refresh_total() {
  total_count_ = 0.0;
  for (double n : counts_) total_count_ += n;
}

double DiscountedState::mean(ArmId arm) const {
  if (is_cold(arm)) throw std::invalid_argument("mean of cold arm");
  return sums_[arm] / counts_[arm];
}

double DiscountedState::bonus(ArmId arm, double alpha) const {
  if (is_cold(arm)) throw std::invalid_argument("bonus of cold arm");
  return exploration_bonus(total_count_, counts_[arm], alpha);
}

double DiscountedState::score(ArmId arm, double alpha) const {
  return mean(arm) + bonus(arm, alpha);
}

// -- WindowState --------------------------------------------------------------

WindowState::WindowState(std::size_t num_arms, std::size_t tau)
    : windows_(num_arms), sums_(num_arms, 0.0), evictions_(num_arms, 0), tau_(tau) {
  if (num_arms == 0) throw ConfigError("policy needs at least one arm");
  if (tau_ == 0) throw ConfigError("window size must be >= 1");
}

void WindowState::push(ArmId chosen, double reward) {
  auto& w = windows_.at(chosen);
  if (w.size() == tau_) {
    sums_[chosen] -= w.front();
    w.pop_front();
    --total_size_;
    // The running sum picks up rounding error from subtraction; rebuild it
    // once per full turnover of the window.
    if (++evictions_[chosen] >= tau_) {
      evictions_[chosen] = 0;
      w.push_back(reward);
      ++total_size_;
      sums_[chosen] = std::accumulate(w.begin(), w.end(), 0.0);
      return;
    }
  }
  w.push_back(reward);
  sums_[chosen] += reward;
  ++total_size_;
}

double WindowState::mean(ArmId arm) const {
  if (is_cold(arm)) throw std::invalid_argument("mean of empty window");
  return sums_[arm] / static_cast<double>(windows_[arm].size());
}

double WindowState::score(ArmId arm, double alpha) const {
  return mean(arm) + exploration_bonus(static_cast<double>(total_size_),
                                       static_cast<double>(windows_[arm].size()),
                                       alpha);
}

// -- Policy -------------------------------------------------------------------

std::vector<ArmId> Policy::cold_arms() const {
  std::vector<ArmId> cold;
  for (ArmId a = 0; a < num_arms(); ++a) {
    if (is_cold(a)) cold.push_back(a);
  }
  return cold;
}

std::vector<double> Policy::scores() const {
  std::vector<double> out(num_arms(), std::numeric_limits<double>::quiet_NaN());
  for (ArmId a = 0; a < num_arms(); ++a) {
    if (!is_cold(a)) out[a] = score(a);
  }
  return out;
}

ArmId Policy::select() const {
  const std::size_t k = num_arms();
  for (ArmId a = 0; a < k; ++a) {
    if (is_cold(a)) return a;
  }
  ArmId best = 0;
  double best_score = score(0);
  for (ArmId a = 1; a < k; ++a) {
    const double s = score(a);
    if (s > best_score) {
      best = a;
      best_score = s;
    }
  }
  return best;
}

Ucb1Policy::Ucb1Policy(std::size_t num_arms, double alpha)
    : state_(num_arms), alpha_(alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
}

DiscountedUcbPolicy::DiscountedUcbPolicy(std::size_t num_arms, double alpha,
                                         double gamma)
    : state_(num_arms, gamma), alpha_(alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
}

SlidingWindowUcbPolicy::SlidingWindowUcbPolicy(std::size_t num_arms, double alpha,
                                               std::size_t tau)
    : state_(num_arms, tau), alpha_(alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
}

DualViewUcbPolicy::DualViewUcbPolicy(std::size_t num_arms, double alpha,
                                     double gamma, std::size_t tau,
                                     Aggregation aggregation)
    : DualViewUcbPolicy(num_arms, alpha, alpha, gamma, tau, aggregation) {}

DualViewUcbPolicy::DualViewUcbPolicy(std::size_t num_arms, double discounted_alpha,
                                     double window_alpha, double gamma,
                                     std::size_t tau, Aggregation aggregation)
    : discounted_(num_arms, gamma),
      windowed_(num_arms, tau),
      discounted_alpha_(discounted_alpha),
      window_alpha_(window_alpha),
      aggregation_(aggregation) {
  if (!(discounted_alpha >= 0.0 && window_alpha >= 0.0)) {
    throw ConfigError("alpha must be >= 0");
  }
}

std::string DualViewUcbPolicy::name() const {
  return "FDSW-UCB(" + std::string(to_string(aggregation_)) + ")";
}

std::pair<double, double> DualViewUcbPolicy::view_scores(ArmId arm) const {
  return {discounted_.score(arm, discounted_alpha_),
          windowed_.score(arm, window_alpha_)};
}

double DualViewUcbPolicy::score(ArmId arm) const {
  const auto [long_term, short_term] = view_scores(arm);
  return aggregate(aggregation_, long_term, short_term);
}

void DualViewUcbPolicy::observe(ArmId arm, double reward) {
  discounted_.update(arm, reward);
  windowed_.push(arm, reward);
}

}  // namespace driftlab
