#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "driftlab/errors.hpp"
#include "driftlab/ingestion.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {
namespace {

// p_k proportional to exp(theta * k) on k = 1..5 with the given mean.
std::array<double, 5> max_entropy_ratings(double mean) {
  auto weights = [](double theta) {
    std::array<double, 5> w{};
    for (int k = 0; k < 5; ++k) w[k] = std::exp(theta * (k - 2));
    const double z = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= z;
    return w;
  };
  auto mean_of = [](const std::array<double, 5>& w) {
    double m = 0.0;
    for (int k = 0; k < 5; ++k) m += w[k] * (k + 1);
    return m;
  };
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mean_of(weights(mid)) < mean ? lo : hi) = mid;
  }
  return weights(0.5 * (lo + hi));
}

std::vector<double> rating_pool(double mean, std::size_t size, long long target_sum, Rng& rng) {
  std::vector<double> values(size);
  const auto probs = max_entropy_ratings(mean);
  std::discrete_distribution<int> draw(probs.begin(), probs.end());
  long long sum = 0;
  for (auto& v : values) {
    v = draw(rng) + 1;
    sum += static_cast<long long>(v);
  }
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  while (sum != target_sum) {
    std::shuffle(order.begin(), order.end(), rng);
    const double step = sum < target_sum ? 1.0 : -1.0;
    for (auto i : order) {
      if (sum == target_sum) break;
      const double next = values[i] + step;
      if (next < 1.0 || next > 5.0) continue;
      values[i] = next;
      sum += static_cast<long long>(step);
    }
  }
  return values;
}

}  // namespace

ArmSet synth_arms(std::span<const double> target_means, SupportKind kind,
                  std::size_t pool_size, std::uint64_t seed, const std::string& name) {
  if (target_means.empty()) throw ConfigError("synthetic environment needs at least one arm");
  if (pool_size == 0) throw ConfigError("pool size must be >= 1");
  const RewardSupport support = kind == SupportKind::Bernoulli ? kBernoulliSupport
                                                               : kRatingSupport;
  ArmSet arms;
  arms.name = name;
  arms.support = support;
  const double n = static_cast<double>(pool_size);
  for (std::size_t a = 0; a < target_means.size(); ++a) {
    const double m = target_means[a];
    if (!support.contains(m)) {
      throw ConfigError("target mean " + std::to_string(m) + " lies outside the support");
    }
    const long long total = std::llround(m * n);
    if (std::abs(static_cast<double>(total) / n - m) >= 0.5 / n - 1e-12) {
      throw ConfigError("target mean " + std::to_string(m) +
                        " is not reachable with pool size " + std::to_string(pool_size));
    }
    Rng rng(derive_seed(seed, {"synth", name, std::to_string(a)}));
    std::vector<double> values;
    if (kind == SupportKind::Bernoulli) {
      values.assign(pool_size, 0.0);
      std::fill_n(values.begin(), total, 1.0);
      std::shuffle(values.begin(), values.end(), rng);
    } else {
      values = rating_pool(m, pool_size, total, rng);
    }
    arms.pools.emplace_back(std::move(values));
    arms.labels.push_back(name + "_" + std::to_string(a));
  }
  return arms;
}

}  // namespace driftlab
