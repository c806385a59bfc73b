#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "driftlab/errors.hpp"
#include "driftlab/ingestion.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {
namespace {

constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

std::size_t nearest(std::span<const double> p, const std::vector<double>& centroids,
                    std::size_t dims, double& best_d2) {
  const std::size_t k = centroids.size() / dims;
  std::size_t best = 0;
  best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const double d2 = squared_distance(p, {centroids.data() + c * dims, dims});
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  return best;
}

std::vector<double> plus_plus_seeds(const FeatureMatrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows;
  const std::size_t dims = points.cols;
  std::vector<double> centroids;
  centroids.reserve(k * dims);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  const auto p0 = points.row(first(rng));
  centroids.insert(centroids.end(), p0.begin(), p0.end());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), p0);
  while (centroids.size() < k * dims) {
    std::discrete_distribution<std::size_t> pick(d2.begin(), d2.end());
    const auto p = points.row(pick(rng));
    centroids.insert(centroids.end(), p.begin(), p.end());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), p));
    }
  }
  return centroids;
}

// Cluster SSE contributions under `model`, indexed by cluster.
std::vector<double> cluster_sse(const FeatureMatrix& points, const ClusterModel& model) {
  std::vector<double> out(model.k, 0.0);
  for (std::size_t i = 0; i < points.rows; ++i) {
    const auto c = model.assignments[i];
    out[c] += squared_distance(points.row(i), model.centroid(c));
  }
  return out;
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t count_distinct_points(const FeatureMatrix& points) {
  std::vector<std::size_t> idx(points.rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    const auto ra = points.row(a);
    const auto rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t distinct = idx.empty() ? 0 : 1;
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (less(idx[i - 1], idx[i])) ++distinct;
  }
  return distinct;
}

double compute_sse(const FeatureMatrix& points, const ClusterModel& model) {
  double sse = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) {
    sse += squared_distance(points.row(i), model.centroid(model.assignments[i]));
  }
  return sse;
}

ClusterModel kmeans_from(const FeatureMatrix& points, std::vector<double> centroids,
                         std::size_t max_iterations) {
  const std::size_t n = points.rows;
  const std::size_t dims = points.cols;
  if (dims == 0 || centroids.empty() || centroids.size() % dims != 0) {
    throw ConfigError("initial centroids do not match the point dimension");
  }
  ClusterModel m;
  m.k = centroids.size() / dims;
  m.dims = dims;
  m.centroids = std::move(centroids);
  m.assignments.assign(n, kUnassigned);

  std::vector<double> dist(n);
  auto assign = [&]() {
    bool changed = false;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = nearest(points.row(i), m.centroids, dims, dist[i]);
      changed |= c != m.assignments[i];
      m.assignments[i] = c;
      sse += dist[i];
    }
    m.sse_history.push_back(sse);
    m.sse = sse;
    return changed;
  };

  bool converged = false;
  while (m.iterations < max_iterations) {
    ++m.iterations;
    if (!assign()) {
      converged = true;
      break;
    }
    std::vector<double> sums(m.k * dims, 0.0);
    std::vector<std::size_t> sizes(m.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = m.assignments[i];
      ++sizes[c];
      const auto p = points.row(i);
      for (std::size_t d = 0; d < dims; ++d) sums[c * dims + d] += p[d];
    }
    std::vector<std::size_t> empty;
    for (std::size_t c = 0; c < m.k; ++c) {
      if (sizes[c] == 0) {
        empty.push_back(c);
        continue;
      }
      for (std::size_t d = 0; d < dims; ++d) {
        m.centroids[c * dims + d] = sums[c * dims + d] / static_cast<double>(sizes[c]);
      }
    }
    if (!empty.empty()) {
      // Reseed each empty centroid on the point farthest from its own centroid.
      for (std::size_t i = 0; i < n; ++i) {
        dist[i] = squared_distance(points.row(i), m.centroid(m.assignments[i]));
      }
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
      for (std::size_t j = 0; j < empty.size() && j < n; ++j) {
        const auto p = points.row(order[j]);
        std::copy(p.begin(), p.end(), m.centroids.begin() + empty[j] * dims);
      }
    }
  }
  if (!converged) assign();
  return m;
}

ClusterModel kmeans(const FeatureMatrix& points, std::size_t k,
                    const KMeansOptions& options) {
  if (points.rows == 0) throw ConfigError("k-means needs at least one point");
  if (k == 0) throw ConfigError("K must be >= 1");
  if (options.restarts == 0) throw ConfigError("k-means needs at least one restart");
  const std::size_t distinct = count_distinct_points(points);
  if (k > distinct) {
    throw ConfigError("K = " + std::to_string(k) + " exceeds the " +
                      std::to_string(distinct) + " distinct points");
  }
  ClusterModel best;
  bool have_best = false;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    Rng rng(derive_seed(options.seed, {"kmeans", std::to_string(k), std::to_string(r)}));
    auto model = kmeans_from(points, plus_plus_seeds(points, k, rng), options.max_iterations);
    if (!have_best || model.sse < best.sse) {
      best = std::move(model);
      have_best = true;
    }
  }
  return best;
}

std::vector<ElbowPoint> sse_curve(const FeatureMatrix& points,
                                  std::span<const std::size_t> k_range,
                                  const KMeansOptions& options) {
  if (k_range.empty()) throw ConfigError("K range must not be empty");
  if (!std::is_sorted(k_range.begin(), k_range.end()) ||
      std::adjacent_find(k_range.begin(), k_range.end()) != k_range.end()) {
    throw ConfigError("K range must be strictly ascending");
  }
  std::vector<ElbowPoint> curve;
  for (std::size_t k : k_range) {
    ClusterModel best = kmeans(points, k, options);
    if (!curve.empty()) {
      const ClusterModel& prev = curve.back().model;
      // Split the clusters with the largest SSE: duplicate the centroid and
      // move the copy halfway toward that cluster's farthest member.
      const auto contrib = cluster_sse(points, prev);
      std::vector<std::size_t> order(prev.k);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return contrib[a] > contrib[b]; });
      std::vector<double> warm = prev.centroids;
      for (std::size_t j = 0; j < k - prev.k; ++j) {
        const std::size_t c = order[j % prev.k];
        const auto centre = prev.centroid(c);
        std::size_t far = 0;
        double far_d2 = -1.0;
        for (std::size_t i = 0; i < points.rows; ++i) {
          if (prev.assignments[i] != c) continue;
          const double d2 = squared_distance(points.row(i), centre);
          if (d2 > far_d2) {
            far_d2 = d2;
            far = i;
          }
        }
        const auto p = points.row(far);
        for (std::size_t d = 0; d < prev.dims; ++d) {
          warm.push_back(centre[d] + 0.5 * (p[d] - centre[d]));
        }
      }
      auto warm_model = kmeans_from(points, std::move(warm), options.max_iterations);
      if (warm_model.sse < best.sse) best = std::move(warm_model);
    }
    const double sse = best.sse;
    curve.push_back({k, sse, std::move(best)});
  }
  return curve;
}

}  // namespace driftlab
