#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftlab/environment.hpp"

namespace driftlab {

// -- MovieLens-style logs -------------------------------------------------------

struct UserRecord {
  std::int64_t user_id = 0;
  char gender = 'M';  // 'M' or 'F'
  int age_code = 0;
  int occupation_code = 0;
};

struct RatingRecord {
  std::int64_t user_id = 0;
  std::int64_t item_id = 0;
  int rating = 0;
};

struct MovieLensData {
  std::vector<UserRecord> users;
  std::vector<RatingRecord> ratings;
  std::size_t malformed_user_lines = 0;
  std::size_t malformed_rating_lines = 0;
  std::size_t orphan_ratings = 0;  // ratings whose user is not in the user table
};

// Parses "::"-delimited users (UserID::Gender::Age::Occupation::Zip) and
// ratings (UserID::MovieID::Rating::Timestamp). Malformed lines are counted;
// more than 1% malformed in either source raises ParseError.
MovieLensData parse_movielens(std::istream& users, std::istream& ratings,
                              const std::string& users_name = "users",
                              const std::string& ratings_name = "ratings");

MovieLensData load_movielens(const std::string& users_path,
                             const std::string& ratings_path);

// -- Feature encoding ---------------------------------------------------------

inline constexpr int kOccupationCodes = 21;  // MovieLens-1M codes 0..20

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;        // row-major
  std::vector<std::string> columns;  // column names, in order

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
};

// Column 0: standardised age code; column 1: gender (F=0, M=1);
// columns 2..22: one-hot occupation.
FeatureMatrix encode_features(std::span<const UserRecord> users);

// -- K-Means --------------------------------------------------------------------

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
  std::uint64_t seed = 0;
};

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dims = 0;
  std::vector<double> centroids;         // k x dims, row-major
  std::vector<std::size_t> assignments;  // per point
  double sse = 0.0;
  std::vector<double> sse_history;       // after each assignment step of the kept run
  std::size_t iterations = 0;

  std::span<const double> centroid(std::size_t c) const {
    return {centroids.data() + c * dims, dims};
  }
};

std::size_t count_distinct_points(const FeatureMatrix& points);

double squared_distance(std::span<const double> a, std::span<const double> b);

// Sum of squared distances from each point to its assigned centroid.
double compute_sse(const FeatureMatrix& points, const ClusterModel& model);

// Lloyd's algorithm from k-means++ seeds, best of `restarts` by SSE.
ClusterModel kmeans(const FeatureMatrix& points, std::size_t k,
                    const KMeansOptions& options = {});

// Lloyd iterations from explicit initial centroids (k x dims, row-major).
ClusterModel kmeans_from(const FeatureMatrix& points, std::vector<double> centroids,
                         std::size_t max_iterations);

struct ElbowPoint {
  std::size_t k;
  double sse;
  ClusterModel model;
};

// Best SSE for each K in the ascending range. Every K also tries the previous
// K's centroids plus duplicated-and-perturbed copies of its worst clusters,
// which makes the curve non-increasing.
std::vector<ElbowPoint> sse_curve(const FeatureMatrix& points,
                                  std::span<const std::size_t> k_range,
                                  const KMeansOptions& options = {});

// -- Arm construction -----------------------------------------------------------

struct ArmSet {
  std::string name;
  std::vector<RewardPool> pools;
  std::vector<std::string> labels;  // provenance per arm
  RewardSupport support;
};

// One pool per cluster holding every rating by that cluster's users.
// `users[i]` must correspond to `model.assignments[i]`.
ArmSet build_movielens_arms(const ClusterModel& model,
                            std::span<const UserRecord> users,
                            std::span<const RatingRecord> ratings);

struct ObdOptions {
  std::string item_column = "item_id";
  std::string click_column = "click";
  std::optional<std::size_t> expected_items = 80;
  bool strict = false;  // item count mismatch is an error instead of a warning
};

struct ObdArms {
  ArmSet arms;
  std::vector<std::int64_t> item_ids;  // arm index -> item id (ascending)
  std::vector<std::string> warnings;
};

// Comma-separated click log with a header row. One Bernoulli pool per item;
// arms are ordered by ascending item id.
ObdArms parse_obd(std::istream& source, const ObdOptions& options = {},
                  const std::string& source_name = "obd");

ObdArms load_obd(const std::string& path, const ObdOptions& options = {});

enum class SupportKind { Ratings, Bernoulli };

// Pools whose empirical means hit `target_means` to within 1/(2*pool_size).
// Bernoulli pools hold exactly round(mean*size) ones. Rating pools are drawn
// from the maximum-entropy distribution on {1..5} with the target mean, then
// nudged by single steps until the sum is exact.
ArmSet synth_arms(std::span<const double> target_means, SupportKind kind,
                  std::size_t pool_size, std::uint64_t seed,
                  const std::string& name = "synthetic");

void write_arm_metadata(std::ostream& out, const ArmSet& arms);

}  // namespace driftlab
