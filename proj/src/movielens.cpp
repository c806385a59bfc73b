#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "driftlab/errors.hpp"
#include "driftlab/ingestion.hpp"

namespace driftlab {
namespace {

std::vector<std::string_view> split_on(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      return fields;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool valid_age_code(int code) {
  static constexpr int kCodes[] = {1, 18, 25, 35, 45, 50, 56};
  return std::find(std::begin(kCodes), std::end(kCodes), code) != std::end(kCodes);
}

void check_malformed_rate(std::size_t bad, std::size_t total, const std::string& name) {
  if (total > 0 && static_cast<double>(bad) > 0.01 * static_cast<double>(total)) {
    throw ParseError(name + ": " + std::to_string(bad) + " of " + std::to_string(total) +
                     " lines are malformed; is this the right file?");
  }
}

}  // namespace

MovieLensData parse_movielens(std::istream& users, std::istream& ratings,
                              const std::string& users_name,
                              const std::string& ratings_name) {
  MovieLensData data;
  std::unordered_set<std::int64_t> known;
  std::string line;
  std::size_t total = 0;

  while (std::getline(users, line)) {
    const auto text = trim_cr(line);
    if (text.empty()) continue;
    ++total;
    const auto f = split_on(text, "::");
    UserRecord u;
    const bool ok = f.size() == 5 && parse_int(f[0], u.user_id) &&
                    (f[1] == "M" || f[1] == "F") && parse_int(f[2], u.age_code) &&
                    valid_age_code(u.age_code) && parse_int(f[3], u.occupation_code) &&
                    u.occupation_code >= 0 && u.occupation_code < kOccupationCodes;
    if (!ok || !known.insert(u.user_id).second) {
      ++data.malformed_user_lines;
      continue;
    }
    u.gender = f[1][0];
    data.users.push_back(u);
  }
  if (users.bad()) throw IoError(users_name + ": read failure");
  check_malformed_rate(data.malformed_user_lines, total, users_name);

  total = 0;
  while (std::getline(ratings, line)) {
    const auto text = trim_cr(line);
    if (text.empty()) continue;
    ++total;
    const auto f = split_on(text, "::");
    RatingRecord r;
    std::int64_t timestamp = 0;
    const bool ok = f.size() == 4 && parse_int(f[0], r.user_id) &&
                    parse_int(f[1], r.item_id) && parse_int(f[2], r.rating) &&
                    r.rating >= 1 && r.rating <= 5 && parse_int(f[3], timestamp);
    if (!ok) {
      ++data.malformed_rating_lines;
      continue;
    }
    if (!known.contains(r.user_id)) {
      ++data.orphan_ratings;
      continue;
    }
    data.ratings.push_back(r);
  }
  if (ratings.bad()) throw IoError(ratings_name + ": read failure");
  check_malformed_rate(data.malformed_rating_lines, total, ratings_name);
  return data;
}

MovieLensData load_movielens(const std::string& users_path,
                             const std::string& ratings_path) {
  std::ifstream users(users_path);
  if (!users) throw IoError("cannot open " + users_path);
  std::ifstream ratings(ratings_path);
  if (!ratings) throw IoError("cannot open " + ratings_path);
  return parse_movielens(users, ratings, users_path, ratings_path);
}

FeatureMatrix encode_features(std::span<const UserRecord> users) {
  if (users.empty()) throw ConfigError("cannot encode an empty user set");
  FeatureMatrix m;
  m.rows = users.size();
  m.cols = 2 + kOccupationCodes;
  m.columns = {"age_std", "gender_m"};
  for (int c = 0; c < kOccupationCodes; ++c) {
    m.columns.push_back("occupation_" + std::to_string(c));
  }

  double mean = 0.0;
  for (const auto& u : users) mean += u.age_code;
  mean /= static_cast<double>(users.size());
  double var = 0.0;
  for (const auto& u : users) var += (u.age_code - mean) * (u.age_code - mean);
  var /= static_cast<double>(users.size());
  const double sd = var > 0.0 ? std::sqrt(var) : 1.0;

  m.values.assign(m.rows * m.cols, 0.0);
  for (std::size_t i = 0; i < users.size(); ++i) {
    double* row = m.values.data() + i * m.cols;
    row[0] = (users[i].age_code - mean) / sd;
    row[1] = users[i].gender == 'M' ? 1.0 : 0.0;
    row[2 + users[i].occupation_code] = 1.0;
  }
  return m;
}

ArmSet build_movielens_arms(const ClusterModel& model,
                            std::span<const UserRecord> users,
                            std::span<const RatingRecord> ratings) {
  if (model.assignments.size() != users.size()) {
    throw ConfigError("cluster assignments do not match the user table");
  }
  std::unordered_map<std::int64_t, std::size_t> cluster_of;
  for (std::size_t i = 0; i < users.size(); ++i) {
    cluster_of.emplace(users[i].user_id, model.assignments[i]);
  }
  std::vector<std::vector<double>> samples(model.k);
  for (const auto& r : ratings) {
    const auto it = cluster_of.find(r.user_id);
    if (it == cluster_of.end()) {
      throw ConfigError("rating by user " + std::to_string(r.user_id) +
                        " has no cluster assignment");
    }
    samples[it->second].push_back(static_cast<double>(r.rating));
  }

  ArmSet arms;
  arms.name = "movielens";
  arms.support = kRatingSupport;
  for (std::size_t c = 0; c < model.k; ++c) {
    if (samples[c].empty()) {
      throw ConfigError("cluster " + std::to_string(c) +
                        " has no ratings; re-run clustering with another K or seed");
    }
    arms.pools.emplace_back(std::move(samples[c]));
    arms.labels.push_back("cluster_" + std::to_string(c));
  }
  return arms;
}

}  // namespace driftlab
