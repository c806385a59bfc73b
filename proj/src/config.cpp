#include "driftlab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <sstream>

#include "driftlab/errors.hpp"

namespace driftlab {
namespace {

struct KeyDefault {
  const char* key;
  const char* value;
};

// Every recognised key and its built-in default.
constexpr KeyDefault kDefaults[] = {
    {"experiment.scale", "0.1"},
    {"experiment.horizon", "100000"},
    {"experiment.abrupt_changepoints", "30000,45000,60000,90000"},
    {"experiment.gradual_starts", "30000,60000"},
    {"experiment.gradual_duration", "10000"},
    {"experiment.runs", "3"},
    {"experiment.base_seed", "20240101"},
    {"experiment.record_stride", "100"},
    {"experiment.datasets", "movielens,obd"},
    {"experiment.dynamics", "stationary,abrupt,gradual"},
    {"experiment.threads", "1"},
    {"experiment.save_trajectories", "false"},
    {"experiment.stationary_window", "abrupt"},
    {"policies.list", "ucb1,ducb,swucb,fdsw-min,fdsw-mean,fdsw-max"},
    {"policies.alpha", "1.0"},
    {"policies.gamma", "0.999"},
    {"policies.c", "1.0"},
    {"policies.tau", "auto"},
    {"policies.window_alpha", "auto"},
    {"movielens.users", ""},
    {"movielens.ratings", ""},
    {"movielens.k", "9"},
    {"movielens.k_min", "2"},
    {"movielens.k_max", "15"},
    {"movielens.restarts", "10"},
    {"movielens.max_iterations", "300"},
    {"movielens.seed", "7"},
    {"movielens.pool_size", "2000"},
    {"obd.path", ""},
    {"obd.item_column", "item_id"},
    {"obd.click_column", "click"},
    {"obd.expected_items", "80"},
    {"obd.strict", "false"},
    {"obd.pool_size", "20000"},
    {"drift.export_stride", "100"},
};

const char* source_name(Config::Source s) {
  switch (s) {
    case Config::Source::Default: return "default";
    case Config::Source::File: return "file";
    case Config::Source::Override: return "override";
  }
  return "?";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config::Config() {
  for (const auto& d : kDefaults) set(d.key, d.value, Source::Default);
}

Config Config::load(const std::string& path, const std::vector<std::string>& overrides) {
  Config cfg;
  if (!path.empty()) cfg.merge_file(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

void Config::set(const std::string& key, const std::string& value, Source source) {
  if (source != Source::Default && !values_.contains(key)) {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
  values_[key] = trim(value);
  sources_[key] = source;
}

void Config::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  merge_ini(in, path);
}

void Config::merge_ini(std::istream& in, const std::string& name) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(name + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      if (!body.data().empty()) {
        throw ConfigError(name + ": key '" + section + "' is outside any section");
      }
      continue;
    }
    for (const auto& [key, value] : body) {
      set(section + "." + key, value.data(), Source::File);
    }
  }
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1), Source::Override);
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

std::int64_t Config::get_int(const std::string& key) const {
  const auto& v = get(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": '" + v + "' is not an integer");
  }
  return out;
}

std::uint64_t Config::get_uint(const std::string& key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
  }
  return out;
}

double Config::get_double(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": '" + v + "' is not a number");
}

bool Config::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::int64_t> Config::get_int_list(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& item : get_list(key)) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError(key + ": '" + item + "' is not an integer");
    }
    out.push_back(v);
  }
  return out;
}

Config::Source Config::source(const std::string& key) const {
  get(key);
  return sources_.at(key);
}

void Config::write_resolved(std::ostream& out) const {
  std::string current;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const auto section = key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << "; " << source_name(sources_.at(key)) << '\n';
    out << key.substr(dot + 1) << " = " << value << '\n';
  }
}

}  // namespace driftlab
