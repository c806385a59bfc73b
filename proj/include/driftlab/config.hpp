#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace driftlab {

// Sectioned key/value configuration ("section.key"). Values come from built-in
// defaults, then an INI file, then command-line overrides; each key remembers
// which layer set it. Keys outside the built-in table are rejected.
class Config {
 public:
  enum class Source { Default, File, Override };

  Config();

  static Config load(const std::string& path, const std::vector<std::string>& overrides);

  void merge_file(const std::string& path);
  void merge_ini(std::istream& in, const std::string& name);
  // "section.key=value"
  void apply_override(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;

  Source source(const std::string& key) const;

  // Every key with its resolved value and the layer it came from.
  void write_resolved(std::ostream& out) const;

 private:
  void set(const std::string& key, const std::string& value, Source source);

  std::map<std::string, std::string> values_;
  std::map<std::string, Source> sources_;
};

}  // namespace driftlab
