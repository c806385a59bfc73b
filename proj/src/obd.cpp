#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "driftlab/errors.hpp"
#include "driftlab/ingestion.hpp"

namespace driftlab {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::string& source) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError(source + ": missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

ObdArms parse_obd(std::istream& source, const ObdOptions& options,
                  const std::string& source_name) {
  std::string line;
  if (!std::getline(source, line)) throw ParseError(source_name + ": empty file");
  std::vector<std::string> header;
  for (auto& h : split_csv(line)) header.push_back(strip(h));
  const auto item_col = column_index(header, options.item_column, source_name);
  const auto click_col = column_index(header, options.click_column, source_name);

  std::map<std::int64_t, std::vector<double>> clicks;
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto f = split_csv(line);
    const std::string where = source_name + ":" + std::to_string(line_no);
    if (f.size() <= std::max(item_col, click_col)) {
      throw ParseError(where + ": too few columns");
    }
    const auto item_text = strip(f[item_col]);
    std::int64_t item = 0;
    auto [ptr, ec] = std::from_chars(item_text.data(), item_text.data() + item_text.size(), item);
    if (ec != std::errc() || ptr != item_text.data() + item_text.size()) {
      throw ParseError(where + ": bad item id '" + item_text + "'");
    }
    const auto click = strip(f[click_col]);
    if (click != "0" && click != "1") {
      throw ParseError(where + ": click value '" + click + "' is not 0 or 1");
    }
    clicks[item].push_back(click == "1" ? 1.0 : 0.0);
  }
  if (source.bad()) throw IoError(source_name + ": read failure");

  ObdArms out;
  out.arms.name = "obd";
  out.arms.support = kBernoulliSupport;
  for (auto& [item, values] : clicks) {
    out.item_ids.push_back(item);
    out.arms.labels.push_back("item_" + std::to_string(item));
    out.arms.pools.emplace_back(std::move(values));
  }
  if (options.expected_items && out.item_ids.size() != *options.expected_items) {
    const std::string msg = source_name + ": found " + std::to_string(out.item_ids.size()) +
                            " items, expected " + std::to_string(*options.expected_items);
    if (options.strict) throw ParseError(msg);
    out.warnings.push_back(msg);
  }
  if (out.arms.pools.empty()) throw ParseError(source_name + ": no click records");
  return out;
}

ObdArms load_obd(const std::string& path, const ObdOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_obd(in, options, path);
}

void write_arm_metadata(std::ostream& out, const ArmSet& arms) {
  out << "arm_id,source,pool_size,pool_mean\n";
  char buf[64];
  for (std::size_t a = 0; a < arms.pools.size(); ++a) {
    std::snprintf(buf, sizeof buf, "%.10g", arms.pools[a].mean());
    const std::string label = a < arms.labels.size() ? arms.labels[a] : arms.name;
    out << a << ',' << label << ',' << arms.pools[a].size() << ',' << buf << '\n';
  }
}

}  // namespace driftlab
