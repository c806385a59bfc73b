#include "driftlab/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "driftlab/errors.hpp"

namespace fs = std::filesystem;

namespace driftlab {
namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_provenance(const Config& cfg, const fs::path& dir) {
  auto out = open_output(dir / "resolved_config.ini");
  cfg.write_resolved(out);
}

std::optional<std::size_t> optional_size(const Config& cfg, const std::string& key) {
  if (cfg.get(key) == "auto") return std::nullopt;
  const auto v = cfg.get_int(key);
  if (v < 1) throw ConfigError(key + " must be >= 1 or auto");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> k_range(const Config& cfg) {
  const auto lo = cfg.get_int("movielens.k_min");
  const auto hi = cfg.get_int("movielens.k_max");
  if (lo < 1 || hi < lo) throw ConfigError("movielens.k_min/k_max must satisfy 1 <= k_min <= k_max");
  std::vector<std::size_t> out;
  for (auto k = lo; k <= hi; ++k) out.push_back(static_cast<std::size_t>(k));
  return out;
}

KMeansOptions kmeans_options(const Config& cfg) {
  KMeansOptions o;
  o.restarts = static_cast<std::size_t>(cfg.get_int("movielens.restarts"));
  o.max_iterations = static_cast<std::size_t>(cfg.get_int("movielens.max_iterations"));
  o.seed = cfg.get_uint("movielens.seed");
  return o;
}

bool has_movielens_files(const Config& cfg) {
  const bool users = !cfg.get("movielens.users").empty();
  const bool ratings = !cfg.get("movielens.ratings").empty();
  if (users != ratings) {
    throw ConfigError("movielens.users and movielens.ratings must be set together");
  }
  return users;
}

MovieLensData read_movielens(const Config& cfg, std::ostream& log) {
  auto data = load_movielens(cfg.get("movielens.users"), cfg.get("movielens.ratings"));
  log << "movielens: " << data.users.size() << " users, " << data.ratings.size()
      << " ratings; malformed user lines " << data.malformed_user_lines
      << ", malformed rating lines " << data.malformed_rating_lines << ", orphan ratings "
      << data.orphan_ratings << '\n';
  return data;
}

std::string csv_double(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing " + path.filename().string() + " in " +
                         path.parent_path().string() + "; run `driftlab run` first");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(split_line(line));
  }
  if (rows.empty()) throw IoError(path.string() + " is empty");
  return rows;
}

// Display width of UTF-8 text (counts code points).
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width) {
  const auto w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

}  // namespace

std::shared_ptr<const ArmSet> load_movielens_arms(const Config& cfg, std::ostream& log) {
  if (!has_movielens_files(cfg)) {
    const auto pool = static_cast<std::size_t>(cfg.get_int("movielens.pool_size"));
    log << "movielens: no rating files configured, using the synthetic 9-arm ratings pools\n";
    return std::make_shared<const ArmSet>(
        movielens_like_arms(cfg.get_uint("experiment.base_seed"), pool));
  }
  const auto data = read_movielens(cfg, log);
  const auto features = encode_features(data.users);
  const auto k = static_cast<std::size_t>(cfg.get_int("movielens.k"));
  const auto model = kmeans(features, k, kmeans_options(cfg));
  return std::make_shared<const ArmSet>(build_movielens_arms(model, data.users, data.ratings));
}

std::shared_ptr<const ArmSet> load_obd_arms(const Config& cfg, std::ostream& log) {
  const auto& path = cfg.get("obd.path");
  if (path.empty()) {
    const auto pool = static_cast<std::size_t>(cfg.get_int("obd.pool_size"));
    log << "obd: no click log configured, using the synthetic 80-arm Bernoulli pools\n";
    return std::make_shared<const ArmSet>(obd_like_arms(cfg.get_uint("experiment.base_seed"), pool));
  }
  ObdOptions o;
  o.item_column = cfg.get("obd.item_column");
  o.click_column = cfg.get("obd.click_column");
  o.expected_items = optional_size(cfg, "obd.expected_items");
  o.strict = cfg.get_bool("obd.strict");
  auto parsed = load_obd(path, o);
  for (const auto& w : parsed.warnings) log << "warning: " << w << '\n';
  return std::make_shared<const ArmSet>(std::move(parsed.arms));
}

std::vector<ScenarioConfig> configured_scenarios(const Config& cfg, std::ostream& log) {
  MatrixOptions m;
  m.scale = cfg.get_double("experiment.scale");
  m.horizon = cfg.get_int("experiment.horizon");
  m.abrupt_changepoints = cfg.get_int_list("experiment.abrupt_changepoints");
  m.gradual_starts = cfg.get_int_list("experiment.gradual_starts");
  m.gradual_duration = cfg.get_int("experiment.gradual_duration");
  const auto runs = cfg.get_int("experiment.runs");
  if (runs < 1) throw ConfigError("experiment.runs must be >= 1");
  m.runs = static_cast<std::size_t>(runs);
  m.base_seed = cfg.get_uint("experiment.base_seed");
  m.record_stride = cfg.get_int("experiment.record_stride");

  const auto& window = cfg.get("experiment.stationary_window");
  if (window != "abrupt" && window != "horizon") {
    throw ConfigError("experiment.stationary_window must be 'abrupt' or 'horizon'");
  }
  m.stationary_window_from_abrupt = window == "abrupt";

  m.dynamics.clear();
  for (const auto& d : cfg.get_list("experiment.dynamics")) m.dynamics.push_back(parse_dynamics(d));

  PolicySpec defaults;
  defaults.alpha = cfg.get_double("policies.alpha");
  defaults.gamma = cfg.get_double("policies.gamma");
  defaults.c = cfg.get_double("policies.c");
  defaults.tau = optional_size(cfg, "policies.tau");
  if (cfg.get("policies.window_alpha") != "auto") {
    defaults.window_alpha = cfg.get_double("policies.window_alpha");
  }
  m.policies.clear();
  for (const auto& token : cfg.get_list("policies.list")) {
    m.policies.push_back(parse_policy(token, defaults));
  }

  m.datasets = cfg.get_list("experiment.datasets");
  for (const auto& name : m.datasets) {
    if (name == "movielens") {
      m.movielens = load_movielens_arms(cfg, log);
    } else if (name == "obd") {
      m.obd = load_obd_arms(cfg, log);
    }
  }
  auto scenarios = scenario_matrix(m);
  for (const auto& s : scenarios) s.validate();
  return scenarios;
}

void cmd_cluster(const Config& cfg, const fs::path& out_dir, std::ostream& log) {
  if (!has_movielens_files(cfg)) {
    throw ConfigError("cluster needs movielens.users and movielens.ratings");
  }
  const auto data = read_movielens(cfg, log);
  const auto features = encode_features(data.users);
  const auto range = k_range(cfg);
  const auto options = kmeans_options(cfg);
  const auto chosen = static_cast<std::size_t>(cfg.get_int("movielens.k"));

  prepare_dir(out_dir);
  write_provenance(cfg, out_dir);

  const auto curve = sse_curve(features, range, options);
  {
    auto out = open_output(out_dir / "elbow.csv");
    out << "k,sse\n";
    for (const auto& p : curve) out << p.k << ',' << csv_double(p.sse) << '\n';
  }

  const auto it = std::find_if(curve.begin(), curve.end(),
                               [&](const ElbowPoint& p) { return p.k == chosen; });
  const ClusterModel model = it != curve.end() ? it->model : kmeans(features, chosen, options);
  {
    auto out = open_output(out_dir / "assignments.csv");
    out << "user_id,cluster\n";
    for (std::size_t i = 0; i < data.users.size(); ++i) {
      out << data.users[i].user_id << ',' << model.assignments[i] << '\n';
    }
  }
  const auto arms = build_movielens_arms(model, data.users, data.ratings);
  auto out = open_output(out_dir / "arms.csv");
  write_arm_metadata(out, arms);
  log << "clustered " << data.users.size() << " users into " << model.k
      << " arms (SSE " << csv_double(model.sse) << ")\n";
}

bool cmd_validate_drift(const Config& cfg, const fs::path& out_dir, std::ostream& log) {
  const auto scenarios = configured_scenarios(cfg, log);
  const auto stride = cfg.get_int("drift.export_stride");
  prepare_dir(out_dir);
  write_provenance(cfg, out_dir);

  bool ok = true;
  for (const auto& s : scenarios) {
    const Environment env = make_environment(s, s.base_seed);
    const auto rows = export_mean_trajectories(env, stride);
    auto out = open_output(out_dir / ("drift_" + s.name + ".csv"));
    write_mean_trajectories(out, rows);

    const auto violations = validate_drift(env);
    for (const auto& v : violations) {
      log << s.name << ": t=" << v.t << " arm=" << v.arm << ": " << v.what << '\n';
    }
    log << s.name << ": " << (violations.empty() ? "ok" : "FAILED") << " ("
        << env.schedule().size() << " drift events)\n";
    ok = ok && violations.empty();
  }
  return ok;
}

MatrixResult cmd_run(const Config& cfg, const fs::path& out_dir, std::ostream& log) {
  auto scenarios = configured_scenarios(cfg, log);
  prepare_dir(out_dir);
  write_provenance(cfg, out_dir);

  MatrixRunOptions options;
  const auto threads = cfg.get_int("experiment.threads");
  options.threads = static_cast<std::size_t>(std::max<std::int64_t>(1, threads));
  options.keep_trajectories = cfg.get_bool("experiment.save_trajectories");

  std::size_t episodes = 0;
  for (const auto& s : scenarios) episodes += s.policies.size() * s.num_runs;
  log << "running " << scenarios.size() << " scenarios, " << episodes << " episodes\n";

  auto result = run_matrix(std::move(scenarios), options);

  {
    auto out = open_output(out_dir / "curves.csv");
    write_curves(out, result.summaries);
  }
  {
    auto out = open_output(out_dir / "summary.csv");
    write_summary(out, result);
  }
  {
    auto out = open_output(out_dir / "seeds.csv");
    write_seeds(out, result.seeds);
  }
  std::vector<std::string> written;
  for (const auto& s : result.scenarios) {
    if (std::find(written.begin(), written.end(), s.arms->name) != written.end()) continue;
    written.push_back(s.arms->name);
    auto out = open_output(out_dir / ("arms_" + s.arms->name + ".csv"));
    write_arm_metadata(out, *s.arms);
  }
  if (options.keep_trajectories) {
    prepare_dir(out_dir / "trajectories");
    for (std::size_t i = 0; i < result.seeds.size(); ++i) {
      const auto& sr = result.seeds[i];
      auto out = open_output(out_dir / "trajectories" /
                             (sr.scenario + "__" + sr.policy + "__run" + std::to_string(sr.run) + ".csv"));
      write_trajectory(out, result.trajectories[i]);
    }
  }
  for (const auto& sr : result.seeds) {
    log << "seed " << sr.scenario << ' ' << sr.policy << " run " << sr.run << ' ' << sr.seed << '\n';
  }
  return result;
}

void cmd_report(const fs::path& run_dir, std::ostream& out) {
  const auto summary = read_csv(run_dir / "summary.csv");
  const auto curves = read_csv(run_dir / "curves.csv");

  const auto& header = summary.front();
  if (header.size() < 5 || header[0] != "dataset" || header[1] != "policy") {
    throw ParseError((run_dir / "summary.csv").string() + ": unexpected header");
  }
  std::map<std::string, std::vector<const std::vector<std::string>*>> by_dataset;
  std::vector<std::string> datasets;
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& row = summary[i];
    if (row.size() < 5) throw ParseError((run_dir / "summary.csv").string() + ": short row");
    if (!by_dataset.contains(row[0])) datasets.push_back(row[0]);
    by_dataset[row[0]].push_back(&row);
  }

  std::string table;
  for (const auto& ds : datasets) {
    std::vector<std::vector<std::string>> cells{{"Algorithm", "Stationary", "Abrupt", "Gradual"}};
    for (const auto* row : by_dataset[ds]) cells.push_back({(*row)[1], (*row)[2], (*row)[3], (*row)[4]});
    std::vector<std::size_t> widths(4, 0);
    for (const auto& r : cells) {
      for (std::size_t c = 0; c < 4; ++c) widths[c] = std::max(widths[c], display_width(r[c]));
    }
    table += "Final cumulative regret (" + ds + ")\n";
    for (const auto& r : cells) {
      std::string line;
      for (std::size_t c = 0; c < 4; ++c) line += pad(r[c], widths[c] + 2);
      while (!line.empty() && line.back() == ' ') line.pop_back();
      table += line + '\n';
    }
    table += '\n';
  }
  out << table;
  {
    auto file = open_output(run_dir / "report.txt");
    file << table;
  }

  // Plot series: one file per scenario, one mean/std column pair per policy.
  const auto& ch = curves.front();
  if (ch.size() != 5 || ch[0] != "scenario") {
    throw ParseError((run_dir / "curves.csv").string() + ": unexpected header");
  }
  std::vector<std::string> scenarios;
  std::map<std::string, std::vector<std::string>> policies;
  std::map<std::string, std::map<std::string, std::map<long long, std::pair<std::string, std::string>>>> series;
  for (std::size_t i = 1; i < curves.size(); ++i) {
    const auto& r = curves[i];
    if (r.size() != 5) throw ParseError((run_dir / "curves.csv").string() + ": malformed row");
    if (!policies.contains(r[0])) scenarios.push_back(r[0]);
    auto& pols = policies[r[0]];
    if (std::find(pols.begin(), pols.end(), r[1]) == pols.end()) pols.push_back(r[1]);
    series[r[0]][r[1]][std::stoll(r[2])] = {r[3], r[4]};
  }
  for (const auto& sc : scenarios) {
    auto file = open_output(run_dir / ("plot_" + sc + ".csv"));
    file << 't';
    for (const auto& p : policies[sc]) file << ',' << p << ',' << p << "_std";
    file << '\n';
    const auto& first = series[sc][policies[sc].front()];
    for (const auto& [t, unused] : first) {
      file << t;
      for (const auto& p : policies[sc]) {
        const auto& s = series[sc][p];
        const auto it = s.find(t);
        if (it == s.end()) {
          file << ",,";
        } else {
          file << ',' << it->second.first << ',' << it->second.second;
        }
      }
      file << '\n';
    }
  }
}

int run_command(const std::string& command, const std::string& config_path,
                const std::vector<std::string>& overrides, const fs::path& out_dir,
                std::ostream& out, std::ostream& err) {
  try {
    if (command == "report") {
      cmd_report(out_dir, out);
      return kExitOk;
    }
    const Config cfg = Config::load(config_path, overrides);
    if (command == "cluster") {
      cmd_cluster(cfg, out_dir, err);
      return kExitOk;
    }
    if (command == "validate-drift") {
      return cmd_validate_drift(cfg, out_dir, err) ? kExitOk : kExitInvalid;
    }
    if (command == "run") {
      cmd_run(cfg, out_dir, err);
      return kExitOk;
    }
    err << "unknown command '" << command << "'\n";
    return kExitInvalid;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const InvariantError& e) {
    err << "invariant violated: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace driftlab
