#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <sstream>

#include "driftlab/commands.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/experiment.hpp"

namespace py = pybind11;
using namespace driftlab;

namespace {

std::shared_ptr<const ArmSet> share(const ArmSet& arms) { return std::make_shared<const ArmSet>(arms); }

FeatureMatrix to_features(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix f;
  f.rows = rows.size();
  f.cols = rows.empty() ? 0 : rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != f.cols) throw ConfigError("all points need the same dimension");
    f.values.insert(f.values.end(), r.begin(), r.end());
  }
  return f;
}

}  // namespace

PYBIND11_MODULE(_driftlab, m) {
  m.doc() = "UCB1, D-UCB, SW-UCB and FDSW-UCB on drifting reward-pool environments";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  // Scoring primitives.
  m.def("ucb1_score", &ucb1_score, py::arg("mean"), py::arg("pulls"), py::arg("rounds"),
        py::arg("alpha"));
  m.def("exploration_bonus", &exploration_bonus, py::arg("total"), py::arg("count"),
        py::arg("alpha"));
  m.def("heuristic_window", &heuristic_window, py::arg("horizon"), py::arg("num_changepoints"),
        py::arg("c") = 1.0);
  py::enum_<Aggregation>(m, "Aggregation")
      .value("Mean", Aggregation::Mean)
      .value("Max", Aggregation::Max)
      .value("Min", Aggregation::Min);
  m.def("aggregate", &aggregate, py::arg("kind"), py::arg("x"), py::arg("y"));

  py::class_<DiscountedState>(m, "DiscountedState")
      .def(py::init<std::size_t, double>(), py::arg("num_arms"), py::arg("gamma"))
      .def(py::init<std::vector<double>, std::vector<double>, double>(), py::arg("sums"),
           py::arg("counts"), py::arg("gamma"))
      .def("update", &DiscountedState::update, py::arg("arm"), py::arg("reward"))
      .def("sum", &DiscountedState::sum)
      .def("count", &DiscountedState::count)
      .def_property_readonly("total_count", &DiscountedState::total_count)
      .def("score", &DiscountedState::score, py::arg("arm"), py::arg("alpha"));

  py::class_<WindowState>(m, "WindowState")
      .def(py::init<std::size_t, std::size_t>(), py::arg("num_arms"), py::arg("tau"))
      .def("push", &WindowState::push, py::arg("arm"), py::arg("reward"))
      .def("window", [](const WindowState& w, ArmId a) {
        return std::vector<double>(w.window(a).begin(), w.window(a).end());
      })
      .def_property_readonly("total_size", &WindowState::total_size)
      .def("score", &WindowState::score, py::arg("arm"), py::arg("alpha"));

  // Policies share one select/observe interface.
  py::class_<Policy>(m, "Policy")
      .def_property_readonly("name", &Policy::name)
      .def_property_readonly("num_arms", &Policy::num_arms)
      .def("select", &Policy::select)
      .def("observe", &Policy::observe, py::arg("arm"), py::arg("reward"))
      .def("scores", &Policy::scores)
      .def("is_cold", &Policy::is_cold);
  py::class_<Ucb1Policy, Policy>(m, "Ucb1")
      .def(py::init<std::size_t, double>(), py::arg("num_arms"), py::arg("alpha") = 1.0);
  py::class_<DiscountedUcbPolicy, Policy>(m, "DiscountedUcb")
      .def(py::init<std::size_t, double, double>(), py::arg("num_arms"), py::arg("alpha") = 1.0,
           py::arg("gamma") = 0.999);
  py::class_<SlidingWindowUcbPolicy, Policy>(m, "SlidingWindowUcb")
      .def(py::init<std::size_t, double, std::size_t>(), py::arg("num_arms"),
           py::arg("alpha") = 1.0, py::arg("tau"));
  py::class_<DualViewUcbPolicy, Policy>(m, "DualViewUcb")
      .def(py::init<std::size_t, double, double, std::size_t, Aggregation>(), py::arg("num_arms"),
           py::arg("alpha") = 1.0, py::arg("gamma") = 0.999, py::arg("tau"),
           py::arg("aggregation") = Aggregation::Mean)
      .def("view_scores", &DualViewUcbPolicy::view_scores, py::arg("arm"));

  // Environments.
  py::enum_<Dynamics>(m, "Dynamics")
      .value("Stationary", Dynamics::Stationary)
      .value("Abrupt", Dynamics::Abrupt)
      .value("Gradual", Dynamics::Gradual);
  m.def("gradual_lambda", &gradual_lambda, py::arg("t"), py::arg("start"), py::arg("duration"));

  py::class_<ArmSet, std::shared_ptr<ArmSet>>(m, "ArmSet")
      .def_readonly("name", &ArmSet::name)
      .def_readonly("labels", &ArmSet::labels)
      .def_property_readonly("means", [](const ArmSet& a) {
        std::vector<double> out;
        for (const auto& p : a.pools) out.push_back(p.mean());
        return out;
      })
      .def_property_readonly("pool_sizes", [](const ArmSet& a) {
        std::vector<std::size_t> out;
        for (const auto& p : a.pools) out.push_back(p.size());
        return out;
      })
      .def("__len__", [](const ArmSet& a) { return a.pools.size(); });

  m.def("synth_arms",
        [](const std::vector<double>& means, const std::string& kind, std::size_t pool_size,
           std::uint64_t seed, const std::string& name) {
          SupportKind k;
          if (kind == "bernoulli") {
            k = SupportKind::Bernoulli;
          } else if (kind == "ratings") {
            k = SupportKind::Ratings;
          } else {
            throw ConfigError("kind must be 'bernoulli' or 'ratings'");
          }
          return std::make_shared<ArmSet>(synth_arms(means, k, pool_size, seed, name));
        },
        py::arg("means"), py::arg("kind") = "bernoulli", py::arg("pool_size") = 1000,
        py::arg("seed") = 0, py::arg("name") = "synthetic");
  m.def("movielens_like_arms",
        [](std::uint64_t seed, std::size_t pool) {
          return std::make_shared<ArmSet>(movielens_like_arms(seed, pool));
        },
        py::arg("seed") = 20240101, py::arg("pool_size") = 2000);
  m.def("obd_like_arms",
        [](std::uint64_t seed, std::size_t pool) {
          return std::make_shared<ArmSet>(obd_like_arms(seed, pool));
        },
        py::arg("seed") = 20240101, py::arg("pool_size") = 20000);

  py::class_<Environment>(m, "Environment")
      .def(py::init([](const ArmSet& arms, Dynamics dynamics, std::vector<std::int64_t> starts,
                       std::int64_t duration, std::int64_t horizon, std::uint64_t seed) {
             return Environment(arms.pools, make_schedule(dynamics, starts, duration),
                                arms.support, horizon, seed);
           }),
           py::arg("arms"), py::arg("dynamics") = Dynamics::Stationary,
           py::arg("changepoints") = std::vector<std::int64_t>{}, py::arg("duration") = 0,
           py::arg("horizon"), py::arg("seed") = 0)
      .def_property_readonly("num_arms", &Environment::num_arms)
      .def_property_readonly("horizon", &Environment::horizon)
      .def("true_mean", &Environment::true_mean_at, py::arg("arm"), py::arg("t"))
      .def("true_means", &Environment::true_means_at, py::arg("t"))
      .def("oracle", [](const Environment& e, std::int64_t t) {
        const auto o = e.oracle(t);
        return py::make_tuple(o.best_mean, o.best_arm);
      })
      .def("sample", &Environment::sample_reward, py::arg("arm"), py::arg("t"))
      .def("drift_violations", [](const Environment& e) { return validate_drift(e).size(); });

  // K-Means.
  m.def("kmeans",
        [](const std::vector<std::vector<double>>& points, std::size_t k, std::size_t restarts,
           std::uint64_t seed) {
          const auto model = kmeans(to_features(points), k, {restarts, 300, seed});
          py::dict out;
          out["sse"] = model.sse;
          out["assignments"] = model.assignments;
          std::vector<std::vector<double>> cents;
          for (std::size_t c = 0; c < model.k; ++c) {
            cents.emplace_back(model.centroid(c).begin(), model.centroid(c).end());
          }
          out["centroids"] = cents;
          out["sse_history"] = model.sse_history;
          return out;
        },
        py::arg("points"), py::arg("k"), py::arg("restarts") = 10, py::arg("seed") = 0);
  m.def("sse_curve",
        [](const std::vector<std::vector<double>>& points, const std::vector<std::size_t>& ks,
           std::size_t restarts, std::uint64_t seed) {
          std::vector<std::pair<std::size_t, double>> out;
          for (const auto& p : sse_curve(to_features(points), ks, {restarts, 300, seed})) {
            out.emplace_back(p.k, p.sse);
          }
          return out;
        },
        py::arg("points"), py::arg("k_range"), py::arg("restarts") = 10, py::arg("seed") = 0);

  // Experiments.
  py::class_<PolicySpec>(m, "PolicySpec")
      .def(py::init([](const std::string& token, double alpha, double gamma,
                       std::optional<std::size_t> tau, double c) {
             PolicySpec d;
             d.alpha = alpha;
             d.gamma = gamma;
             d.tau = tau;
             d.c = c;
             return parse_policy(token, d);
           }),
           py::arg("token"), py::arg("alpha") = 1.0, py::arg("gamma") = 0.999,
           py::arg("tau") = py::none(), py::arg("c") = 1.0)
      .def_property_readonly("label", &PolicySpec::label)
      .def_readwrite("alpha", &PolicySpec::alpha)
      .def_readwrite("gamma", &PolicySpec::gamma)
      .def_readwrite("tau", &PolicySpec::tau);

  py::class_<ScenarioConfig>(m, "Scenario")
      .def(py::init([](const std::string& name, const ArmSet& arms, Dynamics dynamics,
                       std::int64_t horizon, std::vector<std::int64_t> changepoints,
                       std::int64_t duration, std::vector<PolicySpec> policies,
                       std::size_t runs, std::uint64_t seed, std::int64_t stride,
                       std::optional<std::size_t> stationary_tau) {
             ScenarioConfig s;
             s.name = name;
             s.arms = share(arms);
             s.dynamics = dynamics;
             s.horizon = horizon;
             s.changepoints = std::move(changepoints);
             s.gradual_duration = duration;
             s.policies = std::move(policies);
             s.num_runs = runs;
             s.base_seed = seed;
             s.record_stride = stride;
             s.stationary_tau = stationary_tau;
             s.validate();
             return s;
           }),
           py::arg("name"), py::arg("arms"), py::arg("dynamics") = Dynamics::Stationary,
           py::arg("horizon") = 10000, py::arg("changepoints") = std::vector<std::int64_t>{},
           py::arg("gradual_duration") = 1000, py::arg("policies") = default_policies(),
           py::arg("runs") = 3, py::arg("base_seed") = 20240101, py::arg("record_stride") = 100,
           py::arg("stationary_tau") = py::none())
      .def_readonly("name", &ScenarioConfig::name)
      .def_readonly("horizon", &ScenarioConfig::horizon)
      .def_readonly("changepoints", &ScenarioConfig::changepoints)
      .def_readonly("policies", &ScenarioConfig::policies)
      .def_readonly("num_runs", &ScenarioConfig::num_runs);

  m.def("scenario_matrix",
        [](double scale, std::size_t runs, std::uint64_t seed) {
          MatrixOptions o;
          o.scale = scale;
          o.runs = runs;
          o.base_seed = seed;
          o.movielens = std::make_shared<const ArmSet>(movielens_like_arms(seed));
          o.obd = std::make_shared<const ArmSet>(obd_like_arms(seed));
          return scenario_matrix(o);
        },
        py::arg("scale") = 0.1, py::arg("runs") = 3, py::arg("base_seed") = 20240101);

  m.def("run_episode",
        [](const ScenarioConfig& s, const PolicySpec& p, std::size_t run) {
          const auto traj = run_episode(s, p, run, {.keep_choices = true, .keep_step_regret = true});
          py::dict out;
          out["seed"] = traj.seed;
          out["choices"] = traj.choices;
          out["step_regret"] = traj.step_regrets;
          out["final_regret"] = traj.final_regret;
          std::vector<std::int64_t> t;
          std::vector<double> cum;
          for (const auto& r : traj.rows) {
            t.push_back(r.t);
            cum.push_back(r.cumulative_regret);
          }
          out["t"] = t;
          out["cumulative_regret"] = cum;
          return out;
        },
        py::arg("scenario"), py::arg("policy"), py::arg("run") = 0);

  m.def("run_scenario",
        [](const ScenarioConfig& s) {
          const auto result = run_matrix({s});
          py::dict out;
          for (const auto& sum : result.summaries) {
            py::dict row;
            row["t"] = sum.t;
            row["mean"] = sum.mean;
            row["std"] = sum.stddev;
            row["final_regrets"] = sum.final_regrets;
            row["final_mean"] = sum.final_mean;
            row["final_std"] = sum.final_std;
            out[py::str(sum.policy)] = row;
          }
          return out;
        },
        py::arg("scenario"));

  m.def("run_command",
        [](const std::string& command, const std::string& config,
           const std::vector<std::string>& overrides, const std::string& out_dir) {
          std::ostringstream out, err;
          const int code = run_command(command, config, overrides, out_dir, out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("command"), py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{},
        py::arg("out_dir"));
}
