#pragma once

// Command-line front end: list-models, simulate, cost, optimize, verify and
// validate. Flags override fields of an optional JSON config. Every run emits
//   {tool_version, resolved_config, seed, result, execution, timestamp}
// where only execution (thread count) and timestamp may differ between runs
// with the same seed.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mkv/diagnostics.hpp"
#include "mkv/error.hpp"
#include "mkv/json_io.hpp"
#include "mkv/model_json.hpp"
#include "mkv/model_zoo.hpp"
#include "mkv/objective.hpp"
#include "mkv/simulate.hpp"
#include "mkv/verify.hpp"

namespace mkv::cli {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeError = 3 };

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {"stability",      "moment", "tightness", "continuity",
                                                 "law_invariance", "chaos",  "flow",      "dpp",
                                                 "counterexample"};
  return names;
}

struct Experiment {
  std::string subcommand;
  json resolved = json::object();
  std::optional<ModelSpec> model;
  TimeGrid grid;
  std::size_t particles = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::optional<InitialLaw> init;
  std::optional<FeedbackPolicy> policy;
  std::optional<PolicyFamily> family;
  OptimizerConfig optimizer;
  json check = json::object();
  std::optional<InitialLaw> init_tilde;
  std::vector<std::pair<double, InitialLaw>> perturbations;
  std::string output, csv, binary;
};

// Parses a JSON file, reporting the line of a syntax error.
inline std::optional<json> load_json_file(const std::string& file, const std::string& field, cfg::Diagnostics& diag) {
  std::ifstream in(file);
  if (!in) {
    diag.error(field, "cannot read file '" + file + "'");
    return std::nullopt;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    diag.error(field, file + ":" + std::to_string(cfg::line_of(text, e.byte)) + ": " + e.what());
  }
  return std::nullopt;
}

// Objects are used as-is; strings are inline JSON when they start with '{',
// otherwise a file path.
inline std::optional<json> load_reference(const json& value, const std::string& field, cfg::Diagnostics& diag) {
  if (value.is_object()) return value;
  if (!value.is_string()) {
    diag.error(field, "expected an object, inline JSON or a file path");
    return std::nullopt;
  }
  const std::string s = value.get<std::string>();
  if (!s.empty() && s.front() == '{') {
    try {
      return json::parse(s);
    } catch (const json::parse_error& e) {
      diag.error(field, std::string("inline JSON: ") + e.what());
      return std::nullopt;
    }
  }
  return load_json_file(s, field, diag);
}

inline std::optional<ModelSpec> builtin_with_dim(const std::string& name, std::optional<std::size_t> dim) {
  const std::size_t d = dim.value_or(1);
  if (name == "UNCONTROLLED_GAUSSIAN") return zoo::uncontrolled_gaussian(d);
  if (name == "MEANFIELD_OU") return zoo::meanfield_ou(d);
  if (name == "LINEAR_RESTORING") return zoo::linear_restoring(d);
  if (dim && *dim != 1) return std::nullopt;
  return find_builtin(name);
}

namespace detail {

inline void resolve_check(const json& j, Experiment& ex, cfg::Diagnostics& diag) {
  const std::string path = "check";
  if (!cfg::expect_object(j, path, diag)) return;
  if (!j.contains("name") || !j["name"].is_string()) {
    diag.error(path, "missing check name (one of stability, moment, tightness, continuity, law_invariance, chaos, "
                     "flow, dpp, counterexample)");
    return;
  }
  const std::string name = j["name"].get<std::string>();
  json out = {{"name", name}};
  const std::size_t d = ex.model ? ex.model->state_dim : 1;
  auto number_or = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    return cfg::number(j[key], cfg::join(path, key), diag).value_or(fallback);
  };

  if (name == "stability") {
    cfg::reject_unknown(j, {"name", "init_tilde"}, path, diag);
    if (!j.contains("init_tilde")) diag.error(path, "stability needs 'init_tilde'");
    else if (auto ref = load_reference(j["init_tilde"], cfg::join(path, "init_tilde"), diag))
      if ((ex.init_tilde = io::init_from_json(*ref, d, cfg::join(path, "init_tilde"), diag)))
        out["init_tilde"] = io::to_json(*ex.init_tilde);
  } else if (name == "moment" || name == "tightness") {
    cfg::reject_unknown(j, {"name"}, path, diag);
  } else if (name == "continuity") {
    cfg::reject_unknown(j, {"name", "perturbations", "c_max"}, path, diag);
    out["c_max"] = number_or("c_max", 10.0);
    json rows = json::array();
    if (!j.contains("perturbations") || !j["perturbations"].is_array() || j["perturbations"].empty()) {
      diag.error(cfg::join(path, "perturbations"), "expected a non-empty list of {s, init}");
    } else {
      for (std::size_t i = 0; i < j["perturbations"].size(); ++i) {
        const auto& p = j["perturbations"][i];
        const std::string pp = cfg::index(cfg::join(path, "perturbations"), i);
        if (!cfg::expect_object(p, pp, diag)) continue;
        cfg::reject_unknown(p, {"s", "init"}, pp, diag);
        const double s1 = p.contains("s") ? cfg::number(p["s"], cfg::join(pp, "s"), diag).value_or(0.0) : ex.grid.start;
        if (!(s1 >= 0.0 && s1 < ex.grid.end)) diag.error(cfg::join(pp, "s"), "0 ≤ s < T");
        std::optional<InitialLaw> law = ex.init;
        if (p.contains("init"))
          if (auto ref = load_reference(p["init"], cfg::join(pp, "init"), diag))
            law = io::init_from_json(*ref, d, cfg::join(pp, "init"), diag);
        if (law) {
          rows.push_back({{"s", s1}, {"init", io::to_json(*law)}});
          ex.perturbations.emplace_back(s1, std::move(*law));
        }
      }
    }
    out["perturbations"] = rows;
  } else if (name == "law_invariance") {
    cfg::reject_unknown(j, {"name", "seeds"}, path, diag);
    std::vector<std::uint64_t> seeds = {ex.seed, ex.seed + 1};
    if (j.contains("seeds")) {
      if (!j["seeds"].is_array() || j["seeds"].size() != 2) diag.error(cfg::join(path, "seeds"), "expected two seeds");
      else
        for (std::size_t i = 0; i < 2; ++i)
          if (auto v = cfg::unsigned_integer(j["seeds"][i], cfg::index(cfg::join(path, "seeds"), i), diag)) seeds[i] = *v;
    }
    if (seeds[0] == seeds[1]) diag.error(cfg::join(path, "seeds"), "the two seeds must differ");
    if (ex.init && !ex.init->as_measure()) diag.error("init", "law_invariance needs a dirac or empirical initial law");
    out["seeds"] = seeds;
  } else if (name == "chaos") {
    cfg::reject_unknown(j, {"name", "schedule", "replicates"}, path, diag);
    std::vector<std::size_t> schedule = {250, 500, 1000, 2000};
    if (j.contains("schedule")) {
      schedule.clear();
      if (!j["schedule"].is_array()) diag.error(cfg::join(path, "schedule"), "expected a list of particle counts");
      else
        for (std::size_t i = 0; i < j["schedule"].size(); ++i)
          if (auto v = cfg::unsigned_integer(j["schedule"][i], cfg::index(cfg::join(path, "schedule"), i), diag))
            schedule.push_back(*v);
    }
    if (schedule.size() < 3) diag.error(cfg::join(path, "schedule"), "schedule needs at least 3 entries");
    for (std::size_t i = 0; i + 1 < schedule.size(); ++i)
      if (schedule[i + 1] <= schedule[i]) diag.error(cfg::join(path, "schedule"), "schedule must be increasing");
    for (std::size_t n : schedule)
      if (n < 2) diag.error(cfg::join(path, "schedule"), "particle counts ≥ 2");
    std::size_t reps = kCalibrationReplicates;
    if (j.contains("replicates"))
      if (auto v = cfg::unsigned_integer(j["replicates"], cfg::join(path, "replicates"), diag)) reps = *v;
    if (reps == 0) diag.error(cfg::join(path, "replicates"), "replicates ≥ 1");
    out["schedule"] = schedule;
    out["replicates"] = reps;
  } else if (name == "flow" || name == "dpp") {
    if (name == "flow") cfg::reject_unknown(j, {"name", "t_mid"}, path, diag);
    else cfg::reject_unknown(j, {"name", "t_mid", "inner", "max_simulations"}, path, diag);
    if (!j.contains("t_mid")) diag.error(path, name + " needs 't_mid'");
    const double t_mid = number_or("t_mid", ex.grid.start);
    if (name == "flow" && !(t_mid >= ex.grid.start && t_mid < ex.grid.end))
      diag.error(cfg::join(path, "t_mid"), "s ≤ t_mid < T");
    if (name == "dpp" && !(t_mid > ex.grid.start && t_mid < ex.grid.end))
      diag.error(cfg::join(path, "t_mid"), "s < t_mid < T");
    out["t_mid"] = t_mid;
    if (name == "dpp") {
      OptimizerConfig inner_default;
      inner_default.generations = 10;
      inner_default.population = 8;
      const OptimizerConfig inner = io::optimizer_from_json(j.value("inner", json()), rng::derive_seed(ex.seed, 60),
                                                            cfg::join(path, "inner"), diag, inner_default);
      out["inner"] = io::to_json(inner);
      std::uint64_t budget = DppConfig{}.max_simulations;
      if (j.contains("max_simulations"))
        if (auto v = cfg::unsigned_integer(j["max_simulations"], cfg::join(path, "max_simulations"), diag)) budget = *v;
      out["max_simulations"] = budget;
    }
  } else if (name == "counterexample") {
    cfg::reject_unknown(j, {"name", "step_sizes", "x0", "T_end"}, path, diag);
    std::vector<double> steps = {0.1, 0.01, 0.001};
    if (j.contains("step_sizes"))
      if (auto v = cfg::vector(j["step_sizes"], cfg::join(path, "step_sizes"), diag)) steps = *v;
    for (double h : steps)
      if (!(h > 0.0)) diag.error(cfg::join(path, "step_sizes"), "step sizes > 0");
    const double t_end = number_or("T_end", 1.0);
    if (!(t_end > 0.0)) diag.error(cfg::join(path, "T_end"), "T_end > 0");
    out["step_sizes"] = steps;
    out["x0"] = number_or("x0", 0.0);
    out["T_end"] = t_end;
  } else {
    diag.error(cfg::join(path, "name"), "unknown check '" + name + "'");
  }
  ex.check = std::move(out);
}

}  // namespace detail

// Validates doc and builds everything a run needs. Violations accumulate in diag.
inline Experiment resolve(const json& doc, cfg::Diagnostics& diag, const char* env_threads = nullptr) {
  Experiment ex;
  if (!doc.is_object()) {
    diag.error("", "config must be a JSON object");
    return ex;
  }
  cfg::reject_unknown(doc,
                      {"subcommand", "model", "dim", "policy", "family", "init", "grid", "particles", "seed", "threads",
                       "output", "csv", "binary", "optimizer", "check"},
                      "", diag);

  if (!doc.contains("subcommand")) diag.error("subcommand", "missing (simulate, cost, optimize, verify)");
  else if (auto s = cfg::string(doc["subcommand"], "subcommand", diag)) {
    ex.subcommand = *s;
    if (*s != "simulate" && *s != "cost" && *s != "optimize" && *s != "verify" && *s != "list-models")
      diag.error("subcommand", "unknown subcommand '" + *s + "'");
  }
  const bool is_verify = ex.subcommand == "verify";
  const std::string check_name =
      doc.contains("check") && doc["check"].is_object() && doc["check"].contains("name") && doc["check"]["name"].is_string()
          ? doc["check"]["name"].get<std::string>()
          : "";
  if (is_verify && !doc.contains("check")) diag.error("check", "verify needs a check (use --check NAME)");
  const bool needs_model = ex.subcommand != "list-models" && !(is_verify && check_name == "counterexample");
  json& echo = ex.resolved;
  echo["subcommand"] = ex.subcommand;

  if (doc.contains("particles"))
    if (auto v = cfg::unsigned_integer(doc["particles"], "particles", diag)) ex.particles = *v;
  if (ex.particles < 2) diag.error("particles", "particles ≥ 2");
  if (doc.contains("seed"))
    if (auto v = cfg::unsigned_integer(doc["seed"], "seed", diag)) ex.seed = *v;

  if (doc.contains("threads")) {
    if (auto v = cfg::unsigned_integer(doc["threads"], "threads", diag)) ex.threads = *v;
  } else if (env_threads && *env_threads) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env_threads, &end, 10);
    if (*end != '\0') diag.error("MKV_THREADS", "expected a positive integer");
    else ex.threads = v;
  }
  if (ex.threads < 1) diag.error("threads", "threads ≥ 1");

  std::optional<std::size_t> dim;
  if (doc.contains("dim"))
    if (auto v = cfg::unsigned_integer(doc["dim"], "dim", diag)) {
      if (*v < 1) diag.error("dim", "dim ≥ 1");
      else dim = *v;
    }

  if (doc.contains("model")) {
    const json& ref = doc["model"];
    if (ref.is_string() && builtin_with_dim(ref.get<std::string>(), std::nullopt)) {
      ex.model = builtin_with_dim(ref.get<std::string>(), dim);
      if (!ex.model) diag.error("dim", "model " + ref.get<std::string>() + " has a fixed dimension of 1");
      echo["model"] = ref;
    } else if (ref.is_string() && !ref.get<std::string>().empty() && ref.get<std::string>().front() != '{' &&
               ref.get<std::string>().find('.') == std::string::npos &&
               ref.get<std::string>().find('/') == std::string::npos) {
      diag.error("model", "unknown builtin model '" + ref.get<std::string>() + "'");
    } else if (auto j = load_reference(ref, "model", diag)) {
      ex.model = model_from_json(*j, diag, "model");
      if (dim && ex.model && ex.model->state_dim != *dim) diag.error("dim", "does not match the model's state_dim");
      echo["model"] = *j;
    }
    if (dim) echo["dim"] = *dim;
  } else if (needs_model) {
    diag.error("model", "missing (builtin name or JSON model file)");
  }

  // Grid.
  const double horizon = ex.model ? ex.model->horizon : 1.0;
  ex.grid = TimeGrid{0.0, horizon, 100};
  if (doc.contains("grid") && cfg::expect_object(doc["grid"], "grid", diag)) {
    const json& g = doc["grid"];
    cfg::reject_unknown(g, {"s", "T", "steps"}, "grid", diag);
    if (g.contains("s")) ex.grid.start = cfg::number(g["s"], "grid.s", diag).value_or(ex.grid.start);
    if (g.contains("T")) ex.grid.end = cfg::number(g["T"], "grid.T", diag).value_or(ex.grid.end);
    if (g.contains("steps"))
      if (auto v = cfg::unsigned_integer(g["steps"], "grid.steps", diag)) ex.grid.steps = *v;
  }
  if (ex.grid.steps < 1) diag.error("grid.steps", "steps ≥ 1");
  if (!(ex.grid.start >= 0.0 && ex.grid.start < ex.grid.end)) diag.error("grid", "0 ≤ s < T");
  if (ex.model && ex.grid.end > ex.model->horizon * (1.0 + 1e-12))
    diag.error("grid.T", "T ≤ model horizon (" + std::to_string(ex.model->horizon) + ")");
  echo["grid"] = {{"s", ex.grid.start}, {"T", ex.grid.end}, {"steps", ex.grid.steps}};
  echo["particles"] = ex.particles;
  echo["seed"] = ex.seed;

  if (ex.model) {
    const ModelSpec& m = *ex.model;
    if (doc.contains("init")) {
      if (auto ref = load_reference(doc["init"], "init", diag)) ex.init = io::init_from_json(*ref, m.state_dim, "init", diag);
    } else {
      ex.init = InitialLaw::dirac(std::vector<double>(m.state_dim, 0.0));
    }
    if (ex.init) echo["init"] = io::to_json(*ex.init);

    if (doc.contains("policy")) {
      if (auto ref = load_reference(doc["policy"], "policy", diag))
        ex.policy = io::policy_from_json(*ref, m, 0.0, m.horizon, "policy", diag);
    } else {
      ex.policy = constant_policy(ControlMeasure::dirac(m.control_box, m.control_box.center()), m.horizon);
    }
    if (ex.policy) {
      if (ex.grid.end > ex.grid.start && (!ex.policy->covers(ex.grid.start) || !ex.policy->covers(ex.grid.end)))
        diag.error("policy", "policy time domain does not cover [s, T]");
      echo["policy"] = io::to_json(*ex.policy);
    }

    if (ex.grid.end > ex.grid.start) {
      json fam;
      if (doc.contains("family")) {
        if (auto ref = load_reference(doc["family"], "family", diag)) fam = *ref;
      }
      ex.family = io::family_from_json(fam, m, ex.grid.start, ex.grid.end, "family", diag);
      if (ex.family) echo["family"] = io::to_json(*ex.family);
    }
  }

  ex.optimizer = io::optimizer_from_json(doc.value("optimizer", json()), ex.seed, "optimizer", diag);
  echo["optimizer"] = io::to_json(ex.optimizer);

  if (is_verify && doc.contains("check")) {
    detail::resolve_check(doc["check"], ex, diag);
    echo["check"] = ex.check;
  }

  auto path_field = [&](const char* key, std::string& slot) {
    if (!doc.contains(key)) return;
    if (auto s = cfg::string(doc[key], key, diag)) slot = *s;
  };
  path_field("output", ex.output);
  path_field("csv", ex.csv);
  path_field("binary", ex.binary);
  if ((!ex.csv.empty() || !ex.binary.empty()) && ex.subcommand != "simulate")
    diag.error("csv", "path exports are only produced by simulate");
  echo["output"] = ex.output;
  if (ex.subcommand == "simulate") {
    echo["csv"] = ex.csv;
    echo["binary"] = ex.binary;
  }
  return ex;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline CheckReport run_check(const Experiment& ex) {
  const std::string name = ex.check.at("name").get<std::string>();
  const SimulationOptions opts{ex.threads};
  if (name == "counterexample")
    return check_counterexample(ex.check.at("step_sizes").get<std::vector<double>>(), ex.check.at("x0").get<double>(),
                                ex.check.at("T_end").get<double>());
  const ModelSpec& m = *ex.model;
  const double s = ex.grid.start;
  if (name == "stability")
    return check_stability(m, *ex.policy, s, *ex.init, *ex.init_tilde, ex.grid, ex.particles, ex.seed, opts);
  if (name == "moment") return check_moment(m, *ex.policy, s, *ex.init, ex.grid, ex.particles, ex.seed, opts);
  if (name == "tightness") {
    const PathBundle b = simulate_ensemble(m, *ex.policy, ex.grid, *ex.init, ex.particles, ex.seed, opts);
    return check_tightness_modulus(b, m);
  }
  if (name == "continuity") {
    OptimizerConfig oc = ex.optimizer;
    oc.threads = ex.threads;
    return check_value_continuity(m, *ex.family, {s, *ex.init}, ex.perturbations, ex.grid, ex.particles, oc,
                                  ex.check.at("c_max").get<double>());
  }
  if (name == "law_invariance") {
    const auto seeds = ex.check.at("seeds").get<std::vector<std::uint64_t>>();
    return check_law_invariance(m, *ex.policy, s, *ex.init->as_measure(), ex.grid, ex.particles, {seeds[0], seeds[1]},
                                opts);
  }
  if (name == "chaos")
    return check_chaos_convergence(m, *ex.policy, s, *ex.init, ex.grid,
                                   ex.check.at("schedule").get<std::vector<std::size_t>>(), ex.seed, opts,
                                   ex.check.at("replicates").get<std::size_t>());
  if (name == "flow")
    return check_flow_property(m, *ex.policy, s, ex.check.at("t_mid").get<double>(), *ex.init, ex.grid, ex.particles,
                               ex.seed, opts);
  if (name == "dpp") {
    DppConfig dc;
    dc.outer = ex.optimizer;
    dc.outer.threads = ex.threads;
    const json& in = ex.check.at("inner");
    dc.inner.generations = in.at("generations").get<std::size_t>();
    dc.inner.population = in.at("population").get<std::size_t>();
    dc.inner.elite_frac = in.at("elite_frac").get<double>();
    dc.inner.init_spread = in.at("init_spread").get<double>();
    dc.inner.seed = in.at("seed").get<std::uint64_t>();
    dc.max_simulations = ex.check.at("max_simulations").get<std::size_t>();
    return check_dpp(m, *ex.family, s, ex.check.at("t_mid").get<double>(), *ex.init, ex.grid, ex.particles, dc);
  }
  throw ConfigError("unknown check '" + name + "'");
}

// Runs a resolved experiment; returns the result object and the exit code.
inline std::pair<json, int> execute(const Experiment& ex) {
  const SimulationOptions opts{ex.threads};
  if (ex.subcommand == "simulate") {
    const PathBundle b = simulate_ensemble(*ex.model, *ex.policy, ex.grid, *ex.init, ex.particles, ex.seed, opts);
    if (!ex.csv.empty()) {
      std::ofstream out(ex.csv);
      if (!out) throw ConfigError("csv: cannot write '" + ex.csv + "'");
      io::write_csv(b, out);
    }
    if (!ex.binary.empty()) {
      std::ofstream out(ex.binary, std::ios::binary);
      if (!out) throw ConfigError("binary: cannot write '" + ex.binary + "'");
      io::write_binary(b, out);
    }
    const EmpiricalMeasure terminal = b.terminal_law();
    double second = 0.0;
    for (std::size_t p = 0; p < b.particles; ++p) {
      const double r = mkv::detail::norm(b.state(p, b.grid.steps));
      second += r * r;
    }
    return {{{"particles", b.particles},
             {"steps", b.grid.steps},
             {"dim", b.dim},
             {"seed", b.seed},
             {"stream_scheme", PathBundle::stream_scheme()},
             {"terminal_mean", std::vector<double>(terminal.mean().begin(), terminal.mean().end())},
             {"terminal_second_moment", second / static_cast<double>(b.particles)}},
            kOk};
  }
  if (ex.subcommand == "cost")
    return {io::to_json(estimate_cost(*ex.model, *ex.policy, ex.grid.start, *ex.init, ex.grid, ex.particles, ex.seed,
                                      opts)),
            kOk};
  if (ex.subcommand == "optimize") {
    OptimizerConfig oc = ex.optimizer;
    oc.threads = ex.threads;
    return {io::to_json(optimize_policy(*ex.model, *ex.family, ex.grid.start, *ex.init, ex.grid, ex.particles, oc)),
            kOk};
  }
  if (ex.subcommand == "verify") {
    const CheckReport r = run_check(ex);
    return {to_json(r), r.passed ? kOk : kCheckFailed};
  }
  throw ConfigError("nothing to execute for subcommand '" + ex.subcommand + "'");
}

struct Flags {
  std::string config, model, policy, family, init, out, csv, binary, check;
  double s = 0.0, T = 0.0;
  std::uint64_t steps = 0, particles = 0, seed = 0, threads = 0, dim = 0;
};

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Particle experiments for controlled McKean-Vlasov dynamics"};
  app.name("mkv");
  app.require_subcommand(1);
  Flags f;
  std::string validate_path;
  std::vector<CLI::App*> runners;
  struct Opts {
    CLI::Option *config, *model, *policy, *family, *init, *s, *T, *steps, *particles, *seed, *threads, *out, *csv,
        *binary, *check, *dim;
  };
  std::vector<Opts> opts;

  auto add_runner = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    Opts o{};
    o.config = sub->add_option("--config", f.config, "JSON config file; flags override its fields");
    o.model = sub->add_option("--model", f.model, "builtin model name or JSON model file");
    o.dim = sub->add_option("--dim", f.dim, "state dimension for dimension-generic builtins");
    o.policy = sub->add_option("--policy", f.policy, "policy JSON file or inline JSON");
    o.family = sub->add_option("--family", f.family, "policy family JSON file or inline JSON");
    o.init = sub->add_option("--init", f.init, "initial law JSON file or inline JSON");
    o.s = sub->add_option("--s", f.s, "start time");
    o.T = sub->add_option("--T", f.T, "end time");
    o.steps = sub->add_option("--steps", f.steps, "time steps");
    o.particles = sub->add_option("--particles", f.particles, "particle count");
    o.seed = sub->add_option("--seed", f.seed, "random seed");
    o.threads = sub->add_option("--threads", f.threads, "worker threads (default: MKV_THREADS or 1)");
    o.out = sub->add_option("--out", f.out, "result JSON path (default: stdout)");
    o.csv = sub->add_option("--csv", f.csv, "path CSV export (simulate)");
    o.binary = sub->add_option("--binary", f.binary, "path binary export (simulate)");
    o.check = sub->add_option("--check", f.check, "check name (verify)");
    runners.push_back(sub);
    opts.push_back(o);
  };
  CLI::App* list = app.add_subcommand("list-models", "print the builtin models");
  std::string list_out;
  list->add_option("--out", list_out, "also write the catalog as JSON");
  add_runner("simulate", "simulate a particle ensemble");
  add_runner("cost", "estimate J(s, mu; F) for a fixed policy");
  add_runner("optimize", "search a policy family for the lowest cost");
  add_runner("verify", "run a numerical check");
  CLI::App* validate = app.add_subcommand("validate", "check a config file without running it");
  validate->add_option("config", validate_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  if (list->parsed()) {
    json catalog = json::array();
    for (const auto& m : builtin_models()) {
      out << m.name << "\t" << m.description << "\n";
      catalog.push_back({{"name", m.name}, {"description", m.description}, {"state_dim", m.state_dim},
                         {"control_dim", m.control_dim}, {"horizon", m.horizon}});
    }
    if (!list_out.empty()) {
      std::ofstream file(list_out);
      if (!file) {
        err << "cannot write '" << list_out << "'\n";
        return kConfigError;
      }
      file << json{{"tool_version", kToolVersion}, {"models", catalog}}.dump(2) << "\n";
    }
    return kOk;
  }

  const char* env_threads = std::getenv("MKV_THREADS");
  if (validate->parsed()) {
    cfg::Diagnostics diag;
    if (auto doc = load_json_file(validate_path, "config", diag)) (void)resolve(*doc, diag, env_threads);
    if (diag.ok()) {
      out << "OK\n";
      return kOk;
    }
    for (const auto& m : diag.messages()) err << m << "\n";
    return kConfigError;
  }

  std::size_t which = 0;
  while (which < runners.size() && !runners[which]->parsed()) ++which;
  const Opts& o = opts[which];
  cfg::Diagnostics diag;
  json doc = json::object();
  if (o.config->count() > 0) {
    auto loaded = load_json_file(f.config, "config", diag);
    if (loaded) doc = std::move(*loaded);
  }
  if (!doc.is_object()) {
    diag.error("config", "must be a JSON object");
    doc = json::object();
  }
  doc["subcommand"] = runners[which]->get_name();
  if (o.model->count()) doc["model"] = f.model;
  if (o.dim->count()) doc["dim"] = f.dim;
  if (o.policy->count()) doc["policy"] = f.policy;
  if (o.family->count()) doc["family"] = f.family;
  if (o.init->count()) doc["init"] = f.init;
  if (o.s->count() || o.T->count() || o.steps->count()) {
    if (!doc.contains("grid") || !doc["grid"].is_object()) doc["grid"] = json::object();
    if (o.s->count()) doc["grid"]["s"] = f.s;
    if (o.T->count()) doc["grid"]["T"] = f.T;
    if (o.steps->count()) doc["grid"]["steps"] = f.steps;
  }
  if (o.particles->count()) doc["particles"] = f.particles;
  if (o.seed->count()) doc["seed"] = f.seed;
  if (o.threads->count()) doc["threads"] = f.threads;
  if (o.out->count()) doc["output"] = f.out;
  if (o.csv->count()) doc["csv"] = f.csv;
  if (o.binary->count()) doc["binary"] = f.binary;
  if (o.check->count()) {
    if (!doc.contains("check") || !doc["check"].is_object()) doc["check"] = json::object();
    doc["check"]["name"] = f.check;
  }

  Experiment ex = resolve(doc, diag, env_threads);
  if (!diag.ok()) {
    for (const auto& m : diag.messages()) err << "config error: " << m << "\n";
    return kConfigError;
  }

  json result;
  int code = kOk;
  try {
    std::tie(result, code) = execute(ex);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }

  const json envelope = {{"tool_version", kToolVersion}, {"resolved_config", ex.resolved},
                         {"seed", ex.seed},               {"result", result},
                         {"execution", {{"threads", ex.threads}}}, {"timestamp", utc_timestamp()}};
  if (ex.output.empty()) {
    out << envelope.dump(2) << "\n";
  } else {
    std::ofstream file(ex.output);
    if (!file) {
      err << "cannot write '" << ex.output << "'\n";
      return kConfigError;
    }
    file << envelope.dump(2) << "\n";
    out << ex.subcommand << ": wrote " << ex.output;
    if (ex.subcommand == "verify") out << " (" << (code == kOk ? "pass" : "fail") << ")";
    out << "\n";
  }
  return code;
}

}  // namespace mkv::cli
