#pragma once

// JSON readers and writers for measures, initial laws, policies, policy
// families and estimates. Readers report every violation through Diagnostics.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mkv/controls.hpp"
#include "mkv/diagnostics.hpp"
#include "mkv/measures.hpp"
#include "mkv/objective.hpp"
#include "mkv/simulate.hpp"

namespace mkv::io {

using nlohmann::json;

inline json rows_of(std::span<const double> flat, std::size_t dim) {
  json out = json::array();
  for (std::size_t i = 0; i + dim <= flat.size(); i += dim)
    out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i),
                                      flat.begin() + static_cast<std::ptrdiff_t>(i + dim)));
  return out;
}

// {"dim", "atoms": [[..], ..], "weights"}; weights omitted when uniform.
inline json to_json(const EmpiricalMeasure& mu) {
  json j = {{"dim", mu.dim()}, {"atoms", rows_of(mu.atoms(), mu.dim())}};
  if (!mu.is_uniform()) j["weights"] = mu.weights();
  return j;
}

inline json to_json(const ControlMeasure& alpha) {
  return {{"atoms", rows_of(alpha.atoms(), alpha.dim())}, {"weights", alpha.weights()}};
}

inline json to_json(const StateBox& b) { return {{"lo", b.lo}, {"hi", b.hi}}; }

inline json to_json(const FeedbackPolicy& p) {
  if (p.kind() == FeedbackPolicy::Kind::constant) {
    json j = to_json(p.rows().front());
    j["type"] = "constant";
    j["t_begin"] = p.t_begin();
    j["t_end"] = p.t_end();
    return j;
  }
  const PolicyGrid& g = p.grid_data();
  json boxes = json::array();
  for (const auto& b : g.boxes) boxes.push_back(to_json(b));
  return {{"type", "grid"}, {"time_knots", g.time_knots}, {"boxes", boxes}, {"atoms", g.atoms},
          {"weights", g.weights}};
}

inline json to_json(const PolicyFamily& f) {
  json boxes = json::array();
  for (const auto& b : f.boxes) boxes.push_back(to_json(b));
  return {{"time_knots", f.time_knots}, {"boxes", boxes}, {"atoms", f.atoms}, {"logit_bound", f.logit_bound}};
}

inline json to_json(const InitialLaw& law) {
  switch (law.kind()) {
    case InitialLaw::Kind::dirac: return {{"type", "dirac"}, {"point", law.first_parameter()}};
    case InitialLaw::Kind::gaussian:
      return {{"type", "gaussian"}, {"mean", law.first_parameter()}, {"std", law.second_parameter()}};
    case InitialLaw::Kind::uniform:
      return {{"type", "uniform"}, {"lo", law.first_parameter()}, {"hi", law.second_parameter()}};
    case InitialLaw::Kind::empirical: {
      json j = to_json(*law.measure());
      j["type"] = "empirical";
      return j;
    }
  }
  return {};
}

inline json to_json(const CostEstimate& c) {
  return {{"mean", c.mean}, {"std_error", c.std_error}, {"particles", c.particles}, {"steps", c.steps},
          {"seed", c.seed}};
}

inline json to_json(const ValueEstimate& v) {
  return {{"cost", to_json(v.cost)}, {"optimizer_gap", v.optimizer_gap}, {"evaluations", v.evaluations},
          {"best_parameters", v.best_parameters}, {"best_policy", to_json(v.best_policy)}};
}

inline json to_json(const OptimizerConfig& c) {
  return {{"generations", c.generations}, {"population", c.population}, {"elite_frac", c.elite_frac},
          {"init_spread", c.init_spread}, {"seed", c.seed}};
}

// Rows of a d-column matrix, flattened.
inline std::optional<std::vector<double>> flat_rows(const json& j, std::size_t dim, const std::string& path,
                                                    cfg::Diagnostics& diag) {
  auto rows = cfg::matrix(j, path, diag, dim);
  if (!rows) return std::nullopt;
  std::vector<double> flat;
  for (auto& r : *rows) flat.insert(flat.end(), r.begin(), r.end());
  return flat;
}

inline std::optional<EmpiricalMeasure> measure_from_json(const json& j, std::size_t dim, const std::string& path,
                                                         cfg::Diagnostics& diag) {
  if (!cfg::expect_object(j, path, diag)) return std::nullopt;
  cfg::reject_unknown(j, {"type", "dim", "atoms", "weights"}, path, diag);
  if (j.contains("dim")) {
    auto d = cfg::unsigned_integer(j["dim"], cfg::join(path, "dim"), diag);
    if (d && *d != dim) diag.error(cfg::join(path, "dim"), "expected dimension " + std::to_string(dim));
  }
  if (!j.contains("atoms")) {
    diag.error(path, "missing 'atoms'");
    return std::nullopt;
  }
  auto atoms = flat_rows(j["atoms"], dim, cfg::join(path, "atoms"), diag);
  if (!atoms) return std::nullopt;
  try {
    if (j.contains("weights")) {
      auto w = cfg::vector(j["weights"], cfg::join(path, "weights"), diag, atoms->size() / dim);
      if (!w) return std::nullopt;
      return EmpiricalMeasure(dim, std::move(*atoms), std::move(*w));
    }
    return EmpiricalMeasure(dim, std::move(*atoms));
  } catch (const std::exception& e) {
    diag.error(path, e.what());
  }
  return std::nullopt;
}

inline std::optional<InitialLaw> init_from_json(const json& j, std::size_t dim, const std::string& path,
                                                cfg::Diagnostics& diag) {
  if (!cfg::expect_object(j, path, diag)) return std::nullopt;
  const std::string type = j.value("type", std::string());
  auto field = [&](const char* key) -> std::optional<std::vector<double>> {
    if (!j.contains(key)) {
      diag.error(path, std::string("missing '") + key + "'");
      return std::nullopt;
    }
    return cfg::vector(j[key], cfg::join(path, key), diag, dim);
  };
  try {
    if (type == "dirac") {
      cfg::reject_unknown(j, {"type", "point"}, path, diag);
      if (auto p = field("point")) return InitialLaw::dirac(std::move(*p));
    } else if (type == "gaussian") {
      cfg::reject_unknown(j, {"type", "mean", "std"}, path, diag);
      auto m = field("mean");
      auto s = field("std");
      if (m && s) return InitialLaw::gaussian(std::move(*m), std::move(*s));
    } else if (type == "uniform") {
      cfg::reject_unknown(j, {"type", "lo", "hi"}, path, diag);
      auto lo = field("lo");
      auto hi = field("hi");
      if (lo && hi) return InitialLaw::uniform(std::move(*lo), std::move(*hi));
    } else if (type == "empirical") {
      if (auto mu = measure_from_json(j, dim, path, diag)) return InitialLaw::empirical(std::move(*mu));
    } else {
      diag.error(cfg::join(path, "type"), "expected one of dirac, gaussian, uniform, empirical");
    }
  } catch (const std::exception& e) {
    diag.error(path, e.what());
  }
  return std::nullopt;
}

inline std::optional<std::vector<StateBox>> boxes_from_json(const json& j, std::size_t dim, const std::string& path,
                                                            cfg::Diagnostics& diag) {
  if (!j.is_array()) {
    diag.error(path, "expected an array of boxes");
    return std::nullopt;
  }
  std::vector<StateBox> out;
  bool good = true;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = cfg::index(path, i);
    if (!cfg::expect_object(j[i], p, diag)) {
      good = false;
      continue;
    }
    cfg::reject_unknown(j[i], {"lo", "hi"}, p, diag);
    auto lo = j[i].contains("lo") ? cfg::vector(j[i]["lo"], cfg::join(p, "lo"), diag, dim) : std::nullopt;
    auto hi = j[i].contains("hi") ? cfg::vector(j[i]["hi"], cfg::join(p, "hi"), diag, dim) : std::nullopt;
    if (!lo || !hi) {
      diag.error(p, "a box needs 'lo' and 'hi' with state_dim entries");
      good = false;
      continue;
    }
    out.push_back({std::move(*lo), std::move(*hi)});
  }
  if (!good) return std::nullopt;
  return out;
}

// {"type": "constant", "atoms", "weights"?} or {"type": "grid", "time_knots",
// "boxes", "atoms", "weights"}. A constant policy spans [t_begin, t_end].
inline std::optional<FeedbackPolicy> policy_from_json(const json& j, const ModelSpec& model, double t_begin,
                                                      double t_end, const std::string& path,
                                                      cfg::Diagnostics& diag) {
  if (!cfg::expect_object(j, path, diag)) return std::nullopt;
  const std::string type = j.value("type", std::string("constant"));
  const std::size_t k = model.control_dim;
  try {
    if (type == "constant") {
      cfg::reject_unknown(j, {"type", "atoms", "weights", "t_begin", "t_end"}, path, diag);
      if (!j.contains("atoms")) {
        diag.error(path, "missing 'atoms'");
        return std::nullopt;
      }
      auto atoms = flat_rows(j["atoms"], k, cfg::join(path, "atoms"), diag);
      if (!atoms) return std::nullopt;
      std::vector<double> w(atoms->size() / k, 1.0);
      if (j.contains("weights")) {
        auto given = cfg::vector(j["weights"], cfg::join(path, "weights"), diag, w.size());
        if (!given) return std::nullopt;
        w = std::move(*given);
      }
      const double b = j.contains("t_begin") && j["t_begin"].is_number() ? j["t_begin"].get<double>() : t_begin;
      const double e = j.contains("t_end") && j["t_end"].is_number() ? j["t_end"].get<double>() : t_end;
      return FeedbackPolicy::constant(ControlMeasure(model.control_box, std::move(*atoms), std::move(w)), b, e);
    }
    if (type == "grid") {
      cfg::reject_unknown(j, {"type", "time_knots", "boxes", "atoms", "weights"}, path, diag);
      PolicyGrid g;
      bool good = true;
      if (auto v = j.contains("time_knots") ? cfg::vector(j["time_knots"], cfg::join(path, "time_knots"), diag)
                                            : std::nullopt)
        g.time_knots = std::move(*v);
      else good = false;
      if (j.contains("boxes")) {
        if (auto b = boxes_from_json(j["boxes"], model.state_dim, cfg::join(path, "boxes"), diag)) g.boxes = std::move(*b);
        else good = false;
      }
      if (auto a = j.contains("atoms") ? cfg::matrix(j["atoms"], cfg::join(path, "atoms"), diag, k) : std::nullopt)
        g.atoms = std::move(*a);
      else good = false;
      if (auto w = j.contains("weights") ? cfg::matrix(j["weights"], cfg::join(path, "weights"), diag) : std::nullopt)
        g.weights = std::move(*w);
      else good = false;
      if (!good) {
        diag.error(path, "a grid policy needs time_knots, atoms and weights");
        return std::nullopt;
      }
      return FeedbackPolicy::grid(std::move(g), model.control_box);
    }
    diag.error(cfg::join(path, "type"), "expected 'constant' or 'grid'");
  } catch (const std::exception& e) {
    diag.error(path, e.what());
  }
  return std::nullopt;
}

// Vertices and center of the control box.
inline std::vector<std::vector<double>> box_vertices_and_center(const ControlBox& box) {
  const std::size_t k = box.dim();
  std::vector<std::vector<double>> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    std::vector<double> v(k);
    for (std::size_t c = 0; c < k; ++c) v[c] = (mask >> c) & 1u ? box.hi[c] : box.lo[c];
    out.push_back(std::move(v));
  }
  out.push_back(box.center());
  return out;
}

// {"time_knots" | "time_cells", "boxes", "atoms", "logit_bound"}, all optional.
// Defaults: one time cell over [s, T], no boxes, atoms at the control box's
// vertices and center.
inline std::optional<PolicyFamily> family_from_json(const json& j, const ModelSpec& model, double s, double T,
                                                    const std::string& path, cfg::Diagnostics& diag) {
  PolicyFamily f;
  f.control_box = model.control_box;
  f.time_knots = {s, T};
  f.atoms = box_vertices_and_center(model.control_box);
  if (j.is_null()) return f;
  if (!cfg::expect_object(j, path, diag)) return std::nullopt;
  cfg::reject_unknown(j, {"time_knots", "time_cells", "boxes", "atoms", "logit_bound"}, path, diag);
  const std::size_t before = diag.messages().size();
  if (j.contains("time_knots") && j.contains("time_cells"))
    diag.error(path, "give either time_knots or time_cells, not both");
  if (j.contains("time_knots")) {
    if (auto v = cfg::vector(j["time_knots"], cfg::join(path, "time_knots"), diag)) f.time_knots = std::move(*v);
  } else if (j.contains("time_cells")) {
    if (auto n = cfg::unsigned_integer(j["time_cells"], cfg::join(path, "time_cells"), diag)) {
      if (*n == 0) diag.error(cfg::join(path, "time_cells"), "time_cells ≥ 1");
      else {
        f.time_knots.clear();
        for (std::size_t i = 0; i <= *n; ++i)
          f.time_knots.push_back(i == *n ? T : s + (T - s) * static_cast<double>(i) / static_cast<double>(*n));
      }
    }
  }
  if (j.contains("boxes"))
    if (auto b = boxes_from_json(j["boxes"], model.state_dim, cfg::join(path, "boxes"), diag)) f.boxes = std::move(*b);
  if (j.contains("atoms"))
    if (auto a = cfg::matrix(j["atoms"], cfg::join(path, "atoms"), diag, model.control_dim)) f.atoms = std::move(*a);
  if (j.contains("logit_bound"))
    if (auto b = cfg::number(j["logit_bound"], cfg::join(path, "logit_bound"), diag)) f.logit_bound = *b;
  if (diag.messages().size() != before) return std::nullopt;
  try {
    // Instantiating at zero logits runs every structural check.
    f.validate();
    (void)f.instantiate(std::vector<double>(f.parameter_count(), 0.0));
  } catch (const std::exception& e) {
    diag.error(path, e.what());
    return std::nullopt;
  }
  return f;
}

inline OptimizerConfig optimizer_from_json(const json& j, std::uint64_t default_seed, const std::string& path,
                                           cfg::Diagnostics& diag, OptimizerConfig base = {}) {
  base.seed = default_seed;
  if (j.is_null()) return base;
  if (!cfg::expect_object(j, path, diag)) return base;
  cfg::reject_unknown(j, {"generations", "population", "elite_frac", "init_spread", "seed"}, path, diag);
  if (j.contains("generations"))
    if (auto v = cfg::unsigned_integer(j["generations"], cfg::join(path, "generations"), diag)) {
      if (*v < 1) diag.error(cfg::join(path, "generations"), "generations ≥ 1");
      base.generations = *v;
    }
  if (j.contains("population"))
    if (auto v = cfg::unsigned_integer(j["population"], cfg::join(path, "population"), diag)) {
      if (*v < 4) diag.error(cfg::join(path, "population"), "population ≥ 4");
      base.population = *v;
    }
  if (j.contains("elite_frac"))
    if (auto v = cfg::number(j["elite_frac"], cfg::join(path, "elite_frac"), diag)) {
      if (!(*v > 0.0 && *v < 1.0)) diag.error(cfg::join(path, "elite_frac"), "elite_frac in (0, 1)");
      base.elite_frac = *v;
    }
  if (j.contains("init_spread"))
    if (auto v = cfg::number(j["init_spread"], cfg::join(path, "init_spread"), diag)) {
      if (!(*v > 0.0)) diag.error(cfg::join(path, "init_spread"), "init_spread > 0");
      base.init_spread = *v;
    }
  if (j.contains("seed"))
    if (auto v = cfg::unsigned_integer(j["seed"], cfg::join(path, "seed"), diag)) base.seed = *v;
  return base;
}

}  // namespace mkv::io
