#pragma once

// Models described in JSON as polynomials in (t, x, m, u), where m is the
// mean of the measure argument. Every coefficient entry is a list of monomials
//   {"coef": c, "t": p, "x": [..], "m": [..], "u": [..]}
// with non-negative integer powers; omitted powers are 0.
//
//   {"name": "OU", "state_dim": 1, "control_dim": 1, "horizon": 1,
//    "control_box": {"lo": [-1], "hi": [1]},
//    "drift": [[{"coef": -1, "x": [1]}, {"coef": 1, "u": [1]}]],
//    "diffusion": [[{"coef": 1}]],
//    "running_cost": [{"coef": 1, "u": [2]}],
//    "terminal_cost": [{"coef": 1, "x": [2]}],
//    "constants": {"K1": 1, "K2": 2}}
//
// drift has d entries, diffusion d*d (row-major). diffusion and terminal_cost
// may not depend on u; terminal_cost may not depend on t.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkv/diagnostics.hpp"
#include "mkv/model.hpp"

namespace mkv {

struct Monomial {
  double coef = 0.0;
  unsigned t = 0;
  std::vector<unsigned> x;
  std::vector<unsigned> m;
  std::vector<unsigned> u;

  double eval(double time, std::span<const double> state, std::span<const double> mean,
              std::span<const double> control) const {
    double v = coef;
    if (t) v *= std::pow(time, t);
    for (std::size_t c = 0; c < x.size(); ++c)
      if (x[c]) v *= std::pow(state[c], x[c]);
    for (std::size_t c = 0; c < m.size(); ++c)
      if (m[c]) v *= std::pow(mean[c], m[c]);
    for (std::size_t c = 0; c < u.size(); ++c)
      if (u[c]) v *= std::pow(control[c], u[c]);
    return v;
  }
};

using Polynomial = std::vector<Monomial>;

inline double eval_polynomial(const Polynomial& p, double t, std::span<const double> x, std::span<const double> m,
                              std::span<const double> u) {
  double v = 0.0;
  for (const auto& mono : p) v += mono.eval(t, x, m, u);
  return v;
}

namespace detail {

inline std::vector<unsigned> read_powers(const nlohmann::json& j, std::size_t n, const std::string& path,
                                         cfg::Diagnostics& diag) {
  std::vector<unsigned> out;
  if (!j.is_array() || j.size() != n) {
    diag.error(path, "expected " + std::to_string(n) + " non-negative integer powers");
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_number_unsigned() && !(j[i].is_number_integer() && j[i].get<long long>() >= 0)) {
      diag.error(cfg::index(path, i), "power must be a non-negative integer");
      continue;
    }
    out.push_back(j[i].get<unsigned>());
  }
  return out;
}

inline Polynomial read_polynomial(const nlohmann::json& j, std::size_t d, std::size_t k, bool allow_t, bool allow_u,
                                  const std::string& path, cfg::Diagnostics& diag) {
  Polynomial out;
  if (!j.is_array()) {
    diag.error(path, "expected a list of monomials");
    return out;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = cfg::index(path, i);
    if (!cfg::expect_object(j[i], p, diag)) continue;
    cfg::reject_unknown(j[i], {"coef", "t", "x", "m", "u"}, p, diag);
    Monomial mono;
    if (!j[i].contains("coef")) diag.error(p, "missing 'coef'");
    else if (auto c = cfg::number(j[i]["coef"], cfg::join(p, "coef"), diag)) mono.coef = *c;
    if (j[i].contains("t")) {
      if (!allow_t) diag.error(cfg::join(p, "t"), "this coefficient may not depend on t");
      else if (auto v = cfg::unsigned_integer(j[i]["t"], cfg::join(p, "t"), diag)) mono.t = static_cast<unsigned>(*v);
    }
    if (j[i].contains("x")) mono.x = read_powers(j[i]["x"], d, cfg::join(p, "x"), diag);
    if (j[i].contains("m")) mono.m = read_powers(j[i]["m"], d, cfg::join(p, "m"), diag);
    if (j[i].contains("u")) {
      if (!allow_u) diag.error(cfg::join(p, "u"), "this coefficient may not depend on u");
      else mono.u = read_powers(j[i]["u"], k, cfg::join(p, "u"), diag);
    }
    out.push_back(std::move(mono));
  }
  return out;
}

inline std::vector<Polynomial> read_polynomials(const nlohmann::json& j, std::size_t count, std::size_t d,
                                                std::size_t k, bool allow_u, const std::string& path,
                                                cfg::Diagnostics& diag) {
  std::vector<Polynomial> out;
  if (!j.is_array() || j.size() != count) {
    diag.error(path, "expected " + std::to_string(count) + " component polynomials");
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) out.push_back(read_polynomial(j[i], d, k, true, allow_u, cfg::index(path, i), diag));
  return out;
}

}  // namespace detail

// Builds a model from its JSON description; violations go to diag.
inline std::optional<ModelSpec> model_from_json(const nlohmann::json& j, cfg::Diagnostics& diag,
                                                const std::string& path = "model") {
  if (!cfg::expect_object(j, path, diag)) return std::nullopt;
  cfg::reject_unknown(j,
                      {"name", "description", "state_dim", "control_dim", "horizon", "control_box", "drift",
                       "diffusion", "running_cost", "terminal_cost", "constants"},
                      path, diag);
  const std::size_t before = diag.messages().size();
  auto need = [&](const char* key) {
    if (j.contains(key)) return true;
    diag.error(path, std::string("missing '") + key + "'");
    return false;
  };
  ModelSpec m;
  m.name = j.value("name", std::string("JSON_MODEL"));
  m.description = j.value("description", std::string());
  std::size_t d = 0, k = 0;
  if (need("state_dim"))
    if (auto v = cfg::unsigned_integer(j["state_dim"], cfg::join(path, "state_dim"), diag)) d = *v;
  if (need("control_dim"))
    if (auto v = cfg::unsigned_integer(j["control_dim"], cfg::join(path, "control_dim"), diag)) k = *v;
  if (d == 0 || k == 0) {
    diag.error(path, "state_dim and control_dim must be at least 1");
    return std::nullopt;
  }
  m.state_dim = d;
  m.control_dim = k;
  if (need("horizon"))
    if (auto v = cfg::number(j["horizon"], cfg::join(path, "horizon"), diag)) {
      if (!(*v > 0.0)) diag.error(cfg::join(path, "horizon"), "horizon > 0");
      m.horizon = *v;
    }
  if (need("control_box") && cfg::expect_object(j["control_box"], cfg::join(path, "control_box"), diag)) {
    const auto& b = j["control_box"];
    const std::string bp = cfg::join(path, "control_box");
    cfg::reject_unknown(b, {"lo", "hi"}, bp, diag);
    auto lo = b.contains("lo") ? cfg::vector(b["lo"], cfg::join(bp, "lo"), diag, k) : std::nullopt;
    auto hi = b.contains("hi") ? cfg::vector(b["hi"], cfg::join(bp, "hi"), diag, k) : std::nullopt;
    if (!lo || !hi) diag.error(bp, "needs 'lo' and 'hi' with control_dim entries");
    else {
      try {
        m.control_box = ControlBox(*lo, *hi);
      } catch (const std::exception& e) {
        diag.error(bp, e.what());
      }
    }
  }

  std::vector<Polynomial> drift, diffusion;
  Polynomial running, terminal;
  if (need("drift")) drift = detail::read_polynomials(j["drift"], d, d, k, true, cfg::join(path, "drift"), diag);
  if (need("diffusion"))
    diffusion = detail::read_polynomials(j["diffusion"], d * d, d, k, false, cfg::join(path, "diffusion"), diag);
  if (need("running_cost"))
    running = detail::read_polynomial(j["running_cost"], d, k, true, true, cfg::join(path, "running_cost"), diag);
  if (need("terminal_cost"))
    terminal = detail::read_polynomial(j["terminal_cost"], d, k, false, false, cfg::join(path, "terminal_cost"), diag);

  if (j.contains("constants") && cfg::expect_object(j["constants"], cfg::join(path, "constants"), diag)) {
    const auto& c = j["constants"];
    const std::string cp = cfg::join(path, "constants");
    cfg::reject_unknown(c, {"K1", "K2", "K3", "K4", "lambda", "b_sup", "sigma_sup"}, cp, diag);
    auto read = [&](const char* key, std::optional<double>& slot) {
      if (!c.contains(key)) return;
      if (auto v = cfg::number(c[key], cfg::join(cp, key), diag)) {
        if (*v < 0.0) diag.error(cfg::join(cp, key), "constants must be non-negative");
        slot = *v;
      }
    };
    read("K1", m.constants.K1);
    read("K2", m.constants.K2);
    read("K3", m.constants.K3);
    read("K4", m.constants.K4);
    read("lambda", m.constants.lambda);
    read("b_sup", m.constants.b_sup);
    read("sigma_sup", m.constants.sigma_sup);
  }
  if (diag.messages().size() != before) return std::nullopt;

  auto drift_p = std::make_shared<const std::vector<Polynomial>>(std::move(drift));
  auto diff_p = std::make_shared<const std::vector<Polynomial>>(std::move(diffusion));
  auto run_p = std::make_shared<const Polynomial>(std::move(running));
  auto term_p = std::make_shared<const Polynomial>(std::move(terminal));
  bool law_in_sigma = false;
  for (const auto& poly : *diff_p)
    for (const auto& mono : poly)
      for (unsigned p : mono.m) law_in_sigma = law_in_sigma || p > 0;
  m.diffusion_depends_on_law = law_in_sigma;

  m.drift = [drift_p](double t, std::span<const double> x, const EmpiricalMeasure& mu, std::span<const double> u,
                      std::span<double> out) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = eval_polynomial((*drift_p)[c], t, x, mu.mean(), u);
  };
  m.diffusion = [diff_p](double t, std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = eval_polynomial((*diff_p)[c], t, x, mu.mean(), {});
  };
  m.running_cost = [run_p](double t, std::span<const double> x, const EmpiricalMeasure& mu,
                           std::span<const double> u) { return eval_polynomial(*run_p, t, x, mu.mean(), u); };
  m.terminal_cost = [term_p](std::span<const double> x, const EmpiricalMeasure& mu) {
    return eval_polynomial(*term_p, 0.0, x, mu.mean(), {});
  };
  return m;
}

}  // namespace mkv
