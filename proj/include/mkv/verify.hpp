#pragma once

// Numerical checks with explicit margins. A report passes iff every tested
// inequality satisfies lhs <= rhs + margin.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mkv/controls.hpp"
#include "mkv/error.hpp"
#include "mkv/model.hpp"
#include "mkv/objective.hpp"
#include "mkv/rng.hpp"
#include "mkv/simulate.hpp"
#include "mkv/transport.hpp"

namespace mkv {

// Gronwall multiplier for K5 = c K1, and the L1 Burkholder-Davis-Gundy constant.
inline constexpr double kGronwallMultiplier = 8.0;
inline constexpr double kBdgConstant = 2.0;
inline constexpr double kSigmaMultiplier = 3.0;
inline constexpr std::size_t kCalibrationReplicates = 5;

struct Inequality {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;

  bool holds() const noexcept { return lhs <= rhs + margin; }
};

struct CheckReport {
  std::string check_name;
  std::vector<Inequality> inequalities;  // all of them, or the worst ones for large sweeps
  std::size_t inequalities_tested = 0;
  std::size_t violations = 0;
  bool passed = false;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  nlohmann::json extras = nlohmann::json::object();

  void add(Inequality q) {
    ++inequalities_tested;
    if (!q.holds()) ++violations;
    inequalities.push_back(std::move(q));
  }

  // Counts q without keeping it.
  void tally(const Inequality& q) {
    ++inequalities_tested;
    if (!q.holds()) ++violations;
  }

  CheckReport& finish() {
    passed = violations == 0;
    return *this;
  }
};

inline nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json ineq = nlohmann::json::array();
  for (const auto& q : r.inequalities)
    ineq.push_back({{"label", q.label}, {"lhs", q.lhs}, {"rhs", q.rhs}, {"margin", q.margin}, {"holds", q.holds()}});
  return {{"check_name", r.check_name},
          {"verdict", r.passed ? "pass" : "fail"},
          {"inequalities", std::move(ineq)},
          {"inequalities_tested", r.inequalities_tested},
          {"violations", r.violations},
          {"config", r.config},
          {"seed", r.seed},
          {"extras", r.extras}};
}

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Mean and standard error, exact zero when all values agree.
inline std::pair<double, double> mean_se(const std::vector<double>& v) {
  const CostEstimate c = summarize(v, 0, 0);
  return {c.mean, c.std_error};
}

inline void require_law_free_sigma(const ModelSpec& model, const char* who) {
  if (model.diffusion_depends_on_law)
    throw ConfigError(std::string(who) + ": sigma must not depend on the law");
}

inline double roundoff(double scale) { return 1e-12 * std::max(1.0, std::abs(scale)); }

// Symmetric in (a, b): swapping the seeds gives the same calibration.
inline std::uint64_t pair_seed(std::uint64_t a, std::uint64_t b) {
  return rng::derive_seed(std::min(a, b), 5, 0) ^ rng::derive_seed(std::max(a, b), 5, 1);
}

inline EmpiricalMeasure terminal_law(const ModelSpec& model, const FeedbackPolicy& policy, const TimeGrid& grid,
                                     const InitialLaw& init, std::size_t n, std::uint64_t seed,
                                     const SimulationOptions& opts) {
  auto r = run_engine(model, policy, grid, sample_initial(init, n, seed), seed, opts, false, false);
  return EmpiricalMeasure(model.state_dim, std::move(r.terminal));
}

// Median W1 between terminal laws of replicate direct runs.
inline double replicate_noise(const ModelSpec& model, const FeedbackPolicy& policy, const TimeGrid& grid,
                              const InitialLaw& init, std::size_t n, std::uint64_t base,
                              const SimulationOptions& opts, std::vector<double>* samples = nullptr) {
  std::vector<double> w;
  for (std::size_t k = 0; k < kCalibrationReplicates; ++k) {
    const auto a = terminal_law(model, policy, grid, init, n, rng::derive_seed(base, 20, static_cast<std::uint32_t>(2 * k)), opts);
    const auto b =
        terminal_law(model, policy, grid, init, n, rng::derive_seed(base, 20, static_cast<std::uint32_t>(2 * k + 1)), opts);
    w.push_back(w1_auto(a, b));
  }
  if (samples) *samples = w;
  return median(std::move(w));
}

// W1 between two initial laws: exact for discrete laws, the quantile integral
// for 1-D samplers.
inline double initial_law_distance(const InitialLaw& a, const InitialLaw& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("initial laws differ in dimension");
  const auto ma = a.as_measure();
  const auto mb = b.as_measure();
  if (ma && mb) return w1_auto(*ma, *mb);
  if (a.dim() != 1) throw ConfigError("W1 between sampler laws is only available in d = 1");
  // Midpoint rule on the quantile functions.
  constexpr std::size_t kNodes = 1 << 16;
  double total = 0.0;
  double xa = 0.0, xb = 0.0;
  for (std::size_t k = 0; k < kNodes; ++k) {
    const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(kNodes);
    a.sample_into(std::span<const double>(&u, 1), std::span<double>(&xa, 1));
    b.sample_into(std::span<const double>(&u, 1), std::span<double>(&xb, 1));
    total += std::abs(xa - xb);
  }
  return total / static_cast<double>(kNodes);
}

}  // namespace detail

// Coupled stability: both ensembles see the same Brownian increments and
// coupled initial draws. At every grid time r:
//   W1(law_r, law~_r) <= mean sup_{u<=r} |dX_u|
//   W1(law_r, law~_r) <= mean |dX_r|
//   mean sup_{u<=r} |dX_u| <= mean |d xi| exp(K5 (r - s)) + 3 SE
inline CheckReport check_stability(const ModelSpec& model, const FeedbackPolicy& policy, double s,
                                   const InitialLaw& mu, const InitialLaw& mu_tilde, const TimeGrid& grid,
                                   std::size_t particles, std::uint64_t seed, const SimulationOptions& opts = {}) {
  detail::require_law_free_sigma(model, "check_stability");
  if (!model.constants.K1) throw ConfigError("check_stability: model does not declare K1");
  detail::check_grid_start(grid, s);
  const double k5 = kGronwallMultiplier * *model.constants.K1;
  auto [xa, xb] = sample_coupled(mu, mu_tilde, particles, seed);
  const PathBundle a = simulate_from_states(model, policy, grid, std::move(xa), seed, opts);
  const PathBundle b = simulate_from_states(model, policy, grid, std::move(xb), seed, opts);

  const std::size_t n = particles;
  const std::size_t d = model.state_dim;
  // Exact W1 in d >= 2 is capped; compare on the leading particles.
  const std::size_t m = d == 1 ? n : std::min(n, kMaxExactSupport);

  CheckReport rep;
  rep.check_name = "stability";
  rep.seed = seed;
  rep.config = {{"s", s}, {"T", grid.end}, {"steps", grid.steps}, {"particles", particles}, {"K5", k5},
                {"gronwall_multiplier", kGronwallMultiplier}, {"w1_particles", m}};

  std::vector<double> running_sup(n, 0.0), pointwise(n);
  double e_dxi = 0.0, max_middle_se = 0.0;
  for (std::size_t p = 0; p < n; ++p) e_dxi += detail::distance(a.state(p, 0), b.state(p, 0));
  e_dxi /= static_cast<double>(n);

  for (std::size_t i = 0; i <= grid.steps; ++i) {
    for (std::size_t p = 0; p < n; ++p) {
      pointwise[p] = detail::distance(a.state(p, i), b.state(p, i));
      running_sup[p] = std::max(running_sup[p], pointwise[p]);
    }
    const auto [sup_mean, sup_se] = detail::mean_se(running_sup);
    max_middle_se = std::max(max_middle_se, sup_se);
    double w1 = 0.0, sup_head = sup_mean, point_head = 0.0;
    {
      std::vector<double> pa, pb;
      pa.reserve(m * d);
      pb.reserve(m * d);
      sup_head = 0.0;
      for (std::size_t p = 0; p < m; ++p) {
        const auto x = a.state(p, i);
        const auto y = b.state(p, i);
        pa.insert(pa.end(), x.begin(), x.end());
        pb.insert(pb.end(), y.begin(), y.end());
        sup_head += running_sup[p];
        point_head += pointwise[p];
      }
      sup_head /= static_cast<double>(m);
      point_head /= static_cast<double>(m);
      w1 = w1_auto(EmpiricalMeasure(d, std::move(pa)), EmpiricalMeasure(d, std::move(pb)));
    }
    const double t = grid.time(i);
    const std::string at = "t=" + std::to_string(t);
    rep.add({"W1 <= E sup|dX| at " + at, w1, sup_head, detail::roundoff(sup_head)});
    rep.add({"W1 <= E|dX_r| at " + at, w1, point_head, detail::roundoff(point_head)});
    rep.add({"E sup|dX| <= E|dxi| exp(K5 (r-s)) at " + at, sup_mean, e_dxi * std::exp(k5 * (t - s)),
             kSigmaMultiplier * sup_se});
  }
  rep.extras = {{"mean_initial_gap", e_dxi}, {"max_middle_std_error", max_middle_se}};
  return rep.finish();
}

// Moment bound: mean sup_t |X_t| <= (E|xi| + C) exp(C (T - s)) + 3 SE with
// C = 2 K2 (1 + BDG (1 + sqrt(T))).
inline CheckReport check_moment(const ModelSpec& model, const FeedbackPolicy& policy, double s,
                                const InitialLaw& init, const TimeGrid& grid, std::size_t particles,
                                std::uint64_t seed, const SimulationOptions& opts = {}) {
  if (!model.constants.K2) throw ConfigError("check_moment: model does not declare K2");
  detail::check_grid_start(grid, s);
  const double T = grid.end;
  const double c = 2.0 * *model.constants.K2 * (1.0 + kBdgConstant * (1.0 + std::sqrt(T)));
  const PathBundle b = simulate_ensemble(model, policy, grid, init, particles, seed, opts);
  std::vector<double> sup(particles, 0.0);
  double e_xi = 0.0, sample_max = 0.0;
  for (std::size_t p = 0; p < particles; ++p) {
    e_xi += detail::norm(b.state(p, 0));
    for (std::size_t i = 0; i <= grid.steps; ++i) sup[p] = std::max(sup[p], detail::norm(b.state(p, i)));
    sample_max = std::max(sample_max, sup[p]);
  }
  e_xi /= static_cast<double>(particles);
  const auto [mean, se] = detail::mean_se(sup);

  CheckReport rep;
  rep.check_name = "moment";
  rep.seed = seed;
  rep.config = {{"s", s}, {"T", T}, {"steps", grid.steps}, {"particles", particles}, {"C_T", c},
                {"bdg_constant", kBdgConstant}};
  rep.add({"E sup|X| <= (E|xi| + C) exp(C (T-s))", mean, (e_xi + c) * std::exp(c * (T - s)), kSigmaMultiplier * se});
  rep.add({"sample max of sup|X| is finite", std::isfinite(sample_max) ? 0.0 : 1.0, 0.0, 0.0});
  rep.extras = {{"mean_sup", mean}, {"std_error", se}, {"sample_max", sample_max}, {"mean_initial_norm", e_xi}};
  return rep.finish();
}

// E|X_t - X_s| <= C (|t-s| + sqrt|t-s|) + 3 SE over every grid pair, with
// C = b_sup + 2 sigma_sup. Keeps the tightest pairs in the report.
inline CheckReport check_tightness_modulus(const PathBundle& bundle, const ModelSpec& model,
                                           std::size_t keep_worst = 10) {
  if (!model.constants.b_sup || !model.constants.sigma_sup)
    throw ConfigError("check_tightness_modulus: model does not declare b_sup and sigma_sup");
  const double c = *model.constants.b_sup + 2.0 * *model.constants.sigma_sup;
  CheckReport rep;
  rep.check_name = "tightness_modulus";
  rep.seed = bundle.seed;
  rep.config = {{"C", c}, {"steps", bundle.grid.steps}, {"particles", bundle.particles}};
  std::vector<Inequality> all;
  const std::size_t m = bundle.grid.steps;
  for (std::size_t i = 0; i <= m; ++i)
    for (std::size_t j = i + 1; j <= m; ++j) {
      const ModulusEstimate e = path_modulus_at(bundle, j, i);
      const double h = e.t - e.s;
      Inequality q{"E|X_t - X_s| at (" + std::to_string(e.t) + ", " + std::to_string(e.s) + ")", e.mean,
                   c * (h + std::sqrt(h)), kSigmaMultiplier * e.std_error};
      rep.tally(q);
      all.push_back(std::move(q));
    }
  std::sort(all.begin(), all.end(), [](const Inequality& x, const Inequality& y) {
    return x.lhs - x.rhs - x.margin > y.lhs - y.rhs - y.margin;
  });
  all.resize(std::min(all.size(), keep_worst));
  rep.inequalities = std::move(all);
  return rep.finish();
}

// Empirical Hoelder-Lipschitz ratio |V(s,mu) - V(s',mu')| / (sqrt|s-s'| + W1(mu,mu')).
// Each ratio must stay below c_max plus (3 SE + optimizer gaps) / denominator.
inline CheckReport check_value_continuity(const ModelSpec& model, const PolicyFamily& family,
                                          const std::pair<double, InitialLaw>& base,
                                          const std::vector<std::pair<double, InitialLaw>>& perturbations,
                                          const TimeGrid& grid, std::size_t particles, const OptimizerConfig& cfg,
                                          double c_max = 10.0) {
  detail::require_law_free_sigma(model, "check_value_continuity");
  detail::check_grid_start(grid, base.first);
  const double T = grid.end;
  auto grid_from = [&](double s) {
    const double cells = static_cast<double>(grid.steps) * (T - s) / (T - grid.start);
    return TimeGrid{s, T, std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cells)))};
  };
  auto value_at = [&](double s, const InitialLaw& law) {
    return estimate_value(model, family.restricted(s, T), s, law, grid_from(s), particles, cfg);
  };

  CheckReport rep;
  rep.check_name = "value_continuity";
  rep.seed = cfg.seed;
  rep.config = {{"s", base.first}, {"T", T}, {"steps", grid.steps}, {"particles", particles}, {"C_max", c_max},
                {"perturbations", perturbations.size()}};
  const ValueEstimate v0 = value_at(base.first, base.second);
  double max_ratio = 0.0;
  std::size_t used = 0;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < perturbations.size(); ++k) {
    const auto& [s1, law1] = perturbations[k];
    if (!(s1 >= 0.0 && s1 < T)) throw std::invalid_argument("check_value_continuity: perturbed s outside [0, T)");
    const double w1 = detail::initial_law_distance(base.second, law1);
    const double denom = std::sqrt(std::abs(s1 - base.first)) + w1;
    if (denom < 1e-12) continue;
    ++used;
    const ValueEstimate v1 = value_at(s1, law1);
    const double dv = std::abs(v1.cost.mean - v0.cost.mean);
    const double ratio = dv / denom;
    const double tol =
        (kSigmaMultiplier * std::hypot(v0.cost.std_error, v1.cost.std_error) + v0.optimizer_gap + v1.optimizer_gap) /
        denom;
    max_ratio = std::max(max_ratio, ratio);
    rep.add({"ratio for perturbation " + std::to_string(k), ratio, c_max, tol});
    rows.push_back({{"index", k}, {"s", s1}, {"w1", w1}, {"value", v1.cost.mean}, {"std_error", v1.cost.std_error},
                    {"ratio", ratio}});
  }
  if (used == 0) throw std::invalid_argument("check_value_continuity: every perturbation is degenerate");
  rep.extras = {{"base_value", v0.cost.mean}, {"base_std_error", v0.cost.std_error}, {"max_ratio", max_ratio},
                {"perturbations", std::move(rows)}};
  return rep.finish();
}

// Two runs from independent resamplings of mu; their terminal W1 must be
// within 3x the replicate noise measured on the same configuration.
inline CheckReport check_law_invariance(const ModelSpec& model, const FeedbackPolicy& policy, double s,
                                        const EmpiricalMeasure& mu, const TimeGrid& grid, std::size_t particles,
                                        std::pair<std::uint64_t, std::uint64_t> seeds,
                                        const SimulationOptions& opts = {}) {
  if (seeds.first == seeds.second) throw std::invalid_argument("check_law_invariance: seeds must differ");
  detail::check_grid_start(grid, s);
  const InitialLaw init = InitialLaw::empirical(mu);
  const auto a = detail::terminal_law(model, policy, grid, init, particles, seeds.first, opts);
  const auto b = detail::terminal_law(model, policy, grid, init, particles, seeds.second, opts);
  const double w1 = w1_auto(a, b);
  std::vector<double> samples;
  const double cal = detail::replicate_noise(model, policy, grid, init, particles,
                                             detail::pair_seed(seeds.first, seeds.second), opts, &samples);
  CheckReport rep;
  rep.check_name = "law_invariance";
  rep.seed = std::min(seeds.first, seeds.second);
  rep.config = {{"s", s}, {"T", grid.end}, {"steps", grid.steps}, {"particles", particles},
                {"seeds", {seeds.first, seeds.second}}};
  rep.add({"W1(terminal laws) <= 3 x calibration", w1, kSigmaMultiplier * cal, 0.0});
  rep.extras = {{"w1", w1}, {"calibration", cal}, {"calibration_samples", samples}};
  return rep.finish();
}

// Median (over replicates) W1 between terminal laws at consecutive N must not
// increase along the schedule.
inline CheckReport check_chaos_convergence(const ModelSpec& model, const FeedbackPolicy& policy, double s,
                                           const InitialLaw& init, const TimeGrid& grid,
                                           const std::vector<std::size_t>& schedule, std::uint64_t seed,
                                           const SimulationOptions& opts = {},
                                           std::size_t replicates = kCalibrationReplicates) {
  if (schedule.size() < 3) throw std::invalid_argument("check_chaos_convergence: schedule needs at least 3 entries");
  for (std::size_t k = 0; k + 1 < schedule.size(); ++k)
    if (!(schedule[k + 1] > schedule[k])) throw std::invalid_argument("check_chaos_convergence: schedule must increase");
  if (replicates == 0) throw std::invalid_argument("check_chaos_convergence: need at least one replicate");
  detail::check_grid_start(grid, s);

  std::vector<double> medians;
  nlohmann::json raw = nlohmann::json::array();
  for (std::size_t k = 0; k + 1 < schedule.size(); ++k) {
    std::vector<double> w;
    for (std::size_t r = 0; r < replicates; ++r) {
      const auto lo = detail::terminal_law(model, policy, grid, init, schedule[k],
                                           rng::derive_seed(seed, 40 + static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(r)), opts);
      const auto hi = detail::terminal_law(model, policy, grid, init, schedule[k + 1],
                                           rng::derive_seed(seed, 40 + static_cast<std::uint32_t>(k + 1), static_cast<std::uint32_t>(r)), opts);
      w.push_back(w1_auto(lo, hi));
    }
    raw.push_back(w);
    medians.push_back(detail::median(std::move(w)));
  }
  CheckReport rep;
  rep.check_name = "chaos_convergence";
  rep.seed = seed;
  rep.config = {{"s", s}, {"T", grid.end}, {"steps", grid.steps}, {"schedule", schedule}, {"replicates", replicates}};
  for (std::size_t k = 0; k + 1 < medians.size(); ++k)
    rep.add({"median W1(N" + std::to_string(k + 1) + ", N" + std::to_string(k + 2) + ") <= median W1(N" +
                 std::to_string(k) + ", N" + std::to_string(k + 1) + ")",
             medians[k + 1], medians[k], 0.0});
  rep.extras = {{"medians", medians}, {"replicate_distances", std::move(raw)}};
  return rep.finish();
}

// Direct run versus a restart at t_mid from the direct run's empirical law.
// t_mid = s is allowed and restarts from the sampled initial ensemble.
inline CheckReport check_flow_property(const ModelSpec& model, const FeedbackPolicy& policy, double s, double t_mid,
                                       const InitialLaw& init, const TimeGrid& grid, std::size_t particles,
                                       std::uint64_t seed, const SimulationOptions& opts = {}) {
  detail::check_grid_start(grid, s);
  if (!(t_mid >= s && t_mid < grid.end)) throw std::invalid_argument("check_flow_property: need s <= t_mid < T");
  const auto mid = grid.index_of(t_mid);
  if (!mid) throw std::invalid_argument("check_flow_property: t_mid is not a grid time");
  const PathBundle direct = simulate_ensemble(model, policy, grid, init, particles, seed, opts);
  const TimeGrid tail{grid.time(*mid), grid.end, grid.steps - *mid};
  const PathBundle restarted = restart_from_empirical(model, policy, tail.start, direct.law_at(*mid), tail, particles,
                                                      rng::derive_seed(seed, 50), opts);
  const double w1 = w1_auto(direct.terminal_law(), restarted.terminal_law());
  std::vector<double> samples;
  const double cal = detail::replicate_noise(model, policy, grid, init, particles, rng::derive_seed(seed, 51), opts,
                                             &samples);
  CheckReport rep;
  rep.check_name = "flow_property";
  rep.seed = seed;
  rep.config = {{"s", s}, {"t_mid", t_mid}, {"T", grid.end}, {"steps", grid.steps}, {"particles", particles}};
  rep.add({"W1(direct, restarted) <= 3 x calibration", w1, kSigmaMultiplier * cal, 0.0});
  rep.extras = {{"w1", w1}, {"calibration", cal}, {"calibration_samples", samples}};
  return rep.finish();
}

// Residual of the dynamic programming identity at t_mid.
inline CheckReport check_dpp(const ModelSpec& model, const PolicyFamily& family, double s, double t_mid,
                             const InitialLaw& init, const TimeGrid& grid, std::size_t particles,
                             const DppConfig& cfg) {
  const DppResult r = dpp_residual(model, family, s, t_mid, init, grid, particles, cfg);
  CheckReport rep;
  rep.check_name = "dpp";
  rep.seed = cfg.outer.seed;
  rep.config = {{"s", s}, {"t_mid", t_mid}, {"T", grid.end}, {"steps", grid.steps}, {"particles", particles}};
  rep.add({"|lhs - rhs| within tolerance", std::abs(r.residual), r.tolerance, 0.0});
  rep.add({"rhs - lhs <= tolerance", -r.residual, r.tolerance, 0.0});
  rep.extras = {{"lhs", r.lhs.cost.mean}, {"lhs_std_error", r.lhs.cost.std_error}, {"rhs", r.rhs.mean},
                {"rhs_std_error", r.rhs.std_error}, {"residual", r.residual}, {"tolerance", r.tolerance},
                {"lhs_gap", r.lhs.optimizer_gap}, {"rhs_gap", r.rhs.optimizer_gap}, {"simulations", r.simulations}};
  return rep.finish();
}

// Explicit Euler for dX = -sgn(X) dt: from 0 the scheme must cycle with
// amplitude exactly h; from x0 != 0 it must reach [-h, h] within h of |x0|.
inline CheckReport check_counterexample(const std::vector<double>& step_sizes, double x0, double t_end) {
  const ChatterReport cr = counterexample_demo(step_sizes, x0, t_end);
  CheckReport rep;
  rep.check_name = "counterexample";
  rep.config = {{"step_sizes", step_sizes}, {"x0", x0}, {"T_end", t_end}};
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : cr.runs) {
    const std::string at = "h=" + std::to_string(run.h);
    if (!run.hitting_time) {
      rep.add({"neighbourhood of 0 reached at " + at, 1.0, 0.0, 0.0});
      continue;
    }
    if (x0 == 0.0) {
      rep.add({"|amplitude - h| at " + at, std::abs(run.amplitude - run.h), 0.0, 0.0});
      rep.add({"two-step cycle at " + at, run.two_step_cycle ? 0.0 : 1.0, 0.0, 0.0});
    } else {
      rep.add({"|hitting time - |x0|| <= h at " + at, std::abs(*run.hitting_time - std::abs(x0)), run.h,
               detail::roundoff(run.h)});
    }
    runs.push_back({{"h", run.h}, {"hitting_time", *run.hitting_time}, {"amplitude", run.amplitude},
                    {"amplitude_over_h", run.amplitude / run.h}, {"two_step_cycle", run.two_step_cycle}});
  }
  rep.extras = {{"runs", std::move(runs)}};
  return rep.finish();
}

}  // namespace mkv
