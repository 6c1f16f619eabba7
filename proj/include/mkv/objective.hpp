#pragma once

// Monte Carlo cost J(s, mu; F), value estimates by cross-entropy search over a
// finite policy family, and the dynamic programming residual.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mkv/controls.hpp"
#include "mkv/error.hpp"
#include "mkv/model.hpp"
#include "mkv/parallel.hpp"
#include "mkv/rng.hpp"
#include "mkv/simulate.hpp"

namespace mkv {

struct CostEstimate {
  double mean = 0.0;
  // Plain sample formula. Particles interact, so this is approximate.
  double std_error = 0.0;
  std::size_t particles = 0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline CostEstimate summarize(const std::vector<double>& values, std::size_t steps, std::uint64_t seed) {
  CostEstimate c;
  c.particles = values.size();
  c.steps = steps;
  c.seed = seed;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) {
    c.mean = *lo;
    return c;
  }
  const double n = static_cast<double>(values.size());
  c.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - c.mean) * (v - c.mean);
  c.std_error = std::sqrt(ss / (n - 1.0) / n);
  return c;
}

inline void check_grid_start(const TimeGrid& grid, double s) {
  if (std::abs(grid.start - s) > 1e-12 * std::max(1.0, std::abs(s)))
    throw std::invalid_argument("grid does not start at s");
}

}  // namespace detail

// Running cost on the grid plus the empirical law at its end; used to split
// the horizon.
struct SegmentResult {
  CostEstimate running;
  EmpiricalMeasure terminal_law;
  std::vector<double> running_per_particle;
};

inline SegmentResult run_segment(const ModelSpec& model, const FeedbackPolicy& policy, const TimeGrid& grid,
                                 std::vector<double> initial, std::uint64_t seed, const SimulationOptions& opts = {}) {
  auto r = detail::run_engine(model, policy, grid, std::move(initial), seed, opts, false, true);
  CostEstimate c = detail::summarize(r.running_cost, grid.steps, seed);
  return {c, EmpiricalMeasure(model.state_dim, std::move(r.terminal)), std::move(r.running_cost)};
}

// J from explicit initial states: left-endpoint Riemann sum of the relaxed
// running cost plus g(X_T, mu_T) per particle.
namespace detail {

inline std::vector<double> particle_costs(const ModelSpec& model, const FeedbackPolicy& policy, const TimeGrid& grid,
                                          std::vector<double> initial, std::uint64_t seed,
                                          const SimulationOptions& opts) {
  auto r = detail::run_engine(model, policy, grid, std::move(initial), seed, opts, false, true);
  const std::size_t d = model.state_dim;
  const std::size_t n = r.terminal.size() / d;
  const EmpiricalMeasure terminal(d, r.terminal);
  std::vector<double> total(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double g = model.terminal_cost(std::span<const double>(r.terminal.data() + p * d, d), terminal);
    if (!std::isfinite(g)) throw SimulationError(grid.steps, p, "terminal cost");
    total[p] = r.running_cost[p] + g;
  }
  return total;
}

}  // namespace detail

inline CostEstimate estimate_cost_from_states(const ModelSpec& model, const FeedbackPolicy& policy,
                                              const TimeGrid& grid, std::vector<double> initial, std::uint64_t seed,
                                              const SimulationOptions& opts = {}) {
  return detail::summarize(detail::particle_costs(model, policy, grid, std::move(initial), seed, opts), grid.steps,
                           seed);
}

inline CostEstimate estimate_cost(const ModelSpec& model, const FeedbackPolicy& policy, double s,
                                  const InitialLaw& init, const TimeGrid& grid, std::size_t particles,
                                  std::uint64_t seed, const SimulationOptions& opts = {}) {
  detail::check_grid_start(grid, s);
  if (particles < 2) throw std::invalid_argument("estimate_cost: need at least 2 particles");
  if (init.dim() != model.state_dim) throw std::invalid_argument("estimate_cost: initial law dimension mismatch");
  return estimate_cost_from_states(model, policy, grid, sample_initial(init, particles, seed), seed, opts);
}

// Grid policies with fixed knots, boxes and atoms; the free parameters are one
// logit per (row, atom), mapped to weights by a per-row softmax.
struct PolicyFamily {
  std::vector<double> time_knots;
  std::vector<StateBox> boxes;
  std::vector<std::vector<double>> atoms;
  ControlBox control_box;
  double logit_bound = 10.0;

  std::size_t rows() const noexcept { return (time_knots.size() - 1) * (boxes.size() + 1); }
  std::size_t parameter_count() const noexcept { return rows() * atoms.size(); }
  bool trivial() const noexcept { return atoms.size() == 1; }

  void validate() const {
    if (time_knots.size() < 2) throw std::invalid_argument("policy family: need at least two time knots");
    if (atoms.empty()) throw std::invalid_argument("policy family: empty atom set");
    if (!(logit_bound > 0.0)) throw std::invalid_argument("policy family: logit bound must be positive");
  }

  FeedbackPolicy instantiate(std::span<const double> logits) const {
    validate();
    if (logits.size() != parameter_count())
      throw std::invalid_argument("policy family: expected " + std::to_string(parameter_count()) + " parameters");
    const std::size_t k = atoms.size();
    PolicyGrid g{time_knots, boxes, atoms, {}};
    g.weights.reserve(rows());
    for (std::size_t r = 0; r < rows(); ++r) {
      std::vector<double> row(k);
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        row[j] = std::clamp(logits[r * k + j], -logit_bound, logit_bound);
        top = std::max(top, row[j]);
      }
      double total = 0.0;
      for (double& w : row) total += (w = std::exp(w - top));
      for (double& w : row) w /= total;
      g.weights.push_back(std::move(row));
    }
    return FeedbackPolicy::grid(std::move(g), control_box);
  }

  // Same boxes and atoms on [t0, t1]; knots inside are kept.
  PolicyFamily restricted(double t0, double t1) const {
    if (!(t1 > t0)) throw std::invalid_argument("policy family: empty restriction");
    PolicyFamily out = *this;
    out.time_knots = {t0};
    for (double k : time_knots)
      if (k > t0 && k < t1) out.time_knots.push_back(k);
    out.time_knots.push_back(t1);
    return out;
  }

  // Logits for restricted(t0, t1) that give the same policy as `logits` on
  // [t0, t1): each new cell copies the rows of the cell containing its start.
  std::vector<double> restrict_parameters(std::span<const double> logits, double t0, double t1) const {
    if (logits.size() != parameter_count())
      throw std::invalid_argument("policy family: expected " + std::to_string(parameter_count()) + " parameters");
    const PolicyFamily sub = restricted(t0, t1);
    const std::size_t width = (boxes.size() + 1) * atoms.size();
    std::vector<double> out;
    out.reserve(sub.parameter_count());
    for (std::size_t c = 0; c + 1 < sub.time_knots.size(); ++c) {
      const auto it = std::upper_bound(time_knots.begin(), time_knots.end(), sub.time_knots[c]);
      std::size_t cell = it == time_knots.begin() ? 0 : static_cast<std::size_t>(it - time_knots.begin()) - 1;
      cell = std::min(cell, time_knots.size() - 2);
      out.insert(out.end(), logits.begin() + static_cast<std::ptrdiff_t>(cell * width),
                 logits.begin() + static_cast<std::ptrdiff_t>((cell + 1) * width));
    }
    return out;
  }

  // One time cell, no boxes: a state-independent mixture of the atoms.
  static PolicyFamily constant_mixture(std::vector<std::vector<double>> atoms, ControlBox box, double t0, double t1) {
    return PolicyFamily{{t0, t1}, {}, std::move(atoms), std::move(box)};
  }
};

struct OptimizerConfig {
  std::size_t generations = 40;
  std::size_t population = 32;
  double elite_frac = 0.2;
  double init_spread = 3.0;
  double smoothing = 0.7;
  double min_spread = 0.01;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const {
    if (population < 4) throw std::invalid_argument("optimizer: population must be >= 4");
    if (!(elite_frac > 0.0 && elite_frac < 1.0)) throw std::invalid_argument("optimizer: elite_frac must be in (0,1)");
    if (generations == 0) throw std::invalid_argument("optimizer: generations must be >= 1");
    if (!(init_spread > 0.0)) throw std::invalid_argument("optimizer: init_spread must be positive");
  }

  std::size_t elites() const noexcept {
    const auto e = static_cast<std::size_t>(std::ceil(elite_frac * static_cast<double>(population)));
    return std::clamp<std::size_t>(e, 2, population);
  }

  // Simulations one optimization performs, including the final re-evaluation.
  std::size_t simulations(bool trivial_family) const noexcept {
    return trivial_family ? 1 : generations * population + 1;
  }
};

struct ValueEstimate {
  CostEstimate cost;
  FeedbackPolicy best_policy;
  std::vector<double> best_parameters;
  // Second-best minus best cost in the final generation, so >= 0.
  double optimizer_gap = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

struct CemOutcome {
  std::vector<double> best;
  double best_cost = 0.0;
  double gap = 0.0;
  std::size_t evaluations = 0;
};

// Cross-entropy minimization of score(theta, sim_seed). Generation g scores
// every candidate with the same simulation seed; candidate 0 is the current
// mean, which starts at `start` (zeros when empty). Ties break by candidate
// index.
template <typename Score>
CemOutcome cross_entropy(std::size_t dims, double bound, const OptimizerConfig& cfg, Score&& score,
                         std::span<const double> start = {}) {
  cfg.validate();
  if (!start.empty() && start.size() != dims) throw std::invalid_argument("optimizer: start has the wrong size");
  std::vector<double> mean(dims, 0.0), spread(dims, cfg.init_spread);
  for (std::size_t i = 0; i < start.size(); ++i) mean[i] = std::clamp(start[i], -bound, bound);
  const std::size_t pop = cfg.population;
  const std::size_t n_elite = cfg.elites();
  std::vector<std::vector<double>> cand(pop, std::vector<double>(dims));
  std::vector<double> costs(pop);
  std::vector<std::size_t> order(pop);
  CemOutcome out;

  for (std::size_t g = 0; g < cfg.generations; ++g) {
    const std::uint64_t sim_seed = rng::derive_seed(cfg.seed, 1, static_cast<std::uint32_t>(g));
    for (std::size_t k = 0; k < pop; ++k) {
      rng::Stream s(cfg.seed, rng::Purpose::optimizer, static_cast<std::uint32_t>(g), static_cast<std::uint32_t>(k));
      for (std::size_t i = 0; i < dims; ++i)
        cand[k][i] = std::clamp(k == 0 ? mean[i] : mean[i] + spread[i] * s.normal(), -bound, bound);
    }
    parallel_for(pop, cfg.threads, [&](std::size_t begin, std::size_t end, std::size_t) {
      for (std::size_t k = begin; k < end; ++k) {
        double c = std::numeric_limits<double>::infinity();
        try {
          c = score(std::span<const double>(cand[k]), sim_seed);
        } catch (const NumericalError&) {
        }
        costs[k] = std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
      }
    });
    out.evaluations += pop;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return costs[a] != costs[b] ? costs[a] < costs[b] : a < b;
    });
    if (!std::isfinite(costs[order[0]]))
      throw NumericalError("optimizer: every candidate in generation " + std::to_string(g) +
                           " produced a non-finite cost");

    std::vector<double> m(dims, 0.0), v(dims, 0.0);
    for (std::size_t e = 0; e < n_elite; ++e)
      for (std::size_t i = 0; i < dims; ++i) m[i] += cand[order[e]][i] / static_cast<double>(n_elite);
    for (std::size_t e = 0; e < n_elite; ++e)
      for (std::size_t i = 0; i < dims; ++i) {
        const double dev = cand[order[e]][i] - m[i];
        v[i] += dev * dev / static_cast<double>(n_elite - 1);
      }
    for (std::size_t i = 0; i < dims; ++i) {
      mean[i] = cfg.smoothing * m[i] + (1.0 - cfg.smoothing) * mean[i];
      spread[i] = std::max(cfg.min_spread, cfg.smoothing * std::sqrt(v[i]) + (1.0 - cfg.smoothing) * spread[i]);
    }

    if (g + 1 == cfg.generations) {
      out.best = cand[order[0]];
      out.best_cost = costs[order[0]];
      const double second = costs[order[1]];
      out.gap = std::isfinite(second) ? second - out.best_cost : 0.0;
    }
  }
  return out;
}

inline std::uint64_t fresh_seed(const OptimizerConfig& cfg) { return rng::derive_seed(cfg.seed, 2, 0); }

}  // namespace detail

// inf over the family of J(s, init; F), by cross-entropy search with common
// random numbers inside each generation. The winner is re-estimated with
// final_particles on a seed no candidate saw. A non-empty start sets the
// initial search mean.
inline ValueEstimate optimize_policy(const ModelSpec& model, const PolicyFamily& family, double s,
                                     const InitialLaw& init, const TimeGrid& grid, std::size_t particles,
                                     const OptimizerConfig& cfg, std::optional<std::size_t> final_particles = {},
                                     std::span<const double> start = {}) {
  cfg.validate();
  family.validate();
  detail::check_grid_start(grid, s);
  const std::size_t n_final = final_particles.value_or(particles);
  const std::uint64_t fresh = detail::fresh_seed(cfg);
  const SimulationOptions final_opts{cfg.threads};

  if (family.trivial()) {
    std::vector<double> theta(family.parameter_count(), 0.0);
    FeedbackPolicy policy = family.instantiate(theta);
    CostEstimate c = estimate_cost(model, policy, s, init, grid, n_final, fresh, final_opts);
    return {c, std::move(policy), std::move(theta), 0.0, 1};
  }

  auto outcome = detail::cross_entropy(family.parameter_count(), family.logit_bound, cfg,
                                       [&](std::span<const double> theta, std::uint64_t seed) {
                                         return estimate_cost(model, family.instantiate(theta), s, init, grid,
                                                              particles, seed)
                                             .mean;
                                       },
                                       start);
  FeedbackPolicy policy = family.instantiate(outcome.best);
  CostEstimate c = estimate_cost(model, policy, s, init, grid, n_final, fresh, final_opts);
  return {c, std::move(policy), std::move(outcome.best), outcome.gap, outcome.evaluations + 1};
}

// optimize_policy with the final re-evaluation at 4N particles.
inline ValueEstimate estimate_value(const ModelSpec& model, const PolicyFamily& family, double s,
                                    const InitialLaw& init, const TimeGrid& grid, std::size_t particles,
                                    const OptimizerConfig& cfg, std::span<const double> start = {}) {
  return optimize_policy(model, family, s, init, grid, particles, cfg, 4 * particles, start);
}

struct DppConfig {
  OptimizerConfig outer;  // lhs search and the [s, t_mid] search
  OptimizerConfig inner;  // continuation values V(t_mid, .)
  std::size_t max_simulations = 2'000'000;
  double sigma_multiplier = 3.0;
};

struct DppRhs {
  CostEstimate running;        // on [s, t_mid], 4N particles
  std::optional<ValueEstimate> continuation;  // V(t_mid, law at t_mid)
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> best_parameters;
  double optimizer_gap = 0.0;
};

struct DppResult {
  ValueEstimate lhs;
  DppRhs rhs;
  double residual = 0.0;
  double tolerance = 0.0;
  std::size_t simulations = 0;

  bool within_tolerance() const noexcept { return std::abs(residual) <= tolerance; }
  bool lower_side_holds() const noexcept { return residual >= -tolerance; }
};

inline std::size_t dpp_simulation_count(const PolicyFamily& family, const DppConfig& cfg) {
  const bool trivial = family.trivial();
  const std::size_t inner = cfg.inner.simulations(trivial);
  const std::size_t outer_candidates = trivial ? 1 : cfg.outer.generations * cfg.outer.population + 1;
  return cfg.outer.simulations(trivial) + outer_candidates * (1 + inner);
}

// V(s, mu) against inf over the family on [s, t_mid] of
// E[int_s^t_mid f dr] + V(t_mid, law at t_mid). The continuation restarts from
// the empirical law at t_mid, drawing particles with replacement. Both
// searches on the right start from the lhs winner cut at t_mid, so the split
// of that policy is always among the first candidates.
inline DppResult dpp_residual(const ModelSpec& model, const PolicyFamily& family, double s, double t_mid,
                              const InitialLaw& init, const TimeGrid& grid, std::size_t particles,
                              const DppConfig& cfg) {
  detail::check_grid_start(grid, s);
  if (!(s < t_mid && t_mid < grid.end)) throw std::invalid_argument("dpp_residual: need s < t_mid < T");
  const double frac = (t_mid - s) / (grid.end - s);
  const auto m1 = static_cast<std::size_t>(std::llround(static_cast<double>(grid.steps) * frac));
  if (m1 == 0 || m1 >= grid.steps) throw std::invalid_argument("dpp_residual: grid too coarse to split at t_mid");
  const TimeGrid first{s, t_mid, m1};
  const TimeGrid second{t_mid, grid.end, grid.steps - m1};

  const std::size_t needed = dpp_simulation_count(family, cfg);
  if (cfg.max_simulations > 0 && needed > cfg.max_simulations)
    throw BudgetError("dpp_residual: nested optimization needs " + std::to_string(needed) +
                      " simulations, budget is " + std::to_string(cfg.max_simulations));

  DppResult out{estimate_value(model, family, s, init, grid, particles, cfg.outer), {}, 0.0, 0.0, 0};
  const PolicyFamily head = family.restricted(s, t_mid);
  const PolicyFamily tail = family.restricted(t_mid, grid.end);
  const auto& whole = out.lhs.best_parameters;
  const std::vector<double> head_start = family.restrict_parameters(whole, s, t_mid);
  const std::vector<double> tail_start = family.restrict_parameters(whole, t_mid, grid.end);

  auto continuation = [&](std::span<const double> theta, std::uint64_t seed, std::size_t n, std::uint64_t inner_seed,
                          std::size_t threads) {
    const FeedbackPolicy policy = head.instantiate(theta);
    SegmentResult seg = run_segment(model, policy, first, sample_initial(init, n, seed), seed, {threads});
    OptimizerConfig inner = cfg.inner;
    inner.seed = inner_seed;
    inner.threads = threads;
    ValueEstimate v =
        estimate_value(model, tail, t_mid, InitialLaw::empirical(seg.terminal_law), second, particles, inner,
                       tail_start);
    return std::pair{std::move(seg), std::move(v)};
  };

  std::vector<double> best = head_start;
  double outer_gap = 0.0;
  if (!head.trivial()) {
    auto outcome = detail::cross_entropy(head.parameter_count(), head.logit_bound, cfg.outer,
                                         [&](std::span<const double> theta, std::uint64_t seed) {
                                           auto [seg, v] = continuation(theta, seed, particles,
                                                                        rng::derive_seed(seed, 3), 1);
                                           return seg.running.mean + v.cost.mean;
                                         },
                                         head_start);
    best = std::move(outcome.best);
    outer_gap = outcome.gap;
  }
  const std::uint64_t fresh = rng::derive_seed(cfg.outer.seed, 4);
  auto [seg, v] = continuation(best, fresh, 4 * particles, rng::derive_seed(fresh, 3), cfg.outer.threads);

  // Replay the continuation's final evaluation and charge each restarted
  // particle to the t_mid particle it was drawn from. The standard error of
  // these per-source totals covers repeated draws and the shared path before
  // t_mid.
  OptimizerConfig inner = cfg.inner;
  inner.seed = rng::derive_seed(fresh, 3);
  const std::uint64_t cont_seed = detail::fresh_seed(inner);
  const InitialLaw mid = InitialLaw::empirical(seg.terminal_law);
  const std::size_t n = seg.running_per_particle.size();
  const auto source = sample_indices(mid, n, cont_seed);
  const auto cont = detail::particle_costs(model, v.best_policy, second, sample_initial(mid, n, cont_seed), cont_seed,
                                           {cfg.outer.threads});
  // Continuation costs are centred: the number of draws is fixed, so only
  // deviations move between sources.
  const double cont_mean = std::accumulate(cont.begin(), cont.end(), 0.0) / static_cast<double>(n);
  std::vector<double> per_source = seg.running_per_particle;
  for (std::size_t i = 0; i < n; ++i) per_source[source[i]] += cont[i] - cont_mean;
  CostEstimate total = detail::summarize(per_source, grid.steps, fresh);
  total.mean += cont_mean;

  out.rhs.running = seg.running;
  out.rhs.mean = total.mean;
  out.rhs.std_error = total.std_error;
  out.rhs.optimizer_gap = outer_gap + v.optimizer_gap;
  out.rhs.best_parameters = std::move(best);
  out.rhs.continuation = std::move(v);
  out.residual = out.lhs.cost.mean - out.rhs.mean;
  out.tolerance = cfg.sigma_multiplier * std::hypot(out.lhs.cost.std_error, out.rhs.std_error) +
                  out.lhs.optimizer_gap + out.rhs.optimizer_gap;
  out.simulations = needed;
  return out;
}

}  // namespace mkv
