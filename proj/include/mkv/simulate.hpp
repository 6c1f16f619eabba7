#pragma once

// Interacting-particle Euler-Maruyama scheme for the controlled McKean-Vlasov
// SDE dX = <b(t, X, L_X, .), alpha_t> dt + sigma(t, X, L_X) dW with
// alpha_t = F_t(X_t). The law L_{X_t} is replaced by the empirical measure of
// all N particles, frozen at the left endpoint of each step.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mkv/controls.hpp"
#include "mkv/error.hpp"
#include "mkv/measures.hpp"
#include "mkv/model.hpp"
#include "mkv/model_zoo.hpp"
#include "mkv/parallel.hpp"
#include "mkv/rng.hpp"
#include "mkv/transport.hpp"

namespace mkv {

// Uniform grid on [start, end] with `steps` cells.
struct TimeGrid {
  double start = 0.0;
  double end = 1.0;
  std::size_t steps = 1;

  double dt() const noexcept { return (end - start) / static_cast<double>(steps); }
  double time(std::size_t i) const noexcept { return i == steps ? end : start + static_cast<double>(i) * dt(); }

  void validate() const {
    if (steps == 0) throw std::invalid_argument("time grid: steps must be >= 1");
    if (!(start >= 0.0) || !(end > start) || !std::isfinite(end))
      throw std::invalid_argument("time grid: need 0 <= s < T");
  }

  void validate(const ModelSpec& model) const {
    validate();
    if (end > model.horizon * (1.0 + 1e-12) + 1e-12)
      throw std::invalid_argument("time grid ends after the model horizon");
  }

  // Index of a grid time, or nullopt when t is off-grid.
  std::optional<std::size_t> index_of(double t) const noexcept {
    const double pos = (t - start) / dt();
    const double rounded = std::round(pos);
    if (rounded < 0.0 || rounded > static_cast<double>(steps)) return std::nullopt;
    const auto i = static_cast<std::size_t>(rounded);
    if (std::abs(time(i) - t) > 1e-9 * (end - start)) return std::nullopt;
    return i;
  }
};

// Law of the initial condition: a named sampler or an empirical measure.
// Samplers map uniforms through per-coordinate quantile functions, so two
// laws fed the same uniforms are comonotonically coupled.
class InitialLaw {
 public:
  enum class Kind { dirac, gaussian, uniform, empirical };

  static InitialLaw dirac(std::vector<double> point) {
    if (point.empty()) throw std::invalid_argument("initial law: empty point");
    InitialLaw law(Kind::dirac, point.size());
    law.a_ = std::move(point);
    return law;
  }

  static InitialLaw gaussian(std::vector<double> mean, std::vector<double> stddev) {
    if (mean.empty() || mean.size() != stddev.size()) throw std::invalid_argument("initial law: gaussian shape mismatch");
    for (double s : stddev)
      if (!(s >= 0.0)) throw std::invalid_argument("initial law: negative standard deviation");
    InitialLaw law(Kind::gaussian, mean.size());
    law.a_ = std::move(mean);
    law.b_ = std::move(stddev);
    return law;
  }

  static InitialLaw uniform(std::vector<double> lo, std::vector<double> hi) {
    if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("initial law: uniform shape mismatch");
    for (std::size_t c = 0; c < lo.size(); ++c)
      if (!(lo[c] <= hi[c])) throw std::invalid_argument("initial law: uniform box is empty");
    InitialLaw law(Kind::uniform, lo.size());
    law.a_ = std::move(lo);
    law.b_ = std::move(hi);
    return law;
  }

  static InitialLaw empirical(EmpiricalMeasure mu) {
    InitialLaw law(Kind::empirical, mu.dim());
    // Atoms in lexicographic order with cumulative weights; in 1-D this makes
    // inverse-CDF sampling the quantile map.
    std::vector<std::size_t> order(mu.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return detail::lex_less(mu.atom(i), mu.atom(j)); });
    law.order_ = std::move(order);
    law.cumulative_.resize(mu.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < law.order_.size(); ++k) {
      acc += mu.weight(law.order_[k]);
      law.cumulative_[k] = acc;
    }
    law.measure_ = std::make_shared<const EmpiricalMeasure>(std::move(mu));
    return law;
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<double>& first_parameter() const noexcept { return a_; }
  const std::vector<double>& second_parameter() const noexcept { return b_; }
  const EmpiricalMeasure* measure() const noexcept { return measure_.get(); }

  // Exact discrete representation, when there is one.
  std::optional<EmpiricalMeasure> as_measure() const {
    if (kind_ == Kind::dirac) return EmpiricalMeasure::dirac(a_);
    if (kind_ == Kind::empirical) return *measure_;
    return std::nullopt;
  }

  std::size_t uniforms_needed() const noexcept { return kind_ == Kind::empirical ? 1 : dim_; }

  // Atom index selected by a uniform in [0,1).
  std::size_t atom_for(double u) const noexcept {
    const double target = u * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), order_.size() - 1);
    return order_[k];
  }

  // Maps uniforms in (0,1) to a point.
  void sample_into(std::span<const double> uniforms, std::span<double> out) const {
    switch (kind_) {
      case Kind::dirac: std::copy(a_.begin(), a_.end(), out.begin()); return;
      case Kind::gaussian:
        for (std::size_t c = 0; c < dim_; ++c) out[c] = a_[c] + b_[c] * rng::normal_quantile(uniforms[c]);
        return;
      case Kind::uniform:
        for (std::size_t c = 0; c < dim_; ++c) out[c] = a_[c] + (b_[c] - a_[c]) * uniforms[c];
        return;
      case Kind::empirical: {
        const auto x = measure_->atom(atom_for(uniforms[0]));
        std::copy(x.begin(), x.end(), out.begin());
        return;
      }
    }
  }

 private:
  InitialLaw(Kind kind, std::size_t dim) : kind_(kind), dim_(dim) {}

  Kind kind_;
  std::size_t dim_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::shared_ptr<const EmpiricalMeasure> measure_;
  std::vector<std::size_t> order_;
  std::vector<double> cumulative_;
};

// N independent draws, row-major N x d, from stream (seed, purpose, p).
inline std::vector<double> sample_initial(const InitialLaw& law, std::size_t n, std::uint64_t seed,
                                          rng::Purpose purpose = rng::Purpose::initial) {
  const std::size_t d = law.dim();
  std::vector<double> out(n * d);
  std::vector<double> u(law.uniforms_needed());
  for (std::size_t p = 0; p < n; ++p) {
    rng::Stream s(seed, purpose, static_cast<std::uint32_t>(p));
    for (double& v : u) v = s.uniform_open();
    law.sample_into(u, std::span<double>(out.data() + p * d, d));
  }
  return out;
}

// Atoms of an empirical law that sample_initial picks with the same seed.
inline std::vector<std::size_t> sample_indices(const InitialLaw& law, std::size_t n, std::uint64_t seed,
                                               rng::Purpose purpose = rng::Purpose::initial) {
  if (law.kind() != InitialLaw::Kind::empirical) throw std::invalid_argument("sample_indices: law is not empirical");
  std::vector<std::size_t> out(n);
  for (std::size_t p = 0; p < n; ++p) {
    rng::Stream s(seed, purpose, static_cast<std::uint32_t>(p));
    out[p] = law.atom_for(s.uniform_open());
  }
  return out;
}

// Coupled draws (xi_p, xi~_p) with E|xi - xi~| close to W_1 of the two laws:
// shared uniforms through quantile maps in 1-D or for two samplers, and an
// exact optimal transport plan for two empirical laws in d >= 2.
inline std::pair<std::vector<double>, std::vector<double>> sample_coupled(const InitialLaw& a, const InitialLaw& b,
                                                                          std::size_t n, std::uint64_t seed) {
  if (a.dim() != b.dim()) throw std::invalid_argument("sample_coupled: dimension mismatch");
  const std::size_t d = a.dim();
  const bool a_emp = a.kind() == InitialLaw::Kind::empirical;
  const bool b_emp = b.kind() == InitialLaw::Kind::empirical;
  std::vector<double> xa(n * d), xb(n * d);

  if (d >= 2 && a_emp && b_emp) {
    const Coupling plan = optimal_coupling(*a.measure(), *b.measure(), 1);
    std::vector<double> cumulative(plan.plan.size());
    std::partial_sum(plan.plan.begin(), plan.plan.end(), cumulative.begin());
    for (std::size_t p = 0; p < n; ++p) {
      rng::Stream s(seed, rng::Purpose::initial, static_cast<std::uint32_t>(p));
      const double target = s.uniform() * cumulative.back();
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
      std::size_t cell = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
      while (plan.plan[cell] <= 0.0 && cell > 0) --cell;
      const auto x = a.measure()->atom(cell / plan.cols);
      const auto y = b.measure()->atom(cell % plan.cols);
      std::copy(x.begin(), x.end(), xa.begin() + static_cast<std::ptrdiff_t>(p * d));
      std::copy(y.begin(), y.end(), xb.begin() + static_cast<std::ptrdiff_t>(p * d));
    }
    return {std::move(xa), std::move(xb)};
  }
  if (d >= 2 && (a_emp || b_emp))
    throw std::invalid_argument("sample_coupled: mixing an empirical law with a sampler needs d = 1");

  const std::size_t k = std::max(a.uniforms_needed(), b.uniforms_needed());
  std::vector<double> u(k);
  for (std::size_t p = 0; p < n; ++p) {
    rng::Stream s(seed, rng::Purpose::initial, static_cast<std::uint32_t>(p));
    for (double& v : u) v = s.uniform_open();
    a.sample_into(u, std::span<double>(xa.data() + p * d, d));
    b.sample_into(u, std::span<double>(xb.data() + p * d, d));
  }
  return {std::move(xa), std::move(xb)};
}

struct SimulationOptions {
  std::size_t threads = 1;
};

// Particle trajectories and the Brownian increments that drove them.
// states[(p * (M + 1) + i) * d + c], noises[(p * M + i) * d + c]. The increment
// of particle p at step i comes from Philox stream (seed, brownian, p, i).
struct PathBundle {
  TimeGrid grid;
  std::size_t particles = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::vector<double> states;
  std::vector<double> noises;

  std::span<const double> state(std::size_t p, std::size_t i) const noexcept {
    return {states.data() + (p * (grid.steps + 1) + i) * dim, dim};
  }
  std::span<const double> noise(std::size_t p, std::size_t i) const noexcept {
    return {noises.data() + (p * grid.steps + i) * dim, dim};
  }

  std::vector<double> states_at(std::size_t i) const {
    std::vector<double> out(particles * dim);
    for (std::size_t p = 0; p < particles; ++p) {
      const auto x = state(p, i);
      std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(p * dim));
    }
    return out;
  }

  EmpiricalMeasure law_at(std::size_t i) const { return EmpiricalMeasure(dim, states_at(i)); }
  EmpiricalMeasure terminal_law() const { return law_at(grid.steps); }

  static std::string stream_scheme() { return "philox4x32-10(key=seed; counter=[particle, step, block, purpose=1])"; }
};

namespace detail {

struct EngineResult {
  std::vector<double> terminal;      // N x d
  std::vector<double> running_cost;  // per particle, left-endpoint Riemann sum
  std::vector<double> states;        // filled when recording
  std::vector<double> noises;
};

// Core stepping loop shared by simulation and cost estimation.
inline EngineResult run_engine(const ModelSpec& model, const FeedbackPolicy& policy, const TimeGrid& grid,
                               std::vector<double> initial, std::uint64_t seed, const SimulationOptions& opts,
                               bool record, bool accumulate_cost) {
  model.validate();
  grid.validate(model);
  const std::size_t d = model.state_dim;
  if (initial.empty() || initial.size() % d != 0) throw std::invalid_argument("simulation: bad initial state array");
  const std::size_t n = initial.size() / d;
  if (n < 2) throw std::invalid_argument("simulation: need at least 2 particles");
  const std::size_t steps = grid.steps;
  if (!policy.covers(grid.start) || !policy.covers(grid.time(steps - 1)))
    throw std::invalid_argument("simulation: policy time domain does not cover the grid");
  for (double c : initial)
    if (!std::isfinite(c)) throw std::invalid_argument("simulation: non-finite initial state");

  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  EngineResult out;
  if (record) {
    out.states.assign(n * (steps + 1) * d, 0.0);
    out.noises.assign(n * steps * d, 0.0);
    for (std::size_t p = 0; p < n; ++p)
      std::copy_n(initial.begin() + static_cast<std::ptrdiff_t>(p * d), d,
                  out.states.begin() + static_cast<std::ptrdiff_t>(p * (steps + 1) * d));
  }
  if (accumulate_cost) out.running_cost.assign(n, 0.0);

  std::vector<double> current = std::move(initial);
  std::vector<double> next(n * d);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = grid.time(i);
    const EmpiricalMeasure law(d, current);
    parallel_for(n, opts.threads, [&](std::size_t begin, std::size_t end, std::size_t) {
      std::vector<double> drift(d), scratch(d), sigma(d * d), dw(d);
      for (std::size_t p = begin; p < end; ++p) {
        const std::span<const double> x(current.data() + p * d, d);
        const ControlMeasure& alpha = policy.measure(t, x);
        drift_relaxed_into(model, t, x, law, alpha, drift, scratch);
        model.diffusion(t, x, law, sigma);
        rng::Stream stream(seed, rng::Purpose::brownian, static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(i));
        for (std::size_t c = 0; c < d; ++c) dw[c] = sqrt_dt * stream.normal();
        if (accumulate_cost) {
          const double f = running_cost_relaxed(model, t, x, law, alpha);
          if (!std::isfinite(f)) throw SimulationError(i, p, "running cost");
          out.running_cost[p] += f * dt;
        }
        double* y = next.data() + p * d;
        for (std::size_t r = 0; r < d; ++r) {
          double diffusion = 0.0;
          for (std::size_t c = 0; c < d; ++c) diffusion += sigma[r * d + c] * dw[c];
          y[r] = x[r] + drift[r] * dt + diffusion;
          if (!std::isfinite(y[r])) throw SimulationError(i, p, "coefficient evaluation");
        }
        if (record) {
          std::copy_n(y, d, out.states.begin() + static_cast<std::ptrdiff_t>((p * (steps + 1) + i + 1) * d));
          std::copy_n(dw.begin(), d, out.noises.begin() + static_cast<std::ptrdiff_t>((p * steps + i) * d));
        }
      }
    });
    std::swap(current, next);
  }
  out.terminal = std::move(current);
  return out;
}

inline PathBundle bundle_from(EngineResult&& r, const TimeGrid& grid, std::size_t d, std::uint64_t seed) {
  PathBundle b;
  b.grid = grid;
  b.dim = d;
  b.seed = seed;
  b.particles = r.terminal.size() / d;
  b.states = std::move(r.states);
  b.noises = std::move(r.noises);
  return b;
}

}  // namespace detail

// Runs the particle system from explicit initial states (row-major N x d).
inline PathBundle simulate_from_states(const ModelSpec& model, const FeedbackPolicy& policy, const TimeGrid& grid,
                                       std::vector<double> initial, std::uint64_t seed,
                                       const SimulationOptions& opts = {}) {
  auto r = detail::run_engine(model, policy, grid, std::move(initial), seed, opts, true, false);
  return detail::bundle_from(std::move(r), grid, model.state_dim, seed);
}

inline PathBundle simulate_ensemble(const ModelSpec& model, const FeedbackPolicy& policy, const TimeGrid& grid,
                                    const InitialLaw& init, std::size_t particles, std::uint64_t seed,
                                    const SimulationOptions& opts = {}) {
  if (particles < 2) throw std::invalid_argument("simulate_ensemble: need at least 2 particles");
  if (init.dim() != model.state_dim) throw std::invalid_argument("simulate_ensemble: initial law dimension mismatch");
  return simulate_from_states(model, policy, grid, sample_initial(init, particles, seed), seed, opts);
}

// Restarts the system at t_mid from a given law: particles are drawn with
// replacement from law_at_t, then advanced on grid2 = [t_mid, T].
inline PathBundle restart_from_empirical(const ModelSpec& model, const FeedbackPolicy& policy, double t_mid,
                                         const EmpiricalMeasure& law_at_t, const TimeGrid& grid2,
                                         std::size_t particles, std::uint64_t seed,
                                         const SimulationOptions& opts = {}) {
  if (std::abs(grid2.start - t_mid) > 1e-12 * std::max(1.0, std::abs(t_mid)))
    throw std::invalid_argument("restart_from_empirical: grid does not start at t_mid");
  if (law_at_t.dim() != model.state_dim) throw std::invalid_argument("restart_from_empirical: law dimension mismatch");
  if (particles < 2) throw std::invalid_argument("restart_from_empirical: need at least 2 particles");
  const InitialLaw law = InitialLaw::empirical(law_at_t);
  return simulate_from_states(model, policy, grid2, sample_initial(law, particles, seed, rng::Purpose::resample), seed,
                              opts);
}

struct ModulusEstimate {
  double t = 0.0;
  double s = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
};

inline ModulusEstimate path_modulus_at(const PathBundle& bundle, std::size_t i, std::size_t j) {
  const std::size_t n = bundle.particles;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double r = detail::distance(bundle.state(p, i), bundle.state(p, j));
    sum += r;
    sum_sq += r * r;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
  return {bundle.grid.time(i), bundle.grid.time(j), mean, std::sqrt(var / static_cast<double>(n))};
}

// Sample mean of |X_t - X_s| with its standard error, per (t, s) pair.
inline std::vector<ModulusEstimate> path_modulus(const PathBundle& bundle,
                                                 const std::vector<std::pair<double, double>>& time_pairs) {
  std::vector<ModulusEstimate> out;
  out.reserve(time_pairs.size());
  for (const auto& [t, s] : time_pairs) {
    const auto i = bundle.grid.index_of(t);
    const auto j = bundle.grid.index_of(s);
    if (!i || !j) throw std::invalid_argument("path_modulus: time is not on the bundle's grid");
    out.push_back(path_modulus_at(bundle, *i, *j));
  }
  return out;
}

struct ChatterRun {
  double h = 0.0;
  std::size_t steps = 0;
  std::vector<double> path;
  std::optional<double> hitting_time;  // first t with |X_t| <= h
  std::size_t hitting_step = 0;
  double amplitude = 0.0;              // max - min of X after the hitting step
  bool two_step_cycle = false;         // X_{i+2} == X_i exactly from the hitting step on
};

struct ChatterReport {
  double x0 = 0.0;
  double t_end = 0.0;
  std::vector<ChatterRun> runs;
  // amplitude / h for each run; proportionality means these agree.
  std::vector<double> amplitude_over_h;
};

// Explicit Euler for dX = -sgn(X) dt with sgn(0) = -1.
inline ChatterReport counterexample_demo(const std::vector<double>& step_sizes, double x0, double t_end) {
  if (!(t_end > 0.0)) throw std::invalid_argument("counterexample_demo: T_end must be positive");
  ChatterReport report;
  report.x0 = x0;
  report.t_end = t_end;
  for (double h : step_sizes) {
    if (!(h > 0.0)) throw std::invalid_argument("counterexample_demo: step sizes must be positive");
    ChatterRun run;
    run.h = h;
    run.steps = static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));
    run.path.reserve(run.steps + 1);
    double x = x0;
    run.path.push_back(x);
    for (std::size_t i = 0; i < run.steps; ++i) {
      x = x - h * sgn_left(x);
      run.path.push_back(x);
    }
    for (std::size_t i = 0; i < run.path.size(); ++i)
      if (std::abs(run.path[i]) <= h) {
        run.hitting_time = static_cast<double>(i) * h;
        run.hitting_step = i;
        break;
      }
    if (run.hitting_time) {
      const auto tail = std::span<const double>(run.path).subspan(run.hitting_step);
      const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
      run.amplitude = *hi - *lo;
      run.two_step_cycle = tail.size() >= 3;
      for (std::size_t i = 0; i + 2 < tail.size() && run.two_step_cycle; ++i)
        run.two_step_cycle = tail[i + 2] == tail[i];
    }
    report.amplitude_over_h.push_back(run.amplitude / h);
    report.runs.push_back(std::move(run));
  }
  return report;
}

namespace io {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
  os.write(bytes, 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char bytes[8];
  is.read(reinterpret_cast<char*>(bytes), 8);
  if (!is) throw std::runtime_error("binary path bundle: truncated input");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= std::uint64_t{bytes[k]} << (8 * k);
  return v;
}

// Header: N, M, d, seed as little-endian u64. Then the state block
// (particle, step, coordinate order) and the noise block, as little-endian f64.
inline void write_binary(const PathBundle& b, std::ostream& os) {
  put_u64(os, b.particles);
  put_u64(os, b.grid.steps);
  put_u64(os, b.dim);
  put_u64(os, b.seed);
  for (double v : b.states) put_u64(os, std::bit_cast<std::uint64_t>(v));
  for (double v : b.noises) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

// The header carries no time range; the caller supplies it.
inline PathBundle read_binary(std::istream& is, double start, double end) {
  PathBundle b;
  b.particles = get_u64(is);
  b.grid = TimeGrid{start, end, get_u64(is)};
  b.dim = get_u64(is);
  b.seed = get_u64(is);
  b.states.resize(b.particles * (b.grid.steps + 1) * b.dim);
  b.noises.resize(b.particles * b.grid.steps * b.dim);
  for (double& v : b.states) v = std::bit_cast<double>(get_u64(is));
  for (double& v : b.noises) v = std::bit_cast<double>(get_u64(is));
  return b;
}

// Columns: step, particle, x0..x{d-1}; rows by step, then particle.
inline void write_csv(const PathBundle& b, std::ostream& os) {
  os << "step,particle";
  for (std::size_t c = 0; c < b.dim; ++c) os << ",x" << c;
  os << '\n';
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i <= b.grid.steps; ++i)
    for (std::size_t p = 0; p < b.particles; ++p) {
      os << i << ',' << p;
      for (double v : b.state(p, i)) os << ',' << v;
      os << '\n';
    }
  os.precision(old_precision);
}

}  // namespace io

}  // namespace mkv
