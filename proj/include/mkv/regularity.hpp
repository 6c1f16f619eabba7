#pragma once

// Sampled lower-bound estimators for the regularity constants a model
// declares: Lipschitz quotients for (b, sigma, f, g) and the ellipticity
// ratio of a = sigma sigma^T.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkv/model.hpp"
#include "mkv/rng.hpp"
#include "mkv/transport.hpp"

namespace mkv {

enum class Coefficient { drift, diffusion, running_cost, terminal_cost };

inline std::string to_string(Coefficient c) {
  switch (c) {
    case Coefficient::drift: return "b_in_x_mu_t";
    case Coefficient::diffusion: return "sigma";
    case Coefficient::running_cost: return "f";
    case Coefficient::terminal_cost: return "g";
  }
  return "?";
}

inline Coefficient coefficient_from_string(const std::string& s) {
  if (s == "b_in_x_mu_t" || s == "b") return Coefficient::drift;
  if (s == "sigma") return Coefficient::diffusion;
  if (s == "f") return Coefficient::running_cost;
  if (s == "g") return Coefficient::terminal_cost;
  throw std::invalid_argument("unknown coefficient '" + s + "'");
}

// Where the sampler draws inputs: states in [state_lo, state_hi]^d, times in
// [0, T], measures with 1..max_atoms atoms inside the same box.
struct SamplerConfig {
  double state_lo = -2.0;
  double state_hi = 2.0;
  std::size_t max_atoms = 32;
  std::uint64_t seed = 1;
};

struct SampledInput {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> mu_atoms;  // uniform weights
  std::vector<double> u;
};

struct RegularityReport {
  std::string constant_name;
  double empirical_estimate = 0.0;  // max quotient with W_1 in the denominator
  double truncated_estimate = 0.0;  // same pairs with the truncated distance
  std::size_t sample_count = 0;
  std::size_t degenerate_resamples = 0;
  SampledInput max_pair_first;
  SampledInput max_pair_second;
  // Ellipticity only.
  double min_quotient = std::numeric_limits<double>::infinity();
  double max_quotient = 0.0;
  bool violated = false;
};

namespace detail {

inline EmpiricalMeasure measure_from(const SampledInput& in, std::size_t d) {
  return EmpiricalMeasure(d, in.mu_atoms);
}

inline SampledInput draw_input(rng::Stream& s, const ModelSpec& model, const SamplerConfig& cfg) {
  SampledInput in;
  const std::size_t d = model.state_dim;
  const double width = cfg.state_hi - cfg.state_lo;
  in.t = model.horizon * s.uniform();
  in.x.resize(d);
  for (double& c : in.x) c = cfg.state_lo + width * s.uniform();
  const std::size_t atoms = 1 + static_cast<std::size_t>(s.below(std::max<std::size_t>(1, cfg.max_atoms)));
  in.mu_atoms.resize(atoms * d);
  for (double& c : in.mu_atoms) c = cfg.state_lo + width * s.uniform();
  in.u.resize(model.control_dim);
  for (std::size_t c = 0; c < model.control_dim; ++c)
    in.u[c] = model.control_box.lo[c] + (model.control_box.hi[c] - model.control_box.lo[c]) * s.uniform();
  return in;
}

inline std::vector<double> evaluate(const ModelSpec& model, Coefficient which, const SampledInput& in) {
  const EmpiricalMeasure mu = measure_from(in, model.state_dim);
  const std::size_t d = model.state_dim;
  switch (which) {
    case Coefficient::drift: {
      std::vector<double> out(d);
      model.drift(in.t, in.x, mu, in.u, out);
      return out;
    }
    case Coefficient::diffusion: {
      std::vector<double> out(d * d);
      model.diffusion(in.t, in.x, mu, out);
      return out;
    }
    case Coefficient::running_cost: return {model.running_cost(in.t, in.x, mu, in.u)};
    case Coefficient::terminal_cost: return {model.terminal_cost(in.x, mu)};
  }
  return {};
}

}  // namespace detail

// Maximum of |value(a) - value(b)| / (|t_a - t_b| + |x_a - x_b| + W_1(mu_a, mu_b))
// over n_pairs sampled pairs. Each pair perturbs a random nonempty subset of
// (t, x, mu); the control atom is shared. Measures are perturbed either by a
// rigid translation or by an independent redraw. The result is a lower bound
// on the true constant; with a fixed seed it is nondecreasing in n_pairs.
inline RegularityReport estimate_lipschitz(const ModelSpec& model, Coefficient which, const SamplerConfig& cfg,
                                           std::size_t n_pairs) {
  model.validate();
  if (n_pairs == 0) throw std::invalid_argument("estimate_lipschitz: n_pairs must be >= 1");
  if (!(cfg.state_hi > cfg.state_lo)) throw std::invalid_argument("estimate_lipschitz: empty sampling box");
  const std::size_t d = model.state_dim;
  const bool uses_time = which != Coefficient::terminal_cost;
  constexpr std::size_t kAttempts = 16;
  constexpr double kDegenerate = 1e-14;

  RegularityReport report;
  report.constant_name = to_string(which);
  for (std::size_t pair = 0; pair < n_pairs; ++pair) {
    rng::Stream s(cfg.seed, rng::Purpose::regularity, static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(which));
    bool done = false;
    for (std::size_t attempt = 0; attempt < kAttempts && !done; ++attempt) {
      const SampledInput a = detail::draw_input(s, model, cfg);
      SampledInput b = a;
      unsigned mask = 0;
      while (mask == 0) mask = static_cast<unsigned>(s.below(8));
      if (!uses_time) mask &= ~1u;
      if (mask == 0) mask = 2;
      if (mask & 1u) b.t = model.horizon * s.uniform();
      if (mask & 2u)
        for (double& c : b.x) c = cfg.state_lo + (cfg.state_hi - cfg.state_lo) * s.uniform();
      if (mask & 4u) {
        if (s.uniform() < 0.5) {
          std::vector<double> shift(d);
          for (double& c : shift) c = (cfg.state_hi - cfg.state_lo) * (s.uniform() - 0.5);
          for (std::size_t i = 0; i < b.mu_atoms.size(); ++i) b.mu_atoms[i] += shift[i % d];
        } else {
          const SampledInput fresh = detail::draw_input(s, model, cfg);
          b.mu_atoms = fresh.mu_atoms;
        }
      }
      const EmpiricalMeasure mu_a = detail::measure_from(a, d);
      const EmpiricalMeasure mu_b = detail::measure_from(b, d);
      const double dt = uses_time ? std::abs(a.t - b.t) : 0.0;
      const double dx = detail::distance(a.x, b.x);
      const double w1 = wp_exact_small(mu_a, mu_b, 1);
      const double w1_bar = w1_truncated(mu_a, mu_b);
      const double denom = dt + dx + w1;
      if (denom < kDegenerate) {
        ++report.degenerate_resamples;
        continue;
      }
      const auto va = detail::evaluate(model, which, a);
      const auto vb = detail::evaluate(model, which, b);
      detail::check_finite(va, "coefficient");
      detail::check_finite(vb, "coefficient");
      const double diff = detail::distance(va, vb);
      const double q = diff / denom;
      const double q_bar = diff / std::max(dt + dx + w1_bar, kDegenerate);
      ++report.sample_count;
      if (q > report.empirical_estimate || report.sample_count == 1) {
        report.empirical_estimate = std::max(report.empirical_estimate, q);
        report.max_pair_first = a;
        report.max_pair_second = b;
      }
      report.truncated_estimate = std::max(report.truncated_estimate, q_bar);
      done = true;
    }
  }
  if (report.sample_count == 0) throw std::runtime_error("estimate_lipschitz: every sampled pair was degenerate");
  return report;
}

// Rayleigh quotients <a z, z> / |z|^2 of a = sigma sigma^T over n samples of
// (t, x, mu, z). lambda is the smallest constant with
// lambda^{-1} <= quotient <= lambda on the sample; infinite when a quotient is 0.
inline RegularityReport check_ellipticity(const ModelSpec& model, const SamplerConfig& cfg, std::size_t n) {
  model.validate();
  if (n == 0) throw std::invalid_argument("check_ellipticity: n must be >= 1");
  const std::size_t d = model.state_dim;
  RegularityReport report;
  report.constant_name = "lambda";
  for (std::size_t k = 0; k < n; ++k) {
    rng::Stream s(cfg.seed, rng::Purpose::regularity, static_cast<std::uint32_t>(k), 100u);
    const SampledInput in = detail::draw_input(s, model, cfg);
    const auto sigma = detail::evaluate(model, Coefficient::diffusion, in);
    detail::check_finite(sigma, "diffusion");
    const auto a = diffusion_covariance(sigma, d);
    std::vector<double> z(d);
    double zz = 0.0;
    while (zz == 0.0) {
      zz = 0.0;
      for (double& c : z) {
        c = s.normal();
        zz += c * c;
      }
    }
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) q += z[i] * a[i * d + j] * z[j];
    q /= zz;
    if (q < report.min_quotient) {
      report.min_quotient = q;
      report.max_pair_first = in;
    }
    report.max_quotient = std::max(report.max_quotient, q);
    ++report.sample_count;
  }
  const double lo = report.min_quotient;
  if (lo <= 1e-14) {
    report.violated = true;
    report.empirical_estimate = std::numeric_limits<double>::infinity();
  } else {
    report.empirical_estimate = std::max({1.0, report.max_quotient, 1.0 / lo});
  }
  return report;
}

}  // namespace mkv
