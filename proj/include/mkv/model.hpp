#pragma once

// Controlled McKean-Vlasov problem data: drift b(t,x,mu,u) and running cost
// f(t,x,mu,u) on point controls, diffusion sigma(t,x,mu), terminal cost
// g(x,mu), the control box U and the horizon T. b and f are lifted to
// relaxed controls alpha in P(U) by integrating over alpha's atoms.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkv/error.hpp"
#include "mkv/measures.hpp"

namespace mkv {

using DriftFn = std::function<void(double t, std::span<const double> x, const EmpiricalMeasure& mu,
                                   std::span<const double> u, std::span<double> out)>;
// Writes the d x d matrix row-major.
using DiffusionFn =
    std::function<void(double t, std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out)>;
using RunningCostFn =
    std::function<double(double t, std::span<const double> x, const EmpiricalMeasure& mu, std::span<const double> u)>;
using TerminalCostFn = std::function<double(std::span<const double> x, const EmpiricalMeasure& mu)>;

// Regularity constants a model declares about itself. Absent means unknown.
struct DeclaredConstants {
  std::optional<double> K1;  // Lipschitz constant of (b, sigma)
  std::optional<double> K2;  // linear growth of (b, sigma)
  std::optional<double> K3;  // Lipschitz constant of (f, g)
  std::optional<double> K4;  // linear growth of (f, g)
  std::optional<double> lambda;     // ellipticity of sigma sigma^T
  std::optional<double> b_sup;      // sup |b|
  std::optional<double> sigma_sup;  // sup ||sigma|| (Frobenius)
};

struct ModelSpec {
  std::string name;
  std::string description;
  std::size_t state_dim = 1;
  std::size_t control_dim = 1;
  ControlBox control_box;
  double horizon = 1.0;
  DriftFn drift;
  DiffusionFn diffusion;
  RunningCostFn running_cost;
  TerminalCostFn terminal_cost;
  DeclaredConstants constants;
  // True when sigma reads mu. Stability and continuity checks need it false.
  bool diffusion_depends_on_law = false;

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("model: horizon must be positive");
    if (state_dim == 0 || control_dim == 0) throw std::invalid_argument("model: dimensions must be at least 1");
    if (control_box.dim() != control_dim) throw std::invalid_argument("model: control box dimension != control_dim");
    if (!drift || !diffusion || !running_cost || !terminal_cost)
      throw std::invalid_argument("model: every coefficient must be set");
  }
};

namespace detail {

inline void check_time(const ModelSpec& model, double t) {
  const double tol = 1e-12 * std::max(1.0, model.horizon);
  if (!(t >= -tol && t <= model.horizon + tol))
    throw std::domain_error("time " + std::to_string(t) + " outside [0, T] of model " + model.name);
}

inline void check_finite(std::span<const double> v, const char* what) {
  for (double c : v)
    if (!std::isfinite(c)) throw NumericalError(std::string(what) + " returned a non-finite value");
}

}  // namespace detail

// Relaxed drift sum_j w_j b(t, x, mu, u_j), written into out (size d).
// scratch must hold d doubles. No time-domain check; the simulator hot path
// validates its grid once up front.
inline void drift_relaxed_into(const ModelSpec& model, double t, std::span<const double> x,
                               const EmpiricalMeasure& mu, const ControlMeasure& alpha, std::span<double> out,
                               std::span<double> scratch) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    model.drift(t, x, mu, alpha.atom(j), scratch);
    const double w = alpha.weight(j);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += w * scratch[c];
  }
}

inline double running_cost_relaxed(const ModelSpec& model, double t, std::span<const double> x,
                                   const EmpiricalMeasure& mu, const ControlMeasure& alpha) {
  double total = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) total += alpha.weight(j) * model.running_cost(t, x, mu, alpha.atom(j));
  return total;
}

inline std::vector<double> eval_drift_relaxed(const ModelSpec& model, double t, std::span<const double> x,
                                              const EmpiricalMeasure& mu, const ControlMeasure& alpha) {
  detail::check_time(model, t);
  if (x.size() != model.state_dim || mu.dim() != model.state_dim)
    throw std::invalid_argument("eval_drift_relaxed: state dimension mismatch");
  if (alpha.dim() != model.control_dim) throw std::invalid_argument("eval_drift_relaxed: control dimension mismatch");
  std::vector<double> out(model.state_dim), scratch(model.state_dim);
  drift_relaxed_into(model, t, x, mu, alpha, out, scratch);
  detail::check_finite(out, "drift");
  return out;
}

// sigma(t, x, mu) as a row-major d x d matrix.
inline std::vector<double> eval_diffusion(const ModelSpec& model, double t, std::span<const double> x,
                                          const EmpiricalMeasure& mu) {
  detail::check_time(model, t);
  if (x.size() != model.state_dim || mu.dim() != model.state_dim)
    throw std::invalid_argument("eval_diffusion: state dimension mismatch");
  std::vector<double> out(model.state_dim * model.state_dim);
  model.diffusion(t, x, mu, out);
  detail::check_finite(out, "diffusion");
  return out;
}

// a = sigma sigma^T.
inline std::vector<double> diffusion_covariance(std::span<const double> sigma, std::size_t d) {
  std::vector<double> a(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) a[i * d + j] += sigma[i * d + k] * sigma[j * d + k];
  return a;
}

struct CostPair {
  double running = 0.0;
  double terminal = 0.0;
};

inline CostPair eval_costs(const ModelSpec& model, double t, std::span<const double> x, const EmpiricalMeasure& mu,
                           const ControlMeasure& alpha) {
  detail::check_time(model, t);
  if (x.size() != model.state_dim || mu.dim() != model.state_dim)
    throw std::invalid_argument("eval_costs: state dimension mismatch");
  CostPair out{running_cost_relaxed(model, t, x, mu, alpha), model.terminal_cost(x, mu)};
  if (!std::isfinite(out.running) || !std::isfinite(out.terminal))
    throw NumericalError("eval_costs: cost is not finite");
  return out;
}

// Same dynamics with f and g multiplied by c.
inline ModelSpec scale_costs(ModelSpec model, double c) {
  auto f = model.running_cost;
  auto g = model.terminal_cost;
  model.running_cost = [f, c](double t, std::span<const double> x, const EmpiricalMeasure& mu,
                              std::span<const double> u) { return c * f(t, x, mu, u); };
  model.terminal_cost = [g, c](std::span<const double> x, const EmpiricalMeasure& mu) { return c * g(x, mu); };
  if (model.constants.K3) model.constants.K3 = *model.constants.K3 * std::abs(c);
  if (model.constants.K4) model.constants.K4 = *model.constants.K4 * std::abs(c);
  model.name += "*" + std::to_string(c);
  return model;
}

}  // namespace mkv
