#pragma once

// Builtin models addressable by name.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mkv/model.hpp"

namespace mkv {

// sgn(x) = 1 for x > 0 and -1 for x <= 0.
inline double sgn_left(double x) noexcept { return x > 0.0 ? 1.0 : -1.0; }

namespace zoo {

inline double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return s;
}

inline DiffusionFn scaled_identity(std::size_t d, double scale) {
  return [d, scale](double, std::span<const double>, const EmpiricalMeasure&, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) out[i * d + i] = scale;
  };
}

inline ControlBox unit_box(std::size_t k) {
  return ControlBox(std::vector<double>(k, -1.0), std::vector<double>(k, 1.0));
}

// b = 0, sigma = I, f = 0, g = |x|^2.
inline ModelSpec uncontrolled_gaussian(std::size_t d = 1) {
  ModelSpec m;
  m.name = "UNCONTROLLED_GAUSSIAN";
  m.description = "Brownian motion with quadratic terminal cost; V(s, delta_a) = |a|^2 + d (T - s)";
  m.state_dim = d;
  m.control_dim = 1;
  m.control_box = unit_box(1);
  m.horizon = 1.0;
  m.drift = [](double, std::span<const double>, const EmpiricalMeasure&, std::span<const double>,
               std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
  m.diffusion = scaled_identity(d, 1.0);
  m.running_cost = [](double, std::span<const double>, const EmpiricalMeasure&, std::span<const double>) {
    return 0.0;
  };
  m.terminal_cost = [](std::span<const double> x, const EmpiricalMeasure&) { return squared_norm(x); };
  m.constants.K1 = 0.0;
  m.constants.K2 = std::sqrt(static_cast<double>(d));
  m.constants.lambda = 1.0;
  m.constants.b_sup = 0.0;
  m.constants.sigma_sup = std::sqrt(static_cast<double>(d));
  return m;
}

// b = (m(mu) - x) + u, sigma = 0.5 I, f = |u|^2, g = |x|^2, U = [-1, 1]^d.
inline ModelSpec meanfield_ou(std::size_t d = 1) {
  ModelSpec m;
  m.name = "MEANFIELD_OU";
  m.description = "Ornstein-Uhlenbeck pull toward the population mean with additive control";
  m.state_dim = d;
  m.control_dim = d;
  m.control_box = unit_box(d);
  m.horizon = 1.0;
  m.drift = [](double, std::span<const double> x, const EmpiricalMeasure& mu, std::span<const double> u,
               std::span<double> out) {
    const auto mean = mu.mean();
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = (mean[c] - x[c]) + u[c];
  };
  m.diffusion = scaled_identity(d, 0.5);
  m.running_cost = [](double, std::span<const double>, const EmpiricalMeasure&, std::span<const double> u) {
    return squared_norm(u);
  };
  m.terminal_cost = [](std::span<const double> x, const EmpiricalMeasure&) { return squared_norm(x); };
  const double rd = std::sqrt(static_cast<double>(d));
  m.constants.K1 = 1.0;
  // |b| + ||sigma|| <= |m| + |x| + |u| + 0.5 sqrt(d) <= (sqrt(d) + 0.5 sqrt(d))(1 + |x| + int |z|)
  m.constants.K2 = 1.5 * rd;
  m.constants.lambda = 4.0;
  m.constants.sigma_sup = 0.5 * rd;
  return m;
}

// d = k = 1, b = u, sigma = 0, f = 0, g = x^2, U = [-1, 1], T = 0.5.
inline ModelSpec bang_bang_det() {
  ModelSpec m;
  m.name = "BANG_BANG_DET";
  m.description = "Deterministic x' = u on U = [-1,1] with terminal cost x^2; from x = 1 the optimum is u = -1";
  m.state_dim = 1;
  m.control_dim = 1;
  m.control_box = unit_box(1);
  m.horizon = 0.5;
  m.drift = [](double, std::span<const double>, const EmpiricalMeasure&, std::span<const double> u,
               std::span<double> out) { out[0] = u[0]; };
  m.diffusion = scaled_identity(1, 0.0);
  m.running_cost = [](double, std::span<const double>, const EmpiricalMeasure&, std::span<const double>) {
    return 0.0;
  };
  m.terminal_cost = [](std::span<const double> x, const EmpiricalMeasure&) { return x[0] * x[0]; };
  m.constants.K1 = 0.0;
  m.constants.K2 = 1.0;
  m.constants.b_sup = 1.0;
  m.constants.sigma_sup = 0.0;
  return m;
}

// d = 1, b = -sgn(x) with sgn(0) = -1, sigma = 0. Ill-posed from x = 0.
inline ModelSpec sgn_counterexample() {
  ModelSpec m;
  m.name = "SGN_COUNTEREXAMPLE";
  m.description = "dX = -sgn(X) dt; no solution from X_0 = 0 (explicit Euler chatters with amplitude h)";
  m.state_dim = 1;
  m.control_dim = 1;
  m.control_box = unit_box(1);
  m.horizon = 1.0;
  m.drift = [](double, std::span<const double> x, const EmpiricalMeasure&, std::span<const double>,
               std::span<double> out) { out[0] = -sgn_left(x[0]); };
  m.diffusion = scaled_identity(1, 0.0);
  m.running_cost = [](double, std::span<const double>, const EmpiricalMeasure&, std::span<const double>) {
    return 0.0;
  };
  m.terminal_cost = [](std::span<const double> x, const EmpiricalMeasure&) { return x[0] * x[0]; };
  m.constants.K2 = 1.0;
  m.constants.b_sup = 1.0;
  m.constants.sigma_sup = 0.0;
  return m;
}

// b = -x, sigma = I, f = 0, g = |x|^2. Coupled copies contract deterministically.
inline ModelSpec linear_restoring(std::size_t d = 1) {
  ModelSpec m;
  m.name = "LINEAR_RESTORING";
  m.description = "Ornstein-Uhlenbeck dX = -X dt + dW; coupled differences decay like exp(-(t-s))";
  m.state_dim = d;
  m.control_dim = 1;
  m.control_box = unit_box(1);
  m.horizon = 1.0;
  m.drift = [](double, std::span<const double> x, const EmpiricalMeasure&, std::span<const double>,
               std::span<double> out) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = -x[c];
  };
  m.diffusion = scaled_identity(d, 1.0);
  m.running_cost = [](double, std::span<const double>, const EmpiricalMeasure&, std::span<const double>) {
    return 0.0;
  };
  m.terminal_cost = [](std::span<const double> x, const EmpiricalMeasure&) { return squared_norm(x); };
  m.constants.K1 = 1.0;
  m.constants.K2 = std::max(1.0, std::sqrt(static_cast<double>(d)));
  m.constants.lambda = 1.0;
  m.constants.sigma_sup = std::sqrt(static_cast<double>(d));
  return m;
}

}  // namespace zoo

inline std::vector<ModelSpec> builtin_models() {
  return {zoo::uncontrolled_gaussian(), zoo::meanfield_ou(), zoo::bang_bang_det(), zoo::sgn_counterexample(),
          zoo::linear_restoring()};
}

inline std::optional<ModelSpec> find_builtin(std::string_view name) {
  for (auto& m : builtin_models())
    if (m.name == name) return m;
  return std::nullopt;
}

}  // namespace mkv
