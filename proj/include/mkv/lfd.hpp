#pragma once

// Directional linear functional derivative of h: P(R^d) -> R along nu - mu,
// estimated from difference quotients on the segment (1 - eps) mu + eps nu.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mkv/error.hpp"
#include "mkv/measures.hpp"

namespace mkv {

using MeasureFunctional = std::function<double(const EmpiricalMeasure&)>;

struct DerivativeReport {
  double limit = 0.0;                 // extrapolated value at eps -> 0
  std::vector<double> eps;            // the schedule
  std::vector<double> quotients;      // [h((1-eps)mu + eps nu) - h(mu)] / eps
  std::vector<double> extrapolants;   // Richardson table diagonal, one per prefix
  double spread = 0.0;                // |last two extrapolants|, 0 for a single eps
};

// Polynomial (Neville) extrapolation of the quotients to eps = 0. For affine h
// every quotient is the same number; for quadratic h two points already give
// the exact limit.
inline DerivativeReport lfd_directional(const MeasureFunctional& h, const EmpiricalMeasure& mu,
                                        const EmpiricalMeasure& nu, const std::vector<double>& eps_schedule) {
  if (eps_schedule.empty()) throw std::invalid_argument("lfd_directional: empty eps schedule");
  for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
    const double e = eps_schedule[k];
    if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument("lfd_directional: eps must lie in (0, 1]");
    if (k > 0 && !(e < eps_schedule[k - 1]))
      throw std::invalid_argument("lfd_directional: eps schedule must be strictly decreasing");
  }
  if (mu.dim() != nu.dim()) throw std::invalid_argument("lfd_directional: dimension mismatch");

  DerivativeReport report;
  report.eps = eps_schedule;
  const double base = h(mu);
  if (!std::isfinite(base)) throw NumericalError("lfd_directional: h(mu) is not finite");
  for (double e : eps_schedule) {
    const double value = h(mixture(mu, nu, e));
    if (!std::isfinite(value)) throw NumericalError("lfd_directional: h returned a non-finite value");
    report.quotients.push_back((value - base) / e);
  }

  // After stage k, column[i] is the interpolant through points i..i+k at eps = 0.
  std::vector<double> column = report.quotients;
  const std::size_t n = column.size();
  report.extrapolants.push_back(column[0]);
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t i = 0; i + k < n; ++i) {
      const double ei = eps_schedule[i];
      const double ek = eps_schedule[i + k];
      column[i] = (ek * column[i] - ei * column[i + 1]) / (ek - ei);
    }
    report.extrapolants.push_back(column[0]);
  }
  report.limit = report.extrapolants.back();
  if (report.extrapolants.size() >= 2) {
    const std::size_t last = report.extrapolants.size() - 1;
    report.spread = std::abs(report.extrapolants[last] - report.extrapolants[last - 1]);
  }
  return report;
}

}  // namespace mkv
