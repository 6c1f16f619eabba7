#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mkv {

// A coefficient or cost evaluated to NaN/inf.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/inf hit while advancing a particle ensemble.
class SimulationError : public NumericalError {
 public:
  SimulationError(std::size_t step, std::size_t particle, const std::string& detail)
      : NumericalError("non-finite state at step " + std::to_string(step) + ", particle " +
                       std::to_string(particle) + ": " + detail),
        step_(step),
        particle_(particle) {}

  std::size_t step() const noexcept { return step_; }
  std::size_t particle() const noexcept { return particle_; }

 private:
  std::size_t step_;
  std::size_t particle_;
};

// A nested optimization would need more simulations than allowed.
class BudgetError : public std::runtime_error {
 public:
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

// An experiment configuration that cannot be run.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace mkv
