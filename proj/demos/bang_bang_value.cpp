// V(0, delta_1) for x' = u, u in [-1, 1], cost x(T)^2 with T = 0.5. The
// optimum pushes down at full speed, so V = 0.25.
#include <cstdio>

#include "mkv/objective.hpp"
#include "mkv/model_zoo.hpp"

int main() {
  const mkv::ModelSpec model = mkv::zoo::bang_bang_det();
  const auto family = mkv::PolicyFamily::constant_mixture({{-1.0}, {0.0}, {1.0}}, model.control_box, 0.0, 0.5);
  const mkv::TimeGrid grid{0.0, 0.5, 100};
  mkv::OptimizerConfig cfg;
  cfg.seed = 11;
  const auto v = mkv::estimate_value(model, family, 0.0, mkv::InitialLaw::dirac({1.0}), grid, 8, cfg);
  const auto u = v.best_policy.rows().front().mean();
  std::printf("value %.6f (se %.2g), mean control %.4f, gap %.3g, %zu evaluations\n", v.cost.mean, v.cost.std_error,
              u[0], v.optimizer_gap, v.evaluations);
}
