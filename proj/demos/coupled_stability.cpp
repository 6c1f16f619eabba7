// Two copies of dX = -X dt + dW driven by the same noise from 0 and 1: the
// gap is deterministic and decays like (1 - dt)^n.
#include <cstdio>

#include "mkv/model_zoo.hpp"
#include "mkv/verify.hpp"

int main() {
  const mkv::ModelSpec model = mkv::zoo::linear_restoring();
  const auto policy = mkv::constant_policy(mkv::ControlMeasure::dirac(model.control_box, std::vector<double>{0.0}), 1.0);
  const mkv::TimeGrid grid{0.0, 1.0, 50};
  const auto rep = mkv::check_stability(model, policy, 0.0, mkv::InitialLaw::dirac({0.0}), mkv::InitialLaw::dirac({1.0}),
                                        grid, 2000, 3);
  std::printf("%s: %zu inequalities, %zu violations\n", rep.passed ? "pass" : "fail", rep.inequalities_tested,
              rep.violations);
  for (std::size_t i = 0; i < rep.inequalities.size(); i += 30)
    std::printf("  %-48s lhs %.6f  rhs %.6f\n", rep.inequalities[i].label.c_str(), rep.inequalities[i].lhs,
                rep.inequalities[i].rhs);
}
