// Explicit Euler for dX = -sgn(X) dt from X_0 = 0 and X_0 = 1.
#include <cstdio>

#include "mkv/simulate.hpp"

int main() {
  const std::vector<double> steps = {0.1, 0.01, 0.001};
  for (double x0 : {0.0, 1.0}) {
    const auto report = mkv::counterexample_demo(steps, x0, 1.0);
    std::printf("x0 = %g\n", x0);
    for (const auto& run : report.runs) {
      std::printf("  h = %-6g hit t = %-8.5g amplitude = %-10.6g amplitude/h = %-8.6g cycle = %s\n", run.h,
                  run.hitting_time.value_or(-1.0), run.amplitude, run.amplitude / run.h,
                  run.two_step_cycle ? "yes" : "no");
    }
  }
}
