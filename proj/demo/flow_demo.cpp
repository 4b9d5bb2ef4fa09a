// Minimal library walkthrough: run the singular flow from a step profile
// and watch the energy parts decay.
#include <cstdio>

#include "tvdb/flow.hpp"
#include "tvdb/scenarios.hpp"

int main() {
  using namespace tvdb;
  const GridSpec grid(32, 24);

  EvolutionProblem problem;
  problem.params = EnergyParams::singular_energy(/*eps=*/0.5);
  problem.u0 = step_y_state(grid);
  problem.tau = 1e-3;
  problem.horizon = 0.05;

  StepperConfig config;  // defaults: inner_tol 1e-8

  const Trajectory tr = run_flow(problem, config);
  std::printf("%6s %12s %12s %12s %12s\n", "m", "tv", "jump", "surface",
              "total");
  for (std::size_t m = 0; m < tr.states.size(); m += 10) {
    const EnergyBreakdown& b = tr.energies[m];
    std::printf("%6zu %12.6f %12.6f %12.6f %12.6f\n", m, b.tv_or_fdelta,
                b.jump, b.surface_dirichlet, b.total);
  }
  std::printf("dissipation sum: %.6f\n", tr.dissipation_sum);
  return 0;
}
