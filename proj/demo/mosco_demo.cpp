// Energy-convergence walkthrough: recovery states for a boundary-jump target
// along a vanishing (delta, kappa) schedule.
#include <cstdio>

#include "tvdb/mosco.hpp"
#include "tvdb/scenarios.hpp"

int main() {
  using namespace tvdb;
  const GridSpec grid(64, 64);
  const StateVector target = boundary_jump_state(grid, 1.0, 0.0);
  const EnergyParams base = EnergyParams::regularized_energy(
      0.5, 1.0, RegularizerSpec(RegularizerKind::huber, 1.0));

  const RecoveryReport rep =
      mosco_m2_sweep(base, SweepSchedule::geometric(8, grid), target);
  std::printf("target energy: %.6f\n", rep.phi_star_target);
  std::printf("%3s %10s %6s %12s %12s\n", "n", "delta", "level", "phi_n",
              "gap");
  for (const RecoveryRow& r : rep.rows)
    std::printf("%3d %10.5f %6d %12.6f %12.6f\n", r.n, r.delta, r.level,
                r.phi_n, r.gap);
  std::printf("gaps decrease from n = %d\n", rep.monotone_from);
  return 0;
}
