#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tvdb/mosco.hpp"
#include "tvdb/rng.hpp"
#include "tvdb/scenarios.hpp"

using namespace tvdb;

TEST_CASE("layer extension basics") {
  const GridSpec g(8, 64);
  BoundaryField zero(g, 0.0);
  const BulkField zf = boundary_layer_extension(zero, 0.25);
  for (double v : zf.values) CHECK(v == 0.0);

  BoundaryField varpi(g);
  for (int i = 0; i < g.nx; ++i) varpi.at(i) = 0.5 + 0.25 * std::sin(2.0 * M_PI * i / g.nx);

  const BulkField bot = boundary_layer_extension(varpi, 0.25, BoundarySide::bottom);
  const BulkField top = boundary_layer_extension(varpi, 0.25, BoundarySide::top);
  for (int i = 0; i < g.nx; ++i) {
    CHECK(bot.at(i, 0) == varpi.at(i));       // trace exact, bitwise
    CHECK(top.at(i, g.ny) == varpi.at(i));
  }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (j * g.dy() > 0.25 + 1e-12) CHECK(bot.at(i, j) == 0.0);
      if ((g.ny - j) * g.dy() > 0.25 + 1e-12) CHECK(top.at(i, j) == 0.0);
    }

  // linearity in varpi
  BoundaryField two(g);
  for (int i = 0; i < g.nx; ++i) two.at(i) = 2.0 * varpi.at(i);
  const BulkField twice = boundary_layer_extension(two, 0.25);
  for (std::size_t k = 0; k < twice.values.size(); ++k)
    CHECK(twice.values[k] == Catch::Approx(2.0 * bot.values[k]).margin(1e-15));

  CHECK_THROWS_AS(boundary_layer_extension(varpi, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(boundary_layer_extension(varpi, 0.5 * g.dy()),
                  std::invalid_argument);
}

TEST_CASE("layer extension quantitative identity") {
  // L2-norm^2 close to (r/3) |varpi|^2 when the layer spans many cells
  const GridSpec g(64, 256);
  BoundaryField one(g, 1.0);
  const double r = 32.0 * g.dy();
  const BulkField f = boundary_layer_extension(one, r);
  const double l2 = bulk_l2sq_trapz(f);
  CHECK(std::abs(l2 - r / 3.0) <= 0.02 * (r / 3.0));

  // invariant band at r = 16 dy
  const double r16 = 16.0 * g.dy();
  const BulkField f16 = boundary_layer_extension(one, r16);
  CHECK(std::abs(bulk_l2sq_trapz(f16) - r16 / 3.0) <= 0.02 * (r16 / 3.0));

  // vertical TV telescopes to the boundary L1 mass, exactly
  CHECK(gradient_l1(f) == Catch::Approx(boundary_l1(one)).epsilon(1e-13));
}

TEST_CASE("lifting construct bounds") {
  const GridSpec g(32, 512);
  BoundaryField zero(g, 0.0);
  const BulkField zf = lifting_construct(zero, zero, 3);
  for (double v : zf.values) CHECK(v == 0.0);

  // vb = 1, vt = 0 at level 3: |.|_L2 <= 2^-3 * 1.05, TV <= 1 + 2^-3 + 5%
  BoundaryField one(g, 1.0);
  const int level = 3;
  const BulkField f = lifting_construct(one, zero, level);
  for (int i = 0; i < g.nx; ++i) {
    CHECK(f.at(i, 0) == 1.0);
    CHECK(f.at(i, g.ny) == 0.0);
  }
  const double bound = std::pow(2.0, -level);
  CHECK(std::sqrt(bulk_l2sq_trapz(f)) <= bound * 1.05);
  CHECK(gradient_l1(f) <= (boundary_l1(one) + bound) * 1.05);

  // the L2 budget halves as the level increments (small data stay feasible
  // down to level 6 on this resolution)
  BoundaryField small(g, 0.2);
  double prev = 1e9;
  for (int l = 1; l <= 6; ++l) {
    const BulkField fl = lifting_construct(small, zero, l);
    const double nrm = std::sqrt(bulk_l2sq_trapz(fl));
    CHECK(nrm <= std::pow(2.0, -l) * 1.05);
    CHECK(nrm <= prev + 1e-15);
    prev = nrm;
  }
}

TEST_CASE("lifting reports the minimal resolution when infeasible") {
  const GridSpec g(8, 4);
  BoundaryField big(g, 1.0);
  try {
    lifting_construct(big, big, 6);
    FAIL("expected ResolutionError");
  } catch (const ResolutionError& e) {
    CHECK(e.minimal_ny > g.ny);
    CHECK(std::string(e.what()).find("increase ny") != std::string::npos);
  }
}

TEST_CASE("recovery sequence approaches a trace-constrained target") {
  const GridSpec g(16, 256);
  const StateVector target = random_state(g, 515, 0.3, true);
  double prev_dist = 1e9;
  for (int level : {2, 4, 6}) {
    const StateVector rec = recovery_sequence(target, level);
    CHECK(trace_constrained(rec));
    const double dist = norm_H(sub(rec, target));
    CHECK(dist <= prev_dist + 1e-12);
    prev_dist = dist;
  }
  // no smoothing from level 5 on and zero correction: recovery is the target
  const StateVector rec6 = recovery_sequence(target, 6);
  CHECK(norm_H(sub(rec6, target)) <= 1e-12);
}

TEST_CASE("recovery energy approaches tv + jump of a boundary-jump target") {
  const GridSpec g(8, 512);
  const StateVector target = boundary_jump_state(g, 1.0, 0.0);
  const EnergyParams sing = EnergyParams::singular_energy(0.5);
  const EnergyBreakdown tb = eval_phi_star(sing, target);
  const double mass = tb.tv_or_fdelta + tb.jump;  // = 1
  CHECK(mass == Catch::Approx(1.0));
  const StateVector rec = recovery_sequence(target, 6);
  CHECK(std::abs(gradient_l1(rec.bulk) - mass) <= 0.05 * mass);
}

TEST_CASE("recovery triangle bound in the width-feasible regime") {
  // |u_l - u|_L2 <= |phi_l - u|_L2 + 2^-l, per level, while the layer
  // budget rule stays feasible (small trace corrections)
  const GridSpec g(16, 256);
  const StateVector target = random_state(g, 616, 0.25, true);
  for (int level = 2; level <= 6; ++level) {
    const StateVector rl = recovery_sequence(target, level);
    const BulkField phi =
        mollify_bulk(target.bulk, mollifier_iterations(level));
    BulkField diff_rec = rl.bulk, diff_phi = phi;
    for (std::size_t k = 0; k < diff_rec.values.size(); ++k) {
      diff_rec.values[k] -= target.bulk.values[k];
      diff_phi.values[k] -= target.bulk.values[k];
    }
    CHECK(std::sqrt(bulk_l2sq_trapz(diff_rec)) <=
          std::sqrt(bulk_l2sq_trapz(diff_phi)) + std::pow(2.0, -level) + 1e-12);
  }
}

TEST_CASE("schedule validation") {
  const GridSpec g(16, 16);
  CHECK_THROWS_AS(SweepSchedule({0.5, 0.25}, {0.5, 0.25}, g),
                  std::invalid_argument);
  CHECK_THROWS_AS(SweepSchedule({0.5, 0.25, 0.5, 0.1}, {0.5, 0.25, 0.12, 0.1}, g),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      SweepSchedule({2.0, 0.25, 0.12, 0.1}, {0.5, 0.25, 0.12, 0.1}, g),
      std::invalid_argument);
  CHECK_NOTHROW(SweepSchedule::geometric(6, g));
}

TEST_CASE("m2 sweep on a constant target is exact") {
  const GridSpec g(16, 16);
  const EnergyParams base = EnergyParams::regularized_energy(
      0.5, 1.0, RegularizerSpec(RegularizerKind::huber, 1.0));
  const RecoveryReport rep = mosco_m2_sweep(
      base, SweepSchedule::geometric(5, g), constant_state(g, 2.0));
  for (const RecoveryRow& r : rep.rows) CHECK(r.gap <= 1e-12);
}

TEST_CASE("m2 sweep gaps shrink for a boundary-jump target") {
  const GridSpec g(32, 32);
  const EnergyParams base = EnergyParams::regularized_energy(
      0.5, 1.0, RegularizerSpec(RegularizerKind::huber, 1.0));
  const StateVector target = boundary_jump_state(g, 1.0, 0.0);
  const RecoveryReport rep =
      mosco_m2_sweep(base, SweepSchedule::geometric(7, g), target);
  CHECK(rep.phi_star_target == Catch::Approx(1.0));
  CHECK(rep.monotone_from <= 4);
  CHECK(rep.rows.back().gap <= 0.1 * rep.phi_star_target +
                                   std::pow(2.0, -rep.rows.back().level));
  // h-distance of the recovery states also shrinks along the tail
  CHECK(rep.rows.back().h_dist <= rep.rows[2].h_dist + 1e-12);
}

TEST_CASE("m1 probe inequality holds for recovery and adversarial sequences") {
  const GridSpec g(24, 24);
  const EnergyParams base = EnergyParams::regularized_energy(
      0.5, 1.0, RegularizerSpec(RegularizerKind::huber, 1.0));
  const SweepSchedule sched = SweepSchedule::geometric(6, g);
  const StateVector target = random_state(g, 2222, 0.5, true);

  // constant sequence at the target
  const M1ProbeReport r1 = mosco_m1_probe(base, sched, target,
                                          [&](int) { return target; });
  CHECK(r1.inequality_ok);
  CHECK(r1.worst_margin >= -1e-10);

  // recovery sequences are M1-tight: liminf proxy lands near Phi_*(target)
  const M1ProbeReport r2 = mosco_m1_probe(
      base, sched, target, [&](int n) { return recovery_sequence(target, n); });
  CHECK(r2.inequality_ok);
  CHECK(std::abs(r2.liminf_proxy - r2.phi_star_target) <=
        0.05 * (1.0 + r2.phi_star_target));

  // checkerboard noise of amplitude 1/n on the interior rows
  const M1ProbeReport r3 = mosco_m1_probe(
      base, sched, target, [&](int n) {
        StateVector z = target;
        for (int j = 1; j < g.ny; ++j)
          for (int i = 0; i < g.nx; ++i)
            z.bulk.at(i, j) += (((i + j) % 2) ? 1.0 : -1.0) / double(n);
        return z;
      });
  CHECK(r3.inequality_ok);
  CHECK(r3.liminf_proxy > r3.phi_star_target);  // the energy blows up
}

TEST_CASE("trajectory convergence is trivial for a constant state") {
  const GridSpec g(8, 6);
  EvolutionProblem pr;
  pr.params = EnergyParams::singular_energy(0.5);
  pr.u0 = constant_state(g, 0.3);
  pr.tau = 5e-3;
  pr.horizon = 0.02;
  StepperConfig cfg;
  cfg.inner_tol = 1e-10;
  cfg.inner_max_iters = 400000;
  const TrajConvReport rep =
      trajectory_convergence(pr, SweepSchedule::geometric(4, g), cfg);
  for (const TrajConvRow& r : rep.rows) {
    CHECK(r.sup_dist <= 1e-8);
    CHECK(r.energy_gap <= 1e-8);
  }
}
