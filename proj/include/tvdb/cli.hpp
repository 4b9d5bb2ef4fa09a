/** \file cli.hpp
 *  Batch experiment runner behind the command-line tool: solve / mosco /
 *  compare / lattice / selftest. Each run writes CSV reports, a manifest and
 *  a gnuplot companion script into the output directory.
 *
 *  Exit codes: 0 ok, 1 config error, 2 solver failure, 3 property violation.
 */
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tvdb/config.hpp"
#include "tvdb/field_io.hpp"
#include "tvdb/flow.hpp"
#include "tvdb/mosco.hpp"
#include "tvdb/props.hpp"
#include "tvdb/rng.hpp"
#include "tvdb/scenarios.hpp"
#include "tvdb/version.hpp"

namespace tvdb::cli {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_manifest(const std::filesystem::path& dir,
                           const ExperimentConfig& ec,
                           const std::string& command, double wall_seconds) {
  std::ofstream os(dir / "manifest.txt");
  os << "tool = tvdb " << version_string() << "\n"
     << "command = " << command << "\n"
     << "seed = " << ec.seed << "\n"
     << "wall_seconds = " << fmt(wall_seconds) << "\n"
     << "config_origin = " << ec.raw.origin() << "\n"
     << "# config echo\n";
  for (const auto& [key, entry] : ec.raw.entries())
    os << key << " = " << entry.value << "\n";
}

inline void write_plot_script(const std::filesystem::path& dir,
                              const std::string& csv,
                              const std::string& what) {
  std::ofstream os(dir / (what + ".gp"));
  os << "# gnuplot companion for " << csv << "\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set logscale y\n"
     << "plot '" << csv << "' using 1:2 with linespoints\n";
}

inline SourceTerm build_source(const ExperimentConfig& ec) {
  return make_source(ec.scenario_source, ec.grid, ec.source_amplitude,
                     mix_seed(ec.seed, 0xA5A5));
}

inline EvolutionProblem build_problem(const ExperimentConfig& ec) {
  EvolutionProblem pr;
  pr.params = ec.params;
  pr.u0 = make_scenario_state(ec.scenario_initial, ec.grid,
                              ec.scenario_amplitude, mix_seed(ec.seed, 0x11));
  pr.source = build_source(ec);
  pr.horizon = ec.horizon;
  pr.tau = ec.tau;
  return pr;
}

inline SweepSchedule build_schedule(const ExperimentConfig& ec) {
  if (ec.schedule_deltas.empty())
    return SweepSchedule::geometric(8, ec.grid);
  return SweepSchedule(ec.schedule_deltas, ec.schedule_kappas, ec.grid);
}

// ------------------------------------------------------------------ solve

inline int run_solve(const ExperimentConfig& ec, std::ostream& log) {
  namespace fs = std::filesystem;
  const fs::path dir(ec.output_dir);
  fs::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();

  const EvolutionProblem pr = build_problem(ec);
  Trajectory tr;
  try {
    tr = run_flow(pr, ec.stepper);
  } catch (const ConvergenceError& e) {
    log << "solver failure at step " << e.step_index << ": " << e.what()
        << "\n";
    return 2;
  }

  if (ec.csv_enabled) {
    std::ofstream os(dir / "energy.csv");
    os << "m,t,tv,kappa_term,jump,surface,total,step_residual\n";
    for (std::size_t m = 0; m < tr.states.size(); ++m) {
      const EnergyBreakdown& b = tr.energies[m];
      os << m << ',' << fmt(double(m) * tr.tau) << ',' << fmt(b.tv_or_fdelta)
         << ',' << fmt(b.kappa_dirichlet) << ',' << fmt(b.jump) << ','
         << fmt(b.surface_dirichlet) << ',' << fmt(b.total) << ','
         << fmt(tr.residuals[m]) << "\n";
    }
    write_plot_script(dir, "energy.csv", "energy");
  }

  if (ec.checkpoint_stride > 0) {
    for (std::size_t m = 0; m < tr.states.size();
         m += std::size_t(ec.checkpoint_stride)) {
      char name[64];
      std::snprintf(name, sizeof name, "state_%06zu.tvdb", m);
      write_state_file((dir / name).string(), tr.states[m]);
    }
  }

  if (pr.params.singular()) {
    std::vector<StateVector> tests;
    for (int k = 0; k < 8; ++k)
      tests.push_back(random_state(ec.grid, mix_seed(ec.seed, 0x77 + k), 1.0));
    const WeakInequalityReport rep =
        check_weak_inequality(pr.params, tr, tests, pr.source);
    std::ofstream os(dir / "weak_inequality.csv");
    os << "test_state,worst_slack\n";
    for (std::size_t z = 0; z < rep.per_state_worst.size(); ++z)
      os << z << ',' << fmt(rep.per_state_worst[z]) << "\n";
    log << "weak inequality worst slack: " << fmt(rep.worst_slack) << "\n";
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(dir, ec, "solve", wall);
  log << "solve: " << tr.states.size() - 1 << " steps, final energy "
      << fmt(tr.energies.back().total) << "\n";
  return 0;
}

// ------------------------------------------------------------------ mosco

inline int run_mosco(const ExperimentConfig& ec, std::ostream& log) {
  namespace fs = std::filesystem;
  const fs::path dir(ec.output_dir);
  fs::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();
  const SweepSchedule schedule = build_schedule(ec);
  const StateVector target =
      make_scenario_state(ec.scenario_initial, ec.grid, ec.scenario_amplitude,
                          mix_seed(ec.seed, 0x11));
  // the sweep needs a regularizer kind even when the base config is singular
  const EnergyParams base =
      ec.params.singular()
          ? EnergyParams::regularized_energy(
                ec.params.epsilon, 1.0,
                RegularizerSpec(RegularizerKind::huber, 1.0), ec.params.tv_mode)
          : ec.params;

  std::ofstream os(dir / "mosco.csv");
  os << "n,delta,kappa,level,phi_n,phi_star,gap,sup_traj_dist\n";
  int rc = 0;
  if (ec.mosco_mode == "m2") {
    const RecoveryReport rep = mosco_m2_sweep(base, schedule, target);
    for (const RecoveryRow& r : rep.rows)
      os << r.n << ',' << fmt(r.delta) << ',' << fmt(r.kappa) << ',' << r.level
         << ',' << fmt(r.phi_n) << ',' << fmt(r.phi_star) << ',' << fmt(r.gap)
         << ",\n";
    log << "m2 sweep: phi_star(target) = " << fmt(rep.phi_star_target)
        << ", final gap = " << fmt(rep.rows.back().gap)
        << ", gaps decrease from n = " << rep.monotone_from << "\n";
  } else if (ec.mosco_mode == "m1") {
    const M1ProbeReport rep = mosco_m1_probe(
        base, schedule, target,
        [&](int n) { return recovery_sequence(target, n); });
    for (const M1ProbeRow& r : rep.rows)
      os << r.n << ',' << fmt(r.delta) << ',' << fmt(r.kappa) << ",,"
         << fmt(r.phi_n) << ',' << fmt(r.phi_star_zn) << ',' << fmt(r.margin)
         << ",\n";
    log << "m1 probe: worst margin = " << fmt(rep.worst_margin)
        << " (>= 0 required), liminf proxy = " << fmt(rep.liminf_proxy)
        << "\n";
    if (!rep.inequality_ok) rc = 3;
  } else if (ec.mosco_mode == "trajectory") {
    ExperimentConfig sing = ec;
    sing.params = EnergyParams::singular_energy(ec.params.epsilon,
                                                ec.params.tv_mode);
    const EvolutionProblem pr = build_problem(sing);
    try {
      const TrajConvReport rep = trajectory_convergence(
          pr, schedule, ec.stepper,
          base.regularizer ? base.regularizer->kind : RegularizerKind::huber);
      for (const TrajConvRow& r : rep.rows)
        os << r.n << ',' << fmt(r.delta) << ',' << fmt(r.kappa) << ','
           << r.level << ',' << fmt(r.energy_int_reg) << ','
           << fmt(r.energy_int_sing) << ',' << fmt(r.energy_gap) << ','
           << fmt(r.sup_dist) << "\n";
      log << "trajectory convergence: sup-dist tail = "
          << fmt(rep.rows.back().sup_dist) << "\n";
    } catch (const ConvergenceError& e) {
      log << "solver failure: " << e.what() << "\n";
      return 2;
    }
  } else {
    ec.raw.fail("mosco.mode", "expected m2, m1 or trajectory");
  }
  write_plot_script(dir, "mosco.csv", "mosco");
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(dir, ec, "mosco", wall);
  return rc;
}

// ---------------------------------------------------------------- compare

inline int run_compare(const ExperimentConfig& ec, std::ostream& log) {
  namespace fs = std::filesystem;
  const fs::path dir(ec.output_dir);
  fs::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();

  EvolutionProblem p1 = build_problem(ec);
  EvolutionProblem p2 = p1;
  if (ec.compare_mode == "uniform_shift") {
    shift(p2.u0, ec.compare_shift);
  } else if (ec.compare_mode == "random_ordered") {
    StateVector bump = random_state(ec.grid, mix_seed(ec.seed, 0xBEEF), 0.5);
    p2.u0 = add(p1.u0, positive_part(bump));
    StateVector sbump =
        positive_part(random_state(ec.grid, mix_seed(ec.seed, 0xFEED), 0.3));
    SourceTerm s1 = p1.source;
    const GridSpec grid = ec.grid;
    p2.source = SourceTerm([s1, sbump, grid](double t) {
      StateVector v = s1.sample(t, grid);
      axpy(v, 1.0, sbump);
      return v;
    });
  } else if (ec.compare_mode == "crossing") {
    StateVector bump = random_state(ec.grid, mix_seed(ec.seed, 0xBEEF), 0.5);
    p2.u0 = add(p1.u0, positive_part(bump));
    StateVector sdrop =
        positive_part(random_state(ec.grid, mix_seed(ec.seed, 0xFEED), 0.3));
    SourceTerm s1 = p1.source;
    const GridSpec grid = ec.grid;
    p2.source = SourceTerm([s1, sdrop, grid](double t) {
      StateVector v = s1.sample(t, grid);
      axpy(v, -1.0, sdrop);  // problem2 source dips below problem1's
      return v;
    });
  } else {
    ec.raw.fail("compare.mode",
                "expected uniform_shift, random_ordered or crossing");
  }

  ComparisonReport rep;
  try {
    rep = comparison_check(p1, p2, ec.stepper);
  } catch (const ConvergenceError& e) {
    log << "solver failure: " << e.what() << "\n";
    return 2;
  }

  std::ofstream os(dir / "compare.csv");
  os << "t,lhs,rhs,slack,max_positive_part\n";
  for (const ComparisonStep& st : rep.steps)
    os << fmt(st.t) << ',' << fmt(st.lhs) << ',' << fmt(st.rhs) << ','
       << fmt(st.slack) << ',' << fmt(st.max_positive_part) << "\n";
  write_plot_script(dir, "compare.csv", "compare");
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(dir, ec, "compare", wall);

  log << "compare(" << ec.compare_mode
      << "): worst slack = " << fmt(rep.worst_violation)
      << ", max ordering defect = " << fmt(rep.max_ordering_defect) << "\n";
  if (!rep.within_slack) {
    log << "comparison inequality violated beyond slack "
        << fmt(rep.allowed_slack) << "\n";
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------- lattice

inline int run_lattice(const ExperimentConfig& ec, std::ostream& log) {
  namespace fs = std::filesystem;
  const fs::path dir(ec.output_dir);
  fs::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();

  const EnergyParams singular =
      EnergyParams::singular_energy(ec.params.epsilon, ec.params.tv_mode);
  const EnergyParams regular =
      ec.params.singular()
          ? EnergyParams::regularized_energy(
                ec.params.epsilon, 0.5,
                RegularizerSpec(RegularizerKind::huber, 0.5), ec.params.tv_mode)
          : ec.params;

  const SampleSweepReport rs =
      lattice_inequality_check(singular, ec.grid, ec.lattice_samples, ec.seed);
  const SampleSweepReport rr = lattice_inequality_check(
      regular, ec.grid, ec.lattice_samples, mix_seed(ec.seed, 1));
  const SampleSweepReport rt = t_monotonicity_check(
      singular, ec.grid, ec.stepper, ec.tmono_samples, mix_seed(ec.seed, 2));

  std::ofstream os(dir / "lattice.csv");
  os << "sample,gap_singular,gap_regularized\n";
  for (int s = 0; s < ec.lattice_samples; ++s)
    os << s << ',' << fmt(rs.values[std::size_t(s)]) << ','
       << fmt(rr.values[std::size_t(s)]) << "\n";
  {
    std::ofstream ot(dir / "tmonotonicity.csv");
    ot << "sample,inner_product\n";
    for (int s = 0; s < ec.tmono_samples; ++s)
      ot << s << ',' << fmt(rt.values[std::size_t(s)]) << "\n";
  }
  write_plot_script(dir, "lattice.csv", "lattice");
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(dir, ec, "lattice", wall);

  log << "lattice: min gap singular = " << fmt(rs.min_value)
      << ", regularized = " << fmt(rr.min_value)
      << "; t-monotonicity min = " << fmt(rt.min_value) << "\n";

  const bool aniso = ec.params.tv_mode == TvMode::anisotropic;
  const double tol = 1e-10;
  bool violated = false;
  auto dump_pair = [&](const SampleSweepReport& rep, const char* tag,
                       bool traces) {
    const StateVector a = random_state(
        ec.grid, mix_seed(rep.seed, 2 * std::uint64_t(rep.min_index)), 1.0,
        traces);
    const StateVector b = random_state(
        ec.grid, mix_seed(rep.seed, 2 * std::uint64_t(rep.min_index) + 1), 1.0,
        traces);
    write_state_file((dir / (std::string(tag) + "_worst_a.tvdb")).string(), a);
    write_state_file((dir / (std::string(tag) + "_worst_b.tvdb")).string(), b);
  };
  if (rs.min_value < -tol) {
    dump_pair(rs, "singular", false);
    if (aniso) violated = true;
    else log << "warning: isotropic lattice gap negative (reported only)\n";
  }
  if (rr.min_value < -tol) {
    dump_pair(rr, "regularized", true);
    if (aniso) violated = true;
    else log << "warning: isotropic lattice gap negative (reported only)\n";
  }
  if (rt.min_value < -1e-8) {
    if (aniso) violated = true;
    else log << "warning: isotropic t-monotonicity negative (reported only)\n";
  }
  return violated ? 3 : 0;
}

// --------------------------------------------------------------- selftest

inline int run_selftest(const ExperimentConfig& ec, std::ostream& log) {
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    log << (ok ? "[pass] " : "[FAIL] ") << what << "\n";
    if (!ok) ++failures;
  };

  const GridSpec g(8, 6);
  const StateVector a = random_state(g, mix_seed(ec.seed, 1), 1.0);
  const StateVector b = random_state(g, mix_seed(ec.seed, 2), 1.0);
  check(std::abs(inner_product_H(a, b) - inner_product_H(b, a)) < 1e-14,
        "inner product symmetry");
  check(inner_product_H(a, a) > 0.0, "inner product positivity");

  StateVector jm = add(lattice_join(a, b), lattice_meet(a, b));
  check(norm_H(sub(jm, add(a, b))) == 0.0, "join + meet = a + b");

  const RegularizerSpec hub(RegularizerKind::huber, 0.5);
  check(std::abs(eval_f(hub, 3.0, 4.0) - 4.75) < 1e-14, "huber closed form");
  check(std::abs(uniform_gap(hub) - 0.25) < 1e-15, "huber uniform gap");

  const EnergyParams sing = EnergyParams::singular_energy(0.5);
  const StateVector c = constant_state(g, 2.5);
  check(eval_phi_star(sing, c).total == 0.0, "constant state has zero energy");

  StepperConfig cfg;
  cfg.inner_tol = 1e-9;
  const ProxResult pr = prox_step(sing, cfg, c, 0.1);
  check(norm_H(sub(pr.state, c)) < 1e-9, "prox fixes equilibria");

  const SampleSweepReport lat = lattice_inequality_check(sing, g, 50, ec.seed);
  check(lat.min_value >= -1e-10, "lattice inequality (50 samples)");

  log << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : 3;
}

// ---------------------------------------------------------------- dispatch

inline int run_command(const std::string& command,
                       const std::string& config_path,
                       const std::optional<std::string>& out_override,
                       const std::optional<std::uint64_t>& seed_override,
                       std::ostream& log) {
  try {
    ConfigMap cfg = config_path.empty()
                        ? ConfigMap::from_string("", "<default>")
                        : ConfigMap::from_file(config_path);
    ExperimentConfig ec = ExperimentConfig::load(cfg);
    if (out_override) ec.output_dir = *out_override;
    if (seed_override) ec.seed = *seed_override;
    if (command == "solve") return run_solve(ec, log);
    if (command == "mosco") return run_mosco(ec, log);
    if (command == "compare") return run_compare(ec, log);
    if (command == "lattice") return run_lattice(ec, log);
    if (command == "selftest") return run_selftest(ec, log);
    log << "unknown command: " << command << "\n";
    return 1;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ConvergenceError& e) {
    log << "solver failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tvdb::cli
