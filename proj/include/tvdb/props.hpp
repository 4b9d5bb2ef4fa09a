/** \file props.hpp
 *  Order-theoretic verification: the comparison/Gronwall inequality for two
 *  flows, T-monotonicity of prox-generated subgradient pairs, and the lattice
 *  (submodularity) inequality sweep.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tvdb/energies.hpp"
#include "tvdb/flow.hpp"
#include "tvdb/grid.hpp"
#include "tvdb/parallel.hpp"
#include "tvdb/rng.hpp"

namespace tvdb {

struct ComparisonStep {
  double t = 0.0;
  double lhs = 0.0;            // |[u1-u2]^+|^2 in the H quadrature
  double rhs = 0.0;            // Gronwall bound, stepwise recursion
  double rhs_direct = 0.0;     // same bound by direct quadrature
  double slack = 0.0;          // rhs - lhs; negative = violation
  double max_positive_part = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonStep> steps;
  double worst_violation = 0.0;      // min over steps of (rhs - lhs)
  double max_ordering_defect = 0.0;  // max over steps of max entry [U1-U2]^+
  double rhs_two_way_rel_err = 0.0;
  double allowed_slack = 0.0;        // tolerance used by pass/fail consumers
  bool within_slack = true;
};

namespace detail {

inline void require_matching_problems(const EvolutionProblem& a,
                                      const EvolutionProblem& b) {
  if (a.u0.grid() != b.u0.grid())
    throw std::invalid_argument("comparison_check: grids differ");
  if (a.tau != b.tau || a.horizon != b.horizon)
    throw std::invalid_argument("comparison_check: tau/T differ");
  const EnergyParams &p = a.params, &q = b.params;
  const bool same_reg =
      p.singular() == q.singular() &&
      (p.singular() || (p.regularizer->kind == q.regularizer->kind &&
                        p.regularizer->delta == q.regularizer->delta));
  if (p.epsilon != q.epsilon || p.kappa != q.kappa ||
      p.tv_mode != q.tv_mode || !same_reg)
    throw std::invalid_argument("comparison_check: energy params differ");
}

inline double positive_part_norm_sq(const StateVector& a,
                                    const StateVector& b) {
  const StateVector d = positive_part(sub(a, b));
  return inner_product_H(d, d);
}

}  // namespace detail

/// Solves both problems and checks the exponential comparison estimate
///   |[U1-U2]^+(t)|^2 <= e^t |[U1_0-U2_0]^+|^2
///                       + int_0^t e^(t-s) |[Theta1-Theta2]^+(s)|^2 ds
/// with right-endpoint quadrature matched to the implicit stepping.
inline ComparisonReport comparison_check(const EvolutionProblem& problem1,
                                         const EvolutionProblem& problem2,
                                         const StepperConfig& config) {
  detail::require_matching_problems(problem1, problem2);
  const GridSpec& g = problem1.u0.grid();
  const int M = problem1.step_count();
  const double tau = problem1.tau;

  Trajectory tr[2];
  const EvolutionProblem* problems[2] = {&problem1, &problem2};
  parallel_for(2, [&](int k) { tr[k] = run_flow(*problems[k], config); });

  ComparisonReport rep;
  rep.steps.resize(std::size_t(M) + 1);
  const double lhs0 =
      detail::positive_part_norm_sq(tr[0].states[0], tr[1].states[0]);

  double rhs_rec = lhs0;
  std::vector<double> sources(std::size_t(M) + 1, 0.0);
  for (int m = 1; m <= M; ++m) {
    const double t_m = m * tau;
    const StateVector th1 = problem1.source.sample(t_m, g);
    const StateVector th2 = problem2.source.sample(t_m, g);
    sources[std::size_t(m)] = detail::positive_part_norm_sq(th1, th2);
  }

  rep.worst_violation = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= M; ++m) {
    ComparisonStep st;
    st.t = m * tau;
    st.lhs = detail::positive_part_norm_sq(tr[0].states[std::size_t(m)],
                                           tr[1].states[std::size_t(m)]);
    if (m > 0)
      rhs_rec = std::exp(tau) * rhs_rec +
                std::exp(tau) * tau * sources[std::size_t(m)];
    st.rhs = m == 0 ? lhs0 : rhs_rec;
    double direct = std::exp(st.t) * lhs0;
    for (int k = 1; k <= m; ++k)
      direct += std::exp(st.t - (k - 1) * tau) * tau * sources[std::size_t(k)];
    st.rhs_direct = direct;
    st.slack = st.rhs - st.lhs;
    st.max_positive_part = std::max(
        0.0, max_entry(sub(tr[0].states[std::size_t(m)],
                           tr[1].states[std::size_t(m)])));
    rep.worst_violation = std::min(rep.worst_violation, st.slack);
    rep.max_ordering_defect =
        std::max(rep.max_ordering_defect, st.max_positive_part);
    const double denom = std::max(1.0, std::abs(st.rhs));
    rep.rhs_two_way_rel_err = std::max(
        rep.rhs_two_way_rel_err, std::abs(st.rhs - st.rhs_direct) / denom);
    rep.steps[std::size_t(m)] = st;
  }

  // inner-solver floor plus the provable excess of the discrete recursion
  double allowed = std::max(1e-6, 100.0 * config.inner_tol);
  for (int m = 0; m <= M; ++m) {
    const double excess =
        std::expm1(0.5 * m * tau * tau) * rep.steps[std::size_t(m)].rhs;
    const double need = rep.steps[std::size_t(m)].lhs -
                        rep.steps[std::size_t(m)].rhs;
    if (need > allowed + excess) rep.within_slack = false;
  }
  rep.allowed_slack = allowed;
  return rep;
}

struct SampleSweepReport {
  std::vector<double> values;
  double min_value = 0.0;
  int min_index = -1;
  std::uint64_t seed = 0;
};

/// T-monotonicity of prox-generated subgradient pairs:
/// (G1 - G2, [U1 - U2]^+)_H over random (Z, tau) draws.
inline SampleSweepReport t_monotonicity_check(const EnergyParams& params,
                                              const GridSpec& grid,
                                              const StepperConfig& config,
                                              int sample_count,
                                              std::uint64_t rng_seed,
                                              double tau_lo = 0.02,
                                              double tau_hi = 0.1) {
  SampleSweepReport rep;
  rep.seed = rng_seed;
  rep.values.assign(std::size_t(sample_count), 0.0);
  parallel_for(sample_count, [&](int s) {
    Rng rng(mix_seed(rng_seed, std::uint64_t(s)));
    const double tau = rng.uniform(tau_lo, tau_hi);
    const StateVector Z1 =
        random_state(grid, mix_seed(rng_seed, 2 * std::uint64_t(s) + 1), 1.0,
                     !params.singular());
    const StateVector Z2 =
        random_state(grid, mix_seed(rng_seed, 2 * std::uint64_t(s) + 2), 1.0,
                     !params.singular());
    const ProxResult r1 = prox_step(params, config, Z1, tau);
    const ProxResult r2 = prox_step(params, config, Z2, tau);
    const StateVector G1 = prox_subgradient(params, Z1, tau, r1.state);
    const StateVector G2 = prox_subgradient(params, Z2, tau, r2.state);
    const StateVector P = positive_part(sub(r1.state, r2.state));
    rep.values[std::size_t(s)] = inner_product_H(sub(G1, G2), P);
  });
  rep.min_value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < sample_count; ++s)
    if (rep.values[std::size_t(s)] < rep.min_value) {
      rep.min_value = rep.values[std::size_t(s)];
      rep.min_index = s;
    }
  return rep;
}

/// Lattice inequality sweep over random pairs; for the regularized energy the
/// pairs are trace-constrained. Returns the per-sample submodularity gaps.
inline SampleSweepReport lattice_inequality_check(const EnergyParams& params,
                                                  const GridSpec& grid,
                                                  int sample_count,
                                                  std::uint64_t rng_seed,
                                                  double amplitude = 1.0) {
  SampleSweepReport rep;
  rep.seed = rng_seed;
  rep.values.assign(std::size_t(sample_count), 0.0);
  const bool traces = !params.singular();
  parallel_for(sample_count, [&](int s) {
    const StateVector a = random_state(
        grid, mix_seed(rng_seed, 2 * std::uint64_t(s)), amplitude, traces);
    const StateVector b = random_state(
        grid, mix_seed(rng_seed, 2 * std::uint64_t(s) + 1), amplitude, traces);
    rep.values[std::size_t(s)] = submodularity_gap(params, a, b);
  });
  rep.min_value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < sample_count; ++s)
    if (rep.values[std::size_t(s)] < rep.min_value) {
      rep.min_value = rep.values[std::size_t(s)];
      rep.min_index = s;
    }
  return rep;
}

}  // namespace tvdb
