/** \file scenarios.hpp
 *  Named initial data and sources for the experiment runner.
 */
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "tvdb/grid.hpp"
#include "tvdb/rng.hpp"

namespace tvdb {

/// Constant state, gamma fields matching the trace rows.
inline StateVector constant_state(const GridSpec& g, double value) {
  return StateVector(g, value);
}

/// Vertical step: high value on the lower half of the strip, boundary fields
/// equal to the traces.
inline StateVector step_y_state(const GridSpec& g, double hi = 1.0,
                                double lo = 0.0) {
  StateVector s(g);
  for (int j = 0; j <= g.ny; ++j) {
    const double v = (j * g.dy() < 0.5 * g.ly) ? hi : lo;
    for (int i = 0; i < g.nx; ++i) s.bulk.at(i, j) = v;
  }
  impose_trace_constraint(s);
  return s;
}

/// Indicator of the half strip x in [0, lx/2), traces matching.
inline StateVector step_x_state(const GridSpec& g, double hi = 1.0,
                                double lo = 0.0) {
  StateVector s(g);
  for (int i = 0; i < g.nx; ++i) {
    const double v = (i * g.dx() < 0.5 * g.lx) ? hi : lo;
    for (int j = 0; j <= g.ny; ++j) s.bulk.at(i, j) = v;
  }
  impose_trace_constraint(s);
  return s;
}

/// Zero bulk with mismatching boundary data: the jump term carries all the
/// energy. The canonical Mosco target.
inline StateVector boundary_jump_state(const GridSpec& g, double bottom = 1.0,
                                       double top = 0.0) {
  StateVector s(g);
  for (int i = 0; i < g.nx; ++i) {
    s.gamma_bottom.at(i) = bottom;
    s.gamma_top.at(i) = top;
  }
  return s;
}

inline StateVector random_smooth_state(const GridSpec& g, std::uint64_t seed,
                                       double amplitude,
                                       bool impose_traces = true) {
  return random_state(g, seed, amplitude, impose_traces);
}

inline StateVector make_scenario_state(const std::string& name,
                                       const GridSpec& g, double amplitude,
                                       std::uint64_t seed) {
  if (name == "constant") return constant_state(g, amplitude);
  if (name == "step_y") return step_y_state(g, amplitude, 0.0);
  if (name == "step_x") return step_x_state(g, amplitude, 0.0);
  if (name == "boundary_jump") return boundary_jump_state(g, amplitude, 0.0);
  if (name == "random_smooth") return random_smooth_state(g, seed, amplitude);
  throw std::invalid_argument("unknown scenario: " + name);
}

inline SourceTerm make_source(const std::string& name, const GridSpec& g,
                              double amplitude, std::uint64_t seed) {
  if (name == "zero" || name.empty()) return SourceTerm::zero();
  if (name == "constant") {
    StateVector c = constant_state(g, amplitude);
    return SourceTerm([c](double) { return c; });
  }
  if (name == "random_smooth") {
    StateVector c = random_smooth_state(g, seed, amplitude, false);
    return SourceTerm([c](double) { return c; });
  }
  throw std::invalid_argument("unknown source: " + name);
}

}  // namespace tvdb
