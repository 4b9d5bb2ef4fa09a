/** \file rng.hpp
 *  Seeded random state generation. Distributions are hand-rolled on top of
 *  mt19937_64 so that sweep outputs are reproducible bit-for-bit for a given
 *  seed, independent of the standard library's distribution internals.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "tvdb/grid.hpp"

namespace tvdb {

/// splitmix64; used to derive independent per-sample streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    const double u = double(eng_() >> 11) * 0x1.0p-53;  // [0,1)
    return lo + (hi - lo) * u;
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return mean + stddev * rad * std::cos(ang);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + int(eng_() % std::uint64_t(hi - lo + 1));
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Low-frequency random trigonometric boundary field.
inline BoundaryField random_smooth_boundary(const GridSpec& g, Rng& rng,
                                            double amplitude, int max_mode = 3) {
  BoundaryField f(g);
  const int modes = std::min(max_mode, g.nx / 2 - 1);
  std::vector<double> a(std::size_t(modes) + 1), b(std::size_t(modes) + 1);
  for (int k = 0; k <= modes; ++k) {
    a[std::size_t(k)] = rng.normal();
    b[std::size_t(k)] = rng.normal();
  }
  for (int i = 0; i < g.nx; ++i) {
    const double x = double(i) / g.nx;
    double v = 0.5 * a[0];
    for (int k = 1; k <= modes; ++k)
      v += (a[std::size_t(k)] * std::cos(2.0 * M_PI * k * x) +
            b[std::size_t(k)] * std::sin(2.0 * M_PI * k * x)) / k;
    f.at(i) = amplitude * v;
  }
  return f;
}

/// Low-frequency random bulk field (periodic trig in x, polynomial-trig in y).
inline BulkField random_smooth_bulk(const GridSpec& g, Rng& rng,
                                    double amplitude, int max_mode = 3) {
  BulkField f(g);
  const int modes = std::min(max_mode, g.nx / 2 - 1);
  std::vector<double> coef;
  for (int kx = 0; kx <= modes; ++kx)
    for (int ky = 0; ky <= modes; ++ky)
      for (int ph = 0; ph < 2; ++ph) coef.push_back(rng.normal());
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = double(i) / g.nx, y = double(j) / g.ny;
      double v = 0.0;
      std::size_t c = 0;
      for (int kx = 0; kx <= modes; ++kx)
        for (int ky = 0; ky <= modes; ++ky) {
          const double damp = 1.0 / (1.0 + kx + ky);
          v += damp * coef[c++] * std::cos(2.0 * M_PI * kx * x) *
               std::cos(M_PI * ky * y);
          v += damp * coef[c++] * std::sin(2.0 * M_PI * kx * x) *
               std::cos(M_PI * ky * y);
        }
      f.at(i, j) = amplitude * v;
    }
  return f;
}

/// Random state; gamma fields independent of the trace rows unless
/// trace_constrained is requested.
inline StateVector random_state(const GridSpec& g, std::uint64_t seed,
                                double amplitude = 1.0,
                                bool impose_traces = false) {
  Rng rng(seed);
  StateVector s(g);
  s.bulk = random_smooth_bulk(g, rng, amplitude);
  s.gamma_bottom = random_smooth_boundary(g, rng, amplitude);
  s.gamma_top = random_smooth_boundary(g, rng, amplitude);
  if (impose_traces) impose_trace_constraint(s);
  return s;
}

}  // namespace tvdb
