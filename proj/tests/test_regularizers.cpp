#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tvdb/regularizers.hpp"
#include "tvdb/rng.hpp"

using namespace tvdb;

namespace {

// independent cross-check: the Huber value is the Moreau envelope of the
// Euclidean norm, min_z |z| + |z - w|^2 / (2 delta), minimized on a fine line
double moreau_envelope_norm(double wx, double wy, double delta) {
  const double r = std::hypot(wx, wy);
  double best = 1e300;
  const int steps = 400000;
  for (int k = 0; k <= steps; ++k) {
    const double t = -0.5 + (r + 1.0) * double(k) / steps;
    const double v = std::abs(t) + (t - r) * (t - r) / (2.0 * delta);
    best = std::min(best, v);
  }
  return best;
}

}  // namespace

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(RegularizerSpec(RegularizerKind::huber, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(RegularizerSpec(RegularizerKind::huber, 1.5),
                  std::invalid_argument);
  CHECK_NOTHROW(RegularizerSpec(RegularizerKind::hyperbola_shifted, 1.0));
}

TEST_CASE("closed-form values") {
  const RegularizerSpec hub(RegularizerKind::huber, 0.5);
  CHECK(eval_f(hub, 0.0, 0.0) == 0.0);
  CHECK(eval_f(hub, 3.0, 4.0) == Catch::Approx(4.75).epsilon(1e-15));
  CHECK(eval_f(hub, 3.0, 4.0) ==
        Catch::Approx(moreau_envelope_norm(3.0, 4.0, 0.5)).epsilon(1e-6));

  const RegularizerSpec hyp(RegularizerKind::hyperbola_shifted, 0.1);
  CHECK(eval_f(hyp, 0.0, 0.0) == 0.0);
  CHECK(eval_f(hyp, 0.3, 0.4) ==
        Catch::Approx(std::sqrt(0.26) - 0.1).epsilon(1e-15));
}

TEST_CASE("gradients") {
  const RegularizerSpec hub(RegularizerKind::huber, 0.5);
  auto g0 = grad_f(hub, 0.0, 0.0);
  CHECK(g0[0] == 0.0);
  CHECK(g0[1] == 0.0);

  auto g1 = grad_f(hub, 3.0, 4.0);  // |w| > delta branch
  CHECK(g1[0] == Catch::Approx(0.6).epsilon(1e-15));
  CHECK(g1[1] == Catch::Approx(0.8).epsilon(1e-15));

  auto g2 = grad_f(hub, 0.1, 0.0);  // quadratic branch
  CHECK(g2[0] == Catch::Approx(0.2).epsilon(1e-15));
  CHECK(g2[1] == 0.0);
}

TEST_CASE("gradient matches central differences away from the kink") {
  Rng rng(17);
  for (RegularizerKind kind :
       {RegularizerKind::huber, RegularizerKind::hyperbola_shifted}) {
    const RegularizerSpec spec(kind, 0.3);
    for (int s = 0; s < 300; ++s) {
      double wx = rng.normal(0, 2), wy = rng.normal(0, 2);
      if (kind == RegularizerKind::huber &&
          std::abs(std::hypot(wx, wy) - spec.delta) < 1e-3)
        continue;
      const double h = 1e-6;
      const double dfx =
          (eval_f(spec, wx + h, wy) - eval_f(spec, wx - h, wy)) / (2 * h);
      const double dfy =
          (eval_f(spec, wx, wy + h) - eval_f(spec, wx, wy - h)) / (2 * h);
      auto g = grad_f(spec, wx, wy);
      CHECK(std::abs(g[0] - dfx) <= 1e-6);
      CHECK(std::abs(g[1] - dfy) <= 1e-6);
      CHECK(std::hypot(g[0], g[1]) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("convexity probe") {
  Rng rng(23);
  for (RegularizerKind kind :
       {RegularizerKind::huber, RegularizerKind::hyperbola_shifted}) {
    const RegularizerSpec spec(kind, 0.25);
    for (int s = 0; s < 500; ++s) {
      const double ax = rng.normal(0, 3), ay = rng.normal(0, 3);
      const double bx = rng.normal(0, 3), by = rng.normal(0, 3);
      const double lam = rng.uniform();
      const double mid = eval_f(spec, lam * ax + (1 - lam) * bx,
                                lam * ay + (1 - lam) * by);
      const double chord =
          lam * eval_f(spec, ax, ay) + (1 - lam) * eval_f(spec, bx, by);
      CHECK(mid <= chord + 1e-12);
      CHECK(eval_f(spec, ax, ay) >= 0.0);
    }
  }
}

TEST_CASE("uniform gap values and bound") {
  CHECK(uniform_gap(RegularizerSpec(RegularizerKind::huber, 0.5)) == 0.25);
  CHECK(uniform_gap(RegularizerSpec(RegularizerKind::hyperbola_shifted, 0.1)) ==
        Catch::Approx(0.1));

  // gap halves with delta (huber linearity)
  for (int n = 1; n < 8; ++n) {
    const double g1 =
        uniform_gap(RegularizerSpec(RegularizerKind::huber, std::pow(2.0, -n)));
    const double g2 = uniform_gap(
        RegularizerSpec(RegularizerKind::huber, std::pow(2.0, -n - 1)));
    CHECK(g1 == Catch::Approx(2.0 * g2).epsilon(1e-15));
  }

  // |f_delta(w) - |w|| <= uniform_gap, sampled
  Rng rng(31);
  for (RegularizerKind kind :
       {RegularizerKind::huber, RegularizerKind::hyperbola_shifted}) {
    for (double delta : {1.0, 0.5, 0.1, 0.01}) {
      const RegularizerSpec spec(kind, delta);
      const double gap = uniform_gap(spec);
      double sampled = 0.0;
      for (int s = 0; s < 100000; ++s) {
        const double wx = rng.uniform(-10, 10), wy = rng.uniform(-10, 10);
        sampled = std::max(
            sampled, std::abs(eval_f(spec, wx, wy) - std::hypot(wx, wy)));
      }
      CHECK(sampled <= gap + 1e-15);
      CHECK(sampled >= 0.5 * gap);  // the bound is attained up to sampling
    }
  }
}
