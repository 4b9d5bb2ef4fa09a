/** \file regularizers.hpp
 *  The family {f_delta}: Huber (Moreau envelope of the Euclidean norm) and
 *  the shifted hyperbola sqrt(|w|^2 + delta^2) - delta. Both are convex,
 *  vanish at 0, have gradients bounded by 1, and converge uniformly to |.|
 *  with an analytic uniform gap.
 */
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tvdb {

enum class RegularizerKind { huber, hyperbola_shifted };

inline const char* to_string(RegularizerKind k) {
  return k == RegularizerKind::huber ? "huber" : "hyperbola_shifted";
}

inline RegularizerKind regularizer_kind_from_string(const std::string& s) {
  if (s == "huber") return RegularizerKind::huber;
  if (s == "hyperbola_shifted") return RegularizerKind::hyperbola_shifted;
  throw std::invalid_argument("unknown regularizer kind: " + s);
}

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::huber;
  double delta = 0.5;

  RegularizerSpec() = default;
  RegularizerSpec(RegularizerKind k, double d) : kind(k), delta(d) {
    if (!(delta > 0.0) || delta > 1.0)
      throw std::invalid_argument("RegularizerSpec: delta must be in (0, 1]");
  }
};

/// Radial profile f_delta(|w|) as a function of r = |w| >= 0.
inline double eval_f_radial(const RegularizerSpec& spec, double r) {
  const double d = spec.delta;
  if (spec.kind == RegularizerKind::huber)
    return r <= d ? r * r / (2.0 * d) : r - d / 2.0;
  return std::sqrt(r * r + d * d) - d;
}

/// Derivative of the radial profile; lies in [0, 1].
inline double grad_f_radial(const RegularizerSpec& spec, double r) {
  const double d = spec.delta;
  if (spec.kind == RegularizerKind::huber) return r <= d ? r / d : 1.0;
  return r / std::sqrt(r * r + d * d);
}

inline double eval_f(const RegularizerSpec& spec, double wx, double wy) {
  return eval_f_radial(spec, std::hypot(wx, wy));
}

inline std::array<double, 2> grad_f(const RegularizerSpec& spec, double wx,
                                    double wy) {
  const double r = std::hypot(wx, wy);
  if (r == 0.0) return {0.0, 0.0};
  const double slope = grad_f_radial(spec, r) / r;
  return {slope * wx, slope * wy};
}

/// sup over R^N of |f_delta(w) - |w||: delta/2 for Huber (attained at
/// |w| = delta), delta for the shifted hyperbola (approached as |w| -> inf).
inline double uniform_gap(const RegularizerSpec& spec) {
  return spec.kind == RegularizerKind::huber ? spec.delta / 2.0 : spec.delta;
}

/// Upper bound on the curvature of f_delta (Lipschitz constant of grad f).
inline double curvature_bound(const RegularizerSpec& spec) {
  return 1.0 / spec.delta;
}

}  // namespace tvdb
