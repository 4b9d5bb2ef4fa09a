/** \file grid.hpp
 *  Flat periodic-strip geometry: field containers, the product-space inner
 *  product, discrete differential operators and lattice (max/min) operators.
 *
 *  The domain is a strip of extent lx x ly, periodic in x. Bulk fields are
 *  node-centered on an nx x (ny+1) grid; rows j = 0 and j = ny are the trace
 *  rows of the bottom/top boundary components. Each boundary component
 *  carries its own periodic field of length nx.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvdb {

struct GridSpec {
  int nx = 0;        // nodes in periodic x-direction
  int ny = 0;        // interior row count; rows run j = 0..ny
  double lx = 1.0;
  double ly = 1.0;

  GridSpec() = default;
  GridSpec(int nx_, int ny_, double lx_ = 1.0, double ly_ = 1.0)
      : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
    if (nx < 4) throw std::invalid_argument("GridSpec: nx must be >= 4");
    if (ny < 3) throw std::invalid_argument("GridSpec: ny must be >= 3");
    if (!(lx > 0.0) || !(ly > 0.0))
      throw std::invalid_argument("GridSpec: lx, ly must be positive");
  }

  double dx() const { return lx / nx; }
  double dy() const { return ly / ny; }
  int rows() const { return ny + 1; }
  std::size_t bulk_size() const { return std::size_t(nx) * (ny + 1); }

  bool operator==(const GridSpec& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
  }
  bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

/// Node-centered bulk field, layout row-major in j: index (i, j) -> j*nx + i.
struct BulkField {
  GridSpec grid;
  std::vector<double> values;

  BulkField() = default;
  explicit BulkField(const GridSpec& g, double fill = 0.0)
      : grid(g), values(g.bulk_size(), fill) {}

  double& at(int i, int j) { return values[std::size_t(j) * grid.nx + i]; }
  double at(int i, int j) const { return values[std::size_t(j) * grid.nx + i]; }
  // periodic access in x
  double atp(int i, int j) const {
    int ii = i % grid.nx;
    if (ii < 0) ii += grid.nx;
    return values[std::size_t(j) * grid.nx + ii];
  }
};

/// Periodic field on one boundary component.
struct BoundaryField {
  GridSpec grid;
  std::vector<double> values;

  BoundaryField() = default;
  explicit BoundaryField(const GridSpec& g, double fill = 0.0)
      : grid(g), values(std::size_t(g.nx), fill) {}

  double& at(int i) { return values[std::size_t(i)]; }
  double at(int i) const { return values[std::size_t(i)]; }
  double atp(int i) const {
    int ii = i % grid.nx;
    if (ii < 0) ii += grid.nx;
    return values[std::size_t(ii)];
  }
};

/// W = [w, w_Gamma] with one boundary field per component.
struct StateVector {
  BulkField bulk;
  BoundaryField gamma_bottom;
  BoundaryField gamma_top;

  StateVector() = default;
  explicit StateVector(const GridSpec& g, double fill = 0.0)
      : bulk(g, fill), gamma_bottom(g, fill), gamma_top(g, fill) {}

  const GridSpec& grid() const { return bulk.grid; }
};

inline void require_same_grid(const StateVector& a, const StateVector& b,
                              const char* where) {
  if (a.grid() != b.grid())
    throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

inline bool all_finite(const StateVector& s) {
  for (double v : s.bulk.values)
    if (!std::isfinite(v)) return false;
  for (double v : s.gamma_bottom.values)
    if (!std::isfinite(v)) return false;
  for (double v : s.gamma_top.values)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Time-indexed source sampler for Theta(t) = [theta, theta_Gamma].
struct SourceTerm {
  std::function<StateVector(double)> sample_fn;

  SourceTerm() = default;
  explicit SourceTerm(std::function<StateVector(double)> fn)
      : sample_fn(std::move(fn)) {}

  bool is_zero() const { return !sample_fn; }

  StateVector sample(double t, const GridSpec& g) const {
    if (!sample_fn) return StateVector(g, 0.0);
    StateVector s = sample_fn(t);
    if (s.grid() != g)
      throw std::invalid_argument("SourceTerm: sampled grid mismatch");
    if (!all_finite(s))
      throw std::invalid_argument("SourceTerm: non-finite sample");
    return s;
  }

  static SourceTerm zero() { return SourceTerm(); }
};

// ------------------------------------------------------------ H structure

/// Rectangle-rule inner product of H = L2(Omega) x L2(Gamma):
/// bulk weight dx*dy on all nx*(ny+1) nodes, weight dx per boundary node.
inline double inner_product_H(const StateVector& a, const StateVector& b) {
  require_same_grid(a, b, "inner_product_H");
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (std::size_t k = 0; k < a.bulk.values.size(); ++k)
    s += a.bulk.values[k] * b.bulk.values[k];
  s *= g.dx() * g.dy();
  double sb = 0.0;
  for (int i = 0; i < g.nx; ++i)
    sb += a.gamma_bottom.values[i] * b.gamma_bottom.values[i] +
          a.gamma_top.values[i] * b.gamma_top.values[i];
  return s + sb * g.dx();
}

inline double norm_H(const StateVector& a) {
  return std::sqrt(inner_product_H(a, a));
}

// -------------------------------------------------------- linear algebra

inline StateVector& axpy(StateVector& y, double alpha, const StateVector& x) {
  require_same_grid(y, x, "axpy");
  for (std::size_t k = 0; k < y.bulk.values.size(); ++k)
    y.bulk.values[k] += alpha * x.bulk.values[k];
  for (std::size_t k = 0; k < y.gamma_bottom.values.size(); ++k) {
    y.gamma_bottom.values[k] += alpha * x.gamma_bottom.values[k];
    y.gamma_top.values[k] += alpha * x.gamma_top.values[k];
  }
  return y;
}

inline StateVector add(const StateVector& a, const StateVector& b) {
  StateVector r = a;
  axpy(r, 1.0, b);
  return r;
}

inline StateVector sub(const StateVector& a, const StateVector& b) {
  StateVector r = a;
  axpy(r, -1.0, b);
  return r;
}

inline StateVector scaled(const StateVector& a, double alpha) {
  StateVector r = a;
  for (double& v : r.bulk.values) v *= alpha;
  for (double& v : r.gamma_bottom.values) v *= alpha;
  for (double& v : r.gamma_top.values) v *= alpha;
  return r;
}

inline StateVector& shift(StateVector& a, double c) {
  for (double& v : a.bulk.values) v += c;
  for (double& v : a.gamma_bottom.values) v += c;
  for (double& v : a.gamma_top.values) v += c;
  return a;
}

// --------------------------------------------------- difference operators

/// Forward differences per cell: gx[i,j] = (w[i+1 mod nx, j] - w[i,j]) / dx,
/// gy[i,j] = (w[i,j+1] - w[i,j]) / dy, cells (i,j) with j = 0..ny-1.
struct GradientField {
  GridSpec grid;
  std::vector<double> gx, gy;  // size nx*ny, cell (i,j) -> j*nx + i

  explicit GradientField(const GridSpec& g)
      : grid(g),
        gx(std::size_t(g.nx) * g.ny, 0.0),
        gy(std::size_t(g.nx) * g.ny, 0.0) {}

  std::size_t idx(int i, int j) const { return std::size_t(j) * grid.nx + i; }
};

inline GradientField forward_gradient(const BulkField& w) {
  const GridSpec& g = w.grid;
  GradientField out(g);
  const double inv_dx = 1.0 / g.dx(), inv_dy = 1.0 / g.dy();
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int ip = (i + 1 == g.nx) ? 0 : i + 1;
      out.gx[out.idx(i, j)] = (w.at(ip, j) - w.at(i, j)) * inv_dx;
      out.gy[out.idx(i, j)] = (w.at(i, j + 1) - w.at(i, j)) * inv_dy;
    }
  }
  return out;
}

/// Periodic forward difference (g[i+1 mod nx] - g[i]) / dx.
inline std::vector<double> surface_gradient(const BoundaryField& g) {
  const int nx = g.grid.nx;
  const double inv_dx = 1.0 / g.grid.dx();
  std::vector<double> out(static_cast<std::size_t>(nx));
  for (int i = 0; i < nx; ++i) {
    const int ip = (i + 1 == nx) ? 0 : i + 1;
    out[std::size_t(i)] = (g.at(ip) - g.at(i)) * inv_dx;
  }
  return out;
}

/// Discrete Laplace-Beltrami quadratic form: dx * sum_i |surface_gradient|^2.
inline double surface_dirichlet_form(const BoundaryField& g) {
  std::vector<double> d = surface_gradient(g);
  double s = 0.0;
  for (double v : d) s += v * v;
  return s * g.grid.dx();
}

// ----------------------------------------------------------- lattice ops

inline StateVector lattice_join(const StateVector& a, const StateVector& b) {
  require_same_grid(a, b, "lattice_join");
  StateVector r = a;
  for (std::size_t k = 0; k < r.bulk.values.size(); ++k)
    r.bulk.values[k] = std::max(a.bulk.values[k], b.bulk.values[k]);
  for (std::size_t k = 0; k < r.gamma_bottom.values.size(); ++k) {
    r.gamma_bottom.values[k] =
        std::max(a.gamma_bottom.values[k], b.gamma_bottom.values[k]);
    r.gamma_top.values[k] = std::max(a.gamma_top.values[k], b.gamma_top.values[k]);
  }
  return r;
}

inline StateVector lattice_meet(const StateVector& a, const StateVector& b) {
  require_same_grid(a, b, "lattice_meet");
  StateVector r = a;
  for (std::size_t k = 0; k < r.bulk.values.size(); ++k)
    r.bulk.values[k] = std::min(a.bulk.values[k], b.bulk.values[k]);
  for (std::size_t k = 0; k < r.gamma_bottom.values.size(); ++k) {
    r.gamma_bottom.values[k] =
        std::min(a.gamma_bottom.values[k], b.gamma_bottom.values[k]);
    r.gamma_top.values[k] = std::min(a.gamma_top.values[k], b.gamma_top.values[k]);
  }
  return r;
}

inline StateVector positive_part(const StateVector& a) {
  StateVector r = a;
  for (double& v : r.bulk.values) v = std::max(v, 0.0);
  for (double& v : r.gamma_bottom.values) v = std::max(v, 0.0);
  for (double& v : r.gamma_top.values) v = std::max(v, 0.0);
  return r;
}

inline double max_entry(const StateVector& a) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : a.bulk.values) m = std::max(m, v);
  for (double v : a.gamma_bottom.values) m = std::max(m, v);
  for (double v : a.gamma_top.values) m = std::max(m, v);
  return m;
}

/// gamma fields equal to the trace rows, bitwise.
inline bool trace_constrained(const StateVector& s) {
  const GridSpec& g = s.grid();
  for (int i = 0; i < g.nx; ++i) {
    if (s.gamma_bottom.at(i) != s.bulk.at(i, 0)) return false;
    if (s.gamma_top.at(i) != s.bulk.at(i, g.ny)) return false;
  }
  return true;
}

/// Copy trace rows into the gamma fields.
inline void impose_trace_constraint(StateVector& s) {
  const GridSpec& g = s.grid();
  for (int i = 0; i < g.nx; ++i) {
    s.gamma_bottom.at(i) = s.bulk.at(i, 0);
    s.gamma_top.at(i) = s.bulk.at(i, g.ny);
  }
}

}  // namespace tvdb
