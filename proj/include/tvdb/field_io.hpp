/** \file field_io.hpp
 *  Binary field format and CSV export.
 *
 *  Binary layout: 16-byte header (magic "TVDB", u32 nx, u32 ny, u32 kind),
 *  then little-endian 64-bit floats, row-major. kind 0 = bulk field with
 *  nx*(ny+1) values, kind 1 = boundary field with nx values. A state dump is
 *  three records back to back: bulk, gamma_bottom, gamma_top.
 */
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvdb/grid.hpp"

namespace tvdb {

enum class FieldKind : std::uint32_t { bulk = 0, boundary = 1 };

namespace detail {

inline void put_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

inline void put_f64_le(std::ostream& os, double v) {
  std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>((u >> (8 * k)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int k = 0; k < 8; ++k) u |= std::uint64_t(b[k]) << (8 * k);
  return std::bit_cast<double>(u);
}

inline void write_record(std::ostream& os, const GridSpec& g, FieldKind kind,
                         const std::vector<double>& values) {
  os.write("TVDB", 4);
  put_u32_le(os, std::uint32_t(g.nx));
  put_u32_le(os, std::uint32_t(g.ny));
  put_u32_le(os, std::uint32_t(kind));
  for (double v : values) put_f64_le(os, v);
}

inline std::vector<double> read_record(std::istream& is, GridSpec& g,
                                       FieldKind& kind) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TVDB", 4) != 0)
    throw std::runtime_error("field read: bad magic");
  const std::uint32_t nx = get_u32_le(is), ny = get_u32_le(is),
                      tag = get_u32_le(is);
  g = GridSpec(int(nx), int(ny), g.lx > 0 ? g.lx : 1.0, g.ly > 0 ? g.ly : 1.0);
  kind = FieldKind(tag);
  const std::size_t count = tag == std::uint32_t(FieldKind::bulk)
                                ? std::size_t(nx) * (ny + 1)
                                : std::size_t(nx);
  std::vector<double> values(count);
  for (double& v : values) v = get_f64_le(is);
  if (!is) throw std::runtime_error("field read: truncated record");
  return values;
}

}  // namespace detail

inline void write_field(std::ostream& os, const BulkField& f) {
  detail::write_record(os, f.grid, FieldKind::bulk, f.values);
}
inline void write_field(std::ostream& os, const BoundaryField& f) {
  detail::write_record(os, f.grid, FieldKind::boundary, f.values);
}

inline void write_state(std::ostream& os, const StateVector& s) {
  write_field(os, s.bulk);
  write_field(os, s.gamma_bottom);
  write_field(os, s.gamma_top);
}

inline void write_state_file(const std::string& path, const StateVector& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_state(os, s);
}

inline StateVector read_state(std::istream& is, double lx = 1.0,
                              double ly = 1.0) {
  GridSpec g;
  g.lx = lx;
  g.ly = ly;
  FieldKind kind;
  std::vector<double> bulk = detail::read_record(is, g, kind);
  if (kind != FieldKind::bulk)
    throw std::runtime_error("state read: expected bulk record first");
  StateVector s(g);
  s.bulk.values = std::move(bulk);
  GridSpec g2 = g;
  s.gamma_bottom.values = detail::read_record(is, g2, kind);
  if (kind != FieldKind::boundary || g2 != g)
    throw std::runtime_error("state read: bad gamma_bottom record");
  s.gamma_top.values = detail::read_record(is, g2, kind);
  if (kind != FieldKind::boundary || g2 != g)
    throw std::runtime_error("state read: bad gamma_top record");
  return s;
}

inline StateVector read_state_file(const std::string& path, double lx = 1.0,
                                   double ly = 1.0) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_state(is, lx, ly);
}

// ------------------------------------------------------------------- CSV

inline void write_field_csv(std::ostream& os, const BulkField& f) {
  os << "i,j,value\n";
  char buf[64];
  for (int j = 0; j <= f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", i, j, f.at(i, j));
      os << buf;
    }
}

inline void write_field_csv(std::ostream& os, const BoundaryField& f) {
  os << "i,j,value\n";
  char buf[64];
  for (int i = 0; i < f.grid.nx; ++i) {
    std::snprintf(buf, sizeof buf, "%d,0,%.17g\n", i, f.at(i));
    os << buf;
  }
}

}  // namespace tvdb
