/** \file config.hpp
 *  Flat key-value experiment configuration (dotted section keys, '#'
 *  comments). Validation failures name the offending key and line.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvdb/energies.hpp"
#include "tvdb/flow.hpp"
#include "tvdb/grid.hpp"

namespace tvdb {

struct ConfigError : std::runtime_error {
  std::string key;
  explicit ConfigError(const std::string& msg, std::string k = "")
      : std::runtime_error(msg), key(std::move(k)) {}
};

class ConfigMap {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigMap from_string(const std::string& text,
                               const std::string& origin = "<string>") {
    ConfigMap cfg;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected 'key = value', got '" + trimmed + "'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.entries_[key] = Entry{value, lineno};
    }
    return cfg;
  }

  static ConfigMap from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return from_string(ss.str(), path);
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback = "") const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    return parse_double(key, it->second);
  }

  long get_long(const std::string& key, long fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const long v = std::stol(it->second.value, &pos);
      if (pos != it->second.value.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      fail(key, it->second, "not an integer");
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(it->second.value, &pos);
      if (pos != it->second.value.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      fail(key, it->second, "not a nonnegative integer");
    }
  }

  std::vector<double> get_double_list(const std::string& key) const {
    auto it = entries_.find(key);
    std::vector<double> out;
    if (it == entries_.end()) return out;
    std::istringstream is(it->second.value);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      Entry e{trim(tok), it->second.line};
      if (e.value.empty()) continue;
      out.push_back(parse_double(key, e));
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    if (it != entries_.end()) fail(key, it->second, msg);
    throw ConfigError(origin_ + ": key '" + key + "': " + msg, key);
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::string& origin() const { return origin_; }

 private:
  static std::string trim(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  double parse_double(const std::string& key, const Entry& e) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      fail(key, e, "not a number");
    }
  }

  [[noreturn]] void fail(const std::string& key, const Entry& e,
                         const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": key '" + key +
                          "' = '" + e.value + "': " + msg,
                      key);
  }

  std::map<std::string, Entry> entries_;
  std::string origin_;
};

/// Everything a command run needs, validated against the module invariants.
struct ExperimentConfig {
  GridSpec grid;
  EnergyParams params;
  double tau = 1e-2;
  double horizon = 0.1;
  StepperConfig stepper;
  std::string scenario_initial = "step_y";
  double scenario_amplitude = 1.0;
  std::string scenario_source = "zero";
  double source_amplitude = 0.0;
  std::vector<double> schedule_deltas, schedule_kappas;
  std::string output_dir = "out";
  int checkpoint_stride = 0;  // 0 => no checkpoints
  bool csv_enabled = true;
  std::uint64_t seed = 1;
  std::string mosco_mode = "m2";
  std::string compare_mode = "uniform_shift";
  double compare_shift = 0.5;
  int lattice_samples = 1000;
  int tmono_samples = 200;
  ConfigMap raw;

  static ExperimentConfig load(const ConfigMap& cfg) {
    ExperimentConfig ec;
    ec.raw = cfg;
    const long nx = cfg.get_long("grid.nx", 32);
    const long ny = cfg.get_long("grid.ny", 24);
    const double lx = cfg.get_double("grid.lx", 1.0);
    const double ly = cfg.get_double("grid.ly", 1.0);
    if (nx < 4) cfg.fail("grid.nx", "must be >= 4");
    if (ny < 3) cfg.fail("grid.ny", "must be >= 3");
    if (!(lx > 0.0)) cfg.fail("grid.lx", "must be > 0");
    if (!(ly > 0.0)) cfg.fail("grid.ly", "must be > 0");
    ec.grid = GridSpec(int(nx), int(ny), lx, ly);

    const double eps = cfg.get_double("energy.epsilon", 0.5);
    if (!(eps > 0.0)) cfg.fail("energy.epsilon", "must be > 0");
    const double kappa = cfg.get_double("energy.kappa", 0.0);
    if (kappa < 0.0) cfg.fail("energy.kappa", "must be >= 0");
    TvMode mode;
    try {
      mode = tv_mode_from_string(cfg.get_string("energy.tv_mode", "anisotropic"));
    } catch (const std::invalid_argument& e) {
      cfg.fail("energy.tv_mode", e.what());
    }
    if (cfg.has("regularizer.kind")) {
      RegularizerKind kind;
      try {
        kind = regularizer_kind_from_string(cfg.get_string("regularizer.kind"));
      } catch (const std::invalid_argument& e) {
        cfg.fail("regularizer.kind", e.what());
      }
      const double delta = cfg.get_double("regularizer.delta", 0.5);
      if (!(delta > 0.0) || delta > 1.0)
        cfg.fail("regularizer.delta", "must lie in (0, 1]");
      ec.params = EnergyParams::regularized_energy(
          eps, kappa, RegularizerSpec(kind, delta), mode);
    } else {
      ec.params = EnergyParams::singular_energy(eps, mode);
    }

    ec.tau = cfg.get_double("flow.tau", 1e-3);
    if (!(ec.tau > 0.0)) cfg.fail("flow.tau", "must be > 0");
    ec.horizon = cfg.get_double("flow.T", 0.1);
    if (!(ec.horizon > 0.0)) cfg.fail("flow.T", "must be > 0");
    {
      const double ratio = ec.horizon / ec.tau;
      const long m = std::lround(ratio);
      if (m < 1 || std::abs(ratio - double(m)) > 1e-9 * std::max(1.0, ratio))
        cfg.fail("flow.tau", "T/tau must be a positive integer");
    }
    ec.stepper.inner_tol = cfg.get_double("flow.inner_tol", 1e-8);
    if (!(ec.stepper.inner_tol > 0.0)) cfg.fail("flow.inner_tol", "must be > 0");
    ec.stepper.inner_max_iters = cfg.get_long("flow.inner_max_iters", 20000);
    if (ec.stepper.inner_max_iters < 1)
      cfg.fail("flow.inner_max_iters", "must be >= 1");

    ec.scenario_initial = cfg.get_string("scenario.initial", "step_y");
    ec.scenario_amplitude = cfg.get_double("scenario.amplitude", 1.0);
    ec.scenario_source = cfg.get_string("scenario.source", "zero");
    ec.source_amplitude = cfg.get_double("scenario.source_amplitude", 0.0);

    ec.schedule_deltas = cfg.get_double_list("schedule.delta");
    ec.schedule_kappas = cfg.get_double_list("schedule.kappa");
    if (cfg.has("schedule.count")) {
      const long count = cfg.get_long("schedule.count", 0);
      if (count < 4) cfg.fail("schedule.count", "need N_sweep >= 4");
      ec.schedule_deltas.clear();
      ec.schedule_kappas.clear();
      for (long n = 1; n <= count; ++n) {
        ec.schedule_deltas.push_back(std::pow(2.0, -double(n)));
        ec.schedule_kappas.push_back(std::pow(2.0, -double(n)));
      }
    }

    ec.output_dir = cfg.get_string("output.dir", "out");
    ec.checkpoint_stride = int(cfg.get_long("output.checkpoint_stride", 0));
    if (ec.checkpoint_stride < 0)
      cfg.fail("output.checkpoint_stride", "must be >= 0");
    ec.csv_enabled = cfg.get_string("output.csv", "on") != "off";
    ec.seed = cfg.get_u64("seed", 1);
    ec.mosco_mode = cfg.get_string("mosco.mode", "m2");
    ec.compare_mode = cfg.get_string("compare.mode", "uniform_shift");
    ec.compare_shift = cfg.get_double("compare.shift", 0.5);
    ec.lattice_samples = int(cfg.get_long("lattice.samples", 1000));
    if (ec.lattice_samples < 1) cfg.fail("lattice.samples", "must be >= 1");
    ec.tmono_samples = int(cfg.get_long("tmono.samples", 200));
    if (ec.tmono_samples < 1) cfg.fail("tmono.samples", "must be >= 1");
    return ec;
  }
};

}  // namespace tvdb
