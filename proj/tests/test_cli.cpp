#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tvdb/cli.hpp"

using namespace tvdb;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("tvdb_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& command, const std::string& config_text,
        const fs::path& out, std::string* log_out = nullptr) {
  const fs::path cfg = out / "config.txt";
  {
    std::ofstream os(cfg);
    os << config_text;
  }
  std::ostringstream log;
  const int rc = cli::run_command(command, cfg.string(), out.string(),
                                  std::nullopt, log);
  if (log_out) *log_out = log.str();
  return rc;
}

}  // namespace

TEST_CASE("config parsing diagnostics") {
  CHECK_THROWS_AS(ConfigMap::from_string("flow.tau 0.1"), ConfigError);

  ConfigMap cfg = ConfigMap::from_string(
      "# comment\n"
      "grid.nx = 16\n"
      "flow.tau = 1e-3\n"
      "energy.tv_mode = anisotropic\n");
  CHECK(cfg.get_long("grid.nx", 0) == 16);
  CHECK(cfg.get_double("flow.tau", 0) == 1e-3);
  CHECK(cfg.get_string("missing", "dflt") == "dflt");

  try {
    ExperimentConfig::load(ConfigMap::from_string("flow.tau = 0\n", "cfg"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "flow.tau");
    CHECK(std::string(e.what()).find("flow.tau") != std::string::npos);
    CHECK(std::string(e.what()).find("cfg:1") != std::string::npos);
  }

  CHECK_THROWS_AS(
      ExperimentConfig::load(ConfigMap::from_string("grid.nx = three\n")),
      ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::load(ConfigMap::from_string("regularizer.kind = bogus\n")),
      ConfigError);
}

TEST_CASE("solve: constant scenario produces zero energies") {
  const fs::path out = temp_dir("solve_const");
  const int rc = run("solve",
                     "grid.nx = 8\ngrid.ny = 6\n"
                     "scenario.initial = constant\nscenario.amplitude = 0.5\n"
                     "flow.tau = 1e-3\nflow.T = 5e-3\n"
                     "energy.epsilon = 0.5\n",
                     out);
  CHECK(rc == 0);
  const std::string csv = slurp(out / "energy.csv");
  CHECK(csv.rfind("m,t,tv,kappa_term,jump,surface,total,step_residual\n", 0) ==
        0);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    // total column (7th) is zero for the constant state
    std::istringstream ls(line);
    std::string tok;
    for (int c = 0; c < 7; ++c) std::getline(ls, tok, ',');
    CHECK(std::abs(std::stod(tok)) <= 1e-12);
  }
  CHECK(fs::exists(out / "manifest.txt"));
  CHECK(fs::exists(out / "energy.gp"));
  CHECK(fs::exists(out / "weak_inequality.csv"));
}

TEST_CASE("solve: step scenario dissipates and writes checkpoints") {
  const fs::path out = temp_dir("solve_step");
  const int rc = run("solve",
                     "grid.nx = 12\ngrid.ny = 9\n"
                     "scenario.initial = step_y\n"
                     "flow.tau = 1e-3\nflow.T = 1e-2\n"
                     "flow.inner_tol = 1e-8\n"
                     "output.checkpoint_stride = 5\n",
                     out);
  CHECK(rc == 0);
  const std::string csv = slurp(out / "energy.csv");
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  double prev = 1e300;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tok;
    for (int c = 0; c < 7; ++c) std::getline(ls, tok, ',');
    const double total = std::stod(tok);
    CHECK(total <= prev + 1e-8);
    prev = total;
  }
  CHECK(fs::exists(out / "state_000000.tvdb"));
  CHECK(fs::exists(out / "state_000010.tvdb"));
  const StateVector chk = read_state_file((out / "state_000000.tvdb").string());
  CHECK(chk.grid().nx == 12);
}

TEST_CASE("config errors surface as exit 1 with the key named") {
  const fs::path out = temp_dir("bad_cfg");
  std::string log;
  const int rc = run("solve", "flow.tau = 0\n", out, &log);
  CHECK(rc == 1);
  CHECK(log.find("flow.tau") != std::string::npos);

  std::string log2;
  const int rc2 = run("mosco", "schedule.delta = 0.5,0.25\nschedule.kappa = 0.5,0.25\n",
                      out, &log2);
  CHECK(rc2 == 1);
}

TEST_CASE("solver failure surfaces as exit 2") {
  const fs::path out = temp_dir("fail");
  std::string log;
  const int rc = run("solve",
                     "scenario.initial = step_y\n"
                     "flow.tau = 1e-3\nflow.T = 2e-3\n"
                     "flow.inner_tol = 1e-13\nflow.inner_max_iters = 2\n",
                     out, &log);
  CHECK(rc == 2);
  CHECK(log.find("step") != std::string::npos);
}

TEST_CASE("compare: identical and shifted scenarios exit 0") {
  const fs::path out = temp_dir("cmp");
  const int rc = run("compare",
                     "grid.nx = 8\ngrid.ny = 6\n"
                     "scenario.initial = step_y\n"
                     "flow.tau = 1e-3\nflow.T = 5e-3\n"
                     "flow.inner_tol = 1e-10\nflow.inner_max_iters = 400000\n"
                     "compare.mode = uniform_shift\ncompare.shift = 0.5\n",
                     out);
  CHECK(rc == 0);
  const std::string csv = slurp(out / "compare.csv");
  CHECK(csv.rfind("t,lhs,rhs,slack,max_positive_part\n", 0) == 0);
  // all-zero lhs column for ordered data
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');
    std::getline(ls, tok, ',');
    CHECK(std::abs(std::stod(tok)) <= 1e-12);
  }
}

TEST_CASE("lattice command asserts in anisotropic mode, warns in isotropic") {
  const fs::path out = temp_dir("lat");
  const int rc = run("lattice",
                     "grid.nx = 8\ngrid.ny = 8\n"
                     "lattice.samples = 60\ntmono.samples = 6\n"
                     "flow.inner_tol = 1e-9\nflow.inner_max_iters = 400000\n"
                     "seed = 5\n",
                     out);
  CHECK(rc == 0);
  CHECK(fs::exists(out / "lattice.csv"));
  CHECK(fs::exists(out / "tmonotonicity.csv"));

  std::string log;
  const int rc_iso = run("lattice",
                         "grid.nx = 8\ngrid.ny = 8\n"
                         "energy.tv_mode = isotropic\n"
                         "lattice.samples = 60\ntmono.samples = 4\n"
                         "flow.inner_tol = 1e-9\nflow.inner_max_iters = 400000\n"
                         "seed = 5\n",
                         out, &log);
  CHECK(rc_iso == 0);  // isotropic violations are reported, never fatal
}

TEST_CASE("mosco m2 run writes the report") {
  const fs::path out = temp_dir("mosco");
  const int rc = run("mosco",
                     "grid.nx = 16\ngrid.ny = 16\n"
                     "scenario.initial = boundary_jump\n"
                     "schedule.count = 5\n",
                     out);
  CHECK(rc == 0);
  const std::string csv = slurp(out / "mosco.csv");
  CHECK(csv.rfind("n,delta,kappa,level,phi_n,phi_star,gap,sup_traj_dist\n",
                  0) == 0);
}

TEST_CASE("determinism: identical config and seed give identical bytes") {
  const fs::path out1 = temp_dir("det1");
  const fs::path out2 = temp_dir("det2");
  const std::string cfg =
      "grid.nx = 8\ngrid.ny = 8\n"
      "lattice.samples = 40\ntmono.samples = 4\n"
      "flow.inner_tol = 1e-9\nflow.inner_max_iters = 400000\n"
      "seed = 12\n";
  CHECK(run("lattice", cfg, out1) == 0);
  CHECK(run("lattice", cfg, out2) == 0);
  CHECK(slurp(out1 / "lattice.csv") == slurp(out2 / "lattice.csv"));
  CHECK(slurp(out1 / "tmonotonicity.csv") == slurp(out2 / "tmonotonicity.csv"));

  // the thread cap must not change the bytes
  const fs::path out3 = temp_dir("det3");
  setenv("TVDB_THREADS", "1", 1);
  CHECK(run("lattice", cfg, out3) == 0);
  unsetenv("TVDB_THREADS");
  CHECK(slurp(out1 / "lattice.csv") == slurp(out3 / "lattice.csv"));
}

TEST_CASE("selftest passes") {
  std::ostringstream log;
  CHECK(cli::run_command("selftest", "", std::nullopt, std::nullopt, log) == 0);
  CHECK(log.str().find("selftest passed") != std::string::npos);
}
