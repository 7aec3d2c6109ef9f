#include "doctest.h"

#include "paraopt/cli.hpp"
#include "paraopt/experiments.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace paraopt;
using namespace paraopt::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("PARAOPT_TEST_TMP");
  fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "paraopt-tests";
  fs::path p = root / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "paraopt");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(int(argv.size()), argv.data());
}

RunConfig heat_solve_config(const fs::path& dir) {
  RunConfig c;
  c.problem.kind = "heat";
  c.problem.n = 8;
  c.problem.gamma = 0.05;
  c.problem.T = 2.0;
  c.objective = "tracking";
  c.decomposition = {11, 10, 1};
  c.preconditioner.enabled = true;
  c.output.directory = dir.string();
  c.output.record_timing = false;
  return c;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config parsing rejects unknown keys") {
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"problme": {}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"solver": {"outer_tol": 1e-6, "tol": 1}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"solver": {"outer_tol": "small"}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"([1, 2])")), ConfigError);
  }

  TEST_CASE("config round-trips through JSON") {
    RunConfig c;
    c.problem.kind = "advection_diffusion";
    c.objective = "terminal_cost";
    c.preconditioner.alpha = 0.25;
    c.preconditioner.method = "triangular";
    c.bound.gamma_hat.points = 7;
    c.seed = 99;
    const RunConfig d = config_from_json(config_to_json(c));
    CHECK(config_to_json(d) == config_to_json(c));
    CHECK(d.preconditioner.alpha.value() == 0.25);
    const RunConfig e = config_from_json(json::parse(R"({"preconditioner": {"alpha": null}})"));
    CHECK_FALSE(e.preconditioner.alpha.has_value());
  }

  TEST_CASE("validation") {
    RunConfig c;
    CHECK_NOTHROW(c.validate());
    c.solver.outer_tol = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.solver.inner_tol = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.propagators.coarse = "ie_fdto";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.bound.coarse = "ie_fdto";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.preconditioner.method = "triangular";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.preconditioner.alpha = 0.5;  // general needs |alpha| = 1
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.bound.sigma_hat.min = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.problem.kind = "wave";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.objective = "terminal_cost";
    c.propagators.coarse = "ie_fdto";
    CHECK_NOTHROW(c.validate());
    CHECK(resolve_method(c) == PreconditionerMethod::Triangular);
  }

  TEST_CASE("prepare_run maps library errors to config errors") {
    RunConfig c;
    c.problem.kind = "heat";
    c.propagators.fine = "exact";  // time-dependent tracking target
    CHECK_THROWS_AS(prepare_run(c), ConfigError);
    c.problem.kind = "advection_diffusion";
    c.objective = "terminal_cost";
    CHECK_THROWS_AS(prepare_run(c), ConfigError);  // non-symmetric K
  }

  TEST_CASE("bound command: single point") {
    const auto dir = scratch("bound1");
    RunConfig c;
    c.bound.sigma_hat = {0.5, 0.5, 1};
    c.bound.gamma_hat = {2.0, 2.0, 1};
    c.output.directory = dir.string();
    std::ostringstream err;
    CHECK(cmd_bound(c, err) == kExitOk);
    const auto ls = lines(slurp(dir / "rho_star.csv"));
    REQUIRE(ls.size() == 3);
    CHECK(ls[0] == "# paraopt-kit v1");
    CHECK(ls[1] == "sigma_hat,gamma_hat,rho_star");
    CHECK(ls[2].rfind("0.5,2,", 0) == 0);
  }

  TEST_CASE("bound command: tracking grid stays below one, FDTO grid does not") {
    const auto dir = scratch("bound2");
    RunConfig c;
    c.bound.sigma_hat.points = 20;
    c.bound.gamma_hat.points = 20;
    c.output.directory = dir.string();
    std::ostringstream err;
    REQUIRE(cmd_bound(c, err) == kExitOk);
    auto ls = lines(slurp(dir / "rho_star.csv"));
    CHECK(ls.size() == 402);
    for (std::size_t i = 2; i < ls.size(); ++i) CHECK(std::stod(ls[i].substr(ls[i].rfind(',') + 1)) < 1.0);

    c.objective = "terminal_cost";
    c.bound.coarse = "ie_fdto";
    REQUIRE(cmd_bound(c, err) == kExitOk);
    ls = lines(slurp(dir / "rho_star.csv"));
    double worst = 0;
    for (std::size_t i = 2; i < ls.size(); ++i) worst = std::max(worst, std::stod(ls[i].substr(ls[i].rfind(',') + 1)));
    CHECK(worst > 1.0);
  }

  TEST_CASE("solve command writes logs and is byte-deterministic") {
    const auto d1 = scratch("solve1");
    const auto d2 = scratch("solve2");
    std::ostringstream err;
    CHECK(cmd_solve(heat_solve_config(d1), err) == kExitOk);
    CHECK(cmd_solve(heat_solve_config(d2), err) == kExitOk);
    const std::string a = slurp(d1 / "solve_log.csv");
    CHECK(a == slurp(d2 / "solve_log.csv"));
    const auto ls = lines(a);
    CHECK(ls[0] == "# paraopt-kit v1");
    CHECK(ls[1] == "iteration,residual,inner_iters,seconds");

    const json summary = json::parse(slurp(d1 / "summary.json"));
    CHECK(summary["converged"] == true);
    CHECK(summary["status"] == "converged");
    CHECK(summary["outer_iterations"].get<int>() + 3 == int(ls.size()));

    // Re-running the echoed configuration reproduces the log.
    RunConfig echo = config_from_json(summary["config"]);
    const auto d3 = scratch("solve3");
    echo.output.directory = d3.string();
    CHECK(cmd_solve(echo, err) == kExitOk);
    CHECK(slurp(d3 / "solve_log.csv") == a);
  }

  TEST_CASE("exit codes") {
    const auto dir = scratch("exit");
    CHECK(run_args({"solve", "--coarse", "ie_fdto", "-o", dir.string()}) == kExitConfig);
    CHECK(run_args({"bogus"}) == kExitConfig);
    CHECK(run_args({"experiment", "no_such_experiment", "-o", dir.string()}) == kExitConfig);
    CHECK(run_args({"solve", "--problem", "heat", "--gamma", "0.05", "--T", "2", "--L", "11", "--max-outer", "1",
                    "--no-timing", "-o", dir.string()}) == kExitNotConverged);
    CHECK(fs::exists(dir / "solve_log.csv"));
    CHECK(run_args({"solve", "--problem", "heat", "--gamma", "0.05", "--T", "2", "--L", "11", "--precondition",
                    "-o", dir.string()}) == kExitOk);
  }

  TEST_CASE("config file plus flag overrides") {
    const auto dir = scratch("cfgfile");
    const fs::path cfg = dir / "run.json";
    std::ofstream(cfg) << R"({"objective": "terminal_cost", "bound": {"sigma_hat": {"points": 2}, "gamma_hat": {"points": 3}}})";
    CHECK(run_args({"bound", "--config", cfg.string(), "--gamma-hat-points", "4", "-o", dir.string()}) == kExitOk);
    CHECK(lines(slurp(dir / "rho_star.csv")).size() == 2 + 8);
    std::ofstream(cfg) << R"({"objective": "terminal_cost", "typo": 1})";
    CHECK(run_args({"bound", "--config", cfg.string(), "-o", dir.string()}) == kExitConfig);
  }

  TEST_CASE("bound contours delegate to the bound command") {
    const auto de = scratch("contours");
    const auto db = scratch("contours_bound");
    RunConfig c;
    c.bound.sigma_hat.points = 6;
    c.bound.gamma_hat.points = 5;
    std::ostringstream log;
    const auto out = experiments::run_experiment(experiments::ExperimentId::BoundContours, c, de, log);
    CHECK(out.manifest["panels"].size() == 6);
    CHECK(fs::exists(de / "manifest.json"));
    c.output.directory = db.string();
    REQUIRE(cmd_bound(c, log) == kExitOk);
    CHECK(slurp(de / "tracking_J1.csv") == slurp(db / "rho_star.csv"));
  }

  TEST_CASE("experiment ids") {
    using experiments::ExperimentId;
    CHECK(experiments::all_experiments().size() == 9);
    for (auto id : experiments::all_experiments()) CHECK(experiments::experiment_from_string(experiments::to_string(id)) == id);
    CHECK(experiments::experiment_from_string("HeatIterationCounts") == ExperimentId::HeatIterationCounts);
    CHECK_THROWS_AS(experiments::experiment_from_string("nope"), std::invalid_argument);
  }

  TEST_CASE("csv writer and number formatting") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(2.0) == "2");
    const auto dir = scratch("csv");
    CsvWriter w(dir / "t.csv", {"a", "b"});
    w << 1 << std::string("x");
    w.end_row();
    w << 1.5;
    CHECK_THROWS_AS(w.end_row(), std::logic_error);
  }

  TEST_CASE("rate fitting") {
    SolveLog log;
    for (int k = 0; k < 6; ++k) log.records.push_back({k, std::pow(0.3, k), 0, 0});
    CHECK(experiments::fitted_rate(log) == doctest::Approx(0.3).epsilon(1e-12));
    SolveLog one;
    one.records.push_back({0, 1.0, 0, 0});
    CHECK_THROWS(experiments::fitted_rate(one));
  }
}
