#pragma once

#include "paraopt/analysis.hpp"
#include "paraopt/paraopt.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace paraopt::cli {

/// Bad or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotConverged = 1;
inline constexpr int kExitConfig = 2;

struct ProblemConfig {
  std::string kind = "scalar";  // scalar | heat | advection_diffusion
  double sigma = 16.0;          // scalar only
  int n = 8;                    // grid problems only
  double gamma = 1.0;
  double T = 1.0;
  double y_init = 1.0;  // scalar only
  double data = 1.0;    // scalar: constant y_d (tracking) or y_target (terminal cost)
};

struct DecompositionConfig {
  int L = 10;
  int J_fine = 10;
  int J_coarse = 1;
};

struct PropagatorConfig {
  std::string fine = "ie";             // ie | exact
  std::string fine_variant = "fotd";   // terminal cost only
  std::string coarse = "ie_fotd";      // ie_fotd | ie_fdto
};

struct SolverConfig {
  double outer_tol = 1e-6;
  double inner_tol = 1e-4;
  int max_outer = 100;
  int max_inner = 1000;
};

struct PreconditionerConfig {
  bool enabled = false;
  std::string method = "auto";  // auto | general | triangular
  std::optional<double> alpha;  // default depends on the method
  std::string small_system = "explicit";  // explicit | blackbox
};

struct GridAxis {
  double min = 1e-4;
  double max = 1e4;
  int points = 50;
};

struct BoundConfig {
  GridAxis sigma_hat;
  GridAxis gamma_hat;
  std::string fine = "exact";  // exact | ie
  int J_fine = 1;
  std::string coarse = "ie_fotd";
  int J_coarse = 1;
};

struct OutputConfig {
  std::string directory = "paraopt-out";
  bool record_timing = true;  // false writes 0 in the seconds column
};

struct RunConfig {
  ProblemConfig problem;
  std::string objective = "tracking";
  DecompositionConfig decomposition;
  PropagatorConfig propagators;
  SolverConfig solver;
  PreconditionerConfig preconditioner;
  BoundConfig bound;
  OutputConfig output;
  std::uint64_t seed = 0;

  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

/// Problem, propagators and Newton settings ready for paraopt_solve.
struct PreparedRun {
  LinearControlProblem problem;
  TimeDecomposition decomp;
  std::shared_ptr<const AffinePropagator> fine;
  std::shared_ptr<const AffinePropagator> coarse;
  NewtonConfig newton;
};

PreparedRun prepare_run(const RunConfig& cfg);

/// Preconditioner method after resolving "auto" against the objective.
PreconditionerMethod resolve_method(const RunConfig& cfg);

analysis::PropagatorKind bound_fine_kind(const BoundConfig& b);
analysis::PropagatorKind bound_coarse_kind(const BoundConfig& b);

// CSV output: versioned header comment, then column names, then rows.
std::string format_double(double v);
void write_rho_csv(const std::filesystem::path& path, const analysis::BoundGrid& grid);
void write_solve_log_csv(const std::filesystem::path& path, const SolveLog& log, bool record_timing);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Small CSV writer shared by the commands and the experiments.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(int v);
  CsvWriter& operator<<(const std::string& v);
  void end_row();

 private:
  std::vector<std::string> row_;
  std::size_t ncols_;
  std::unique_ptr<std::ofstream> out_;
};

int cmd_bound(const RunConfig& cfg, std::ostream& err);
int cmd_solve(const RunConfig& cfg, std::ostream& err);
int cmd_experiment(const std::string& id, const RunConfig& cfg, std::ostream& err);

/// Entry point of the `paraopt` executable.
int run(int argc, char** argv);

}  // namespace paraopt::cli
