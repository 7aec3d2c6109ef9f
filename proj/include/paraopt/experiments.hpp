#pragma once

#include "paraopt/cli.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace paraopt::experiments {

/// One id per figure family.
enum class ExperimentId {
  ScalarTimestepSweep,
  ScalarConvergenceAB,
  ScalarWeakScaling,
  TcFotdVsFdto,
  GmresToleranceStudy,
  HeatIterationCounts,
  HeatTotalIterations,
  AdvectionIterationCounts,
  BoundContours,
};

std::string_view to_string(ExperimentId id);
ExperimentId experiment_from_string(std::string_view name);
std::vector<ExperimentId> all_experiments();

struct ExperimentOutcome {
  bool all_converged = true;
  nlohmann::json manifest;
};

/// Runs the sweep behind `id`, writing one CSV per panel plus manifest.json into `dir`.
/// `base` supplies solver tolerances, small-system method, bound grids and the timing flag.
ExperimentOutcome run_experiment(ExperimentId id, const cli::RunConfig& base, const std::filesystem::path& dir,
                                 std::ostream& log);

// Building blocks shared with the acceptance tests.

SolveLog run_solve(const cli::RunConfig& cfg);

/// Average GMRES iterations per outer iteration.
double mean_inner_per_outer(const SolveLog& log);

/// Least-squares slope of log(residual) against iteration, exponentiated.
/// Records whose residual has dropped below floor * initial residual are ignored.
double fitted_rate(const SolveLog& log, double floor = 1e-12);

/// Grid problem at n = 8, gamma = 0.05, T = 2, fine J = 10, coarse J = 1.
cli::RunConfig grid_config(const cli::RunConfig& base, const std::string& kind, const std::string& objective,
                           int L_hat, bool preconditioned);

/// Scalar tracking cases 'A' and 'B' on T = L = 50 with exact fine / 10-step coarse.
cli::RunConfig scalar_ab_config(const cli::RunConfig& base, char which);
double scalar_ab_bound(char which);

}  // namespace paraopt::experiments
