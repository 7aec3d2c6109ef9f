#pragma once

#include "paraopt/numerics.hpp"
#include "paraopt/preconditioner.hpp"
#include "paraopt/problem.hpp"
#include "paraopt/propagators.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace paraopt {

/// Interface values y_l and rescaled adjoints lam_hat_l, l = 1..L_hat.
/// Stacked layout: [y_1; ...; y_Lhat; lam_1; ...; lam_Lhat].
struct PairedTrajectory {
  std::vector<Vector> y;
  std::vector<Vector> lam_hat;

  static PairedTrajectory zeros(int L_hat, Eigen::Index M);
  static PairedTrajectory from_stacked(const Vector& x, int L_hat, Eigen::Index M);
  Vector stacked() const;
  int L_hat() const { return int(y.size()); }
};

struct NewtonConfig {
  double outer_tolerance = 1e-6;  // relative to max(1, initial residual norm)
  int max_outer = 100;
  numerics::GmresConfig inner;
  std::shared_ptr<const PreconditionerPlan> preconditioner;
  /// Called with (iteration, stacked iterate) after every update, iteration 0 included.
  std::function<void(int, const Vector&)> on_iterate;
};

struct SolveRecord {
  int iteration = 0;
  double residual = 0.0;
  int inner_iterations = 0;
  double seconds = 0.0;
};

enum class SolveStatus { Converged, MaxIterations, Diverged, InnerFailure };
std::string_view to_string(SolveStatus s);

struct SolveLog {
  std::vector<SolveRecord> records;  // records[0] is the initial iterate
  SolveStatus status = SolveStatus::MaxIterations;
  std::string message;

  bool converged() const { return status == SolveStatus::Converged; }
  int outer_iterations() const { return records.empty() ? 0 : int(records.size()) - 1; }
  int total_inner_iterations() const;
};

struct SolveResult {
  PairedTrajectory x;
  SolveLog log;
};

/// Stacked matching conditions f(x); zero at the discrete optimum.
Vector matching_residual(const AffinePropagator& fine, const LinearControlProblem& problem,
                         const TimeDecomposition& decomp, const PairedTrajectory& x);
Vector matching_residual(const AffinePropagator& fine, const LinearControlProblem& problem,
                         const TimeDecomposition& decomp, const Vector& x);

/// Jacobian of the matching conditions for the given propagator, matrix-free.
Vector apply_A(const AffinePropagator& fine, const TimeDecomposition& decomp, const Vector& v);
Vector apply_A_tilde(const AffinePropagator& coarse, const TimeDecomposition& decomp, const Vector& v);

/// Dense Jacobian and right-hand side with f(x) = A x - b.
Matrix assemble_matching_matrix(const AffinePropagator& prop, int L_hat);
Vector assemble_rhs(const AffinePropagator& prop, const LinearControlProblem& problem, const TimeDecomposition& decomp);

/// Dense I - A_coarse^{-1} A_fine.
Matrix assemble_iteration_matrix(const AffinePropagator& fine, const AffinePropagator& coarse, int L_hat);

/// Inexact Newton on the matching conditions with coarse-Jacobian GMRES steps.
SolveResult paraopt_solve(const LinearControlProblem& problem, const TimeDecomposition& decomp,
                          const AffinePropagator& fine, const AffinePropagator& coarse, const NewtonConfig& cfg);

}  // namespace paraopt
