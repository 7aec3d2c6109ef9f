#pragma once

#include "paraopt/numerics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace paraopt {

enum class ObjectiveKind { Tracking, TerminalCost };

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind objective_from_string(std::string_view name);

/// Optimize-then-discretize or discretize-then-optimize implicit Euler.
enum class IeVariant { FOTD, FDTO };

std::string_view to_string(IeVariant variant);
IeVariant ie_variant_from_string(std::string_view name);

/// Linear optimal-control problem  min J(y, u)  s.t.  y' = -K y + u, y(0) = y_init.
///
/// Tracking problems carry a target trajectory y_d(t); terminal-cost problems
/// a target state y_target. Immutable after construction.
struct LinearControlProblem {
  Matrix K;
  double gamma = 1.0;
  double T = 1.0;
  Vector y_init;
  ObjectiveKind objective = ObjectiveKind::Tracking;
  std::optional<Vector> y_target;
  std::function<Vector(double)> y_d;
  /// Set when y_d does not depend on t; exact propagators need it.
  bool y_d_time_invariant = false;
  std::string name;

  Eigen::Index dim() const { return K.rows(); }
  void validate() const;
};

/// Equal-length split of [0, T] into L sub-intervals.
struct TimeDecomposition {
  int L = 2;
  double DT = 0.5;
  int L_hat = 1;  // Tracking: L - 1, terminal cost: L
  int J_fine = 1;
  int J_coarse = 1;

  static TimeDecomposition make(ObjectiveKind objective, double T, int L, int J_fine, int J_coarse);
  void validate(double T) const;
};

/// Objective-dependent rescalings of sigma and gamma for a time step tau.
struct HattedScalings {
  double sigma_hat = 0.0;
  double gamma_hat = 0.0;
  double tau = 0.0;
};

/// tau / sqrt(gamma) for tracking, tau / gamma for terminal cost.
double gamma_hat(ObjectiveKind objective, double gamma, double tau);

HattedScalings hatted(ObjectiveKind objective, double gamma, double sigma, double tau);

/// Scalar problems only (M = 1): sigma is read from K.
HattedScalings hatted(const LinearControlProblem& problem, double tau);

/// Heat equation dy/dt = Laplace(y) + u on the periodic unit square, n x n
/// vertex grid, 5-point central differences. K = -Laplacian_h, M = n^2.
LinearControlProblem make_heat_problem(int n, double gamma, double T, ObjectiveKind objective);

/// dy/dt = Laplace(y)/10 - dy/dx1 - dy/dx2 + u, periodic, central differences.
LinearControlProblem make_advection_diffusion_problem(int n, double gamma, double T,
                                                      ObjectiveKind objective);

/// Scalar problem y' = -sigma y + u. `data` is the constant tracking target
/// y_d for tracking and y_target for terminal cost.
LinearControlProblem make_scalar_problem(double sigma, double gamma, double T, ObjectiveKind objective,
                                         double y_init, double data);

/// Periodic 5-point Laplacian on an n x n grid with spacing 1/n.
/// Node (i, j) sits at x = (i/n, j/n) and has flat index i + n*j.
Matrix periodic_laplacian(int n);

/// Central first difference along x1 (axis 0) or x2 (axis 1), periodic.
Matrix periodic_central_difference(int n, int axis);

}  // namespace paraopt
