#pragma once

#include "paraopt/numerics.hpp"
#include "paraopt/problem.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace paraopt::analysis {

enum class CoefficientSource { TrackingImplicitEuler, TrackingExact, TerminalFdto, TerminalFotd, TerminalExact };

/// Scalar propagator coefficients for one eigenvalue: P = phi y - psi lambda,
/// Q = psi y + phi lambda (psi of Q is zero for terminal cost).
struct PhiPsi {
  double phi = 0.0;
  double psi = 0.0;
  CoefficientSource source = CoefficientSource::TrackingExact;
};

/// J implicit-Euler steps of size tau on a tracking sub-interval.
PhiPsi phi_psi_tracking_ie(double sigma, double gamma, double tau, int J);
/// Exact propagator over DT for tracking.
PhiPsi phi_psi_tracking_exact(double sigma, double gamma, double DT);
/// J implicit-Euler steps of size tau on a terminal-cost sub-interval.
PhiPsi phi_psi_terminal_ie(double sigma, double gamma, double tau, int J, IeVariant variant);
PhiPsi phi_psi_terminal_exact(double sigma, double gamma, double DT);

/// Same coefficients written directly in hatted variables (DT = 1).
PhiPsi phi_psi_tracking_exact_hat(double sigma_hat, double gamma_hat);
PhiPsi phi_psi_terminal_exact_hat(double sigma_hat, double gamma_hat);

/// Fine or coarse propagator selection for the scalar analysis.
struct PropagatorKind {
  enum class Type { Exact, ImplicitEuler };
  Type type = Type::ImplicitEuler;
  int J = 1;
  IeVariant variant = IeVariant::FOTD;  // terminal cost only

  static PropagatorKind exact() { return {Type::Exact, 1, IeVariant::FOTD}; }
  static PropagatorKind implicit_euler(int J, IeVariant v = IeVariant::FOTD) { return {Type::ImplicitEuler, J, v}; }
  std::string describe() const;
};

/// Coefficients of `kind` at hatted parameters (the sub-interval is rescaled to length 1).
PhiPsi coefficients(ObjectiveKind objective, const PropagatorKind& kind, double sigma_hat, double gamma_hat);

/// Coefficients of `kind` for a physical eigenvalue sigma over a sub-interval of length DT.
PhiPsi coefficients_physical(ObjectiveKind objective, const PropagatorKind& kind, double sigma, double gamma,
                             double DT);

/// Asymptotic contraction bound for tracking; infinite L_hat.
double rho_bound_tracking(const PhiPsi& fine, const PhiPsi& coarse);

struct TerminalBound {
  double rho_star = 0.0;
  double x_star = 0.0;                 // dominant root of the limiting characteristic function
  std::vector<double> candidate_roots;  // every admissible root that was considered
};

/// Asymptotic contraction bound for terminal cost.
TerminalBound rho_bound_terminal(const PhiPsi& fine, const PhiPsi& coarse);

double rho_bound(ObjectiveKind objective, const PhiPsi& fine, const PhiPsi& coarse);

struct BoundOverSpectrum {
  double rho_star = 0.0;
  double sigma_at_max = 0.0;
  int filtered = 0;  // eigenvalues with sigma <= 0 that were skipped
};

/// Maximum of the scalar bound over the given eigenvalues. Non-positive
/// eigenvalues fall outside the theory and are skipped (counted in `filtered`).
BoundOverSpectrum rho_bound_max(ObjectiveKind objective, std::span<const double> sigmas, double gamma, double DT,
                                const PropagatorKind& fine, const PropagatorKind& coarse);

/// 2L_hat x 2L_hat matching matrix for a scalar problem with the given coefficients.
Matrix assemble_scalar_matching_matrix(ObjectiveKind objective, int L_hat, const PhiPsi& c);

/// Spectral radius of I - A_coarse^{-1} A_fine for finite L_hat.
double exact_rho(ObjectiveKind objective, int L_hat, const PhiPsi& fine, const PhiPsi& coarse);

struct BoundGrid {
  std::vector<double> sigma_hat;
  std::vector<double> gamma_hat;
  std::vector<double> rho;  // rho[i * gamma_hat.size() + j] at (sigma_hat[i], gamma_hat[j])
  double at(std::size_t i, std::size_t j) const { return rho[i * gamma_hat.size() + j]; }
};

BoundGrid bound_grid_sweep(ObjectiveKind objective, const PropagatorKind& fine, const PropagatorKind& coarse,
                           std::vector<double> sigma_hat, std::vector<double> gamma_hat);

/// n points spaced logarithmically from lo to hi inclusive.
std::vector<double> logspace(double lo, double hi, int n);

}  // namespace paraopt::analysis
