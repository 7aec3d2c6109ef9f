#include "paraopt/analysis.hpp"

#include "paraopt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace paraopt::analysis {

namespace {

// (1 - exp(-2 s)) / s, continuous at s = 0.
double one_minus_exp2_over(double s) {
  if (std::abs(s) < 1e-6) return 2.0 - 2.0 * s + (4.0 / 3.0) * s * s;
  return -std::expm1(-2.0 * s) / s;
}

void check_range(const PhiPsi& c, double sigma_hat, const char* where) {
  if (!std::isfinite(c.phi) || !std::isfinite(c.psi))
    throw NumericalError(std::string(where) + ": non-finite coefficient");
  if (sigma_hat > 0.0 && (c.phi < 0.0 || c.phi > 1.0 || c.psi < 0.0))
    throw NumericalError(std::string(where) + ": coefficient out of range for positive sigma");
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
}

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + " must be non-negative");
}

// Hatted forms: each implicit-Euler step has sigma_hat / J and gamma_hat / J.
PhiPsi tracking_ie_hat(double sigma_hat, double gamma_hat, int J) {
  if (J < 1) throw std::invalid_argument("implicit Euler: J must be >= 1");
  const double zeta = 1.0 + sigma_hat / J;
  if (!(zeta > 0.0)) throw std::invalid_argument("implicit Euler: 1 + sigma tau must be positive");
  const double g = gamma_hat / J;
  const double zinv = 1.0 / zeta;
  double phi = 1.0;
  double psi = 0.0;
  // Append one step at a time; both updates are free of subtraction.
  for (int j = 0; j < J; ++j) {
    const double den = zeta + g * psi;
    phi /= den;
    psi = (g + zinv * (1.0 + g * g) * psi) / den;
  }
  PhiPsi c{phi, psi, CoefficientSource::TrackingImplicitEuler};
  check_range(c, sigma_hat, "phi_psi_tracking_ie");
  return c;
}

PhiPsi terminal_ie_hat(double sigma_hat, double gamma_hat, int J, IeVariant variant) {
  if (J < 1) throw std::invalid_argument("implicit Euler: J must be >= 1");
  const double x = sigma_hat / J;
  if (!(x > -1.0)) throw std::invalid_argument("implicit Euler: 1 + sigma tau must be positive");
  const double log_zeta = std::log1p(x);
  const double phi = std::exp(-double(J) * log_zeta);
  const double g = gamma_hat / J;  // tau / gamma
  double psi;
  if (x == 0.0) {
    psi = J * g;
  } else {
    // 1 - phi^2 without cancellation.
    psi = g * (-std::expm1(-2.0 * double(J) * log_zeta)) / (x * (2.0 + x));
  }
  PhiPsi c{phi, psi, CoefficientSource::TerminalFdto};
  if (variant == IeVariant::FOTD) {
    c.psi *= 1.0 + x;
    c.source = CoefficientSource::TerminalFotd;
  }
  check_range(c, sigma_hat, "phi_psi_terminal_ie");
  return c;
}

}  // namespace

PhiPsi phi_psi_tracking_exact_hat(double sigma_hat, double gamma_hat) {
  require_nonnegative(gamma_hat, "gamma_hat");
  const double s = std::hypot(sigma_hat, gamma_hat);
  const double h = one_minus_exp2_over(s);
  const double den = (1.0 + std::exp(-2.0 * s)) + sigma_hat * h;
  PhiPsi c{2.0 * std::exp(-s) / den, gamma_hat * h / den, CoefficientSource::TrackingExact};
  check_range(c, sigma_hat, "phi_psi_tracking_exact");
  return c;
}

PhiPsi phi_psi_terminal_exact_hat(double sigma_hat, double gamma_hat) {
  require_nonnegative(gamma_hat, "gamma_hat");
  PhiPsi c{std::exp(-sigma_hat), 0.5 * gamma_hat * one_minus_exp2_over(sigma_hat), CoefficientSource::TerminalExact};
  check_range(c, sigma_hat, "phi_psi_terminal_exact");
  return c;
}

PhiPsi phi_psi_tracking_ie(double sigma, double gamma, double tau, int J) {
  require_positive(gamma, "gamma");
  require_positive(tau, "tau");
  return tracking_ie_hat(sigma * tau * J, tau * J / std::sqrt(gamma), J);
}

PhiPsi phi_psi_tracking_exact(double sigma, double gamma, double DT) {
  require_positive(gamma, "gamma");
  require_positive(DT, "DT");
  return phi_psi_tracking_exact_hat(sigma * DT, DT / std::sqrt(gamma));
}

PhiPsi phi_psi_terminal_ie(double sigma, double gamma, double tau, int J, IeVariant variant) {
  require_positive(gamma, "gamma");
  require_positive(tau, "tau");
  return terminal_ie_hat(sigma * tau * J, tau * J / gamma, J, variant);
}

PhiPsi phi_psi_terminal_exact(double sigma, double gamma, double DT) {
  require_positive(gamma, "gamma");
  require_positive(DT, "DT");
  return phi_psi_terminal_exact_hat(sigma * DT, DT / gamma);
}

std::string PropagatorKind::describe() const {
  if (type == Type::Exact) return "exact";
  return "ie(J=" + std::to_string(J) + "," + std::string(to_string(variant)) + ")";
}

PhiPsi coefficients(ObjectiveKind objective, const PropagatorKind& kind, double sigma_hat, double gamma_hat) {
  require_nonnegative(gamma_hat, "gamma_hat");
  if (objective == ObjectiveKind::Tracking) {
    if (kind.type == PropagatorKind::Type::Exact) return phi_psi_tracking_exact_hat(sigma_hat, gamma_hat);
    return tracking_ie_hat(sigma_hat, gamma_hat, kind.J);
  }
  if (kind.type == PropagatorKind::Type::Exact) return phi_psi_terminal_exact_hat(sigma_hat, gamma_hat);
  return terminal_ie_hat(sigma_hat, gamma_hat, kind.J, kind.variant);
}

PhiPsi coefficients_physical(ObjectiveKind objective, const PropagatorKind& kind, double sigma, double gamma,
                             double DT) {
  require_positive(gamma, "gamma");
  require_positive(DT, "DT");
  return coefficients(objective, kind, sigma * DT, gamma_hat(objective, gamma, DT));
}

double rho_bound_tracking(const PhiPsi& fine, const PhiPsi& coarse) {
  const double dphi = coarse.phi - fine.phi;
  const double dpsi = coarse.psi - fine.psi;
  const double den = (1.0 - coarse.phi) * (1.0 - coarse.phi) + coarse.psi * coarse.psi;
  if (!(den > 0.0)) throw NumericalError("rho_bound_tracking: coarse coefficients give a zero denominator");
  return std::sqrt((dphi * dphi + dpsi * dpsi) / den);
}

TerminalBound rho_bound_terminal(const PhiPsi& fine, const PhiPsi& coarse) {
  const double pt = coarse.phi;
  const double st = coarse.psi;
  const double delta = fine.phi - coarse.phi;
  if (!(pt < 1.0)) throw NumericalError("rho_bound_terminal: coarse phi must be below 1");

  auto q = [&](double x) { return pt + delta / x; };
  TerminalBound out;

  if (st != 0.0) {
    const double x0 = (st - fine.psi) / st;
    if (x0 == 0.0 || std::abs(q(x0)) >= 1.0) out.candidate_roots.push_back(x0);
  }

  auto admit = [&](double x) {
    if (!std::isfinite(x)) return;
    if (delta != 0.0 && x == 0.0) return;
    if (x != 0.0 && !(std::abs(q(x)) < 1.0)) return;
    out.candidate_roots.push_back(x);
  };
  const double a = st + 1.0 - pt * pt;
  const double b = 2.0 * pt * delta + st - fine.psi;
  const double c = -delta * delta;
  if (a == 0.0) {
    if (b != 0.0) admit(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      // Stable quadratic formula for a x^2 - b x + c = 0.
      const double sq = std::sqrt(disc);
      const double t = 0.5 * (b + std::copysign(sq, b == 0.0 ? 1.0 : b));
      if (t != 0.0) {
        admit(t / a);
        admit(c / t);
      } else {
        admit(0.0);
      }
    }
  }

  for (double x : out.candidate_roots) {
    if (std::abs(x) > std::abs(out.x_star) || (std::abs(x) == std::abs(out.x_star) && x > out.x_star))
      out.x_star = x;
  }
  out.rho_star = std::max(std::abs(delta) / (1.0 - pt), std::abs(out.x_star));
  return out;
}

double rho_bound(ObjectiveKind objective, const PhiPsi& fine, const PhiPsi& coarse) {
  return objective == ObjectiveKind::Tracking ? rho_bound_tracking(fine, coarse)
                                              : rho_bound_terminal(fine, coarse).rho_star;
}

BoundOverSpectrum rho_bound_max(ObjectiveKind objective, std::span<const double> sigmas, double gamma, double DT,
                                const PropagatorKind& fine, const PropagatorKind& coarse) {
  BoundOverSpectrum out;
  bool any = false;
  for (double s : sigmas) {
    if (!(s > 0.0)) {
      ++out.filtered;
      continue;
    }
    const double r = rho_bound(objective, coefficients_physical(objective, fine, s, gamma, DT),
                               coefficients_physical(objective, coarse, s, gamma, DT));
    if (!any || r > out.rho_star) {
      out.rho_star = r;
      out.sigma_at_max = s;
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("rho_bound_max: no positive eigenvalues");
  return out;
}

Matrix assemble_scalar_matching_matrix(ObjectiveKind objective, int L_hat, const PhiPsi& c) {
  if (L_hat < 1) throw std::invalid_argument("assemble_scalar_matching_matrix: L_hat must be >= 1");
  const int n = L_hat;
  Matrix A = Matrix::Identity(2 * n, 2 * n);
  const bool tracking = objective == ObjectiveKind::Tracking;
  for (int l = 0; l < n; ++l) {
    if (l > 0) A(l, l - 1) = -c.phi;          // y rows
    A(l, n + l) = c.psi;
    if (l + 1 < n) A(n + l, n + l + 1) = -c.phi;  // lambda rows
    if (tracking) A(n + l, l) = -c.psi;
  }
  if (!tracking) A(2 * n - 1, n - 1) = -1.0;
  return A;
}

double exact_rho(ObjectiveKind objective, int L_hat, const PhiPsi& fine, const PhiPsi& coarse) {
  const Matrix A = assemble_scalar_matching_matrix(objective, L_hat, fine);
  const Matrix At = assemble_scalar_matching_matrix(objective, L_hat, coarse);
  const Matrix S = Matrix::Identity(A.rows(), A.cols()) - numerics::dense_solve(At, A);
  return numerics::spectral_radius(S);
}

BoundGrid bound_grid_sweep(ObjectiveKind objective, const PropagatorKind& fine, const PropagatorKind& coarse,
                           std::vector<double> sigma_hat, std::vector<double> gamma_hat) {
  if (sigma_hat.empty() || gamma_hat.empty()) throw std::invalid_argument("bound_grid_sweep: empty grid");
  BoundGrid g;
  g.sigma_hat = std::move(sigma_hat);
  g.gamma_hat = std::move(gamma_hat);
  g.rho.assign(g.sigma_hat.size() * g.gamma_hat.size(), 0.0);
  const std::size_t ng = g.gamma_hat.size();
  parallel_for(g.sigma_hat.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < ng; ++j) {
      const double sh = g.sigma_hat[i];
      const double gh = g.gamma_hat[j];
      g.rho[i * ng + j] = rho_bound(objective, coefficients(objective, fine, sh, gh), coefficients(objective, coarse, sh, gh));
    }
  });
  return g;
}

std::vector<double> logspace(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > 0.0) || n < 1) throw std::invalid_argument("logspace: need positive bounds and n >= 1");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < n; ++i) v[i] = std::pow(10.0, a + (b - a) * double(i) / double(n - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

}  // namespace paraopt::analysis
