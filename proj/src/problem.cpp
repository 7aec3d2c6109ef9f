#include "paraopt/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace paraopt {

std::string_view to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::Tracking ? "tracking" : "terminal_cost";
}

ObjectiveKind objective_from_string(std::string_view name) {
  if (name == "tracking") return ObjectiveKind::Tracking;
  if (name == "terminal_cost" || name == "terminal-cost" || name == "terminal")
    return ObjectiveKind::TerminalCost;
  throw std::invalid_argument("unknown objective '" + std::string(name) + "'");
}

std::string_view to_string(IeVariant variant) { return variant == IeVariant::FOTD ? "fotd" : "fdto"; }

IeVariant ie_variant_from_string(std::string_view name) {
  if (name == "fotd" || name == "FOTD") return IeVariant::FOTD;
  if (name == "fdto" || name == "FDTO") return IeVariant::FDTO;
  throw std::invalid_argument("unknown implicit-Euler variant '" + std::string(name) + "'");
}

void LinearControlProblem::validate() const {
  if (K.rows() < 1 || K.rows() != K.cols()) throw std::invalid_argument("problem: K must be square with M >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("problem: gamma must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("problem: T must be positive");
  if (y_init.size() != K.rows()) throw std::invalid_argument("problem: y_init has wrong length");
  if (objective == ObjectiveKind::TerminalCost) {
    if (!y_target) throw std::invalid_argument("problem: terminal cost requires y_target");
    if (y_target->size() != K.rows()) throw std::invalid_argument("problem: y_target has wrong length");
  } else if (!y_d) {
    throw std::invalid_argument("problem: tracking requires y_d");
  }
}

TimeDecomposition TimeDecomposition::make(ObjectiveKind objective, double T, int L, int J_fine,
                                          int J_coarse) {
  TimeDecomposition d;
  d.L = L;
  d.DT = T / double(L);
  d.L_hat = objective == ObjectiveKind::Tracking ? L - 1 : L;
  d.J_fine = J_fine;
  d.J_coarse = J_coarse;
  d.validate(T);
  return d;
}

void TimeDecomposition::validate(double T) const {
  if (L < 2) throw std::invalid_argument("decomposition: L must be >= 2");
  if (!(DT > 0.0) || std::abs(L * DT - T) > 1e-12 * T)
    throw std::invalid_argument("decomposition: L * DT must equal T");
  if (L_hat != L - 1 && L_hat != L) throw std::invalid_argument("decomposition: L_hat must be L - 1 or L");
  if (J_coarse < 1 || J_fine < J_coarse) throw std::invalid_argument("decomposition: need J_fine >= J_coarse >= 1");
}

double gamma_hat(ObjectiveKind objective, double gamma, double tau) {
  return objective == ObjectiveKind::Tracking ? tau / std::sqrt(gamma) : tau / gamma;
}

HattedScalings hatted(ObjectiveKind objective, double gamma, double sigma, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("hatted: tau must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("hatted: gamma must be positive");
  return {tau * sigma, gamma_hat(objective, gamma, tau), tau};
}

HattedScalings hatted(const LinearControlProblem& problem, double tau) {
  if (problem.dim() != 1) throw std::invalid_argument("hatted: problem is not scalar; pass sigma explicitly");
  return hatted(problem.objective, problem.gamma, problem.K(0, 0), tau);
}

Matrix periodic_laplacian(int n) {
  if (n < 2) throw std::invalid_argument("periodic_laplacian: n must be >= 2");
  const int M = n * n;
  const double inv_h2 = double(n) * double(n);
  Matrix D = Matrix::Zero(M, M);
  auto idx = [n](int i, int j) { return ((i + n) % n) + n * ((j + n) % n); };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int row = idx(i, j);
      D(row, row) -= 4.0 * inv_h2;
      // Accumulate: for n = 2 both neighbours along an axis are the same node.
      D(row, idx(i + 1, j)) += inv_h2;
      D(row, idx(i - 1, j)) += inv_h2;
      D(row, idx(i, j + 1)) += inv_h2;
      D(row, idx(i, j - 1)) += inv_h2;
    }
  }
  return D;
}

Matrix periodic_central_difference(int n, int axis) {
  if (n < 2) throw std::invalid_argument("periodic_central_difference: n must be >= 2");
  if (axis != 0 && axis != 1) throw std::invalid_argument("periodic_central_difference: axis must be 0 or 1");
  const int M = n * n;
  const double inv_2h = 0.5 * double(n);
  Matrix D = Matrix::Zero(M, M);
  auto idx = [n](int i, int j) { return ((i + n) % n) + n * ((j + n) % n); };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int row = idx(i, j);
      if (axis == 0) {
        D(row, idx(i + 1, j)) += inv_2h;
        D(row, idx(i - 1, j)) -= inv_2h;
      } else {
        D(row, idx(i, j + 1)) += inv_2h;
        D(row, idx(i, j - 1)) -= inv_2h;
      }
    }
  }
  return D;
}

namespace {

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// sin(2 pi k / n) with exact zeros at k = 0 and k = n/2.
double sin_2pi_frac(int k, int n) {
  k %= n;
  if (k == 0 || 2 * k == n) return 0.0;
  return std::sin(2.0 * std::numbers::pi * double(k) / double(n));
}

// Fills the initial value, target state and tracking trajectory shared by the
// heat and advection-diffusion problems.
void attach_grid_fields(LinearControlProblem& p, int n) {
  const int M = n * n;
  const double pi = std::numbers::pi;
  const double c = 12.0 * pi * pi;
  const double gamma = p.gamma;
  const double T = p.T;

  Vector shape(M);  // sin(2 pi x1) sin(2 pi x2)
  p.y_init.resize(M);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double s1 = sin_2pi_frac(i, n);
      const double s2 = sin_2pi_frac(j, n);
      shape(i + n * j) = s1 * s2;
      p.y_init(i + n * j) = (1.0 - T) / (c * gamma) * sign0(s1) * s2 * s2;
    }
  }
  p.y_target = shape;
  const double slope = c + 1.0 / (c * gamma);
  const double offset = 1.0 + 1.0 / (c * c * gamma);
  p.y_d = [shape, slope, offset, T](double t) -> Vector { return (slope * (t - T) - offset) * shape; };
  p.y_d_time_invariant = false;
}

}  // namespace

LinearControlProblem make_heat_problem(int n, double gamma, double T, ObjectiveKind objective) {
  LinearControlProblem p;
  p.K = -periodic_laplacian(n);
  p.gamma = gamma;
  p.T = T;
  p.objective = objective;
  p.name = "heat";
  attach_grid_fields(p, n);
  p.validate();
  return p;
}

LinearControlProblem make_advection_diffusion_problem(int n, double gamma, double T,
                                                      ObjectiveKind objective) {
  LinearControlProblem p;
  p.K = -(periodic_laplacian(n) / 10.0 - periodic_central_difference(n, 0) -
          periodic_central_difference(n, 1));
  p.gamma = gamma;
  p.T = T;
  p.objective = objective;
  p.name = "advection_diffusion";
  attach_grid_fields(p, n);
  p.validate();
  return p;
}

LinearControlProblem make_scalar_problem(double sigma, double gamma, double T, ObjectiveKind objective,
                                         double y_init, double data) {
  LinearControlProblem p;
  p.K = Matrix::Constant(1, 1, sigma);
  p.gamma = gamma;
  p.T = T;
  p.objective = objective;
  p.y_init = Vector::Constant(1, y_init);
  p.name = "scalar";
  if (objective == ObjectiveKind::Tracking) {
    p.y_d = [data](double) { return Vector::Constant(1, data); };
    p.y_d_time_invariant = true;
  } else {
    p.y_target = Vector::Constant(1, data);
  }
  p.validate();
  return p;
}

}  // namespace paraopt
