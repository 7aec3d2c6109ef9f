#pragma once

#include "paraopt/numerics.hpp"
#include "paraopt/problem.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace paraopt {

/// Single-step implicit-Euler structure of a propagator:
///   Phi_P = Z_P^{-1}, Psi_P = c_P Z_P^{-1}, Phi_Q = Z_Q^{-1}, Psi_Q = c_Q Z_Q^{-1}.
/// Lets the preconditioner solve its block systems without inverting Z.
struct ZForm {
  Matrix Z_P;
  Matrix Z_Q;
  double c_P = 0.0;
  double c_Q = 0.0;
};

/// Affine sub-interval propagators
///   P_l(y, lam) = Phi_P y - Psi_P lam + b_P[l-1]
///   Q_l(y, lam) = Psi_Q y + Phi_Q lam + b_Q[l-1]
/// for intervals l = 1..L. Immutable once built.
struct AffinePropagator {
  Matrix Phi_P, Psi_P, Phi_Q, Psi_Q;
  std::vector<Vector> b_P, b_Q;
  ObjectiveKind objective = ObjectiveKind::Tracking;
  std::optional<ZForm> z_form;
  std::string description;

  Eigen::Index dim() const { return Phi_P.rows(); }
  int intervals() const { return int(b_P.size()); }

  /// Structural checks on the coefficient blocks (tolerance relative to the block norms).
  void validate(double tol = 1e-12) const;
};

/// The coupled state/adjoint system for J implicit-Euler steps on one
/// sub-interval, assembled once and factorized. Boundary data are the state
/// entering the interval and the adjoint leaving it.
///
/// Unknown layout (blocks of length M):
///   tracking, terminal FOTD: y_1..y_J, lam_0..lam_{J-1}
///   terminal FDTO:           y_1..y_J, mu_1..mu_J
/// In both layouts block J - 1 is the outgoing state and block J the
/// incoming adjoint.
class SubintervalSystem {
 public:
  SubintervalSystem(const Matrix& K, double gamma, ObjectiveKind objective, IeVariant variant, double DT, int J);

  /// Solves for boundary data (columns of y0 and lamJ) plus optional source
  /// samples; returns (y_J, lam_0) column blocks.
  std::pair<Matrix, Matrix> solve(const Matrix& y0, const Matrix& lamJ,
                                  const std::vector<Matrix>* y_d_samples = nullptr) const;

  Eigen::Index size() const { return A_.rows(); }
  Matrix dense() const { return Matrix(A_); }
  int steps() const { return J_; }
  double tau() const { return tau_; }

 private:
  Matrix rhs(const Matrix& y0, const Matrix& lamJ, const std::vector<Matrix>* y_d_samples) const;

  ObjectiveKind objective_;
  IeVariant variant_;
  Eigen::Index M_;
  int J_;
  double tau_;
  double c_;  // coupling tau/sqrt(gamma) or tau/gamma
  Eigen::SparseMatrix<double> A_;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

/// J implicit-Euler steps per sub-interval of length decomp.DT.
/// Tracking supports FOTD only.
AffinePropagator build_implicit_euler_propagator(const LinearControlProblem& problem, const TimeDecomposition& decomp,
                                                 int J, IeVariant variant = IeVariant::FOTD);

/// Exact sub-interval solution through the eigen-decomposition of K (symmetric
/// only). Tracking offsets require a time-invariant y_d.
AffinePropagator build_exact_propagator(const LinearControlProblem& problem, const TimeDecomposition& decomp);

/// (P_l(y_prev, lam_next), Q_l(y_prev, lam_next)) for interval l in 1..L.
std::pair<Vector, Vector> propagate(const AffinePropagator& prop, int l, const Vector& y_prev, const Vector& lam_next);

/// Propagators seen only through evaluation, with the offset probes cached.
struct BlackBoxPropagator {
  std::function<Vector(const Vector&, const Vector&)> P;
  std::function<Vector(const Vector&, const Vector&)> Q;
  Vector P00;
  Vector Q00;
  Eigen::Index dim = 0;
};

BlackBoxPropagator black_box_view(std::shared_ptr<const AffinePropagator> prop, int l = 1);

}  // namespace paraopt
