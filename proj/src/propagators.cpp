#include "paraopt/propagators.hpp"

#include "paraopt/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace paraopt {

namespace {

using Triplet = Eigen::Triplet<double>;

void add_block(std::vector<Triplet>& t, Eigen::Index r0, Eigen::Index c0, const Matrix& B) {
  for (Eigen::Index j = 0; j < B.cols(); ++j)
    for (Eigen::Index i = 0; i < B.rows(); ++i)
      if (B(i, j) != 0.0) t.emplace_back(r0 + i, c0 + j, B(i, j));
}

void add_scaled_identity(std::vector<Triplet>& t, Eigen::Index r0, Eigen::Index c0, Eigen::Index M, double s) {
  if (s == 0.0) return;
  for (Eigen::Index i = 0; i < M; ++i) t.emplace_back(r0 + i, c0 + i, s);
}

}  // namespace

void AffinePropagator::validate(double tol) const {
  const Eigen::Index M = Phi_P.rows();
  for (const Matrix* m : {&Phi_P, &Psi_P, &Phi_Q, &Psi_Q}) {
    if (m->rows() != M || m->cols() != M) throw std::invalid_argument("AffinePropagator: blocks must be M x M");
    if (!m->allFinite()) throw NumericalError("AffinePropagator: non-finite coefficient block");
  }
  if (b_P.size() != b_Q.size() || b_P.empty()) throw std::invalid_argument("AffinePropagator: offsets missing");
  for (std::size_t l = 0; l < b_P.size(); ++l) {
    if (b_P[l].size() != M || b_Q[l].size() != M) throw std::invalid_argument("AffinePropagator: offset size");
    if (!b_P[l].allFinite() || !b_Q[l].allFinite()) throw NumericalError("AffinePropagator: non-finite offset");
  }
  if (objective == ObjectiveKind::TerminalCost && Psi_Q.norm() > tol * std::max(1.0, Psi_P.norm()))
    throw std::invalid_argument("AffinePropagator: terminal-cost propagator must have Psi_Q = 0");
}

SubintervalSystem::SubintervalSystem(const Matrix& K, double gamma, ObjectiveKind objective, IeVariant variant,
                                     double DT, int J)
    : objective_(objective), variant_(variant), M_(K.rows()), J_(J) {
  if (K.rows() != K.cols() || K.rows() < 1) throw std::invalid_argument("SubintervalSystem: K must be square");
  if (J < 1) throw std::invalid_argument("SubintervalSystem: J must be >= 1");
  if (!(DT > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("SubintervalSystem: DT and gamma must be positive");
  if (objective == ObjectiveKind::Tracking && variant == IeVariant::FDTO)
    throw std::invalid_argument("SubintervalSystem: tracking propagators support FOTD only");
  tau_ = DT / J;
  c_ = gamma_hat(objective, gamma, tau_);

  const Eigen::Index M = M_;
  const Matrix Z = Matrix::Identity(M, M) + tau_ * K;
  const Matrix Za = Z.transpose();
  // Refuse singular sub-steps up front with a clear message.
  try {
    numerics::DenseLu<Matrix> check(Z);
  } catch (const NumericalError&) {
    throw NumericalError("SubintervalSystem: I + tau K is singular");
  }

  const bool fdto = objective == ObjectiveKind::TerminalCost && variant == IeVariant::FDTO;
  const bool tracking = objective == ObjectiveKind::Tracking;
  std::vector<Triplet> t;
  t.reserve(std::size_t(2 * J) * std::size_t(M) * std::size_t(M + 3));
  for (int j = 1; j <= J; ++j) {
    const Eigen::Index yr = (j - 1) * M;
    add_block(t, yr, (j - 1) * M, Z);
    if (j >= 2) add_scaled_identity(t, yr, (j - 2) * M, M, -1.0);
    if (fdto) {
      add_scaled_identity(t, yr, (J + j - 1) * M, M, c_);
    } else if (j < J) {
      add_scaled_identity(t, yr, (J + j) * M, M, c_);
    }

    const Eigen::Index lr = (J + j - 1) * M;
    add_block(t, lr, (J + j - 1) * M, Za);
    if (j < J) add_scaled_identity(t, lr, (J + j) * M, M, -1.0);
    if (tracking && j >= 2) add_scaled_identity(t, lr, (j - 2) * M, M, -c_);
  }
  A_.resize(2 * J * M, 2 * J * M);
  A_.setFromTriplets(t.begin(), t.end());
  A_.makeCompressed();

  lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  lu_->analyzePattern(A_);
  lu_->factorize(A_);
  if (lu_->info() != Eigen::Success) throw NumericalError("SubintervalSystem: factorization failed (singular system)");
}

Matrix SubintervalSystem::rhs(const Matrix& y0, const Matrix& lamJ, const std::vector<Matrix>* y_d_samples) const {
  const Eigen::Index M = M_;
  const Eigen::Index ncols = y0.cols();
  if (y0.rows() != M || lamJ.rows() != M || lamJ.cols() != ncols)
    throw std::invalid_argument("SubintervalSystem: boundary data have wrong shape");
  const bool fdto = objective_ == ObjectiveKind::TerminalCost && variant_ == IeVariant::FDTO;
  const bool tracking = objective_ == ObjectiveKind::Tracking;
  const int J = J_;

  Matrix b = Matrix::Zero(A_.rows(), ncols);
  b.middleRows(0, M) += y0;
  if (!fdto) b.middleRows((J - 1) * M, M) -= c_ * lamJ;
  if (tracking) b.middleRows(J * M, M) += c_ * y0;
  b.middleRows((2 * J - 1) * M, M) += lamJ;

  if (y_d_samples) {
    if (!tracking) throw std::invalid_argument("SubintervalSystem: source samples apply to tracking only");
    if (int(y_d_samples->size()) != J) throw std::invalid_argument("SubintervalSystem: need J source samples");
    for (int j = 1; j <= J; ++j) {
      const Matrix& s = (*y_d_samples)[j - 1];
      if (s.rows() != M || s.cols() != ncols) throw std::invalid_argument("SubintervalSystem: source sample shape");
      b.middleRows((J + j - 1) * M, M) -= c_ * s;
    }
  }
  return b;
}

std::pair<Matrix, Matrix> SubintervalSystem::solve(const Matrix& y0, const Matrix& lamJ,
                                                   const std::vector<Matrix>* y_d_samples) const {
  const Matrix b = rhs(y0, lamJ, y_d_samples);
  const Matrix x = lu_->solve(b);
  if (lu_->info() != Eigen::Success || !x.allFinite()) throw NumericalError("SubintervalSystem: solve failed");
  return {x.middleRows((J_ - 1) * M_, M_), x.middleRows(J_ * M_, M_)};
}

AffinePropagator build_implicit_euler_propagator(const LinearControlProblem& problem, const TimeDecomposition& decomp,
                                                 int J, IeVariant variant) {
  problem.validate();
  if (problem.objective == ObjectiveKind::Tracking && variant == IeVariant::FDTO)
    throw std::invalid_argument("implicit Euler: tracking propagators support FOTD only");
  const Eigen::Index M = problem.dim();
  const SubintervalSystem sys(problem.K, problem.gamma, problem.objective, variant, decomp.DT, J);

  AffinePropagator p;
  p.objective = problem.objective;
  const Matrix I = Matrix::Identity(M, M);
  const Matrix O = Matrix::Zero(M, M);
  {
    auto [yJ, lam0] = sys.solve(I, O);
    p.Phi_P = yJ;
    p.Psi_Q = lam0;
  }
  {
    auto [yJ, lam0] = sys.solve(O, I);
    p.Psi_P = -yJ;
    p.Phi_Q = lam0;
  }
  if (problem.objective == ObjectiveKind::TerminalCost) p.Psi_Q.setZero();  // exactly zero by construction

  const int L = decomp.L;
  p.b_P.assign(L, Vector::Zero(M));
  p.b_Q.assign(L, Vector::Zero(M));
  if (problem.objective == ObjectiveKind::Tracking) {
    const double tau = sys.tau();
    std::vector<Matrix> samples(J, Matrix(M, L));
    for (int l = 1; l <= L; ++l) {
      const double t0 = (l - 1) * decomp.DT;
      for (int j = 1; j <= J; ++j) {
        const Vector yd = problem.y_d(t0 + (j - 1) * tau);
        if (yd.size() != M) throw std::invalid_argument("implicit Euler: y_d has wrong length");
        samples[j - 1].col(l - 1) = yd;
      }
    }
    auto [bp, bq] = sys.solve(Matrix::Zero(M, L), Matrix::Zero(M, L), &samples);
    for (int l = 0; l < L; ++l) {
      p.b_P[l] = bp.col(l);
      p.b_Q[l] = bq.col(l);
    }
  }

  if (J == 1 && variant == IeVariant::FOTD) {
    ZForm z;
    z.Z_P = I + decomp.DT * problem.K;
    z.Z_Q = z.Z_P.transpose();
    z.c_P = gamma_hat(problem.objective, problem.gamma, decomp.DT);
    z.c_Q = problem.objective == ObjectiveKind::Tracking ? z.c_P : 0.0;
    p.z_form = std::move(z);
  }
  p.description = "ie(J=" + std::to_string(J) + "," + std::string(to_string(variant)) + ")";
  p.validate();
  return p;
}

AffinePropagator build_exact_propagator(const LinearControlProblem& problem, const TimeDecomposition& decomp) {
  problem.validate();
  if (!numerics::is_symmetric(problem.K))
    throw std::invalid_argument("exact propagator: K must be symmetric");
  const auto eig = numerics::eigen_symmetric(problem.K);
  const Matrix& V = eig.vectors;
  const Eigen::Index M = problem.dim();
  const bool tracking = problem.objective == ObjectiveKind::Tracking;
  const double DT = decomp.DT;

  Vector phi(M), psi(M);
  for (Eigen::Index i = 0; i < M; ++i) {
    const double s = eig.values(i);
    const analysis::PhiPsi c = tracking ? analysis::phi_psi_tracking_exact(s, problem.gamma, DT)
                                        : analysis::phi_psi_terminal_exact(s, problem.gamma, DT);
    phi(i) = c.phi;
    psi(i) = c.psi;
  }

  AffinePropagator p;
  p.objective = problem.objective;
  p.Phi_P = V * phi.asDiagonal() * V.transpose();
  p.Phi_Q = p.Phi_P;
  p.Psi_P = V * psi.asDiagonal() * V.transpose();
  p.Psi_Q = tracking ? p.Psi_P : Matrix::Zero(M, M);

  const int L = decomp.L;
  p.b_P.assign(L, Vector::Zero(M));
  p.b_Q.assign(L, Vector::Zero(M));
  if (tracking) {
    if (!problem.y_d_time_invariant)
      throw std::invalid_argument("exact propagator: tracking offsets need a time-invariant y_d");
    // Each mode relaxes towards its steady state; offsets follow from the
    // homogeneous propagator applied to the deviation from it.
    const Vector yd_modal = V.transpose() * problem.y_d(0.0);
    const double sg = std::sqrt(problem.gamma);
    Vector bp(M), bq(M);
    for (Eigen::Index i = 0; i < M; ++i) {
      const double s = eig.values(i);
      const double y_ss = yd_modal(i) / (1.0 + s * s * problem.gamma);
      const double lam_ss = -s * sg * y_ss;
      bp(i) = (1.0 - phi(i)) * y_ss + psi(i) * lam_ss;
      bq(i) = (1.0 - phi(i)) * lam_ss - psi(i) * y_ss;
    }
    const Vector bP = V * bp;
    const Vector bQ = V * bq;
    p.b_P.assign(L, bP);
    p.b_Q.assign(L, bQ);
  }
  p.description = "exact";
  p.validate();
  return p;
}

std::pair<Vector, Vector> propagate(const AffinePropagator& prop, int l, const Vector& y_prev,
                                    const Vector& lam_next) {
  if (l < 1 || l > prop.intervals()) throw std::out_of_range("propagate: interval index out of range");
  if (y_prev.size() != prop.dim() || lam_next.size() != prop.dim())
    throw std::invalid_argument("propagate: vectors must have length M");
  Vector y = prop.Phi_P * y_prev - prop.Psi_P * lam_next + prop.b_P[l - 1];
  Vector lam = prop.Psi_Q * y_prev + prop.Phi_Q * lam_next + prop.b_Q[l - 1];
  return {std::move(y), std::move(lam)};
}

BlackBoxPropagator black_box_view(std::shared_ptr<const AffinePropagator> prop, int l) {
  if (!prop) throw std::invalid_argument("black_box_view: null propagator");
  BlackBoxPropagator bb;
  bb.dim = prop->dim();
  bb.P = [prop, l](const Vector& y, const Vector& lam) { return propagate(*prop, l, y, lam).first; };
  bb.Q = [prop, l](const Vector& y, const Vector& lam) { return propagate(*prop, l, y, lam).second; };
  const Vector z = Vector::Zero(bb.dim);
  auto [p0, q0] = propagate(*prop, l, z, z);
  bb.P00 = std::move(p0);
  bb.Q00 = std::move(q0);
  return bb;
}

}  // namespace paraopt
