#include "paraopt/paraopt.hpp"

#include "paraopt/parallel.hpp"

#include <chrono>
#include <stdexcept>

namespace paraopt {

PairedTrajectory PairedTrajectory::zeros(int L_hat, Eigen::Index M) {
  PairedTrajectory p;
  p.y.assign(L_hat, Vector::Zero(M));
  p.lam_hat.assign(L_hat, Vector::Zero(M));
  return p;
}

PairedTrajectory PairedTrajectory::from_stacked(const Vector& x, int L_hat, Eigen::Index M) {
  if (x.size() != 2 * L_hat * M) throw std::invalid_argument("PairedTrajectory: stacked vector has wrong length");
  PairedTrajectory p;
  p.y.resize(L_hat);
  p.lam_hat.resize(L_hat);
  for (int l = 0; l < L_hat; ++l) {
    p.y[l] = x.segment(l * M, M);
    p.lam_hat[l] = x.segment((L_hat + l) * M, M);
  }
  return p;
}

Vector PairedTrajectory::stacked() const {
  const int L = L_hat();
  if (L == 0) return Vector();
  const Eigen::Index M = y[0].size();
  Vector x(2 * L * M);
  for (int l = 0; l < L; ++l) {
    x.segment(l * M, M) = y[l];
    x.segment((L + l) * M, M) = lam_hat[l];
  }
  return x;
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Diverged: return "diverged";
    case SolveStatus::InnerFailure: return "inner_failure";
  }
  return "unknown";
}

int SolveLog::total_inner_iterations() const {
  int n = 0;
  for (const auto& r : records) n += r.inner_iterations;
  return n;
}

namespace {

void check_consistent(const AffinePropagator& prop, const TimeDecomposition& decomp, Eigen::Index len) {
  const Eigen::Index M = prop.dim();
  if (len != 2 * decomp.L_hat * M) throw std::invalid_argument("matching system: vector has wrong length");
  const int needed = prop.objective == ObjectiveKind::Tracking ? decomp.L_hat + 1 : decomp.L_hat;
  if (prop.intervals() < needed) throw std::invalid_argument("matching system: propagator has too few intervals");
}

// Jacobian action; the terminal row of the adjoint block depends on the objective.
Vector jacobian_apply(const AffinePropagator& p, int L, const Vector& v) {
  const Eigen::Index M = p.dim();
  const Eigen::Index n = L * M;
  Vector out(2 * n);
  const bool tracking = p.objective == ObjectiveKind::Tracking;
  parallel_for(std::size_t(L), [&](std::size_t li) {
    const int l = int(li);
    const auto y = [&](int k) { return v.segment(k * M, M); };
    const auto lam = [&](int k) { return v.segment(n + k * M, M); };
    Vector top = y(l) + p.Psi_P * lam(l);
    if (l > 0) top -= p.Phi_P * y(l - 1);
    out.segment(l * M, M) = top;
    Vector bot = lam(l);
    if (l + 1 < L) {
      bot -= p.Psi_Q * y(l) + p.Phi_Q * lam(l + 1);
    } else if (tracking) {
      bot -= p.Psi_Q * y(l);
    } else {
      bot -= y(l);
    }
    out.segment(n + l * M, M) = bot;
  });
  return out;
}

}  // namespace

Vector matching_residual(const AffinePropagator& fine, const LinearControlProblem& problem,
                         const TimeDecomposition& decomp, const Vector& x) {
  check_consistent(fine, decomp, x.size());
  if (problem.dim() != fine.dim()) throw std::invalid_argument("matching_residual: problem and propagator differ in M");
  const int L = decomp.L_hat;
  const Eigen::Index M = fine.dim();
  const Eigen::Index n = L * M;
  const bool tracking = fine.objective == ObjectiveKind::Tracking;
  Vector f(2 * n);
  parallel_for(std::size_t(L), [&](std::size_t li) {
    const int l = int(li);  // interface l + 1
    const Vector y_prev = l == 0 ? problem.y_init : Vector(x.segment((l - 1) * M, M));
    const Vector y_l = x.segment(l * M, M);
    const Vector lam_l = x.segment(n + l * M, M);
    f.segment(l * M, M) = y_l - propagate(fine, l + 1, y_prev, lam_l).first;
    if (l + 1 < L) {
      const Vector lam_next = x.segment(n + (l + 1) * M, M);
      f.segment(n + l * M, M) = lam_l - propagate(fine, l + 2, y_l, lam_next).second;
    } else if (tracking) {
      f.segment(n + l * M, M) = lam_l - propagate(fine, l + 2, y_l, Vector::Zero(M)).second;
    } else {
      f.segment(n + l * M, M) = lam_l - (y_l - *problem.y_target);
    }
  });
  return f;
}

Vector matching_residual(const AffinePropagator& fine, const LinearControlProblem& problem,
                         const TimeDecomposition& decomp, const PairedTrajectory& x) {
  if (x.L_hat() != decomp.L_hat) throw std::invalid_argument("matching_residual: block count differs from L_hat");
  return matching_residual(fine, problem, decomp, x.stacked());
}

Vector apply_A(const AffinePropagator& fine, const TimeDecomposition& decomp, const Vector& v) {
  check_consistent(fine, decomp, v.size());
  return jacobian_apply(fine, decomp.L_hat, v);
}

Vector apply_A_tilde(const AffinePropagator& coarse, const TimeDecomposition& decomp, const Vector& v) {
  check_consistent(coarse, decomp, v.size());
  return jacobian_apply(coarse, decomp.L_hat, v);
}

Matrix assemble_matching_matrix(const AffinePropagator& p, int L) {
  const Eigen::Index M = p.dim();
  const Eigen::Index n = L * M;
  Matrix A = Matrix::Identity(2 * n, 2 * n);
  for (int l = 0; l < L; ++l) {
    if (l > 0) A.block(l * M, (l - 1) * M, M, M) -= p.Phi_P;
    A.block(l * M, n + l * M, M, M) += p.Psi_P;
    if (l + 1 < L) A.block(n + l * M, n + (l + 1) * M, M, M) -= p.Phi_Q;
    A.block(n + l * M, l * M, M, M) -= p.Psi_Q;
  }
  if (p.objective == ObjectiveKind::TerminalCost) {
    // Corner: Psi_Q - dQhat/dy with dQhat/dy = I.
    A.block(n + (L - 1) * M, (L - 1) * M, M, M) += p.Psi_Q - Matrix::Identity(M, M);
  }
  return A;
}

Vector assemble_rhs(const AffinePropagator& p, const LinearControlProblem& problem, const TimeDecomposition& decomp) {
  const int L = decomp.L_hat;
  const Eigen::Index M = p.dim();
  const Eigen::Index n = L * M;
  check_consistent(p, decomp, 2 * n);
  Vector b(2 * n);
  for (int l = 0; l < L; ++l) {
    b.segment(l * M, M) = p.b_P[l];
    if (l + 1 < L || p.objective == ObjectiveKind::Tracking) {
      b.segment(n + l * M, M) = p.b_Q[l + 1];
    } else {
      b.segment(n + l * M, M) = -*problem.y_target;  // lambda = y - y_target at T
    }
  }
  b.segment(0, M) += p.Phi_P * problem.y_init;
  return b;
}

Matrix assemble_iteration_matrix(const AffinePropagator& fine, const AffinePropagator& coarse, int L_hat) {
  const Matrix A = assemble_matching_matrix(fine, L_hat);
  const Matrix At = assemble_matching_matrix(coarse, L_hat);
  return Matrix::Identity(A.rows(), A.cols()) - numerics::dense_solve(At, A);
}

SolveResult paraopt_solve(const LinearControlProblem& problem, const TimeDecomposition& decomp,
                          const AffinePropagator& fine, const AffinePropagator& coarse, const NewtonConfig& cfg) {
  if (!(cfg.outer_tolerance > 0.0)) throw std::invalid_argument("NewtonConfig: outer_tolerance must be positive");
  if (cfg.max_outer < 1) throw std::invalid_argument("NewtonConfig: max_outer must be >= 1");
  if (fine.objective != problem.objective || coarse.objective != problem.objective)
    throw std::invalid_argument("paraopt_solve: propagators and problem disagree on the objective");
  cfg.inner.validate();

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  const int L = decomp.L_hat;
  const Eigen::Index M = problem.dim();
  SolveResult out;
  SolveLog& log = out.log;
  Vector x = Vector::Zero(2 * L * M);
  Vector f = matching_residual(fine, problem, decomp, x);
  double res = f.norm();
  log.records.push_back({0, res, 0, elapsed()});
  if (cfg.on_iterate) cfg.on_iterate(0, x);
  const double threshold = cfg.outer_tolerance * std::max(1.0, res);

  const numerics::LinearOperator<double> A_tilde = [&](const Vector& v) { return apply_A_tilde(coarse, decomp, v); };
  numerics::LinearOperator<double> precond;
  if (cfg.preconditioner) {
    const auto plan = cfg.preconditioner;
    precond = [plan](const Vector& v) { return apply_inverse(*plan, v); };
  }

  if (res <= threshold) {
    log.status = SolveStatus::Converged;
  } else {
    log.status = SolveStatus::MaxIterations;
    for (int k = 1; k <= cfg.max_outer; ++k) {
      numerics::GmresResult<double> step;
      try {
        step = numerics::gmres<double>(A_tilde, Vector(-f), Vector::Zero(x.size()), precond ? &precond : nullptr,
                                       cfg.inner);
      } catch (const NumericalError& e) {
        log.status = SolveStatus::InnerFailure;
        log.message = e.what();
        break;
      }
      x += step.x;
      f = matching_residual(fine, problem, decomp, x);
      res = f.norm();
      log.records.push_back({k, res, step.report.iterations, elapsed()});
      if (cfg.on_iterate) cfg.on_iterate(k, x);
      if (!std::isfinite(res)) {
        log.status = SolveStatus::InnerFailure;
        log.message = "residual became non-finite";
        break;
      }
      if (res <= threshold) {
        log.status = SolveStatus::Converged;
        break;
      }
      if (k >= 5 && res > 10.0 * log.records[k - 5].residual) {
        log.status = SolveStatus::Diverged;
        log.message = "residual grew tenfold over five iterations";
        break;
      }
    }
  }
  out.x = PairedTrajectory::from_stacked(x, L, M);
  return out;
}

}  // namespace paraopt
