#include "paraopt/preconditioner.hpp"

#include "paraopt/parallel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace paraopt {

std::string_view to_string(PreconditionerMethod m) {
  return m == PreconditionerMethod::General ? "general" : "triangular";
}

std::string_view to_string(SmallSystemMethod m) {
  return m == SmallSystemMethod::BlackBoxIterative ? "blackbox" : "explicit";
}

PreconditionerMethod preconditioner_method_from_string(std::string_view name) {
  if (name == "general") return PreconditionerMethod::General;
  if (name == "triangular") return PreconditionerMethod::Triangular;
  throw std::invalid_argument("unknown preconditioner method '" + std::string(name) + "'");
}

SmallSystemMethod small_system_method_from_string(std::string_view name) {
  if (name == "blackbox" || name == "black_box") return SmallSystemMethod::BlackBoxIterative;
  if (name == "explicit") return SmallSystemMethod::ExplicitDirect;
  throw std::invalid_argument("unknown small-system method '" + std::string(name) + "'");
}

Complex default_alpha(PreconditionerMethod method) {
  return method == PreconditionerMethod::General ? Complex(-1.0, 0.0) : Complex(0.01, 0.0);
}

CVector alpha_circulant_eigenvalues(int L_hat, Complex alpha) {
  if (L_hat < 1) throw std::invalid_argument("alpha_circulant_eigenvalues: L_hat must be >= 1");
  if (alpha == 0.0) throw std::invalid_argument("alpha_circulant_eigenvalues: alpha must be non-zero");
  const Complex root = std::pow(alpha, 1.0 / double(L_hat));
  CVector d(L_hat);
  for (int l = 0; l < L_hat; ++l)
    d(l) = -root * std::polar(1.0, 2.0 * std::numbers::pi * double(l) / double(L_hat));
  return d;
}

CMatrix alpha_circulant_matrix(int L_hat, Complex alpha) {
  if (L_hat < 1) throw std::invalid_argument("alpha_circulant_matrix: L_hat must be >= 1");
  CMatrix C = CMatrix::Zero(L_hat, L_hat);
  for (int i = 1; i < L_hat; ++i) C(i, i - 1) = -1.0;
  C(0, L_hat - 1) += -alpha;
  return C;
}

CMatrix assemble_block(const AffinePropagator& c, Complex d) {
  const Eigen::Index M = c.dim();
  CMatrix H(2 * M, 2 * M);
  const CMatrix I = CMatrix::Identity(M, M);
  H.topLeftCorner(M, M) = I + d * c.Phi_P.cast<Complex>();
  H.topRightCorner(M, M) = c.Psi_P.cast<Complex>();
  H.bottomLeftCorner(M, M) = -c.Psi_Q.cast<Complex>();
  H.bottomRightCorner(M, M) = I + std::conj(d) * c.Phi_Q.cast<Complex>();
  return H;
}

CMatrix assemble_preconditioner(const AffinePropagator& c, int L_hat, Complex alpha) {
  const Eigen::Index M = c.dim();
  const Eigen::Index n = L_hat * M;
  const CMatrix C = alpha_circulant_matrix(L_hat, alpha);
  const CMatrix Cs = C.adjoint();
  CMatrix P = CMatrix::Identity(2 * n, 2 * n);
  for (int i = 0; i < L_hat; ++i) {
    for (int j = 0; j < L_hat; ++j) {
      if (C(i, j) != 0.0) P.block(i * M, j * M, M, M) += C(i, j) * c.Phi_P.cast<Complex>();
      if (Cs(i, j) != 0.0) P.block(n + i * M, n + j * M, M, M) += Cs(i, j) * c.Phi_Q.cast<Complex>();
    }
    P.block(i * M, n + i * M, M, M) += c.Psi_P.cast<Complex>();
    P.block(n + i * M, i * M, M, M) -= c.Psi_Q.cast<Complex>();
  }
  return P;
}

namespace {

// Linear parts of the black-box propagators, extended to complex arguments.
CVector lin_P(const BlackBoxPropagator& bb, const CVector& y, const CVector& lam) {
  const Vector re = bb.P(y.real(), lam.real()) - bb.P00;
  const Vector im = bb.P(y.imag(), lam.imag()) - bb.P00;
  CVector out(re.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

CVector lin_Q(const BlackBoxPropagator& bb, const CVector& y, const CVector& lam) {
  const Vector re = bb.Q(y.real(), lam.real()) - bb.Q00;
  const Vector im = bb.Q(y.imag(), lam.imag()) - bb.Q00;
  CVector out(re.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

CVector gmres_tight(const numerics::LinearOperator<Complex>& op, const CVector& rhs, const char* what) {
  numerics::GmresConfig cfg;
  cfg.rel_tolerance = 1e-12;
  cfg.max_iterations = int(4 * rhs.size() + 20);
  auto res = numerics::gmres<Complex>(op, rhs, CVector::Zero(rhs.size()), nullptr, cfg);
  if (!res.report.converged)
    throw NumericalError(std::string(what) + ": inner block solve did not reach 1e-12 (residual " +
                         std::to_string(res.report.final_relative_residual) + ")");
  return res.x;
}

// M x M factor of I + d Phi, or Z + d I when the single-step form is available.
numerics::DenseLu<CMatrix> factor_half(const Matrix& Phi, const Matrix* Z, Complex d) {
  const Eigen::Index M = Phi.rows();
  if (Z) return numerics::DenseLu<CMatrix>(Z->cast<Complex>() + d * CMatrix::Identity(M, M));
  return numerics::DenseLu<CMatrix>(CMatrix::Identity(M, M) + d * Phi.cast<Complex>());
}

CVector solve_half(const numerics::DenseLu<CMatrix>& lu, const Matrix* Z, const CVector& r) {
  if (Z) return lu.solve(Z->cast<Complex>() * r);
  return lu.solve(r);
}

// Applies (F Gamma) or its inverse block-wise along time for each spatial index.
// `scale` multiplies entry k before (forward) or after (inverse) the transform.
void transform_time(const numerics::FftPlan& fft, CVector& v, Eigen::Index offset, int L_hat, Eigen::Index M,
                    const CVector& scale, bool forward) {
  parallel_for(std::size_t(M), [&](std::size_t m) {
    std::vector<Complex> buf(L_hat);
    for (int k = 0; k < L_hat; ++k) buf[k] = v(offset + k * M + Eigen::Index(m));
    if (forward) {
      for (int k = 0; k < L_hat; ++k) buf[k] *= scale(k);
      fft.forward(buf);
    } else {
      fft.inverse(buf);
      for (int k = 0; k < L_hat; ++k) buf[k] *= scale(k);
    }
    for (int k = 0; k < L_hat; ++k) v(offset + k * M + Eigen::Index(m)) = buf[k];
  });
}

Vector real_part_checked(const CVector& x) {
  const double n = x.norm();
  const double im = x.imag().norm();
  if (im > 1e-9 * std::max(n, 1e-300) && im > 0.0)
    throw NumericalError("preconditioner: imaginary residue " + std::to_string(im / std::max(n, 1e-300)) +
                         " exceeds 1e-9 (check |alpha| and the coarse propagator)");
  return x.real();
}

CVector general_complex(const PreconditionerPlan& plan, const CVector& v) {
  const int L = plan.L_hat;
  const Eigen::Index M = plan.M;
  const Eigen::Index n = L * M;
  const CVector g = plan.gamma_diag;
  const CVector ginv = g.cwiseInverse();
  CVector w = v;
  transform_time(*plan.fft, w, 0, L, M, g, true);
  transform_time(*plan.fft, w, n, L, M, g, true);

  CVector out(2 * n);
  const ZForm* z = plan.z_form_used ? &*plan.coarse->z_form : nullptr;
  parallel_for(std::size_t(L), [&](std::size_t l) {
    CVector rhs(2 * M);
    rhs.head(M) = w.segment(Eigen::Index(l) * M, M);
    rhs.tail(M) = w.segment(n + Eigen::Index(l) * M, M);
    CVector sol = plan.small_system == SmallSystemMethod::ExplicitDirect
                      ? solve_block_explicit(plan.blocks[l], z, rhs)
                      : solve_block_blackbox(plan.black_box, plan.d(Eigen::Index(l)), rhs);
    out.segment(Eigen::Index(l) * M, M) = sol.head(M);
    out.segment(n + Eigen::Index(l) * M, M) = sol.tail(M);
  });

  transform_time(*plan.fft, out, 0, L, M, ginv, false);
  transform_time(*plan.fft, out, n, L, M, ginv, false);
  return out;
}

CVector triangular_complex(const PreconditionerPlan& plan, const CVector& v) {
  const int L = plan.L_hat;
  const Eigen::Index M = plan.M;
  const Eigen::Index n = L * M;
  const CVector g = plan.gamma_diag;
  const CVector ginv = g.cwiseInverse();
  const CVector g_inv_conj = ginv.conjugate();  // Gamma^{-*}
  const CVector g_conj = g.conjugate();         // Gamma^*
  const bool expl = plan.small_system == SmallSystemMethod::ExplicitDirect;
  const ZForm* zf = plan.z_form_used ? &*plan.coarse->z_form : nullptr;
  const BlackBoxPropagator& bb = plan.black_box;

  // Phase 1: adjoint half.
  CVector s = v.tail(n);
  transform_time(*plan.fft, s, 0, L, M, g_inv_conj, true);
  parallel_for(std::size_t(L), [&](std::size_t l) {
    const Eigen::Index off = Eigen::Index(l) * M;
    const CVector rhs = s.segment(off, M);
    const Complex dc = std::conj(plan.d(Eigen::Index(l)));
    if (expl) {
      s.segment(off, M) = solve_half(plan.bottom[l], zf ? &zf->Z_Q : nullptr, rhs);
    } else {
      const CVector zero = CVector::Zero(M);
      auto op = [&](const CVector& x) -> CVector { return x + lin_Q(bb, zero, dc * x); };
      s.segment(off, M) = gmres_tight(op, rhs, "triangular preconditioner");
    }
  });
  transform_time(*plan.fft, s, 0, L, M, g_conj, false);

  // Phase 2: state half with the coupling moved to the right-hand side.
  CVector r(n);
  for (int l = 0; l < L; ++l) {
    const Eigen::Index off = Eigen::Index(l) * M;
    const CVector zl = s.segment(off, M);
    CVector psi_z;
    if (expl) {
      psi_z = plan.coarse->Psi_P.cast<Complex>() * zl;
    } else {
      psi_z = -lin_P(bb, CVector::Zero(M), zl);
    }
    r.segment(off, M) = v.segment(off, M) - psi_z;
  }
  transform_time(*plan.fft, r, 0, L, M, g, true);
  parallel_for(std::size_t(L), [&](std::size_t l) {
    const Eigen::Index off = Eigen::Index(l) * M;
    const CVector rhs = r.segment(off, M);
    const Complex d = plan.d(Eigen::Index(l));
    if (expl) {
      r.segment(off, M) = solve_half(plan.top[l], zf ? &zf->Z_P : nullptr, rhs);
    } else {
      const CVector zero = CVector::Zero(M);
      auto op = [&](const CVector& x) -> CVector { return x + lin_P(bb, d * x, zero); };
      r.segment(off, M) = gmres_tight(op, rhs, "triangular preconditioner");
    }
  });
  transform_time(*plan.fft, r, 0, L, M, ginv, false);

  CVector out(2 * n);
  out.head(n) = r;
  out.tail(n) = s;
  return out;
}

}  // namespace

numerics::DenseLu<CMatrix> factor_block_explicit(const AffinePropagator& coarse, const ZForm* z, Complex d) {
  if (!z) return numerics::DenseLu<CMatrix>(assemble_block(coarse, d));
  const Eigen::Index M = coarse.dim();
  CMatrix H(2 * M, 2 * M);
  const CMatrix I = CMatrix::Identity(M, M);
  H.topLeftCorner(M, M) = z->Z_P.cast<Complex>() + d * I;
  H.topRightCorner(M, M) = z->c_P * I;
  H.bottomLeftCorner(M, M) = -z->c_Q * I;
  H.bottomRightCorner(M, M) = z->Z_Q.cast<Complex>() + std::conj(d) * I;
  return numerics::DenseLu<CMatrix>(H);
}

CVector solve_block_explicit(const numerics::DenseLu<CMatrix>& lu, const ZForm* z, const CVector& rhs) {
  if (!z) return lu.solve(rhs);
  const Eigen::Index M = z->Z_P.rows();
  if (rhs.size() != 2 * M) throw std::invalid_argument("solve_block_explicit: rhs has wrong length");
  CVector t(2 * M);
  t.head(M) = z->Z_P.cast<Complex>() * rhs.head(M);
  t.tail(M) = z->Z_Q.cast<Complex>() * rhs.tail(M);
  return lu.solve(t);
}

CVector solve_block_blackbox(const BlackBoxPropagator& bb, Complex d, const CVector& rhs) {
  const Eigen::Index M = bb.dim;
  if (rhs.size() != 2 * M) throw std::invalid_argument("solve_block_blackbox: rhs has wrong length");
  auto op = [&](const CVector& v) -> CVector {
    const CVector x = v.head(M);
    const CVector z = v.tail(M);
    CVector out(2 * M);
    out.head(M) = x + lin_P(bb, d * x, -z);
    out.tail(M) = z + lin_Q(bb, -x, std::conj(d) * z);
    return out;
  };
  return gmres_tight(op, rhs, "solve_block_blackbox");
}

PreconditionerPlan build_plan(std::shared_ptr<const AffinePropagator> coarse, int L_hat, Complex alpha,
                              PreconditionerMethod method, SmallSystemMethod small_system) {
  if (!coarse) throw std::invalid_argument("build_plan: null coarse propagator");
  if (L_hat < 1) throw std::invalid_argument("build_plan: L_hat must be >= 1");
  if (alpha == 0.0) throw std::invalid_argument("build_plan: alpha must be non-zero");
  if (method == PreconditionerMethod::General && std::abs(std::abs(alpha) - 1.0) > 1e-12)
    throw std::invalid_argument("build_plan: the general method needs |alpha| = 1");
  if (method == PreconditionerMethod::Triangular && coarse->Psi_Q.norm() != 0.0)
    throw std::invalid_argument("build_plan: the triangular method needs Psi_Q = 0 in the coarse propagator");

  PreconditionerPlan plan;
  plan.alpha = alpha;
  plan.method = method;
  plan.small_system = small_system;
  plan.L_hat = L_hat;
  plan.M = coarse->dim();
  plan.d = alpha_circulant_eigenvalues(L_hat, alpha);
  plan.gamma_diag.resize(L_hat);
  for (int k = 0; k < L_hat; ++k) plan.gamma_diag(k) = std::pow(alpha, double(k) / double(L_hat));
  plan.gamma_diag(0) = 1.0;
  plan.fft = std::make_shared<numerics::FftPlan>(std::size_t(L_hat));
  plan.black_box = black_box_view(coarse, 1);
  plan.coarse = coarse;

  if (small_system == SmallSystemMethod::ExplicitDirect) {
    const ZForm* z = coarse->z_form ? &*coarse->z_form : nullptr;
    plan.z_form_used = z != nullptr;
    if (method == PreconditionerMethod::General) {
      plan.blocks.resize(L_hat);
      parallel_for(std::size_t(L_hat), [&](std::size_t l) {
        plan.blocks[l] = factor_block_explicit(*coarse, z, plan.d(Eigen::Index(l)));
      });
    } else {
      plan.top.resize(L_hat);
      plan.bottom.resize(L_hat);
      parallel_for(std::size_t(L_hat), [&](std::size_t l) {
        const Complex d = plan.d(Eigen::Index(l));
        plan.top[l] = factor_half(coarse->Phi_P, z ? &z->Z_P : nullptr, d);
        plan.bottom[l] = factor_half(coarse->Phi_Q, z ? &z->Z_Q : nullptr, std::conj(d));
      });
    }
  }
  return plan;
}

CVector apply_inverse_complex(const PreconditionerPlan& plan, const CVector& v) {
  if (v.size() != 2 * plan.L_hat * plan.M) throw std::invalid_argument("apply_inverse: vector has wrong length");
  return plan.method == PreconditionerMethod::General ? general_complex(plan, v) : triangular_complex(plan, v);
}

Vector apply_inverse_general(const PreconditionerPlan& plan, const Vector& v) {
  if (plan.method != PreconditionerMethod::General) throw std::invalid_argument("apply_inverse_general: wrong plan");
  if (v.size() != 2 * plan.L_hat * plan.M) throw std::invalid_argument("apply_inverse: vector has wrong length");
  return real_part_checked(general_complex(plan, v.cast<Complex>()));
}

Vector apply_inverse_triangular(const PreconditionerPlan& plan, const Vector& v) {
  if (plan.method != PreconditionerMethod::Triangular)
    throw std::invalid_argument("apply_inverse_triangular: wrong plan");
  if (v.size() != 2 * plan.L_hat * plan.M) throw std::invalid_argument("apply_inverse: vector has wrong length");
  return real_part_checked(triangular_complex(plan, v.cast<Complex>()));
}

Vector apply_inverse(const PreconditionerPlan& plan, const Vector& v) {
  return plan.method == PreconditionerMethod::General ? apply_inverse_general(plan, v)
                                                      : apply_inverse_triangular(plan, v);
}

}  // namespace paraopt
