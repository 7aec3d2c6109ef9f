#pragma once

#include "paraopt/numerics.hpp"
#include "paraopt/propagators.hpp"

#include <memory>
#include <string_view>
#include <vector>

namespace paraopt {

enum class PreconditionerMethod { General, Triangular };
enum class SmallSystemMethod { BlackBoxIterative, ExplicitDirect };

std::string_view to_string(PreconditionerMethod m);
std::string_view to_string(SmallSystemMethod m);
PreconditionerMethod preconditioner_method_from_string(std::string_view name);
SmallSystemMethod small_system_method_from_string(std::string_view name);

/// Default alpha per inversion method.
Complex default_alpha(PreconditionerMethod method);

/// Alpha-circulant approximation P(alpha) of the coarse matching matrix,
/// prepared for repeated inversion. Immutable after build_plan.
struct PreconditionerPlan {
  Complex alpha;
  PreconditionerMethod method = PreconditionerMethod::General;
  SmallSystemMethod small_system = SmallSystemMethod::ExplicitDirect;
  int L_hat = 1;
  Eigen::Index M = 0;
  CVector d;            // eigenvalues of C(alpha)
  CVector gamma_diag;   // alpha^{k / L_hat}, k = 0..L_hat-1

  std::shared_ptr<const AffinePropagator> coarse;
  std::shared_ptr<const numerics::FftPlan> fft;
  BlackBoxPropagator black_box;

  // ExplicitDirect factorizations. General: one 2M system per l (Z-form when
  // the coarse propagator has one). Triangular: top and bottom M-systems.
  std::vector<numerics::DenseLu<CMatrix>> blocks;
  std::vector<numerics::DenseLu<CMatrix>> top;
  std::vector<numerics::DenseLu<CMatrix>> bottom;
  bool z_form_used = false;
};

/// d_l = -alpha^{1/L_hat} exp(2 pi i l / L_hat), l = 0..L_hat-1 (principal root).
CVector alpha_circulant_eigenvalues(int L_hat, Complex alpha);

/// The L_hat x L_hat matrix C(alpha): -1 on the sub-diagonal, -alpha top right.
CMatrix alpha_circulant_matrix(int L_hat, Complex alpha);

PreconditionerPlan build_plan(std::shared_ptr<const AffinePropagator> coarse, int L_hat, Complex alpha,
                              PreconditionerMethod method, SmallSystemMethod small_system);

/// P(alpha)^{-1} v for a real stacked vector [y-part; lambda-part]. Throws if
/// the result carries an imaginary part above 1e-9 of its norm.
Vector apply_inverse(const PreconditionerPlan& plan, const Vector& v);
Vector apply_inverse_general(const PreconditionerPlan& plan, const Vector& v);
Vector apply_inverse_triangular(const PreconditionerPlan& plan, const Vector& v);

/// Complex-valued inverse without the residue check (complex alpha allowed).
CVector apply_inverse_complex(const PreconditionerPlan& plan, const CVector& v);

/// Solves H_l [x; z] = rhs using only evaluations of the coarse propagators.
CVector solve_block_blackbox(const BlackBoxPropagator& bb, Complex d, const CVector& rhs);

/// Factorization of H_l. Uses the transformed single-step form when `z` is given.
numerics::DenseLu<CMatrix> factor_block_explicit(const AffinePropagator& coarse, const ZForm* z, Complex d);
CVector solve_block_explicit(const numerics::DenseLu<CMatrix>& lu, const ZForm* z, const CVector& rhs);

/// H_l = [[I + d Phi_P, Psi_P], [-Psi_Q, I + conj(d) Phi_Q]].
CMatrix assemble_block(const AffinePropagator& coarse, Complex d);

/// Dense P(alpha) for checks on small instances.
CMatrix assemble_preconditioner(const AffinePropagator& coarse, int L_hat, Complex alpha);

}  // namespace paraopt
