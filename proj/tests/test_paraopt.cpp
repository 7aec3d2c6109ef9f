#include "doctest.h"

#include "paraopt/paraopt.hpp"

#include <random>

using namespace paraopt;

namespace {

struct Instance {
  LinearControlProblem problem;
  TimeDecomposition decomp;
  AffinePropagator fine, coarse;
};

Instance heat_instance(ObjectiveKind obj, int n, int L_hat, int J_fine) {
  Instance s;
  s.problem = make_heat_problem(n, 0.05, 2.0, obj);
  const int L = obj == ObjectiveKind::Tracking ? L_hat + 1 : L_hat;
  s.decomp = TimeDecomposition::make(obj, 2.0, L, J_fine, 1);
  s.fine = build_implicit_euler_propagator(s.problem, s.decomp, J_fine);
  s.coarse = build_implicit_euler_propagator(s.problem, s.decomp, 1);
  return s;
}

Vector random_vector(std::mt19937& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

}  // namespace

TEST_SUITE("paraopt") {
  TEST_CASE("paired trajectory stacking round-trips") {
    std::mt19937 rng(1);
    const Vector x = random_vector(rng, 2 * 3 * 4);
    const auto p = PairedTrajectory::from_stacked(x, 3, 4);
    CHECK(p.L_hat() == 3);
    CHECK(p.lam_hat[0] == x.segment(12, 4));
    CHECK(p.stacked() == x);
    CHECK_THROWS_AS(PairedTrajectory::from_stacked(x, 4, 4), std::invalid_argument);
    const auto z = PairedTrajectory::zeros(2, 3);
    CHECK(z.stacked().norm() == 0.0);
  }

  TEST_CASE("matching residual is affine with the assembled Jacobian") {
    std::mt19937 rng(2);
    for (ObjectiveKind obj : {ObjectiveKind::Tracking, ObjectiveKind::TerminalCost}) {
      const auto s = heat_instance(obj, 2, 4, 3);
      const Matrix A = assemble_matching_matrix(s.fine, s.decomp.L_hat);
      const Vector b = assemble_rhs(s.fine, s.problem, s.decomp);
      const Vector x = random_vector(rng, A.cols());
      const Vector f = matching_residual(s.fine, s.problem, s.decomp, x);
      CHECK((f - (A * x - b)).norm() < 1e-10 * (1 + f.norm()));
      CHECK((apply_A(s.fine, s.decomp, x) - A * x).norm() < 1e-12 * (1 + x.norm()));
      const Matrix At = assemble_matching_matrix(s.coarse, s.decomp.L_hat);
      CHECK((apply_A_tilde(s.coarse, s.decomp, x) - At * x).norm() < 1e-12 * (1 + x.norm()));
      const Vector xs = numerics::dense_solve(A, Matrix(b));
      CHECK(matching_residual(s.fine, s.problem, s.decomp, xs).norm() < 1e-9 * (1 + b.norm()));
    }
  }

  TEST_CASE("identical fine and coarse propagators converge in one outer iteration") {
    const auto s = heat_instance(ObjectiveKind::Tracking, 4, 5, 1);
    NewtonConfig cfg;
    cfg.inner.rel_tolerance = 1e-12;
    const auto r = paraopt_solve(s.problem, s.decomp, s.fine, s.fine, cfg);
    CHECK(r.log.converged());
    CHECK(r.log.outer_iterations() == 1);
  }

  TEST_CASE("preconditioned and plain solves reach the discrete optimum") {
    for (ObjectiveKind obj : {ObjectiveKind::Tracking, ObjectiveKind::TerminalCost}) {
      const auto s = heat_instance(obj, 4, 6, 4);
      const Matrix A = assemble_matching_matrix(s.fine, s.decomp.L_hat);
      const Vector xs = numerics::dense_solve(A, Matrix(assemble_rhs(s.fine, s.problem, s.decomp)));
      for (bool pre : {false, true}) {
        NewtonConfig cfg;
        cfg.outer_tolerance = 1e-10;
        if (pre) {
          const auto method = obj == ObjectiveKind::Tracking ? PreconditionerMethod::General : PreconditionerMethod::Triangular;
          cfg.preconditioner = std::make_shared<PreconditionerPlan>(
              build_plan(std::make_shared<const AffinePropagator>(s.coarse), s.decomp.L_hat, default_alpha(method), method,
                         SmallSystemMethod::ExplicitDirect));
        }
        int calls = 0;
        cfg.on_iterate = [&](int, const Vector&) { ++calls; };
        const auto r = paraopt_solve(s.problem, s.decomp, s.fine, s.coarse, cfg);
        CHECK(r.log.converged());
        CHECK(calls == int(r.log.records.size()));
        CHECK(r.log.records.front().iteration == 0);
        CHECK((r.x.stacked() - xs).norm() < 1e-7 * xs.norm());
        // residuals decrease monotonically for this contractive setup
        for (std::size_t k = 1; k < r.log.records.size(); ++k)
          CHECK(r.log.records[k].residual < r.log.records[k - 1].residual);
      }
    }
  }

  TEST_CASE("divergent coarse propagator is reported") {
    // Terminal cost with a discretize-then-optimize coarse step and cheap control.
    const auto prob = make_scalar_problem(16.0, 1e-6, 20.0, ObjectiveKind::TerminalCost, 1.0, 1.0);
    const auto dec = TimeDecomposition::make(ObjectiveKind::TerminalCost, 20.0, 20, 1, 1);
    const auto fine = build_exact_propagator(prob, dec);
    const auto coarse = build_implicit_euler_propagator(prob, dec, 1, IeVariant::FDTO);
    NewtonConfig cfg;
    cfg.inner.rel_tolerance = 1e-12;
    const auto r = paraopt_solve(prob, dec, fine, coarse, cfg);
    CHECK_FALSE(r.log.converged());
    CHECK(r.log.status == SolveStatus::Diverged);
    CHECK_FALSE(r.log.message.empty());
  }

  TEST_CASE("iteration limit") {
    const auto s = heat_instance(ObjectiveKind::TerminalCost, 4, 6, 4);
    NewtonConfig cfg;
    cfg.max_outer = 1;
    cfg.outer_tolerance = 1e-14;
    const auto r = paraopt_solve(s.problem, s.decomp, s.fine, s.coarse, cfg);
    CHECK(r.log.status == SolveStatus::MaxIterations);
    CHECK(r.log.outer_iterations() == 1);
    CHECK(to_string(r.log.status) == "max_iterations");
  }

  TEST_CASE("inconsistent inputs are rejected") {
    const auto s = heat_instance(ObjectiveKind::TerminalCost, 2, 3, 2);
    const auto t = heat_instance(ObjectiveKind::Tracking, 2, 3, 2);
    CHECK_THROWS_AS(paraopt_solve(s.problem, s.decomp, t.fine, s.coarse, {}), std::invalid_argument);
    CHECK_THROWS_AS(matching_residual(s.fine, s.problem, s.decomp, Vector::Zero(3)), std::invalid_argument);
    NewtonConfig bad;
    bad.outer_tolerance = 0;
    CHECK_THROWS_AS(paraopt_solve(s.problem, s.decomp, s.fine, s.coarse, bad), std::invalid_argument);
  }

  TEST_CASE("iteration matrix vanishes when fine equals coarse") {
    const auto s = heat_instance(ObjectiveKind::TerminalCost, 2, 3, 2);
    CHECK(assemble_iteration_matrix(s.coarse, s.coarse, 3).norm() < 1e-12);
    CHECK(numerics::spectral_radius(assemble_iteration_matrix(s.fine, s.coarse, 3)) < 1.0);
  }
}
