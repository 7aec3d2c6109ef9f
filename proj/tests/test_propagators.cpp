#include "doctest.h"

#include "paraopt/propagators.hpp"
#include "support/oracles.hpp"

#include <numbers>
#include <random>

using namespace paraopt;

namespace {

oracle::Scheme scheme_of(ObjectiveKind obj, IeVariant v) {
  if (obj == ObjectiveKind::Tracking) return oracle::Scheme::TrackingFotd;
  return v == IeVariant::FOTD ? oracle::Scheme::TerminalFotd : oracle::Scheme::TerminalFdto;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("propagators") {
  TEST_CASE("scalar implicit-Euler propagators match the brute-force oracle") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> lu(-3, 2);
    std::uniform_int_distribution<int> Jd(1, 8);
    struct Combo {
      ObjectiveKind obj;
      IeVariant v;
    };
    for (Combo c : {Combo{ObjectiveKind::Tracking, IeVariant::FOTD}, Combo{ObjectiveKind::TerminalCost, IeVariant::FOTD},
                    Combo{ObjectiveKind::TerminalCost, IeVariant::FDTO}}) {
      for (int trial = 0; trial < 20; ++trial) {
        const double sigma = std::pow(10.0, lu(rng));
        const double gamma = std::pow(10.0, lu(rng));
        const double T = std::pow(10.0, lu(rng) / 2);
        const double data = 0.7;
        const int J = Jd(rng);
        const auto prob = make_scalar_problem(sigma, gamma, T, c.obj, 1.0, data);
        const auto dec = TimeDecomposition::make(c.obj, T, 3, J, 1);
        const auto p = build_implicit_euler_propagator(prob, dec, J, c.v);
        const double tau = dec.DT / J;
        const std::vector<oracle::ld> yd(J, data);
        const auto m = oracle::scalar_ie_maps(scheme_of(c.obj, c.v), sigma, gamma_hat(c.obj, gamma, tau), tau, J,
                                              c.obj == ObjectiveKind::Tracking ? &yd : nullptr);
        CAPTURE(sigma);
        CAPTURE(gamma);
        CAPTURE(J);
        CHECK(rel(p.Phi_P(0, 0), double(m.phiP)) < 1e-12);
        CHECK(rel(p.Psi_P(0, 0), double(m.psiP)) < 1e-12);
        CHECK(rel(p.Phi_Q(0, 0), double(m.phiQ)) < 1e-12);
        CHECK(rel(p.Psi_Q(0, 0), double(m.psiQ)) < 1e-12);
        for (int l = 0; l < 3; ++l) {
          CHECK(rel(p.b_P[l](0), double(m.bP)) < 1e-12);
          CHECK(rel(p.b_Q[l](0), double(m.bQ)) < 1e-12);
        }
        CHECK_NOTHROW(p.validate());
      }
    }
  }

  TEST_CASE("heat tracking offsets follow the time-dependent target") {
    const int n = 4;
    const double gamma = 0.05, T = 2.0;
    const int L = 5, J = 3;
    const auto prob = make_heat_problem(n, gamma, T, ObjectiveKind::Tracking);
    const auto dec = TimeDecomposition::make(ObjectiveKind::Tracking, T, L, J, 1);
    const auto p = build_implicit_euler_propagator(prob, dec, J);
    // The target is a multiple of one Fourier mode, an eigenvector of K.
    const Vector shape = *prob.y_target;
    const double s = std::sin(std::numbers::pi / n);
    const double sigma = 8.0 * n * n * s * s;
    CHECK((prob.K * shape - sigma * shape).norm() < 1e-10 * shape.norm());
    const double tau = dec.DT / J;
    const double c = gamma_hat(ObjectiveKind::Tracking, gamma, tau);
    const int k = 1 + n * 1;
    for (int l = 1; l <= L; ++l) {
      std::vector<oracle::ld> yd(J);
      for (int j = 1; j <= J; ++j) yd[j - 1] = prob.y_d((l - 1) * dec.DT + (j - 1) * tau)(k) / shape(k);
      const auto m = oracle::scalar_ie_maps(oracle::Scheme::TrackingFotd, sigma, c, tau, J, &yd);
      CHECK((p.b_P[l - 1] - double(m.bP) * shape).norm() < 1e-9 * (1 + std::abs(double(m.bP))));
      CHECK((p.b_Q[l - 1] - double(m.bQ) * shape).norm() < 1e-9 * (1 + std::abs(double(m.bQ))));
    }
  }

  TEST_CASE("heat propagator blocks are diagonal in the eigenbasis of K") {
    const auto prob = make_heat_problem(4, 0.3, 1.0, ObjectiveKind::TerminalCost);
    const auto dec = TimeDecomposition::make(ObjectiveKind::TerminalCost, 1.0, 4, 3, 1);
    const auto eig = numerics::eigen_symmetric(prob.K);
    for (IeVariant v : {IeVariant::FOTD, IeVariant::FDTO}) {
      const auto p = build_implicit_euler_propagator(prob, dec, 3, v);
      const Matrix D = eig.vectors.transpose() * p.Psi_P * eig.vectors;
      const double tau = dec.DT / 3;
      for (int i = 0; i < D.rows(); ++i) {
        const auto m = oracle::scalar_ie_maps(scheme_of(ObjectiveKind::TerminalCost, v), eig.values(i),
                                              gamma_hat(ObjectiveKind::TerminalCost, 0.3, tau), tau, 3);
        CHECK(rel(D(i, i), double(m.psiP)) < 1e-11);
      }
      CHECK((D - Matrix(D.diagonal().asDiagonal())).norm() < 1e-11);
      CHECK(p.Psi_Q.norm() == 0.0);
    }
  }

  TEST_CASE("exact scalar propagators match the matrix exponential") {
    for (ObjectiveKind obj : {ObjectiveKind::Tracking, ObjectiveKind::TerminalCost}) {
      for (double sigma : {0.0, 1e-3, 0.7, 16.0}) {
        for (double gamma : {1e-2, 1.0, 50.0}) {
          const double T = 1.5;
          const auto prob = make_scalar_problem(sigma, gamma, T, obj, 1.0, 1.0);
          const auto dec = TimeDecomposition::make(obj, T, 3, 1, 1);
          const auto p = build_exact_propagator(prob, dec);
          const auto h = hatted(obj, gamma, sigma, dec.DT);
          const auto m = oracle::scalar_exact_maps(obj == ObjectiveKind::Tracking, h.sigma_hat, h.gamma_hat);
          CAPTURE(sigma);
          CAPTURE(gamma);
          CHECK(rel(p.Phi_P(0, 0), double(m.phiP)) < 1e-12);
          CHECK(rel(p.Phi_Q(0, 0), double(m.phiQ)) < 1e-12);
          CHECK(rel(p.Psi_P(0, 0), double(m.psiP)) < 1e-12);
          CHECK(rel(p.Psi_Q(0, 0), double(m.psiQ)) < 1e-12);
        }
      }
    }
  }

  TEST_CASE("exact tracking offsets are the fine-step limit of implicit Euler") {
    const double sigma = 2.0, gamma = 0.5, T = 1.0, data = 1.3;
    const auto prob = make_scalar_problem(sigma, gamma, T, ObjectiveKind::Tracking, 1.0, data);
    const auto dec = TimeDecomposition::make(ObjectiveKind::Tracking, T, 2, 1, 1);
    const auto ex = build_exact_propagator(prob, dec);
    double prev = 0.0;
    for (int J : {200, 400, 800}) {
      const auto ie = build_implicit_euler_propagator(prob, dec, J);
      const double err = std::abs(ie.b_P[0](0) - ex.b_P[0](0)) + std::abs(ie.b_Q[0](0) - ex.b_Q[0](0));
      CHECK(err < 5.0 / J);
      if (prev > 0) CHECK(err / prev == doctest::Approx(0.5).epsilon(0.05));
      prev = err;
    }
  }

  TEST_CASE("exact propagator preconditions") {
    const auto ad = make_advection_diffusion_problem(4, 0.05, 2.0, ObjectiveKind::TerminalCost);
    CHECK_THROWS_AS(build_exact_propagator(ad, TimeDecomposition::make(ObjectiveKind::TerminalCost, 2.0, 4, 1, 1)),
                    std::invalid_argument);
    const auto heat = make_heat_problem(4, 0.05, 2.0, ObjectiveKind::Tracking);
    CHECK_THROWS_AS(build_exact_propagator(heat, TimeDecomposition::make(ObjectiveKind::Tracking, 2.0, 4, 1, 1)),
                    std::invalid_argument);
    const auto heat_tc = make_heat_problem(4, 0.05, 2.0, ObjectiveKind::TerminalCost);
    CHECK_NOTHROW(build_exact_propagator(heat_tc, TimeDecomposition::make(ObjectiveKind::TerminalCost, 2.0, 4, 1, 1)));
  }

  TEST_CASE("tracking rejects the discretize-then-optimize variant") {
    const auto prob = make_scalar_problem(1, 1, 1, ObjectiveKind::Tracking, 1, 1);
    const auto dec = TimeDecomposition::make(ObjectiveKind::Tracking, 1, 2, 1, 1);
    CHECK_THROWS_AS(build_implicit_euler_propagator(prob, dec, 1, IeVariant::FDTO), std::invalid_argument);
    CHECK_THROWS_AS(SubintervalSystem(prob.K, 1.0, ObjectiveKind::Tracking, IeVariant::FDTO, 0.5, 2),
                    std::invalid_argument);
  }

  TEST_CASE("single-step propagators carry their Z form") {
    const auto prob = make_heat_problem(4, 0.05, 2.0, ObjectiveKind::Tracking);
    const auto dec = TimeDecomposition::make(ObjectiveKind::Tracking, 2.0, 5, 10, 1);
    const auto p1 = build_implicit_euler_propagator(prob, dec, 1);
    REQUIRE(p1.z_form.has_value());
    const Matrix Zi = p1.z_form->Z_P.inverse();
    CHECK((Zi - p1.Phi_P).norm() < 1e-12);
    CHECK((p1.z_form->c_P * Zi - p1.Psi_P).norm() < 1e-12);
    CHECK(p1.z_form->c_Q == doctest::Approx(p1.z_form->c_P));
    CHECK_FALSE(build_implicit_euler_propagator(prob, dec, 10).z_form.has_value());
  }

  TEST_CASE("propagate and the black-box view agree with the affine form") {
    const auto prob = make_heat_problem(4, 0.05, 2.0, ObjectiveKind::Tracking);
    const auto dec = TimeDecomposition::make(ObjectiveKind::Tracking, 2.0, 5, 2, 1);
    const auto p = std::make_shared<const AffinePropagator>(build_implicit_euler_propagator(prob, dec, 2));
    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    Vector y(16), lam(16);
    for (int i = 0; i < 16; ++i) y(i) = nd(rng), lam(i) = nd(rng);
    const auto [P, Q] = propagate(*p, 3, y, lam);
    CHECK((P - (p->Phi_P * y - p->Psi_P * lam + p->b_P[2])).norm() < 1e-12);
    CHECK((Q - (p->Psi_Q * y + p->Phi_Q * lam + p->b_Q[2])).norm() < 1e-12);
    CHECK_THROWS_AS(propagate(*p, 0, y, lam), std::out_of_range);
    CHECK_THROWS_AS(propagate(*p, 6, y, lam), std::out_of_range);

    const auto bb = black_box_view(p, 3);
    CHECK(bb.dim == 16);
    CHECK((bb.P(y, lam) - P).norm() < 1e-12);
    CHECK((bb.Q(y, lam) - Q).norm() < 1e-12);
    CHECK((bb.P00 - p->b_P[2]).norm() < 1e-14);
    CHECK((bb.Q00 - p->b_Q[2]).norm() < 1e-14);
  }

  TEST_CASE("validate catches structural problems") {
    const auto prob = make_scalar_problem(1, 1, 1, ObjectiveKind::TerminalCost, 1, 1);
    const auto dec = TimeDecomposition::make(ObjectiveKind::TerminalCost, 1, 2, 1, 1);
    auto p = build_implicit_euler_propagator(prob, dec, 1);
    CHECK_NOTHROW(p.validate());
    p.Psi_Q(0, 0) = 0.1;
    CHECK_THROWS(p.validate());
    p.Psi_Q(0, 0) = 0.0;
    p.b_Q.pop_back();
    CHECK_THROWS(p.validate());
  }
}
