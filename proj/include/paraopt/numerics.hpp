#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace paraopt {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

/// Raised when a numerical kernel cannot produce a meaningful result
/// (singular systems, NaN from an operator, non-converging eigensolver).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace numerics {

// ---------------------------------------------------------------------------
// FFT
// ---------------------------------------------------------------------------

/// Unitary discrete Fourier transform with kernel exp(+2 pi i j k / n) / sqrt(n).
///
/// Power-of-two lengths use an iterative radix-2 transform; every other
/// length goes through Bluestein's chirp-z algorithm on a padded power-of-two
/// grid. Twiddles and the chirp are computed once per plan, so a plan should
/// be reused when many transforms of the same length are needed.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  void forward(std::span<Complex> data) const;
  void inverse(std::span<Complex> data) const;

 private:
  // Unnormalized transform with the given exponent sign (+1 or -1).
  void transform(std::span<Complex> data, int sign) const;
  void radix2(std::span<Complex> data, int sign) const;

  std::size_t n_;
  bool pow2_;
  std::size_t padded_ = 0;            // Bluestein grid length
  std::vector<Complex> twiddles_;     // exp(-2 pi i k / m) for the radix-2 length m
  std::vector<Complex> chirp_;        // exp(+i pi k^2 / n), k < n
  std::vector<Complex> chirp_hat_;    // padded conj-chirp spectrum (sign -1 transform)
  std::vector<std::size_t> bitrev_;
};

CVector fft_forward(const CVector& v);
CVector fft_inverse(const CVector& v);

// ---------------------------------------------------------------------------
// Dense linear algebra
// ---------------------------------------------------------------------------

/// Ascending eigenvalues of a symmetric matrix. Throws if K is not symmetric
/// to within 1e-12 * ||K||.
Vector eigenvalues_symmetric(const Matrix& K);

/// Eigen-decomposition of a symmetric matrix: K = V diag(values) V^T.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};
SymmetricEigen eigen_symmetric(const Matrix& K);

CVector eigenvalues_general(const Matrix& A);
CVector eigenvalues_general(const CMatrix& A);

double spectral_radius(const Matrix& A);

bool is_symmetric(const Matrix& K, double rel_tol = 1e-12);

Matrix dense_solve(const Matrix& A, const Matrix& B);
CMatrix dense_solve(const CMatrix& A, const CMatrix& B);

/// LU factorization that refuses matrices singular to working precision.
template <typename MatrixType>
class DenseLu {
 public:
  DenseLu() = default;
  explicit DenseLu(const MatrixType& A) : lu_(A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("DenseLu: matrix is not square");
    const double rc = lu_.rcond();
    if (!(rc > 1e3 * std::numeric_limits<double>::epsilon()))
      throw NumericalError("DenseLu: matrix is singular to working precision");
  }

  template <typename Rhs>
  auto solve(const Rhs& b) const {
    return lu_.solve(b);
  }

  Eigen::Index size() const { return lu_.rows(); }

 private:
  Eigen::PartialPivLU<MatrixType> lu_;
};

// ---------------------------------------------------------------------------
// GMRES
// ---------------------------------------------------------------------------

struct GmresConfig {
  double rel_tolerance = 1e-4;
  int max_iterations = 1000;
  std::optional<int> restart;  // empty: full GMRES

  void validate() const {
    if (!(rel_tolerance > 0.0 && rel_tolerance < 1.0))
      throw std::invalid_argument("GmresConfig: rel_tolerance must lie in (0, 1)");
    if (max_iterations < 1) throw std::invalid_argument("GmresConfig: max_iterations must be >= 1");
    if (restart && *restart < 1) throw std::invalid_argument("GmresConfig: restart must be >= 1");
  }
};

struct GmresReport {
  int iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
  /// Relative residual after each iteration (index 0 is the initial guess).
  std::vector<double> residual_history;
};

template <typename Scalar>
using VectorOf = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using LinearOperator = std::function<VectorOf<Scalar>(const VectorOf<Scalar>&)>;

template <typename Scalar>
struct GmresResult {
  VectorOf<Scalar> x;
  GmresReport report;
};

namespace detail {

template <typename Scalar>
void check_finite(const VectorOf<Scalar>& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string("gmres: non-finite values from ") + what);
}

inline void givens(Complex a, Complex b, double& c, Complex& s) {
  const double na = std::abs(a);
  if (na == 0.0) {
    c = 0.0;
    s = 1.0;
    return;
  }
  const double nb = std::abs(b);
  const double r = std::hypot(na, nb);
  c = na / r;
  s = (a / na) * std::conj(b) / r;
}

}  // namespace detail

/// Right-preconditioned GMRES: solves A x = b through A M^{-1} u = b,
/// x = x0 + M^{-1} u, so the monitored residual is the true one.
///
/// Non-convergence is reported through the returned report; NaN or Inf from
/// either operator throws NumericalError.
template <typename Scalar>
GmresResult<Scalar> gmres(const LinearOperator<Scalar>& apply_A, const VectorOf<Scalar>& b,
                          const VectorOf<Scalar>& x0, const LinearOperator<Scalar>* precond,
                          const GmresConfig& cfg) {
  using Vec = VectorOf<Scalar>;
  cfg.validate();
  const Eigen::Index n = b.size();
  if (x0.size() != n) throw std::invalid_argument("gmres: x0 and b differ in length");

  GmresResult<Scalar> out{x0, {}};
  GmresReport& rep = out.report;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.x.setZero();
    rep.converged = true;
    rep.residual_history.push_back(0.0);
    return out;
  }

  auto residual = [&](const Vec& x) {
    Vec Ax = apply_A(x);
    detail::check_finite<Scalar>(Ax, "operator");
    return Vec(b - Ax);
  };

  Vec r = residual(out.x);
  double rel = r.norm() / bnorm;
  rep.residual_history.push_back(rel);
  rep.final_relative_residual = rel;
  if (rel <= cfg.rel_tolerance) {
    rep.converged = true;
    return out;
  }

  const int cycle_len = cfg.restart ? *cfg.restart : cfg.max_iterations;
  std::vector<Vec> V;
  std::vector<std::vector<Complex>> H;  // Hessenberg columns, rotated in place
  std::vector<double> cs;
  std::vector<Complex> sn;
  std::vector<Complex> g;

  while (rep.iterations < cfg.max_iterations) {
    const int m = std::min(cycle_len, cfg.max_iterations - rep.iterations);
    const double beta = r.norm();
    V.assign(1, r / beta);
    H.clear();
    cs.clear();
    sn.clear();
    g.assign(1, Complex(beta));

    int k = 0;
    bool breakdown = false;
    for (; k < m; ++k) {
      Vec z = precond ? (*precond)(V[k]) : V[k];
      detail::check_finite<Scalar>(z, "preconditioner");
      Vec w = apply_A(z);
      detail::check_finite<Scalar>(w, "operator");
      std::vector<Complex> h(k + 2);
      // Modified Gram-Schmidt.
      for (int i = 0; i <= k; ++i) {
        const Scalar hi = V[i].dot(w);  // conjugates V[i] for complex Scalar
        h[i] = hi;
        w -= hi * V[i];
      }
      const double hnext = w.norm();
      h[k + 1] = hnext;
      for (int i = 0; i < k; ++i) {
        const Complex t = cs[i] * h[i] + sn[i] * h[i + 1];
        h[i + 1] = -std::conj(sn[i]) * h[i] + cs[i] * h[i + 1];
        h[i] = t;
      }
      double c;
      Complex sgiv;
      detail::givens(h[k], h[k + 1], c, sgiv);
      cs.push_back(c);
      sn.push_back(sgiv);
      h[k] = c * h[k] + sgiv * h[k + 1];
      h[k + 1] = 0.0;
      g.push_back(-std::conj(sgiv) * g[k]);
      g[k] = c * g[k];
      H.push_back(std::move(h));

      ++rep.iterations;
      rel = std::abs(g[k + 1]) / bnorm;
      rep.residual_history.push_back(rel);
      if (hnext <= 1e-14 * beta) {
        breakdown = true;
        ++k;
        break;
      }
      if (rel <= cfg.rel_tolerance) {
        ++k;
        break;
      }
      V.push_back(w / hnext);
    }

    // Back substitution on the k x k triangle.
    std::vector<Complex> y(k);
    for (int i = k - 1; i >= 0; --i) {
      Complex acc = g[i];
      for (int j = i + 1; j < k; ++j) acc -= H[j][i] * y[j];
      y[i] = acc / H[i][i];
    }
    Vec u = Vec::Zero(n);
    for (int i = 0; i < k; ++i) {
      if constexpr (std::is_same_v<Scalar, double>) {
        u += y[i].real() * V[i];
      } else {
        u += Scalar(y[i]) * V[i];
      }
    }
    Vec du = precond ? (*precond)(u) : u;
    detail::check_finite<Scalar>(du, "preconditioner");
    out.x += du;

    r = residual(out.x);
    rel = r.norm() / bnorm;
    rep.final_relative_residual = rel;
    if (rel <= cfg.rel_tolerance) {
      rep.converged = true;
      break;
    }
    // A lucky breakdown means the Krylov space is invariant; restarting cannot help.
    if (breakdown) break;
  }
  return out;
}

}  // namespace numerics
}  // namespace paraopt
