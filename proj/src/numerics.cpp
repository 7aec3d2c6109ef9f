#include "paraopt/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numbers>

namespace paraopt::numerics {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(is_pow2(n)) {
  if (n == 0) throw std::invalid_argument("FftPlan: length must be >= 1");
  const std::size_t m = pow2_ ? n : next_pow2(2 * n - 1);
  padded_ = pow2_ ? 0 : m;

  twiddles_.resize(m / 2);
  for (std::size_t k = 0; k < m / 2; ++k)
    twiddles_[k] = std::polar(1.0, -2.0 * std::numbers::pi * double(k) / double(m));

  bitrev_.resize(m);
  std::size_t bits = 0;
  while ((std::size_t(1) << bits) < m) ++bits;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b)
      if (i & (std::size_t(1) << b)) r |= std::size_t(1) << (bits - 1 - b);
    bitrev_[i] = r;
  }

  if (!pow2_) {
    chirp_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      // k^2 mod 2n keeps the phase argument small.
      const std::size_t k2 = (k * k) % (2 * n);
      chirp_[k] = std::polar(1.0, std::numbers::pi * double(k2) / double(n));
    }
    // Convolution kernel for the +1 transform is conj(chirp); store its spectrum.
    std::vector<Complex> kernel(m, Complex(0.0));
    kernel[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < n; ++k) kernel[k] = kernel[m - k] = std::conj(chirp_[k]);
    radix2(kernel, -1);
    chirp_hat_ = std::move(kernel);
  }
}

void FftPlan::radix2(std::span<Complex> a, int sign) const {
  const std::size_t m = a.size();
  for (std::size_t i = 0; i < m; ++i)
    if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
  for (std::size_t len = 2; len <= m; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = m / len;
    for (std::size_t start = 0; start < m; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        Complex w = twiddles_[j * stride];
        if (sign > 0) w = std::conj(w);
        const Complex u = a[start + j];
        const Complex t = w * a[start + j + half];
        a[start + j] = u + t;
        a[start + j + half] = u - t;
      }
    }
  }
}

void FftPlan::transform(std::span<Complex> data, int sign) const {
  if (data.size() != n_) throw std::invalid_argument("FftPlan: data length does not match plan");
  if (n_ == 1) return;
  if (pow2_) {
    radix2(data, sign);
    return;
  }
  // Bluestein: X_k = a_k sum_j (x_j a_j) conj(a_{k-j}) with a_k = exp(sign i pi k^2 / n).
  const std::size_t m = padded_;
  std::vector<Complex> buf(m, Complex(0.0));
  for (std::size_t j = 0; j < n_; ++j) {
    const Complex a = sign > 0 ? chirp_[j] : std::conj(chirp_[j]);
    buf[j] = data[j] * a;
  }
  radix2(buf, -1);
  if (sign > 0) {
    for (std::size_t k = 0; k < m; ++k) buf[k] *= chirp_hat_[k];
  } else {
    // The -1 kernel is the conjugate of the +1 kernel; its spectrum under the
    // -1 transform is conj(chirp_hat_) at the mirrored frequency.
    for (std::size_t k = 0; k < m; ++k) buf[k] *= std::conj(chirp_hat_[(m - k) % m]);
  }
  radix2(buf, +1);
  const double inv_m = 1.0 / double(m);
  for (std::size_t k = 0; k < n_; ++k) {
    const Complex a = sign > 0 ? chirp_[k] : std::conj(chirp_[k]);
    data[k] = buf[k] * inv_m * a;
  }
}

void FftPlan::forward(std::span<Complex> data) const {
  transform(data, +1);
  const double s = 1.0 / std::sqrt(double(n_));
  for (auto& x : data) x *= s;
}

void FftPlan::inverse(std::span<Complex> data) const {
  transform(data, -1);
  const double s = 1.0 / std::sqrt(double(n_));
  for (auto& x : data) x *= s;
}

CVector fft_forward(const CVector& v) {
  CVector out = v;
  FftPlan(std::size_t(v.size())).forward(std::span<Complex>(out.data(), std::size_t(out.size())));
  return out;
}

CVector fft_inverse(const CVector& v) {
  CVector out = v;
  FftPlan(std::size_t(v.size())).inverse(std::span<Complex>(out.data(), std::size_t(out.size())));
  return out;
}

bool is_symmetric(const Matrix& K, double rel_tol) {
  if (K.rows() != K.cols()) return false;
  const double scale = K.norm();
  return (K - K.transpose()).norm() <= rel_tol * std::max(scale, 1e-300);
}

SymmetricEigen eigen_symmetric(const Matrix& K) {
  if (!is_symmetric(K)) throw std::invalid_argument("eigen_symmetric: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(K);
  if (es.info() != Eigen::Success) throw NumericalError("eigen_symmetric: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

Vector eigenvalues_symmetric(const Matrix& K) {
  if (!is_symmetric(K)) throw std::invalid_argument("eigenvalues_symmetric: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalues_symmetric: eigensolver did not converge");
  return es.eigenvalues();
}

CVector eigenvalues_general(const Matrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("eigenvalues_general: matrix is not square");
  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalues_general: eigensolver did not converge");
  return es.eigenvalues();
}

CVector eigenvalues_general(const CMatrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("eigenvalues_general: matrix is not square");
  Eigen::ComplexEigenSolver<CMatrix> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalues_general: eigensolver did not converge");
  return es.eigenvalues();
}

double spectral_radius(const Matrix& A) {
  const CVector ev = eigenvalues_general(A);
  return ev.size() == 0 ? 0.0 : ev.cwiseAbs().maxCoeff();
}

Matrix dense_solve(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows()) throw std::invalid_argument("dense_solve: dimension mismatch");
  return DenseLu<Matrix>(A).solve(B);
}

CMatrix dense_solve(const CMatrix& A, const CMatrix& B) {
  if (A.rows() != B.rows()) throw std::invalid_argument("dense_solve: dimension mismatch");
  return DenseLu<CMatrix>(A).solve(B);
}

}  // namespace paraopt::numerics
