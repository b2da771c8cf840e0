// Dense convolution and correlation kernels on Eigen expressions. These are
// the building blocks for the diagonal-constant (Toeplitz) recording matrices
// and their Gram products; everything is exact direct summation so that the
// cross-correlation identity holds to rounding error on noiseless data.
#ifndef CCI_CONVOLUTION_HPP_
#define CCI_CONVOLUTION_HPP_

#include <Eigen/Dense>

#include "cci/errors.hpp"

namespace cci {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

// Full discrete convolution: out has length a.size() + b.size() - 1,
// out(i) = sum_j a(j) * b(i - j). Zero taps of the shorter operand are
// skipped, which makes products with sparse impulse responses cheap.
template <typename DerivedA, typename DerivedB>
VectorX<typename DerivedA::Scalar> conv_full(const Eigen::MatrixBase<DerivedA>& a,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index na = a.size();
  const Eigen::Index nb = b.size();
  if (na == 0 || nb == 0)
    throw_error(ErrorCode::invalid_argument, "conv_full: empty operand");
  VectorX<Scalar> out = VectorX<Scalar>::Zero(na + nb - 1);
  if (nb <= na) {
    for (Eigen::Index j = 0; j < nb; ++j) {
      const Scalar bj = b(j);
      if (bj != Scalar(0)) out.segment(j, na) += bj * a;
    }
  } else {
    for (Eigen::Index j = 0; j < na; ++j) {
      const Scalar aj = a(j);
      if (aj != Scalar(0)) out.segment(j, nb) += aj * b;
    }
  }
  return out;
}

// Cross-correlation c(d) = sum_t a(t) * b(t + d) for d in [-max_lag, max_lag],
// packed as out(d + max_lag). Out-of-range samples count as zero.
template <typename DerivedA, typename DerivedB>
VectorX<typename DerivedA::Scalar> xcorr(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b,
                                         Eigen::Index max_lag) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index na = a.size();
  const Eigen::Index nb = b.size();
  VectorX<Scalar> out = VectorX<Scalar>::Zero(2 * max_lag + 1);
  for (Eigen::Index d = -max_lag; d <= max_lag; ++d) {
    // overlap of t in [0, na) with t + d in [0, nb)
    const Eigen::Index t0 = std::max<Eigen::Index>(0, -d);
    const Eigen::Index t1 = std::min(na, nb - d);
    if (t1 > t0)
      out(d + max_lag) = a.segment(t0, t1 - t0).dot(b.segment(t0 + d, t1 - t0));
  }
  return out;
}

// Gram block Ya^T * Yb of two full-convolution recording matrices built from
// recordings ya, yb with common channel length L. The full-row Gram is
// Toeplitz with entry (p, q) = xcorr(ya, yb)(p - q).
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> gram_block_full(const Eigen::MatrixBase<DerivedA>& ya,
                                                   const Eigen::MatrixBase<DerivedB>& yb,
                                                   Eigen::Index channel_len) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index L = channel_len;
  VectorX<Scalar> c = xcorr(ya, yb, L - 1);
  MatrixX<Scalar> g(L, L);
  for (Eigen::Index p = 0; p < L; ++p)
    for (Eigen::Index q = 0; q < L; ++q) g(p, q) = c(p - q + L - 1);
  return g;
}

// Gram block restricted to the interior rows i in [L-1, K-1] of the
// convolution matrices (rows whose taps never spill past the recording
// boundary). Not Toeplitz; filled along diagonals with rolling updates.
// Entry (p, q) = sum_{i=L-1}^{K-1} ya(i - p) * yb(i - q).
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> gram_block_valid(const Eigen::MatrixBase<DerivedA>& ya,
                                                    const Eigen::MatrixBase<DerivedB>& yb,
                                                    Eigen::Index channel_len) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index L = channel_len;
  const Eigen::Index K = ya.size();
  if (yb.size() != K)
    throw_error(ErrorCode::invalid_argument, "gram_block_valid: recording lengths differ");
  if (K < L)
    throw_error(ErrorCode::invalid_argument, "gram_block_valid: recording shorter than channel");
  const Eigen::Index M = K - L + 1;  // number of interior rows
  MatrixX<Scalar> g(L, L);
  // Seed the first row and first column, then walk each diagonal:
  // entry(p+1, q+1) = entry(p, q) - ya(K-1-p) yb(K-1-q) + ya(L-2-p) yb(L-2-q).
  for (Eigen::Index q = 0; q < L; ++q)
    g(0, q) = ya.segment(L - 1, M).dot(yb.segment(L - 1 - q, M));
  for (Eigen::Index p = 1; p < L; ++p)
    g(p, 0) = ya.segment(L - 1 - p, M).dot(yb.segment(L - 1, M));
  for (Eigen::Index p = 0; p + 1 < L; ++p) {
    for (Eigen::Index q = 0; q + 1 < L; ++q) {
      Scalar v = g(p, q) - ya(K - 1 - p) * yb(K - 1 - q);
      if (L - 2 - p >= 0 && L - 2 - q >= 0) v += ya(L - 2 - p) * yb(L - 2 - q);
      g(p + 1, q + 1) = v;
    }
  }
  return g;
}

// Adjoint product Y^T r for the full-convolution matrix built from y:
// (Y^T r)(p) = sum_t y(t) * r(t + p).
template <typename DerivedY, typename DerivedR>
VectorX<typename DerivedY::Scalar> toeplitz_adjoint_apply(const Eigen::MatrixBase<DerivedY>& y,
                                                          const Eigen::MatrixBase<DerivedR>& r,
                                                          Eigen::Index channel_len) {
  using Scalar = typename DerivedY::Scalar;
  const Eigen::Index K = y.size();
  const Eigen::Index L = channel_len;
  if (r.size() != K + L - 1)
    throw_error(ErrorCode::invalid_argument, "toeplitz_adjoint_apply: residual length mismatch");
  VectorX<Scalar> out(L);
  for (Eigen::Index p = 0; p < L; ++p) out(p) = y.dot(r.segment(p, K));
  return out;
}

}  // namespace cci

#endif  // CCI_CONVOLUTION_HPP_
