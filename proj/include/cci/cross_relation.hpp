// The cross-relation system: diagonal-constant recording matrices Y_n, the
// stacked pairwise operator A with block rows [.. Y_n at slot m .. -Y_m at
// slot n ..], and its Gram (normal) matrix A^T A.
#ifndef CCI_CROSS_RELATION_HPP_
#define CCI_CROSS_RELATION_HPP_

#include <utility>
#include <vector>

#include "cci/convolution.hpp"
#include "cci/types.hpp"

namespace cci {

// Full-convolution Toeplitz matrix of a recording: (K + L - 1) x L with
// entry(i, j) = y(i - j) for 0 <= i - j < K and 0 elsewhere, so that
// apply(h) == conv_full(y, h) exactly.
class ConvMatrix {
 public:
  ConvMatrix(Eigen::VectorXd y, Eigen::Index channel_len);

  Eigen::Index rows() const { return y_.size() + channel_len_ - 1; }
  Eigen::Index cols() const { return channel_len_; }
  const Eigen::VectorXd& generator() const { return y_; }

  double entry(Eigen::Index i, Eigen::Index j) const;
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& h) const;
  Eigen::VectorXd adjoint_apply(const Eigen::Ref<const Eigen::VectorXd>& r) const;
  Eigen::MatrixXd dense() const;

 private:
  Eigen::VectorXd y_;
  Eigen::Index channel_len_;
};

ConvMatrix build_conv_matrix(const Eigen::Ref<const Eigen::VectorXd>& y,
                             Eigen::Index channel_len);

// Which rows of each pairwise block participate: all K + L - 1 rows of the
// full convolution, or only the K - L + 1 interior rows (used by the
// cross-validation folds, where recordings are cut into segments and the
// boundary rows of a segment do not obey the cross-relation identity).
enum class RowSpan { Full, Interior };

class CrossRelationSystem {
 public:
  CrossRelationSystem(const ObservationSet& obs, Eigen::Index channel_len,
                      RowSpan span = RowSpan::Full);

  Eigen::Index n_mics() const { return static_cast<Eigen::Index>(matrices_.size()); }
  Eigen::Index channel_len() const { return channel_len_; }
  Eigen::Index stacked_dim() const { return n_mics() * channel_len_; }
  Eigen::Index rows_per_pair() const;
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }

  // A h for the stacked h = [h_1; ...; h_N]; block (m, n) holds
  // Y_n h_m - Y_m h_n.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& stacked) const;
  // A^T r for a stacked residual.
  Eigen::VectorXd adjoint_apply(const Eigen::Ref<const Eigen::VectorXd>& residual) const;
  // ||A h||^2 without materializing anything.
  double quadratic(const Eigen::Ref<const Eigen::VectorXd>& stacked) const;

  // A^T A, symmetric positive semidefinite of size NL x NL, assembled from
  // recording correlations.
  Eigen::MatrixXd normal_matrix() const;

  // trace(A^T A) / (NL): the scale used for eigenvalue thresholds and the
  // ADMM step heuristic; available without materializing the matrix.
  double mean_diagonal() const;

 private:
  std::vector<ConvMatrix> matrices_;
  std::vector<std::pair<int, int>> pairs_;
  Eigen::Index channel_len_;
  Eigen::Index rec_len_;
  RowSpan span_;
};

// Sum over unordered pairs m < n of ||conv(y_n, h_m) - conv(y_m, h_n)||^2,
// evaluated directly by convolution (independent of the Gram assembly).
double cross_residual(const ObservationSet& obs, const AirSet& airs);

Eigen::MatrixXd assemble_normal_matrix(const ObservationSet& obs,
                                       Eigen::Index channel_len);

}  // namespace cci

#endif  // CCI_CROSS_RELATION_HPP_
