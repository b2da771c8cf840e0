#include "cci/cross_relation.hpp"

#include <string>

namespace cci {

ConvMatrix::ConvMatrix(Eigen::VectorXd y, Eigen::Index channel_len)
    : y_(std::move(y)), channel_len_(channel_len) {
  if (channel_len_ < 1)
    throw_error(ErrorCode::invalid_argument, "channel length must be >= 1");
  if (y_.size() < channel_len_)
    throw_error(ErrorCode::invalid_argument,
                "recording shorter than channel length; system underdetermined");
}

double ConvMatrix::entry(Eigen::Index i, Eigen::Index j) const {
  const Eigen::Index d = i - j;
  return (d >= 0 && d < y_.size()) ? y_(d) : 0.0;
}

Eigen::VectorXd ConvMatrix::apply(const Eigen::Ref<const Eigen::VectorXd>& h) const {
  if (h.size() != channel_len_)
    throw_error(ErrorCode::invalid_argument, "channel vector has wrong length");
  return conv_full(y_, h);
}

Eigen::VectorXd ConvMatrix::adjoint_apply(const Eigen::Ref<const Eigen::VectorXd>& r) const {
  return toeplitz_adjoint_apply(y_, r, channel_len_);
}

Eigen::MatrixXd ConvMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows(), cols());
  for (Eigen::Index j = 0; j < cols(); ++j) m.col(j).segment(j, y_.size()) = y_;
  return m;
}

ConvMatrix build_conv_matrix(const Eigen::Ref<const Eigen::VectorXd>& y,
                             Eigen::Index channel_len) {
  return ConvMatrix(y, channel_len);
}

CrossRelationSystem::CrossRelationSystem(const ObservationSet& obs,
                                         Eigen::Index channel_len, RowSpan span)
    : channel_len_(channel_len), rec_len_(obs.length()), span_(span) {
  const Eigen::Index N = obs.n_mics();
  if (N < 2)
    throw_error(ErrorCode::invalid_argument, "cross-relation needs at least 2 microphones");
  matrices_.reserve(static_cast<std::size_t>(N));
  for (Eigen::Index n = 0; n < N; ++n)
    matrices_.emplace_back(obs.recordings.col(n), channel_len);
  for (int m = 0; m < N; ++m)
    for (int n = m + 1; n < N; ++n) pairs_.emplace_back(m, n);
}

Eigen::Index CrossRelationSystem::rows_per_pair() const {
  return span_ == RowSpan::Full ? rec_len_ + channel_len_ - 1
                                : rec_len_ - channel_len_ + 1;
}

Eigen::VectorXd CrossRelationSystem::apply(
    const Eigen::Ref<const Eigen::VectorXd>& stacked) const {
  if (stacked.size() != stacked_dim())
    throw_error(ErrorCode::invalid_argument, "stacked vector has wrong length");
  const Eigen::Index L = channel_len_;
  const Eigen::Index rows = rows_per_pair();
  Eigen::VectorXd out(static_cast<Eigen::Index>(pairs_.size()) * rows);
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto [m, n] = pairs_[p];
    Eigen::VectorXd full = matrices_[n].apply(stacked.segment(m * L, L)) -
                           matrices_[m].apply(stacked.segment(n * L, L));
    if (span_ == RowSpan::Full)
      out.segment(static_cast<Eigen::Index>(p) * rows, rows) = full;
    else
      out.segment(static_cast<Eigen::Index>(p) * rows, rows) = full.segment(L - 1, rows);
  }
  return out;
}

Eigen::VectorXd CrossRelationSystem::adjoint_apply(
    const Eigen::Ref<const Eigen::VectorXd>& residual) const {
  const Eigen::Index L = channel_len_;
  const Eigen::Index rows = rows_per_pair();
  if (residual.size() != static_cast<Eigen::Index>(pairs_.size()) * rows)
    throw_error(ErrorCode::invalid_argument, "residual vector has wrong length");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(stacked_dim());
  const Eigen::Index full_rows = rec_len_ + channel_len_ - 1;
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto [m, n] = pairs_[p];
    Eigen::VectorXd r;
    if (span_ == RowSpan::Full) {
      r = residual.segment(static_cast<Eigen::Index>(p) * rows, rows);
    } else {
      r = Eigen::VectorXd::Zero(full_rows);
      r.segment(L - 1, rows) = residual.segment(static_cast<Eigen::Index>(p) * rows, rows);
    }
    out.segment(m * L, L) += matrices_[n].adjoint_apply(r);
    out.segment(n * L, L) -= matrices_[m].adjoint_apply(r);
  }
  return out;
}

double CrossRelationSystem::quadratic(
    const Eigen::Ref<const Eigen::VectorXd>& stacked) const {
  return apply(stacked).squaredNorm();
}

Eigen::MatrixXd CrossRelationSystem::normal_matrix() const {
  const Eigen::Index N = n_mics();
  const Eigen::Index L = channel_len_;
  const auto gram = [&](Eigen::Index a, Eigen::Index b) {
    const auto& ya = matrices_[a].generator();
    const auto& yb = matrices_[b].generator();
    return span_ == RowSpan::Full ? gram_block_full(ya, yb, L)
                                  : gram_block_valid(ya, yb, L);
  };

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N * L, N * L);
  // Diagonal block i sums Y_j^T Y_j over all partners j != i.
  Eigen::MatrixXd auto_sum = Eigen::MatrixXd::Zero(L, L);
  std::vector<Eigen::MatrixXd> autos(static_cast<std::size_t>(N));
  for (Eigen::Index j = 0; j < N; ++j) {
    autos[static_cast<std::size_t>(j)] = gram(j, j);
    auto_sum += autos[static_cast<std::size_t>(j)];
  }
  for (Eigen::Index i = 0; i < N; ++i)
    G.block(i * L, i * L, L, L) = auto_sum - autos[static_cast<std::size_t>(i)];
  for (const auto& [m, n] : pairs_) {
    const Eigen::MatrixXd cross = gram(n, m);  // Y_n^T Y_m
    G.block(m * L, n * L, L, L) = -cross;
    G.block(n * L, m * L, L, L) = -cross.transpose();
  }
  // Symmetrize away rounding asymmetry from the rolling-window assembly.
  G = ((G + G.transpose()) * 0.5).eval();
  return G;
}

double CrossRelationSystem::mean_diagonal() const {
  const Eigen::Index N = n_mics();
  double total_energy = 0.0;
  Eigen::VectorXd energies(N);
  for (Eigen::Index j = 0; j < N; ++j) {
    const auto& y = matrices_[j].generator();
    double e;
    if (span_ == RowSpan::Full) {
      e = y.squaredNorm();
    } else {
      // Interior rows use a sliding window of K - L + 1 samples per column;
      // average the diagonal of the interior Gram analytically is overkill,
      // so use the first diagonal entry's window as the representative scale.
      const Eigen::Index M = rec_len_ - channel_len_ + 1;
      e = y.segment(channel_len_ - 1, M).squaredNorm();
    }
    energies(j) = e;
    total_energy += e;
  }
  double trace = 0.0;
  for (Eigen::Index i = 0; i < N; ++i)
    trace += static_cast<double>(channel_len_) * (total_energy - energies(i));
  return trace / static_cast<double>(stacked_dim());
}

double cross_residual(const ObservationSet& obs, const AirSet& airs) {
  if (obs.n_mics() != airs.n_mics())
    throw_error(ErrorCode::invalid_argument, "observation/AIR channel count mismatch");
  if (obs.n_mics() < 2)
    throw_error(ErrorCode::invalid_argument, "need at least 2 channels");
  double total = 0.0;
  for (Eigen::Index m = 0; m < obs.n_mics(); ++m)
    for (Eigen::Index n = m + 1; n < obs.n_mics(); ++n)
      total += (conv_full(obs.recordings.col(n), airs.channels.col(m)) -
                conv_full(obs.recordings.col(m), airs.channels.col(n)))
                   .squaredNorm();
  return total;
}

Eigen::MatrixXd assemble_normal_matrix(const ObservationSet& obs,
                                       Eigen::Index channel_len) {
  return CrossRelationSystem(obs, channel_len).normal_matrix();
}

}  // namespace cci
