// Internal solver cores operating on a prebuilt dense normal matrix. The
// public solvers, the cross-validation folds and the multi-microphone
// strategies all funnel through these.
#ifndef CCI_DETAIL_SOLVER_CORE_HPP_
#define CCI_DETAIL_SOLVER_CORE_HPP_

#include "cci/solvers.hpp"

namespace cci::detail {

struct NormalProblem {
  Eigen::MatrixXd G;  // stacked normal matrix A^T A, (N L) x (N L)
  Eigen::Index n_mics = 0;
  Eigen::Index channel_len = 0;
  double sample_rate = 16000.0;
};

NormalProblem build_normal_problem(const ObservationSet& obs, Eigen::Index channel_len);

SolverResult tong_core(const NormalProblem& prob, const SolverConfig& cfg);
SolverResult anchor_core(const NormalProblem& prob, const SolverConfig& cfg, bool nonneg);

// initial_slack: L x N matrix of slack vectors, or nullptr for the
// cfg.il1c_init rule.
SolverResult il1c_core(const NormalProblem& prob, const SolverConfig& cfg,
                       const Eigen::MatrixXd* initial_slack);

// Rectified eigen solution scaled to max tap 1 per channel; throws
// degenerate-initialization if a channel rectifies to zero.
Eigen::MatrixXd rectified_tong_slack(const NormalProblem& prob, const SolverConfig& cfg);

}  // namespace cci::detail

#endif  // CCI_DETAIL_SOLVER_CORE_HPP_
