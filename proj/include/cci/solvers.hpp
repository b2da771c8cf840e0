// Blind SIMO identification solvers built on the cross-relation system:
// the closed-form L2-sphere eigen solver, the anchored L1 formulations, the
// iterative slack-variable scheme (IL1C) with its alternating updates, and
// epsilon model selection by segment-wise cross-validation.
#ifndef CCI_SOLVERS_HPP_
#define CCI_SOLVERS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cci/types.hpp"

namespace cci {

enum class SolverKind { Tong, AnchorL1, NonnegAnchorL1, Il1c };

// How IL1C's slack variables are initialized: the rectified eigen solution
// (negatives clipped, each channel scaled to max tap 1) or the solution of
// the non-negative anchored problem.
enum class Il1cInit { RectifiedTong, NonnegAnchor };

struct SolverConfig {
  Eigen::Index channel_len = 128;
  double epsilon = 0.0;           // L1 budget for the constrained solvers
  Eigen::Index anchor_index = -1; // -1: largest tap of the eigen solution's first channel
  int max_outer_iters = 20;
  int max_inner_iters = 5000;
  double tol_inner = 1e-6;  // relative KKT/residual tolerance of the inner QP
  double tol_outer = 1e-4;  // relative change of stacked h between alternations
  std::uint64_t seed = 0;
  int cv_folds = 3;
  Eigen::Index dense_threshold = 4096;  // materialize A^T A when N*L <= this
  Il1cInit il1c_init = Il1cInit::RectifiedTong;
};

void validate(const SolverConfig& cfg);

struct ConstraintCheck {
  std::string name;
  double violation = 0.0;
};

struct SolverResult {
  AirSet airs;
  std::vector<double> objective_trace;
  std::vector<ConstraintCheck> constraint_report;
  int outer_iters = 0;
  int inner_iters = 0;
  bool converged = false;
  bool identifiable = true;  // eigen-gap diagnostic from the L2 solver
  double epsilon_used = 0.0;
  double smallest_eigenvalue = 0.0;
  double second_eigenvalue = 0.0;
  std::string diagnostics_json;  // extra per-strategy diagnostics, if any
};

double max_constraint_violation(const SolverResult& result);

// Unit-norm eigenvector of A^T A for the smallest eigenvalue, sign-fixed so
// the largest-magnitude tap is positive. Flags non-identifiability when the
// second eigenvalue does not clear the smallest by a factor of 10.
SolverResult tong_l2(const ObservationSet& obs, const SolverConfig& cfg);

// min h^T A^T A h  s.t.  h_1(a) = 1, sum_i ||h_i||_1 <= epsilon.
SolverResult anchor_l1(const ObservationSet& obs, const SolverConfig& cfg);

// anchor_l1 with the additional elementwise constraint h >= 0.
SolverResult nonneg_anchor_l1(const ObservationSet& obs, const SolverConfig& cfg);

// Alternating scheme: solve the convex QP in h with the slack vectors fixed,
// then point each slack vector along the new estimate. The slack rescaling
// keeps the previous iterate feasible, so the objective trace never
// increases.
SolverResult il1c(const ObservationSet& obs, const SolverConfig& cfg);

struct EpsilonScore {
  double epsilon = 0.0;
  double mean_heldout_residual = 0.0;
  bool valid = false;
};

struct CvResult {
  double chosen_epsilon = 0.0;
  std::vector<EpsilonScore> scores;
};

// F-fold cross-validation over contiguous recording segments: solve on the
// training segments' stacked system, score the held-out segment's
// cross-relation residual, pick the epsilon with the smallest mean score
// (ties toward smaller epsilon).
CvResult cross_validate_epsilon(const ObservationSet& obs, const SolverConfig& cfg,
                                const std::vector<double>& grid,
                                SolverKind kind = SolverKind::Il1c);

// {0.5, 1, 2, 4, 8} x (L1 mass of the rectified eigen initialization).
std::vector<double> default_epsilon_grid(const ObservationSet& obs,
                                         const SolverConfig& cfg);

// Stacked-vector helpers shared with the strategies and tests.
Eigen::VectorXd stack_channels(const Eigen::MatrixXd& channels);
Eigen::MatrixXd unstack_channels(const Eigen::Ref<const Eigen::VectorXd>& stacked,
                                 Eigen::Index n_mics);

}  // namespace cci

#endif  // CCI_SOLVERS_HPP_
