// Convex QP machinery for the constrained identification solvers: exact
// projections onto the simplex / L1-ball / non-negative capped-sum sets,
// Dykstra's alternating projection for intersections, and operator-splitting
// (ADMM) minimizers for f(h) = h^T G h over projectable convex sets.
#ifndef CCI_QP_HPP_
#define CCI_QP_HPP_

#include <Eigen/Dense>
#include <functional>

namespace cci {

// Euclidean projection onto {x >= 0, sum(x) = total}, total >= 0.
void project_simplex(Eigen::Ref<Eigen::VectorXd> x, double total);

// Euclidean projection onto {x : ||x||_1 <= radius}.
void project_l1_ball(Eigen::Ref<Eigen::VectorXd> x, double radius);

// Euclidean projection onto {x >= 0, sum(x) <= cap}.
void project_nonneg_sum_cap(Eigen::Ref<Eigen::VectorXd> x, double cap);

// Euclidean projection onto the stacked affine set {p_n . h_n = 1 for all n},
// where h stacks N channels of length L and column n of slack holds p_n.
void project_channel_equalities(Eigen::Ref<Eigen::VectorXd> h,
                                const Eigen::MatrixXd& slack);

// Dykstra's algorithm for the intersection
//   {h >= 0, sum(h) <= epsilon} ∩ {p_n . h_n = 1 for all n}.
// The returned point lies exactly in the first set; the equality residual is
// driven below tol * max(1, ||h||_inf). Returns false if that target is not
// reached within max_cycles (e.g. when the intersection is empty).
bool project_il1c_set(Eigen::VectorXd& h, const Eigen::MatrixXd& slack,
                      double epsilon, double tol = 1e-10, int max_cycles = 2000);

struct AdmmOptions {
  int max_iters = 5000;
  double tol = 1e-6;  // relative primal/dual residual target
  double rho = 0.0;   // 0: trace(G)/dim heuristic
  bool adaptive_rho = true;
};

struct AdmmResult {
  Eigen::VectorXd z;
  double objective = 0.0;
  int iters = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

using Projector = std::function<void(Eigen::VectorXd&)>;

// min h^T G h over {h : project leaves h unchanged} via
//   x+ = (2G + rho I)^{-1} rho (z - u);  z+ = P(x+ + u);  u+ = u + x+ - z+.
// The reported iterate is z, which is feasible by construction.
AdmmResult admm_quadratic(const Eigen::MatrixXd& G, const Projector& project,
                          const Eigen::VectorXd& x0, const AdmmOptions& opts);

// Same splitting with the x-update solved by conjugate gradients using
// multiply(v) = G v; mean_diagonal supplies the rho heuristic scale.
AdmmResult admm_quadratic_matfree(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& multiply,
    double mean_diagonal, Eigen::Index dim, const Projector& project,
    const Eigen::VectorXd& x0, const AdmmOptions& opts);

// Splitting tailored to min h^T G h s.t. p_n . h_n = 1, h >= 0, sum(h) <= eps:
// the channel equalities are folded into the x-update KKT system and the
// z-update is the exact non-negative capped-sum projection. The final iterate
// is polished with project_il1c_set so every constraint holds tightly.
AdmmResult admm_il1c(const Eigen::MatrixXd& G, const Eigen::MatrixXd& slack,
                     double epsilon, const Eigen::VectorXd& x0,
                     const AdmmOptions& opts);

}  // namespace cci

#endif  // CCI_QP_HPP_
