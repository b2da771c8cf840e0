// Test-side dense QP oracle, independent of the library's operator-splitting
// path: a primal-dual interior-point method for
//   min 1/2 x'Qx + c'x   s.t.  Aeq x = beq,  Ain x <= bin
// solved with full unreduced KKT Newton systems. Only suitable for the tiny
// instances the oracle checks run on.
#ifndef CCI_TESTS_SUPPORT_QP_ORACLE_HPP_
#define CCI_TESTS_SUPPORT_QP_ORACLE_HPP_

#include <Eigen/Dense>
#include <limits>

namespace cci::testing {

struct QpProblem {
  Eigen::MatrixXd Q;  // symmetric PSD
  Eigen::VectorXd c;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd Ain;
  Eigen::VectorXd bin;
};

struct QpSolution {
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int iters = 0;
};

inline QpSolution solve_qp_interior_point(const QpProblem& prob, int max_iters = 200,
                                          double tol = 1e-11) {
  const Eigen::Index n = prob.Q.rows();
  const Eigen::Index me = prob.Aeq.rows();
  const Eigen::Index mi = prob.Ain.rows();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(me);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(mi);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(mi);

  const double scale = std::max({1.0, prob.Q.cwiseAbs().maxCoeff(),
                                 prob.c.size() ? prob.c.cwiseAbs().maxCoeff() : 0.0});

  QpSolution out;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd rd =
        prob.Q * x + prob.c + prob.Aeq.transpose() * y + prob.Ain.transpose() * z;
    const Eigen::VectorXd rp = prob.Aeq * x - prob.beq;
    const Eigen::VectorXd rs = prob.Ain * x + s - prob.bin;
    const double mu = mi > 0 ? s.dot(z) / static_cast<double>(mi) : 0.0;

    const double res = std::max({rd.cwiseAbs().maxCoeff(),
                                 me ? rp.cwiseAbs().maxCoeff() : 0.0,
                                 mi ? rs.cwiseAbs().maxCoeff() : 0.0});
    if (res <= tol * scale && mu <= tol * scale) {
      out.converged = true;
      out.iters = it;
      break;
    }

    const double sigma = 0.2;
    // Unreduced KKT Newton step in (dx, dy, dz, ds).
    const Eigen::Index dim = n + me + mi + mi;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs(dim);
    M.block(0, 0, n, n) = prob.Q;
    M.block(0, n, n, me) = prob.Aeq.transpose();
    M.block(0, n + me, n, mi) = prob.Ain.transpose();
    M.block(n, 0, me, n) = prob.Aeq;
    M.block(n + me, 0, mi, n) = prob.Ain;
    M.block(n + me, n + me + mi, mi, mi) = Eigen::MatrixXd::Identity(mi, mi);
    M.block(n + me + mi, n + me, mi, mi) = s.asDiagonal();
    M.block(n + me + mi, n + me + mi, mi, mi) = z.asDiagonal();
    rhs.segment(0, n) = -rd;
    rhs.segment(n, me) = -rp;
    rhs.segment(n + me, mi) = -rs;
    rhs.segment(n + me + mi, mi) = (sigma * mu - s.array() * z.array()).matrix();

    const Eigen::VectorXd d = M.fullPivLu().solve(rhs);
    const Eigen::VectorXd dx = d.segment(0, n);
    const Eigen::VectorXd dy = d.segment(n, me);
    const Eigen::VectorXd dz = d.segment(n + me, mi);
    const Eigen::VectorXd ds = d.segment(n + me + mi, mi);

    double alpha = 1.0;
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (dz(i) < 0.0) alpha = std::min(alpha, -0.99 * z(i) / dz(i));
      if (ds(i) < 0.0) alpha = std::min(alpha, -0.99 * s(i) / ds(i));
    }
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    out.iters = it + 1;
  }
  out.x = x;
  out.objective = 0.5 * x.dot(prob.Q * x) + prob.c.dot(x);
  return out;
}

// Oracle for the slack-constrained problem: min h'Gh s.t. p_n.h_n = 1,
// h >= 0, sum(h) <= eps.
inline QpSolution solve_il1c_qp_oracle(const Eigen::MatrixXd& G,
                                       const Eigen::MatrixXd& slack, double epsilon) {
  const Eigen::Index L = slack.rows();
  const Eigen::Index N = slack.cols();
  const Eigen::Index n = L * N;
  QpProblem prob;
  prob.Q = 2.0 * G;
  prob.c = Eigen::VectorXd::Zero(n);
  prob.Aeq = Eigen::MatrixXd::Zero(N, n);
  for (Eigen::Index k = 0; k < N; ++k)
    prob.Aeq.block(k, k * L, 1, L) = slack.col(k).transpose();
  prob.beq = Eigen::VectorXd::Ones(N);
  prob.Ain = Eigen::MatrixXd::Zero(n + 1, n);
  prob.Ain.topRows(n) = -Eigen::MatrixXd::Identity(n, n);
  prob.Ain.row(n).setOnes();
  prob.bin = Eigen::VectorXd::Zero(n + 1);
  prob.bin(n) = epsilon;
  QpSolution sol = solve_qp_interior_point(prob);
  sol.objective = sol.x.dot(G * sol.x);  // report h'Gh, not 1/2 h'Qh
  return sol;
}

// Oracle for the anchored problems. With nonneg = false the variable is split
// h = u - v, u, v >= 0 so the L1 constraint is linear.
inline QpSolution solve_anchor_qp_oracle(const Eigen::MatrixXd& G, Eigen::Index anchor,
                                         double epsilon, bool nonneg) {
  const Eigen::Index n = G.rows();
  if (nonneg) {
    QpProblem prob;
    prob.Q = 2.0 * G;
    prob.c = Eigen::VectorXd::Zero(n);
    prob.Aeq = Eigen::MatrixXd::Zero(1, n);
    prob.Aeq(0, anchor) = 1.0;
    prob.beq = Eigen::VectorXd::Ones(1);
    prob.Ain = Eigen::MatrixXd::Zero(n + 1, n);
    prob.Ain.topRows(n) = -Eigen::MatrixXd::Identity(n, n);
    prob.Ain.row(n).setOnes();
    prob.bin = Eigen::VectorXd::Zero(n + 1);
    prob.bin(n) = epsilon;
    QpSolution sol = solve_qp_interior_point(prob);
    sol.objective = sol.x.dot(G * sol.x);
    return sol;
  }
  QpProblem prob;
  prob.Q = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  prob.Q.topLeftCorner(n, n) = 2.0 * G;
  prob.Q.topRightCorner(n, n) = -2.0 * G;
  prob.Q.bottomLeftCorner(n, n) = -2.0 * G;
  prob.Q.bottomRightCorner(n, n) = 2.0 * G;
  prob.c = Eigen::VectorXd::Zero(2 * n);
  prob.Aeq = Eigen::MatrixXd::Zero(1, 2 * n);
  prob.Aeq(0, anchor) = 1.0;
  prob.Aeq(0, n + anchor) = -1.0;
  prob.beq = Eigen::VectorXd::Ones(1);
  prob.Ain = Eigen::MatrixXd::Zero(2 * n + 1, 2 * n);
  prob.Ain.topRows(2 * n) = -Eigen::MatrixXd::Identity(2 * n, 2 * n);
  prob.Ain.row(2 * n).setOnes();
  prob.bin = Eigen::VectorXd::Zero(2 * n + 1);
  prob.bin(2 * n) = epsilon;
  QpSolution sol = solve_qp_interior_point(prob);
  const Eigen::VectorXd h = sol.x.head(n) - sol.x.tail(n);
  sol.x = h;
  sol.objective = h.dot(G * h);
  return sol;
}

}  // namespace cci::testing

#endif  // CCI_TESTS_SUPPORT_QP_ORACLE_HPP_
