#include "cci/qp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cci/errors.hpp"

namespace cci {

namespace {

// Threshold tau such that sum(max(v - tau, 0)) = total, for the sort-based
// simplex projection.
double simplex_threshold(const Eigen::VectorXd& v, double total) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = (u.empty() ? 0.0 : u.front()) - total;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - total) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0)
      tau = candidate;
    else
      break;
  }
  return tau;
}

}  // namespace

void project_simplex(Eigen::Ref<Eigen::VectorXd> x, double total) {
  if (total < 0.0)
    throw_error(ErrorCode::invalid_argument, "simplex total must be non-negative");
  if (x.size() == 0) return;
  const double tau = simplex_threshold(x, total);
  x = (x.array() - tau).cwiseMax(0.0);
}

void project_l1_ball(Eigen::Ref<Eigen::VectorXd> x, double radius) {
  if (radius < 0.0)
    throw_error(ErrorCode::invalid_argument, "L1 radius must be non-negative");
  if (x.size() == 0) return;
  if (x.cwiseAbs().sum() <= radius) return;
  Eigen::VectorXd a = x.cwiseAbs();
  const double tau = simplex_threshold(a, radius);
  x = x.array().sign() * (a.array() - tau).cwiseMax(0.0);
}

void project_nonneg_sum_cap(Eigen::Ref<Eigen::VectorXd> x, double cap) {
  if (cap < 0.0)
    throw_error(ErrorCode::invalid_argument, "sum cap must be non-negative");
  Eigen::VectorXd clamped = x.cwiseMax(0.0);
  if (clamped.sum() <= cap) {
    x = clamped;
    return;
  }
  project_simplex(x, cap);
}

void project_channel_equalities(Eigen::Ref<Eigen::VectorXd> h,
                                const Eigen::MatrixXd& slack) {
  const Eigen::Index L = slack.rows();
  const Eigen::Index N = slack.cols();
  if (h.size() != L * N)
    throw_error(ErrorCode::invalid_argument, "stacked vector / slack size mismatch");
  for (Eigen::Index n = 0; n < N; ++n) {
    const auto p = slack.col(n);
    const double sq = p.squaredNorm();
    if (sq <= 0.0)
      throw_error(ErrorCode::degenerate_initialization,
                  "slack vector " + std::to_string(n) + " is zero");
    auto hn = h.segment(n * L, L);
    hn += ((1.0 - p.dot(hn)) / sq) * p;
  }
}

bool project_il1c_set(Eigen::VectorXd& h, const Eigen::MatrixXd& slack,
                      double epsilon, double tol, int max_cycles) {
  const Eigen::Index L = slack.rows();
  const Eigen::Index N = slack.cols();
  Eigen::VectorXd x = h;
  Eigen::VectorXd inc_a = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd inc_b = Eigen::VectorXd::Zero(x.size());
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    Eigen::VectorXd va = x + inc_a;
    Eigen::VectorXd y = va;
    project_channel_equalities(y, slack);
    inc_a = va - y;

    Eigen::VectorXd vb = y + inc_b;
    Eigen::VectorXd zb = vb;
    project_nonneg_sum_cap(zb, epsilon);
    inc_b = vb - zb;
    x = zb;

    double eq_res = 0.0;
    for (Eigen::Index n = 0; n < N; ++n)
      eq_res = std::max(eq_res, std::abs(slack.col(n).dot(x.segment(n * L, L)) - 1.0));
    if (eq_res <= tol * std::max(1.0, x.cwiseAbs().maxCoeff())) {
      h = x;
      return true;
    }
  }
  h = x;
  return false;
}

namespace {

struct ResidualState {
  double primal = 0.0;
  double dual = 0.0;
  bool converged(double tol, const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                 double rho, const Eigen::VectorXd& u) const {
    const double eps_prim =
        tol * std::max({1.0, x.cwiseAbs().maxCoeff(), z.cwiseAbs().maxCoeff()});
    const double eps_dual = tol * std::max(1.0, rho * u.cwiseAbs().maxCoeff());
    return primal <= eps_prim && dual <= eps_dual;
  }
};

// Residual balancing: returns the factor to apply to rho (1 = keep).
double rho_rescale(double primal, double dual) {
  if (primal > 10.0 * dual) return 2.0;
  if (dual > 10.0 * primal) return 0.5;
  return 1.0;
}

}  // namespace

AdmmResult admm_quadratic(const Eigen::MatrixXd& G, const Projector& project,
                          const Eigen::VectorXd& x0, const AdmmOptions& opts) {
  const Eigen::Index n = G.rows();
  double rho = opts.rho > 0.0 ? opts.rho : std::max(G.trace() / static_cast<double>(n), 1e-12);

  Eigen::LLT<Eigen::MatrixXd> chol;
  auto refactor = [&]() {
    Eigen::MatrixXd M = 2.0 * G;
    M.diagonal().array() += rho;
    chol.compute(M);
    if (chol.info() != Eigen::Success)
      throw_error(ErrorCode::numerical_failure, "ADMM factorization failed");
  };
  refactor();

  Eigen::VectorXd z = x0;
  project(z);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd x = z;

  AdmmResult out;
  ResidualState res;
  for (int k = 0; k < opts.max_iters; ++k) {
    x = chol.solve(rho * (z - u));
    Eigen::VectorXd z_prev = z;
    z = x + u;
    project(z);
    u += x - z;

    res.primal = (x - z).cwiseAbs().maxCoeff();
    res.dual = rho * (z - z_prev).cwiseAbs().maxCoeff();
    out.iters = k + 1;
    if (res.converged(opts.tol, x, z, rho, u)) {
      out.converged = true;
      break;
    }
    if (opts.adaptive_rho && (k + 1) % 50 == 0) {
      const double f = rho_rescale(res.primal, res.dual);
      if (f != 1.0) {
        rho *= f;
        u /= f;
        refactor();
      }
    }
  }
  out.z = z;
  out.objective = z.dot(G * z);
  out.primal_residual = res.primal;
  out.dual_residual = res.dual;
  return out;
}

AdmmResult admm_quadratic_matfree(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& multiply,
    double mean_diagonal, Eigen::Index dim, const Projector& project,
    const Eigen::VectorXd& x0, const AdmmOptions& opts) {
  double rho = opts.rho > 0.0 ? opts.rho : std::max(mean_diagonal, 1e-12);

  auto solve_cg = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& guess) {
    // (2G + rho I) x = b
    Eigen::VectorXd x = guess;
    Eigen::VectorXd r = b - (2.0 * multiply(x) + rho * x);
    Eigen::VectorXd p = r;
    double rs = r.squaredNorm();
    const double target = 1e-22 * std::max(1.0, b.squaredNorm());
    const int cap = static_cast<int>(std::min<Eigen::Index>(20 * dim, 100000));
    for (int i = 0; i < cap && rs > target; ++i) {
      Eigen::VectorXd Ap = 2.0 * multiply(p) + rho * p;
      const double alpha = rs / p.dot(Ap);
      x += alpha * p;
      r -= alpha * Ap;
      const double rs_new = r.squaredNorm();
      p = r + (rs_new / rs) * p;
      rs = rs_new;
    }
    return x;
  };

  Eigen::VectorXd z = x0;
  project(z);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd x = z;

  AdmmResult out;
  ResidualState res;
  for (int k = 0; k < opts.max_iters; ++k) {
    x = solve_cg(rho * (z - u), x);
    Eigen::VectorXd z_prev = z;
    z = x + u;
    project(z);
    u += x - z;

    res.primal = (x - z).cwiseAbs().maxCoeff();
    res.dual = rho * (z - z_prev).cwiseAbs().maxCoeff();
    out.iters = k + 1;
    if (res.converged(opts.tol, x, z, rho, u)) {
      out.converged = true;
      break;
    }
    if (opts.adaptive_rho && (k + 1) % 50 == 0) {
      const double f = rho_rescale(res.primal, res.dual);
      if (f != 1.0) {
        rho *= f;
        u /= f;
      }
    }
  }
  out.z = z;
  out.objective = z.dot(multiply(z));
  out.primal_residual = res.primal;
  out.dual_residual = res.dual;
  return out;
}

AdmmResult admm_il1c(const Eigen::MatrixXd& G, const Eigen::MatrixXd& slack,
                     double epsilon, const Eigen::VectorXd& x0,
                     const AdmmOptions& opts) {
  const Eigen::Index L = slack.rows();
  const Eigen::Index N = slack.cols();
  const Eigen::Index n = L * N;
  if (G.rows() != n)
    throw_error(ErrorCode::invalid_argument, "normal matrix / slack size mismatch");
  double rho = opts.rho > 0.0 ? opts.rho : std::max(G.trace() / static_cast<double>(n), 1e-12);

  // KKT for the x-update: [2G + rho I, P^T; P, 0] [x; lam] = [rho (z - u); 1]
  // with P the block-diagonal matrix of slack rows.
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  auto refactor = [&]() {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + N, n + N);
    M.topLeftCorner(n, n) = 2.0 * G;
    M.topLeftCorner(n, n).diagonal().array() += rho;
    for (Eigen::Index c = 0; c < N; ++c) {
      M.block(n + c, c * L, 1, L) = slack.col(c).transpose();
      M.block(c * L, n + c, L, 1) = slack.col(c);
    }
    lu.compute(M);
  };
  refactor();

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + N);
  rhs.tail(N).setOnes();

  Eigen::VectorXd z = x0;
  project_nonneg_sum_cap(z, epsilon);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd x = z;

  AdmmResult out;
  ResidualState res;
  for (int k = 0; k < opts.max_iters; ++k) {
    rhs.head(n) = rho * (z - u);
    x = lu.solve(rhs).head(n);
    Eigen::VectorXd z_prev = z;
    z = x + u;
    project_nonneg_sum_cap(z, epsilon);
    u += x - z;

    res.primal = (x - z).cwiseAbs().maxCoeff();
    res.dual = rho * (z - z_prev).cwiseAbs().maxCoeff();
    out.iters = k + 1;
    if (res.converged(opts.tol, x, z, rho, u)) {
      out.converged = true;
      break;
    }
    if (opts.adaptive_rho && (k + 1) % 50 == 0) {
      const double f = rho_rescale(res.primal, res.dual);
      if (f != 1.0) {
        rho *= f;
        u /= f;
        refactor();
      }
    }
  }

  // Pin the channel equalities; z already satisfies the sign/sum constraints.
  if (!project_il1c_set(z, slack, epsilon))
    throw_error(ErrorCode::infeasible_constraints,
                "could not reach the constraint intersection; epsilon too tight");
  out.z = z;
  out.objective = z.dot(G * z);
  out.primal_residual = res.primal;
  out.dual_residual = res.dual;
  return out;
}

}  // namespace cci
