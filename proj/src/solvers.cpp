#include "cci/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cci/cross_relation.hpp"
#include "cci/detail/solver_core.hpp"
#include "cci/qp.hpp"

namespace cci {

void validate(const SolverConfig& cfg) {
  if (cfg.channel_len < 1)
    throw_error(ErrorCode::invalid_argument, "channel_len must be >= 1");
  if (cfg.tol_inner <= 0.0 || cfg.tol_outer <= 0.0)
    throw_error(ErrorCode::invalid_argument, "tolerances must be positive");
  if (cfg.max_outer_iters < 1 || cfg.max_inner_iters < 1)
    throw_error(ErrorCode::invalid_argument, "iteration caps must be >= 1");
  if (cfg.anchor_index >= cfg.channel_len)
    throw_error(ErrorCode::invalid_argument, "anchor index out of range");
  if (cfg.cv_folds < 2)
    throw_error(ErrorCode::invalid_argument, "cross-validation needs at least 2 folds");
}

double max_constraint_violation(const SolverResult& result) {
  double v = 0.0;
  for (const auto& c : result.constraint_report) v = std::max(v, c.violation);
  return v;
}

Eigen::VectorXd stack_channels(const Eigen::MatrixXd& channels) {
  return Eigen::Map<const Eigen::VectorXd>(channels.data(), channels.size());
}

Eigen::MatrixXd unstack_channels(const Eigen::Ref<const Eigen::VectorXd>& stacked,
                                 Eigen::Index n_mics) {
  if (n_mics < 1 || stacked.size() % n_mics != 0)
    throw_error(ErrorCode::invalid_argument, "stacked length not divisible by channel count");
  const Eigen::Index L = stacked.size() / n_mics;
  return Eigen::Map<const Eigen::MatrixXd>(stacked.data(), L, n_mics);
}

namespace detail {

NormalProblem build_normal_problem(const ObservationSet& obs, Eigen::Index channel_len) {
  if (!obs.recordings.allFinite())
    throw_error(ErrorCode::invalid_argument, "observations contain non-finite samples");
  CrossRelationSystem sys(obs, channel_len);
  NormalProblem prob;
  prob.G = sys.normal_matrix();
  prob.n_mics = obs.n_mics();
  prob.channel_len = channel_len;
  prob.sample_rate = obs.sample_rate;
  return prob;
}

namespace {

AirSet make_airs(const Eigen::Ref<const Eigen::VectorXd>& stacked,
                 const NormalProblem& prob) {
  AirSet airs;
  airs.channels = unstack_channels(stacked, prob.n_mics);
  airs.sample_rate = prob.sample_rate;
  return airs;
}

// Anchored solvers pin stacked coordinate `a` (a tap of channel 0) to +1 and
// constrain the L1 mass of the remaining coordinates to epsilon - 1.
Eigen::Index resolve_anchor(const SolverConfig& cfg, const SolverResult& tong) {
  if (cfg.anchor_index >= 0) return cfg.anchor_index;
  Eigen::Index a = 0;
  tong.airs.channels.col(0).cwiseAbs().maxCoeff(&a);
  return a;
}

}  // namespace

SolverResult tong_core(const NormalProblem& prob, const SolverConfig& /*cfg*/) {
  const Eigen::Index dim = prob.G.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prob.G);
  if (es.info() != Eigen::Success)
    throw_error(ErrorCode::numerical_failure, "eigendecomposition did not converge");

  Eigen::VectorXd v = es.eigenvectors().col(0);
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0.0) v = -v;

  SolverResult out;
  out.airs = make_airs(v, prob);
  out.smallest_eigenvalue = es.eigenvalues()(0);
  out.second_eigenvalue = dim > 1 ? es.eigenvalues()(1) : es.eigenvalues()(0);
  const double scale = prob.G.trace() / static_cast<double>(dim);
  out.identifiable = dim > 1 && out.second_eigenvalue >
                                    std::max(10.0 * std::abs(out.smallest_eigenvalue),
                                             1e-10 * scale);
  out.objective_trace = {out.smallest_eigenvalue};
  out.constraint_report = {{"sum_sq_norm_eq_1", std::abs(v.squaredNorm() - 1.0)}};
  out.outer_iters = 1;
  out.converged = true;
  return out;
}

SolverResult anchor_core(const NormalProblem& prob, const SolverConfig& cfg, bool nonneg) {
  validate(cfg);
  if (cfg.epsilon < 1.0)
    throw_error(ErrorCode::infeasible_constraints,
                "epsilon must be >= 1; the anchor tap alone has L1 mass 1");

  const SolverResult tong = tong_core(prob, cfg);
  const Eigen::Index a = resolve_anchor(cfg, tong);
  const double budget = cfg.epsilon - 1.0;

  Projector project = [a, budget, nonneg](Eigen::VectorXd& v) {
    v(a) = 0.0;  // a zero coordinate does not move the L1/simplex threshold
    if (nonneg)
      project_nonneg_sum_cap(v, budget);
    else
      project_l1_ball(v, budget);
    v(a) = 1.0;
  };

  Eigen::VectorXd x0 = stack_channels(tong.airs.channels);
  if (std::abs(x0(a)) > 1e-12 * x0.cwiseAbs().maxCoeff())
    x0 /= x0(a);
  else
    x0 = Eigen::VectorXd::Unit(prob.G.rows(), a);

  AdmmOptions opts;
  opts.max_iters = cfg.max_inner_iters;
  opts.tol = cfg.tol_inner;
  AdmmResult admm = admm_quadratic(prob.G, project, x0, opts);

  SolverResult out;
  out.airs = make_airs(admm.z, prob);
  out.objective_trace = {admm.objective};
  out.inner_iters = admm.iters;
  out.outer_iters = 1;
  out.converged = admm.converged;
  out.identifiable = tong.identifiable;
  out.smallest_eigenvalue = tong.smallest_eigenvalue;
  out.second_eigenvalue = tong.second_eigenvalue;
  out.epsilon_used = cfg.epsilon;
  out.constraint_report = {
      {"anchor_eq_1", std::abs(admm.z(a) - 1.0)},
      {"l1_budget", std::max(0.0, admm.z.cwiseAbs().sum() - cfg.epsilon)}};
  if (nonneg)
    out.constraint_report.push_back({"non_negativity", std::max(0.0, -admm.z.minCoeff())});
  return out;
}

Eigen::MatrixXd rectified_tong_slack(const NormalProblem& prob, const SolverConfig& cfg) {
  const SolverResult tong = tong_core(prob, cfg);
  Eigen::MatrixXd slack = tong.airs.channels.cwiseMax(0.0);
  for (Eigen::Index n = 0; n < slack.cols(); ++n) {
    const double top = slack.col(n).maxCoeff();
    if (top <= 0.0)
      throw_error(ErrorCode::degenerate_initialization,
                  "rectified initialization is zero on channel " + std::to_string(n));
    slack.col(n) /= top;
  }
  return slack;
}

namespace {

Eigen::MatrixXd nonneg_anchor_slack(const NormalProblem& prob, const SolverConfig& cfg) {
  Eigen::MatrixXd slack = anchor_core(prob, cfg, /*nonneg=*/true).airs.channels.cwiseMax(0.0);
  for (Eigen::Index n = 0; n < slack.cols(); ++n) {
    const double top = slack.col(n).maxCoeff();
    if (top <= 0.0)
      throw_error(ErrorCode::degenerate_initialization,
                  "non-negative anchored initialization is zero on channel " +
                      std::to_string(n));
    slack.col(n) /= top;
  }
  return slack;
}

double min_feasible_mass(const Eigen::MatrixXd& slack) {
  double mass = 0.0;
  for (Eigen::Index n = 0; n < slack.cols(); ++n) {
    const double top = slack.col(n).maxCoeff();
    if (top <= 0.0)
      throw_error(ErrorCode::infeasible_constraints,
                  "slack vector " + std::to_string(n) +
                      " has no positive entry; p'h = 1 cannot hold with h >= 0");
    mass += 1.0 / top;
  }
  return mass;
}

}  // namespace

SolverResult il1c_core(const NormalProblem& prob, const SolverConfig& cfg,
                       const Eigen::MatrixXd* initial_slack) {
  validate(cfg);
  if (cfg.epsilon <= 0.0)
    throw_error(ErrorCode::invalid_argument, "epsilon must be positive");

  const Eigen::Index L = prob.channel_len;
  const Eigen::Index N = prob.n_mics;

  Eigen::MatrixXd slack;
  if (initial_slack != nullptr) {
    if (initial_slack->rows() != L || initial_slack->cols() != N)
      throw_error(ErrorCode::invalid_argument, "initial slack has wrong shape");
    slack = *initial_slack;
  } else if (cfg.il1c_init == Il1cInit::RectifiedTong) {
    slack = rectified_tong_slack(prob, cfg);
  } else {
    slack = nonneg_anchor_slack(prob, cfg);
  }

  if (min_feasible_mass(slack) > cfg.epsilon * (1.0 + 1e-12))
    throw_error(ErrorCode::infeasible_constraints,
                "epsilon below the minimum feasible L1 mass of the slack constraints");

  // Start from the per-channel feasible point h_n = p_n / ||p_n||^2.
  Eigen::VectorXd h(L * N);
  for (Eigen::Index n = 0; n < N; ++n)
    h.segment(n * L, L) = slack.col(n) / slack.col(n).squaredNorm();

  AdmmOptions opts;
  opts.max_iters = cfg.max_inner_iters;
  opts.tol = cfg.tol_inner;

  SolverResult out;
  out.epsilon_used = cfg.epsilon;
  double prev_obj = std::numeric_limits<double>::infinity();
  Eigen::VectorXd prev_h;
  bool inner_converged = false;

  for (int t = 0; t < cfg.max_outer_iters; ++t) {
    AdmmResult inner = admm_il1c(prob.G, slack, cfg.epsilon, h, opts);
    out.inner_iters += inner.iters;
    inner_converged = inner.converged;

    Eigen::VectorXd h_new = inner.z;
    double obj_new = inner.objective;
    bool stalled = false;
    // The previous iterate stays feasible after the slack update, so a worse
    // inner result (beyond quadratic-form rounding noise) means the
    // alternation has stopped making progress.
    const double fp_floor = 1e-13 * (prob.G.trace() / static_cast<double>(L * N)) *
                            std::max(1.0, h_new.squaredNorm());
    if (t > 0 && obj_new > prev_obj + 1e-12 * std::abs(prev_obj) + fp_floor) {
      h_new = prev_h;
      obj_new = prev_obj;
      stalled = true;
    }
    out.objective_trace.push_back(obj_new);
    out.outer_iters = t + 1;

    bool small_change = false;
    if (t > 0) {
      const double denom = std::max(prev_h.norm(), 1e-30);
      small_change = (h_new - prev_h).norm() / denom < cfg.tol_outer;
    }
    prev_h = h_new;
    prev_obj = obj_new;
    h = h_new;

    if (stalled || small_change) {
      out.converged = true;
      break;
    }
    if (t + 1 == cfg.max_outer_iters) break;

    // p_n <- h_n / ||h_n||^2: same direction as the new estimate, scaled so
    // p_n . h_n = 1 and the estimate remains feasible for the next pass.
    for (Eigen::Index n = 0; n < N; ++n) {
      const double sq = h.segment(n * L, L).squaredNorm();
      if (sq <= 0.0)
        throw_error(ErrorCode::degenerate_initialization,
                    "estimate collapsed to zero on channel " + std::to_string(n));
      slack.col(n) = h.segment(n * L, L) / sq;
    }
  }
  out.converged = out.converged && inner_converged;

  double eq_violation = 0.0;
  for (Eigen::Index n = 0; n < N; ++n)
    eq_violation = std::max(
        eq_violation, std::abs(slack.col(n).dot(h.segment(n * L, L)) - 1.0));
  out.constraint_report = {
      {"slack_equalities", eq_violation},
      {"non_negativity", std::max(0.0, -h.minCoeff())},
      {"l1_budget", std::max(0.0, h.sum() - cfg.epsilon)}};
  out.airs = make_airs(h, prob);
  return out;
}

}  // namespace detail

namespace {

detail::NormalProblem build_checked(const ObservationSet& obs, const SolverConfig& cfg) {
  validate(cfg);
  return detail::build_normal_problem(obs, cfg.channel_len);
}

// Matrix-free variants used above the dense threshold: the quadratic products
// go through pairwise convolutions instead of the materialized Gram matrix.
SolverResult anchor_matfree(const ObservationSet& obs, const SolverConfig& cfg,
                            bool nonneg) {
  if (cfg.epsilon < 1.0)
    throw_error(ErrorCode::infeasible_constraints,
                "epsilon must be >= 1; the anchor tap alone has L1 mass 1");
  if (cfg.anchor_index < 0)
    throw_error(ErrorCode::invalid_argument,
                "automatic anchor selection requires the dense path; set anchor_index");
  CrossRelationSystem sys(obs, cfg.channel_len);
  const Eigen::Index a = cfg.anchor_index;
  const double budget = cfg.epsilon - 1.0;
  Projector project = [a, budget, nonneg](Eigen::VectorXd& v) {
    v(a) = 0.0;
    if (nonneg)
      project_nonneg_sum_cap(v, budget);
    else
      project_l1_ball(v, budget);
    v(a) = 1.0;
  };
  AdmmOptions opts;
  opts.max_iters = cfg.max_inner_iters;
  opts.tol = cfg.tol_inner;
  auto multiply = [&sys](const Eigen::VectorXd& v) { return sys.adjoint_apply(sys.apply(v)); };
  AdmmResult admm = admm_quadratic_matfree(
      multiply, sys.mean_diagonal(), sys.stacked_dim(),
      project, Eigen::VectorXd::Unit(sys.stacked_dim(), a), opts);

  SolverResult out;
  out.airs.channels = unstack_channels(admm.z, obs.n_mics());
  out.airs.sample_rate = obs.sample_rate;
  out.objective_trace = {admm.objective};
  out.inner_iters = admm.iters;
  out.outer_iters = 1;
  out.converged = admm.converged;
  out.epsilon_used = cfg.epsilon;
  out.constraint_report = {
      {"anchor_eq_1", std::abs(admm.z(a) - 1.0)},
      {"l1_budget", std::max(0.0, admm.z.cwiseAbs().sum() - cfg.epsilon)}};
  if (nonneg)
    out.constraint_report.push_back({"non_negativity", std::max(0.0, -admm.z.minCoeff())});
  return out;
}

}  // namespace

SolverResult tong_l2(const ObservationSet& obs, const SolverConfig& cfg) {
  // The closed form needs the eigendecomposition, so the normal matrix is
  // materialized regardless of the dense threshold.
  return detail::tong_core(build_checked(obs, cfg), cfg);
}

SolverResult anchor_l1(const ObservationSet& obs, const SolverConfig& cfg) {
  validate(cfg);
  if (obs.n_mics() * cfg.channel_len > cfg.dense_threshold && cfg.anchor_index >= 0)
    return anchor_matfree(obs, cfg, /*nonneg=*/false);
  return detail::anchor_core(build_checked(obs, cfg), cfg, /*nonneg=*/false);
}

SolverResult nonneg_anchor_l1(const ObservationSet& obs, const SolverConfig& cfg) {
  validate(cfg);
  if (obs.n_mics() * cfg.channel_len > cfg.dense_threshold && cfg.anchor_index >= 0)
    return anchor_matfree(obs, cfg, /*nonneg=*/true);
  return detail::anchor_core(build_checked(obs, cfg), cfg, /*nonneg=*/true);
}

SolverResult il1c(const ObservationSet& obs, const SolverConfig& cfg) {
  return detail::il1c_core(build_checked(obs, cfg), cfg, nullptr);
}

std::vector<double> default_epsilon_grid(const ObservationSet& obs,
                                         const SolverConfig& cfg) {
  const auto prob = build_checked(obs, cfg);
  const double mass = detail::rectified_tong_slack(prob, cfg).sum();
  std::vector<double> grid;
  for (double f : {0.5, 1.0, 2.0, 4.0, 8.0}) grid.push_back(f * mass);
  return grid;
}

CvResult cross_validate_epsilon(const ObservationSet& obs, const SolverConfig& cfg,
                                const std::vector<double>& grid, SolverKind kind) {
  validate(cfg);
  if (grid.empty())
    throw_error(ErrorCode::invalid_argument, "epsilon grid is empty");
  const int F = cfg.cv_folds;
  const Eigen::Index R = obs.length();
  const Eigen::Index L = cfg.channel_len;
  if (R / F < 2 * L)
    throw_error(ErrorCode::invalid_argument,
                "recordings too short to split into " + std::to_string(F) +
                    " segments of at least 2L samples");

  // Per-segment stacked systems over interior rows only; segment boundaries
  // do not obey the cross-relation identity under full-convolution rows.
  std::vector<detail::NormalProblem> segs;
  for (int f = 0; f < F; ++f) {
    const Eigen::Index lo = f * (R / F);
    const Eigen::Index hi = (f + 1 == F) ? R : (f + 1) * (R / F);
    ObservationSet seg;
    seg.recordings = obs.recordings.middleRows(lo, hi - lo);
    seg.sample_rate = obs.sample_rate;
    seg.noise_ratio = obs.noise_ratio;
    CrossRelationSystem sys(seg, L, RowSpan::Interior);
    detail::NormalProblem p;
    p.G = sys.normal_matrix();
    p.n_mics = obs.n_mics();
    p.channel_len = L;
    p.sample_rate = obs.sample_rate;
    segs.push_back(std::move(p));
  }

  CvResult out;
  for (double eps : grid) {
    SolverConfig fold_cfg = cfg;
    fold_cfg.epsilon = eps;
    EpsilonScore score;
    score.epsilon = eps;
    double total = 0.0;
    bool ok = true;
    for (int f = 0; f < F && ok; ++f) {
      detail::NormalProblem train;
      train.G = Eigen::MatrixXd::Zero(segs[0].G.rows(), segs[0].G.cols());
      for (int g = 0; g < F; ++g)
        if (g != f) train.G += segs[static_cast<std::size_t>(g)].G;
      train.n_mics = obs.n_mics();
      train.channel_len = L;
      train.sample_rate = obs.sample_rate;
      try {
        SolverResult r;
        switch (kind) {
          case SolverKind::Tong: r = detail::tong_core(train, fold_cfg); break;
          case SolverKind::AnchorL1: r = detail::anchor_core(train, fold_cfg, false); break;
          case SolverKind::NonnegAnchorL1:
            r = detail::anchor_core(train, fold_cfg, true);
            break;
          case SolverKind::Il1c: r = detail::il1c_core(train, fold_cfg, nullptr); break;
        }
        const Eigen::VectorXd h = stack_channels(r.airs.channels);
        total += h.dot(segs[static_cast<std::size_t>(f)].G * h);
      } catch (const Error&) {
        ok = false;
      }
    }
    score.valid = ok;
    score.mean_heldout_residual = ok ? total / F : std::numeric_limits<double>::quiet_NaN();
    out.scores.push_back(score);
  }

  bool found = false;
  double best_score = 0.0, best_eps = 0.0;
  for (const auto& s : out.scores) {
    if (!s.valid) continue;
    if (!found || s.mean_heldout_residual < best_score ||
        (s.mean_heldout_residual == best_score && s.epsilon < best_eps)) {
      found = true;
      best_score = s.mean_heldout_residual;
      best_eps = s.epsilon;
    }
  }
  if (!found)
    throw_error(ErrorCode::infeasible_constraints,
                "no epsilon in the grid produced a feasible solve");
  out.chosen_epsilon = best_eps;
  return out;
}

}  // namespace cci
