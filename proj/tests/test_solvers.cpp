#include <doctest.h>

#include <random>

#include "cci/cross_relation.hpp"
#include "cci/detail/solver_core.hpp"
#include "cci/peaks.hpp"
#include "cci/room.hpp"
#include "cci/solvers.hpp"
#include "support/qp_oracle.hpp"
#include "support/test_util.hpp"

using namespace cci;

namespace {

double subspace_error(const AirSet& estimate, const AirSet& truth) {
  Eigen::VectorXd e = stack_channels(estimate.channels);
  Eigen::VectorXd t = stack_channels(truth.channels);
  e.normalize();
  t.normalize();
  return (e - e.dot(t) * t).norm();
}

SolverConfig fast_cfg(Eigen::Index L) {
  SolverConfig cfg;
  cfg.channel_len = L;
  cfg.tol_inner = 1e-9;
  cfg.max_inner_iters = 30000;
  return cfg;
}

// Non-increasing up to tol_outer, with an absolute floor for quadratic-form
// rounding noise when the objective sits at ~0.
void check_monotone_trace(const std::vector<double>& trace, double tol_outer,
                          double scale) {
  for (std::size_t t = 1; t < trace.size(); ++t)
    CHECK(trace[t] <= trace[t - 1] + tol_outer * std::abs(trace[t - 1]) + 1e-10 * scale);
}

}  // namespace

TEST_CASE("tong_l2: unit norm, noiseless subspace recovery") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = testing::make_instance(2, 32, seed + 1, 1000.0);
    const SolverResult r = tong_l2(inst.clean, fast_cfg(inst.truth.channel_len()));
    CHECK(stack_channels(r.airs.channels).squaredNorm() ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.identifiable);
    CHECK(subspace_error(r.airs, inst.truth) <= 1e-6);
  }
}

TEST_CASE("tong_l2: common factor makes the instance non-identifiable") {
  const auto inst = testing::make_instance(2, 30, 3, 1000.0);
  // Convolve both channels with the common factor [1, -1]: the stacked
  // nullspace gains a second direction and the eigengap collapses.
  const Eigen::Index L = inst.truth.channel_len() + 1;
  AirSet tainted;
  tainted.sample_rate = inst.truth.sample_rate;
  tainted.channels.resize(L, 2);
  Eigen::VectorXd factor(2);
  factor << 1.0, -1.0;
  for (int n = 0; n < 2; ++n)
    tainted.channels.col(n) = conv_full(inst.truth.channels.col(n), factor);
  const ObservationSet obs = synthesize_observations(tainted, inst.src);

  const SolverResult r = tong_l2(obs, fast_cfg(L));
  CHECK_FALSE(r.identifiable);
}

TEST_CASE("tong_l2 is equivariant to microphone permutation") {
  const auto inst = testing::make_instance(3, 40, 11, 1200.0);
  const ObservationSet obs = testing::noisy(inst, 0.1, 4);
  ObservationSet permuted = obs;
  permuted.recordings.col(0).swap(permuted.recordings.col(2));

  const SolverConfig cfg = fast_cfg(inst.truth.channel_len());
  const SolverResult a = tong_l2(obs, cfg);
  const SolverResult b = tong_l2(permuted, cfg);
  CHECK((a.airs.channels.col(0) - b.airs.channels.col(2)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((a.airs.channels.col(2) - b.airs.channels.col(0)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((a.airs.channels.col(1) - b.airs.channels.col(1)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("anchor_l1: constraint contracts and noiseless recovery") {
  auto inst = testing::make_instance(2, 32, 21, 1000.0);

  // Rescale the truth so channel 0's largest tap is exactly 1 at the anchor.
  Eigen::Index anchor = 0;
  inst.truth.channels.col(0).maxCoeff(&anchor);
  AirSet scaled = inst.truth;
  scaled.channels /= inst.truth.channels.col(0).maxCoeff();

  SolverConfig cfg = fast_cfg(inst.truth.channel_len());
  cfg.anchor_index = anchor;
  cfg.epsilon = 1.2 * stack_channels(scaled.channels).cwiseAbs().sum();

  const SolverResult r = anchor_l1(inst.clean, cfg);
  const Eigen::VectorXd h = stack_channels(r.airs.channels);

  CHECK(r.airs.channels(anchor, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(h.cwiseAbs().sum() <= cfg.epsilon + 1e-8);
  CHECK(max_constraint_violation(r) <= 10.0 * cfg.tol_inner);
  CHECK((r.airs.channels - scaled.channels).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("anchor_l1: epsilon below 1 is infeasible") {
  const auto inst = testing::make_instance(2, 32, 22, 1000.0);
  SolverConfig cfg = fast_cfg(inst.truth.channel_len());
  cfg.epsilon = 0.5;
  try {
    (void)anchor_l1(inst.clean, cfg);
    FAIL("expected infeasible-constraints");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::infeasible_constraints);
  }
}

TEST_CASE("nonneg_anchor_l1: non-negativity and objective ordering") {
  const auto inst = testing::make_instance(2, 32, 23, 1000.0);
  const ObservationSet obs = testing::noisy(inst, 0.2, 9);
  const Eigen::Index L = inst.truth.channel_len();
  SolverConfig cfg = fast_cfg(L);
  cfg.epsilon = 8.0;

  const SolverResult nn = nonneg_anchor_l1(obs, cfg);
  CHECK(stack_channels(nn.airs.channels).minCoeff() >= -1e-10);
  CHECK(max_constraint_violation(nn) <= 10.0 * cfg.tol_inner);

  // Smaller feasible set cannot beat the sign-free anchored problem.
  const SolverResult free_sign = anchor_l1(obs, cfg);
  CHECK(nn.objective_trace.back() >= free_sign.objective_trace.back() - 1e-9);

  // Noiseless: the suitably scaled truth is feasible, so the optimum is ~0.
  SolverConfig clean_cfg = cfg;
  clean_cfg.epsilon = 30.0;
  const SolverResult clean = nonneg_anchor_l1(inst.clean, clean_cfg);
  const double scale =
      assemble_normal_matrix(inst.clean, L).trace() / static_cast<double>(2 * L);
  CHECK(clean.objective_trace.back() <= 1e-8 * scale);
}

TEST_CASE("il1c: constraints, monotone trace, direct-path recovery") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto inst = testing::make_instance(2, 32, seed + 31, 1000.0);
    const Eigen::Index L = inst.truth.channel_len();
    auto prob = detail::build_normal_problem(inst.clean, L);
    SolverConfig cfg = fast_cfg(L);

    // epsilon = 1.5x the L1 mass of the truth scaled to satisfy p'h = 1
    // against the rectified eigen initialization.
    const Eigen::MatrixXd p0 = detail::rectified_tong_slack(prob, cfg);
    double mass = 0.0;
    for (Eigen::Index n = 0; n < 2; ++n) {
      const double c = 1.0 / p0.col(n).dot(inst.truth.channels.col(n));
      mass += (c * inst.truth.channels.col(n)).sum();
    }
    cfg.epsilon = 1.5 * mass;

    const SolverResult r = il1c(inst.clean, cfg);
    const Eigen::VectorXd h = stack_channels(r.airs.channels);

    CHECK(h.minCoeff() >= -1e-10);
    CHECK(h.sum() <= cfg.epsilon + 1e-8);
    CHECK(h.cwiseAbs().sum() == doctest::Approx(h.sum()).epsilon(1e-12));
    CHECK(max_constraint_violation(r) <= 10.0 * cfg.tol_inner);

    check_monotone_trace(r.objective_trace, cfg.tol_outer,
                         prob.G.trace() / static_cast<double>(2 * L));

    // Direct-path peaks land exactly where the truth's peaks sit (the same
    // peak pipeline on both sides; an adjacent larger reflection can shadow
    // the raw direct tap in both).
    const Eigen::MatrixXd est_tdoa = estimate_tdoas(r.airs, 7);
    const Eigen::MatrixXd ref_tdoa = estimate_tdoas(inst.truth, 7);
    CHECK(est_tdoa(0, 1) == ref_tdoa(0, 1));
  }
}

TEST_CASE("il1c: inner QP objective matches the interior-point oracle") {
  const auto inst = testing::make_instance(2, 12, 41, 400.0, 150);
  const Eigen::Index L = inst.truth.channel_len();
  REQUIRE(2 * L <= 30);
  auto prob = detail::build_normal_problem(inst.clean, L);
  SolverConfig cfg = fast_cfg(L);
  cfg.max_outer_iters = 1;
  const Eigen::MatrixXd slack = detail::rectified_tong_slack(prob, cfg);
  cfg.epsilon = 8.0;

  const SolverResult r = detail::il1c_core(prob, cfg, &slack);
  const auto oracle = testing::solve_il1c_qp_oracle(prob.G, slack, cfg.epsilon);
  REQUIRE(oracle.converged);
  const double scale = std::max({1.0, r.objective_trace.back(), oracle.objective});
  CHECK(std::abs(r.objective_trace.back() - oracle.objective) <= 1e-6 * scale);
}

TEST_CASE("il1c: degenerate rectified initialization is a typed error") {
  // A normal matrix whose smallest eigenvector has an all-negative channel
  // after the global sign fix: rectification zeroes that channel.
  detail::NormalProblem prob;
  Eigen::VectorXd v(4);
  v << 0.8, 0.0, -0.6, 0.0;
  prob.G = Eigen::MatrixXd::Identity(4, 4) - v * v.transpose();
  prob.n_mics = 2;
  prob.channel_len = 2;
  prob.sample_rate = 1000.0;
  SolverConfig cfg = fast_cfg(2);
  cfg.epsilon = 10.0;
  try {
    (void)detail::il1c_core(prob, cfg, nullptr);
    FAIL("expected degenerate-initialization");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_initialization);
  }
}

TEST_CASE("il1c: epsilon below the minimum feasible mass is infeasible") {
  const auto inst = testing::make_instance(2, 32, 51, 1000.0);
  SolverConfig cfg = fast_cfg(inst.truth.channel_len());
  cfg.epsilon = 1.0;  // max-tap slack needs mass >= 2 for two channels
  try {
    (void)il1c(inst.clean, cfg);
    FAIL("expected infeasible-constraints");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::infeasible_constraints);
  }
}

TEST_CASE("il1c is equivariant to microphone permutation") {
  const auto inst = testing::make_instance(3, 32, 61, 1000.0);
  const ObservationSet obs = testing::noisy(inst, 0.05, 13);
  SolverConfig cfg = fast_cfg(inst.truth.channel_len());
  cfg.epsilon = 6.0;
  cfg.tol_outer = 1e-6;

  ObservationSet permuted = obs;
  permuted.recordings.col(0).swap(permuted.recordings.col(1));

  const SolverResult a = il1c(obs, cfg);
  const SolverResult b = il1c(permuted, cfg);
  CHECK((a.airs.channels.col(0) - b.airs.channels.col(1)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((a.airs.channels.col(1) - b.airs.channels.col(0)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((a.airs.channels.col(2) - b.airs.channels.col(2)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("every solver accepts N in {2, 3, 4, 5} unchanged") {
  for (int n_mics : {2, 3, 4, 5}) {
    const auto inst = testing::make_instance(n_mics, 24, 71 + n_mics, 750.0);
    const ObservationSet obs = testing::noisy(inst, 0.1, 2);
    SolverConfig cfg = fast_cfg(inst.truth.channel_len());
    cfg.tol_inner = 1e-7;
    cfg.max_inner_iters = 10000;
    cfg.epsilon = 3.0 * n_mics;

    CHECK(tong_l2(obs, cfg).airs.n_mics() == n_mics);
    CHECK(anchor_l1(obs, cfg).airs.n_mics() == n_mics);
    CHECK(nonneg_anchor_l1(obs, cfg).airs.n_mics() == n_mics);
    CHECK(il1c(obs, cfg).airs.n_mics() == n_mics);
  }
}

TEST_CASE("il1c: alternative initializer runs behind the config switch") {
  const auto inst = testing::make_instance(2, 32, 81, 1000.0);
  SolverConfig cfg = fast_cfg(inst.truth.channel_len());
  cfg.epsilon = 8.0;
  cfg.il1c_init = Il1cInit::NonnegAnchor;
  const SolverResult r = il1c(inst.clean, cfg);
  CHECK(r.converged);
  CHECK(max_constraint_violation(r) <= 10.0 * cfg.tol_inner);
}

TEST_CASE("matrix-free threshold path matches the dense path") {
  const auto inst = testing::make_instance(2, 24, 91, 750.0);
  const ObservationSet obs = testing::noisy(inst, 0.1, 7);
  SolverConfig dense_cfg = fast_cfg(inst.truth.channel_len());
  dense_cfg.epsilon = 5.0;
  dense_cfg.anchor_index = 3;
  SolverConfig matfree_cfg = dense_cfg;
  matfree_cfg.dense_threshold = 1;  // force the convolution-product path

  const SolverResult a = nonneg_anchor_l1(obs, dense_cfg);
  const SolverResult b = nonneg_anchor_l1(obs, matfree_cfg);
  CHECK(std::abs(a.objective_trace.back() - b.objective_trace.back()) <=
        1e-6 * std::max(1.0, a.objective_trace.back()));
}

TEST_CASE("cross_validate_epsilon: contracts") {
  const auto inst = testing::make_instance(2, 24, 101, 750.0, 480);
  const ObservationSet obs = testing::noisy(inst, 0.1, 3);
  SolverConfig cfg = fast_cfg(inst.truth.channel_len());
  cfg.tol_inner = 1e-7;
  cfg.max_inner_iters = 8000;

  SUBCASE("singleton grid returns its element") {
    const CvResult cv = cross_validate_epsilon(obs, cfg, {5.0});
    CHECK(cv.chosen_epsilon == 5.0);
    REQUIRE(cv.scores.size() == 1);
    CHECK(cv.scores[0].valid);
  }

  SUBCASE("chosen epsilon beats a huge epsilon and scores are finite") {
    const auto grid = default_epsilon_grid(obs, cfg);
    std::vector<double> extended = grid;
    extended.push_back(1e6);
    const CvResult cv = cross_validate_epsilon(obs, cfg, extended);
    double huge_score = 0.0, chosen_score = 0.0;
    for (const auto& s : cv.scores) {
      if (!s.valid) continue;
      CHECK(std::isfinite(s.mean_heldout_residual));
      CHECK(s.mean_heldout_residual >= 0.0);
      if (s.epsilon == 1e6) huge_score = s.mean_heldout_residual;
      if (s.epsilon == cv.chosen_epsilon) chosen_score = s.mean_heldout_residual;
    }
    CHECK(chosen_score <= huge_score);
  }

  SUBCASE("short recordings are rejected") {
    ObservationSet stub;
    stub.recordings = obs.recordings.topRows(6 * cfg.channel_len - 10);
    stub.sample_rate = obs.sample_rate;
    try {
      (void)cross_validate_epsilon(stub, cfg, {5.0});
      FAIL("expected invalid-argument");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_argument);
    }
  }

  SUBCASE("empty grid rejected") {
    CHECK_THROWS_AS((void)cross_validate_epsilon(obs, cfg, {}), Error);
  }
}

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.channel_len = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = SolverConfig{};
  cfg.tol_inner = 0.0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = SolverConfig{};
  cfg.anchor_index = cfg.channel_len;
  CHECK_THROWS_AS(validate(cfg), Error);
}
