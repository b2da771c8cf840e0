#include "cci/strategies.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cci/cross_relation.hpp"
#include "cci/detail/solver_core.hpp"
#include "cci/parallel.hpp"
#include "cci/rng.hpp"

namespace cci {

namespace {

using nlohmann::json;

ObservationSet select_mics(const ObservationSet& obs, const std::vector<int>& mics) {
  ObservationSet sub;
  sub.recordings.resize(obs.length(), static_cast<Eigen::Index>(mics.size()));
  for (std::size_t i = 0; i < mics.size(); ++i)
    sub.recordings.col(static_cast<Eigen::Index>(i)) = obs.recordings.col(mics[i]);
  sub.sample_rate = obs.sample_rate;
  sub.noise_ratio = obs.noise_ratio;
  return sub;
}

Eigen::VectorXd normalize_slack_column(const Eigen::VectorXd& estimate, int mic,
                                       int step_index) {
  Eigen::VectorXd p = estimate.cwiseMax(0.0);
  const double top = p.maxCoeff();
  if (top <= 0.0)
    throw_error(ErrorCode::degenerate_initialization,
                "all-zero estimate for microphone " + std::to_string(mic) +
                    " at incremental step " + std::to_string(step_index));
  return p / top;
}

}  // namespace

SolverResult incremental_il1c(const ObservationSet& obs, const StrategyConfig& cfg) {
  const int N = static_cast<int>(obs.n_mics());
  if (N < 2)
    throw_error(ErrorCode::invalid_argument, "incremental strategy needs at least 2 mics");
  if (N == 2) return il1c(obs, cfg.base);

  std::vector<int> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(cfg.mic_order_seed);
  std::shuffle(order.begin(), order.end(), rng);

  const Eigen::Index L = cfg.base.channel_len;
  std::vector<std::optional<Eigen::VectorXd>> estimates(static_cast<std::size_t>(N));
  std::vector<int> active = {order[0], order[1]};
  std::sort(active.begin(), active.end());

  json steps = json::array();
  SolverResult result;

  SolverConfig step_cfg = cfg.base;
  step_cfg.epsilon = cfg.base.epsilon * 2.0 / static_cast<double>(N);
  result = il1c(select_mics(obs, active), step_cfg);
  for (std::size_t i = 0; i < active.size(); ++i)
    estimates[static_cast<std::size_t>(active[i])] =
        result.airs.channels.col(static_cast<Eigen::Index>(i));
  steps.push_back({{"mics", active},
                   {"objective", result.objective_trace.back()},
                   {"outer_iters", result.outer_iters}});

  for (int step = 3; step <= N; ++step) {
    const int newcomer = order[static_cast<std::size_t>(step - 1)];
    active.push_back(newcomer);
    std::sort(active.begin(), active.end());

    const ObservationSet sub = select_mics(obs, active);
    step_cfg.epsilon = cfg.base.epsilon * static_cast<double>(step) / static_cast<double>(N);
    auto prob = detail::build_normal_problem(sub, L);
    const Eigen::MatrixXd fresh = detail::rectified_tong_slack(prob, step_cfg);

    Eigen::MatrixXd slack(L, static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) {
      const int mic = active[i];
      if (estimates[static_cast<std::size_t>(mic)].has_value())
        slack.col(static_cast<Eigen::Index>(i)) =
            normalize_slack_column(*estimates[static_cast<std::size_t>(mic)], mic, step);
      else
        slack.col(static_cast<Eigen::Index>(i)) = fresh.col(static_cast<Eigen::Index>(i));
    }

    result = detail::il1c_core(prob, step_cfg, &slack);
    for (std::size_t i = 0; i < active.size(); ++i)
      estimates[static_cast<std::size_t>(active[i])] =
          result.airs.channels.col(static_cast<Eigen::Index>(i));
    steps.push_back({{"mics", active},
                     {"objective", result.objective_trace.back()},
                     {"outer_iters", result.outer_iters}});
  }

  // active is now 0..N-1, so the final estimate is already in original order.
  json diag;
  diag["strategy"] = "incremental";
  diag["join_order"] = order;
  diag["steps"] = steps;
  result.diagnostics_json = diag.dump();
  return result;
}

SolverResult ensemble_il1c(const ObservationSet& obs, const StrategyConfig& cfg) {
  const int N = static_cast<int>(obs.n_mics());
  std::vector<std::pair<int, int>> pairs;
  if (cfg.pairing == Pairing::AllPairs) {
    if (N < 3)
      throw_error(ErrorCode::invalid_argument,
                  "all-pairs ensemble needs at least 3 microphones");
    for (int m = 0; m < N; ++m)
      for (int n = m + 1; n < N; ++n) pairs.emplace_back(m, n);
  } else {
    if (N < 2 || N % 2 != 0)
      throw_error(ErrorCode::invalid_argument,
                  "random matching needs an even microphone count");
    std::vector<int> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(cfg.mic_order_seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < N; i += 2) {
      int a = order[static_cast<std::size_t>(i)], b = order[static_cast<std::size_t>(i + 1)];
      pairs.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(pairs.begin(), pairs.end());
  }

  SolverConfig pair_cfg = cfg.base;
  pair_cfg.epsilon = cfg.base.epsilon * 2.0 / static_cast<double>(N);

  struct PairOutcome {
    bool ok = false;
    bool converged = false;
    double objective = 0.0;
    std::string error;
    Eigen::MatrixXd channels;  // L x 2
  };
  std::vector<PairOutcome> outcomes(pairs.size());
  parallel_for(pairs.size(), cfg.jobs, [&](std::size_t i) {
    const auto [m, n] = pairs[i];
    try {
      SolverResult r = il1c(select_mics(obs, {m, n}), pair_cfg);
      outcomes[i].ok = true;
      outcomes[i].converged = r.converged;
      outcomes[i].objective = r.objective_trace.back();
      outcomes[i].channels = r.airs.channels;
    } catch (const Error& e) {
      outcomes[i].error = e.what();
    }
  });

  const Eigen::Index L = cfg.base.channel_len;
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(L, N);
  std::vector<int> counts(static_cast<std::size_t>(N), 0);
  json pair_diag = json::array();
  int failed = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [m, n] = pairs[i];
    json entry{{"pair", {m, n}}, {"ok", outcomes[i].ok}};
    if (!outcomes[i].ok) {
      ++failed;
      entry["error"] = outcomes[i].error;
      pair_diag.push_back(entry);
      continue;
    }
    entry["objective"] = outcomes[i].objective;
    pair_diag.push_back(entry);
    const int mic_of[2] = {m, n};
    for (int side = 0; side < 2; ++side) {
      Eigen::VectorXd candidate = outcomes[i].channels.col(side);
      const double scale = cfg.candidate_norm == CandidateNorm::MaxTap
                               ? candidate.maxCoeff()
                               : candidate.sum();
      if (scale <= 0.0) continue;  // degenerate candidate, drop it
      sums.col(mic_of[side]) += candidate / scale;
      ++counts[static_cast<std::size_t>(mic_of[side])];
    }
  }

  SolverResult out;
  out.airs.channels.resize(L, N);
  out.airs.sample_rate = obs.sample_rate;
  for (int n = 0; n < N; ++n) {
    if (counts[static_cast<std::size_t>(n)] == 0)
      throw_error(ErrorCode::ensemble_failure,
                  "no surviving candidate for microphone " + std::to_string(n));
    out.airs.channels.col(n) = sums.col(n) / static_cast<double>(counts[static_cast<std::size_t>(n)]);
  }
  out.objective_trace = {cross_residual(obs, out.airs)};
  out.constraint_report = {
      {"non_negativity", std::max(0.0, -out.airs.channels.minCoeff())}};
  out.outer_iters = 1;
  out.converged = failed == 0 &&
                  std::all_of(outcomes.begin(), outcomes.end(),
                              [](const PairOutcome& o) { return !o.ok || o.converged; });
  out.epsilon_used = pair_cfg.epsilon;

  json diag;
  diag["strategy"] = "ensemble";
  diag["pairing"] = cfg.pairing == Pairing::AllPairs ? "all-pairs" : "random-matching";
  diag["candidate_norm"] = cfg.candidate_norm == CandidateNorm::MaxTap ? "max-tap" : "unit-l1";
  diag["pairs"] = pair_diag;
  diag["failed_pairs"] = failed;
  diag["candidate_counts"] = counts;
  out.diagnostics_json = diag.dump();
  return out;
}

}  // namespace cci
