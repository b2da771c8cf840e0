// ccitdoa: simulate rooms, identify impulse responses blindly from
// multi-microphone recordings, estimate TDOAs, and run the Monte-Carlo
// benchmark sweeps.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include "cci/bench.hpp"
#include "cci/peaks.hpp"
#include "cci/room.hpp"
#include "cci/serialize.hpp"
#include "cci/signal.hpp"
#include "cci/strategies.hpp"
#include "cci/version.hpp"

namespace {

namespace fs = std::filesystem;

void print_matrix(const Eigen::MatrixXd& m, const std::string& title) {
  std::cout << title << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      std::printf("%s%8.1f", c ? " " : "  ", m(r, c));
    std::printf("\n");
  }
}

std::uint64_t seed_or_entropy(const std::optional<std::uint64_t>& seed) {
  if (seed.has_value()) return *seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct RoomFlags {
  std::vector<double> dims{5.0, 4.0, 3.0};
  double reflection = 0.8;
  double speed_of_sound = 343.0;
  double sample_rate = 16000.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--room-dims", dims, "Room dimensions x y z in meters")
        ->expected(3)
        ->capture_default_str();
    cmd->add_option("--reflection", reflection, "Wall reflection coefficient")
        ->capture_default_str();
    cmd->add_option("--speed-of-sound", speed_of_sound, "Speed of sound in m/s")
        ->capture_default_str();
    cmd->add_option("--fs", sample_rate, "Sample rate in Hz")->capture_default_str();
  }

  cci::RoomConfig to_config() const {
    cci::RoomConfig room;
    room.dimensions = Eigen::Vector3d(dims[0], dims[1], dims[2]);
    room.reflection_coeff = reflection;
    room.speed_of_sound = speed_of_sound;
    room.sample_rate = sample_rate;
    return room;
  }
};

cci::SourceSignal make_source(const std::string& spec, Eigen::Index length,
                              std::uint64_t seed, double sample_rate) {
  if (spec == "white") return cci::gen_white_noise(length, seed, sample_rate);
  if (spec == "pink") return cci::gen_pink_noise(length, seed, sample_rate);
  if (spec.rfind("file:", 0) == 0) return cci::load_audio_file(spec.substr(5));
  cci::throw_error(cci::ErrorCode::invalid_argument,
                   "unknown signal spec '" + spec + "' (white | pink | file:<path>)");
}

int cmd_simulate(const RoomFlags& room_flags, const std::string& signal, int n_mics,
                 double s, const std::optional<std::uint64_t>& seed_flag,
                 Eigen::Index source_len, Eigen::Index channel_len,
                 const std::string& out_dir) {
  const cci::RoomConfig room = room_flags.to_config();
  const std::uint64_t seed = seed_or_entropy(seed_flag);

  const cci::Geometry geom = cci::random_geometry(room, n_mics, seed);
  Eigen::Index L = channel_len;
  if (L <= 0) L = cci::min_channel_len(room, geom);
  const cci::AirSet airs = cci::image_method_air(room, geom, L);
  if (source_len <= 0) source_len = 12 * L;
  const cci::SourceSignal src = make_source(signal, source_len, seed + 1, room.sample_rate);
  const cci::ObservationSet clean = cci::synthesize_observations(airs, src);
  cci::NoiseSpec noise;
  noise.ratio_s = s;
  noise.seed = seed + 2;
  const cci::ObservationSet obs = cci::inject_noise(clean, noise);

  fs::create_directories(out_dir);
  cci::save_airs_binary(airs, (fs::path(out_dir) / "airs.bin").string());
  cci::save_channels_csv(airs.channels, (fs::path(out_dir) / "airs.csv").string());
  cci::save_observations_binary(obs, (fs::path(out_dir) / "observations.bin").string());
  cci::save_channels_csv(obs.recordings,
                         (fs::path(out_dir) / "observations.csv").string());
  const Eigen::MatrixXd tdoa = cci::ground_truth_tdoas(airs);
  cci::save_matrix_csv(tdoa, (fs::path(out_dir) / "tdoa.csv").string());

  std::cout << "simulated " << n_mics << " microphones, channel length " << L
            << ", source '" << signal << "', s = " << s << ", seed = " << seed << "\n";
  print_matrix(tdoa, "ground-truth TDOA matrix (samples):");
  std::cout << "wrote " << out_dir << "/{airs,observations}.{bin,csv} and tdoa.csv\n";
  return 0;
}

int cmd_solve(const std::string& in_dir, const std::string& solver_id,
              const std::string& epsilon_arg, Eigen::Index channel_len,
              const std::optional<std::uint64_t>& seed_flag, int jobs,
              const std::string& config_path, const std::string& out_dir) {
  const fs::path in(in_dir);
  const cci::ObservationSet obs =
      cci::load_observations_binary((in / "observations.bin").string());

  cci::SolverConfig cfg;
  if (!config_path.empty()) cfg = cci::load_solver_config(config_path);
  if (channel_len > 0) {
    cfg.channel_len = channel_len;
  } else if (config_path.empty()) {
    const fs::path truth = in / "airs.bin";
    if (!fs::exists(truth))
      cci::throw_error(cci::ErrorCode::invalid_argument,
                       "no --channel-len given and no airs.bin to infer it from");
    cfg.channel_len = cci::load_airs_binary(truth.string()).channel_len();
  }
  cfg.seed = seed_or_entropy(seed_flag);

  const bool uses_epsilon = solver_id != "tong";
  if (uses_epsilon) {
    if (epsilon_arg == "auto") {
      const auto grid = cci::default_epsilon_grid(obs, cfg);
      cci::SolverKind kind = cci::SolverKind::Il1c;
      if (solver_id == "anchor-l1") kind = cci::SolverKind::AnchorL1;
      if (solver_id == "nn-anchor-l1") kind = cci::SolverKind::NonnegAnchorL1;
      const auto cv = cci::cross_validate_epsilon(obs, cfg, grid, kind);
      cfg.epsilon = cv.chosen_epsilon;
      std::cout << "cross-validated epsilon = " << cfg.epsilon << "\n";
    } else {
      cfg.epsilon = std::strtod(epsilon_arg.c_str(), nullptr);
      if (cfg.epsilon <= 0.0)
        cci::throw_error(cci::ErrorCode::invalid_argument,
                         "--epsilon must be 'auto' or a positive number");
    }
  }

  cci::SolverResult result;
  if (solver_id == "tong") {
    result = cci::tong_l2(obs, cfg);
  } else if (solver_id == "anchor-l1") {
    result = cci::anchor_l1(obs, cfg);
  } else if (solver_id == "nn-anchor-l1") {
    result = cci::nonneg_anchor_l1(obs, cfg);
  } else if (solver_id == "il1c") {
    result = cci::il1c(obs, cfg);
  } else {
    cci::StrategyConfig strat;
    strat.base = cfg;
    strat.mic_order_seed = cfg.seed;
    strat.jobs = jobs;
    result = solver_id == "il1c-incremental" ? cci::incremental_il1c(obs, strat)
                                             : cci::ensemble_il1c(obs, strat);
  }

  fs::create_directories(out_dir);
  cci::save_airs_binary(result.airs, (fs::path(out_dir) / "estimated_airs.bin").string());
  cci::save_channels_csv(result.airs.channels,
                         (fs::path(out_dir) / "estimated_airs.csv").string());
  cci::save_solver_diagnostics(result,
                               (fs::path(out_dir) / "solve_diagnostics.json").string());

  std::cout << "solver " << solver_id << ": " << (result.converged ? "converged" : "hit iteration cap")
            << " after " << result.outer_iters << " outer / " << result.inner_iters
            << " inner iterations\n";
  if (solver_id == "tong")
    std::cout << "smallest eigenvalue " << result.smallest_eigenvalue << ", second "
              << result.second_eigenvalue << ", identifiable: "
              << (result.identifiable ? "yes" : "no") << "\n";
  std::cout << "constraint report:\n";
  for (const auto& c : result.constraint_report)
    std::printf("  %-18s max violation %.3e\n", c.name.c_str(), c.violation);
  print_matrix(cci::estimate_tdoas(result.airs, 7), "estimated TDOA matrix (samples):");
  std::cout << "wrote " << out_dir << "/estimated_airs.{bin,csv} and solve_diagnostics.json\n";
  return 0;
}

int cmd_benchmark(const std::string& config_path, const std::string& preset,
                  const std::optional<std::uint64_t>& seed_flag, int jobs,
                  const std::string& out_dir) {
  if (!seed_flag.has_value())
    cci::throw_error(cci::ErrorCode::invalid_argument,
                     "benchmark requires --seed for reproducibility");
  cci::ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = cci::load_experiment_config(config_path);
  } else if (preset == "desk") {
    cfg = cci::desk_preset();
  } else if (preset == "paper-shape") {
    cfg = cci::paper_shape_preset();
  } else if (!preset.empty()) {
    cci::throw_error(cci::ErrorCode::invalid_argument,
                     "unknown preset '" + preset + "' (desk | paper-shape)");
  }
  cfg.master_seed = *seed_flag;
  cfg.jobs = jobs;

  const cci::ExperimentReport report = cci::run_experiment(cfg);
  cci::emit_report(report, cci::ReportFormat::Json, out_dir);
  cci::emit_report(report, cci::ReportFormat::Csv, out_dir);
  cci::emit_report(report, cci::ReportFormat::Markdown, out_dir);

  std::cout << "benchmark complete: " << report.cells.size() << " cells, "
            << report.raw.size() << " trials\n";
  if (!report.improvements.empty()) {
    std::cout << "improvements over N = 2 at s = " << cfg.reference_s << ":\n";
    std::printf("  %-12s %-6s %12s %16s\n", "signal", "metric", "delta_avg", "delta_oracle");
    for (const auto& imp : report.improvements) {
      if (imp.oracle_defined)
        std::printf("  %-12s %-6s %+12.4f %+13.1f%% N=%d\n", imp.signal.c_str(),
                    imp.metric.c_str(), imp.delta_avg, imp.delta_oracle_pct, imp.oracle_n);
      else
        std::printf("  %-12s %-6s %+12.4f %16s\n", imp.signal.c_str(), imp.metric.c_str(),
                    imp.delta_avg, "undefined");
    }
  }
  std::cout << "wrote " << out_dir << "/{report.json,cells.csv,raw_trials.csv,tables.md}\n";
  return 0;
}

int cmd_metrics(const std::string& truth_path, const std::string& est_path,
                double threshold, int max_peaks, double rel_floor,
                const std::string& out_csv) {
  const cci::AirSet truth = cci::load_airs_binary(truth_path);
  const cci::AirSet est = cci::load_airs_binary(est_path);
  if (truth.n_mics() != est.n_mics())
    cci::throw_error(cci::ErrorCode::invalid_argument,
                     "truth and estimate have different channel counts");

  std::vector<cci::MatchReport> reports;
  for (Eigen::Index n = 0; n < truth.n_mics(); ++n) {
    // The truth file holds the simulated tap train; peaks are only extracted
    // from the estimate.
    const auto t = cci::tap_train(truth.channels.col(n), max_peaks);
    const auto e = cci::find_peaks(est.channels.col(n), max_peaks, rel_floor);
    reports.push_back(cci::match_peaks(t, e, threshold));
  }
  const int k_gt = max_peaks * static_cast<int>(truth.n_mics());
  const cci::MetricPair m = cci::compute_metrics({reports}, k_gt);

  std::printf("A_PPM = %.6f samples\nA_PUP = %.6f\n", m.a_ppm, m.a_pup);
  for (std::size_t n = 0; n < reports.size(); ++n)
    std::printf("channel %zu: %zu matched, %d unmatched truth peaks\n", n,
                reports[n].matched_pairs.size(), reports[n].unmatched_truth_count);
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) cci::throw_error(cci::ErrorCode::io_error, "cannot write " + out_csv);
    out << "trial,channel,metric,value\n";
    for (std::size_t n = 0; n < reports.size(); ++n) {
      out << "0," << n << ",matched," << reports[n].matched_pairs.size() << "\n";
      out << "0," << n << ",unmatched_truth," << reports[n].unmatched_truth_count << "\n";
    }
    out << "0,all,a_ppm," << cci::format_double(m.a_ppm) << "\n";
    out << "0,all,a_pup," << cci::format_double(m.a_pup) << "\n";
    std::cout << "wrote " << out_csv << "\n";
  }
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& format,
               const std::string& out_dir) {
  const cci::ExperimentReport report = cci::load_report_json(in_path);
  cci::ReportFormat fmt;
  if (format == "csv") fmt = cci::ReportFormat::Csv;
  else if (format == "json") fmt = cci::ReportFormat::Json;
  else if (format == "markdown") fmt = cci::ReportFormat::Markdown;
  else
    cci::throw_error(cci::ErrorCode::invalid_argument,
                     "unknown format '" + format + "' (csv | json | markdown)");
  cci::emit_report(report, fmt, out_dir);
  std::cout << "re-emitted " << format << " into " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind multi-microphone impulse-response and TDOA estimation"};
  app.set_version_flag("--version", cci::kArtifactVersion);
  app.require_subcommand(1);

  const char* env_out = std::getenv("CCITDOA_OUT_DIR");
  const std::string default_out = env_out ? env_out : "";

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate AIRs and noisy observations");
  RoomFlags sim_room;
  sim_room.attach(sim);
  std::string sim_signal = "white";
  int sim_n_mics = 2;
  double sim_s = 0.0;
  std::optional<std::uint64_t> sim_seed;
  Eigen::Index sim_source_len = 0, sim_channel_len = 0;
  std::string sim_out = default_out;
  sim->add_option("--signal", sim_signal, "white | pink | file:<path>")
      ->capture_default_str();
  sim->add_option("--n-mics", sim_n_mics, "Number of microphones")->capture_default_str();
  sim->add_option("--s", sim_s, "Noise-to-signal ratio")->capture_default_str();
  sim->add_option("--seed", sim_seed, "RNG seed (default: entropy)");
  sim->add_option("--source-len", sim_source_len,
                  "Source length in samples (0: 12x channel length)")
      ->capture_default_str();
  sim->add_option("--channel-len", sim_channel_len,
                  "Channel length in samples (0: smallest that fits all delays)")
      ->capture_default_str();
  auto* sim_out_opt = sim->add_option("--out", sim_out, "Output directory");
  if (default_out.empty()) sim_out_opt->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Estimate AIRs from recorded observations");
  std::string solve_in, solve_solver = "il1c", solve_epsilon = "auto", solve_cfg_path;
  Eigen::Index solve_channel_len = 0;
  std::optional<std::uint64_t> solve_seed;
  int solve_jobs = 1;
  std::string solve_out = default_out;
  solve->add_option("--in", solve_in, "Directory with observations.bin")->required();
  solve->add_option("--solver", solve_solver,
                    "tong | anchor-l1 | nn-anchor-l1 | il1c | il1c-incremental | il1c-ensemble")
      ->check(CLI::IsMember({"tong", "anchor-l1", "nn-anchor-l1", "il1c",
                             "il1c-incremental", "il1c-ensemble"}))
      ->capture_default_str();
  solve->add_option("--epsilon", solve_epsilon, "L1 budget: 'auto' cross-validates")
      ->capture_default_str();
  solve->add_option("--channel-len", solve_channel_len,
                    "Channel length (0: infer from airs.bin in --in)")
      ->capture_default_str();
  solve->add_option("--config", solve_cfg_path, "Solver config file (key = value)");
  solve->add_option("--seed", solve_seed, "RNG seed (default: entropy)");
  solve->add_option("--jobs", solve_jobs, "Concurrent pair solves for the ensemble")
      ->capture_default_str();
  auto* solve_out_opt = solve->add_option("--out", solve_out, "Output directory");
  if (default_out.empty()) solve_out_opt->required();

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Run the Monte-Carlo benchmark");
  std::string bench_cfg_path, bench_preset, bench_out = default_out;
  std::optional<std::uint64_t> bench_seed;
  int bench_jobs = 1;
  bench->add_option("--config", bench_cfg_path, "Experiment config file");
  bench->add_option("--preset", bench_preset, "desk | paper-shape");
  bench->add_option("--seed", bench_seed, "Master seed (required)");
  bench->add_option("--jobs", bench_jobs, "Worker count for trials")->capture_default_str();
  auto* bench_out_opt = bench->add_option("--out", bench_out, "Output directory");
  if (default_out.empty()) bench_out_opt->required();

  // metrics
  auto* met = app.add_subcommand("metrics", "Score an estimate against ground truth");
  std::string met_truth, met_est, met_out;
  double met_threshold = 20.0, met_floor = 0.05;
  int met_peaks = 7;
  met->add_option("--truth", met_truth, "Ground-truth airs.bin")->required();
  met->add_option("--est", met_est, "Estimated airs.bin")->required();
  met->add_option("--threshold", met_threshold, "Match threshold in samples")
      ->capture_default_str();
  met->add_option("--max-peaks", met_peaks, "Peaks per channel")->capture_default_str();
  met->add_option("--rel-floor", met_floor, "Relative amplitude floor")
      ->capture_default_str();
  met->add_option("--out", met_out, "Optional CSV output path");

  // report
  auto* rep = app.add_subcommand("report", "Re-emit a saved report.json");
  std::string rep_in, rep_format = "markdown", rep_out = default_out;
  rep->add_option("--in", rep_in, "Path to report.json")->required();
  rep->add_option("--format", rep_format, "csv | json | markdown")->capture_default_str();
  auto* rep_out_opt = rep->add_option("--out", rep_out, "Output directory");
  if (default_out.empty()) rep_out_opt->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion")
      return app.exit(e);
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(sim_room, sim_signal, sim_n_mics, sim_s, sim_seed,
                          sim_source_len, sim_channel_len, sim_out);
    if (solve->parsed())
      return cmd_solve(solve_in, solve_solver, solve_epsilon, solve_channel_len,
                       solve_seed, solve_jobs, solve_cfg_path, solve_out);
    if (bench->parsed())
      return cmd_benchmark(bench_cfg_path, bench_preset, bench_seed, bench_jobs, bench_out);
    if (met->parsed())
      return cmd_metrics(met_truth, met_est, met_threshold, met_peaks, met_floor, met_out);
    if (rep->parsed()) return cmd_report(rep_in, rep_format, rep_out);
  } catch (const cci::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
