// Monte-Carlo benchmark harness: sweeps (signal, noise ratio, microphone
// count) cells with Z seeded trials each, scores peak recovery with the two
// error metrics, and reports improvement statistics of N > 2 over the N = 2
// baseline.
#ifndef CCI_BENCH_HPP_
#define CCI_BENCH_HPP_

#include <string>
#include <vector>

#include "cci/peaks.hpp"
#include "cci/solvers.hpp"
#include "cci/types.hpp"

namespace cci {

struct ExperimentConfig {
  std::vector<std::string> signals{"white", "pink"};  // "white" | "pink" | "file:<path>"
  std::vector<double> s_values{0.01, 0.1, 0.2, 0.5, 1.0};
  std::vector<int> n_mics_values{2, 3, 4, 5, 10};
  int z_trials = 50;
  std::string solver = "il1c";  // tong | anchor-l1 | nn-anchor-l1 | il1c |
                                // il1c-incremental | il1c-ensemble
  RoomConfig room;
  SolverConfig solver_cfg;
  bool epsilon_auto = true;   // cross-validate epsilon per trial
  double reference_s = 1.0;   // noise ratio used for the improvement tables
  Eigen::Index source_len = 0;  // 0: 12 * channel_len
  std::uint64_t master_seed = 0;
  int jobs = 1;
  int match_threshold = 20;   // samples
  int peaks_per_channel = 7;
  double peak_rel_floor = 0.05;
};

void validate(const ExperimentConfig& cfg);

struct TrialRow {
  std::string signal;
  double s = 0.0;
  int n_mics = 0;
  int trial = 0;
  int matched = 0;
  double offset_sum = 0.0;
  int truth_peak_count = 0;  // 7 * N by protocol
  double ppm = 0.0;          // per-trial mismatch term
  double pup = 0.0;          // per-trial unmatched fraction
  bool failed = false;
  std::string error;
};

struct Cell {
  std::string signal;
  double s = 0.0;
  int n_mics = 0;
  MetricPair metrics;
  int z_trials = 0;
  int failed_trials = 0;
  bool valid = false;  // false when more than 20% of trials failed
};

struct Improvement {
  std::string signal;
  std::string metric;  // "a_ppm" | "a_pup"
  double delta_avg = 0.0;
  double delta_oracle_pct = 0.0;
  int oracle_n = 0;
  bool oracle_defined = false;  // false when the N = 2 baseline metric is 0
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string artifact_version;
  std::vector<Cell> cells;       // (signal, s asc, n asc) order
  std::vector<TrialRow> raw;     // (signal, s asc, n asc, trial) order
  std::vector<Improvement> improvements;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

enum class Metric { Ppm, Pup };

// Mean over the N > 2 cells at the reference noise ratio of
// metric(N = 2) - metric(N); positive means larger arrays helped.
double delta_avg(const std::vector<Cell>& signal_cells, Metric metric,
                 double reference_s);

// Relative improvement of the best N > 2 cell over the N = 2 baseline, in
// percent, with the chosen N (ties toward smaller N). defined is false when
// the baseline metric is 0 and the relative change has no meaning.
struct OracleImprovement {
  double percent = 0.0;
  int chosen_n = 0;
  bool defined = false;
};
OracleImprovement delta_oracle(const std::vector<Cell>& signal_cells, Metric metric,
                               double reference_s);

enum class ReportFormat { Csv, Json, Markdown };

// csv -> cells.csv + raw_trials.csv; json -> report.json; markdown ->
// tables.md. The directory is created if missing.
void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::string& out_dir);

ExperimentReport load_report_json(const std::string& path);

std::string experiment_config_to_text(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_text(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Small sweep sized for a laptop: Z = 10, N in {2, 3, 4}, s in {0.01, 1},
// white + pink, 2 kHz room grid.
ExperimentConfig desk_preset();
// Full sweep with the table structure of the reference protocol.
ExperimentConfig paper_shape_preset();

}  // namespace cci

#endif  // CCI_BENCH_HPP_
