#include "cci/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cci/parallel.hpp"
#include "cci/rng.hpp"
#include "cci/room.hpp"
#include "cci/serialize.hpp"
#include "cci/signal.hpp"
#include "cci/strategies.hpp"
#include "cci/version.hpp"

namespace cci {

namespace {

using nlohmann::json;

const std::vector<std::string> kSolverIds = {
    "tong", "anchor-l1", "nn-anchor-l1", "il1c", "il1c-incremental", "il1c-ensemble"};

bool solver_uses_epsilon(const std::string& id) { return id != "tong"; }

SolverKind cv_kind_for(const std::string& id) {
  if (id == "anchor-l1") return SolverKind::AnchorL1;
  if (id == "nn-anchor-l1") return SolverKind::NonnegAnchorL1;
  return SolverKind::Il1c;
}

std::string sanitize_csv(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  if (cfg.z_trials < 1)
    throw_error(ErrorCode::invalid_argument, "z_trials must be >= 1");
  if (cfg.signals.empty() || cfg.s_values.empty() || cfg.n_mics_values.empty())
    throw_error(ErrorCode::invalid_argument, "signals, s_values and n_mics_values must be non-empty");
  for (double s : cfg.s_values)
    if (s < 0.0) throw_error(ErrorCode::invalid_argument, "noise ratios must be >= 0");
  for (int n : cfg.n_mics_values)
    if (n < 2) throw_error(ErrorCode::invalid_argument, "microphone counts must be >= 2");
  if (std::find(kSolverIds.begin(), kSolverIds.end(), cfg.solver) == kSolverIds.end())
    throw_error(ErrorCode::invalid_argument, "unknown solver id: " + cfg.solver);
  if (cfg.match_threshold < 0)
    throw_error(ErrorCode::invalid_argument, "match threshold must be >= 0");
  if (cfg.peaks_per_channel < 1)
    throw_error(ErrorCode::invalid_argument, "peaks_per_channel must be >= 1");
  validate(cfg.room);
  validate(cfg.solver_cfg);
}

namespace {

struct TrialKey {
  std::string signal;
  double s;
  int n_mics;
  int trial;
};

SourceSignal make_source(const ExperimentConfig& cfg, const std::string& label,
                         std::uint64_t seed,
                         const std::map<std::string, SourceSignal>& file_cache) {
  const Eigen::Index len =
      cfg.source_len > 0 ? cfg.source_len : 12 * cfg.solver_cfg.channel_len;
  if (label == "white") return gen_white_noise(len, seed, cfg.room.sample_rate);
  if (label == "pink") return gen_pink_noise(len, seed, cfg.room.sample_rate);
  return file_cache.at(label);
}

TrialRow run_trial(const ExperimentConfig& cfg, const TrialKey& key,
                   const std::map<std::string, SourceSignal>& file_cache) {
  TrialRow row;
  row.signal = key.signal;
  row.s = key.s;
  row.n_mics = key.n_mics;
  row.trial = key.trial;
  row.truth_peak_count = cfg.peaks_per_channel * key.n_mics;
  try {
    SeedHasher h;
    h.mix(cfg.master_seed).mix(key.signal).mix(key.s).mix(key.n_mics).mix(key.trial);
    const std::uint64_t trial_seed = h.finish();
    const std::uint64_t geom_seed = substream_seed(trial_seed, 1);
    const std::uint64_t signal_seed = substream_seed(trial_seed, 2);
    const std::uint64_t noise_seed = substream_seed(trial_seed, 3);
    const std::uint64_t order_seed = substream_seed(trial_seed, 4);

    const Geometry geom = random_geometry(cfg.room, key.n_mics, geom_seed);
    // Re-reference the truth to its exact support: the common lead is
    // unobservable blindly, and the solvers need the exact channel order.
    const AirSet truth =
        trim_to_support(image_method_air(cfg.room, geom, cfg.solver_cfg.channel_len));
    const SourceSignal src = make_source(cfg, key.signal, signal_seed, file_cache);
    const ObservationSet clean = synthesize_observations(truth, src);
    NoiseSpec noise;
    noise.ratio_s = key.s;
    noise.seed = noise_seed;
    const ObservationSet obs = inject_noise(clean, noise);

    SolverConfig scfg = cfg.solver_cfg;
    scfg.channel_len = truth.channel_len();
    scfg.seed = trial_seed;
    if (solver_uses_epsilon(cfg.solver) && cfg.epsilon_auto) {
      const auto grid = default_epsilon_grid(obs, scfg);
      scfg.epsilon = cross_validate_epsilon(obs, scfg, grid, cv_kind_for(cfg.solver))
                         .chosen_epsilon;
    }

    SolverResult est;
    if (cfg.solver == "tong") {
      est = tong_l2(obs, scfg);
    } else if (cfg.solver == "anchor-l1") {
      est = anchor_l1(obs, scfg);
    } else if (cfg.solver == "nn-anchor-l1") {
      est = nonneg_anchor_l1(obs, scfg);
    } else if (cfg.solver == "il1c") {
      est = il1c(obs, scfg);
    } else {
      StrategyConfig strat;
      strat.base = scfg;
      strat.mic_order_seed = order_seed;
      est = cfg.solver == "il1c-incremental" ? incremental_il1c(obs, strat)
                                             : ensemble_il1c(obs, strat);
    }

    std::vector<MatchReport> reports;
    for (Eigen::Index n = 0; n < truth.n_mics(); ++n) {
      // Ground truth peaks are the simulated arrivals themselves; the peak
      // finder only runs on the estimate.
      const PeakList truth_peaks =
          tap_train(truth.channels.col(n), cfg.peaks_per_channel);
      const PeakList est_peaks =
          find_peaks(est.airs.channels.col(n), cfg.peaks_per_channel, cfg.peak_rel_floor);
      reports.push_back(match_peaks(truth_peaks, est_peaks,
                                    static_cast<double>(cfg.match_threshold)));
    }
    for (const auto& rep : reports) {
      row.matched += static_cast<int>(rep.matched_pairs.size());
      for (const auto& m : rep.matched_pairs) row.offset_sum += m.offset;
    }
    const MetricPair metrics = compute_metrics({reports}, row.truth_peak_count);
    row.ppm = metrics.a_ppm;
    row.pup = metrics.a_pup;
  } catch (const Error& e) {
    row.failed = true;
    row.error = e.what();
  }
  return row;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);

  std::map<std::string, SourceSignal> file_cache;
  for (const auto& label : cfg.signals) {
    if (label == "white" || label == "pink") continue;
    if (label.rfind("file:", 0) != 0)
      throw_error(ErrorCode::invalid_argument, "unknown signal spec: " + label);
    SourceSignal s = load_audio_file(label.substr(5));
    if (s.sample_rate != cfg.room.sample_rate)
      throw_error(ErrorCode::invalid_argument,
                  "audio file sample rate does not match the room sample rate");
    file_cache.emplace(label, std::move(s));
  }

  std::vector<double> s_sorted = cfg.s_values;
  std::sort(s_sorted.begin(), s_sorted.end());
  std::vector<int> n_sorted = cfg.n_mics_values;
  std::sort(n_sorted.begin(), n_sorted.end());

  std::vector<TrialKey> keys;
  for (const auto& signal : cfg.signals)
    for (double s : s_sorted)
      for (int n : n_sorted)
        for (int t = 0; t < cfg.z_trials; ++t) keys.push_back({signal, s, n, t});

  std::vector<TrialRow> rows(keys.size());
  parallel_for(keys.size(), cfg.jobs,
               [&](std::size_t i) { rows[i] = run_trial(cfg, keys[i], file_cache); });

  ExperimentReport report;
  report.config = cfg;
  report.artifact_version = kArtifactVersion;
  report.raw = std::move(rows);

  // Aggregate cells in raw order; the fold order is fixed so reruns and
  // different worker counts produce identical bytes.
  for (std::size_t i = 0; i < keys.size(); i += static_cast<std::size_t>(cfg.z_trials)) {
    Cell cell;
    cell.signal = keys[i].signal;
    cell.s = keys[i].s;
    cell.n_mics = keys[i].n_mics;
    cell.z_trials = cfg.z_trials;
    double ppm = 0.0, pup = 0.0;
    int valid = 0;
    for (int t = 0; t < cfg.z_trials; ++t) {
      const TrialRow& row = report.raw[i + static_cast<std::size_t>(t)];
      if (row.failed) {
        ++cell.failed_trials;
        continue;
      }
      ppm += row.ppm;
      pup += row.pup;
      ++valid;
    }
    cell.valid = cell.failed_trials * 5 <= cfg.z_trials;  // <= 20% failures
    if (valid > 0) {
      cell.metrics.a_ppm = ppm / valid;
      cell.metrics.a_pup = pup / valid;
    }
    report.cells.push_back(cell);
  }

  // Improvement statistics per signal at the reference noise ratio, when the
  // N = 2 baseline is available.
  const bool has_baseline =
      std::find(cfg.n_mics_values.begin(), cfg.n_mics_values.end(), 2) !=
      cfg.n_mics_values.end();
  const bool has_reference =
      std::find(cfg.s_values.begin(), cfg.s_values.end(), cfg.reference_s) !=
      cfg.s_values.end();
  if (has_baseline && has_reference && cfg.n_mics_values.size() > 1) {
    for (const auto& signal : cfg.signals) {
      std::vector<Cell> signal_cells;
      for (const auto& c : report.cells)
        if (c.signal == signal) signal_cells.push_back(c);
      for (Metric metric : {Metric::Ppm, Metric::Pup}) {
        Improvement imp;
        imp.signal = signal;
        imp.metric = metric == Metric::Ppm ? "a_ppm" : "a_pup";
        imp.delta_avg = delta_avg(signal_cells, metric, cfg.reference_s);
        const OracleImprovement oracle = delta_oracle(signal_cells, metric, cfg.reference_s);
        imp.delta_oracle_pct = oracle.percent;
        imp.oracle_n = oracle.chosen_n;
        imp.oracle_defined = oracle.defined;
        report.improvements.push_back(imp);
      }
    }
  }
  return report;
}

namespace {

double metric_of(const Cell& c, Metric m) {
  return m == Metric::Ppm ? c.metrics.a_ppm : c.metrics.a_pup;
}

std::map<int, double> reference_row(const std::vector<Cell>& cells, Metric metric,
                                    double reference_s) {
  std::map<int, double> by_n;
  for (const auto& c : cells)
    if (c.s == reference_s && c.valid) by_n[c.n_mics] = metric_of(c, metric);
  return by_n;
}

}  // namespace

double delta_avg(const std::vector<Cell>& signal_cells, Metric metric,
                 double reference_s) {
  const auto by_n = reference_row(signal_cells, metric, reference_s);
  const auto base = by_n.find(2);
  if (base == by_n.end())
    throw_error(ErrorCode::invalid_argument, "missing N = 2 baseline cell");
  double sum = 0.0;
  int count = 0;
  for (const auto& [n, value] : by_n) {
    if (n == 2) continue;
    sum += base->second - value;
    ++count;
  }
  if (count == 0)
    throw_error(ErrorCode::invalid_argument, "no N > 2 cells at the reference noise ratio");
  return sum / count;
}

OracleImprovement delta_oracle(const std::vector<Cell>& signal_cells, Metric metric,
                               double reference_s) {
  const auto by_n = reference_row(signal_cells, metric, reference_s);
  const auto base = by_n.find(2);
  if (base == by_n.end())
    throw_error(ErrorCode::invalid_argument, "missing N = 2 baseline cell");
  OracleImprovement out;
  bool found = false;
  double best = 0.0;
  for (const auto& [n, value] : by_n) {  // ascending N: ties keep the smaller
    if (n == 2) continue;
    if (!found || value < best) {
      found = true;
      best = value;
      out.chosen_n = n;
    }
  }
  if (!found)
    throw_error(ErrorCode::invalid_argument, "no N > 2 cells at the reference noise ratio");
  if (base->second == 0.0) {
    out.defined = false;
    return out;
  }
  out.defined = true;
  out.percent = 100.0 * (base->second - best) / base->second;
  return out;
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["signals"] = cfg.signals;
  j["s_values"] = cfg.s_values;
  j["n_mics_values"] = cfg.n_mics_values;
  j["z_trials"] = cfg.z_trials;
  j["solver"] = cfg.solver;
  j["epsilon_auto"] = cfg.epsilon_auto;
  j["reference_s"] = cfg.reference_s;
  j["source_len"] = cfg.source_len;
  j["master_seed"] = cfg.master_seed;
  j["jobs"] = cfg.jobs;
  j["match_threshold"] = cfg.match_threshold;
  j["peaks_per_channel"] = cfg.peaks_per_channel;
  j["peak_rel_floor"] = cfg.peak_rel_floor;
  j["room"] = {{"dimensions", {cfg.room.dimensions(0), cfg.room.dimensions(1), cfg.room.dimensions(2)}},
               {"reflection_coeff", cfg.room.reflection_coeff},
               {"speed_of_sound", cfg.room.speed_of_sound},
               {"sample_rate", cfg.room.sample_rate}};
  j["solver_cfg"] = solver_config_to_text(cfg.solver_cfg);
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.signals = j.at("signals").get<std::vector<std::string>>();
  cfg.s_values = j.at("s_values").get<std::vector<double>>();
  cfg.n_mics_values = j.at("n_mics_values").get<std::vector<int>>();
  cfg.z_trials = j.at("z_trials").get<int>();
  cfg.solver = j.at("solver").get<std::string>();
  cfg.epsilon_auto = j.at("epsilon_auto").get<bool>();
  cfg.reference_s = j.at("reference_s").get<double>();
  cfg.source_len = j.at("source_len").get<Eigen::Index>();
  cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  cfg.jobs = j.at("jobs").get<int>();
  cfg.match_threshold = j.at("match_threshold").get<int>();
  cfg.peaks_per_channel = j.at("peaks_per_channel").get<int>();
  cfg.peak_rel_floor = j.at("peak_rel_floor").get<double>();
  const auto& room = j.at("room");
  cfg.room.dimensions = Eigen::Vector3d(room.at("dimensions")[0].get<double>(),
                                        room.at("dimensions")[1].get<double>(),
                                        room.at("dimensions")[2].get<double>());
  cfg.room.reflection_coeff = room.at("reflection_coeff").get<double>();
  cfg.room.speed_of_sound = room.at("speed_of_sound").get<double>();
  cfg.room.sample_rate = room.at("sample_rate").get<double>();
  cfg.solver_cfg = solver_config_from_text(j.at("solver_cfg").get<std::string>());
  return cfg;
}

json report_to_json(const ExperimentReport& report) {
  json j;
  j["artifact_version"] = report.artifact_version;
  j["config"] = config_to_json(report.config);
  json cells = json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"signal", c.signal},
                     {"s", c.s},
                     {"n_mics", c.n_mics},
                     {"a_ppm", c.metrics.a_ppm},
                     {"a_pup", c.metrics.a_pup},
                     {"z_trials", c.z_trials},
                     {"failed_trials", c.failed_trials},
                     {"valid", c.valid}});
  j["cells"] = cells;
  json raw = json::array();
  for (const auto& r : report.raw)
    raw.push_back({{"signal", r.signal},
                   {"s", r.s},
                   {"n_mics", r.n_mics},
                   {"trial", r.trial},
                   {"matched", r.matched},
                   {"offset_sum", r.offset_sum},
                   {"truth_peak_count", r.truth_peak_count},
                   {"ppm", r.ppm},
                   {"pup", r.pup},
                   {"failed", r.failed},
                   {"error", r.error}});
  j["raw_trials"] = raw;
  json imps = json::array();
  for (const auto& imp : report.improvements)
    imps.push_back({{"signal", imp.signal},
                    {"metric", imp.metric},
                    {"delta_avg", imp.delta_avg},
                    {"delta_oracle_pct", imp.delta_oracle_pct},
                    {"oracle_n", imp.oracle_n},
                    {"oracle_defined", imp.oracle_defined}});
  j["improvements"] = imps;
  return j;
}

ExperimentReport report_from_json(const json& j) {
  ExperimentReport report;
  report.artifact_version = j.at("artifact_version").get<std::string>();
  report.config = config_from_json(j.at("config"));
  for (const auto& c : j.at("cells")) {
    Cell cell;
    cell.signal = c.at("signal").get<std::string>();
    cell.s = c.at("s").get<double>();
    cell.n_mics = c.at("n_mics").get<int>();
    cell.metrics.a_ppm = c.at("a_ppm").get<double>();
    cell.metrics.a_pup = c.at("a_pup").get<double>();
    cell.z_trials = c.at("z_trials").get<int>();
    cell.failed_trials = c.at("failed_trials").get<int>();
    cell.valid = c.at("valid").get<bool>();
    report.cells.push_back(cell);
  }
  for (const auto& r : j.at("raw_trials")) {
    TrialRow row;
    row.signal = r.at("signal").get<std::string>();
    row.s = r.at("s").get<double>();
    row.n_mics = r.at("n_mics").get<int>();
    row.trial = r.at("trial").get<int>();
    row.matched = r.at("matched").get<int>();
    row.offset_sum = r.at("offset_sum").get<double>();
    row.truth_peak_count = r.at("truth_peak_count").get<int>();
    row.ppm = r.at("ppm").get<double>();
    row.pup = r.at("pup").get<double>();
    row.failed = r.at("failed").get<bool>();
    row.error = r.at("error").get<std::string>();
    report.raw.push_back(row);
  }
  for (const auto& i : j.at("improvements")) {
    Improvement imp;
    imp.signal = i.at("signal").get<std::string>();
    imp.metric = i.at("metric").get<std::string>();
    imp.delta_avg = i.at("delta_avg").get<double>();
    imp.delta_oracle_pct = i.at("delta_oracle_pct").get<double>();
    imp.oracle_n = i.at("oracle_n").get<int>();
    imp.oracle_defined = i.at("oracle_defined").get<bool>();
    report.improvements.push_back(imp);
  }
  return report;
}

const char* kBarGlyphs[8] = {"▁", "▂", "▃", "▄",
                             "▅", "▆", "▇", "█"};

std::string bar_glyph(double value, double block_max) {
  if (!(block_max > 0.0) || value <= 0.0) return kBarGlyphs[0];
  int idx = static_cast<int>(std::ceil(value / block_max * 8.0)) - 1;
  idx = std::clamp(idx, 0, 7);
  return kBarGlyphs[idx];
}

void write_tables_md(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::io_error, "cannot write " + path);
  std::vector<double> s_sorted = report.config.s_values;
  std::sort(s_sorted.begin(), s_sorted.end());
  std::vector<int> n_sorted = report.config.n_mics_values;
  std::sort(n_sorted.begin(), n_sorted.end());

  auto cell_at = [&](const std::string& signal, double s, int n) -> const Cell* {
    for (const auto& c : report.cells)
      if (c.signal == signal && c.s == s && c.n_mics == n) return &c;
    return nullptr;
  };

  out << "# Benchmark tables (" << report.config.solver << ")\n";
  for (const auto& signal : report.config.signals) {
    for (Metric metric : {Metric::Ppm, Metric::Pup}) {
      const char* title = metric == Metric::Ppm ? "A_PPM" : "A_PUP";
      out << "\n## " << signal << " — " << title << "\n\n";
      double block_max = 0.0;
      for (const auto& c : report.cells)
        if (c.signal == signal && c.valid) block_max = std::max(block_max, metric_of(c, metric));
      out << "| N \\ s |";
      for (double s : s_sorted) out << " " << s << " |";
      out << "\n|---|";
      for (std::size_t i = 0; i < s_sorted.size(); ++i) out << "---|";
      out << "\n";
      for (int n : n_sorted) {
        out << "| " << n << " |";
        for (double s : s_sorted) {
          const Cell* c = cell_at(signal, s, n);
          if (c == nullptr || !c->valid) {
            out << " – |";
          } else {
            const double v = metric_of(*c, metric);
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", v);
            out << " " << buf << " " << bar_glyph(v, block_max) << " |";
          }
        }
        out << "\n";
      }
    }
  }

  if (!report.improvements.empty()) {
    out << "\n## Improvements over N = 2 (s = " << report.config.reference_s << ")\n\n";
    out << "| signal | metric | delta_avg | delta_oracle | oracle N |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& imp : report.improvements) {
      char davg[32];
      std::snprintf(davg, sizeof davg, "%+.4f", imp.delta_avg);
      out << "| " << imp.signal << " | " << imp.metric << " | " << davg << " | ";
      if (imp.oracle_defined) {
        char dpct[32];
        std::snprintf(dpct, sizeof dpct, "%+.1f%%", imp.delta_oracle_pct);
        out << dpct;
      } else {
        out << "undefined (baseline 0)";
      }
      out << " | " << imp.oracle_n << " |\n";
    }
  }
}

void write_cells_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::io_error, "cannot write " + path);
  out << "signal,s,n_mics,metric,value,z_trials,failed_trials,valid\n";
  for (const auto& c : report.cells) {
    for (Metric metric : {Metric::Ppm, Metric::Pup}) {
      out << sanitize_csv(c.signal) << "," << format_double(c.s) << "," << c.n_mics << ","
          << (metric == Metric::Ppm ? "a_ppm" : "a_pup") << ","
          << format_double(metric_of(c, metric)) << "," << c.z_trials << ","
          << c.failed_trials << "," << (c.valid ? 1 : 0) << "\n";
    }
  }
  if (!out) throw_error(ErrorCode::io_error, "write failed for " + path);
}

void write_raw_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::io_error, "cannot write " + path);
  out << "signal,s,n_mics,trial,failed,matched,offset_sum,truth_peak_count,ppm,pup,error\n";
  for (const auto& r : report.raw)
    out << sanitize_csv(r.signal) << "," << format_double(r.s) << "," << r.n_mics << ","
        << r.trial << "," << (r.failed ? 1 : 0) << "," << r.matched << ","
        << format_double(r.offset_sum) << "," << r.truth_peak_count << ","
        << format_double(r.ppm) << "," << format_double(r.pup) << ","
        << sanitize_csv(r.error) << "\n";
}

}  // namespace

void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw_error(ErrorCode::io_error, "cannot create directory " + out_dir);
  const std::filesystem::path dir(out_dir);
  switch (format) {
    case ReportFormat::Json: {
      std::ofstream out(dir / "report.json");
      if (!out) throw_error(ErrorCode::io_error, "cannot write report.json");
      out << report_to_json(report).dump(2) << "\n";
      break;
    }
    case ReportFormat::Csv:
      write_cells_csv(report, (dir / "cells.csv").string());
      write_raw_csv(report, (dir / "raw_trials.csv").string());
      break;
    case ReportFormat::Markdown:
      write_tables_md(report, (dir / "tables.md").string());
      break;
  }
}

ExperimentReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::not_found, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_error(ErrorCode::unsupported_format, std::string("bad report JSON: ") + e.what());
  }
  return report_from_json(j);
}

std::string experiment_config_to_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "signals = ";
  for (std::size_t i = 0; i < cfg.signals.size(); ++i)
    out << (i ? ", " : "") << cfg.signals[i];
  out << "\ns_values = ";
  for (std::size_t i = 0; i < cfg.s_values.size(); ++i)
    out << (i ? ", " : "") << format_double(cfg.s_values[i]);
  out << "\nn_mics_values = ";
  for (std::size_t i = 0; i < cfg.n_mics_values.size(); ++i)
    out << (i ? ", " : "") << cfg.n_mics_values[i];
  out << "\nz_trials = " << cfg.z_trials;
  out << "\nsolver = " << cfg.solver;
  out << "\nepsilon_auto = " << (cfg.epsilon_auto ? "true" : "false");
  out << "\nreference_s = " << format_double(cfg.reference_s);
  out << "\nsource_len = " << cfg.source_len;
  out << "\nmaster_seed = " << cfg.master_seed;
  out << "\nmatch_threshold = " << cfg.match_threshold;
  out << "\npeaks_per_channel = " << cfg.peaks_per_channel;
  out << "\npeak_rel_floor = " << format_double(cfg.peak_rel_floor);
  out << "\nroom.dimensions = " << format_double(cfg.room.dimensions(0)) << ", "
      << format_double(cfg.room.dimensions(1)) << ", "
      << format_double(cfg.room.dimensions(2));
  out << "\nroom.reflection_coeff = " << format_double(cfg.room.reflection_coeff);
  out << "\nroom.speed_of_sound = " << format_double(cfg.room.speed_of_sound);
  out << "\nroom.sample_rate = " << format_double(cfg.room.sample_rate);
  std::istringstream solver_text(solver_config_to_text(cfg.solver_cfg));
  std::string line;
  while (std::getline(solver_text, line)) out << "\nsolver." << line;
  out << "\n";
  return out.str();
}

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) items.push_back(item.substr(a, b - a + 1));
  }
  return items;
}

}  // namespace

ExperimentConfig experiment_config_from_text(const std::string& text) {
  ExperimentConfig cfg;
  std::string solver_lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](const std::string& s) {
      const auto a = s.find_first_not_of(" \t\r\n");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r\n");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (key.rfind("solver.", 0) == 0) {
      solver_lines += key.substr(7) + " = " + value + "\n";
    } else if (key == "signals") {
      cfg.signals = split_list(value);
    } else if (key == "s_values") {
      cfg.s_values.clear();
      for (const auto& v : split_list(value))
        cfg.s_values.push_back(std::strtod(v.c_str(), nullptr));
    } else if (key == "n_mics_values") {
      cfg.n_mics_values.clear();
      for (const auto& v : split_list(value)) cfg.n_mics_values.push_back(std::stoi(v));
    } else if (key == "z_trials") {
      cfg.z_trials = std::stoi(value);
    } else if (key == "solver") {
      cfg.solver = value;
    } else if (key == "epsilon_auto") {
      cfg.epsilon_auto = value == "true" || value == "1";
    } else if (key == "reference_s") {
      cfg.reference_s = std::strtod(value.c_str(), nullptr);
    } else if (key == "source_len") {
      cfg.source_len = std::stol(value);
    } else if (key == "master_seed") {
      cfg.master_seed = std::stoull(value);
    } else if (key == "match_threshold") {
      cfg.match_threshold = std::stoi(value);
    } else if (key == "peaks_per_channel") {
      cfg.peaks_per_channel = std::stoi(value);
    } else if (key == "peak_rel_floor") {
      cfg.peak_rel_floor = std::strtod(value.c_str(), nullptr);
    } else if (key == "room.dimensions") {
      const auto dims = split_list(value);
      if (dims.size() != 3)
        throw_error(ErrorCode::invalid_argument, "room.dimensions needs 3 values");
      cfg.room.dimensions = Eigen::Vector3d(std::strtod(dims[0].c_str(), nullptr),
                                            std::strtod(dims[1].c_str(), nullptr),
                                            std::strtod(dims[2].c_str(), nullptr));
    } else if (key == "room.reflection_coeff") {
      cfg.room.reflection_coeff = std::strtod(value.c_str(), nullptr);
    } else if (key == "room.speed_of_sound") {
      cfg.room.speed_of_sound = std::strtod(value.c_str(), nullptr);
    } else if (key == "room.sample_rate") {
      cfg.room.sample_rate = std::strtod(value.c_str(), nullptr);
    } else {
      throw_error(ErrorCode::invalid_argument, "unknown experiment config key: " + key);
    }
  }
  if (!solver_lines.empty()) cfg.solver_cfg = solver_config_from_text(solver_lines);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::not_found, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return experiment_config_from_text(ss.str());
}

ExperimentConfig desk_preset() {
  ExperimentConfig cfg;
  cfg.signals = {"white", "pink"};
  cfg.s_values = {0.01, 1.0};
  cfg.n_mics_values = {2, 3, 4};
  cfg.z_trials = 10;
  cfg.solver = "il1c";
  cfg.room.sample_rate = 2000.0;
  cfg.solver_cfg.channel_len = 64;
  cfg.solver_cfg.tol_inner = 1e-7;
  cfg.reference_s = 1.0;
  return cfg;
}

ExperimentConfig paper_shape_preset() {
  ExperimentConfig cfg;
  cfg.signals = {"white", "pink"};
  cfg.s_values = {0.01, 0.1, 0.2, 0.5, 1.0};
  cfg.n_mics_values = {2, 3, 4, 5, 10};
  cfg.z_trials = 50;
  cfg.solver = "il1c";
  cfg.room.sample_rate = 16000.0;
  cfg.solver_cfg.channel_len = 512;
  cfg.reference_s = 1.0;
  return cfg;
}

}  // namespace cci
