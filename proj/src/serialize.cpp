#include "cci/serialize.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace cci {

namespace {

constexpr char kMagic[4] = {'C', 'C', 'I', 'M'};
constexpr unsigned char kVersion = 1;
constexpr unsigned char kKindAirs = 1;
constexpr unsigned char kKindObservations = 2;

void put_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void put_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  put_bytes(out, b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(out, b, 4);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  put_bytes(out, b, 8);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_container(const Eigen::MatrixXd& channels, double sample_rate,
                     unsigned char kind, double noise_ratio, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_error(ErrorCode::io_error, "cannot write " + path);
  put_bytes(out, kMagic, 4);
  unsigned char vk[2] = {kVersion, kind};
  put_bytes(out, vk, 2);
  put_u16(out, static_cast<std::uint16_t>(channels.cols()));
  put_u32(out, static_cast<std::uint32_t>(channels.rows()));
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  if (kind == kKindObservations) put_f64(out, noise_ratio);
  for (Eigen::Index n = 0; n < channels.cols(); ++n)
    for (Eigen::Index k = 0; k < channels.rows(); ++k) put_f64(out, channels(k, n));
  if (!out) throw_error(ErrorCode::io_error, "write failed for " + path);
}

struct Container {
  Eigen::MatrixXd channels;
  double sample_rate = 0.0;
  double noise_ratio = 0.0;
};

Container read_container(const std::string& path, unsigned char expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorCode::not_found, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw_error(ErrorCode::unsupported_format, "bad magic in " + path);
  unsigned char vk[2];
  in.read(reinterpret_cast<char*>(vk), 2);
  if (vk[0] != kVersion)
    throw_error(ErrorCode::unsupported_format, "unsupported container version in " + path);
  if (vk[1] != expected_kind)
    throw_error(ErrorCode::unsupported_format, "container kind mismatch in " + path);
  const std::uint16_t n_mics = get_u16(in);
  const std::uint32_t channel_len = get_u32(in);
  const std::uint32_t fs = get_u32(in);
  Container c;
  c.sample_rate = static_cast<double>(fs);
  if (expected_kind == kKindObservations) c.noise_ratio = get_f64(in);
  c.channels.resize(channel_len, n_mics);
  for (Eigen::Index n = 0; n < c.channels.cols(); ++n)
    for (Eigen::Index k = 0; k < c.channels.rows(); ++k) c.channels(k, n) = get_f64(in);
  if (!in) throw_error(ErrorCode::unsupported_format, "truncated container " + path);
  return c;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_airs_binary(const AirSet& airs, const std::string& path) {
  write_container(airs.channels, airs.sample_rate, kKindAirs, 0.0, path);
}

AirSet load_airs_binary(const std::string& path) {
  Container c = read_container(path, kKindAirs);
  AirSet airs;
  airs.channels = std::move(c.channels);
  airs.sample_rate = c.sample_rate;
  return airs;
}

void save_observations_binary(const ObservationSet& obs, const std::string& path) {
  write_container(obs.recordings, obs.sample_rate, kKindObservations, obs.noise_ratio, path);
}

ObservationSet load_observations_binary(const std::string& path) {
  Container c = read_container(path, kKindObservations);
  ObservationSet obs;
  obs.recordings = std::move(c.channels);
  obs.sample_rate = c.sample_rate;
  obs.noise_ratio = c.noise_ratio;
  return obs;
}

void save_channels_csv(const Eigen::MatrixXd& channels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::io_error, "cannot write " + path);
  for (Eigen::Index n = 0; n < channels.cols(); ++n)
    out << (n ? "," : "") << "ch" << n;
  out << "\n";
  for (Eigen::Index k = 0; k < channels.rows(); ++k) {
    for (Eigen::Index n = 0; n < channels.cols(); ++n)
      out << (n ? "," : "") << format_double(channels(k, n));
    out << "\n";
  }
  if (!out) throw_error(ErrorCode::io_error, "write failed for " + path);
}

Eigen::MatrixXd load_channels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::not_found, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw_error(ErrorCode::unsupported_format, "empty CSV " + path);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw_error(ErrorCode::unsupported_format, "CSV has no data rows: " + path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw_error(ErrorCode::unsupported_format, "ragged CSV " + path);
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::io_error, "cannot write " + path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out << (c ? "," : "") << format_double(m(r, c));
    out << "\n";
  }
}

std::string solver_config_to_text(const SolverConfig& cfg) {
  std::ostringstream out;
  out << "channel_len = " << cfg.channel_len << "\n";
  out << "epsilon = " << format_double(cfg.epsilon) << "\n";
  out << "anchor_index = " << cfg.anchor_index << "\n";
  out << "max_outer_iters = " << cfg.max_outer_iters << "\n";
  out << "max_inner_iters = " << cfg.max_inner_iters << "\n";
  out << "tol_inner = " << format_double(cfg.tol_inner) << "\n";
  out << "tol_outer = " << format_double(cfg.tol_outer) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "cv_folds = " << cfg.cv_folds << "\n";
  out << "dense_threshold = " << cfg.dense_threshold << "\n";
  out << "il1c_init = "
      << (cfg.il1c_init == Il1cInit::RectifiedTong ? "rectified-tong" : "nonneg-anchor")
      << "\n";
  return out.str();
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

SolverConfig solver_config_from_text(const std::string& text) {
  SolverConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (key == "channel_len") cfg.channel_len = std::stol(value);
    else if (key == "epsilon") cfg.epsilon = std::strtod(value.c_str(), nullptr);
    else if (key == "anchor_index") cfg.anchor_index = std::stol(value);
    else if (key == "max_outer_iters") cfg.max_outer_iters = std::stoi(value);
    else if (key == "max_inner_iters") cfg.max_inner_iters = std::stoi(value);
    else if (key == "tol_inner") cfg.tol_inner = std::strtod(value.c_str(), nullptr);
    else if (key == "tol_outer") cfg.tol_outer = std::strtod(value.c_str(), nullptr);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "cv_folds") cfg.cv_folds = std::stoi(value);
    else if (key == "dense_threshold") cfg.dense_threshold = std::stol(value);
    else if (key == "il1c_init")
      cfg.il1c_init = value == "nonneg-anchor" ? Il1cInit::NonnegAnchor
                                               : Il1cInit::RectifiedTong;
    else
      throw_error(ErrorCode::invalid_argument, "unknown solver config key: " + key);
  }
  return cfg;
}

void save_solver_config(const SolverConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::io_error, "cannot write " + path);
  out << solver_config_to_text(cfg);
}

SolverConfig load_solver_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::not_found, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return solver_config_from_text(ss.str());
}

void save_solver_diagnostics(const SolverResult& result, const std::string& path) {
  nlohmann::json j;
  j["objective_trace"] = result.objective_trace;
  j["outer_iters"] = result.outer_iters;
  j["inner_iters"] = result.inner_iters;
  j["converged"] = result.converged;
  j["identifiable"] = result.identifiable;
  j["epsilon_used"] = result.epsilon_used;
  j["smallest_eigenvalue"] = result.smallest_eigenvalue;
  j["second_eigenvalue"] = result.second_eigenvalue;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : result.constraint_report)
    checks.push_back({{"name", c.name}, {"violation", c.violation}});
  j["constraint_report"] = checks;
  if (!result.diagnostics_json.empty())
    j["strategy"] = nlohmann::json::parse(result.diagnostics_json);
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::io_error, "cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace cci
