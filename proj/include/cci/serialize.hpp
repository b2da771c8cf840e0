// File formats: the 16-byte-header binary container for channel sets, the
// column-per-channel CSV, plain-text key = value solver configs, and the
// JSON diagnostics sidecar for solver results.
//
// Binary layout (little-endian):
//   bytes  0-3  magic "CCIM"
//   byte   4    container version (1)
//   byte   5    kind: 1 = impulse responses, 2 = observations
//   bytes  6-7  u16 number of channels N
//   bytes  8-11 u32 channel length L
//   bytes 12-15 u32 sample rate in Hz
//   observations only: f64 noise ratio
//   payload: N * L f64 samples, channel-major
#ifndef CCI_SERIALIZE_HPP_
#define CCI_SERIALIZE_HPP_

#include <string>

#include "cci/solvers.hpp"
#include "cci/types.hpp"

namespace cci {

void save_airs_binary(const AirSet& airs, const std::string& path);
AirSet load_airs_binary(const std::string& path);
void save_observations_binary(const ObservationSet& obs, const std::string& path);
ObservationSet load_observations_binary(const std::string& path);

// One column per channel, header "ch0,ch1,...", 17-significant-digit values.
void save_channels_csv(const Eigen::MatrixXd& channels, const std::string& path);
Eigen::MatrixXd load_channels_csv(const std::string& path);

// Square matrix without header (TDOA tables).
void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);

std::string solver_config_to_text(const SolverConfig& cfg);
SolverConfig solver_config_from_text(const std::string& text);
void save_solver_config(const SolverConfig& cfg, const std::string& path);
SolverConfig load_solver_config(const std::string& path);

// Diagnostics sidecar: objective trace, constraint report, iteration counts,
// convergence/identifiability flags and any strategy-specific extras.
void save_solver_diagnostics(const SolverResult& result, const std::string& path);

std::string format_double(double v);  // shortest round-trippable decimal

}  // namespace cci

#endif  // CCI_SERIALIZE_HPP_
