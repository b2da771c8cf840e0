// Shared domain types. Channels are stored one per column so that an AirSet
// with N microphones and channel length L is an L x N matrix; observation
// sets follow the same layout with one recording per column.
#ifndef CCI_TYPES_HPP_
#define CCI_TYPES_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cci/errors.hpp"

namespace cci {

struct SourceSignal {
  Eigen::VectorXd samples;
  double sample_rate = 16000.0;
  std::string label;
};

struct NoiseSpec {
  double ratio_s = 0.0;  // noise-to-signal RMS ratio, s = 10^(-dB/20)
  std::uint64_t seed = 0;
};

struct RoomConfig {
  Eigen::Vector3d dimensions{5.0, 4.0, 3.0};  // meters
  double reflection_coeff = 0.8;
  double speed_of_sound = 343.0;  // m/s
  double sample_rate = 16000.0;   // Hz
};

struct Geometry {
  Eigen::Vector3d source_pos;
  std::vector<Eigen::Vector3d> mic_pos;
};

struct AirSet {
  Eigen::MatrixXd channels;  // L x N, one impulse response per column
  double sample_rate = 16000.0;

  Eigen::Index channel_len() const { return channels.rows(); }
  Eigen::Index n_mics() const { return channels.cols(); }
};

struct ObservationSet {
  Eigen::MatrixXd recordings;  // (K + L - 1) x N, one recording per column
  double sample_rate = 16000.0;
  double noise_ratio = 0.0;

  Eigen::Index length() const { return recordings.rows(); }
  Eigen::Index n_mics() const { return recordings.cols(); }
};

inline double rms(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return x.size() == 0 ? 0.0 : std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
}

void validate(const SourceSignal& s);
void validate(const RoomConfig& room);
void validate(const Geometry& geom, const RoomConfig& room);

}  // namespace cci

#endif  // CCI_TYPES_HPP_
