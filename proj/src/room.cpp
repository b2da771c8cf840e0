#include "cci/room.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cci/convolution.hpp"
#include "cci/rng.hpp"

namespace cci {

namespace {

constexpr double kWallMargin = 0.3;    // meters
constexpr double kMinSeparation = 0.2;  // meters

// Mirror positions of the source across each of the six shoebox walls.
std::vector<Eigen::Vector3d> first_order_images(const Eigen::Vector3d& src,
                                                const Eigen::Vector3d& dims) {
  std::vector<Eigen::Vector3d> images;
  images.reserve(6);
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::Vector3d lo = src, hi = src;
    lo(axis) = -src(axis);
    hi(axis) = 2.0 * dims(axis) - src(axis);
    images.push_back(lo);
    images.push_back(hi);
  }
  return images;
}

Eigen::Index delay_samples(double distance, const RoomConfig& room) {
  return static_cast<Eigen::Index>(
      std::llround(distance * room.sample_rate / room.speed_of_sound));
}

}  // namespace

void validate(const RoomConfig& room) {
  if ((room.dimensions.array() <= 0.0).any())
    throw_error(ErrorCode::invalid_argument, "room dimensions must be positive");
  if (room.reflection_coeff < 0.0 || room.reflection_coeff > 1.0)
    throw_error(ErrorCode::invalid_argument, "reflection coefficient must be in [0, 1]");
  if (room.speed_of_sound <= 0.0)
    throw_error(ErrorCode::invalid_argument, "speed of sound must be positive");
  if (room.sample_rate <= 0.0)
    throw_error(ErrorCode::invalid_argument, "sample rate must be positive");
}

void validate(const Geometry& geom, const RoomConfig& room) {
  auto inside = [&](const Eigen::Vector3d& p) {
    return (p.array() > 0.0).all() && (p.array() < room.dimensions.array()).all();
  };
  if (!inside(geom.source_pos))
    throw_error(ErrorCode::invalid_argument, "source position outside the room");
  if (geom.mic_pos.size() < 2)
    throw_error(ErrorCode::invalid_argument, "at least two microphones required");
  for (std::size_t i = 0; i < geom.mic_pos.size(); ++i) {
    if (!inside(geom.mic_pos[i]))
      throw_error(ErrorCode::invalid_argument,
                  "microphone " + std::to_string(i) + " outside the room");
    for (std::size_t j = i + 1; j < geom.mic_pos.size(); ++j)
      if (geom.mic_pos[i] == geom.mic_pos[j])
        throw_error(ErrorCode::invalid_argument, "duplicate microphone positions");
  }
}

Eigen::Index min_channel_len(const RoomConfig& room, const Geometry& geom) {
  Eigen::Index max_delay = 0;
  const auto images = first_order_images(geom.source_pos, room.dimensions);
  for (const auto& mic : geom.mic_pos) {
    max_delay = std::max(max_delay, delay_samples((geom.source_pos - mic).norm(), room));
    for (const auto& img : images)
      max_delay = std::max(max_delay, delay_samples((img - mic).norm(), room));
  }
  return max_delay + 1;
}

AirSet image_method_air(const RoomConfig& room, const Geometry& geom,
                        Eigen::Index channel_len) {
  validate(room);
  validate(geom, room);
  const Eigen::Index need = min_channel_len(room, geom);
  if (channel_len < need)
    throw_error(ErrorCode::channel_too_short,
                "channel length " + std::to_string(channel_len) +
                    " cannot hold all image delays; need at least " + std::to_string(need));

  const Eigen::Index n_mics = static_cast<Eigen::Index>(geom.mic_pos.size());
  AirSet air;
  air.channels = Eigen::MatrixXd::Zero(channel_len, n_mics);
  air.sample_rate = room.sample_rate;

  const auto images = first_order_images(geom.source_pos, room.dimensions);
  for (Eigen::Index n = 0; n < n_mics; ++n) {
    const Eigen::Vector3d& mic = geom.mic_pos[n];
    const double direct_dist = (geom.source_pos - mic).norm();
    air.channels(delay_samples(direct_dist, room), n) += 1.0 / direct_dist;
    for (const auto& img : images) {
      const double dist = (img - mic).norm();
      air.channels(delay_samples(dist, room), n) += room.reflection_coeff / dist;
    }
  }
  return air;
}

ObservationSet synthesize_observations(const AirSet& air, const SourceSignal& src) {
  validate(src);
  if (air.sample_rate != src.sample_rate)
    throw_error(ErrorCode::invalid_argument, "sample rate mismatch between AIRs and source");
  if (air.channels.size() == 0 || (air.channels.array() == 0.0).all())
    throw_error(ErrorCode::invalid_argument, "AIR set has no nonzero taps");

  ObservationSet obs;
  obs.recordings.resize(src.samples.size() + air.channel_len() - 1, air.n_mics());
  for (Eigen::Index n = 0; n < air.n_mics(); ++n)
    obs.recordings.col(n) = conv_full(air.channels.col(n), src.samples);
  obs.sample_rate = air.sample_rate;
  obs.noise_ratio = 0.0;
  return obs;
}

Geometry random_geometry(const RoomConfig& room, int n_mics, std::uint64_t seed) {
  validate(room);
  if (n_mics < 2)
    throw_error(ErrorCode::invalid_argument, "need at least 2 microphones");
  if ((room.dimensions.array() <= 2.0 * kWallMargin).any())
    throw_error(ErrorCode::infeasible_geometry,
                "room too small for the 0.3 m wall margin");

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw_point = [&]() {
    Eigen::Vector3d p;
    for (int a = 0; a < 3; ++a)
      p(a) = kWallMargin + unit(rng) * (room.dimensions(a) - 2.0 * kWallMargin);
    return p;
  };

  // Rejection sampling: source first, then each microphone against all
  // previously placed points.
  constexpr int kMaxAttempts = 20000;
  std::vector<Eigen::Vector3d> placed;
  placed.reserve(static_cast<std::size_t>(n_mics) + 1);
  placed.push_back(draw_point());
  int attempts = 0;
  while (placed.size() < static_cast<std::size_t>(n_mics) + 1) {
    if (++attempts > kMaxAttempts)
      throw_error(ErrorCode::infeasible_geometry,
                  "could not place points with 0.2 m separation; room too crowded");
    const Eigen::Vector3d candidate = draw_point();
    bool ok = true;
    for (const auto& p : placed)
      if ((candidate - p).norm() < kMinSeparation) {
        ok = false;
        break;
      }
    if (ok) placed.push_back(candidate);
  }

  Geometry geom;
  geom.source_pos = placed.front();
  geom.mic_pos.assign(placed.begin() + 1, placed.end());
  return geom;
}

AirSet trim_to_support(const AirSet& air) {
  Eigen::Index first = air.channel_len(), last = -1;
  for (Eigen::Index n = 0; n < air.n_mics(); ++n)
    for (Eigen::Index k = 0; k < air.channel_len(); ++k)
      if (air.channels(k, n) != 0.0) {
        first = std::min(first, k);
        last = std::max(last, k);
      }
  if (last < 0)
    throw_error(ErrorCode::invalid_argument, "AIR set has no nonzero taps");
  AirSet out;
  out.channels = air.channels.middleRows(first, last - first + 1);
  out.sample_rate = air.sample_rate;
  return out;
}

Eigen::MatrixXd ground_truth_tdoas(const AirSet& air) {
  const Eigen::Index n_mics = air.n_mics();
  Eigen::VectorXd direct(n_mics);
  for (Eigen::Index n = 0; n < n_mics; ++n) {
    Eigen::Index first = -1;
    for (Eigen::Index k = 0; k < air.channel_len(); ++k)
      if (air.channels(k, n) != 0.0) {
        first = k;
        break;
      }
    if (first < 0)
      throw_error(ErrorCode::invalid_argument,
                  "channel " + std::to_string(n) + " has no nonzero tap");
    direct(n) = static_cast<double>(first);
  }
  Eigen::MatrixXd tdoa(n_mics, n_mics);
  for (Eigen::Index m = 0; m < n_mics; ++m)
    for (Eigen::Index n = 0; n < n_mics; ++n) tdoa(m, n) = direct(m) - direct(n);
  return tdoa;
}

}  // namespace cci
