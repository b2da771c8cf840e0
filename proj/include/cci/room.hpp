// First-order image-method room simulation: sparse ground-truth impulse
// responses (direct path + six wall reflections) and observation synthesis
// by full convolution.
#ifndef CCI_ROOM_HPP_
#define CCI_ROOM_HPP_

#include <cstdint>

#include "cci/types.hpp"

namespace cci {

// Builds one impulse response per microphone: the direct-path tap at
// round(dist * fs / c) with amplitude 1/dist plus one tap per wall image
// with amplitude reflection_coeff / image_dist. Coinciding delays accumulate.
// Throws channel-too-short if any delay does not fit in channel_len.
AirSet image_method_air(const RoomConfig& room, const Geometry& geom,
                        Eigen::Index channel_len);

// recording_n = conv_full(h_n, x); noise_ratio = 0.
ObservationSet synthesize_observations(const AirSet& air, const SourceSignal& src);

// Source and microphones drawn uniformly inside the room with a 0.3 m wall
// margin and >= 0.2 m pairwise separation; deterministic per seed.
Geometry random_geometry(const RoomConfig& room, int n_mics, std::uint64_t seed);

// Entry (m, n) = direct-path tap index of channel m minus channel n, where
// the direct path is each channel's earliest nonzero tap. Antisymmetric.
Eigen::MatrixXd ground_truth_tdoas(const AirSet& air);

// Smallest channel length that fits every delay for this room and geometry.
Eigen::Index min_channel_len(const RoomConfig& room, const Geometry& geom);

// Shifts every channel by the common lead (the earliest arrival moves to tap
// 0) and shrinks the channel length to the exact support span. A common
// delay is unobservable to blind identification, and the subspace method is
// only identifiable when the channel order is exact: with slack, every
// common shift (and any common filter that fits) of the truth is also an
// exact solution. TDOAs are unchanged by the shift.
AirSet trim_to_support(const AirSet& air);

}  // namespace cci

#endif  // CCI_ROOM_HPP_
