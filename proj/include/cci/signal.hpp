// Source-signal generation, audio ingestion and calibrated noise injection.
#ifndef CCI_SIGNAL_HPP_
#define CCI_SIGNAL_HPP_

#include <cstdint>
#include <string>

#include "cci/types.hpp"

namespace cci {

// i.i.d. zero-mean unit-variance Gaussian samples; deterministic per seed.
SourceSignal gen_white_noise(Eigen::Index length, std::uint64_t seed,
                             double sample_rate = 16000.0);

// Flat-spectrum Gaussian noise shaped by 1/sqrt(f) in the frequency domain
// (DC zeroed), then normalized to exactly zero mean and unit population
// variance. Requires length >= 16.
SourceSignal gen_pink_noise(Eigen::Index length, std::uint64_t seed,
                            double sample_rate = 16000.0);

// Reads a mono RIFF/WAVE file (16-bit PCM or 32-bit float). Samples are
// scaled to [-1, 1]; silent files are rejected.
SourceSignal load_audio_file(const std::string& path);

// Adds white Gaussian noise per microphone with RMS equal to
// spec.ratio_s * RMS(clean channel). ratio_s = 0 returns the input untouched.
ObservationSet inject_noise(const ObservationSet& clean, const NoiseSpec& spec);

// s = 10^(-db/20)
double db_to_ratio(double db);
// db = 20 * log10(1 / s)
double ratio_to_db(double s);

}  // namespace cci

#endif  // CCI_SIGNAL_HPP_
