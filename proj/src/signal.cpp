#include "cci/signal.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "cci/rng.hpp"

namespace cci {

void validate(const SourceSignal& s) {
  if (s.samples.size() == 0)
    throw_error(ErrorCode::invalid_argument, "source signal is empty");
  if (!s.samples.allFinite())
    throw_error(ErrorCode::invalid_argument, "source signal has non-finite samples");
  if (rms(s.samples) <= 0.0)
    throw_error(ErrorCode::invalid_argument, "source signal is silent (zero RMS)");
  if (s.sample_rate <= 0.0)
    throw_error(ErrorCode::invalid_argument, "sample rate must be positive");
}

SourceSignal gen_white_noise(Eigen::Index length, std::uint64_t seed, double sample_rate) {
  if (length < 1)
    throw_error(ErrorCode::invalid_argument, "white noise length must be >= 1");
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SourceSignal out;
  out.samples.resize(length);
  for (Eigen::Index i = 0; i < length; ++i) out.samples(i) = gauss(rng);
  out.sample_rate = sample_rate;
  out.label = "white";
  return out;
}

SourceSignal gen_pink_noise(Eigen::Index length, std::uint64_t seed, double sample_rate) {
  if (length < 16)
    throw_error(ErrorCode::invalid_argument, "pink noise length must be >= 16");
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> white(static_cast<std::size_t>(length));
  for (auto& w : white) w = gauss(rng);

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, white);

  // 1/sqrt(f) shaping with f proportional to the bin distance from DC;
  // the symmetric scaling keeps the spectrum conjugate-symmetric.
  spectrum[0] = 0.0;
  const Eigen::Index K = length;
  for (Eigen::Index k = 1; k < K; ++k) {
    const double f = static_cast<double>(std::min(k, K - k));
    spectrum[static_cast<std::size_t>(k)] /= std::sqrt(f);
  }

  std::vector<double> shaped;
  fft.inv(shaped, spectrum);

  SourceSignal out;
  out.samples = Eigen::Map<const Eigen::VectorXd>(shaped.data(), length);
  const double mean = out.samples.mean();
  out.samples.array() -= mean;
  const double sd = std::sqrt(out.samples.squaredNorm() / static_cast<double>(length));
  if (sd <= 0.0)
    throw_error(ErrorCode::numerical_failure, "pink noise degenerated to silence");
  out.samples /= sd;
  out.sample_rate = sample_rate;
  out.label = "pink";
  return out;
}

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

SourceSignal load_audio_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorCode::not_found, "audio file not found: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw_error(ErrorCode::unsupported_format, "not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = read_u32(bytes.data() + pos + 4);
    if (pos + 8 + len > bytes.size())
      throw_error(ErrorCode::unsupported_format, "truncated WAVE chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0 && len >= 16) {
      const unsigned char* f = bytes.data() + pos + 8;
      format = read_u16(f);
      channels = read_u16(f + 2);
      sample_rate = read_u32(f + 4);
      bits = read_u16(f + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + pos + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word-aligned
  }

  if (format == 0 || data == nullptr)
    throw_error(ErrorCode::unsupported_format, "missing fmt/data chunk in " + path);
  if (channels != 1)
    throw_error(ErrorCode::unsupported_format,
                "only mono files are supported (" + std::to_string(channels) + " channels)");

  SourceSignal out;
  if (format == 1 && bits == 16) {
    const Eigen::Index n = static_cast<Eigen::Index>(data_len / 2);
    out.samples.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::int16_t v;
      std::memcpy(&v, data + 2 * i, 2);
      out.samples(i) = static_cast<double>(v) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const Eigen::Index n = static_cast<Eigen::Index>(data_len / 4);
    out.samples.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, data + 4 * i, 4);
      out.samples(i) = static_cast<double>(v);
    }
  } else {
    throw_error(ErrorCode::unsupported_format,
                "unsupported encoding (format=" + std::to_string(format) +
                    ", bits=" + std::to_string(bits) + ")");
  }

  out.sample_rate = static_cast<double>(sample_rate);
  out.label = "file:" + path;
  validate(out);
  return out;
}

ObservationSet inject_noise(const ObservationSet& clean, const NoiseSpec& spec) {
  if (spec.ratio_s < 0.0)
    throw_error(ErrorCode::invalid_argument, "noise ratio must be non-negative");
  if (!clean.recordings.allFinite())
    throw_error(ErrorCode::invalid_argument, "observations have non-finite samples");
  ObservationSet out = clean;
  out.noise_ratio = spec.ratio_s;
  if (spec.ratio_s == 0.0) return out;

  for (Eigen::Index n = 0; n < clean.n_mics(); ++n) {
    const double sigma = spec.ratio_s * rms(clean.recordings.col(n));
    if (sigma <= 0.0)
      throw_error(ErrorCode::invalid_argument,
                  "channel " + std::to_string(n) + " is silent; cannot calibrate noise");
    auto rng = make_rng(substream_seed(spec.seed, static_cast<std::uint64_t>(n)));
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Eigen::Index k = 0; k < clean.length(); ++k) out.recordings(k, n) += gauss(rng);
  }
  return out;
}

double db_to_ratio(double db) { return std::pow(10.0, -db / 20.0); }

double ratio_to_db(double s) {
  if (s <= 0.0) throw_error(ErrorCode::invalid_argument, "ratio must be positive");
  return 20.0 * std::log10(1.0 / s);
}

}  // namespace cci
