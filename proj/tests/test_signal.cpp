#include <doctest.h>

#include <unsupported/Eigen/FFT>

#include <complex>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "cci/signal.hpp"
#include "support/test_util.hpp"

using namespace cci;

TEST_CASE("white noise: moments, determinism, preconditions") {
  const SourceSignal s = gen_white_noise(4096, 7);
  CHECK(s.samples.size() == 4096);
  CHECK(std::abs(s.samples.mean()) < 0.05);
  const double var = s.samples.squaredNorm() / 4096.0 - s.samples.mean() * s.samples.mean();
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
  CHECK(s.label == "white");

  const SourceSignal again = gen_white_noise(4096, 7);
  CHECK(s.samples == again.samples);  // bit-identical

  CHECK_THROWS_AS((void)gen_white_noise(0, 0), Error);
}

TEST_CASE("pink noise: normalization is exact, spectrum decays as 1/f") {
  const SourceSignal p = gen_pink_noise(65536, 1);
  CHECK(std::abs(p.samples.mean()) < 1e-12);
  const double var = p.samples.squaredNorm() / 65536.0;
  CHECK(var == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS((void)gen_pink_noise(8, 1), Error);

  // Periodogram oracle: average |FFT|^2 over seeds, fit a log-log slope over
  // the central two decades of the positive frequencies.
  const Eigen::Index K = 16384;
  const int n_seeds = 50;
  std::vector<double> psd(static_cast<std::size_t>(K / 2), 0.0);
  Eigen::FFT<double> fft;
  for (int seed = 0; seed < n_seeds; ++seed) {
    const SourceSignal s = gen_pink_noise(K, static_cast<std::uint64_t>(seed) + 100);
    std::vector<double> x(s.samples.data(), s.samples.data() + K);
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, x);
    for (Eigen::Index k = 1; k < K / 2; ++k)
      psd[static_cast<std::size_t>(k)] += std::norm(spec[static_cast<std::size_t>(k)]);
  }
  // Two decades centered (geometrically) in the positive-frequency band.
  const double center = std::sqrt(1.0 * (K / 2.0 - 1.0));
  const Eigen::Index k_lo = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(center / 10.0));
  const Eigen::Index k_hi = std::min<Eigen::Index>(K / 2 - 1, static_cast<Eigen::Index>(center * 10.0));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (Eigen::Index k = k_lo; k <= k_hi; ++k) {
    const double x = std::log10(static_cast<double>(k));
    const double y = std::log10(psd[static_cast<std::size_t>(k)] / n_seeds);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  CHECK(slope > -1.3);
  CHECK(slope < -0.7);
}

TEST_CASE("db_to_ratio follows s = 10^(-dB/20) and round-trips") {
  CHECK(db_to_ratio(0.0) == doctest::Approx(1.0));
  CHECK(db_to_ratio(20.0) == doctest::Approx(0.1));
  CHECK(db_to_ratio(6.0) == doctest::Approx(0.5012).epsilon(1e-4));
  for (double db : {0.0, 3.0, 6.0, 14.0, 20.0, 40.0}) {
    CHECK(ratio_to_db(db_to_ratio(db)) == doctest::Approx(db).epsilon(1e-12));
  }
}

TEST_CASE("inject_noise calibration and the zero-noise identity") {
  auto inst = testing::make_instance(2, 48, 42);

  SUBCASE("s = 0 is bit-identical") {
    NoiseSpec spec;
    spec.ratio_s = 0.0;
    const ObservationSet out = inject_noise(inst.clean, spec);
    CHECK(out.recordings == inst.clean.recordings);
  }

  SUBCASE("negative ratio rejected") {
    NoiseSpec spec;
    spec.ratio_s = -1.0;
    CHECK_THROWS_AS((void)inject_noise(inst.clean, spec), Error);
  }

  SUBCASE("empirical noise-to-signal ratio near s") {
    // E[RMS(noise)/RMS(clean)] = s within 2% over 100 seeds.
    for (double s : {1.0, 0.1}) {
      double ratio_sum = 0.0;
      for (int seed = 0; seed < 100; ++seed) {
        NoiseSpec spec;
        spec.ratio_s = s;
        spec.seed = static_cast<std::uint64_t>(seed);
        const ObservationSet out = inject_noise(inst.clean, spec);
        for (Eigen::Index n = 0; n < out.n_mics(); ++n) {
          const Eigen::VectorXd diff = out.recordings.col(n) - inst.clean.recordings.col(n);
          ratio_sum += rms(diff) / rms(inst.clean.recordings.col(n)) / s;
        }
      }
      const double mean_ratio = ratio_sum / (100.0 * inst.clean.n_mics());
      CHECK(mean_ratio == doctest::Approx(1.0).epsilon(0.02));
    }
  }

  SUBCASE("deterministic per seed and per channel") {
    NoiseSpec spec;
    spec.ratio_s = 0.5;
    spec.seed = 9;
    const ObservationSet a = inject_noise(inst.clean, spec);
    const ObservationSet b = inject_noise(inst.clean, spec);
    CHECK(a.recordings == b.recordings);
  }
}

TEST_CASE("load_audio_file: PCM16, float32, rejections") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cci_signal_test";
  fs::create_directories(dir);

  SUBCASE("mono PCM16 round-trip") {
    std::vector<std::int16_t> frames(1000);
    for (std::size_t i = 0; i < frames.size(); ++i)
      frames[i] = static_cast<std::int16_t>((i % 100) * 300 - 15000);
    const std::string path = (dir / "mono16.wav").string();
    testing::write_wav_pcm16(path, frames, 1, 16000);
    const SourceSignal s = load_audio_file(path);
    CHECK(s.samples.size() == 1000);
    CHECK(s.sample_rate == 16000.0);
    CHECK(s.label == "file:" + path);
    CHECK(s.samples.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(s.samples(0) == doctest::Approx(-15000.0 / 32768.0));
  }

  SUBCASE("mono float32") {
    std::vector<float> frames(256);
    for (std::size_t i = 0; i < frames.size(); ++i)
      frames[i] = 0.25f * std::sin(0.1f * static_cast<float>(i));
    const std::string path = (dir / "mono32f.wav").string();
    testing::write_wav_float32(path, frames, 1, 8000);
    const SourceSignal s = load_audio_file(path);
    CHECK(s.samples.size() == 256);
    CHECK(s.sample_rate == 8000.0);
  }

  SUBCASE("stereo rejected as unsupported-format") {
    std::vector<std::int16_t> frames(400, 1000);
    const std::string path = (dir / "stereo.wav").string();
    testing::write_wav_pcm16(path, frames, 2, 16000);
    try {
      (void)load_audio_file(path);
      FAIL("expected unsupported-format");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unsupported_format);
    }
  }

  SUBCASE("missing file is not-found") {
    try {
      (void)load_audio_file((dir / "nope.wav").string());
      FAIL("expected not-found");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::not_found);
    }
  }

  SUBCASE("silent file rejected") {
    std::vector<std::int16_t> frames(500, 0);
    const std::string path = (dir / "silent.wav").string();
    testing::write_wav_pcm16(path, frames, 1, 16000);
    try {
      (void)load_audio_file(path);
      FAIL("expected invalid-argument");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_argument);
    }
  }
}
