// Deterministic seeding utilities. std::hash is implementation-defined, so
// seed derivation for reproducible experiments goes through FNV-1a and
// splitmix64 which are fixed by construction on every platform.
#ifndef CCI_RNG_HPP_
#define CCI_RNG_HPP_

#include <cstdint>
#include <cstring>
#include <random>
#include <string_view>

namespace cci {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over raw bytes; stable across platforms of equal endianness and,
// for the types used here (ASCII text, little-endian integers/doubles),
// stable across all supported targets.
class SeedHasher {
 public:
  SeedHasher& mix(std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    return mix_bytes(bytes, 8);
  }
  SeedHasher& mix(std::int64_t v) { return mix(static_cast<std::uint64_t>(v)); }
  SeedHasher& mix(int v) { return mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
  SeedHasher& mix(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return mix(bits);
  }
  SeedHasher& mix(std::string_view s) {
    mix_bytes(reinterpret_cast<const unsigned char*>(s.data()), s.size());
    return mix(static_cast<std::uint64_t>(s.size()));
  }

  std::uint64_t finish() const {
    // One extra splitmix pass improves avalanche on short inputs.
    std::uint64_t s = state_;
    return splitmix64(s);
  }

 private:
  SeedHasher& mix_bytes(const unsigned char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= data[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Derives an independent stream seed from a parent seed and a lane index.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t lane) {
  SeedHasher h;
  h.mix(seed).mix(lane);
  return h.finish();
}

}  // namespace cci

#endif  // CCI_RNG_HPP_
