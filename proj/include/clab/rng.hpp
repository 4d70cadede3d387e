#pragma once

#include <cstdint>
#include <random>

namespace clab {

/// One round of the splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Keyed mix of a master seed and a stream index.
///
/// seed(master, index) = splitmix64(splitmix64(master) ^ (index * 0xD1B54A32D192ED03)).
/// The multiplier is odd, so distinct indices give distinct keys for a fixed
/// master, and the outer splitmix64 is a bijection.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ (index * 0xD1B54A32D192ED03ULL));
}

/// Seeded random stream. Wraps std::mt19937_64, whose output sequence is fixed
/// by the standard; all derived variates are computed here from raw 64-bit
/// words, so draws are identical across platforms and standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n > 0 (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Child stream keyed by this stream's seed; does not advance this stream.
  Rng derive(std::uint64_t key) const { return Rng(mix_seed(seed_, key)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Stream for replication `index` of an experiment seeded with `master`.
inline Rng seed_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(mix_seed(master, index));
}

}  // namespace clab
