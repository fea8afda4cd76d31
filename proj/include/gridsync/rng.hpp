#pragma once

#include <cstddef>
#include <cstdint>

namespace gridsync {

// SplitMix64 (Steele/Lea/Vigna). The whole generator is a dozen lines with a
// published reference, so seeded runs reproduce bit-for-bit on any platform;
// std::uniform_* distributions are implementation-defined and would not.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., n-1} via the floor construction on next_double().
  std::size_t next_below(std::size_t n) {
    std::size_t k = static_cast<std::size_t>(next_double() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

 private:
  std::uint64_t state_;
};

// Stream seed for a (major, minor) pair, e.g. (iteration, ant index): the base
// seed XORed with a SplitMix64 hash of the pair. Each ant therefore owns an
// independent deterministic sequence regardless of processing order.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t major,
                                        std::uint64_t minor) {
  SplitMix64 h(major * 0x9E3779B97F4A7C15ull + minor + 1);
  return seed ^ h.next_u64();
}

}  // namespace gridsync
