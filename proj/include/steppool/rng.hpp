#pragma once

#include <cmath>
#include <cstdint>

namespace steppool {

// Counter-based pseudo-random stream keyed by (seed, stream_id).
//
// Draw i is mix64(key + i * gamma), the splitmix64 construction: the state is
// a plain counter, so a stream is a pure function of (seed, stream_id, i) and
// never depends on which thread advances it. Streams for distinct stream_ids
// (one per env) are derived through the same finalizer and do not overlap in
// practice.
class StreamRng {
 public:
  StreamRng() = default;
  StreamRng(uint64_t seed, uint64_t stream) : key_(derive_key(seed, stream)) {}

  uint64_t next_u64() { return mix64(key_ + (++count_) * kGamma); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

  // Standard normal via Box-Muller; two draws per call, no cached half.
  double normal() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Uniform integer in [0, n); modulo bias is irrelevant at 64-bit width.
  int32_t uniform_int(int32_t n) {
    return static_cast<int32_t>(next_u64() % static_cast<uint64_t>(n));
  }

 private:
  static constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr double kPi = 3.14159265358979323846;

  static constexpr uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static constexpr uint64_t derive_key(uint64_t seed, uint64_t stream) {
    return mix64(seed + kGamma) ^ mix64(stream * 0xD2B74407B1CE6E93ull + kGamma);
  }

  uint64_t key_ = 0;
  uint64_t count_ = 0;
};

}  // namespace steppool
