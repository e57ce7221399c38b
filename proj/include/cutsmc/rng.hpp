// SPDX-License-Identifier: Apache-2.0
#pragma once

// Counter-based random streams (Philox4x32-10, Salmon et al. 2011).
//
// A RandomStream is a value type identified by (seed, stream id, draw
// counter). Copying a stream replays it; substream(label) derives a
// statistically independent stream from the same seed, so particle- and
// batch-level work can be parallelized while staying bit-reproducible for
// any thread count.

#include <array>
#include <cmath>
#include <cstdint>

namespace cutsmc {

namespace detail {

inline constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM4x32A) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM4x32B) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

inline std::array<std::uint32_t, 4> philox4x32_10(
    std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, key);
    key[0] += kPhiloxW32A;
    key[1] += kPhiloxW32B;
  }
  return ctr;
}

}  // namespace detail

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_(stream_id), counter_(0) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  /// Derives an independent stream keyed by `label`. Derivation is a Philox
  /// evaluation under a tweaked key, so distinct (stream, label) paths map to
  /// distinct stream ids except with negligible probability.
  RandomStream substream(std::uint64_t label) const {
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_ ^ 0xDECAFBADu),
        static_cast<std::uint32_t>((seed_ >> 32) ^ 0x5EED5EEDu)};
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(label), static_cast<std::uint32_t>(label >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const auto out = detail::philox4x32_10(ctr, key);
    const std::uint64_t id =
        (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    return RandomStream(seed_, id);
  }

  std::uint64_t next_u64() {
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_),
        static_cast<std::uint32_t>(seed_ >> 32)};
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32)};
    ++counter_;
    const auto out = detail::philox4x32_10(ctr, key);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe operand for log().
  double uniform01_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform strictly inside (0, 1); both log(u) and log1p(-u) are finite.
  double uniform01_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (cosine branch), two uniforms per draw.
  double normal() {
    const double u1 = uniform01_pos();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
};

/// Well-known substream labels used by the SMC engine and orchestrator.
/// Kept in one place so tests can reconstruct any stream path.
namespace stream_label {
inline constexpr std::uint64_t sequence = 1;
inline constexpr std::uint64_t init = 2;
inline constexpr std::uint64_t step_base = 1000;   // + step index
inline constexpr std::uint64_t resample = 0;       // within a step stream
inline constexpr std::uint64_t particle_base = 1;  // + particle index
inline constexpr std::uint64_t batch_base = 1u << 20;  // + batch index
}  // namespace stream_label

}  // namespace cutsmc
