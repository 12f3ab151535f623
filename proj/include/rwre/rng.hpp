#pragma once

// Counter-based random streams.
//
// A stream is identified by a 64-bit key derived from (seed, tag, index...);
// draw j of the stream is splitmix64(key + j * golden). Streams for different
// sites or paths never share state, so generation order and thread count do
// not change any value. All distribution code below is self-contained (no
// std:: distributions) so outputs are identical across standard libraries.

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace rwre {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Named stream tags. Values are part of the reproducibility contract.
enum class StreamTag : std::uint64_t {
  Site = 0x51,
  Walk = 0x57,
  Gamma = 0x47,
  Start = 0x53,
  Source = 0x46,
  Trial = 0x54,
};

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) : key_(key) {}

  /// Key derived from a seed and a path of integers (tag, index, ...).
  static CounterRng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);
  static CounterRng stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
    return stream(seed, {static_cast<std::uint64_t>(tag), index});
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1).
  double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli_half() { return ((*this)() >> 63) != 0; }

  double normal();
  /// Gamma(shape, 1) by Marsaglia-Tsang, with the shape < 1 boost.
  double gamma(double shape);

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Dirichlet(alpha) through normalized gamma draws.
std::vector<double> dirichlet(CounterRng& rng, std::span<const double> alpha);

}  // namespace rwre
