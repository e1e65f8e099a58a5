#pragma once

#include <cstdint>
#include <limits>

namespace skewcast {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t a) noexcept { return mix64(a); }

template <typename... Rest>
constexpr std::uint64_t hash_key(std::uint64_t a, std::uint64_t b, Rest... rest) noexcept {
  return hash_key(mix64(a) ^ (b + 0x632be59bd9b4e019ULL), static_cast<std::uint64_t>(rest)...);
}

// Counter-based generator: the n-th draw is a pure function of (key, n), so
// any stream can be reproduced independently of evaluation order or thread.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() noexcept;
  double gamma(double shape, double scale) noexcept;
  std::uint64_t poisson(double lambda) noexcept;

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Single uniform draw on (0, 1) addressed by key, for stateless sampling.
inline double keyed_uniform(std::uint64_t key) noexcept { return CounterRng(key).uniform(); }

}  // namespace skewcast
