#pragma once

// Portable, counter-based random numbers.
//
// Every random quantity in the simulator is a pure function of a 64-bit key
// and a 64-bit counter: value = splitmix64(key ^ splitmix64(counter + golden)).
// No std:: distribution is used, so golden files are stable across standard
// library implementations.

#include <cstdint>
#include <string_view>

namespace aos::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 output function (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix(std::uint64_t key, std::uint64_t counter) {
  return splitmix64(key ^ splitmix64(counter));
}

/// FNV-1a over the bytes of `tag`.
constexpr std::uint64_t tag_hash(std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Seed for a named role, derived from the global scenario seed.
constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view role) {
  return splitmix64(global_seed ^ tag_hash(role));
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Approximately normal variate (zero mean, unit variance) from a single
/// 64-bit word: Irwin-Hall sum of four 16-bit uniforms. Cheap enough for
/// per-pixel sensor noise.
double irwin_hall_normal(std::uint64_t bits);

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  std::uint64_t next_u64() { return mix(key_, counter_++); }
  double uniform() { return to_unit(next_u64()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Box-Muller; consumes two counters per call.
  double normal();
  double exponential();
  /// Poisson count by summing unit-rate exponential gaps; O(mean).
  std::uint64_t poisson(double mean);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace aos::rng
