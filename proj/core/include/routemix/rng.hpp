#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace routemix {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// FNV-1a, used to key per-vehicle generators by vehicle id.
std::uint64_t hash_string(std::string_view s) noexcept;

/// Mixes a master seed with any number of keys into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) noexcept;

/// Seeded generator with portable real/integer conversions.
///
/// std::mt19937_64 output is fixed by the standard, but the std distributions
/// are not, so all draws go through the helpers below to keep results
/// identical across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  double normal();

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace routemix
