#pragma once

#include <cstdint>

namespace klvote {

/// Counter-based 64-bit generator: draw k of stream `seed` is
/// splitmix64(seed * golden + k). The stream is a pure function of
/// (seed, counter), so it is identical on every platform.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double next_open01() noexcept;
  /// Standard normal via Box-Muller (both outputs are used).
  double next_normal() noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace klvote
