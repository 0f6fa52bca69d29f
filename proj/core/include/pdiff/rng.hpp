#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace pdiff {

/// Philox4x32-10 block function (Salmon, Moraes, Dror, Shaw; SC'11).
/// Stateless: maps a 128-bit counter and 64-bit key to 128 random bits.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

/// Random stream for one path, addressed by step index. The counter holds
/// (step, path_index) and the key holds the seed, so draws depend only on
/// (seed, path_index, step) and never on scheduling.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t path_index) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        path_{static_cast<std::uint32_t>(path_index),
              static_cast<std::uint32_t>(path_index >> 32)} {}

  /// Two uniforms: first in (0, 1], second in [0, 1), 53 bits each.
  std::array<double, 2> uniform_pair(std::uint64_t counter) const noexcept {
    const auto bits = Philox4x32::apply(
        {static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
         path_[0], path_[1]},
        key_);
    const std::uint64_t a = (std::uint64_t{bits[0]} << 32 | bits[1]) >> 11;
    const std::uint64_t b = (std::uint64_t{bits[2]} << 32 | bits[3]) >> 11;
    constexpr double kScale = 0x1.0p-53;
    return {(static_cast<double>(a) + 1.0) * kScale, static_cast<double>(b) * kScale};
  }

  /// Both Box-Muller normals of one counter block: (cosine, sine) branch.
  std::array<double, 2> normal_pair(std::uint64_t block) const noexcept {
    const auto [u1, u2] = uniform_pair(block);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  /// Standard normal number k: branch k % 2 of block k / 2.
  double normal(std::uint64_t k) const noexcept { return normal_pair(k >> 1)[k & 1]; }

 private:
  Philox4x32::Key key_;
  std::array<std::uint32_t, 2> path_;
};

}  // namespace pdiff
