#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace rsma {

// Counter-based deterministic RNG. Every random quantity in the toolkit is
// addressed by (seed, purpose tag, block, user, ...) through key chaining, so
// results do not depend on call order or worker count.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

struct StreamKey {
  std::uint64_t state = 0;

  // Derives a child stream; chaining is order-sensitive by construction.
  [[nodiscard]] constexpr StreamKey chain(std::uint64_t tag) const noexcept {
    return {mix64(state + 0xD1B54A32D192ED03ULL * (tag + 1))};
  }

  [[nodiscard]] constexpr std::uint64_t raw(std::uint64_t counter) const noexcept {
    return mix64(state + 0x9E3779B97F4A7C15ULL * (counter + 1));
  }

  // Uniform on [0, 1).
  [[nodiscard]] double uniform01(std::uint64_t counter) const noexcept {
    return static_cast<double>(raw(counter) >> 11) * 0x1.0p-53;
  }

  // One standard-normal pair per counter (Box-Muller, uses two raw draws).
  [[nodiscard]] std::pair<double, double> normal_pair(std::uint64_t counter) const noexcept {
    const double u1 = static_cast<double>((raw(2 * counter) >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(raw(2 * counter + 1) >> 11) * 0x1.0p-53;    // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(th), r * std::sin(th)};
  }

  // Circularly-symmetric complex Gaussian, unit variance: E|z|^2 = 1.
  [[nodiscard]] std::complex<double> cnormal(std::uint64_t counter) const noexcept {
    const auto [a, b] = normal_pair(counter);
    constexpr double half_sqrt2 = 0.5 * std::numbers::sqrt2;
    return {a * half_sqrt2, b * half_sqrt2};
  }

  // Uniform bit stream, one bit per counter.
  [[nodiscard]] int bit(std::uint64_t counter) const noexcept {
    return static_cast<int>(raw(counter) >> 63);
  }
};

// Purpose tags; each independent source of randomness gets its own lane.
namespace tags {
inline constexpr std::uint64_t kEstimate = 0x01;
inline constexpr std::uint64_t kError = 0x02;
inline constexpr std::uint64_t kNoise = 0x03;
inline constexpr std::uint64_t kPayload = 0x04;
inline constexpr std::uint64_t kConditional = 0x05;
}  // namespace tags

}  // namespace rsma
