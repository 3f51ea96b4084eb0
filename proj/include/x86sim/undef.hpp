#pragma once

#include "x86sim/bits.hpp"

namespace x86sim {

// How indeterminate values are materialized from the undef seed.
//
//  Injective - a bijective mix of the seed, so every draw is distinct.
//  Zero      - every draw is 0.
//  Seeded    - a pure function of (key, seed); replaying a run with the
//              same key reproduces every draw.
struct UndefPolicy {
  enum class Mode { Injective, Zero, Seeded };

  Mode mode{Mode::Injective};
  u64 key{0};

  static constexpr UndefPolicy injective() noexcept { return {Mode::Injective, 0}; }
  static constexpr UndefPolicy zero() noexcept { return {Mode::Zero, 0}; }
  static constexpr UndefPolicy seeded(u64 k) noexcept { return {Mode::Seeded, k}; }

  bool operator==(const UndefPolicy&) const = default;
};

namespace detail {

// splitmix64 finalizer: every step (xor-shift, odd multiply) is invertible
// modulo 2^64, so the whole map is a bijection on 64-bit values.
constexpr u64 mix64(u64 z) noexcept
{
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

} // namespace detail

constexpr u64 create_undef(const UndefPolicy& policy, u64 seed) noexcept
{
  switch (policy.mode) {
  case UndefPolicy::Mode::Injective:
    return detail::mix64(seed + 0x9E3779B97F4A7C15ull);
  case UndefPolicy::Mode::Zero:
    return 0;
  case UndefPolicy::Mode::Seeded:
    return detail::mix64(detail::mix64(policy.key) ^ seed);
  }
  return 0;
}

} // namespace x86sim
