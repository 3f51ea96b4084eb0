#pragma once

#include <bit>
#include <cstdint>

namespace x86sim {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i8 = std::int8_t;
using i16 = std::int16_t;
using i32 = std::int32_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

inline constexpr u64 kPhysicalLimit = u64{1} << 52;
inline constexpr u64 kPageSize = 4096;

// Mask covering the low `bytes` bytes.
constexpr u64 width_mask(unsigned bytes) noexcept
{
  return bytes >= 8 ? ~u64{0} : (u64{1} << (bytes * 8)) - 1;
}

constexpr u64 sign_bit(unsigned bytes) noexcept
{
  return u64{1} << (bytes * 8 - 1);
}

constexpr u64 sign_extend(u64 value, unsigned bytes) noexcept
{
  if (bytes >= 8)
    return value;
  const u64 m = width_mask(bytes);
  value &= m;
  return (value & sign_bit(bytes)) ? (value | ~m) : value;
}

constexpr bool is_canonical(u64 lin) noexcept
{
  const u64 top = lin >> 47;
  return top == 0 || top == 0x1FFFF;
}

constexpr bool even_parity(u8 byte) noexcept
{
  return (std::popcount(static_cast<unsigned>(byte)) & 1) == 0;
}

} // namespace x86sim
