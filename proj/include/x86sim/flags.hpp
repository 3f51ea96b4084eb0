#pragma once

#include <array>
#include <bit>

#include "x86sim/bits.hpp"
#include "x86sim/state.hpp"

namespace x86sim {

enum class FlagValue : u8 { Unchanged, Clear, Set, Undefined };

constexpr FlagValue bit_value(bool b) noexcept { return b ? FlagValue::Set : FlagValue::Clear; }

// Per-flag outcome of an instruction over the slots CF, PF, AF, ZF, SF, OF.
// Held as three disjoint slot masks so it applies with one rflags update.
struct FlagEffect {
  enum Slot : unsigned { kCF, kPF, kAF, kZF, kSF, kOF };

  u8 set{0};
  u8 clear{0};
  u8 undef{0};

  constexpr void assign(Slot i, FlagValue v) noexcept
  {
    const u8 b = static_cast<u8>(1u << i);
    set &= static_cast<u8>(~b);
    clear &= static_cast<u8>(~b);
    undef &= static_cast<u8>(~b);
    switch (v) {
    case FlagValue::Unchanged: break;
    case FlagValue::Clear: clear |= b; break;
    case FlagValue::Set: set |= b; break;
    case FlagValue::Undefined: undef |= b; break;
    }
  }

  constexpr FlagValue operator[](Slot i) const noexcept
  {
    const u8 b = static_cast<u8>(1u << i);
    if (set & b)
      return FlagValue::Set;
    if (clear & b)
      return FlagValue::Clear;
    if (undef & b)
      return FlagValue::Undefined;
    return FlagValue::Unchanged;
  }

  constexpr unsigned undefined_count() const noexcept { return static_cast<unsigned>(std::popcount(undef)); }

  bool operator==(const FlagEffect&) const = default;
};

namespace detail {

inline constexpr std::array<unsigned, 6> kSlotBit{0, 2, 4, 6, 7, 11};

// rflags mask for every combination of slot bits.
inline constexpr auto kSlotMasks = [] {
  std::array<u64, 64> t{};
  for (unsigned m = 0; m < 64; ++m)
    for (unsigned i = 0; i < 6; ++i)
      if (m & (1u << i))
        t[m] |= u64{1} << kSlotBit[i];
  return t;
}();

constexpr u8 slot(FlagEffect::Slot i, bool b) noexcept { return static_cast<u8>(b ? 1u << i : 0); }

} // namespace detail

enum class ArithOp { Add, Adc, Sub, Sbb, Inc, Dec, Neg, Logic };

// Flags for a width-`bytes` result. Operands and result must already be
// masked to the width. For Neg, src1 is the operand being negated.
[[gnu::always_inline]] constexpr FlagEffect arith_flags(ArithOp op, unsigned bytes, u64 src1, u64 src2, u64 result,
                                 bool carry_in = false) noexcept
{
  using detail::slot;
  const u64 sign = sign_bit(bytes);
  u8 defined = 0x3F;
  u8 bits = slot(FlagEffect::kZF, result == 0) | slot(FlagEffect::kSF, result & sign) |
            slot(FlagEffect::kPF, even_parity(static_cast<u8>(result)));
  const bool af = ((src1 ^ src2 ^ result) & 0x10) != 0;
  FlagEffect fx;

  switch (op) {
  case ArithOp::Add:
  case ArithOp::Adc:
  case ArithOp::Inc: {
    if (op == ArithOp::Inc) {
      defined &= static_cast<u8>(~(1u << FlagEffect::kCF));
    } else {
      const bool c = op == ArithOp::Adc && carry_in;
      bits |= slot(FlagEffect::kCF, result < src1 || (c && result == src1));
    }
    bits |= slot(FlagEffect::kOF, ((src1 ^ result) & (src2 ^ result) & sign) != 0);
    bits |= slot(FlagEffect::kAF, af);
    break;
  }
  case ArithOp::Sub:
  case ArithOp::Sbb:
  case ArithOp::Dec: {
    if (op == ArithOp::Dec)
      defined &= static_cast<u8>(~(1u << FlagEffect::kCF));
    else
      bits |= slot(FlagEffect::kCF, src1 < src2 || (op == ArithOp::Sbb && carry_in && src1 == src2));
    bits |= slot(FlagEffect::kOF, ((src1 ^ src2) & (src1 ^ result) & sign) != 0);
    bits |= slot(FlagEffect::kAF, af);
    break;
  }
  case ArithOp::Neg:
    bits |= slot(FlagEffect::kCF, src1 != 0);
    bits |= slot(FlagEffect::kOF, src1 == sign);
    bits |= slot(FlagEffect::kAF, ((src1 ^ result) & 0x10) != 0);
    break;
  case ArithOp::Logic:
    defined &= static_cast<u8>(~(1u << FlagEffect::kAF));
    fx.undef = static_cast<u8>(1u << FlagEffect::kAF);
    break;
  }
  fx.set = bits & defined;
  fx.clear = static_cast<u8>(~bits) & defined;
  return fx;
}

// Writes the effect into rflags. Undefined flags each consume one
// indeterminate value, in CF..OF order; the flag takes its low bit.
inline void apply_flags(MachineState& s, const FlagEffect& fx)
{
  const u64 touched = detail::kSlotMasks[(fx.set | fx.clear) & 0x3F];
  s.set_rflags((s.rflags() & ~touched) | detail::kSlotMasks[fx.set & 0x3F]);
  for (u8 u = fx.undef; u; u &= static_cast<u8>(u - 1)) {
    const unsigned i = static_cast<unsigned>(std::countr_zero(u));
    s.set_flag(kArithFlags[i], s.undef_read() & 1);
  }
}

} // namespace x86sim
