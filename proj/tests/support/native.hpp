#pragma once

#include <cstdint>

// Runs single instructions on the host CPU. Used as an independent oracle for
// register aliasing, zero-extension and flag results.
namespace native {

using u64 = std::uint64_t;

struct Result {
  u64 value;
  u64 aux;
  u64 rflags;
};

inline u64 mov32(u64 before, std::uint32_t v)
{
  u64 r = before;
  asm("movl %k1, %k0" : "+r"(r) : "r"(v));
  return r;
}

inline u64 mov16(u64 before, std::uint16_t v)
{
  u64 r = before;
  asm("movw %w1, %w0" : "+r"(r) : "r"(v));
  return r;
}

inline u64 read_bh(u64 rbx)
{
  u64 out;
  asm("movzbl %%bh, %k0" : "=a"(out) : "b"(rbx));
  return out;
}

inline Result sar32(std::uint32_t v, std::uint8_t count)
{
  u64 f;
  std::uint32_t r = v;
  asm("sarl %%cl, %0\n\tpushfq\n\tpopq %1" : "+r"(r), "=r"(f) : "c"(count) : "cc");
  return {r, 0, f};
}

inline Result shl64(u64 v, std::uint8_t count)
{
  u64 f;
  u64 r = v;
  asm("shlq %%cl, %0\n\tpushfq\n\tpopq %1" : "+r"(r), "=r"(f) : "c"(count) : "cc");
  return {r, 0, f};
}

inline Result mul64(u64 a, u64 b)
{
  u64 lo = a, hi, f;
  asm("mulq %3\n\tpushfq\n\tpopq %2" : "+a"(lo), "=d"(hi), "=r"(f) : "r"(b) : "cc");
  return {lo, hi, f};
}

inline Result div64(u64 hi, u64 lo, u64 d)
{
  asm("divq %2" : "+a"(lo), "+d"(hi) : "r"(d) : "cc");
  return {lo, hi, 0};
}

inline Result add64(u64 a, u64 b)
{
  u64 f;
  asm("addq %2, %0\n\tpushfq\n\tpopq %1" : "+r"(a), "=r"(f) : "r"(b) : "cc");
  return {a, 0, f};
}

inline Result add8(std::uint8_t a, std::uint8_t b)
{
  u64 f;
  asm("addb %2, %0\n\tpushfq\n\tpopq %1" : "+q"(a), "=r"(f) : "q"(b) : "cc");
  return {a, 0, f};
}

inline Result sub8(std::uint8_t a, std::uint8_t b)
{
  u64 f;
  asm("subb %2, %0\n\tpushfq\n\tpopq %1" : "+q"(a), "=r"(f) : "q"(b) : "cc");
  return {a, 0, f};
}

inline Result xor32(std::uint32_t a)
{
  u64 f;
  asm("xorl %0, %0\n\tpushfq\n\tpopq %1" : "+r"(a), "=r"(f) : : "cc");
  return {a, 0, f};
}

// Mask of CF, PF, ZF, SF, OF: the flags these instructions define.
inline constexpr u64 kDefinedFlags = 0x8C5;

} // namespace native
