#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "x86sim/bits.hpp"
#include "x86sim/state.hpp"

namespace x86sim {

enum class OpMap : u8 { OneByte, TwoByte };

// Operand templates, named after the Intel opcode-map notation.
//   E = ModR/M r/m, G = ModR/M reg, I = immediate, J = relative offset,
//   Z = register in the low opcode bits, M = memory only, R = register only,
//   C = control register in ModR/M reg.
//   Size suffix b = byte, w = word, d = dword, q = qword, v = operand size,
//   z = word for 16-bit operand size, else dword.
enum class OperandSpec : u8 {
  None,
  Eb, Ev, Ew, Ed,
  Gb, Gv,
  Ib, Iz, Iv, One,
  AL, rAX, CL,
  Jb, Jz,
  Zb, Zv,
  M, Mp,
  Rv, Rq, Cd,
};

// Semantic-function ids. Registered handlers live in semantics.hpp.
enum class HandlerId : u8 {
  Mov, Movzx, Movsx, Lea, Xchg, Push, Pop, Cmovcc, Setcc,
  Alu, Test, IncDec, Neg, Not, MulDiv, Imul, ConvertA, ConvertD,
  Shift, Jmp, Jcc, Call, Ret, Nop, Rdrand, Syscall, Sysret,
  MovFromCr, MovToCr, Lgdt, Lidt, Rdmsr, Wrmsr,
  Count_,
};

namespace row_flag {
inline constexpr u8 kModrm = 1 << 0;
inline constexpr u8 kDefault64 = 1 << 1; // 64-bit unless 0x66 selects 16
inline constexpr u8 kForce64 = 1 << 2;   // always 64-bit (near branches)
inline constexpr u8 kSystemOnly = 1 << 3;
inline constexpr u8 kMemOnly = 1 << 4;
inline constexpr u8 kRegOnly = 1 << 5;
inline constexpr u8 kAnyExt = 1 << 6; // ModR/M reg field ignored
} // namespace row_flag

enum AluOp : u8 { kAdd, kOr, kAdc, kSbb, kAnd, kSub, kXor, kCmp };
enum ShiftOp : u8 { kRol = 0, kRor = 1, kShl = 4, kShr = 5, kSar = 7 };
enum MulDivOp : u8 { kMul = 4, kImul1 = 5, kDiv = 6, kIdiv = 7 };

struct OpcodeRow {
  OpMap map;
  u8 first;   // first opcode byte covered
  u8 span;    // consecutive opcode bytes sharing this row
  i8 ext;     // ModR/M reg extension, -1 when the row has none
  std::string_view mnemonic; // '%' expands to a condition-code suffix
  std::array<OperandSpec, 3> operands;
  HandlerId handler;
  u8 aux;     // handler sub-operation (AluOp, ShiftOp, ...)
  u8 flags;
  std::string_view undefined; // flags this instruction may leave undefined
};

namespace detail {
using S = OperandSpec;
using H = HandlerId;
namespace rf = row_flag;
inline constexpr OpMap k1 = OpMap::OneByte;
inline constexpr OpMap k2 = OpMap::TwoByte;
inline constexpr u8 kM = rf::kModrm;

constexpr OpcodeRow alu(u8 base, std::string_view m, u8 op, S a, S b, std::string_view undef)
{
  return {k1, base, 1, -1, m, {a, b, S::None}, H::Alu, op, kM, undef};
}
constexpr OpcodeRow alu_acc(u8 base, std::string_view m, u8 op, S a, S b, std::string_view undef)
{
  return {k1, base, 1, -1, m, {a, b, S::None}, H::Alu, op, 0, undef};
}
constexpr OpcodeRow grp(OpMap map, u8 byte, i8 ext, std::string_view m, S a, S b, H h, u8 aux,
                        u8 flags, std::string_view undef)
{
  return {map, byte, 1, ext, m, {a, b, S::None}, h, aux, static_cast<u8>(flags | kM), undef};
}
} // namespace detail

// clang-format off
inline constexpr auto kOpcodeTable = [] {
  using namespace detail;
  constexpr std::string_view kLogicUndef = "AF";
  return std::to_array<OpcodeRow>({
    // ---- one-byte map ----
    alu(0x00, "add", kAdd, S::Eb, S::Gb, ""), alu(0x01, "add", kAdd, S::Ev, S::Gv, ""),
    alu(0x02, "add", kAdd, S::Gb, S::Eb, ""), alu(0x03, "add", kAdd, S::Gv, S::Ev, ""),
    alu_acc(0x04, "add", kAdd, S::AL, S::Ib, ""), alu_acc(0x05, "add", kAdd, S::rAX, S::Iz, ""),
    alu(0x08, "or", kOr, S::Eb, S::Gb, kLogicUndef), alu(0x09, "or", kOr, S::Ev, S::Gv, kLogicUndef),
    alu(0x0A, "or", kOr, S::Gb, S::Eb, kLogicUndef), alu(0x0B, "or", kOr, S::Gv, S::Ev, kLogicUndef),
    alu_acc(0x0C, "or", kOr, S::AL, S::Ib, kLogicUndef), alu_acc(0x0D, "or", kOr, S::rAX, S::Iz, kLogicUndef),
    alu(0x10, "adc", kAdc, S::Eb, S::Gb, ""), alu(0x11, "adc", kAdc, S::Ev, S::Gv, ""),
    alu(0x12, "adc", kAdc, S::Gb, S::Eb, ""), alu(0x13, "adc", kAdc, S::Gv, S::Ev, ""),
    alu_acc(0x14, "adc", kAdc, S::AL, S::Ib, ""), alu_acc(0x15, "adc", kAdc, S::rAX, S::Iz, ""),
    alu(0x18, "sbb", kSbb, S::Eb, S::Gb, ""), alu(0x19, "sbb", kSbb, S::Ev, S::Gv, ""),
    alu(0x1A, "sbb", kSbb, S::Gb, S::Eb, ""), alu(0x1B, "sbb", kSbb, S::Gv, S::Ev, ""),
    alu_acc(0x1C, "sbb", kSbb, S::AL, S::Ib, ""), alu_acc(0x1D, "sbb", kSbb, S::rAX, S::Iz, ""),
    alu(0x20, "and", kAnd, S::Eb, S::Gb, kLogicUndef), alu(0x21, "and", kAnd, S::Ev, S::Gv, kLogicUndef),
    alu(0x22, "and", kAnd, S::Gb, S::Eb, kLogicUndef), alu(0x23, "and", kAnd, S::Gv, S::Ev, kLogicUndef),
    alu_acc(0x24, "and", kAnd, S::AL, S::Ib, kLogicUndef), alu_acc(0x25, "and", kAnd, S::rAX, S::Iz, kLogicUndef),
    alu(0x28, "sub", kSub, S::Eb, S::Gb, ""), alu(0x29, "sub", kSub, S::Ev, S::Gv, ""),
    alu(0x2A, "sub", kSub, S::Gb, S::Eb, ""), alu(0x2B, "sub", kSub, S::Gv, S::Ev, ""),
    alu_acc(0x2C, "sub", kSub, S::AL, S::Ib, ""), alu_acc(0x2D, "sub", kSub, S::rAX, S::Iz, ""),
    alu(0x30, "xor", kXor, S::Eb, S::Gb, kLogicUndef), alu(0x31, "xor", kXor, S::Ev, S::Gv, kLogicUndef),
    alu(0x32, "xor", kXor, S::Gb, S::Eb, kLogicUndef), alu(0x33, "xor", kXor, S::Gv, S::Ev, kLogicUndef),
    alu_acc(0x34, "xor", kXor, S::AL, S::Ib, kLogicUndef), alu_acc(0x35, "xor", kXor, S::rAX, S::Iz, kLogicUndef),
    alu(0x38, "cmp", kCmp, S::Eb, S::Gb, ""), alu(0x39, "cmp", kCmp, S::Ev, S::Gv, ""),
    alu(0x3A, "cmp", kCmp, S::Gb, S::Eb, ""), alu(0x3B, "cmp", kCmp, S::Gv, S::Ev, ""),
    alu_acc(0x3C, "cmp", kCmp, S::AL, S::Ib, ""), alu_acc(0x3D, "cmp", kCmp, S::rAX, S::Iz, ""),

    OpcodeRow{k1, 0x50, 8, -1, "push", {S::Zv}, H::Push, 0, rf::kDefault64, ""},
    OpcodeRow{k1, 0x58, 8, -1, "pop", {S::Zv}, H::Pop, 0, rf::kDefault64, ""},
    OpcodeRow{k1, 0x63, 1, -1, "movsxd", {S::Gv, S::Ed}, H::Movsx, 0, kM, ""},
    OpcodeRow{k1, 0x68, 1, -1, "push", {S::Iz}, H::Push, 0, rf::kDefault64, ""},
    OpcodeRow{k1, 0x69, 1, -1, "imul", {S::Gv, S::Ev, S::Iz}, H::Imul, 0, kM, "PF,AF,ZF,SF"},
    OpcodeRow{k1, 0x6A, 1, -1, "push", {S::Ib}, H::Push, 0, rf::kDefault64, ""},
    OpcodeRow{k1, 0x6B, 1, -1, "imul", {S::Gv, S::Ev, S::Ib}, H::Imul, 0, kM, "PF,AF,ZF,SF"},
    OpcodeRow{k1, 0x70, 16, -1, "j%", {S::Jb}, H::Jcc, 0, rf::kForce64, ""},

    grp(k1, 0x80, 0, "add", S::Eb, S::Ib, H::Alu, kAdd, 0, ""),
    grp(k1, 0x80, 1, "or", S::Eb, S::Ib, H::Alu, kOr, 0, kLogicUndef),
    grp(k1, 0x80, 2, "adc", S::Eb, S::Ib, H::Alu, kAdc, 0, ""),
    grp(k1, 0x80, 3, "sbb", S::Eb, S::Ib, H::Alu, kSbb, 0, ""),
    grp(k1, 0x80, 4, "and", S::Eb, S::Ib, H::Alu, kAnd, 0, kLogicUndef),
    grp(k1, 0x80, 5, "sub", S::Eb, S::Ib, H::Alu, kSub, 0, ""),
    grp(k1, 0x80, 6, "xor", S::Eb, S::Ib, H::Alu, kXor, 0, kLogicUndef),
    grp(k1, 0x80, 7, "cmp", S::Eb, S::Ib, H::Alu, kCmp, 0, ""),
    grp(k1, 0x81, 0, "add", S::Ev, S::Iz, H::Alu, kAdd, 0, ""),
    grp(k1, 0x81, 1, "or", S::Ev, S::Iz, H::Alu, kOr, 0, kLogicUndef),
    grp(k1, 0x81, 2, "adc", S::Ev, S::Iz, H::Alu, kAdc, 0, ""),
    grp(k1, 0x81, 3, "sbb", S::Ev, S::Iz, H::Alu, kSbb, 0, ""),
    grp(k1, 0x81, 4, "and", S::Ev, S::Iz, H::Alu, kAnd, 0, kLogicUndef),
    grp(k1, 0x81, 5, "sub", S::Ev, S::Iz, H::Alu, kSub, 0, ""),
    grp(k1, 0x81, 6, "xor", S::Ev, S::Iz, H::Alu, kXor, 0, kLogicUndef),
    grp(k1, 0x81, 7, "cmp", S::Ev, S::Iz, H::Alu, kCmp, 0, ""),
    grp(k1, 0x83, 0, "add", S::Ev, S::Ib, H::Alu, kAdd, 0, ""),
    grp(k1, 0x83, 1, "or", S::Ev, S::Ib, H::Alu, kOr, 0, kLogicUndef),
    grp(k1, 0x83, 2, "adc", S::Ev, S::Ib, H::Alu, kAdc, 0, ""),
    grp(k1, 0x83, 3, "sbb", S::Ev, S::Ib, H::Alu, kSbb, 0, ""),
    grp(k1, 0x83, 4, "and", S::Ev, S::Ib, H::Alu, kAnd, 0, kLogicUndef),
    grp(k1, 0x83, 5, "sub", S::Ev, S::Ib, H::Alu, kSub, 0, ""),
    grp(k1, 0x83, 6, "xor", S::Ev, S::Ib, H::Alu, kXor, 0, kLogicUndef),
    grp(k1, 0x83, 7, "cmp", S::Ev, S::Ib, H::Alu, kCmp, 0, ""),

    OpcodeRow{k1, 0x84, 1, -1, "test", {S::Eb, S::Gb}, H::Test, 0, kM, kLogicUndef},
    OpcodeRow{k1, 0x85, 1, -1, "test", {S::Ev, S::Gv}, H::Test, 0, kM, kLogicUndef},
    OpcodeRow{k1, 0x86, 1, -1, "xchg", {S::Eb, S::Gb}, H::Xchg, 0, kM, ""},
    OpcodeRow{k1, 0x87, 1, -1, "xchg", {S::Ev, S::Gv}, H::Xchg, 0, kM, ""},
    OpcodeRow{k1, 0x88, 1, -1, "mov", {S::Eb, S::Gb}, H::Mov, 0, kM, ""},
    OpcodeRow{k1, 0x89, 1, -1, "mov", {S::Ev, S::Gv}, H::Mov, 0, kM, ""},
    OpcodeRow{k1, 0x8A, 1, -1, "mov", {S::Gb, S::Eb}, H::Mov, 0, kM, ""},
    OpcodeRow{k1, 0x8B, 1, -1, "mov", {S::Gv, S::Ev}, H::Mov, 0, kM, ""},
    OpcodeRow{k1, 0x8D, 1, -1, "lea", {S::Gv, S::M}, H::Lea, 0, kM | rf::kMemOnly, ""},
    grp(k1, 0x8F, 0, "pop", S::Ev, S::None, H::Pop, 0, rf::kDefault64, ""),
    OpcodeRow{k1, 0x90, 8, -1, "xchg", {S::Zv, S::rAX}, H::Xchg, 0, 0, ""},
    OpcodeRow{k1, 0x98, 1, -1, "cdqe", {}, H::ConvertA, 0, 0, ""},
    OpcodeRow{k1, 0x99, 1, -1, "cqo", {}, H::ConvertD, 0, 0, ""},
    OpcodeRow{k1, 0xA8, 1, -1, "test", {S::AL, S::Ib}, H::Test, 0, 0, kLogicUndef},
    OpcodeRow{k1, 0xA9, 1, -1, "test", {S::rAX, S::Iz}, H::Test, 0, 0, kLogicUndef},
    OpcodeRow{k1, 0xB0, 8, -1, "mov", {S::Zb, S::Ib}, H::Mov, 0, 0, ""},
    OpcodeRow{k1, 0xB8, 8, -1, "mov", {S::Zv, S::Iv}, H::Mov, 0, 0, ""},

    grp(k1, 0xC0, 0, "rol", S::Eb, S::Ib, H::Shift, kRol, 0, "OF"),
    grp(k1, 0xC0, 1, "ror", S::Eb, S::Ib, H::Shift, kRor, 0, "OF"),
    grp(k1, 0xC0, 4, "shl", S::Eb, S::Ib, H::Shift, kShl, 0, "CF,AF,OF"),
    grp(k1, 0xC0, 5, "shr", S::Eb, S::Ib, H::Shift, kShr, 0, "CF,AF,OF"),
    grp(k1, 0xC0, 7, "sar", S::Eb, S::Ib, H::Shift, kSar, 0, "AF,OF"),
    grp(k1, 0xC1, 0, "rol", S::Ev, S::Ib, H::Shift, kRol, 0, "OF"),
    grp(k1, 0xC1, 1, "ror", S::Ev, S::Ib, H::Shift, kRor, 0, "OF"),
    grp(k1, 0xC1, 4, "shl", S::Ev, S::Ib, H::Shift, kShl, 0, "CF,AF,OF"),
    grp(k1, 0xC1, 5, "shr", S::Ev, S::Ib, H::Shift, kShr, 0, "CF,AF,OF"),
    grp(k1, 0xC1, 7, "sar", S::Ev, S::Ib, H::Shift, kSar, 0, "AF,OF"),
    OpcodeRow{k1, 0xC3, 1, -1, "ret", {}, H::Ret, 0, rf::kForce64, ""},
    grp(k1, 0xC6, 0, "mov", S::Eb, S::Ib, H::Mov, 0, 0, ""),
    grp(k1, 0xC7, 0, "mov", S::Ev, S::Iz, H::Mov, 0, 0, ""),
    grp(k1, 0xD0, 0, "rol", S::Eb, S::One, H::Shift, kRol, 0, ""),
    grp(k1, 0xD0, 1, "ror", S::Eb, S::One, H::Shift, kRor, 0, ""),
    grp(k1, 0xD0, 4, "shl", S::Eb, S::One, H::Shift, kShl, 0, "AF"),
    grp(k1, 0xD0, 5, "shr", S::Eb, S::One, H::Shift, kShr, 0, "AF"),
    grp(k1, 0xD0, 7, "sar", S::Eb, S::One, H::Shift, kSar, 0, "AF"),
    grp(k1, 0xD1, 0, "rol", S::Ev, S::One, H::Shift, kRol, 0, ""),
    grp(k1, 0xD1, 1, "ror", S::Ev, S::One, H::Shift, kRor, 0, ""),
    grp(k1, 0xD1, 4, "shl", S::Ev, S::One, H::Shift, kShl, 0, "AF"),
    grp(k1, 0xD1, 5, "shr", S::Ev, S::One, H::Shift, kShr, 0, "AF"),
    grp(k1, 0xD1, 7, "sar", S::Ev, S::One, H::Shift, kSar, 0, "AF"),
    grp(k1, 0xD2, 0, "rol", S::Eb, S::CL, H::Shift, kRol, 0, "OF"),
    grp(k1, 0xD2, 1, "ror", S::Eb, S::CL, H::Shift, kRor, 0, "OF"),
    grp(k1, 0xD2, 4, "shl", S::Eb, S::CL, H::Shift, kShl, 0, "CF,AF,OF"),
    grp(k1, 0xD2, 5, "shr", S::Eb, S::CL, H::Shift, kShr, 0, "CF,AF,OF"),
    grp(k1, 0xD2, 7, "sar", S::Eb, S::CL, H::Shift, kSar, 0, "AF,OF"),
    grp(k1, 0xD3, 0, "rol", S::Ev, S::CL, H::Shift, kRol, 0, "OF"),
    grp(k1, 0xD3, 1, "ror", S::Ev, S::CL, H::Shift, kRor, 0, "OF"),
    grp(k1, 0xD3, 4, "shl", S::Ev, S::CL, H::Shift, kShl, 0, "CF,AF,OF"),
    grp(k1, 0xD3, 5, "shr", S::Ev, S::CL, H::Shift, kShr, 0, "CF,AF,OF"),
    grp(k1, 0xD3, 7, "sar", S::Ev, S::CL, H::Shift, kSar, 0, "AF,OF"),
    OpcodeRow{k1, 0xE8, 1, -1, "call", {S::Jz}, H::Call, 0, rf::kForce64, ""},
    OpcodeRow{k1, 0xE9, 1, -1, "jmp", {S::Jz}, H::Jmp, 0, rf::kForce64, ""},
    OpcodeRow{k1, 0xEB, 1, -1, "jmp", {S::Jb}, H::Jmp, 0, rf::kForce64, ""},

    grp(k1, 0xF6, 0, "test", S::Eb, S::Ib, H::Test, 0, 0, kLogicUndef),
    grp(k1, 0xF6, 2, "not", S::Eb, S::None, H::Not, 0, 0, ""),
    grp(k1, 0xF6, 3, "neg", S::Eb, S::None, H::Neg, 0, 0, ""),
    grp(k1, 0xF6, 4, "mul", S::Eb, S::None, H::MulDiv, kMul, 0, "PF,AF,ZF,SF"),
    grp(k1, 0xF6, 5, "imul", S::Eb, S::None, H::MulDiv, kImul1, 0, "PF,AF,ZF,SF"),
    grp(k1, 0xF6, 6, "div", S::Eb, S::None, H::MulDiv, kDiv, 0, "CF,PF,AF,ZF,SF,OF"),
    grp(k1, 0xF6, 7, "idiv", S::Eb, S::None, H::MulDiv, kIdiv, 0, "CF,PF,AF,ZF,SF,OF"),
    grp(k1, 0xF7, 0, "test", S::Ev, S::Iz, H::Test, 0, 0, kLogicUndef),
    grp(k1, 0xF7, 2, "not", S::Ev, S::None, H::Not, 0, 0, ""),
    grp(k1, 0xF7, 3, "neg", S::Ev, S::None, H::Neg, 0, 0, ""),
    grp(k1, 0xF7, 4, "mul", S::Ev, S::None, H::MulDiv, kMul, 0, "PF,AF,ZF,SF"),
    grp(k1, 0xF7, 5, "imul", S::Ev, S::None, H::MulDiv, kImul1, 0, "PF,AF,ZF,SF"),
    grp(k1, 0xF7, 6, "div", S::Ev, S::None, H::MulDiv, kDiv, 0, "CF,PF,AF,ZF,SF,OF"),
    grp(k1, 0xF7, 7, "idiv", S::Ev, S::None, H::MulDiv, kIdiv, 0, "CF,PF,AF,ZF,SF,OF"),
    grp(k1, 0xFE, 0, "inc", S::Eb, S::None, H::IncDec, 0, 0, ""),
    grp(k1, 0xFE, 1, "dec", S::Eb, S::None, H::IncDec, 1, 0, ""),
    grp(k1, 0xFF, 0, "inc", S::Ev, S::None, H::IncDec, 0, 0, ""),
    grp(k1, 0xFF, 1, "dec", S::Ev, S::None, H::IncDec, 1, 0, ""),
    grp(k1, 0xFF, 6, "push", S::Ev, S::None, H::Push, 0, rf::kDefault64, ""),

    // ---- two-byte map (0F xx) ----
    grp(k2, 0x01, 2, "lgdt", S::Mp, S::None, H::Lgdt, 0, rf::kMemOnly | rf::kSystemOnly, ""),
    grp(k2, 0x01, 3, "lidt", S::Mp, S::None, H::Lidt, 0, rf::kMemOnly | rf::kSystemOnly, ""),
    OpcodeRow{k2, 0x05, 1, -1, "syscall", {}, H::Syscall, 0, 0, ""},
    OpcodeRow{k2, 0x07, 1, -1, "sysret", {}, H::Sysret, 0, rf::kSystemOnly, ""},
    grp(k2, 0x1F, 0, "nop", S::Ev, S::None, H::Nop, 0, 0, ""),
    OpcodeRow{k2, 0x20, 1, -1, "mov", {S::Rq, S::Cd}, H::MovFromCr, 0, kM | rf::kSystemOnly | rf::kAnyExt, ""},
    OpcodeRow{k2, 0x22, 1, -1, "mov", {S::Cd, S::Rq}, H::MovToCr, 0, kM | rf::kSystemOnly | rf::kAnyExt, ""},
    OpcodeRow{k2, 0x30, 1, -1, "wrmsr", {}, H::Wrmsr, 0, rf::kSystemOnly, ""},
    OpcodeRow{k2, 0x32, 1, -1, "rdmsr", {}, H::Rdmsr, 0, rf::kSystemOnly, ""},
    OpcodeRow{k2, 0x40, 16, -1, "cmov%", {S::Gv, S::Ev}, H::Cmovcc, 0, kM, ""},
    OpcodeRow{k2, 0x80, 16, -1, "j%", {S::Jz}, H::Jcc, 0, rf::kForce64, ""},
    OpcodeRow{k2, 0x90, 16, -1, "set%", {S::Eb}, H::Setcc, 0, kM | rf::kAnyExt, ""},
    OpcodeRow{k2, 0xAF, 1, -1, "imul", {S::Gv, S::Ev}, H::Imul, 0, kM, "PF,AF,ZF,SF"},
    OpcodeRow{k2, 0xB6, 1, -1, "movzx", {S::Gv, S::Eb}, H::Movzx, 0, kM, ""},
    OpcodeRow{k2, 0xB7, 1, -1, "movzx", {S::Gv, S::Ew}, H::Movzx, 0, kM, ""},
    OpcodeRow{k2, 0xBE, 1, -1, "movsx", {S::Gv, S::Eb}, H::Movsx, 0, kM, ""},
    OpcodeRow{k2, 0xBF, 1, -1, "movsx", {S::Gv, S::Ew}, H::Movsx, 0, kM, ""},
    grp(k2, 0xC7, 6, "rdrand", S::Rv, S::None, H::Rdrand, 0, rf::kRegOnly, ""),
  });
}();
// clang-format on

inline constexpr std::array<std::string_view, 16> kConditionNames{
    "o", "no", "b", "ae", "e", "ne", "be", "a", "s", "ns", "p", "np", "l", "ge", "le", "g"};

namespace detail {

// (map, byte) -> rows; ext-keyed rows are indexed 0..7, plain rows use slot 8.
struct RowIndex {
  std::array<std::array<std::array<const OpcodeRow*, 9>, 256>, 2> slots{};
};

inline const RowIndex& row_index()
{
  static const RowIndex index = [] {
    RowIndex idx;
    for (const auto& row : kOpcodeTable)
      for (unsigned b = row.first; b < unsigned{row.first} + row.span; ++b) {
        auto& cell = idx.slots[static_cast<unsigned>(row.map)][b];
        if (row.ext < 0)
          cell[8] = &row;
        else
          cell[static_cast<unsigned>(row.ext)] = &row;
      }
    return idx;
  }();
  return index;
}

} // namespace detail

enum class OperandKind : u8 { None, Reg, Mem, Imm, Rel, ControlReg };

inline constexpr i8 kNoReg = -1;
inline constexpr i8 kRipBase = 16;

struct MemRef {
  i8 base{kNoReg};  // GPR index, kRipBase, or kNoReg
  i8 index{kNoReg};
  u8 scale{1};
  i64 disp{0};
  i8 segment{kNoReg}; // kFs / kGs override, else kNoReg

  bool operator==(const MemRef&) const = default;
};

struct Operand {
  OperandKind kind{OperandKind::None};
  u8 size{0};       // bytes; 0 for memory operands without a natural size
  u8 reg{0};
  bool high8{false};
  MemRef mem{};
  u64 imm{0};       // sign-extended immediate or relative displacement

  bool operator==(const Operand&) const = default;
};

struct ModRM {
  u8 mod, reg, rm;
  bool operator==(const ModRM&) const = default;
};

struct Sib {
  u8 scale, index, base;
  bool operator==(const Sib&) const = default;
};

struct DecodedInst {
  u64 address{0};
  bool lock{false};
  bool rep{false};
  bool repne{false};
  bool opsize_prefix{false};
  bool addrsize_prefix{false};
  i8 segment{kNoReg};
  std::optional<u8> rex;
  OpMap map{OpMap::OneByte};
  u8 opcode{0};
  std::optional<ModRM> modrm;
  std::optional<Sib> sib;
  i32 disp{0};
  u64 imm{0};
  u8 length{0};
  u8 opsize{4};
  u8 addrsize{8};
  const OpcodeRow* row{nullptr};
  std::array<Operand, 3> ops{};
  u8 nops{0};

  u64 next_rip() const noexcept { return address + length; }
  bool rex_w() const noexcept { return rex && (*rex & 8); }
  const Operand* memory_operand() const noexcept
  {
    for (unsigned i = 0; i < nops; ++i)
      if (ops[i].kind == OperandKind::Mem)
        return &ops[i];
    return nullptr;
  }

  bool operator==(const DecodedInst&) const = default;
};

enum class DecodeStatus { Ok, FetchFault, TooLong, Unimplemented, ThreeByteMap };

constexpr std::string_view to_string(DecodeStatus s) noexcept
{
  switch (s) {
  case DecodeStatus::Ok: return "ok";
  case DecodeStatus::FetchFault: return "fetch fault";
  case DecodeStatus::TooLong: return "instruction longer than 15 bytes";
  case DecodeStatus::Unimplemented: return "unimplemented opcode";
  case DecodeStatus::ThreeByteMap: return "three-byte opcode map not implemented";
  }
  return "?";
}

inline constexpr unsigned kMaxInstructionLength = 15;

namespace detail {

template <class Fetch>
class ByteCursor {
public:
  ByteCursor(Fetch& fetch) : fetch_(fetch) {}

  bool next(u8& out)
  {
    if (pos_ >= kMaxInstructionLength) {
      too_long_ = true;
      return false;
    }
    const std::optional<u8> b = fetch_(pos_);
    if (!b)
      return false;
    ++pos_;
    out = *b;
    return true;
  }

  bool take(unsigned nbytes, u64& out)
  {
    out = 0;
    for (unsigned i = 0; i < nbytes; ++i) {
      u8 b;
      if (!next(b))
        return false;
      out |= u64{b} << (8 * i);
    }
    return true;
  }

  unsigned pos() const noexcept { return pos_; }
  bool too_long() const noexcept { return too_long_; }

private:
  Fetch& fetch_;
  unsigned pos_{0};
  bool too_long_{false};
};

constexpr bool is_legacy_prefix(u8 b) noexcept
{
  switch (b) {
  case 0xF0: case 0xF2: case 0xF3:
  case 0x2E: case 0x36: case 0x3E: case 0x26: case 0x64: case 0x65:
  case 0x66: case 0x67:
    return true;
  default:
    return false;
  }
}

inline Operand reg_operand(u8 reg, u8 size, bool has_rex)
{
  Operand op;
  op.kind = OperandKind::Reg;
  op.size = size;
  if (size == 1 && !has_rex && reg >= 4 && reg < 8) {
    op.reg = reg - 4;
    op.high8 = true;
  } else {
    op.reg = reg;
  }
  return op;
}

} // namespace detail

// Decodes one instruction. `fetch(i)` returns the i-th byte at `address`,
// or nullopt when the byte cannot be fetched.
template <class Fetch>
DecodeStatus decode_with(Fetch&& fetch, u64 address, DecodedInst& di)
{
  using detail::ByteCursor;
  di = DecodedInst{};
  di.address = address;
  ByteCursor<std::remove_reference_t<Fetch>> cur(fetch);
  auto fail = [&]() { return cur.too_long() ? DecodeStatus::TooLong : DecodeStatus::FetchFault; };

  u8 b;
  for (;;) {
    if (!cur.next(b))
      return fail();
    if (detail::is_legacy_prefix(b)) {
      di.rex.reset(); // a REX not immediately before the opcode is ignored
      switch (b) {
      case 0xF0: di.lock = true; break;
      case 0xF2: di.repne = true; di.rep = false; break;
      case 0xF3: di.rep = true; di.repne = false; break;
      case 0x64: di.segment = kFs; break;
      case 0x65: di.segment = kGs; break;
      case 0x2E: case 0x36: case 0x3E: case 0x26: di.segment = kNoReg; break;
      case 0x66: di.opsize_prefix = true; break;
      case 0x67: di.addrsize_prefix = true; break;
      }
      continue;
    }
    if ((b & 0xF0) == 0x40) {
      di.rex = static_cast<u8>(b & 0x0F);
      continue;
    }
    break;
  }

  if (b == 0x0F) {
    di.map = OpMap::TwoByte;
    if (!cur.next(b))
      return fail();
    if (b == 0x38 || b == 0x3A)
      return DecodeStatus::ThreeByteMap;
  }
  di.opcode = b;

  const auto& cell = detail::row_index().slots[static_cast<unsigned>(di.map)][b];
  const bool any_ext = std::any_of(cell.begin(), cell.begin() + 8, [](auto* r) { return r; });
  if (!cell[8] && !any_ext)
    return DecodeStatus::Unimplemented;

  const bool needs_modrm = any_ext || (cell[8]->flags & row_flag::kModrm);
  const u8 rex = di.rex.value_or(0);
  const bool rex_r = rex & 4, rex_x = rex & 2, rex_b = rex & 1;

  if (needs_modrm) {
    if (!cur.next(b))
      return fail();
    di.modrm = ModRM{static_cast<u8>(b >> 6), static_cast<u8>((b >> 3) & 7), static_cast<u8>(b & 7)};
  }
  di.row = cell[8] ? cell[8] : cell[di.modrm->reg];
  if (!di.row)
    return DecodeStatus::Unimplemented;
  const OpcodeRow& row = *di.row;

  if (di.modrm) {
    const bool is_reg = di.modrm->mod == 3;
    if ((row.flags & row_flag::kMemOnly) && is_reg)
      return DecodeStatus::Unimplemented;
    if ((row.flags & row_flag::kRegOnly) && !is_reg)
      return DecodeStatus::Unimplemented;
  }

  if (row.flags & row_flag::kForce64)
    di.opsize = 8;
  else if (row.flags & row_flag::kDefault64)
    di.opsize = di.opsize_prefix ? 2 : 8;
  else
    di.opsize = di.rex_w() ? 8 : (di.opsize_prefix ? 2 : 4);
  di.addrsize = di.addrsize_prefix ? 4 : 8;

  // ModR/M memory form: SIB and displacement.
  MemRef mref;
  const bool ignore_mod = row.operands[0] == OperandSpec::Rq || row.operands[1] == OperandSpec::Rq;
  if (di.modrm && di.modrm->mod != 3 && !ignore_mod) {
    const auto& m = *di.modrm;
    unsigned disp_bytes = m.mod == 1 ? 1 : (m.mod == 2 ? 4 : 0);
    if (m.rm == 4) {
      if (!cur.next(b))
        return fail();
      di.sib = Sib{static_cast<u8>(b >> 6), static_cast<u8>((b >> 3) & 7), static_cast<u8>(b & 7)};
      const u8 index = di.sib->index | (rex_x ? 8 : 0);
      if (index != 4)
        mref.index = static_cast<i8>(index);
      mref.scale = static_cast<u8>(1u << di.sib->scale);
      if (di.sib->base == 5 && m.mod == 0)
        disp_bytes = 4;
      else
        mref.base = static_cast<i8>(di.sib->base | (rex_b ? 8 : 0));
    } else if (m.rm == 5 && m.mod == 0) {
      mref.base = kRipBase;
      disp_bytes = 4;
    } else {
      mref.base = static_cast<i8>(m.rm | (rex_b ? 8 : 0));
    }
    u64 raw = 0;
    if (!cur.take(disp_bytes, raw))
      return fail();
    di.disp = static_cast<i32>(sign_extend(raw, disp_bytes));
    mref.disp = di.disp;
    mref.segment = di.segment;
  }

  auto rm_operand = [&](u8 size) {
    if (di.modrm->mod == 3)
      return detail::reg_operand(static_cast<u8>(di.modrm->rm | (rex_b ? 8 : 0)), size, di.rex.has_value());
    Operand op;
    op.kind = OperandKind::Mem;
    op.size = size;
    op.mem = mref;
    return op;
  };
  auto gv_operand = [&](u8 size) {
    return detail::reg_operand(static_cast<u8>(di.modrm->reg | (rex_r ? 8 : 0)), size, di.rex.has_value());
  };
  auto imm_operand = [&](unsigned nbytes, OperandKind kind, Operand& op) {
    u64 raw = 0;
    if (!cur.take(nbytes, raw))
      return false;
    di.imm = sign_extend(raw, nbytes);
    op.kind = kind;
    op.imm = di.imm;
    return true;
  };

  const u8 v = di.opsize;
  const u8 z = v == 2 ? 2 : 4;
  for (OperandSpec spec : row.operands) {
    if (spec == OperandSpec::None)
      break;
    Operand op;
    switch (spec) {
    case OperandSpec::None: break;
    case OperandSpec::Eb: op = rm_operand(1); break;
    case OperandSpec::Ev: op = rm_operand(v); break;
    case OperandSpec::Ew: op = rm_operand(2); break;
    case OperandSpec::Ed: op = rm_operand(4); break;
    case OperandSpec::Gb: op = gv_operand(1); break;
    case OperandSpec::Gv: op = gv_operand(v); break;
    case OperandSpec::Rv: op = rm_operand(v); break;
    case OperandSpec::M:
    case OperandSpec::Mp: op = rm_operand(0); break;
    case OperandSpec::Rq:
      op = detail::reg_operand(static_cast<u8>(di.modrm->rm | (rex_b ? 8 : 0)), 8, true);
      break;
    case OperandSpec::Cd:
      op.kind = OperandKind::ControlReg;
      op.size = 8;
      op.reg = static_cast<u8>(di.modrm->reg | (rex_r ? 8 : 0));
      break;
    case OperandSpec::Ib:
      op.size = row.operands[0] == OperandSpec::Eb || row.operands[0] == OperandSpec::AL ||
                        row.operands[0] == OperandSpec::Zb || row.handler == HandlerId::Shift
                    ? 1
                    : v;
      if (!imm_operand(1, OperandKind::Imm, op))
        return fail();
      break;
    case OperandSpec::Iz:
      op.size = v;
      if (!imm_operand(z, OperandKind::Imm, op))
        return fail();
      break;
    case OperandSpec::Iv:
      op.size = v;
      if (!imm_operand(v, OperandKind::Imm, op))
        return fail();
      break;
    case OperandSpec::One:
      op.kind = OperandKind::Imm;
      op.size = 1;
      op.imm = 1;
      break;
    case OperandSpec::AL: op = detail::reg_operand(kRax, 1, true); break;
    case OperandSpec::rAX: op = detail::reg_operand(kRax, v, true); break;
    case OperandSpec::CL: op = detail::reg_operand(kRcx, 1, true); break;
    case OperandSpec::Jb:
      op.size = 8;
      if (!imm_operand(1, OperandKind::Rel, op))
        return fail();
      break;
    case OperandSpec::Jz:
      op.size = 8;
      if (!imm_operand(4, OperandKind::Rel, op))
        return fail();
      break;
    case OperandSpec::Zb:
      op = detail::reg_operand(static_cast<u8>((di.opcode & 7) | (rex_b ? 8 : 0)), 1, di.rex.has_value());
      break;
    case OperandSpec::Zv:
      op = detail::reg_operand(static_cast<u8>((di.opcode & 7) | (rex_b ? 8 : 0)), v, true);
      break;
    }
    di.ops[di.nops++] = op;
  }

  if (row.handler == HandlerId::MovToCr || row.handler == HandlerId::MovFromCr) {
    const u8 cr = row.handler == HandlerId::MovToCr ? di.ops[0].reg : di.ops[1].reg;
    if (cr != 0 && cr != 2 && cr != 3 && cr != 4)
      return DecodeStatus::Unimplemented;
  }

  di.length = static_cast<u8>(cur.pos());
  return DecodeStatus::Ok;
}

// Decodes from an in-memory byte buffer.
inline DecodeStatus decode_bytes(std::span<const u8> bytes, u64 address, DecodedInst& di)
{
  auto fetch = [bytes](unsigned i) -> std::optional<u8> {
    if (i >= bytes.size())
      return std::nullopt;
    return bytes[i];
  };
  return decode_with(fetch, address, di);
}

// ---- text form ----

inline std::string register_name(unsigned reg, unsigned size, bool high8 = false)
{
  static constexpr std::array<std::string_view, 8> k32{"eax", "ecx", "edx", "ebx", "esp", "ebp", "esi", "edi"};
  static constexpr std::array<std::string_view, 8> k16{"ax", "cx", "dx", "bx", "sp", "bp", "si", "di"};
  static constexpr std::array<std::string_view, 8> k8{"al", "cl", "dl", "bl", "spl", "bpl", "sil", "dil"};
  static constexpr std::array<std::string_view, 4> kHigh{"ah", "ch", "dh", "bh"};
  if (high8)
    return std::string(kHigh[reg & 3]);
  if (reg < 8) {
    switch (size) {
    case 1: return std::string(k8[reg]);
    case 2: return std::string(k16[reg]);
    case 4: return std::string(k32[reg]);
    default: return std::string(kGprNames[reg]);
    }
  }
  std::string base = "r" + std::to_string(reg);
  switch (size) {
  case 1: return base + "b";
  case 2: return base + "w";
  case 4: return base + "d";
  default: return base;
  }
}

inline std::string mnemonic(const DecodedInst& di)
{
  if (!di.row)
    return "(bad)";
  const OpcodeRow& row = *di.row;
  switch (row.handler) {
  case HandlerId::ConvertA:
    return di.opsize == 2 ? "cbw" : di.opsize == 4 ? "cwde" : "cdqe";
  case HandlerId::ConvertD:
    return di.opsize == 2 ? "cwd" : di.opsize == 4 ? "cdq" : "cqo";
  case HandlerId::Xchg:
    if (di.opcode == 0x90 && di.map == OpMap::OneByte && di.ops[0].reg == kRax && di.opsize != 2)
      return "nop";
    break;
  default:
    break;
  }
  std::string m(row.mnemonic);
  if (auto pos = m.find('%'); pos != std::string::npos)
    m.replace(pos, 1, kConditionNames[di.opcode & 0xF]);
  return m;
}

inline std::string hex(u64 v)
{
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string format_operand(const DecodedInst& di, const Operand& op)
{
  switch (op.kind) {
  case OperandKind::None: return {};
  case OperandKind::Reg: return register_name(op.reg, op.size, op.high8);
  case OperandKind::ControlReg: return "cr" + std::to_string(op.reg);
  case OperandKind::Imm: return hex(op.imm & width_mask(op.size ? op.size : 8));
  case OperandKind::Rel: return hex(di.next_rip() + op.imm);
  case OperandKind::Mem: break;
  }
  std::string out;
  switch (op.size) {
  case 1: out = "byte ptr "; break;
  case 2: out = "word ptr "; break;
  case 4: out = "dword ptr "; break;
  case 8: out = "qword ptr "; break;
  default: break;
  }
  const MemRef& m = op.mem;
  if (m.segment == kFs)
    out += "fs:";
  else if (m.segment == kGs)
    out += "gs:";
  const unsigned asz = di.addrsize;
  std::string inner;
  if (m.base == kRipBase)
    inner = asz == 4 ? "eip" : "rip";
  else if (m.base != kNoReg)
    inner = register_name(static_cast<unsigned>(m.base), asz);
  if (m.index != kNoReg) {
    if (!inner.empty())
      inner += "+";
    inner += register_name(static_cast<unsigned>(m.index), asz) + "*" + std::to_string(m.scale);
  }
  if (inner.empty()) {
    inner = hex(static_cast<u64>(m.disp) & width_mask(asz));
  } else if (m.disp != 0 || (di.modrm && di.modrm->mod != 0)) {
    inner += m.disp < 0 ? "-" + hex(static_cast<u64>(-m.disp)) : "+" + hex(static_cast<u64>(m.disp));
  }
  return out + "[" + inner + "]";
}

// "mnemonic dst, src" in lower case.
inline std::string disassemble(const DecodedInst& di)
{
  std::string text = mnemonic(di);
  if (text == "nop" && di.map == OpMap::OneByte)
    return text;
  for (unsigned i = 0; i < di.nops; ++i) {
    text += i == 0 ? " " : ", ";
    text += format_operand(di, di.ops[i]);
  }
  return text;
}

// Linear address of a memory operand: base + scale * index + disp, with
// RIP-relative forms relative to `next_rip` and FS/GS bases applied.
inline u64 effective_address(const DecodedInst& di, const Operand& op, u64 next_rip,
                             const MachineState& s) noexcept
{
  const MemRef& m = op.mem;
  u64 ea = static_cast<u64>(m.disp);
  if (m.base == kRipBase)
    ea += next_rip;
  else if (m.base != kNoReg)
    ea += s.gpr[static_cast<unsigned>(m.base)];
  if (m.index != kNoReg)
    ea += s.gpr[static_cast<unsigned>(m.index)] * m.scale;
  if (di.addrsize == 4)
    ea &= 0xFFFFFFFF;
  if (m.segment == kFs)
    ea += s.fs_base;
  else if (m.segment == kGs)
    ea += s.gs_base;
  return ea;
}

inline u64 effective_address(const DecodedInst& di, u64 next_rip, const MachineState& s) noexcept
{
  const Operand* op = di.memory_operand();
  return op ? effective_address(di, *op, next_rip, s) : 0;
}

} // namespace x86sim
