#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>

#include "x86sim/decoder.hpp"
#include "x86sim/flags.hpp"
#include "x86sim/paging.hpp"
#include "x86sim/state.hpp"
#include "x86sim/syscalls.hpp"

namespace x86sim {

// Outcome of a semantic function.
enum class Flow { Next, Jump, Fault };

using SemanticFn = Flow (*)(MachineState&, const DecodedInst&);

namespace sem {

constexpr RegWidth reg_width(const Operand& op) noexcept
{
  switch (op.size) {
  case 1: return op.high8 ? RegWidth::High8 : RegWidth::Low8;
  case 2: return RegWidth::W16;
  case 4: return RegWidth::W32;
  default: return RegWidth::W64;
  }
}

constexpr RegWidth width_of(unsigned bytes) noexcept
{
  switch (bytes) {
  case 1: return RegWidth::Low8;
  case 2: return RegWidth::W16;
  case 4: return RegWidth::W32;
  default: return RegWidth::W64;
  }
}

inline std::optional<u64> read(MachineState& s, const DecodedInst& di, const Operand& op)
{
  switch (op.kind) {
  case OperandKind::Reg: {
    const u64 v = s.gpr[op.reg & 15];
    return op.high8 ? (v >> 8) & 0xFF : v & width_mask(op.size);
  }
  case OperandKind::Imm: return op.imm & width_mask(op.size);
  case OperandKind::Mem:
    return linear_read(s, effective_address(di, op, di.next_rip(), s), op.size);
  default: return u64{0};
  }
}

inline bool write(MachineState& s, const DecodedInst& di, const Operand& op, u64 value)
{
  if (op.kind == OperandKind::Reg) {
    if (op.size >= 4)
      s.gpr[op.reg & 15] = value & width_mask(op.size);
    else
      s.write_gpr(op.reg, reg_width(op), value);
    return true;
  }
  return linear_write(s, effective_address(di, op, di.next_rip(), s), op.size, value);
}

inline bool condition(const MachineState& s, unsigned cc) noexcept
{
  bool r = false;
  switch (cc >> 1) {
  case 0: r = s.flag(Flag::OF); break;
  case 1: r = s.flag(Flag::CF); break;
  case 2: r = s.flag(Flag::ZF); break;
  case 3: r = s.flag(Flag::CF) || s.flag(Flag::ZF); break;
  case 4: r = s.flag(Flag::SF); break;
  case 5: r = s.flag(Flag::PF); break;
  case 6: r = s.flag(Flag::SF) != s.flag(Flag::OF); break;
  case 7: r = s.flag(Flag::ZF) || (s.flag(Flag::SF) != s.flag(Flag::OF)); break;
  }
  return (cc & 1) ? !r : r;
}

inline Flow jump_to(MachineState& s, u64 target)
{
  if (!s.set_rip(target)) {
    s.fault(StatusKind::BadMemoryAccess, "branch to non-canonical address");
    return Flow::Fault;
  }
  return Flow::Jump;
}

inline bool push(MachineState& s, unsigned size, u64 value)
{
  const u64 rsp = s.gpr[kRsp] - size;
  if (!linear_write(s, rsp, size, value))
    return false;
  s.gpr[kRsp] = rsp;
  return true;
}

inline Flow mov(MachineState& s, const DecodedInst& di)
{
  const auto v = read(s, di, di.ops[1]);
  if (!v || !write(s, di, di.ops[0], *v))
    return Flow::Fault;
  return Flow::Next;
}

inline Flow movzx(MachineState& s, const DecodedInst& di)
{
  const auto v = read(s, di, di.ops[1]);
  if (!v)
    return Flow::Fault;
  write(s, di, di.ops[0], *v);
  return Flow::Next;
}

inline Flow movsx(MachineState& s, const DecodedInst& di)
{
  const auto v = read(s, di, di.ops[1]);
  if (!v)
    return Flow::Fault;
  write(s, di, di.ops[0], sign_extend(*v, di.ops[1].size) & width_mask(di.ops[0].size));
  return Flow::Next;
}

inline Flow lea(MachineState& s, const DecodedInst& di)
{
  Operand addr = di.ops[1];
  addr.mem.segment = kNoReg;
  write(s, di, di.ops[0], effective_address(di, addr, di.next_rip(), s) & width_mask(di.opsize));
  return Flow::Next;
}

inline Flow xchg(MachineState& s, const DecodedInst& di)
{
  if (di.opcode == 0x90 && di.map == OpMap::OneByte && di.ops[0].reg == kRax)
    return Flow::Next; // 90 and 66 90 are no-ops
  const auto a = read(s, di, di.ops[0]);
  if (!a)
    return Flow::Fault;
  const auto b = read(s, di, di.ops[1]);
  if (!b)
    return Flow::Fault;
  if (!write(s, di, di.ops[0], *b))
    return Flow::Fault;
  write(s, di, di.ops[1], *a);
  return Flow::Next;
}

inline Flow push_op(MachineState& s, const DecodedInst& di)
{
  const auto v = read(s, di, di.ops[0]);
  if (!v || !push(s, di.opsize, *v & width_mask(di.opsize)))
    return Flow::Fault;
  return Flow::Next;
}

inline Flow pop_op(MachineState& s, const DecodedInst& di)
{
  const u64 rsp = s.gpr[kRsp];
  const auto v = linear_read(s, rsp, di.opsize);
  if (!v)
    return Flow::Fault;
  // The destination address is computed with the incremented rsp.
  s.gpr[kRsp] = rsp + di.opsize;
  if (!write(s, di, di.ops[0], *v)) {
    s.gpr[kRsp] = rsp;
    return Flow::Fault;
  }
  return Flow::Next;
}

inline Flow cmovcc(MachineState& s, const DecodedInst& di)
{
  const auto v = read(s, di, di.ops[1]);
  if (!v)
    return Flow::Fault;
  if (condition(s, di.opcode & 0xF))
    write(s, di, di.ops[0], *v);
  else if (di.ops[0].size == 4)
    s.write_gpr(di.ops[0].reg, RegWidth::W32, s.read_gpr(di.ops[0].reg, RegWidth::W32));
  return Flow::Next;
}

inline Flow setcc(MachineState& s, const DecodedInst& di)
{
  return write(s, di, di.ops[0], condition(s, di.opcode & 0xF) ? 1 : 0) ? Flow::Next : Flow::Fault;
}

inline Flow alu(MachineState& s, const DecodedInst& di)
{
  const unsigned w = di.ops[0].size;
  const u64 m = width_mask(w);
  const auto a = read(s, di, di.ops[0]);
  if (!a)
    return Flow::Fault;
  const auto bv = read(s, di, di.ops[1]);
  if (!bv)
    return Flow::Fault;
  const u64 b = *bv & m;
  const bool cf = s.flag(Flag::CF);
  u64 r = 0;
  FlagEffect fx;
  switch (static_cast<AluOp>(di.row->aux)) {
  case kAdd: r = (*a + b) & m; fx = arith_flags(ArithOp::Add, w, *a, b, r); break;
  case kAdc: r = (*a + b + cf) & m; fx = arith_flags(ArithOp::Adc, w, *a, b, r, cf); break;
  case kSub:
  case kCmp: r = (*a - b) & m; fx = arith_flags(ArithOp::Sub, w, *a, b, r); break;
  case kSbb: r = (*a - b - cf) & m; fx = arith_flags(ArithOp::Sbb, w, *a, b, r, cf); break;
  case kAnd: r = *a & b; fx = arith_flags(ArithOp::Logic, w, *a, b, r); break;
  case kOr: r = *a | b; fx = arith_flags(ArithOp::Logic, w, *a, b, r); break;
  case kXor: r = *a ^ b; fx = arith_flags(ArithOp::Logic, w, *a, b, r); break;
  }
  if (di.row->aux != kCmp && !write(s, di, di.ops[0], r))
    return Flow::Fault;
  apply_flags(s, fx);
  return Flow::Next;
}

inline Flow test(MachineState& s, const DecodedInst& di)
{
  const unsigned w = di.ops[0].size;
  const auto a = read(s, di, di.ops[0]);
  if (!a)
    return Flow::Fault;
  const auto b = read(s, di, di.ops[1]);
  if (!b)
    return Flow::Fault;
  const u64 r = *a & *b & width_mask(w);
  apply_flags(s, arith_flags(ArithOp::Logic, w, *a, *b, r));
  return Flow::Next;
}

inline Flow inc_dec(MachineState& s, const DecodedInst& di)
{
  const unsigned w = di.ops[0].size;
  const auto a = read(s, di, di.ops[0]);
  if (!a)
    return Flow::Fault;
  const bool dec = di.row->aux == 1;
  const u64 r = (dec ? *a - 1 : *a + 1) & width_mask(w);
  if (!write(s, di, di.ops[0], r))
    return Flow::Fault;
  apply_flags(s, arith_flags(dec ? ArithOp::Dec : ArithOp::Inc, w, *a, 1, r));
  return Flow::Next;
}

inline Flow neg(MachineState& s, const DecodedInst& di)
{
  const unsigned w = di.ops[0].size;
  const auto a = read(s, di, di.ops[0]);
  if (!a)
    return Flow::Fault;
  const u64 r = (0 - *a) & width_mask(w);
  if (!write(s, di, di.ops[0], r))
    return Flow::Fault;
  apply_flags(s, arith_flags(ArithOp::Neg, w, *a, 0, r));
  return Flow::Next;
}

inline Flow not_op(MachineState& s, const DecodedInst& di)
{
  const auto a = read(s, di, di.ops[0]);
  if (!a || !write(s, di, di.ops[0], ~*a & width_mask(di.ops[0].size)))
    return Flow::Fault;
  return Flow::Next;
}

// rdx:rax (or ax for byte forms) as a double-width value.
inline u128 wide_accumulator(const MachineState& s, unsigned w)
{
  if (w == 1)
    return s.read_gpr(kRax, RegWidth::W16);
  const RegWidth rw = width_of(w);
  return (u128{s.read_gpr(kRdx, rw)} << (8 * w)) | s.read_gpr(kRax, rw);
}

inline void store_pair(MachineState& s, unsigned w, u64 low, u64 high)
{
  if (w == 1) {
    s.write_gpr(kRax, RegWidth::Low8, low);
    s.write_gpr(kRax, RegWidth::High8, high);
    return;
  }
  s.write_gpr(kRax, width_of(w), low);
  s.write_gpr(kRdx, width_of(w), high);
}

inline Flow mul_div(MachineState& s, const DecodedInst& di)
{
  const unsigned w = di.ops[0].size;
  const unsigned bits = 8 * w;
  const u64 m = width_mask(w);
  const auto src = read(s, di, di.ops[0]);
  if (!src)
    return Flow::Fault;
  FlagEffect fx;
  switch (static_cast<MulDivOp>(di.row->aux)) {
  case kMul:
  case kImul1: {
    const bool is_signed = di.row->aux == kImul1;
    const u64 a = s.read_gpr(kRax, width_of(w));
    u128 product;
    bool overflow;
    if (is_signed) {
      const __int128 p = static_cast<__int128>(static_cast<i64>(sign_extend(a, w))) *
                         static_cast<i64>(sign_extend(*src, w));
      product = static_cast<u128>(p);
      overflow = p != static_cast<i64>(sign_extend(static_cast<u64>(p) & m, w));
    } else {
      product = u128{a} * *src;
      overflow = (product >> bits) != 0;
    }
    const u64 low = static_cast<u64>(product) & m;
    const u64 high = static_cast<u64>(product >> bits) & m;
    store_pair(s, w, low, high);
    fx.assign(FlagEffect::kCF, bit_value(overflow));
    fx.assign(FlagEffect::kOF, bit_value(overflow));
    for (auto f : {FlagEffect::kPF, FlagEffect::kAF, FlagEffect::kZF, FlagEffect::kSF})
      fx.assign(f, FlagValue::Undefined);
    break;
  }
  case kDiv:
  case kIdiv: {
    const u64 divisor = *src;
    if (divisor == 0) {
      s.fault(StatusKind::DivideError, "divide by zero");
      return Flow::Fault;
    }
    const u128 dividend = wide_accumulator(s, w);
    u64 q, r;
    if (di.row->aux == kDiv) {
      const u128 wq = dividend / divisor;
      if (wq > m) {
        s.fault(StatusKind::DivideError, "quotient overflow");
        return Flow::Fault;
      }
      q = static_cast<u64>(wq);
      r = static_cast<u64>(dividend % divisor);
    } else {
      // Sign-extend the 2w-byte dividend to 128 bits.
      const unsigned shift = 128 - 2 * bits;
      const __int128 sd = static_cast<__int128>(dividend << shift) >> shift;
      const __int128 sv = static_cast<i64>(sign_extend(divisor, w));
      const __int128 lo = -(static_cast<__int128>(1) << (bits - 1));
      const __int128 hi = (static_cast<__int128>(1) << (bits - 1)) - 1;
      const bool min_by_neg1 = w == 8 && sv == -1 && sd == (static_cast<__int128>(1) << 127);
      const __int128 wq = min_by_neg1 ? 0 : sd / sv;
      if (min_by_neg1 || wq < lo || wq > hi) {
        s.fault(StatusKind::DivideError, "quotient overflow");
        return Flow::Fault;
      }
      q = static_cast<u64>(wq) & m;
      r = static_cast<u64>(sd % sv) & m;
    }
    store_pair(s, w, q, r);
    fx.undef = 0x3F;
    break;
  }
  }
  apply_flags(s, fx);
  return Flow::Next;
}

inline Flow imul(MachineState& s, const DecodedInst& di)
{
  const unsigned w = di.ops[0].size;
  const bool three = di.nops == 3;
  const auto a = read(s, di, di.ops[three ? 1 : 0]);
  if (!a)
    return Flow::Fault;
  const auto b = read(s, di, di.ops[three ? 2 : 1]);
  if (!b)
    return Flow::Fault;
  const __int128 p = static_cast<__int128>(static_cast<i64>(sign_extend(*a, w))) *
                     static_cast<i64>(sign_extend(*b & width_mask(w), w));
  const u64 r = static_cast<u64>(p) & width_mask(w);
  const bool overflow = p != static_cast<i64>(sign_extend(r, w));
  write(s, di, di.ops[0], r);
  FlagEffect fx;
  fx.assign(FlagEffect::kCF, bit_value(overflow));
  fx.assign(FlagEffect::kOF, bit_value(overflow));
  for (auto f : {FlagEffect::kPF, FlagEffect::kAF, FlagEffect::kZF, FlagEffect::kSF})
    fx.assign(f, FlagValue::Undefined);
  apply_flags(s, fx);
  return Flow::Next;
}

inline Flow convert_a(MachineState& s, const DecodedInst& di)
{
  const unsigned w = di.opsize;
  const u64 half = s.read_gpr(kRax, width_of(w / 2));
  s.write_gpr(kRax, width_of(w), sign_extend(half, w / 2));
  return Flow::Next;
}

inline Flow convert_d(MachineState& s, const DecodedInst& di)
{
  const unsigned w = di.opsize;
  const bool negative = s.read_gpr(kRax, width_of(w)) & sign_bit(w);
  s.write_gpr(kRdx, width_of(w), negative ? ~u64{0} : 0);
  return Flow::Next;
}

inline Flow shift(MachineState& s, const DecodedInst& di)
{
  const unsigned w = di.ops[0].size;
  const unsigned bits = 8 * w;
  const u64 m = width_mask(w);
  const u64 msb = sign_bit(w);
  const auto a = read(s, di, di.ops[0]);
  if (!a)
    return Flow::Fault;
  const auto cv = read(s, di, di.ops[1]);
  if (!cv)
    return Flow::Fault;
  const unsigned count = static_cast<unsigned>(*cv) & (w == 8 ? 0x3F : 0x1F);
  if (count == 0)
    return Flow::Next;

  const auto op = static_cast<ShiftOp>(di.row->aux);
  FlagEffect fx;
  u64 r = 0;
  if (op == kRol || op == kRor) {
    const unsigned n = count % bits;
    if (op == kRol) {
      r = n ? ((*a << n) | (*a >> (bits - n))) & m : *a;
      const bool cf = r & 1;
      fx.assign(FlagEffect::kCF, bit_value(cf));
      fx.assign(FlagEffect::kOF, count == 1 ? bit_value(((r & msb) != 0) != cf) : FlagValue::Undefined);
    } else {
      r = n ? ((*a >> n) | (*a << (bits - n))) & m : *a;
      const bool top = r & msb, next = r & (msb >> 1);
      fx.assign(FlagEffect::kCF, bit_value(top));
      fx.assign(FlagEffect::kOF, count == 1 ? bit_value(top != next) : FlagValue::Undefined);
    }
  } else {
    bool cf = false, cf_defined = true;
    switch (op) {
    case kShl:
      r = count < bits ? (*a << count) & m : 0;
      if (count < bits)
        cf = (*a >> (bits - count)) & 1;
      else
        cf_defined = false;
      break;
    case kShr:
      r = count < bits ? *a >> count : 0;
      if (count < bits)
        cf = (*a >> (count - 1)) & 1;
      else
        cf_defined = false;
      break;
    default: {
      const i64 sa = static_cast<i64>(sign_extend(*a, w));
      r = static_cast<u64>(sa >> std::min(count, 63u)) & m;
      cf = (sa >> std::min(count - 1, 63u)) & 1;
      break;
    }
    }
    fx.assign(FlagEffect::kCF, cf_defined ? bit_value(cf) : FlagValue::Undefined);
    fx.assign(FlagEffect::kZF, bit_value(r == 0));
    fx.assign(FlagEffect::kSF, bit_value(r & msb));
    fx.assign(FlagEffect::kPF, bit_value(even_parity(static_cast<u8>(r))));
    fx.assign(FlagEffect::kAF, FlagValue::Undefined);
    if (count != 1)
      fx.assign(FlagEffect::kOF, FlagValue::Undefined);
    else if (op == kShl)
      fx.assign(FlagEffect::kOF, bit_value(((r & msb) != 0) != cf));
    else if (op == kShr)
      fx.assign(FlagEffect::kOF, bit_value(*a & msb));
    else
      fx.assign(FlagEffect::kOF, FlagValue::Clear);
  }
  if (!write(s, di, di.ops[0], r))
    return Flow::Fault;
  apply_flags(s, fx);
  return Flow::Next;
}

inline u64 branch_target(const DecodedInst& di) { return di.next_rip() + di.ops[0].imm; }

inline Flow jmp(MachineState& s, const DecodedInst& di) { return jump_to(s, branch_target(di)); }

inline Flow jcc(MachineState& s, const DecodedInst& di)
{
  return condition(s, di.opcode & 0xF) ? jump_to(s, branch_target(di)) : Flow::Next;
}

inline Flow call(MachineState& s, const DecodedInst& di)
{
  const u64 target = branch_target(di);
  if (!is_canonical(target)) {
    s.fault(StatusKind::BadMemoryAccess, "branch to non-canonical address");
    return Flow::Fault;
  }
  if (!push(s, 8, di.next_rip()))
    return Flow::Fault;
  return jump_to(s, target);
}

inline Flow ret(MachineState& s, const DecodedInst&)
{
  const u64 rsp = s.gpr[kRsp];
  const auto target = linear_read(s, rsp, 8);
  if (!target)
    return Flow::Fault;
  if (jump_to(s, *target) == Flow::Fault)
    return Flow::Fault;
  s.gpr[kRsp] = rsp + 8;
  return Flow::Jump;
}

inline Flow nop(MachineState&, const DecodedInst&) { return Flow::Next; }

inline Flow rdrand(MachineState& s, const DecodedInst& di)
{
  write(s, di, di.ops[0], s.undef_read() & width_mask(di.ops[0].size));
  for (Flag f : kArithFlags)
    s.set_flag(f, f == Flag::CF);
  return Flow::Next;
}

inline Flow syscall(MachineState& s, const DecodedInst& di)
{
  if (s.user_level_mode)
    return env_syscall(s) ? Flow::Next : Flow::Fault;
  const u64 target = s.msr[static_cast<unsigned>(MsrIndex::Lstar)];
  if (!is_canonical(target)) {
    s.fault(StatusKind::BadMemoryAccess, "syscall target non-canonical");
    return Flow::Fault;
  }
  s.gpr[kRcx] = di.next_rip();
  s.gpr[kR11] = s.rflags();
  s.set_rflags(s.rflags() & ~s.msr[static_cast<unsigned>(MsrIndex::Fmask)]);
  return jump_to(s, target);
}

inline Flow sysret(MachineState& s, const DecodedInst&)
{
  if (!is_canonical(s.gpr[kRcx])) {
    s.fault(StatusKind::BadMemoryAccess, "sysret to non-canonical address");
    return Flow::Fault;
  }
  const u16 base = static_cast<u16>(s.msr[static_cast<unsigned>(MsrIndex::Star)] >> 48);
  s.seg_selector[kCs] = static_cast<u16>((base + 16) | 3);
  s.seg_selector[kSs] = static_cast<u16>((base + 8) | 3);
  s.set_rflags((s.gpr[kR11] & 0x3C7FD7) | 2);
  return jump_to(s, s.gpr[kRcx]);
}

inline u64* control_register(MachineState& s, unsigned n)
{
  switch (n) {
  case 0: return &s.cr0;
  case 2: return &s.cr2;
  case 3: return &s.cr3;
  case 4: return &s.cr4;
  default: return nullptr;
  }
}

inline Flow mov_from_cr(MachineState& s, const DecodedInst& di)
{
  s.gpr[di.ops[0].reg] = *control_register(s, di.ops[1].reg);
  return Flow::Next;
}

inline Flow mov_to_cr(MachineState& s, const DecodedInst& di)
{
  *control_register(s, di.ops[0].reg) = s.gpr[di.ops[1].reg];
  return Flow::Next;
}

inline Flow load_descriptor(MachineState& s, const DecodedInst& di, PseudoDescriptor& dst)
{
  const u64 ea = effective_address(di, di.ops[0], di.next_rip(), s);
  const auto limit = linear_read(s, ea, 2);
  if (!limit)
    return Flow::Fault;
  const auto base = linear_read(s, ea + 2, 8);
  if (!base)
    return Flow::Fault;
  dst.limit = static_cast<u16>(*limit);
  dst.base = *base;
  return Flow::Next;
}

inline Flow lgdt(MachineState& s, const DecodedInst& di) { return load_descriptor(s, di, s.gdtr); }
inline Flow lidt(MachineState& s, const DecodedInst& di) { return load_descriptor(s, di, s.idtr); }

inline Flow rdmsr(MachineState& s, const DecodedInst&)
{
  const u32 id = static_cast<u32>(s.gpr[kRcx]);
  const auto v = s.read_msr(id);
  if (!v) {
    s.fault(StatusKind::UnimplementedOpcode, "unimplemented MSR " + hex(id));
    return Flow::Fault;
  }
  s.gpr[kRax] = *v & 0xFFFFFFFF;
  s.gpr[kRdx] = *v >> 32;
  return Flow::Next;
}

inline Flow wrmsr(MachineState& s, const DecodedInst&)
{
  const u32 id = static_cast<u32>(s.gpr[kRcx]);
  const u64 v = (s.gpr[kRdx] << 32) | (s.gpr[kRax] & 0xFFFFFFFF);
  if (!s.write_msr(id, v)) {
    s.fault(StatusKind::UnimplementedOpcode, "unimplemented MSR " + hex(id));
    return Flow::Fault;
  }
  return Flow::Next;
}

} // namespace sem

// Semantic functions, indexed by HandlerId.
inline constexpr std::array<SemanticFn, static_cast<std::size_t>(HandlerId::Count_)> kHandlers{
    sem::mov,       sem::movzx,     sem::movsx,   sem::lea,      sem::xchg,       sem::push_op,
    sem::pop_op,    sem::cmovcc,    sem::setcc,   sem::alu,      sem::test,       sem::inc_dec,
    sem::neg,       sem::not_op,    sem::mul_div, sem::imul,     sem::convert_a,  sem::convert_d,
    sem::shift,     sem::jmp,       sem::jcc,     sem::call,     sem::ret,        sem::nop,
    sem::rdrand,    sem::syscall,   sem::sysret,  sem::mov_from_cr, sem::mov_to_cr, sem::lgdt,
    sem::lidt,      sem::rdmsr,     sem::wrmsr,
};

// Executes a decoded instruction and advances rip. On a fault the status is
// populated and rip still addresses the faulting instruction.
inline Flow exec_instruction(MachineState& s, const DecodedInst& di)
{
  if ((di.row->flags & row_flag::kSystemOnly) && s.user_level_mode) {
    s.fault(StatusKind::UnimplementedOpcode, "system instruction in user-level mode: " + disassemble(di));
    return Flow::Fault;
  }
  const Flow f = kHandlers[static_cast<std::size_t>(di.row->handler)](s, di);
  if (f == Flow::Next && !s.set_rip(di.next_rip())) {
    s.fault(StatusKind::BadMemoryAccess, "rip advanced to non-canonical address");
    return Flow::Fault;
  }
  return f;
}

} // namespace x86sim
