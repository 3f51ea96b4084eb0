#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "x86sim.hpp"

namespace x86sim::testing {

inline std::string fixture(const std::string& name) { return std::string(X86SIM_FIXTURE_DIR) + "/" + name; }
inline std::string data_file(const std::string& name) { return std::string(X86SIM_DATA_DIR) + "/" + name; }

// Layout shared by generated programs. Everything sits below 1 GiB so the
// default identity map covers it, well away from the page tables.
inline constexpr u64 kCodeBase = 0x400000;
inline constexpr u64 kDataBase = 0x600000;
inline constexpr u64 kDataSize = 0x1000;
inline constexpr u64 kStackTop = 0x7ff000;
inline constexpr u64 kTableBase = 0x10000000;

enum class Mode { User, SystemMarking, SystemNonMarking };

struct Program {
  std::vector<u8> code;
  std::vector<u8> data;
  std::array<u64, 16> regs{};
  u64 rflags{0x2};
};

// Emits random straight-line units drawn from the implemented subset and
// closes the program with a jump back to its start, so any step budget is
// consumed. rbx holds the data base and rsp the stack; neither is ever a
// destination. Forward conditional branches skip exactly one whole unit.
class ProgramGenerator {
public:
  explicit ProgramGenerator(u64 seed) : rng_(seed) {}

  Program generate(unsigned units = 48, bool allow_div = true)
  {
    Program p;
    code_.clear();
    allow_div_ = allow_div;
    for (unsigned i = 0; i < units; ++i)
      unit();
    const i64 back = -static_cast<i64>(code_.size()) - 5;
    emit(0xE9);
    imm(static_cast<u64>(back), 4);
    p.code = code_;
    p.data.resize(kDataSize);
    for (auto& b : p.data)
      b = static_cast<u8>(rng_());
    for (auto& r : p.regs)
      r = value();
    p.regs[kRbx] = kDataBase;
    p.regs[kRsp] = kStackTop;
    p.rflags = 0x2 | (rng_() & 0x8D5);
    return p;
  }

  u64 value()
  {
    switch (rng_() % 6) {
    case 0: return 0;
    case 1: return rng_() & 0xFF;
    case 2: return ~u64{0} - (rng_() & 0xF);
    case 3: return u64{1} << (rng_() % 64);
    default: return rng_();
    }
  }

private:
  static constexpr unsigned kPool[] = {kRax, kRcx, kRdx, kRsi, kRdi, kRbp, 8, 9, 10, 11, 12, 13, 14, 15};

  unsigned reg() { return kPool[rng_() % std::size(kPool)]; }
  unsigned pick(unsigned n) { return static_cast<unsigned>(rng_() % n); }
  u64 disp() { return (rng_() % (kDataSize - 8)); }

  void emit(u8 b) { code_.push_back(b); }
  void imm(u64 v, unsigned n)
  {
    for (unsigned i = 0; i < n; ++i)
      emit(static_cast<u8>(v >> (8 * i)));
  }
  void rex(bool w, unsigned r, unsigned b, bool force = false)
  {
    const u8 v = static_cast<u8>(0x40 | (w ? 8 : 0) | ((r & 8) ? 4 : 0) | ((b & 8) ? 1 : 0));
    if (v != 0x40 || force)
      emit(v);
  }
  void modrm_rr(unsigned reg, unsigned rm) { emit(static_cast<u8>(0xC0 | ((reg & 7) << 3) | (rm & 7))); }
  // [rbx + disp32]
  void modrm_mem(unsigned reg)
  {
    emit(static_cast<u8>(0x80 | ((reg & 7) << 3) | kRbx));
    imm(disp(), 4);
  }

  void rr(std::initializer_list<u8> op, bool w, unsigned reg, unsigned rm, bool byte_regs = false)
  {
    rex(w, reg, rm, byte_regs);
    for (u8 b : op)
      emit(b);
    modrm_rr(reg, rm);
  }
  void rm(std::initializer_list<u8> op, bool w, unsigned reg, bool byte_regs = false)
  {
    rex(w, reg, 0, byte_regs);
    for (u8 b : op)
      emit(b);
    modrm_mem(reg);
  }

  void unit()
  {
    const bool w = rng_() & 1;
    const unsigned d = reg(), s = reg();
    const unsigned cc = pick(16);
    switch (pick(30)) {
    case 0:
    case 1: rr({static_cast<u8>(0x01 + 8 * pick(8))}, w, s, d); break;
    case 2: rr({0x83}, w, pick(8), d), imm(rng_(), 1); break;
    case 3: rr({0x81}, w, pick(8), d), imm(rng_(), 4); break;
    case 4: rm({static_cast<u8>(0x01 + 8 * pick(8))}, w, s); break;
    case 5: rm({static_cast<u8>(0x03 + 8 * pick(8))}, w, d); break;
    case 6: rr({0xC7}, w, 0, d), imm(rng_(), 4); break;
    case 7: rex(true, 0, d), emit(static_cast<u8>(0xB8 + (d & 7))), imm(value(), 8); break;
    case 8: rm({0x8B}, w, d); break;
    case 9: rm({0x89}, w, s); break;
    case 10: rm({0x88}, false, s, true); break;
    case 11: rm({0x0F, static_cast<u8>(0xB6 + 8 * pick(2))}, w, d); break;
    case 12: rr({0x0F, static_cast<u8>(0xBE - 8 * pick(2))}, w, d, s, true); break;
    case 13: {
      static constexpr u8 kExt[] = {0, 1, 4, 5, 7};
      const u8 ext = kExt[pick(5)];
      switch (pick(4)) {
      case 0: rr({0xC1}, w, ext, d), imm(rng_() % 70, 1); break;
      case 1: rr({0xD1}, w, ext, d); break;
      case 2: rr({0xD3}, w, ext, d); break;
      default: rr({0xC0}, false, ext, d, true), imm(rng_() % 20, 1); break;
      }
      break;
    }
    case 14: rr({0xFF}, w, pick(2), d); break;
    case 15: rr({0xF7}, w, 2 + pick(2), d); break;
    case 16: rr({0x0F, 0xAF}, w, d, s); break;
    case 17: rr({0x6B}, w, d, s), imm(rng_(), 1); break;
    case 18: rr({0xF7}, w, 4 + pick(2), s); break;
    case 19:
      if (allow_div_)
        rr({0xF7}, w, 6 + pick(2), s);
      else
        emit(0x90);
      break;
    case 20: rr({0x0F, static_cast<u8>(0x90 + cc)}, false, 0, d, true); break;
    case 21: rr({0x0F, static_cast<u8>(0x40 + cc)}, w, d, s); break;
    case 22: rm({0x8D}, true, d); break;
    case 23: rr({0x87}, w, s, d); break;
    case 24:
      rex(false, 0, s), emit(static_cast<u8>(0x50 + (s & 7)));
      rex(false, 0, d), emit(static_cast<u8>(0x58 + (d & 7)));
      break;
    case 25: rr({0x0F, 0xC7}, w, 6, d); break;
    case 26: rr({static_cast<u8>(0x84 + pick(2))}, w, s, d, true); break;
    case 27: {
      emit(static_cast<u8>(0x70 + cc));
      const std::size_t at = code_.size();
      emit(0);
      unit();
      code_[at] = static_cast<u8>(code_.size() - at - 1);
      break;
    }
    case 28:
      emit(0xE8), imm(0, 4);
      rex(false, 0, d), emit(static_cast<u8>(0x58 + (d & 7)));
      break;
    default:
      switch (pick(3)) {
      case 0: rex(w, 0, 0), emit(0x99); break;
      case 1: rex(w, 0, 0), emit(0x98); break;
      default: emit(0x90); break;
      }
      break;
    }
  }

  std::mt19937_64 rng_;
  std::vector<u8> code_;
  bool allow_div_{true};
};

// Builds a runnable state for `p`. System modes install the identity map at
// kTableBase before anything is written.
inline MachineState make_state(const Program& p, Mode mode, UndefPolicy policy = UndefPolicy::injective())
{
  MachineState s(policy);
  if (mode != Mode::User) {
    init_system_level_mode(s, kTableBase);
    s.marking_mode = mode == Mode::SystemMarking;
  }
  linear_write_bytes(s, kCodeBase, p.code);
  linear_write_bytes(s, kDataBase, p.data);
  s.gpr = p.regs;
  s.set_rflags(p.rflags);
  s.set_rip(kCodeBase);
  return s;
}

// Number of indeterminate values an instruction consumes, from the
// architectural rules for undefined flags, computed on the pre-state.
inline unsigned expected_undef_reads(const DecodedInst& di, const MachineState& before)
{
  const std::string m = mnemonic(di);
  const auto mnem = m.substr(0, m.find(' '));
  if (mnem == "and" || mnem == "or" || mnem == "xor" || mnem == "test")
    return 1;
  if (mnem == "mul" || mnem == "imul")
    return 4;
  if (mnem == "div" || mnem == "idiv")
    return 6;
  if (mnem == "rdrand")
    return 1;
  const bool rot = mnem == "rol" || mnem == "ror";
  const bool sh = mnem == "shl" || mnem == "shr" || mnem == "sar";
  if (!rot && !sh)
    return 0;
  const unsigned w = di.ops[0].size;
  u64 raw;
  if (di.ops[1].kind == OperandKind::Imm)
    raw = di.ops[1].imm;
  else
    raw = before.gpr[kRcx];
  const unsigned count = static_cast<unsigned>(raw) & (w == 8 ? 0x3F : 0x1F);
  if (count == 0)
    return 0;
  unsigned n = count != 1 ? 1 : 0;
  if (sh) {
    n += 1;
    if (mnem != "sar" && count >= 8 * w)
      n += 1;
  }
  return n;
}

// State equality ignoring the pages that hold the page tables.
inline bool equal_outside_tables(const MachineState& a, const MachineState& b)
{
  if (a.gpr != b.gpr || a.rip() != b.rip() || a.rflags() != b.rflags() || a.ms() != b.ms() ||
      a.undef_seed() != b.undef_seed() || !(a.env == b.env))
    return false;
  auto pages = a.mem.populated_pages();
  const auto more = b.mem.populated_pages();
  pages.insert(pages.end(), more.begin(), more.end());
  for (u64 pg : pages) {
    if (pg == kTableBase >> 12 || pg == (kTableBase >> 12) + 1)
      continue;
    for (u64 off = 0; off < kPageSize; off += 8)
      if (a.mem.read((pg << 12) + off, 8) != b.mem.read((pg << 12) + off, 8))
        return false;
  }
  return true;
}

} // namespace x86sim::testing
