#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "x86sim/bits.hpp"
#include "x86sim/environment.hpp"
#include "x86sim/memory.hpp"
#include "x86sim/msr.hpp"
#include "x86sim/status.hpp"
#include "x86sim/undef.hpp"

namespace x86sim {

enum Gpr : unsigned {
  kRax, kRcx, kRdx, kRbx, kRsp, kRbp, kRsi, kRdi,
  kR8, kR9, kR10, kR11, kR12, kR13, kR14, kR15,
};

inline constexpr std::array<std::string_view, 16> kGprNames{
    "rax", "rcx", "rdx", "rbx", "rsp", "rbp", "rsi", "rdi",
    "r8", "r9", "r10", "r11", "r12", "r13", "r14", "r15"};

enum class RegWidth { Low8, High8, W16, W32, W64 };

enum class Flag : unsigned { CF = 0, PF = 2, AF = 4, ZF = 6, SF = 7, DF = 10, OF = 11 };

inline constexpr std::array<Flag, 7> kAllFlags{Flag::CF, Flag::PF, Flag::AF, Flag::ZF,
                                               Flag::SF, Flag::DF, Flag::OF};
// Order in which undefined arithmetic flags consume undef seeds.
inline constexpr std::array<Flag, 6> kArithFlags{Flag::CF, Flag::PF, Flag::AF,
                                                 Flag::ZF, Flag::SF, Flag::OF};

constexpr std::string_view to_string(Flag f) noexcept
{
  switch (f) {
  case Flag::CF: return "cf";
  case Flag::PF: return "pf";
  case Flag::AF: return "af";
  case Flag::ZF: return "zf";
  case Flag::SF: return "sf";
  case Flag::DF: return "df";
  case Flag::OF: return "of";
  }
  return "?";
}

namespace rflags_layout {
inline constexpr u64 kFixedOne = u64{1} << 1;
inline constexpr u64 kFixedZero = (u64{1} << 3) | (u64{1} << 5) | (u64{1} << 15);
constexpr u64 normalize(u64 v) noexcept { return (v | kFixedOne) & ~kFixedZero; }
} // namespace rflags_layout

enum Segment : unsigned { kEs, kCs, kSs, kDs, kFs, kGs };

struct PseudoDescriptor {
  u64 base{0};
  u16 limit{0};
  bool operator==(const PseudoDescriptor&) const = default;
};

enum class AccessKind { Read, Write, Exec };

// Receives data accesses made by instruction semantics (not fetches).
class AccessObserver {
public:
  virtual ~AccessObserver() = default;
  virtual void on_access(AccessKind kind, u64 lin, std::optional<u64> phys, unsigned nbytes,
                         u64 value) = 0;
};

// Holds an observer without making it part of the machine-visible state.
struct ObserverSlot {
  AccessObserver* ptr{nullptr};
  bool operator==(const ObserverSlot&) const noexcept { return true; }
};

// Owns an interpreter-private cache. Copies start empty and it never takes
// part in state comparison.
struct CacheSlot {
  CacheSlot() = default;
  CacheSlot(const CacheSlot&) noexcept {}
  CacheSlot(CacheSlot&&) noexcept = default;
  CacheSlot& operator=(const CacheSlot&) noexcept
  {
    ptr.reset();
    return *this;
  }
  CacheSlot& operator=(CacheSlot&&) noexcept = default;
  bool operator==(const CacheSlot&) const noexcept { return true; }

  std::unique_ptr<void, void (*)(void*)> ptr{nullptr, [](void*) {}};
};

class MachineState {
public:
  MachineState() = default;
  explicit MachineState(UndefPolicy policy, u64 initial_seed = 0)
      : undef_policy(policy), undef_seed_(initial_seed)
  {
  }

  // ---- general-purpose registers ----

  u64 read_gpr(unsigned index, RegWidth width) const noexcept
  {
    const u64 v = gpr[index & 15];
    switch (width) {
    case RegWidth::Low8: return v & 0xFF;
    case RegWidth::High8: return (v >> 8) & 0xFF;
    case RegWidth::W16: return v & 0xFFFF;
    case RegWidth::W32: return v & 0xFFFFFFFF;
    case RegWidth::W64: return v;
    }
    return v;
  }

  void write_gpr(unsigned index, RegWidth width, u64 value) noexcept
  {
    u64& r = gpr[index & 15];
    switch (width) {
    case RegWidth::Low8: r = (r & ~u64{0xFF}) | (value & 0xFF); break;
    case RegWidth::High8: r = (r & ~u64{0xFF00}) | ((value & 0xFF) << 8); break;
    case RegWidth::W16: r = (r & ~u64{0xFFFF}) | (value & 0xFFFF); break;
    case RegWidth::W32: r = value & 0xFFFFFFFF; break;
    case RegWidth::W64: r = value; break;
    }
  }

  // ---- rip / rflags ----

  u64 rip() const noexcept { return rip_; }

  // Rejects non-canonical addresses, leaving rip untouched.
  bool set_rip(u64 lin) noexcept
  {
    if (!is_canonical(lin))
      return false;
    rip_ = lin;
    return true;
  }

  u64 rflags() const noexcept { return rflags_; }
  void set_rflags(u64 v) noexcept { rflags_ = rflags_layout::normalize(v); }

  bool flag(Flag f) const noexcept { return (rflags_ >> static_cast<unsigned>(f)) & 1; }
  void set_flag(Flag f, bool bit) noexcept
  {
    const u64 m = u64{1} << static_cast<unsigned>(f);
    rflags_ = bit ? (rflags_ | m) : (rflags_ & ~m);
  }

  // ---- model status ----

  const std::optional<ModelStatus>& ms() const noexcept { return ms_; }

  // Records a fault at the current rip. The first status recorded wins.
  void fault(StatusKind kind, std::string detail = {})
  {
    if (!ms_)
      ms_ = ModelStatus{kind, rip_, std::move(detail)};
  }

  // Explicit re-initialization; the only way to clear a populated status.
  void reinitialize_ms(std::optional<ModelStatus> ms) { ms_ = std::move(ms); }

  // ---- indeterminate values ----

  // Returns the next value from the indeterminate pool and advances the seed.
  u64 undef_read() noexcept { return create_undef(undef_policy, undef_seed_++); }
  u64 undef_seed() const noexcept { return undef_seed_; }

  // ---- MSRs by architectural identifier ----

  std::optional<u64> read_msr(u32 identifier) const noexcept
  {
    const auto idx = msr_index(identifier);
    if (!idx)
      return std::nullopt;
    return msr[*idx];
  }

  bool write_msr(u32 identifier, u64 value) noexcept
  {
    const auto idx = msr_index(identifier);
    if (!idx)
      return false;
    msr[*idx] = value;
    if (*idx == static_cast<unsigned>(MsrIndex::FsBase))
      fs_base = value;
    else if (*idx == static_cast<unsigned>(MsrIndex::GsBase))
      gs_base = value;
    return true;
  }

  std::array<u64, 16> gpr{};
  std::array<u16, 6> seg_selector{};
  u64 fs_base{0};
  u64 gs_base{0};
  PseudoDescriptor gdtr{};
  PseudoDescriptor idtr{};
  u64 cr0{0};
  u64 cr2{0};
  u64 cr3{0};
  u64 cr4{0};
  std::array<u64, kMsrCount> msr{};
  PhysicalMemory mem;
  std::optional<u64> halt_addr;
  bool user_level_mode{true};
  bool marking_mode{true};
  OsInfo os_info{OsInfo::Linux};
  UndefPolicy undef_policy{};
  Environment env;
  ObserverSlot observer{};
  CacheSlot decode_cache{};

  bool operator==(const MachineState&) const = default;

private:
  u64 rip_{0};
  u64 rflags_{rflags_layout::kFixedOne};
  std::optional<ModelStatus> ms_;
  u64 undef_seed_{0};
};

} // namespace x86sim
