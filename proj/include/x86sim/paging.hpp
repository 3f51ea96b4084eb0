#pragma once

#include <array>
#include <optional>
#include <string>

#include "x86sim/bits.hpp"
#include "x86sim/state.hpp"

namespace x86sim {

// IA-32e paging-entry layout.
namespace pte {
inline constexpr u64 kPresent = u64{1} << 0;
inline constexpr u64 kWritable = u64{1} << 1;
inline constexpr u64 kUser = u64{1} << 2;
inline constexpr u64 kAccessed = u64{1} << 5;
inline constexpr u64 kDirty = u64{1} << 6;
inline constexpr u64 kPageSize = u64{1} << 7;
inline constexpr u64 kTableMask = 0x000FFFFFFFFFF000ull;   // bits 51..12
inline constexpr u64 kFrame1GMask = 0x000FFFFFC0000000ull; // bits 51..30
inline constexpr u64 kFrame2MMask = 0x000FFFFFFFE00000ull; // bits 51..21

struct Entry {
  u64 raw;
  constexpr bool present() const noexcept { return raw & kPresent; }
  constexpr bool writable() const noexcept { return raw & kWritable; }
  constexpr bool user() const noexcept { return raw & kUser; }
  constexpr bool accessed() const noexcept { return raw & kAccessed; }
  constexpr bool dirty() const noexcept { return raw & kDirty; }
  constexpr bool large() const noexcept { return raw & kPageSize; }
  constexpr u64 table() const noexcept { return raw & kTableMask; }
};
} // namespace pte

enum class PagingLevel { PML4, PDPT, PD, PT };

struct TouchedEntry {
  u64 addr;
  PagingLevel level;
  bool operator==(const TouchedEntry&) const = default;
};

struct WalkResult {
  u64 phys{0};
  std::array<TouchedEntry, 4> touched{};
  unsigned depth{0};

  std::span<const TouchedEntry> touched_entries() const noexcept { return {touched.data(), depth}; }
};

namespace detail {

enum class WalkError { None, NonCanonical, NotPresent, BadPhysical };

// Four-level walk from cr3. When `mark` is set, A is set on every entry
// referenced and D on the leaf of a write; bits already set are not rewritten.
inline WalkError walk(PhysicalMemory& mem, u64 cr3, u64 lin, AccessKind access, bool mark,
                      WalkResult& out)
{
  out.depth = 0;
  if (!is_canonical(lin))
    return WalkError::NonCanonical;

  static constexpr std::array<PagingLevel, 4> kLevels{PagingLevel::PML4, PagingLevel::PDPT,
                                                      PagingLevel::PD, PagingLevel::PT};
  u64 table = cr3 & pte::kTableMask;
  for (unsigned level = 0; level < 4; ++level) {
    const unsigned shift = 39 - 9 * level;
    const u64 entry_addr = table + ((lin >> shift) & 0x1FF) * 8;
    const auto raw = mem.read(entry_addr, 8);
    if (!raw)
      return WalkError::BadPhysical;
    pte::Entry e{*raw};
    out.touched[out.depth++] = {entry_addr, kLevels[level]};
    if (!e.present())
      return WalkError::NotPresent;

    const bool leaf = level == 3 || ((level == 1 || level == 2) && e.large());
    if (mark) {
      u64 updated = e.raw | pte::kAccessed;
      if (leaf && access == AccessKind::Write)
        updated |= pte::kDirty;
      if (updated != e.raw)
        mem.write(entry_addr, 8, updated);
    }
    if (leaf) {
      switch (level) {
      case 1: out.phys = (e.raw & pte::kFrame1GMask) | (lin & ((u64{1} << 30) - 1)); break;
      case 2: out.phys = (e.raw & pte::kFrame2MMask) | (lin & ((u64{1} << 21) - 1)); break;
      default: out.phys = e.table() | (lin & (kPageSize - 1)); break;
      }
      return WalkError::None;
    }
    table = e.table();
  }
  return WalkError::NotPresent;
}

inline void report_walk_error(MachineState& s, WalkError err, u64 lin)
{
  switch (err) {
  case WalkError::None: return;
  case WalkError::NonCanonical:
    s.fault(StatusKind::BadMemoryAccess, "non-canonical linear address " + std::to_string(lin));
    return;
  case WalkError::NotPresent:
    s.cr2 = lin;
    s.fault(StatusKind::PageFault, "page not present");
    return;
  case WalkError::BadPhysical:
    s.fault(StatusKind::BadMemoryAccess, "paging structure outside physical memory");
    return;
  }
}

// User-level linear memory is indexed by the low 48 bits of a canonical address.
constexpr u64 user_index(u64 lin) noexcept { return lin & ((u64{1} << 48) - 1); }

} // namespace detail

// Translates a linear address in system-level mode, applying marking-mode
// side effects. On failure the state's ms (and cr2 for page faults) is set.
inline std::optional<WalkResult> la_to_pa(MachineState& s, u64 lin, AccessKind access)
{
  WalkResult r;
  const auto err = detail::walk(s.mem, s.cr3, lin, access, s.marking_mode, r);
  if (err != detail::WalkError::None) {
    detail::report_walk_error(s, err, lin);
    return std::nullopt;
  }
  return r;
}

// Side-effect-free translation (never marks, never faults).
inline std::optional<u64> peek_translate(const MachineState& s, u64 lin)
{
  if (s.user_level_mode)
    return is_canonical(lin) ? std::optional<u64>{detail::user_index(lin)} : std::nullopt;
  WalkResult r;
  auto& mem = const_cast<PhysicalMemory&>(s.mem); // walk only writes when marking
  if (detail::walk(mem, s.cr3, lin, AccessKind::Read, false, r) != detail::WalkError::None)
    return std::nullopt;
  return r.phys;
}

namespace detail {

struct Pieces {
  std::array<u64, 2> phys{};
  std::array<unsigned, 2> len{};
  unsigned count{0};
};

// Resolves every page-sized piece of an access before any byte moves, so a
// fault on the second page leaves memory untouched.
inline bool resolve(MachineState& s, u64 lin, unsigned nbytes, AccessKind access, Pieces& out)
{
  if (!is_canonical(lin) || !is_canonical(lin + nbytes - 1)) {
    s.fault(StatusKind::BadMemoryAccess, "non-canonical linear access");
    return false;
  }
  if (s.user_level_mode) {
    out.count = 1;
    out.phys[0] = user_index(lin);
    out.len[0] = nbytes;
    return true;
  }
  const unsigned first = static_cast<unsigned>(
      std::min<u64>(nbytes, kPageSize - (lin & (kPageSize - 1))));
  out.count = first == nbytes ? 1 : 2;
  out.len[0] = first;
  out.len[1] = nbytes - first;
  for (unsigned i = 0; i < out.count; ++i) {
    const u64 piece_lin = i == 0 ? lin : lin + first;
    auto r = la_to_pa(s, piece_lin, access);
    if (!r)
      return false;
    out.phys[i] = r->phys;
  }
  return true;
}

} // namespace detail

// Uniform linear-memory read of 1..8 bytes.
inline std::optional<u64> linear_read(MachineState& s, u64 lin, unsigned nbytes,
                                      AccessKind access = AccessKind::Read)
{
  detail::Pieces p;
  if (!detail::resolve(s, lin, nbytes, access, p))
    return std::nullopt;
  u64 value = 0;
  unsigned shift = 0;
  for (unsigned i = 0; i < p.count; ++i) {
    const auto v = s.mem.read(p.phys[i], p.len[i]);
    if (!v) {
      s.fault(StatusKind::BadMemoryAccess, "physical address out of range");
      return std::nullopt;
    }
    value |= *v << shift;
    shift += p.len[i] * 8;
  }
  if (s.observer.ptr && access != AccessKind::Exec)
    s.observer.ptr->on_access(AccessKind::Read, lin,
                              s.user_level_mode ? std::nullopt : std::optional<u64>{p.phys[0]},
                              nbytes, value);
  return value;
}

inline bool linear_write(MachineState& s, u64 lin, unsigned nbytes, u64 value)
{
  detail::Pieces p;
  if (!detail::resolve(s, lin, nbytes, AccessKind::Write, p))
    return false;
  for (unsigned i = 0; i < p.count; ++i)
    if (!PhysicalMemory::in_range(p.phys[i], p.len[i])) {
      s.fault(StatusKind::BadMemoryAccess, "physical address out of range");
      return false;
    }
  u64 rest = value;
  for (unsigned i = 0; i < p.count; ++i) {
    s.mem.write(p.phys[i], p.len[i], rest);
    rest = p.len[i] >= 8 ? 0 : rest >> (p.len[i] * 8);
  }
  if (s.observer.ptr)
    s.observer.ptr->on_access(AccessKind::Write, lin,
                              s.user_level_mode ? std::nullopt : std::optional<u64>{p.phys[0]},
                              nbytes, value & width_mask(nbytes));
  return true;
}

inline std::optional<u128> linear_read128(MachineState& s, u64 lin)
{
  const auto lo = linear_read(s, lin, 8);
  if (!lo)
    return std::nullopt;
  const auto hi = linear_read(s, lin + 8, 8);
  if (!hi)
    return std::nullopt;
  return u128{*lo} | (u128{*hi} << 64);
}

// Observation path for debuggers and breakpoints: no marking, no faults,
// no observer callbacks.
inline std::optional<u64> peek_linear(const MachineState& s, u64 lin, unsigned nbytes)
{
  u64 value = 0;
  for (unsigned i = 0; i < nbytes; ++i) {
    const auto pa = peek_translate(s, lin + i);
    if (!pa || *pa >= kPhysicalLimit)
      return std::nullopt;
    value |= u64{s.mem.byte(*pa)} << (8 * i);
  }
  return value;
}

// Writes a byte sequence through the linear interface (loader, init).
inline bool linear_write_bytes(MachineState& s, u64 lin, std::span<const u8> bytes)
{
  for (std::size_t i = 0; i < bytes.size(); ++i)
    if (!linear_write(s, lin + i, 1, bytes[i]))
      return false;
  return true;
}

// Switches to system-level mode and installs an identity map of the first
// 512 GiB: one PML4 page at `paddr` whose entry 0 points to a PDPT at
// paddr + 0x1000 holding 512 present 1 GiB leaves.
inline bool init_system_level_mode(MachineState& s, u64 paddr)
{
  if ((paddr & (kPageSize - 1)) != 0 || !PhysicalMemory::in_range(paddr, 2 * kPageSize)) {
    s.fault(StatusKind::BadMemoryAccess, "page-table base must be 4 KiB aligned and in range");
    return false;
  }
  s.user_level_mode = false;
  s.cr3 = paddr;
  const u64 pdpt = paddr + kPageSize;
  s.mem.write(paddr, 8, pdpt | pte::kPresent | pte::kWritable | pte::kUser);
  for (u64 i = 1; i < 512; ++i)
    s.mem.write(paddr + i * 8, 8, 0);
  for (u64 i = 0; i < 512; ++i)
    s.mem.write(pdpt + i * 8, 8,
                (i << 30) | pte::kPresent | pte::kWritable | pte::kUser | pte::kPageSize);
  return true;
}

} // namespace x86sim
