#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "x86sim/bits.hpp"

namespace x86sim {

// Sparse byte store over [0, 2^52). Unwritten bytes read as zero.
//
// Storage is a map of 4 KiB pages. Page pointers handed out by page() and
// page_for_write() stay valid until the memory is reassigned or destroyed;
// unordered_map nodes never move.
//
// Pages can be flagged as holding decoded instructions. Any write to a
// flagged page advances code_epoch(), which decode caches compare against.
class PhysicalMemory {
public:
  using Page = std::array<u8, kPageSize>;

  PhysicalMemory() = default;
  PhysicalMemory(const PhysicalMemory& other) : pages_(other.pages_), code_epoch_(other.code_epoch_) {}
  PhysicalMemory(PhysicalMemory&& other) noexcept
      : pages_(std::move(other.pages_)), code_epoch_(other.code_epoch_)
  {
    other.forget();
  }
  PhysicalMemory& operator=(const PhysicalMemory& other)
  {
    if (this != &other) {
      pages_ = other.pages_;
      code_epoch_ = std::max(code_epoch_, other.code_epoch_) + 1;
      forget();
    }
    return *this;
  }
  PhysicalMemory& operator=(PhysicalMemory&& other) noexcept
  {
    pages_ = std::move(other.pages_);
    code_epoch_ = std::max(code_epoch_, other.code_epoch_) + 1;
    forget();
    other.forget();
    return *this;
  }

  static constexpr bool in_range(u64 addr, u64 nbytes) noexcept
  {
    return addr < kPhysicalLimit && nbytes <= kPhysicalLimit - addr;
  }

  // Little-endian read of 1..8 bytes. nullopt when out of range.
  std::optional<u64> read(u64 addr, unsigned nbytes) const
  {
    if (!in_range(addr, nbytes))
      return std::nullopt;
    const u64 off = addr & (kPageSize - 1);
    if (off + nbytes <= kPageSize) {
      const Page* p = page(addr >> 12);
      if (!p)
        return u64{0};
      u64 v = 0;
      for (unsigned i = nbytes; i-- > 0;)
        v = (v << 8) | (*p)[off + i];
      return v;
    }
    u64 v = 0;
    for (unsigned i = nbytes; i-- > 0;)
      v = (v << 8) | byte(addr + i);
    return v;
  }

  std::optional<u128> read128(u64 addr) const
  {
    if (!in_range(addr, 16))
      return std::nullopt;
    const u128 lo = *read(addr, 8);
    const u128 hi = *read(addr + 8, 8);
    return lo | (hi << 64);
  }

  // Little-endian write of 1..8 bytes. false when out of range.
  bool write(u64 addr, unsigned nbytes, u64 value)
  {
    if (!in_range(addr, nbytes))
      return false;
    const u64 off = addr & (kPageSize - 1);
    if (off + nbytes <= kPageSize) {
      Page& p = page_for_write(addr >> 12);
      for (unsigned i = 0; i < nbytes; ++i, value >>= 8)
        p[off + i] = static_cast<u8>(value);
      return true;
    }
    for (unsigned i = 0; i < nbytes; ++i, value >>= 8)
      set_byte(addr + i, static_cast<u8>(value));
    return true;
  }

  bool write128(u64 addr, u128 value)
  {
    if (!in_range(addr, 16))
      return false;
    write(addr, 8, static_cast<u64>(value));
    write(addr + 8, 8, static_cast<u64>(value >> 64));
    return true;
  }

  u8 byte(u64 addr) const
  {
    const Page* p = page(addr >> 12);
    return p ? (*p)[addr & (kPageSize - 1)] : 0;
  }

  void set_byte(u64 addr, u8 value) { page_for_write(addr >> 12)[addr & (kPageSize - 1)] = value; }

  bool write_bytes(u64 addr, std::span<const u8> bytes)
  {
    if (!in_range(addr, bytes.size()))
      return false;
    for (std::size_t i = 0; i < bytes.size(); ++i)
      set_byte(addr + i, bytes[i]);
    return true;
  }

  const Page* page(u64 page_no) const
  {
    if (page_no == cached_no_ && cached_)
      return &cached_->bytes;
    auto it = pages_.find(page_no);
    if (it == pages_.end())
      return nullptr;
    cached_no_ = page_no;
    cached_ = const_cast<Slot*>(&it->second);
    return &cached_->bytes;
  }

  Page& page_for_write(u64 page_no)
  {
    Slot* slot = cached_;
    if (page_no != cached_no_ || !slot) {
      auto [it, inserted] = pages_.try_emplace(page_no);
      if (inserted)
        it->second.bytes.fill(0);
      cached_no_ = page_no;
      cached_ = slot = &it->second;
    }
    if (slot->code) {
      slot->code = false;
      ++code_epoch_;
    }
    return slot->bytes;
  }

  // Flags a page as the source of a cached decode. Absent pages are created.
  void mark_code(u64 page_no)
  {
    auto [it, inserted] = pages_.try_emplace(page_no);
    if (inserted) {
      it->second.bytes.fill(0);
      forget();
    }
    it->second.code = true;
  }

  u64 code_epoch() const noexcept { return code_epoch_; }

  // Page numbers holding at least one written byte (possibly zero-valued).
  std::vector<u64> populated_pages() const
  {
    std::vector<u64> out;
    out.reserve(pages_.size());
    for (const auto& [no, _] : pages_)
      out.push_back(no);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Equality over the whole address space: an absent page equals a zero page.
  friend bool operator==(const PhysicalMemory& a, const PhysicalMemory& b)
  {
    return a.covers(b) && b.covers(a);
  }

private:
  static bool is_zero(const Page& p)
  {
    return std::all_of(p.begin(), p.end(), [](u8 v) { return v == 0; });
  }

  bool covers(const PhysicalMemory& other) const
  {
    for (const auto& [no, pg] : pages_) {
      auto it = other.pages_.find(no);
      if (it == other.pages_.end()) {
        if (!is_zero(pg.bytes))
          return false;
      } else if (it->second.bytes != pg.bytes) {
        return false;
      }
    }
    return true;
  }

  void forget() noexcept
  {
    cached_ = nullptr;
    cached_no_ = ~u64{0};
  }

  struct Slot {
    Page bytes;
    bool code{false};
  };

  std::unordered_map<u64, Slot> pages_;
  u64 code_epoch_{0};
  mutable u64 cached_no_{~u64{0}};
  mutable Slot* cached_{nullptr};
};

} // namespace x86sim
