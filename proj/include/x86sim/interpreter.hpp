#pragma once

#include <array>
#include <optional>

#include "x86sim/decoder.hpp"
#include "x86sim/paging.hpp"
#include "x86sim/semantics.hpp"
#include "x86sim/state.hpp"

namespace x86sim {

namespace detail {

// Instruction-byte source for the decoder. Each page the instruction touches
// is translated once, with execute access.
class InstructionFetcher {
public:
  InstructionFetcher(MachineState& s, u64 rip, std::optional<u64> first_frame = {})
      : s_(s), rip_(rip), frame_{first_frame, std::nullopt}
  {
  }

  std::optional<u8> operator()(unsigned i)
  {
    const u64 lin = rip_ + i;
    if (!is_canonical(lin)) {
      s_.fault(StatusKind::BadMemoryAccess, "instruction fetch from non-canonical address");
      return std::nullopt;
    }
    if (s_.user_level_mode)
      return s_.mem.byte(user_index(lin));
    const unsigned slot = ((lin >> 12) == (rip_ >> 12)) ? 0 : 1;
    if (!frame_[slot]) {
      const auto r = la_to_pa(s_, lin, AccessKind::Exec);
      if (!r)
        return std::nullopt;
      frame_[slot] = r->phys & ~(kPageSize - 1);
    }
    const u64 pa = *frame_[slot] | (lin & (kPageSize - 1));
    if (pa >= kPhysicalLimit) {
      s_.fault(StatusKind::BadMemoryAccess, "instruction fetch outside physical memory");
      return std::nullopt;
    }
    return s_.mem.byte(pa);
  }

  std::optional<u64> frame(unsigned slot) const { return frame_[slot]; }

private:
  MachineState& s_;
  u64 rip_;
  std::array<std::optional<u64>, 2> frame_{};
};

} // namespace detail

namespace detail {

template <class Fetch>
bool fetch_and_decode_with(MachineState& s, Fetch& fetch, DecodedInst& di)
{
  const DecodeStatus st = decode_with(fetch, s.rip(), di);
  switch (st) {
  case DecodeStatus::Ok: return true;
  case DecodeStatus::FetchFault:
    s.fault(StatusKind::BadMemoryAccess, "instruction fetch failed");
    return false;
  case DecodeStatus::TooLong:
  case DecodeStatus::ThreeByteMap:
    s.fault(StatusKind::DecodeError, std::string(to_string(st)));
    return false;
  case DecodeStatus::Unimplemented:
    s.fault(StatusKind::UnimplementedOpcode, std::string(to_string(st)));
    return false;
  }
  return false;
}

} // namespace detail

// Fetches and decodes the instruction at rip. On failure ms is populated.
inline bool fetch_and_decode(MachineState& s, DecodedInst& di)
{
  detail::InstructionFetcher fetch(s, s.rip());
  return detail::fetch_and_decode_with(s, fetch, di);
}

namespace detail {

// Direct-mapped cache of decoded instructions keyed by linear and physical
// address. Entries are valid only while the memory's code epoch is unchanged.
struct DecodeCache {
  struct Entry {
    u64 lin{~u64{0}};
    u64 frame{0};
    u64 frame2{0};
    u64 epoch{~u64{0}};
    DecodedInst di;
  };
  static constexpr unsigned kSize = 1024;
  std::array<Entry, kSize> entries;

  static DecodeCache& of(MachineState& s)
  {
    if (!s.decode_cache.ptr)
      s.decode_cache.ptr = {new DecodeCache, [](void* p) { delete static_cast<DecodeCache*>(p); }};
    return *static_cast<DecodeCache*>(s.decode_cache.ptr.get());
  }
};

// Frame holding `lin`, translated for execute access. nullopt with ms set on
// a fault.
inline std::optional<u64> exec_frame(MachineState& s, u64 lin)
{
  if (s.user_level_mode)
    return user_index(lin) & ~(kPageSize - 1);
  const auto r = la_to_pa(s, lin, AccessKind::Exec);
  if (!r)
    return std::nullopt;
  return r->phys & ~(kPageSize - 1);
}

// Fetches and decodes through the cache. Translation side effects match the
// uncached path: the first page is walked once per fetch, and the second only
// when the instruction crosses into it.
// Decodes at lin into e and marks the fetched page(s) as holding code.
[[gnu::noinline]] inline const DecodedInst* refill(MachineState& s, DecodeCache::Entry& e, u64 lin, u64 frame)
{
  const u64 next_page = (lin | (kPageSize - 1)) + 1;
  e.lin = ~u64{0};
  InstructionFetcher fetch(s, lin, frame);
  if (!fetch_and_decode_with(s, fetch, e.di))
    return nullptr;
  s.mem.mark_code(frame >> 12);
  e.frame2 = 0;
  if (lin + e.di.length > next_page) {
    e.frame2 = s.user_level_mode ? user_index(next_page) & ~(kPageSize - 1) : *fetch.frame(1);
    s.mem.mark_code(e.frame2 >> 12);
  }
  e.lin = lin;
  e.frame = frame;
  e.epoch = s.mem.code_epoch();
  return &e.di;
}

inline const DecodedInst* fetch_cached(MachineState& s)
{
  const u64 lin = s.rip();
  const auto frame = exec_frame(s, lin);
  if (!frame)
    return nullptr;
  if (*frame >= kPhysicalLimit) {
    s.fault(StatusKind::BadMemoryAccess, "instruction fetch outside physical memory");
    return nullptr;
  }
  DecodeCache& cache = DecodeCache::of(s);
  DecodeCache::Entry& e = cache.entries[(lin ^ (lin >> 10)) % DecodeCache::kSize];
  const u64 next_page = (lin | (kPageSize - 1)) + 1;
  if (e.lin == lin && e.frame == *frame && e.epoch == s.mem.code_epoch()) {
    if (lin + e.di.length <= next_page)
      return &e.di;
    const auto frame2 = exec_frame(s, next_page);
    if (!frame2)
      return nullptr;
    if (*frame2 == e.frame2)
      return &e.di;
  }

  return refill(s, e, lin, *frame);
}

} // namespace detail

// One fetch-decode-execute step. A populated ms makes this the identity.
// Reaching halt_addr records Halted without executing anything. Returns true
// when an instruction retired.
inline bool x86_step(MachineState& s)
{
  if (s.ms())
    return false;
  if (s.halt_addr && s.rip() == *s.halt_addr) {
    s.fault(StatusKind::Halted);
    return false;
  }
  const DecodedInst* di = detail::fetch_cached(s);
  if (!di)
    return false;
  return exec_instruction(s, *di) != Flow::Fault;
}

// Runs up to n steps, stopping early once ms is populated. Returns the number
// of instructions retired.
inline u64 x86_run(MachineState& s, u64 n)
{
  u64 retired = 0;
  for (u64 i = 0; i < n && !s.ms(); ++i)
    retired += x86_step(s);
  return retired;
}

} // namespace x86sim
