#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "x86sim/bits.hpp"

namespace x86sim {

// Model index of each supported MSR. The index is the position in
// MachineState::msr, not the architectural identifier.
enum class MsrIndex : unsigned {
  Efer = 0,
  FsBase = 1,
  GsBase = 2,
  KernelGsBase = 3,
  Lstar = 4,
  Star = 5,
  Fmask = 6,
};

inline constexpr unsigned kMsrCount = 7;

struct MsrEntry {
  u32 identifier;
  MsrIndex index;
  std::string_view name;
};

inline constexpr std::array<MsrEntry, kMsrCount> kMsrIdentifierMap{{
    {0xC0000080u, MsrIndex::Efer, "ia32_efer"},
    {0xC0000100u, MsrIndex::FsBase, "ia32_fs_base"},
    {0xC0000101u, MsrIndex::GsBase, "ia32_gs_base"},
    {0xC0000102u, MsrIndex::KernelGsBase, "ia32_kernel_gs_base"},
    {0xC0000082u, MsrIndex::Lstar, "ia32_lstar"},
    {0xC0000081u, MsrIndex::Star, "ia32_star"},
    {0xC0000084u, MsrIndex::Fmask, "ia32_fmask"},
}};

// Returns nullopt for identifiers the model does not implement.
constexpr std::optional<unsigned> msr_index(u32 identifier) noexcept
{
  for (const auto& e : kMsrIdentifierMap)
    if (e.identifier == identifier)
      return static_cast<unsigned>(e.index);
  return std::nullopt;
}

} // namespace x86sim
