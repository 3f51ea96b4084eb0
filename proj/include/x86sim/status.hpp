#pragma once

#include <string>
#include <string_view>

#include "x86sim/bits.hpp"

namespace x86sim {

// Model-level status. A populated status freezes the interpreter.
enum class StatusKind {
  Halted,
  UnimplementedOpcode,
  DecodeError,
  PageFault,
  DivideError,
  BadMemoryAccess,
  SyscallFault,
  OracleEmpty,
};

constexpr std::string_view to_string(StatusKind kind) noexcept
{
  switch (kind) {
  case StatusKind::Halted: return "Halted";
  case StatusKind::UnimplementedOpcode: return "UnimplementedOpcode";
  case StatusKind::DecodeError: return "DecodeError";
  case StatusKind::PageFault: return "PageFault";
  case StatusKind::DivideError: return "DivideError";
  case StatusKind::BadMemoryAccess: return "BadMemoryAccess";
  case StatusKind::SyscallFault: return "SyscallFault";
  case StatusKind::OracleEmpty: return "OracleEmpty";
  }
  return "?";
}

struct ModelStatus {
  StatusKind kind{StatusKind::Halted};
  u64 at_rip{0};
  std::string detail;

  bool operator==(const ModelStatus&) const = default;
};

} // namespace x86sim
