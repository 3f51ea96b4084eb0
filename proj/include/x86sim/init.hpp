#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "x86sim/paging.hpp"
#include "x86sim/state.hpp"

namespace x86sim {

struct InitSpec {
  std::optional<ModelStatus> ms_init;
  u64 start_rip{0};
  std::optional<u64> halt_addr;
  std::vector<std::pair<unsigned, u64>> reg_inits;
  std::optional<u64> flag_init;
  std::vector<std::pair<u64, u8>> mem_updates;
};

// Sets ms, rip and halt address, then applies register, flag and memory
// updates in order. Returns false with ms populated on a fault.
inline bool init_x86_state(const InitSpec& spec, MachineState& s)
{
  s.reinitialize_ms(spec.ms_init);
  if (!s.set_rip(spec.start_rip)) {
    s.fault(StatusKind::BadMemoryAccess, "start rip not canonical");
    return false;
  }
  s.halt_addr = spec.halt_addr;
  for (const auto& [reg, value] : spec.reg_inits)
    s.gpr[reg & 15] = value;
  if (spec.flag_init)
    s.set_rflags(*spec.flag_init);
  for (const auto& [lin, byte] : spec.mem_updates)
    if (!linear_write(s, lin, 1, byte))
      return false;
  return true;
}

} // namespace x86sim
