// Runs popcount under instrumentation: stops at a breakpoint, then prints the
// state log and memory log of the remaining instructions.

#include <cstdio>

#include "x86sim.hpp"

using namespace x86sim;

int main()
{
  RunConfig config = load_config_file(X86SIM_FIXTURE_DIR "/popcount.json");
  MachineState s = build_state(config);

  Hooks to_ret;
  to_ret.breakpoints.push_back(Breakpoint::parse("rip == 0x4006c2 && rax > 0"));
  const RunResult first = run_with_instrumentation(s, config.max_steps, to_ret);
  std::printf("stopped: %s after %llu instructions, rax %s\n", to_string(first.stop).c_str(),
              static_cast<unsigned long long>(first.retired), hex(s.gpr[kRax]).c_str());

  Hooks rest;
  rest.state_log = true;
  rest.mem_log = true;
  rest.first_index = first.retired;
  const RunResult second = run_with_instrumentation(s, config.max_steps, rest);
  for (const auto& e : second.events)
    std::printf("%s\n", emit_mem_log_line(e).c_str());
  for (const auto& line : second.state_log)
    std::printf("%s\n", line.c_str());
  std::printf("ms: %s\n", ms_text(s).c_str());
  return first.stop.kind == StopKind::BreakpointHit ? 0 : 1;
}
