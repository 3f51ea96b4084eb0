// Loads the popcount fixture, calls popcount(rdi) and prints the result.
//
//   sample_popcount [ELF] [VALUE]

#include <cstdio>
#include <string>

#include "x86sim.hpp"

using namespace x86sim;

int main(int argc, char** argv)
{
  const std::string elf = argc > 1 ? argv[1] : X86SIM_FIXTURE_DIR "/popcount.elf";
  const u64 value = argc > 2 ? parse_u64(argv[2]) : 0xF0F0F0F0F0F0F0F1;
  constexpr u64 kFunction = 0x400650, kReturn = 0x4006C3, kStack = 0x7FFF0000;

  MachineState s(UndefPolicy::zero());
  init_system_level_mode(s, 0x10000000);
  if (!binary_file_load(read_elf(elf), s)) {
    std::fprintf(stderr, "load failed: %s\n", s.ms()->detail.c_str());
    return 1;
  }
  linear_write(s, kStack - 8, 8, kReturn);

  InitSpec init;
  init.start_rip = kFunction;
  init.halt_addr = kReturn;
  init.reg_inits = {{kRdi, value}, {kRsp, kStack - 8}};
  init_x86_state(init, s);

  const u64 retired = x86_run(s, 10'000);
  std::printf("popcount(%s) = %llu after %llu instructions (%s)\n", hex(value).c_str(),
              static_cast<unsigned long long>(s.gpr[kRax]), static_cast<unsigned long long>(retired),
              ms_text(s).c_str());
  return s.ms() && s.ms()->kind == StatusKind::Halted ? 0 : 1;
}
