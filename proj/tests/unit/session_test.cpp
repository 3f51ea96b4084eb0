#include <random>

#include <gtest/gtest.h>

#include "support/program_gen.hpp"
#include "x86sim.hpp"

using namespace x86sim;
using x86sim::testing::fixture;

namespace {

RunConfig popcount_config() { return load_config_file(fixture("popcount.json")); }

std::vector<std::string> random_script(std::mt19937_64& rng)
{
  static const std::vector<std::string> kObservers = {"regs", "flags", "mem 0x400650 16", "disas",
                                                      "disas 0x400600 4", "mem 0x7ffefff8 8"};
  static const std::vector<std::string> kBreaks = {"rip == 0x4006c2", "rcx == 3",
                                                   "rax > 10 && zf == 0", "mem[0x7ffefff8,8] != 0"};
  std::vector<std::string> script;
  const int n = 3 + static_cast<int>(rng() % 12);
  for (int i = 0; i < n; ++i) {
    switch (rng() % 7) {
    case 0: script.push_back("stepi"); break;
    case 1: script.push_back("step " + std::to_string(rng() % 40)); break;
    case 2: script.push_back("break " + kBreaks[rng() % kBreaks.size()]); break;
    case 3: script.push_back("continue"); break;
    case 4: script.push_back("delete " + std::to_string(1 + rng() % 3)); break;
    case 5: script.push_back(rng() % 2 ? "log state on" : "log mem on"); break;
    default: script.push_back(kObservers[rng() % kObservers.size()]); break;
    }
  }
  return script;
}

// Replays `retired` instructions without the debugger. A session that has
// stopped also made the final non-retiring step.
std::string headless_block(u64 retired, bool stopped)
{
  MachineState s = build_state(popcount_config());
  EXPECT_EQ(x86_run(s, retired), retired);
  if (stopped) {
    EXPECT_FALSE(x86_step(s));
  }
  return "ms: " + ms_text(s) + "\nretired: " + std::to_string(retired) + "\n" +
         emit_state_log_line(retired, s);
}

} // namespace

TEST(DebugSession, ScriptsAgreeWithHeadlessRuns)
{
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 20; ++i) {
    DebugSession session(popcount_config());
    auto script = random_script(rng);
    script.push_back("quit");
    const std::string transcript = scripted_session(session, script);
    const std::string block = session.final_state_block();
    EXPECT_EQ(block, headless_block(session.retired(), session.state().ms().has_value())) << transcript;
    EXPECT_EQ(transcript.substr(transcript.size() - block.size() - 1), block + "\n");
  }
}

TEST(DebugSession, ObservationIsPure)
{
  RunConfig c = load_config_file(fixture("popcount_system.json"));
  DebugSession session(c);
  session.execute("step 7");
  const MachineState before = session.state();
  for (const char* cmd : {"regs", "flags", "mem 0x400650 64", "mem 0xFFFF900000000000 8", "disas",
                          "disas 0x400650 20", "break rip == 0", "delete 1", "log mem on", "log mem off"})
    EXPECT_TRUE(session.execute(cmd).ok) << cmd;
  EXPECT_EQ(session.state(), before);
  EXPECT_EQ(session.state().undef_seed(), before.undef_seed());
}

TEST(DebugSession, BreakAtRetThenContinue)
{
  DebugSession session(popcount_config());
  EXPECT_EQ(session.execute("break rip == 0x4006c2").output, "breakpoint 1: rip == 0x4006c2");
  const CommandResult r = session.execute("continue");
  ASSERT_TRUE(r.stop);
  EXPECT_EQ(r.stop->kind, StopKind::BreakpointHit);
  EXPECT_EQ(session.state().rip(), 0x4006C2u);
  EXPECT_EQ(session.state().gpr[kRax], 0x21u);
  EXPECT_NE(r.output.find("breakpoint 1 hit"), std::string::npos);
  const CommandResult done = session.execute("continue");
  EXPECT_EQ(done.stop->kind, StopKind::MsSet);
  EXPECT_EQ(session.state().ms()->kind, StatusKind::Halted);
}

TEST(DebugSession, MemMatchesLoadedBytes)
{
  DebugSession session(popcount_config());
  const auto image = read_elf(fixture("popcount.elf"));
  const LoadSegment& text = image.segments.at(1);
  const std::string out = session.execute("mem 0x400650 16").output;
  std::string expected = "0000000000400650:";
  for (u64 i = 0; i < 16; ++i) {
    char buf[4];
    std::snprintf(buf, sizeof buf, " %02x", text.file_bytes.at(0x50 + i));
    expected += buf;
  }
  EXPECT_EQ(out, expected);
}

TEST(DebugSession, DisasMarksCurrentInstruction)
{
  DebugSession session(popcount_config());
  const std::string out = session.execute("disas 0x400600 2").output;
  EXPECT_EQ(out.rfind("=> 0x400600:", 0), 0u);
  EXPECT_NE(out.find("\n   0x400605:"), std::string::npos);
}

TEST(DebugSession, EmptyScriptIsBannerOnly)
{
  DebugSession session(popcount_config());
  EXPECT_EQ(scripted_session(session, {}), session.banner() + "\n");
}

TEST(DebugSession, ErrorsLeaveStateAlone)
{
  DebugSession session(popcount_config());
  const MachineState before = session.state();
  for (const char* cmd : {"break rax ==", "break", "delete 9", "step x", "mem 1", "log foo on",
                          "stepi 3", "frobnicate", "disas zz"}) {
    const CommandResult r = session.execute(cmd);
    EXPECT_FALSE(r.ok) << cmd;
    EXPECT_FALSE(r.error.empty()) << cmd;
  }
  EXPECT_EQ(session.state(), before);
  EXPECT_TRUE(session.breakpoints().empty());
  const std::string t = scripted_session(session, {"break rax =="});
  EXPECT_NE(t.find("> break rax ==\nerror: "), std::string::npos);
}

TEST(DebugSession, LogsUseRetiredNumbering)
{
  DebugSession session(popcount_config());
  session.execute("step 2");
  session.execute("log state on");
  const std::string out = session.execute("stepi").output;
  EXPECT_EQ(out.rfind("S 3 ", 0), 0u);
}

TEST(DebugSession, ResetRestoresInitialState)
{
  DebugSession session(popcount_config());
  const MachineState initial = session.state();
  session.execute("step 10");
  session.execute("reset");
  EXPECT_EQ(session.state(), initial);
  EXPECT_EQ(session.retired(), 0u);
}

TEST(DebugSession, ContinueRespectsStepBudget)
{
  RunConfig c = popcount_config();
  c.max_steps = 5;
  DebugSession session(c);
  session.execute("step 3");
  const CommandResult r = session.execute("continue");
  EXPECT_EQ(r.stop->kind, StopKind::Exhausted);
  EXPECT_EQ(session.retired(), 5u);
}
