#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "support/program_gen.hpp"

using x86sim::testing::fixture;

namespace {

struct Outcome {
  int code{-1};
  std::string out;
};

Outcome sh(const std::string& args, const std::string& env = "")
{
  const std::string cmd = env + " " + X86SIM_BIN + " " + args + " 2>&1";
  Outcome o;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p)
    return o;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;)
    o.out.append(buf, n);
  const int status = pclose(p);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::filesystem::path scratch(const std::string& name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("x86sim_cli_" + std::to_string(getpid()));
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text)
{
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    out.push_back(l);
  return out;
}

const std::string kPopcount = "--config " + fixture("popcount.json");

} // namespace

TEST(Cli, RunHaltsWithExitZero)
{
  const Outcome o = sh("run " + kPopcount);
  EXPECT_EQ(o.code, 0) << o.out;
  EXPECT_NE(o.out.find("ms: Halted"), std::string::npos);
  EXPECT_NE(o.out.find("rax: 0x21"), std::string::npos);
}

TEST(Cli, ExhaustedBudgetExitsTwo)
{
  const Outcome o = sh("run " + kPopcount + " --max-steps 3");
  EXPECT_EQ(o.code, 2) << o.out;
  EXPECT_NE(o.out.find("steps: 3"), std::string::npos);
}

TEST(Cli, FaultExitsThree)
{
  const Outcome o = sh("run --mode system-marking --pt-base 0 --elf " + fixture("popcount.elf") +
                       " --rip 0x8000000000");
  EXPECT_EQ(o.code, 3) << o.out;
  EXPECT_NE(o.out.find("PageFault"), std::string::npos);
}

TEST(Cli, UsageAndLoadErrorsExitOne)
{
  Outcome o = sh("run --elf /nonexistent/prog.elf");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.out.find("not found"), std::string::npos) << o.out;
  EXPECT_EQ(sh("run --elf " + fixture("popcount.elf") + " --pt-base 0").code, 1);
  EXPECT_EQ(sh("run --mode system-marking --elf " + fixture("popcount.elf")).code, 1);
  EXPECT_EQ(sh("frobnicate").code, 1);
  EXPECT_EQ(sh("").code, 1);
  EXPECT_EQ(sh("run " + kPopcount + " --set-reg bogus=1").code, 1);
}

TEST(Cli, StateLogIsReproducible)
{
  const auto a = scratch("a.log"), b = scratch("b.log"), m = scratch("m.log");
  ASSERT_EQ(sh("run " + kPopcount + " --undef-policy injective --log-state " + a.string()).code, 0);
  ASSERT_EQ(sh("run " + kPopcount + " --undef-policy injective --log-state " + b.string() +
               " --log-mem " + m.string())
                .code,
            0);
  const std::string la = slurp(a);
  EXPECT_EQ(la, slurp(b));
  const auto ls = lines(la);
  ASSERT_GT(ls.size(), 2u);
  EXPECT_EQ(ls[0].rfind("S 0 0000000000400600 ", 0), 0u);
  EXPECT_EQ(ls[1].rfind("S 1 ", 0), 0u);
  const auto ms = lines(slurp(m));
  ASSERT_FALSE(ms.empty());
  EXPECT_EQ(ms[0].rfind("M 1 0000000000400600 W ", 0), 0u) << ms[0];
}

TEST(Cli, Disasm)
{
  const Outcome o = sh("disasm --elf " + fixture("popcount.elf") + " --start 0x400650 --count 3");
  EXPECT_EQ(o.code, 0);
  const auto ls = lines(o.out);
  ASSERT_EQ(ls.size(), 3u);
  EXPECT_EQ(ls[0], "0x400650: 89 fa  mov edx, edi");
  const Outcome ret = sh("disasm --elf " + fixture("popcount.elf") + " --start 0x4006c2 --count 1");
  EXPECT_EQ(ret.out, "0x4006c2: c3  ret\n");
}

TEST(Cli, DisasmUndecodableByte)
{
  // 0x06 (push es) is invalid in 64-bit mode; the byte sits in the ELF header.
  const Outcome o = sh("disasm --elf " + fixture("popcount.elf") + " --start 0x400019 --count 2");
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(lines(o.out).at(0), "0x400019: 06  (db 0x06)") << o.out;
}

TEST(Cli, OpcodesSortedOneRowEach)
{
  const Outcome o = sh("opcodes");
  EXPECT_EQ(o.code, 0);
  auto ls = lines(o.out);
  ASSERT_GT(ls.size(), 2u);
  EXPECT_EQ(ls[0].rfind("opcode", 0), 0u);
  ls.erase(ls.begin());
  bool seen_sysret = false;
  for (const auto& l : ls) {
    if (l.rfind("0f 07 ", 0) == 0) {
      seen_sysret = true;
      EXPECT_NE(l.find("sysret"), std::string::npos);
      EXPECT_NE(l.find(" - "), std::string::npos);
    }
  }
  EXPECT_TRUE(seen_sysret);
  std::vector<std::string> one, two;
  for (const auto& l : ls)
    (l.rfind("0f ", 0) == 0 ? two : one).push_back(l.substr(0, 12));
  EXPECT_TRUE(std::is_sorted(one.begin(), one.end()));
  EXPECT_TRUE(std::is_sorted(two.begin(), two.end()));
  EXPECT_EQ(ls.size(), one.size() + two.size());
}

TEST(Cli, ServeJson)
{
  const auto script = scratch("serve.txt");
  std::ofstream(script) << "break rip == 0x4006c2\ncontinue\nbogus\nquit\n";
  const Outcome o = sh("serve " + kPopcount + " < " + script.string());
  EXPECT_EQ(o.code, 0);
  const auto ls = lines(o.out);
  ASSERT_EQ(ls.size(), 5u) << o.out;
  const auto hello = nlohmann::json::parse(ls[0]);
  EXPECT_TRUE(hello["ok"].get<bool>());
  const auto cont = nlohmann::json::parse(ls[2]);
  EXPECT_EQ(cont["stop"], "BreakpointHit(0)");
  EXPECT_EQ(cont["rip"], "0x4006c2");
  const auto bad = nlohmann::json::parse(ls[3]);
  EXPECT_FALSE(bad["ok"].get<bool>());
  EXPECT_FALSE(bad["error"].get<std::string>().empty());
  const auto quit = nlohmann::json::parse(ls[4]);
  EXPECT_TRUE(quit["quit"].get<bool>());
  EXPECT_NE(quit["output"].get<std::string>().find("retired: "), std::string::npos);
}

TEST(Cli, ServeTranscript)
{
  const auto script = scratch("t.txt");
  std::ofstream(script) << "stepi\nflags\nquit\n";
  const Outcome o = sh("serve " + kPopcount + " --transcript --script " + script.string());
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(o.out.rfind("x86sim debug: ", 0), 0u);
  EXPECT_NE(o.out.find("> stepi\nstopped: "), std::string::npos);
  EXPECT_NE(o.out.find("> flags\nCF="), std::string::npos);
  EXPECT_NE(o.out.find("> quit\nms: none\nretired: 1\nS 1 "), std::string::npos);
}

TEST(Cli, DebugWithoutDebuggerExitsOne)
{
  const Outcome o = sh("debug " + kPopcount, "X86SIM_DEBUGGER=/nonexistent/x86sim-debug PATH=/nonexistent");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.out.find("not available"), std::string::npos);
}

TEST(Cli, DebugExecsConfiguredDebugger)
{
  const Outcome o = sh("debug --flag value", "X86SIM_DEBUGGER=echo");
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(o.out, "--flag value\n");
}
