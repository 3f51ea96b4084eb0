#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "x86sim.hpp"

using namespace x86sim;

namespace {

enum Exit { kHalted = 0, kUsage = 1, kExhausted = 2, kFault = 3 };

struct RunFlags {
  std::string config_path;
  std::string mode, os, elf, pt_base, rip, halt, max_steps, oracle, stdin_path, undef_policy;
  std::string log_state, log_mem;
  std::vector<std::string> set_reg, fs;
};

void add_run_flags(CLI::App* app, RunFlags& f)
{
  app->add_option("--config", f.config_path, "JSON run configuration (flags override it)");
  app->add_option("--mode", f.mode, "user | system-marking | system-nonmarking");
  app->add_option("--os", f.os, "linux | freebsd");
  app->add_option("--elf", f.elf, "ELF64 executable");
  app->add_option("--pt-base", f.pt_base, "physical page-table base (system modes)");
  app->add_option("--rip", f.rip, "start address (default: ELF entry)");
  app->add_option("--halt", f.halt, "halt address");
  app->add_option("--max-steps", f.max_steps, "step budget");
  app->add_option("--set-reg", f.set_reg, "NAME=HEX register initialization (repeatable)");
  app->add_option("--oracle", f.oracle, "oracle file for nondeterministic values");
  app->add_option("--fs", f.fs, "SIM=HOST file mapping (repeatable)");
  app->add_option("--stdin", f.stdin_path, "host file supplying simulated stdin");
  app->add_option("--undef-policy", f.undef_policy, "injective | zero | seeded:N");
  app->add_option("--log-state", f.log_state, "write the state log here");
  app->add_option("--log-mem", f.log_mem, "write the memory-access log here");
}

RunConfig make_config(const RunFlags& f)
{
  RunConfig c = f.config_path.empty() ? RunConfig{} : load_config_file(f.config_path);
  if (!f.mode.empty())
    c.mode = parse_mode(f.mode);
  if (!f.os.empty())
    c.os = parse_os(f.os);
  if (!f.elf.empty())
    c.elf_path = f.elf;
  if (!f.pt_base.empty())
    c.pt_base = parse_u64(f.pt_base);
  if (!f.rip.empty())
    c.start_rip = parse_u64(f.rip);
  if (!f.halt.empty())
    c.halt_addr = parse_u64(f.halt);
  if (!f.max_steps.empty())
    c.max_steps = parse_u64(f.max_steps);
  for (const auto& r : f.set_reg)
    c.reg_inits.push_back(parse_reg_assignment(r));
  if (!f.oracle.empty())
    c.oracle_path = f.oracle;
  for (const auto& m : f.fs)
    c.fs_map.push_back(parse_fs_mapping(m));
  if (!f.stdin_path.empty())
    c.stdin_path = f.stdin_path;
  if (!f.undef_policy.empty())
    c.undef = parse_undef_policy(f.undef_policy);
  if (!f.log_state.empty())
    c.state_log_path = f.log_state;
  if (!f.log_mem.empty())
    c.mem_log_path = f.log_mem;
  validate(c);
  return c;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines)
{
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot write " + path);
  for (const auto& l : lines)
    out << l << '\n';
}

int cmd_run(const RunFlags& f)
{
  const RunConfig c = make_config(f);
  MachineState s = build_state(c);

  Hooks hooks;
  hooks.state_log = c.state_log_path.has_value();
  hooks.mem_log = c.mem_log_path.has_value();
  std::vector<std::string> state_log;
  if (hooks.state_log)
    state_log.push_back(emit_state_log_line(0, s));
  const RunResult res = run_with_instrumentation(s, c.max_steps, hooks);
  if (hooks.state_log) {
    state_log.insert(state_log.end(), res.state_log.begin(), res.state_log.end());
    write_lines(*c.state_log_path, state_log);
  }
  if (hooks.mem_log) {
    std::vector<std::string> lines;
    for (const auto& e : res.events)
      lines.push_back(emit_mem_log_line(e));
    write_lines(*c.mem_log_path, lines);
  }

  std::cout << "ms: " << ms_text(s) << "\n"
            << "rip: " << hex(s.rip()) << "\n"
            << "rax: " << hex(s.gpr[kRax]) << "\n"
            << "steps: " << res.retired << "\n";
  if (!s.ms())
    return kExhausted;
  return s.ms()->kind == StatusKind::Halted ? kHalted : kFault;
}

int cmd_disasm(const std::string& elf, const std::string& start, unsigned count)
{
  const LoadImage image = read_elf(elf);
  MachineState s(UndefPolicy::zero());
  if (!binary_file_load(image, s))
    throw LoadError("loading " + elf + ": " + s.ms()->detail);
  const u64 addr = start.empty() ? image.entry : parse_u64(start);
  for (const auto& line : disassemble_range(s, addr, count))
    std::cout << line << "\n";
  return 0;
}

std::string operand_spec_name(OperandSpec s)
{
  static constexpr const char* kNames[] = {"",   "Eb", "Ev", "Ew", "Ed", "Gb", "Gv", "Ib",
                                           "Iz", "Iv", "1",  "AL", "rAX", "CL", "Jb", "Jz",
                                           "Zb", "Zv", "M",  "Mp", "Rv", "Rq", "Cd"};
  return kNames[static_cast<unsigned>(s)];
}

int cmd_opcodes()
{
  std::vector<const OpcodeRow*> rows;
  for (const auto& r : kOpcodeTable)
    rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const OpcodeRow* a, const OpcodeRow* b) {
    return std::tie(a->map, a->first, a->ext) < std::tie(b->map, b->first, b->ext);
  });
  std::printf("%-8s %-6s %-4s %-8s %-14s %-5s %-6s %s\n", "opcode", "span", "ext", "mnemonic",
              "operands", "user", "system", "undefined");
  for (const OpcodeRow* r : rows) {
    char op[16];
    if (r->map == OpMap::TwoByte)
      std::snprintf(op, sizeof op, "0f %02x", r->first);
    else
      std::snprintf(op, sizeof op, "%02x", r->first);
    std::string operands;
    for (OperandSpec s : r->operands)
      if (s != OperandSpec::None)
        operands += (operands.empty() ? "" : ",") + operand_spec_name(s);
    const std::string ext = r->ext < 0 ? "-" : "/" + std::to_string(r->ext);
    const bool user = !(r->flags & row_flag::kSystemOnly);
    std::printf("%-8s %-6u %-4s %-8s %-14s %-5s %-6s %s\n", op, r->span, ext.c_str(),
                std::string(r->mnemonic).c_str(), operands.empty() ? "-" : operands.c_str(),
                user ? "yes" : "-", "yes", r->undefined.empty() ? "-" : std::string(r->undefined).c_str());
  }
  return 0;
}

std::atomic<bool>* g_cancel = nullptr;

extern "C" void on_sigint(int)
{
  if (g_cancel)
    g_cancel->store(true);
}

nlohmann::json response_json(const CommandResult& r, const DebugSession& s)
{
  nlohmann::json j;
  j["ok"] = r.ok;
  j["output"] = r.output;
  if (!r.ok)
    j["error"] = r.error;
  if (r.stop)
    j["stop"] = to_string(*r.stop);
  j["rip"] = hex(s.state().rip());
  j["ms"] = s.state().ms() ? nlohmann::json(ms_text(s.state())) : nlohmann::json(nullptr);
  j["retired"] = s.retired();
  j["quit"] = r.quit;
  return j;
}

int cmd_serve(const RunFlags& f, const std::string& script, bool transcript)
{
  DebugSession session(make_config(f));
  g_cancel = &session.cancel_flag();
  std::signal(SIGINT, on_sigint);

  std::ifstream file;
  if (!script.empty()) {
    file.open(script);
    if (!file)
      throw ConfigError("cannot read " + script);
  }
  std::istream& in = script.empty() ? std::cin : file;

  if (transcript) {
    std::vector<std::string> commands;
    for (std::string line; std::getline(in, line);)
      commands.push_back(line);
    std::cout << scripted_session(session, commands);
    return 0;
  }
  nlohmann::json hello;
  hello["ok"] = true;
  hello["output"] = session.banner();
  hello["rip"] = hex(session.state().rip());
  std::cout << hello.dump() << std::endl;
  for (std::string line; std::getline(in, line);) {
    const CommandResult r = session.execute(line);
    std::cout << response_json(r, session).dump() << std::endl;
    if (r.quit)
      break;
  }
  return 0;
}

int cmd_debug(const std::vector<std::string>& args)
{
  const char* env = std::getenv("X86SIM_DEBUGGER");
  const std::string program = env && *env ? env : "x86sim-debug";
  std::vector<char*> argv;
  argv.push_back(const_cast<char*>(program.c_str()));
  for (const auto& a : args)
    argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  execvp(program.c_str(), argv.data());
  std::cerr << "x86sim: debugger component '" << program
            << "' not available; use 'x86sim serve' for the command/response interface\n";
  return kUsage;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"x86-64 ISA simulator"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "load an ELF and run it");
  add_run_flags(run, run_flags);

  std::string disasm_elf, disasm_start;
  unsigned disasm_count = 16;
  auto* disasm = app.add_subcommand("disasm", "disassemble instructions from an ELF");
  disasm->add_option("--elf", disasm_elf, "ELF64 executable")->required();
  disasm->add_option("--start", disasm_start, "start address (default: entry)");
  disasm->add_option("--count", disasm_count, "number of instructions");

  auto* opcodes = app.add_subcommand("opcodes", "list implemented opcodes");

  RunFlags serve_flags;
  std::string serve_script;
  bool serve_transcript = false;
  auto* serve = app.add_subcommand("serve", "debugger command/response loop on stdin/stdout");
  add_run_flags(serve, serve_flags);
  serve->add_option("--script", serve_script, "read commands from a file instead of stdin");
  serve->add_flag("--transcript", serve_transcript, "print a plain transcript instead of JSON");

  std::vector<std::string> debug_args;
  auto* debug = app.add_subcommand("debug", "launch the interactive debugger");
  debug->allow_extras();
  debug->prefix_command();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  try {
    if (*run)
      return cmd_run(run_flags);
    if (*disasm)
      return cmd_disasm(disasm_elf, disasm_start, disasm_count);
    if (*opcodes)
      return cmd_opcodes();
    if (*serve)
      return cmd_serve(serve_flags, serve_script, serve_transcript);
    if (*debug)
      return cmd_debug(debug->remaining());
  } catch (const std::exception& e) {
    std::cerr << "x86sim: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
