#pragma once

#include <atomic>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "x86sim/config.hpp"
#include "x86sim/decoder.hpp"
#include "x86sim/instrument.hpp"
#include "x86sim/interpreter.hpp"
#include "x86sim/paging.hpp"
#include "x86sim/state.hpp"

namespace x86sim {

// Disassembles `count` instructions starting at `addr` through the
// observation path. Undecodable bytes produce "(db 0x..)" and the listing
// resumes at the next byte.
inline std::vector<std::string> disassemble_range(const MachineState& s, u64 addr, unsigned count)
{
  std::vector<std::string> lines;
  for (unsigned n = 0; n < count; ++n) {
    auto fetch = [&](unsigned i) -> std::optional<u8> {
      const auto b = peek_linear(s, addr + i, 1);
      return b ? std::optional<u8>{static_cast<u8>(*b)} : std::nullopt;
    };
    DecodedInst di;
    const DecodeStatus st = decode_with(fetch, addr, di);
    std::string line = hex(addr) + ":";
    if (st == DecodeStatus::Ok) {
      for (unsigned i = 0; i < di.length; ++i) {
        char buf[4];
        std::snprintf(buf, sizeof buf, " %02x", static_cast<unsigned>(*fetch(i)));
        line += buf;
      }
      line += "  " + disassemble(di);
      addr += di.length;
    } else {
      const auto b = fetch(0);
      if (!b) {
        lines.push_back(line + "  (unmapped)");
        break;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, " %02x  (db 0x%02x)", static_cast<unsigned>(*b),
                    static_cast<unsigned>(*b));
      line += buf;
      addr += 1;
    }
    lines.push_back(line);
  }
  return lines;
}

inline std::string flags_text(const MachineState& s)
{
  static constexpr std::pair<const char*, Flag> kShown[] = {
      {"CF", Flag::CF}, {"PF", Flag::PF}, {"AF", Flag::AF}, {"ZF", Flag::ZF},
      {"SF", Flag::SF}, {"DF", Flag::DF}, {"OF", Flag::OF}};
  std::string out;
  for (const auto& [name, f] : kShown) {
    if (!out.empty())
      out += ' ';
    out += std::string(name) + "=" + (s.flag(f) ? "1" : "0");
  }
  return out;
}

inline std::string regs_text(const MachineState& s)
{
  std::string out = "rip    " + hex16(s.rip()) + "\n";
  for (unsigned i = 0; i < 16; ++i) {
    std::string name(kGprNames[i]);
    name.resize(7, ' ');
    out += name + hex16(s.gpr[i]) + "\n";
  }
  out += "rflags " + hex16(s.rflags()) + "  " + flags_text(s);
  return out;
}

inline std::string ms_text(const MachineState& s)
{
  if (!s.ms())
    return "none";
  std::string t = std::string(to_string(s.ms()->kind)) + " at " + hex(s.ms()->at_rip);
  if (!s.ms()->detail.empty())
    t += " (" + s.ms()->detail + ")";
  return t;
}

struct CommandResult {
  bool ok{true};
  bool quit{false};
  std::string output;
  std::string error;
  std::optional<StopReason> stop;
};

// The command core behind the interactive debugger. Commands execute one at a
// time against a state built exactly as the run subcommand builds it.
//
//   stepi | step N | break EXPR | delete N | continue | regs | flags
//   mem ADDR LEN | disas [ADDR [N]] | log state on|off | log mem on|off
//   reset | quit
class DebugSession {
public:
  explicit DebugSession(RunConfig config)
      : config_(std::move(config)), initial_(build_state(config_)), state_(initial_)
  {
  }

  DebugSession(RunConfig config, MachineState initial)
      : config_(std::move(config)), initial_(std::move(initial)), state_(initial_)
  {
  }

  const MachineState& state() const noexcept { return state_; }
  u64 retired() const noexcept { return retired_; }
  const std::map<unsigned, Breakpoint>& breakpoints() const noexcept { return breakpoints_; }

  // Set from another context to interrupt a running continue.
  std::atomic<bool>& cancel_flag() noexcept { return cancel_; }

  std::string banner() const
  {
    return "x86sim debug: " + config_.elf_path + " mode " + std::string(to_string(config_.mode)) +
           " rip " + hex(state_.rip());
  }

  // The final-state block: status plus the state-log line for the current state.
  std::string final_state_block() const
  {
    return "ms: " + ms_text(state_) + "\nretired: " + std::to_string(retired_) + "\n" +
           emit_state_log_line(retired_, state_);
  }

  CommandResult execute(const std::string& line)
  {
    std::istringstream in(line);
    std::string cmd;
    in >> cmd;
    std::string rest;
    std::getline(in, rest);
    rest = trim(rest);
    CommandResult r;
    try {
      if (cmd.empty()) {
        return r;
      } else if (cmd == "stepi") {
        expect_no_args(rest);
        run(1, r);
      } else if (cmd == "step") {
        run(parse_u64(rest), r);
      } else if (cmd == "break") {
        if (rest.empty())
          throw ConfigError("break needs an expression");
        Breakpoint b = Breakpoint::parse(rest);
        const unsigned id = next_id_++;
        breakpoints_.emplace(id, std::move(b));
        r.output = "breakpoint " + std::to_string(id) + ": " + rest;
      } else if (cmd == "delete") {
        const u64 id = parse_u64(rest);
        if (!breakpoints_.erase(static_cast<unsigned>(id)))
          throw ConfigError("no breakpoint " + std::to_string(id));
        r.output = "deleted " + std::to_string(id);
      } else if (cmd == "continue") {
        expect_no_args(rest);
        const u64 budget = config_.max_steps > retired_ ? config_.max_steps - retired_ : 0;
        run(budget, r);
      } else if (cmd == "regs") {
        expect_no_args(rest);
        r.output = regs_text(state_);
      } else if (cmd == "flags") {
        expect_no_args(rest);
        r.output = flags_text(state_);
      } else if (cmd == "mem") {
        std::istringstream args(rest);
        std::string a, n;
        if (!(args >> a >> n))
          throw ConfigError("usage: mem ADDR LEN");
        r.output = hexdump(parse_u64(a), parse_u64(n));
      } else if (cmd == "disas") {
        std::istringstream args(rest);
        std::string a, n;
        u64 addr = state_.rip();
        unsigned count = 8;
        if (args >> a)
          addr = parse_u64(a);
        if (args >> n)
          count = static_cast<unsigned>(parse_u64(n));
        std::string out;
        for (const auto& l : disassemble_range(state_, addr, count))
          out += (l.rfind(hex(state_.rip()) + ":", 0) == 0 ? "=> " : "   ") + l + "\n";
        if (!out.empty())
          out.pop_back();
        r.output = out;
      } else if (cmd == "log") {
        std::istringstream args(rest);
        std::string which, onoff;
        if (!(args >> which >> onoff) || (onoff != "on" && onoff != "off") ||
            (which != "state" && which != "mem"))
          throw ConfigError("usage: log state|mem on|off");
        (which == "state" ? log_state_ : log_mem_) = onoff == "on";
        r.output = "log " + which + " " + onoff;
      } else if (cmd == "reset") {
        expect_no_args(rest);
        state_ = initial_;
        retired_ = 0;
        r.output = "reset; rip " + hex(state_.rip());
      } else if (cmd == "quit") {
        expect_no_args(rest);
        r.quit = true;
        r.output = final_state_block();
      } else {
        throw ConfigError("unknown command '" + cmd + "'");
      }
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
    return r;
  }

private:
  static std::string trim(const std::string& s)
  {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
      return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
  }

  static void expect_no_args(const std::string& rest)
  {
    if (!rest.empty())
      throw ConfigError("unexpected argument '" + rest + "'");
  }

  void run(u64 n, CommandResult& r)
  {
    Hooks hooks;
    for (const auto& [id, b] : breakpoints_)
      hooks.breakpoints.push_back(b);
    hooks.mem_log = log_mem_;
    hooks.state_log = log_state_;
    hooks.first_index = retired_;
    hooks.cancel = &cancel_;
    cancel_ = false;
    RunResult res = run_with_instrumentation(state_, n, hooks);
    retired_ += res.retired;
    r.stop = res.stop;

    std::string out;
    for (const auto& e : res.events)
      out += emit_mem_log_line(e) + "\n";
    for (const auto& l : res.state_log)
      out += l + "\n";
    std::string reason = to_string(res.stop);
    if (res.stop.kind == StopKind::BreakpointHit) {
      auto it = breakpoints_.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(res.stop.breakpoint));
      reason = "breakpoint " + std::to_string(it->first) + " hit: " + it->second.text();
    } else if (res.stop.kind == StopKind::MsSet) {
      reason = "ms: " + ms_text(state_);
    }
    out += "stopped: " + reason + "; retired " + std::to_string(res.retired) + "; rip " +
           hex(state_.rip());
    r.output = out;
  }

  std::string hexdump(u64 addr, u64 len) const
  {
    std::string out;
    for (u64 off = 0; off < len; off += 16) {
      out += hex16(addr + off) + ":";
      for (u64 i = off; i < len && i < off + 16; ++i) {
        const auto b = peek_linear(state_, addr + i, 1);
        char buf[4];
        if (b)
          std::snprintf(buf, sizeof buf, " %02x", static_cast<unsigned>(*b));
        else
          std::snprintf(buf, sizeof buf, " ??");
        out += buf;
      }
      out += "\n";
    }
    if (!out.empty())
      out.pop_back();
    return out;
  }

  RunConfig config_;
  MachineState initial_;
  MachineState state_;
  u64 retired_{0};
  std::map<unsigned, Breakpoint> breakpoints_;
  unsigned next_id_{1};
  bool log_state_{false};
  bool log_mem_{false};
  std::atomic<bool> cancel_{false};
};

// Runs a command script without a terminal and returns the transcript: the
// banner, then each command echoed with "> " followed by its output or
// "error: ...". Stops at quit.
inline std::string scripted_session(DebugSession& session, const std::vector<std::string>& commands)
{
  std::string t = session.banner() + "\n";
  for (const auto& c : commands) {
    t += "> " + c + "\n";
    const CommandResult r = session.execute(c);
    if (!r.ok)
      t += "error: " + r.error + "\n";
    else if (!r.output.empty())
      t += r.output + "\n";
    if (r.quit)
      return t;
  }
  return t;
}

} // namespace x86sim
