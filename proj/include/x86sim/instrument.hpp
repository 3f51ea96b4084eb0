#pragma once

#include <atomic>
#include <cctype>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "x86sim/interpreter.hpp"
#include "x86sim/paging.hpp"
#include "x86sim/state.hpp"

namespace x86sim {

class BreakpointError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace bp {

struct Term {
  enum class Kind { Gpr, Rip, Flag, Literal, Mem, Sum };
  Kind kind{Kind::Literal};
  unsigned index{0}; // Gpr index, Flag bit, or Mem width
  u64 value{0};
  std::shared_ptr<const Term> a, b;
};

enum class CmpOp { Eq, Ne, Lt, Gt };

struct Cmp {
  Term lhs, rhs;
  CmpOp op{CmpOp::Eq};
};

inline std::optional<unsigned> gpr_by_name(std::string_view name)
{
  for (unsigned i = 0; i < kGprNames.size(); ++i)
    if (kGprNames[i] == name)
      return i;
  return std::nullopt;
}

inline std::optional<Flag> flag_by_name(std::string_view name)
{
  static constexpr std::pair<std::string_view, Flag> kNames[] = {
      {"cf", Flag::CF}, {"pf", Flag::PF}, {"af", Flag::AF}, {"zf", Flag::ZF},
      {"sf", Flag::SF}, {"df", Flag::DF}, {"of", Flag::OF}};
  for (const auto& [n, f] : kNames)
    if (n == name)
      return f;
  return std::nullopt;
}

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::vector<Cmp> parse()
  {
    std::vector<Cmp> out;
    out.push_back(cmp());
    while (accept("&&"))
      out.push_back(cmp());
    skip_ws();
    if (pos_ != text_.size())
      fail("unexpected '" + std::string(text_.substr(pos_)) + "'");
    return out;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const
  {
    throw BreakpointError("breakpoint: " + msg + " at column " + std::to_string(pos_ + 1));
  }

  void skip_ws()
  {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool accept(std::string_view tok)
  {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view tok)
  {
    if (!accept(tok))
      fail("expected '" + std::string(tok) + "'");
  }

  Cmp cmp()
  {
    Cmp c;
    c.lhs = term();
    if (accept("=="))
      c.op = CmpOp::Eq;
    else if (accept("!="))
      c.op = CmpOp::Ne;
    else if (accept("<"))
      c.op = CmpOp::Lt;
    else if (accept(">"))
      c.op = CmpOp::Gt;
    else
      fail("expected comparison operator");
    c.rhs = term();
    return c;
  }

  std::string word()
  {
    std::string w;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_])))
      w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_++]))));
    return w;
  }

  Term term()
  {
    skip_ws();
    if (pos_ >= text_.size())
      fail("expected term");
    Term t;
    if (std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      const std::string w = word();
      try {
        std::size_t used = 0;
        t.value = std::stoull(w, &used, 0);
        if (used != w.size())
          throw std::invalid_argument(w);
      } catch (const std::exception&) {
        fail("bad literal '" + w + "'");
      }
      t.kind = Term::Kind::Literal;
      return t;
    }
    const std::string w = word();
    if (w.empty())
      fail("expected term");
    if (w == "rip") {
      t.kind = Term::Kind::Rip;
    } else if (auto g = gpr_by_name(w)) {
      t.kind = Term::Kind::Gpr;
      t.index = *g;
    } else if (auto f = flag_by_name(w)) {
      t.kind = Term::Kind::Flag;
      t.index = static_cast<unsigned>(*f);
    } else if (w == "mem") {
      t.kind = Term::Kind::Mem;
      expect("[");
      t.a = std::make_shared<const Term>(term());
      expect(",");
      const Term width = term();
      if (width.kind != Term::Kind::Literal ||
          (width.value != 1 && width.value != 2 && width.value != 4 && width.value != 8))
        fail("mem width must be 1, 2, 4 or 8");
      t.index = static_cast<unsigned>(width.value);
      expect("]");
    } else if (w == "sum") {
      t.kind = Term::Kind::Sum;
      expect("(");
      t.a = std::make_shared<const Term>(term());
      expect(",");
      t.b = std::make_shared<const Term>(term());
      expect(")");
    } else {
      fail("unknown name '" + w + "'");
    }
    return t;
  }

  std::string_view text_;
  std::size_t pos_{0};
};

// Evaluation reads memory through the observation path: no marking, no
// faults. Unreadable bytes count as zero.
inline u64 eval(const Term& t, const MachineState& s)
{
  switch (t.kind) {
  case Term::Kind::Gpr: return s.gpr[t.index];
  case Term::Kind::Rip: return s.rip();
  case Term::Kind::Flag: return (s.rflags() >> t.index) & 1;
  case Term::Kind::Literal: return t.value;
  case Term::Kind::Mem: return peek_linear(s, eval(*t.a, s), t.index).value_or(0);
  case Term::Kind::Sum: {
    const u64 lo = eval(*t.a, s), hi = eval(*t.b, s);
    u64 total = 0;
    for (u64 a = lo; a < hi; ++a)
      total += peek_linear(s, a, 1).value_or(0);
    return total;
  }
  }
  return 0;
}

inline bool eval(const Cmp& c, const MachineState& s)
{
  const u64 l = eval(c.lhs, s), r = eval(c.rhs, s);
  switch (c.op) {
  case CmpOp::Eq: return l == r;
  case CmpOp::Ne: return l != r;
  case CmpOp::Lt: return l < r;
  case CmpOp::Gt: return l > r;
  }
  return false;
}

} // namespace bp

// A stopping predicate over machine state: either an expression in the
// breakpoint language or a host callback. Evaluation never mutates state.
//
//   expr := cmp ('&&' cmp)*
//   cmp  := term ('==' | '!=' | '<' | '>') term
//   term := gpr | flag | 'rip' | literal | 'mem[' term ',' width ']' | 'sum(' term ',' term ')'
class Breakpoint {
public:
  using Callback = std::function<bool(const MachineState&)>;

  // Throws BreakpointError on malformed text.
  static Breakpoint parse(std::string_view text)
  {
    Breakpoint b;
    b.text_ = std::string(text);
    b.cmps_ = bp::Parser(text).parse();
    return b;
  }

  static Breakpoint callback(Callback fn, std::string label = "<callback>")
  {
    Breakpoint b;
    b.text_ = std::move(label);
    b.callback_ = std::move(fn);
    return b;
  }

  bool evaluate(const MachineState& s) const
  {
    if (callback_)
      return callback_(s);
    for (const auto& c : cmps_)
      if (!bp::eval(c, s))
        return false;
    return true;
  }

  const std::string& text() const noexcept { return text_; }

private:
  std::string text_;
  std::vector<bp::Cmp> cmps_;
  Callback callback_;
};

struct TraceEvent {
  enum class Kind { MemRead, MemWrite };
  u64 instr_index{0};
  u64 rip{0};
  Kind kind{Kind::MemRead};
  u64 lin{0};
  std::optional<u64> phys;
  unsigned nbytes{0};
  u64 value{0};
  bool operator==(const TraceEvent&) const = default;
};

inline std::string hex16(u64 v)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llX", static_cast<unsigned long long>(v));
  return buf;
}

// "S <index> <RIP> <RAX>..<R15> <RFLAGS>", each value 16 upper-case hex digits.
inline std::string emit_state_log_line(u64 instr_index, const MachineState& s)
{
  std::string line = "S " + std::to_string(instr_index) + " " + hex16(s.rip());
  for (u64 g : s.gpr)
    line += " " + hex16(g);
  line += " " + hex16(s.rflags());
  return line;
}

// "M <index> <rip> <R|W> <lin> <nbytes> <value>"
inline std::string emit_mem_log_line(const TraceEvent& e)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llX", static_cast<unsigned long long>(e.value));
  return "M " + std::to_string(e.instr_index) + " " + hex16(e.rip) + " " +
         (e.kind == TraceEvent::Kind::MemRead ? "R" : "W") + " " + hex16(e.lin) + " " +
         std::to_string(e.nbytes) + " " + buf;
}

enum class StopKind { BreakpointHit, MsSet, Exhausted, Cancelled };

struct StopReason {
  StopKind kind{StopKind::Exhausted};
  std::size_t breakpoint{0};
  bool operator==(const StopReason&) const = default;
};

inline std::string to_string(const StopReason& r)
{
  switch (r.kind) {
  case StopKind::BreakpointHit: return "BreakpointHit(" + std::to_string(r.breakpoint) + ")";
  case StopKind::MsSet: return "MsSet";
  case StopKind::Exhausted: return "Exhausted";
  case StopKind::Cancelled: return "Cancelled";
  }
  return "?";
}

struct Hooks {
  std::function<void(u64 instr_index, const MachineState&)> on_step;
  std::vector<Breakpoint> breakpoints;
  bool mem_log{false};
  bool state_log{false};
  u64 first_index{0}; // instructions already retired before this run
  const std::atomic<bool>* cancel{nullptr};
};

struct RunResult {
  StopReason stop;
  u64 steps{0};   // step calls made
  u64 retired{0}; // instructions retired
  std::vector<TraceEvent> events;
  std::vector<std::string> state_log;
};

namespace detail {

class EventRecorder final : public AccessObserver {
public:
  explicit EventRecorder(std::vector<TraceEvent>& out) : out_(out) {}
  void on_access(AccessKind kind, u64 lin, std::optional<u64> phys, unsigned nbytes,
                 u64 value) override
  {
    out_.push_back({index, rip, kind == AccessKind::Write ? TraceEvent::Kind::MemWrite
                                                          : TraceEvent::Kind::MemRead,
                    lin, phys, nbytes, value});
  }
  u64 index{0};
  u64 rip{0};

private:
  std::vector<TraceEvent>& out_;
};

} // namespace detail

// Steps up to n times with hooks. Breakpoints are evaluated after each step in
// registration order; the first hit stops the run. The machine-visible result
// equals x86_run for the same number of steps.
inline RunResult run_with_instrumentation(MachineState& s, u64 n, const Hooks& hooks)
{
  RunResult res;
  detail::EventRecorder recorder(res.events);
  AccessObserver* saved = s.observer.ptr;
  if (hooks.mem_log)
    s.observer.ptr = &recorder;
  u64 index = hooks.first_index;

  res.stop.kind = StopKind::Exhausted;
  for (;;) {
    if (s.ms()) {
      res.stop.kind = StopKind::MsSet;
      break;
    }
    if (res.steps == n)
      break;
    if (hooks.cancel && hooks.cancel->load(std::memory_order_relaxed)) {
      res.stop.kind = StopKind::Cancelled;
      break;
    }
    recorder.index = index + 1;
    recorder.rip = s.rip();
    ++res.steps;
    if (x86_step(s)) {
      ++index;
      ++res.retired;
      if (hooks.state_log)
        res.state_log.push_back(emit_state_log_line(index, s));
      if (hooks.on_step)
        hooks.on_step(index, s);
    }
    if (s.ms()) {
      res.stop.kind = StopKind::MsSet;
      break;
    }
    bool hit = false;
    for (std::size_t i = 0; i < hooks.breakpoints.size(); ++i)
      if (hooks.breakpoints[i].evaluate(s)) {
        res.stop = {StopKind::BreakpointHit, i};
        hit = true;
        break;
      }
    if (hit)
      break;
  }
  s.observer.ptr = saved;
  return res;
}

} // namespace x86sim
