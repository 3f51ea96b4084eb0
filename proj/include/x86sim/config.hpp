#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "x86sim/elf.hpp"
#include "x86sim/environment.hpp"
#include "x86sim/init.hpp"
#include "x86sim/instrument.hpp"
#include "x86sim/paging.hpp"
#include "x86sim/state.hpp"

namespace x86sim {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class RunMode { User, SystemMarking, SystemNonMarking };

constexpr std::string_view to_string(RunMode m) noexcept
{
  switch (m) {
  case RunMode::User: return "user";
  case RunMode::SystemMarking: return "system-marking";
  case RunMode::SystemNonMarking: return "system-nonmarking";
  }
  return "?";
}

struct RunConfig {
  RunMode mode{RunMode::User};
  OsInfo os{OsInfo::Linux};
  std::string elf_path;
  std::optional<u64> pt_base;
  std::optional<u64> start_rip;
  std::optional<u64> halt_addr;
  u64 max_steps{1'000'000};
  std::vector<std::pair<unsigned, u64>> reg_inits;
  std::optional<u64> rflags;
  std::vector<std::pair<u64, u8>> mem_updates;
  std::optional<std::string> oracle_path;
  std::vector<std::pair<u64, u64>> oracle_entries;
  std::vector<std::pair<std::string, std::string>> fs_map; // (simulated path, host path)
  std::optional<std::string> stdin_path;
  UndefPolicy undef{UndefPolicy::injective()};
  std::optional<std::string> state_log_path;
  std::optional<std::string> mem_log_path;
};

// ---- parsing helpers ----

// Accepts "0x"-prefixed hex or decimal; `hex_default` reads bare digits as hex.
inline u64 parse_u64(std::string_view text, bool hex_default = false)
{
  std::string t(text);
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back())))
    t.pop_back();
  std::size_t start = 0;
  while (start < t.size() && std::isspace(static_cast<unsigned char>(t[start])))
    ++start;
  t = t.substr(start);
  int base = hex_default ? 16 : 10;
  if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
    base = 16;
    t = t.substr(2);
  }
  if (t.empty())
    throw ConfigError("expected a number, got '" + std::string(text) + "'");
  std::size_t used = 0;
  u64 v = 0;
  try {
    v = std::stoull(t, &used, base);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != t.size())
    throw ConfigError("bad number '" + std::string(text) + "'");
  return v;
}

inline unsigned parse_gpr_name(std::string_view name)
{
  std::string lower;
  for (char c : name)
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (auto g = bp::gpr_by_name(lower))
    return *g;
  throw ConfigError("unknown register '" + std::string(name) + "'");
}

inline RunMode parse_mode(std::string_view s)
{
  if (s == "user")
    return RunMode::User;
  if (s == "system-marking" || s == "system")
    return RunMode::SystemMarking;
  if (s == "system-nonmarking")
    return RunMode::SystemNonMarking;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

inline OsInfo parse_os(std::string_view s)
{
  if (s == "linux")
    return OsInfo::Linux;
  if (s == "freebsd")
    return OsInfo::FreeBSD;
  throw ConfigError("unknown os '" + std::string(s) + "'");
}

// "injective", "zero", or "seeded N" / "seeded:N".
inline UndefPolicy parse_undef_policy(std::string_view s)
{
  if (s == "injective")
    return UndefPolicy::injective();
  if (s == "zero")
    return UndefPolicy::zero();
  if (s.substr(0, 6) == "seeded" && s.size() > 7 && (s[6] == ':' || s[6] == ' ' || s[6] == '='))
    return UndefPolicy::seeded(parse_u64(s.substr(7)));
  throw ConfigError("unknown undef policy '" + std::string(s) + "'");
}

// "NAME=VALUE" with VALUE in hex.
inline std::pair<unsigned, u64> parse_reg_assignment(std::string_view s)
{
  const auto eq = s.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("expected NAME=HEX, got '" + std::string(s) + "'");
  return {parse_gpr_name(s.substr(0, eq)), parse_u64(s.substr(eq + 1), true)};
}

inline std::pair<std::string, std::string> parse_fs_mapping(std::string_view s)
{
  const auto eq = s.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == s.size())
    throw ConfigError("expected SIM=HOST, got '" + std::string(s) + "'");
  return {std::string(s.substr(0, eq)), std::string(s.substr(eq + 1))};
}

// Oracle file: one entry per line, "ADDR VALUE [VALUE ...]", '#' starts a
// comment. Values at the same address are consumed in order.
inline std::vector<std::pair<u64, u64>> parse_oracle_text(std::string_view text)
{
  std::vector<std::pair<u64, u64>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  unsigned lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    std::istringstream words(line);
    std::string addr_text, value_text;
    if (!(words >> addr_text))
      continue;
    try {
      const u64 addr = parse_u64(addr_text);
      bool any = false;
      while (words >> value_text) {
        out.emplace_back(addr, parse_u64(value_text));
        any = true;
      }
      if (!any)
        throw ConfigError("missing value");
    } catch (const ConfigError& e) {
      throw ConfigError("oracle line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::string read_text_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline u64 json_u64(const nlohmann::json& j, const std::string& key)
{
  if (j.is_number_unsigned())
    return j.get<u64>();
  if (j.is_number_integer() && j.get<i64>() >= 0)
    return static_cast<u64>(j.get<i64>());
  if (j.is_string())
    return parse_u64(j.get<std::string>());
  throw ConfigError("'" + key + "' must be a number or numeric string");
}

inline std::string json_string(const nlohmann::json& j, const std::string& key)
{
  if (!j.is_string())
    throw ConfigError("'" + key + "' must be a string");
  return j.get<std::string>();
}

inline std::string resolve_path(const std::filesystem::path& base, const std::string& p)
{
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

} // namespace detail

// Reads a JSON run configuration. Relative paths are resolved against the
// directory holding the file.
inline RunConfig load_config_json(const nlohmann::json& j, const std::filesystem::path& base_dir)
{
  using detail::json_string;
  using detail::json_u64;
  using detail::resolve_path;
  if (!j.is_object())
    throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> kKnown = {
      "mode", "os", "elf", "pt_base", "rip", "halt", "max_steps", "regs", "rflags", "mem",
      "oracle", "oracle_file", "fs", "stdin", "undef_policy", "log_state", "log_mem"};
  for (const auto& [key, _] : j.items())
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end())
      throw ConfigError("unknown config key '" + key + "'");

  RunConfig c;
  if (j.contains("mode"))
    c.mode = parse_mode(json_string(j["mode"], "mode"));
  if (j.contains("os"))
    c.os = parse_os(json_string(j["os"], "os"));
  if (j.contains("elf"))
    c.elf_path = resolve_path(base_dir, json_string(j["elf"], "elf"));
  if (j.contains("pt_base"))
    c.pt_base = json_u64(j["pt_base"], "pt_base");
  if (j.contains("rip"))
    c.start_rip = json_u64(j["rip"], "rip");
  if (j.contains("halt"))
    c.halt_addr = json_u64(j["halt"], "halt");
  if (j.contains("max_steps"))
    c.max_steps = json_u64(j["max_steps"], "max_steps");
  if (j.contains("regs")) {
    if (!j["regs"].is_object())
      throw ConfigError("'regs' must be an object");
    for (const auto& [name, value] : j["regs"].items())
      c.reg_inits.emplace_back(parse_gpr_name(name), json_u64(value, "regs." + name));
  }
  if (j.contains("rflags"))
    c.rflags = json_u64(j["rflags"], "rflags");
  if (j.contains("mem")) {
    // [{"addr": A, "bytes": "c3 90"}]
    for (const auto& m : j["mem"]) {
      const u64 addr = json_u64(m.at("addr"), "mem.addr");
      std::istringstream bytes(json_string(m.at("bytes"), "mem.bytes"));
      std::string b;
      u64 i = 0;
      while (bytes >> b)
        c.mem_updates.emplace_back(addr + i++, static_cast<u8>(parse_u64(b, true)));
    }
  }
  if (j.contains("oracle_file"))
    c.oracle_path = resolve_path(base_dir, json_string(j["oracle_file"], "oracle_file"));
  if (j.contains("oracle")) {
    // {"0x400123": [3, 4]}
    if (!j["oracle"].is_object())
      throw ConfigError("'oracle' must be an object");
    for (const auto& [addr, values] : j["oracle"].items())
      for (const auto& v : values)
        c.oracle_entries.emplace_back(parse_u64(addr), json_u64(v, "oracle"));
  }
  if (j.contains("fs")) {
    if (!j["fs"].is_object())
      throw ConfigError("'fs' must be an object");
    for (const auto& [sim, host] : j["fs"].items())
      c.fs_map.emplace_back(sim, resolve_path(base_dir, json_string(host, "fs." + sim)));
  }
  if (j.contains("stdin"))
    c.stdin_path = resolve_path(base_dir, json_string(j["stdin"], "stdin"));
  if (j.contains("undef_policy"))
    c.undef = parse_undef_policy(json_string(j["undef_policy"], "undef_policy"));
  if (j.contains("log_state"))
    c.state_log_path = json_string(j["log_state"], "log_state");
  if (j.contains("log_mem"))
    c.mem_log_path = json_string(j["log_mem"], "log_mem");
  return c;
}

inline RunConfig load_config_file(const std::string& path)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return load_config_json(j, std::filesystem::path(path).parent_path());
}

inline void validate(const RunConfig& c)
{
  if (c.mode == RunMode::User && c.pt_base)
    throw ConfigError("user mode does not take a page-table base");
  if (c.mode != RunMode::User && !c.pt_base)
    throw ConfigError("system modes require a page-table base");
  if (c.elf_path.empty())
    throw ConfigError("no ELF file given");
}

// Builds the initial state: page tables (system modes), program image,
// environment, then init-x86-state. Throws LoadError or ConfigError.
inline MachineState build_state(const RunConfig& c)
{
  validate(c);
  const LoadImage image = read_elf(c.elf_path);
  MachineState s(c.undef);
  s.os_info = c.os;
  if (c.mode != RunMode::User) {
    if (!init_system_level_mode(s, *c.pt_base))
      throw LoadError(s.ms()->detail);
    s.marking_mode = c.mode == RunMode::SystemMarking;
  }
  if (!binary_file_load(image, s))
    throw LoadError("loading " + c.elf_path + ": " + std::string(to_string(s.ms()->kind)) + " " +
                    s.ms()->detail);
  for (const auto& [sim, host] : c.fs_map) {
    const auto bytes = read_file_bytes(host);
    s.env.add_file(sim, bytes);
  }
  if (c.stdin_path)
    s.env.set_stdin(read_file_bytes(*c.stdin_path));
  if (c.oracle_path)
    for (const auto& [addr, value] : parse_oracle_text(read_text_file(*c.oracle_path)))
      s.env.oracle_push(addr, value);
  for (const auto& [addr, value] : c.oracle_entries)
    s.env.oracle_push(addr, value);

  InitSpec init;
  init.start_rip = c.start_rip.value_or(image.entry);
  init.halt_addr = c.halt_addr;
  init.reg_inits = c.reg_inits;
  init.flag_init = c.rflags;
  init.mem_updates = c.mem_updates;
  if (!init_x86_state(init, s))
    throw LoadError("initializing state: " + s.ms()->detail);
  return s;
}

} // namespace x86sim
