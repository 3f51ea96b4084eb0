#pragma once

#include <array>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "x86sim/bits.hpp"

namespace x86sim {

enum class OsInfo { Linux, FreeBSD };

constexpr std::string_view to_string(OsInfo os) noexcept
{
  return os == OsInfo::Linux ? "linux" : "freebsd";
}

enum class Syscall { Read, Write, Open, Close, Lseek, Dup, Link, Unlink };

inline constexpr std::array<Syscall, 8> kSupportedSyscalls{
    Syscall::Read, Syscall::Write, Syscall::Open, Syscall::Close,
    Syscall::Lseek, Syscall::Dup, Syscall::Link, Syscall::Unlink};

constexpr std::string_view to_string(Syscall call) noexcept
{
  switch (call) {
  case Syscall::Read: return "read";
  case Syscall::Write: return "write";
  case Syscall::Open: return "open";
  case Syscall::Close: return "close";
  case Syscall::Lseek: return "lseek";
  case Syscall::Dup: return "dup";
  case Syscall::Link: return "link";
  case Syscall::Unlink: return "unlink";
  }
  return "?";
}

// Linux: arch/x86/entry/syscalls/syscall_64.tbl.
// FreeBSD: sys/kern/syscalls.master (lseek is the post-7.0 number).
constexpr u64 syscall_number(OsInfo os, Syscall call) noexcept
{
  if (os == OsInfo::Linux) {
    switch (call) {
    case Syscall::Read: return 0;
    case Syscall::Write: return 1;
    case Syscall::Open: return 2;
    case Syscall::Close: return 3;
    case Syscall::Lseek: return 8;
    case Syscall::Dup: return 32;
    case Syscall::Link: return 86;
    case Syscall::Unlink: return 87;
    }
  } else {
    switch (call) {
    case Syscall::Read: return 3;
    case Syscall::Write: return 4;
    case Syscall::Open: return 5;
    case Syscall::Close: return 6;
    case Syscall::Lseek: return 478;
    case Syscall::Dup: return 41;
    case Syscall::Link: return 9;
    case Syscall::Unlink: return 10;
    }
  }
  return ~u64{0};
}

constexpr std::optional<Syscall> syscall_from_number(OsInfo os, u64 number) noexcept
{
  for (Syscall c : kSupportedSyscalls)
    if (syscall_number(os, c) == number)
      return c;
  return std::nullopt;
}

// Negated in rax on failure. Linux values are used for both OS modes.
namespace err {
inline constexpr i64 kNoEntry = 2;     // ENOENT
inline constexpr i64 kBadFd = 9;       // EBADF
inline constexpr i64 kExists = 17;     // EEXIST
inline constexpr i64 kInvalid = 22;    // EINVAL
} // namespace err

// Open-flag bits that differ between the two OS ABIs.
struct OpenFlagBits {
  u64 access_mask;
  u64 creat;
  u64 trunc;
  u64 append;
};

constexpr OpenFlagBits open_flag_bits(OsInfo os) noexcept
{
  return os == OsInfo::Linux ? OpenFlagBits{3, 0x40, 0x200, 0x400}
                             : OpenFlagBits{3, 0x200, 0x400, 0x8};
}

struct OpenFile {
  enum class Kind { File, Stdin, Stdout, Stderr };

  Kind kind{Kind::File};
  std::string path;
  u64 inode{0};
  u64 offset{0};
  bool readable{false};
  bool writable{false};
  bool append{false};

  bool operator==(const OpenFile&) const = default;
};

// The simulated external world: file system, descriptor table, standard
// streams, and the oracle queue that answers non-deterministic questions
// (for example, which descriptor `open` returns).
//
// Paths name inodes, so `link` can give one byte sequence two names.
// Descriptors name open-file descriptions, so `dup` shares an offset.
class Environment {
public:
  Environment()
  {
    open_standard(0, OpenFile::Kind::Stdin, "<stdin>", true, false);
    open_standard(1, OpenFile::Kind::Stdout, "<stdout>", false, true);
    open_standard(2, OpenFile::Kind::Stderr, "<stderr>", false, true);
  }

  // ---- file system ----

  void add_file(const std::string& path, std::vector<u8> bytes)
  {
    if (auto it = paths_.find(path); it != paths_.end()) {
      inodes_[it->second] = std::move(bytes);
      return;
    }
    const u64 ino = next_inode_++;
    inodes_.emplace(ino, std::move(bytes));
    paths_.emplace(path, ino);
  }

  bool has_file(const std::string& path) const { return paths_.contains(path); }

  const std::vector<u8>* file(const std::string& path) const
  {
    auto it = paths_.find(path);
    return it == paths_.end() ? nullptr : &inodes_.at(it->second);
  }

  std::optional<u64> inode_of(const std::string& path) const
  {
    auto it = paths_.find(path);
    if (it == paths_.end())
      return std::nullopt;
    return it->second;
  }

  std::vector<u8>& inode_bytes(u64 ino) { return inodes_.at(ino); }
  const std::vector<u8>& inode_bytes(u64 ino) const { return inodes_.at(ino); }

  bool link(const std::string& existing, const std::string& new_path)
  {
    auto it = paths_.find(existing);
    if (it == paths_.end() || paths_.contains(new_path))
      return false;
    paths_.emplace(new_path, it->second);
    return true;
  }

  // Removes the name. The inode lives on while other names or open
  // descriptions refer to it.
  bool unlink(const std::string& path)
  {
    auto it = paths_.find(path);
    if (it == paths_.end())
      return false;
    const u64 ino = it->second;
    paths_.erase(it);
    collect(ino);
    return true;
  }

  std::vector<std::string> paths() const
  {
    std::vector<std::string> out;
    for (const auto& [p, _] : paths_)
      out.push_back(p);
    return out;
  }

  // ---- descriptors ----

  OpenFile* descriptor(u64 fd)
  {
    auto it = fds_.find(fd);
    return it == fds_.end() ? nullptr : &descriptions_.at(it->second);
  }
  const OpenFile* descriptor(u64 fd) const
  {
    auto it = fds_.find(fd);
    return it == fds_.end() ? nullptr : &descriptions_.at(it->second);
  }

  bool is_open(u64 fd) const { return fds_.contains(fd); }

  void bind(u32 fd, OpenFile file)
  {
    close(fd);
    const u64 id = next_description_++;
    descriptions_.emplace(id, std::move(file));
    fds_[fd] = id;
  }

  // Makes `new_fd` refer to the same open-file description as `fd`.
  bool duplicate(u64 fd, u32 new_fd)
  {
    auto it = fds_.find(fd);
    if (it == fds_.end())
      return false;
    const u64 id = it->second;
    if (new_fd != fd) {
      close(new_fd);
      fds_[new_fd] = id;
    }
    return true;
  }

  bool close(u64 fd)
  {
    auto it = fds_.find(fd);
    if (it == fds_.end())
      return false;
    const u64 id = it->second;
    fds_.erase(it);
    for (const auto& [_, other] : fds_)
      if (other == id)
        return true;
    const OpenFile released = descriptions_.at(id);
    descriptions_.erase(id);
    if (released.kind == OpenFile::Kind::File)
      collect(released.inode);
    return true;
  }

  std::vector<u64> open_fds() const
  {
    std::vector<u64> out;
    for (const auto& [fd, _] : fds_)
      out.push_back(fd);
    return out;
  }

  // ---- standard streams ----

  void set_stdin(std::vector<u8> bytes)
  {
    stdin_ = std::move(bytes);
    if (auto* f = descriptor(0); f && f->kind == OpenFile::Kind::Stdin)
      f->offset = 0;
  }
  const std::vector<u8>& stdin_bytes() const { return stdin_; }
  const std::vector<u8>& stdout_bytes() const { return stdout_; }
  const std::vector<u8>& stderr_bytes() const { return stderr_; }

  std::vector<u8>& stream_bytes(OpenFile::Kind kind)
  {
    switch (kind) {
    case OpenFile::Kind::Stdin: return stdin_;
    case OpenFile::Kind::Stdout: return stdout_;
    case OpenFile::Kind::Stderr: return stderr_;
    case OpenFile::Kind::File: break;
    }
    throw std::logic_error("stream_bytes: not a stream");
  }

  // ---- oracle ----

  void oracle_push(u64 lin, u64 value) { oracle_[lin].push_back(value); }

  // Removes and returns the head of the queue at `lin`.
  std::optional<u64> oracle_pop(u64 lin)
  {
    auto it = oracle_.find(lin);
    if (it == oracle_.end() || it->second.empty())
      return std::nullopt;
    const u64 v = it->second.front();
    it->second.pop_front();
    if (it->second.empty())
      oracle_.erase(it);
    return v;
  }

  std::size_t oracle_size() const
  {
    std::size_t n = 0;
    for (const auto& [_, q] : oracle_)
      n += q.size();
    return n;
  }

  const std::map<u64, std::deque<u64>>& oracle() const { return oracle_; }

  bool operator==(const Environment&) const = default;

private:
  void open_standard(u32 fd, OpenFile::Kind kind, const char* name, bool r, bool w)
  {
    OpenFile f;
    f.kind = kind;
    f.path = name;
    f.readable = r;
    f.writable = w;
    f.append = w;
    bind(fd, std::move(f));
  }

  void collect(u64 ino)
  {
    for (const auto& [_, i] : paths_)
      if (i == ino)
        return;
    for (const auto& [_, d] : descriptions_)
      if (d.kind == OpenFile::Kind::File && d.inode == ino)
        return;
    inodes_.erase(ino);
  }

  std::map<std::string, u64> paths_;
  std::map<u64, std::vector<u8>> inodes_;
  u64 next_inode_{1};
  std::map<u64, OpenFile> descriptions_;
  std::map<u64, u64> fds_;
  u64 next_description_{1};
  std::vector<u8> stdin_;
  std::vector<u8> stdout_;
  std::vector<u8> stderr_;
  std::map<u64, std::deque<u64>> oracle_;
};

} // namespace x86sim
