#pragma once

#include <optional>
#include <string>
#include <vector>

#include "x86sim/environment.hpp"
#include "x86sim/paging.hpp"
#include "x86sim/state.hpp"

namespace x86sim {

inline constexpr std::size_t kMaxPathLength = 4096;

namespace lseek_whence {
inline constexpr u64 kSet = 0;
inline constexpr u64 kCur = 1;
inline constexpr u64 kEnd = 2;
} // namespace lseek_whence

namespace detail {

inline std::optional<std::string> read_c_string(MachineState& s, u64 lin)
{
  std::string out;
  for (std::size_t i = 0; i < kMaxPathLength; ++i) {
    const auto b = linear_read(s, lin + i, 1);
    if (!b)
      return std::nullopt;
    if (*b == 0)
      return out;
    out.push_back(static_cast<char>(*b));
  }
  s.fault(StatusKind::SyscallFault, "path exceeds 4096 bytes");
  return std::nullopt;
}

inline u64 neg_errno(i64 code) { return static_cast<u64>(-code); }

// Consults the oracle at the syscall's own address for a descriptor number.
inline std::optional<u32> oracle_fd(MachineState& s)
{
  const auto v = s.env.oracle_pop(s.rip());
  if (!v) {
    s.fault(StatusKind::OracleEmpty, "no oracle value for descriptor");
    return std::nullopt;
  }
  if (*v > 0xFFFFFFFFull || s.env.is_open(*v)) {
    s.fault(StatusKind::SyscallFault, "oracle descriptor " + std::to_string(*v) + " unusable");
    return std::nullopt;
  }
  return static_cast<u32>(*v);
}

inline bool sys_read(MachineState& s, u64 fd, u64 buf, u64 count)
{
  OpenFile* f = s.env.descriptor(fd);
  if (!f || !f->readable) {
    s.gpr[kRax] = neg_errno(err::kBadFd);
    return true;
  }
  const std::vector<u8>& src = f->kind == OpenFile::Kind::File ? s.env.inode_bytes(f->inode)
                                                               : s.env.stream_bytes(f->kind);
  const u64 avail = f->offset < src.size() ? src.size() - f->offset : 0;
  const u64 n = std::min(count, avail);
  for (u64 i = 0; i < n; ++i)
    if (!linear_write(s, buf + i, 1, src[f->offset + i]))
      return false;
  f->offset += n;
  s.gpr[kRax] = n;
  return true;
}

inline bool sys_write(MachineState& s, u64 fd, u64 buf, u64 count)
{
  OpenFile* f = s.env.descriptor(fd);
  if (!f || !f->writable) {
    s.gpr[kRax] = neg_errno(err::kBadFd);
    return true;
  }
  std::vector<u8> bytes;
  bytes.reserve(count);
  for (u64 i = 0; i < count; ++i) {
    const auto b = linear_read(s, buf + i, 1);
    if (!b)
      return false;
    bytes.push_back(static_cast<u8>(*b));
  }
  std::vector<u8>& dst = f->kind == OpenFile::Kind::File ? s.env.inode_bytes(f->inode)
                                                         : s.env.stream_bytes(f->kind);
  if (f->append)
    f->offset = dst.size();
  if (dst.size() < f->offset + count)
    dst.resize(f->offset + count, 0);
  std::copy(bytes.begin(), bytes.end(), dst.begin() + static_cast<std::ptrdiff_t>(f->offset));
  f->offset += count;
  s.gpr[kRax] = count;
  return true;
}

inline bool sys_open(MachineState& s, u64 path_lin, u64 flags)
{
  const auto path = read_c_string(s, path_lin);
  if (!path)
    return false;
  const OpenFlagBits bits = open_flag_bits(s.os_info);
  const u64 access = flags & bits.access_mask;
  if (access == 3) {
    s.gpr[kRax] = neg_errno(err::kInvalid);
    return true;
  }
  const bool exists = s.env.has_file(*path);
  if (!exists && !(flags & bits.creat)) {
    s.gpr[kRax] = neg_errno(err::kNoEntry);
    return true;
  }
  const auto fd = oracle_fd(s);
  if (!fd)
    return false;
  if (!exists)
    s.env.add_file(*path, {});
  OpenFile f;
  f.kind = OpenFile::Kind::File;
  f.path = *path;
  f.inode = *s.env.inode_of(*path);
  f.readable = access == 0 || access == 2;
  f.writable = access == 1 || access == 2;
  f.append = flags & bits.append;
  if ((flags & bits.trunc) && f.writable)
    s.env.inode_bytes(f.inode).clear();
  s.env.bind(*fd, std::move(f));
  s.gpr[kRax] = *fd;
  return true;
}

inline bool sys_lseek(MachineState& s, u64 fd, u64 offset, u64 whence)
{
  OpenFile* f = s.env.descriptor(fd);
  if (!f) {
    s.gpr[kRax] = neg_errno(err::kBadFd);
    return true;
  }
  const u64 size = f->kind == OpenFile::Kind::File ? s.env.inode_bytes(f->inode).size()
                                                   : s.env.stream_bytes(f->kind).size();
  i64 base;
  switch (whence) {
  case lseek_whence::kSet: base = 0; break;
  case lseek_whence::kCur: base = static_cast<i64>(f->offset); break;
  case lseek_whence::kEnd: base = static_cast<i64>(size); break;
  default:
    s.gpr[kRax] = neg_errno(err::kInvalid);
    return true;
  }
  const i64 target = base + static_cast<i64>(offset);
  if (target < 0) {
    s.gpr[kRax] = neg_errno(err::kInvalid);
    return true;
  }
  f->offset = static_cast<u64>(target);
  s.gpr[kRax] = f->offset;
  return true;
}

inline bool sys_dup(MachineState& s, u64 fd)
{
  if (!s.env.is_open(fd)) {
    s.gpr[kRax] = neg_errno(err::kBadFd);
    return true;
  }
  const auto new_fd = oracle_fd(s);
  if (!new_fd)
    return false;
  s.env.duplicate(fd, *new_fd);
  s.gpr[kRax] = *new_fd;
  return true;
}

inline bool sys_link(MachineState& s, u64 old_lin, u64 new_lin)
{
  const auto old_path = read_c_string(s, old_lin);
  if (!old_path)
    return false;
  const auto new_path = read_c_string(s, new_lin);
  if (!new_path)
    return false;
  if (!s.env.has_file(*old_path))
    s.gpr[kRax] = neg_errno(err::kNoEntry);
  else if (s.env.has_file(*new_path))
    s.gpr[kRax] = neg_errno(err::kExists);
  else
    s.gpr[kRax] = s.env.link(*old_path, *new_path) ? 0 : neg_errno(err::kNoEntry);
  return true;
}

inline bool sys_unlink(MachineState& s, u64 path_lin)
{
  const auto path = read_c_string(s, path_lin);
  if (!path)
    return false;
  s.gpr[kRax] = s.env.unlink(*path) ? 0 : neg_errno(err::kNoEntry);
  return true;
}

} // namespace detail

// User-level system call: the whole call, from invocation to return, happens
// here. Number in rax (per os_info), arguments in rdi, rsi, rdx, result in
// rax. Returns false when the call populated ms. Does not touch rip.
inline bool env_syscall(MachineState& s)
{
  const auto call = syscall_from_number(s.os_info, s.gpr[kRax]);
  if (!call) {
    s.fault(StatusKind::SyscallFault, "unsupported " + std::string(to_string(s.os_info)) +
                                          " syscall " + std::to_string(s.gpr[kRax]));
    return false;
  }
  const u64 a0 = s.gpr[kRdi], a1 = s.gpr[kRsi], a2 = s.gpr[kRdx];
  switch (*call) {
  case Syscall::Read: return detail::sys_read(s, a0, a1, a2);
  case Syscall::Write: return detail::sys_write(s, a0, a1, a2);
  case Syscall::Open: return detail::sys_open(s, a0, a1);
  case Syscall::Close:
    s.gpr[kRax] = s.env.close(a0) ? 0 : detail::neg_errno(err::kBadFd);
    return true;
  case Syscall::Lseek: return detail::sys_lseek(s, a0, a1, a2);
  case Syscall::Dup: return detail::sys_dup(s, a0);
  case Syscall::Link: return detail::sys_link(s, a0, a1);
  case Syscall::Unlink: return detail::sys_unlink(s, a0);
  }
  return false;
}

} // namespace x86sim
