#pragma once

#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "x86sim/bits.hpp"
#include "x86sim/paging.hpp"
#include "x86sim/state.hpp"

namespace x86sim {

class LoadError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SegmentFlags {
  bool r{false}, w{false}, x{false};
  bool operator==(const SegmentFlags&) const = default;
};

struct LoadSegment {
  u64 vaddr{0};
  std::vector<u8> file_bytes;
  u64 mem_size{0};
  SegmentFlags flags{};
  bool operator==(const LoadSegment&) const = default;
};

struct LoadImage {
  std::vector<LoadSegment> segments;
  u64 entry{0};
  bool operator==(const LoadImage&) const = default;
};

namespace elf {
inline constexpr u8 kClass64 = 2;
inline constexpr u8 kDataLittle = 1;
inline constexpr u16 kMachineX86_64 = 62;
inline constexpr u32 kPtLoad = 1;
inline constexpr u32 kPfX = 1, kPfW = 2, kPfR = 4;
inline constexpr std::size_t kHeaderSize = 64;
inline constexpr std::size_t kPhdrSize = 56;
} // namespace elf

namespace detail {

inline u64 load_le(std::span<const u8> b, std::size_t off, unsigned n)
{
  u64 v = 0;
  for (unsigned i = n; i-- > 0;)
    v = (v << 8) | b[off + i];
  return v;
}

inline bool is_macho(std::span<const u8> b)
{
  if (b.size() < 4)
    return false;
  const u32 m = static_cast<u32>(load_le(b, 0, 4));
  return m == 0xFEEDFACE || m == 0xFEEDFACF || m == 0xCEFAEDFE || m == 0xCFFAEDFE ||
         m == 0xBEBAFECA || m == 0xCAFEBABE;
}

} // namespace detail

// Validates an ELF64 little-endian x86-64 image and extracts its loadable
// segments. Throws LoadError naming the failed check.
inline LoadImage parse_elf(std::span<const u8> bytes)
{
  using detail::load_le;
  if (detail::is_macho(bytes))
    throw LoadError("unsupported format: Mach-O");
  if (bytes.size() < 4 || bytes[0] != 0x7F || bytes[1] != 'E' || bytes[2] != 'L' || bytes[3] != 'F')
    throw LoadError("bad magic");
  if (bytes.size() < 6 || bytes[4] != elf::kClass64)
    throw LoadError("not 64-bit");
  if (bytes[5] != elf::kDataLittle)
    throw LoadError("not little-endian");
  if (bytes.size() < elf::kHeaderSize)
    throw LoadError("truncated header");
  if (load_le(bytes, 18, 2) != elf::kMachineX86_64)
    throw LoadError("not x86-64");

  LoadImage image;
  image.entry = load_le(bytes, 24, 8);
  const u64 phoff = load_le(bytes, 32, 8);
  const u64 phentsize = load_le(bytes, 54, 2);
  const u64 phnum = load_le(bytes, 56, 2);
  if (phnum && phentsize < elf::kPhdrSize)
    throw LoadError("bad program header size");
  if (phoff > bytes.size() || phnum * phentsize > bytes.size() - phoff)
    throw LoadError("truncated program headers");

  for (u64 i = 0; i < phnum; ++i) {
    const std::size_t ph = phoff + i * phentsize;
    if (load_le(bytes, ph, 4) != elf::kPtLoad)
      continue;
    const u32 pflags = static_cast<u32>(load_le(bytes, ph + 4, 4));
    const u64 offset = load_le(bytes, ph + 8, 8);
    LoadSegment seg;
    seg.vaddr = load_le(bytes, ph + 16, 8);
    const u64 filesz = load_le(bytes, ph + 32, 8);
    seg.mem_size = load_le(bytes, ph + 40, 8);
    if (offset > bytes.size() || filesz > bytes.size() - offset)
      throw LoadError("segment " + std::to_string(i) + " exceeds file");
    if (seg.mem_size < filesz)
      throw LoadError("segment " + std::to_string(i) + " memsz smaller than filesz");
    if (!is_canonical(seg.vaddr) || (seg.mem_size && !is_canonical(seg.vaddr + seg.mem_size - 1)))
      throw LoadError("segment " + std::to_string(i) + " vaddr not canonical");
    seg.file_bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                          bytes.begin() + static_cast<std::ptrdiff_t>(offset + filesz));
    seg.flags = {(pflags & elf::kPfR) != 0, (pflags & elf::kPfW) != 0, (pflags & elf::kPfX) != 0};
    image.segments.push_back(std::move(seg));
  }
  return image;
}

inline std::vector<u8> read_file_bytes(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw LoadError("not found: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline LoadImage read_elf(const std::string& path)
{
  const auto bytes = read_file_bytes(path);
  return parse_elf(bytes);
}

// Writes every segment through linear memory and zero-fills the tail up to
// mem_size. Returns false with ms populated on a memory fault.
inline bool binary_file_load(const LoadImage& image, MachineState& s)
{
  for (const LoadSegment& seg : image.segments) {
    if (!linear_write_bytes(s, seg.vaddr, seg.file_bytes))
      return false;
    for (u64 a = seg.vaddr + seg.file_bytes.size(); a < seg.vaddr + seg.mem_size; ++a)
      if (!linear_write(s, a, 1, 0))
        return false;
  }
  return true;
}

} // namespace x86sim
