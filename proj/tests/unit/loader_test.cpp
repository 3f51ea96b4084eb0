#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "support/program_gen.hpp"
#include "x86sim.hpp"

using namespace x86sim;
using x86sim::testing::fixture;

namespace {

nlohmann::json meta(const std::string& name)
{
  std::ifstream in(fixture(name + ".meta.json"));
  return nlohmann::json::parse(in);
}

SegmentFlags flags_from(const std::string& text)
{
  return {text.find('R') != std::string::npos, text.find('W') != std::string::npos,
          text.find('E') != std::string::npos};
}

void expect_matches_meta(const std::string& name)
{
  const LoadImage image = read_elf(fixture(name + ".elf"));
  const auto m = meta(name);
  const auto file = read_file_bytes(fixture(name + ".elf"));
  EXPECT_EQ(image.entry, m["entry"].get<u64>());
  ASSERT_EQ(image.segments.size(), m["segments"].size());
  for (std::size_t i = 0; i < image.segments.size(); ++i) {
    const auto& seg = image.segments[i];
    const auto& ms = m["segments"][i];
    EXPECT_EQ(seg.vaddr, ms["vaddr"].get<u64>());
    EXPECT_EQ(seg.file_bytes.size(), ms["filesz"].get<u64>());
    EXPECT_EQ(seg.mem_size, ms["memsz"].get<u64>());
    EXPECT_EQ(seg.flags, flags_from(ms["flags"].get<std::string>()));
    const u64 off = ms["offset"].get<u64>();
    EXPECT_TRUE(std::equal(seg.file_bytes.begin(), seg.file_bytes.end(), file.begin() + static_cast<std::ptrdiff_t>(off)));
  }
}

// A one-segment ELF64 image: 4 code bytes with memsz 16.
std::vector<u8> tiny_elf()
{
  std::vector<u8> b(0x80 + 4, 0);
  auto put = [&](std::size_t off, u64 v, unsigned n) {
    for (unsigned i = 0; i < n; ++i)
      b[off + i] = static_cast<u8>(v >> (8 * i));
  };
  b[0] = 0x7F;
  b[1] = 'E';
  b[2] = 'L';
  b[3] = 'F';
  b[4] = 2;
  b[5] = 1;
  b[6] = 1;
  put(16, 2, 2);
  put(18, 62, 2);
  put(20, 1, 4);
  put(24, 0x500000, 8);
  put(32, 64, 8);
  put(52, 64, 2);
  put(54, 56, 2);
  put(56, 1, 2);
  put(64, 1, 4);
  put(68, 5, 4);
  put(72, 0x80, 8);
  put(80, 0x500000, 8);
  put(88, 0x500000, 8);
  put(96, 4, 8);
  put(104, 16, 8);
  put(112, 0x1000, 8);
  b[0x80] = 0x90;
  b[0x81] = 0x90;
  b[0x82] = 0x90;
  b[0x83] = 0xC3;
  return b;
}

} // namespace

TEST(ParseElf, MinimalMatchesMetadata) { expect_matches_meta("minimal"); }

TEST(ParseElf, PopcountMatchesMetadata) { expect_matches_meta("popcount"); }

TEST(ParseElf, WcImagesMatchMetadata)
{
  expect_matches_meta("wc_linux");
  expect_matches_meta("wc_freebsd");
}

TEST(ParseElf, RejectsBadMagic)
{
  auto b = tiny_elf();
  b[0] = 0x7E;
  EXPECT_THROW(parse_elf(b), LoadError);
}

TEST(ParseElf, RejectsClass32)
{
  auto b = tiny_elf();
  b[4] = 1;
  try {
    parse_elf(b);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("64-bit"), std::string::npos);
  }
}

TEST(ParseElf, RejectsOtherMachine)
{
  auto b = tiny_elf();
  b[18] = 3;
  EXPECT_THROW(parse_elf(b), LoadError);
}

TEST(ParseElf, RejectsMachO)
{
  std::vector<u8> b{0xCF, 0xFA, 0xED, 0xFE, 7, 0, 0, 1};
  EXPECT_THROW(parse_elf(b), LoadError);
}

TEST(ParseElf, RejectsTruncatedSegment)
{
  auto b = tiny_elf();
  b.resize(b.size() - 2);
  EXPECT_THROW(parse_elf(b), LoadError);
}

TEST(ReadElf, MissingFile) { EXPECT_THROW(read_elf("/nonexistent/x.elf"), LoadError); }

TEST(BinaryFileLoad, ZeroFillsBeyondFileSize)
{
  MachineState s;
  linear_write(s, 0x500008, 8, ~u64{0});
  ASSERT_TRUE(binary_file_load(parse_elf(tiny_elf()), s));
  EXPECT_EQ(linear_read(s, 0x500000, 4), 0xC3909090u);
  EXPECT_EQ(linear_read(s, 0x500004, 8), 0u);
  EXPECT_EQ(linear_read(s, 0x50000C, 4), 0u);
}

TEST(BinaryFileLoad, PopcountBytesLand)
{
  MachineState s;
  const LoadImage image = read_elf(fixture("popcount.elf"));
  ASSERT_TRUE(binary_file_load(image, s));
  EXPECT_EQ(linear_read(s, 0x400650, 2), 0xFA89u);
  EXPECT_EQ(linear_read(s, 0x4006C2, 1), 0xC3u);
}

TEST(BinaryFileLoad, SystemModeNeedsPageTables)
{
  MachineState s;
  s.user_level_mode = false;
  s.cr3 = 0x1000;
  EXPECT_FALSE(binary_file_load(read_elf(fixture("minimal.elf")), s));
  ASSERT_TRUE(s.ms());
  EXPECT_EQ(s.ms()->kind, StatusKind::PageFault);
}

TEST(InitX86State, SetsFields)
{
  MachineState s;
  s.fault(StatusKind::Halted);
  InitSpec spec;
  spec.start_rip = 0x400650;
  spec.halt_addr = 0x4006C2;
  spec.reg_inits = {{kRdi, 0xFF}, {kRsp, 0x7FF000}};
  spec.flag_init = 0x8D7;
  spec.mem_updates = {{0x600000, 0xAA}, {0x600001, 0xBB}};
  ASSERT_TRUE(init_x86_state(spec, s));
  EXPECT_FALSE(s.ms());
  EXPECT_EQ(s.rip(), 0x400650u);
  EXPECT_EQ(s.halt_addr, 0x4006C2u);
  EXPECT_EQ(s.gpr[kRdi], 0xFFu);
  EXPECT_EQ(s.gpr[kRsp], 0x7FF000u);
  EXPECT_EQ(s.rflags(), 0x8D7u);
  EXPECT_EQ(linear_read(s, 0x600000, 2), 0xBBAAu);
}

TEST(InitX86State, LaterMemoryUpdatesWin)
{
  MachineState s;
  InitSpec spec;
  spec.mem_updates = {{0x600000, 1}, {0x600000, 2}};
  ASSERT_TRUE(init_x86_state(spec, s));
  EXPECT_EQ(linear_read(s, 0x600000, 1), 2u);
}

TEST(InitX86State, EmptySpecChangesOnlyRipAndStatus)
{
  MachineState s;
  s.gpr[kRax] = 9;
  MachineState expected = s;
  InitSpec spec;
  spec.start_rip = 0x1234;
  ASSERT_TRUE(init_x86_state(spec, s));
  expected.set_rip(0x1234);
  EXPECT_EQ(s, expected);
}

TEST(InitX86State, NonCanonicalRip)
{
  MachineState s;
  InitSpec spec;
  spec.start_rip = 0x0000800000000000;
  EXPECT_FALSE(init_x86_state(spec, s));
  EXPECT_TRUE(s.ms());
}
