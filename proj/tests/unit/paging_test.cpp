#include <gtest/gtest.h>

#include "support/page_tables.hpp"
#include "x86sim.hpp"

using namespace x86sim;
using x86sim::testing::TableBuilder;

namespace {

MachineState identity(u64 base, bool marking = true)
{
  MachineState s;
  EXPECT_TRUE(init_system_level_mode(s, base));
  s.marking_mode = marking;
  return s;
}

u64 entry(const MachineState& s, u64 addr) { return *s.mem.read(addr, 8); }

} // namespace

TEST(InitSystemLevelMode, IdentityAtZero)
{
  MachineState s = identity(0);
  EXPECT_FALSE(s.user_level_mode);
  EXPECT_EQ(s.cr3, 0u);
  const auto r = la_to_pa(s, 0, AccessKind::Read);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->phys, 0u);
  EXPECT_EQ(la_to_pa(s, 0x200000, AccessKind::Read)->phys, 0x200000u);
  EXPECT_EQ(la_to_pa(s, 0x7FFFFFFFFF, AccessKind::Read)->phys, 0x7FFFFFFFFFu);
}

TEST(InitSystemLevelMode, BeyondFirst512GiBFaults)
{
  MachineState s = identity(0);
  EXPECT_FALSE(la_to_pa(s, u64{512} << 30, AccessKind::Read));
  ASSERT_TRUE(s.ms());
  EXPECT_EQ(s.ms()->kind, StatusKind::PageFault);
  EXPECT_EQ(s.cr2, u64{512} << 30);
}

TEST(InitSystemLevelMode, PdptEntryLayout)
{
  MachineState s = identity(0x40000);
  const u64 raw = entry(s, 0x41000 + 3 * 8);
  EXPECT_EQ(raw, (u64{3} << 30) | pte::kPresent | pte::kWritable | pte::kUser | pte::kPageSize);
  EXPECT_TRUE(raw & (1u << 7));
  EXPECT_TRUE(raw & 1);
  EXPECT_EQ(raw & pte::kFrame1GMask, u64{3} << 30);
  EXPECT_EQ(entry(s, 0x40000), 0x41000u | pte::kPresent | pte::kWritable | pte::kUser);
}

TEST(InitSystemLevelMode, RejectsUnalignedBase)
{
  MachineState s;
  EXPECT_FALSE(init_system_level_mode(s, 0x1234));
  ASSERT_TRUE(s.ms());
  EXPECT_TRUE(s.user_level_mode);
}

TEST(Marking, ReadSetsAccessedOnEveryLevel)
{
  MachineState s = identity(0);
  ASSERT_FALSE(entry(s, 0x1000) & pte::kAccessed);
  ASSERT_TRUE(linear_read(s, 0x10, 1));
  EXPECT_TRUE(entry(s, 0) & pte::kAccessed);
  EXPECT_TRUE(entry(s, 0x1000) & pte::kAccessed);
  EXPECT_FALSE(entry(s, 0x1000) & pte::kDirty);
  EXPECT_FALSE(entry(s, 0x1008) & pte::kAccessed);
}

TEST(Marking, WriteSetsDirtyOnLeafOnly)
{
  MachineState s = identity(0);
  ASSERT_TRUE(linear_write(s, (u64{2} << 30) + 0x40, 4, 1));
  EXPECT_TRUE(entry(s, 0x1010) & pte::kDirty);
  EXPECT_TRUE(entry(s, 0x1010) & pte::kAccessed);
  EXPECT_FALSE(entry(s, 0) & pte::kDirty);
}

TEST(Marking, ChangedBytesAreExactlyTheAdBits)
{
  MachineState s = identity(0);
  const MachineState before = s;
  const u64 lin = u64{5} << 30 | 0x1234;
  ASSERT_TRUE(linear_write(s, lin, 8, 0));
  for (u64 a = 0; a < 0x2000; a += 8) {
    const u64 diff = entry(s, a) ^ entry(before, a);
    if (a == 0)
      EXPECT_EQ(diff, pte::kAccessed);
    else if (a == 0x1000 + 5 * 8)
      EXPECT_EQ(diff, pte::kAccessed | pte::kDirty);
    else
      EXPECT_EQ(diff, 0u) << a;
  }
}

TEST(NonMarking, TablesUntouched)
{
  MachineState s = identity(0, false);
  const MachineState before = s;
  ASSERT_TRUE(linear_read(s, 0x10, 8));
  ASSERT_TRUE(linear_write(s, 0x40000000, 8, 0));
  for (u64 a = 0; a < 0x2000; a += 8)
    EXPECT_EQ(entry(s, a), entry(before, a));
}

TEST(Walk, FourKiBAndTwoMiBLeaves)
{
  MachineState s;
  TableBuilder tb(s, 0x100000, 7);
  const auto p4k = tb.map(0x0000123456789ABC, 3);
  const auto p2m = tb.map(0x00007F0000312345, 2);
  const auto p1g = tb.map(0xFFFF800040001234, 1);
  ASSERT_TRUE(p4k && p2m && p1g);
  s.marking_mode = false;
  EXPECT_EQ(la_to_pa(s, 0x0000123456789ABC, AccessKind::Read)->phys, *p4k);
  EXPECT_EQ(la_to_pa(s, 0x00007F0000312345, AccessKind::Read)->phys, *p2m);
  EXPECT_EQ(la_to_pa(s, 0xFFFF800040001234, AccessKind::Read)->phys, *p1g);
  EXPECT_EQ(*p4k & 0xFFF, 0xABCu);
  EXPECT_EQ(*p2m & 0x1FFFFF, 0x112345u);
  EXPECT_EQ(*p1g & 0x3FFFFFFF, 0x1234u);
  EXPECT_EQ(la_to_pa(s, 0x0000123456789ABC, AccessKind::Read)->depth, 4u);
}

TEST(Walk, NotPresentIntermediateFaults)
{
  MachineState s;
  TableBuilder tb(s, 0x100000, 3);
  ASSERT_TRUE(tb.map(0x400000, 3));
  EXPECT_FALSE(la_to_pa(s, 0x800000000, AccessKind::Read));
  EXPECT_EQ(s.ms()->kind, StatusKind::PageFault);
}

TEST(Walk, StraddlingAccessIsAllOrNothing)
{
  MachineState s;
  TableBuilder tb(s, 0x100000, 11);
  const auto p = tb.map(0x400000, 3);
  ASSERT_TRUE(p);
  const u64 frame = *p & ~u64{0xFFF};
  s.marking_mode = false;
  EXPECT_FALSE(linear_write(s, 0x400FFC, 8, 0x1122334455667788));
  ASSERT_TRUE(s.ms());
  EXPECT_EQ(s.ms()->kind, StatusKind::PageFault);
  EXPECT_EQ(s.cr2, 0x401000u);
  EXPECT_EQ(s.mem.read(frame + 0xFFC, 4), 0u);
}

TEST(Walk, NonCanonicalIsBadAccess)
{
  MachineState s = identity(0);
  EXPECT_FALSE(la_to_pa(s, 0x0000800000000000, AccessKind::Read));
  EXPECT_EQ(s.ms()->kind, StatusKind::BadMemoryAccess);
}

TEST(Walk, PeekTranslateNeverMarks)
{
  MachineState s = identity(0);
  const MachineState before = s;
  EXPECT_EQ(peek_translate(s, 0x12345678), 0x12345678u);
  EXPECT_FALSE(peek_translate(s, u64{600} << 30));
  EXPECT_EQ(s, before);
}

TEST(Walk, LinearMatchesPhysicalUnderIdentity)
{
  MachineState s = identity(0);
  s.mem.write(0x7654320, 8, 0xA5A5A5A55A5A5A5A);
  EXPECT_EQ(linear_read(s, 0x7654320, 8), s.mem.read(0x7654320, 8));
}
