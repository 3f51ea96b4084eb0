#include <gtest/gtest.h>

#include "x86sim.hpp"

using namespace x86sim;

TEST(PhysicalMemory, FreshReadsZero)
{
  PhysicalMemory m;
  EXPECT_EQ(m.read(0, 8), 0u);
  EXPECT_EQ(m.read(0x123456789, 8), 0u);
  EXPECT_TRUE(m.populated_pages().empty());
}

TEST(PhysicalMemory, LittleEndian)
{
  PhysicalMemory m;
  m.write(0x1000, 1, 0xAB);
  m.write(0x1001, 1, 0xCD);
  EXPECT_EQ(m.read(0x1000, 2), 0xCDABu);
}

TEST(PhysicalMemory, RoundTripAllWidths)
{
  PhysicalMemory m;
  m.write(0x2000, 8, 0x0102030405060708);
  EXPECT_EQ(m.read(0x2000, 8), 0x0102030405060708u);
  EXPECT_EQ(m.read(0x2000, 4), 0x05060708u);
  EXPECT_EQ(m.read(0x2004, 2), 0x0304u);
  EXPECT_EQ(m.read(0x2007, 1), 0x01u);
  m.write128(0x3000, (u128{0x1111} << 64) | 0x2222);
  EXPECT_EQ(m.read128(0x3000), (u128{0x1111} << 64) | 0x2222);
}

TEST(PhysicalMemory, LastWriterWins)
{
  PhysicalMemory m;
  m.write(0x100, 8, 0x1111111111111111);
  m.write(0x104, 4, 0x22222222);
  m.write(0x102, 2, 0x3333);
  EXPECT_EQ(m.read(0x100, 8), 0x2222222233331111u);
}

TEST(PhysicalMemory, CrossesPageBoundary)
{
  PhysicalMemory m;
  m.write(0xFFC, 8, 0x8877665544332211);
  EXPECT_EQ(m.read(0xFFC, 8), 0x8877665544332211u);
  EXPECT_EQ(m.read(0x1000, 4), 0x88776655u);
}

TEST(PhysicalMemory, Bounds)
{
  PhysicalMemory m;
  EXPECT_FALSE(m.read(kPhysicalLimit - 1, 2));
  EXPECT_TRUE(m.read(kPhysicalLimit - 2, 2));
  EXPECT_FALSE(m.write(kPhysicalLimit, 1, 0));
  EXPECT_FALSE(m.write(kPhysicalLimit - 4, 8, 0));
  EXPECT_TRUE(m.populated_pages().empty());
}

TEST(PhysicalMemory, AbsentPageEqualsZeroPage)
{
  PhysicalMemory a, b;
  a.write(0x5000, 8, 0);
  EXPECT_EQ(a, b);
  a.write(0x5000, 1, 1);
  EXPECT_NE(a, b);
}

TEST(PhysicalMemory, CodeEpochAdvancesOnlyForCodePages)
{
  PhysicalMemory m;
  const u64 e0 = m.code_epoch();
  m.write(0x1000, 8, 1);
  EXPECT_EQ(m.code_epoch(), e0);
  m.mark_code(1);
  m.write(0x2000, 8, 1);
  EXPECT_EQ(m.code_epoch(), e0);
  m.write(0x1008, 1, 2);
  EXPECT_EQ(m.code_epoch(), e0 + 1);
  m.write(0x1008, 1, 3);
  EXPECT_EQ(m.code_epoch(), e0 + 1);
}

TEST(PhysicalMemory, AssignmentAdvancesEpoch)
{
  PhysicalMemory a, b;
  const u64 e0 = a.code_epoch();
  a = b;
  EXPECT_GT(a.code_epoch(), e0);
}

TEST(LinearMemory, UserModeRoundTrip)
{
  MachineState s;
  ASSERT_TRUE(linear_write(s, 0x400650, 8, 0xDEADBEEFCAFEF00D));
  EXPECT_EQ(linear_read(s, 0x400650, 8), 0xDEADBEEFCAFEF00Du);
  EXPECT_FALSE(s.ms());
}

TEST(LinearMemory, UserModeNonCanonicalFaults)
{
  MachineState s;
  EXPECT_FALSE(linear_read(s, 0x0000800000000000, 1));
  ASSERT_TRUE(s.ms());
  EXPECT_EQ(s.ms()->kind, StatusKind::BadMemoryAccess);
}

TEST(LinearMemory, UpperHalfMapsToLow48Bits)
{
  MachineState s;
  ASSERT_TRUE(linear_write(s, 0xFFFF800000001000, 4, 0x12345678));
  EXPECT_EQ(s.mem.read(0x0000800000001000, 4), 0x12345678u);
}

TEST(LinearMemory, PeekHasNoSideEffects)
{
  MachineState s;
  init_system_level_mode(s, 0);
  s.mem.write(0x10000, 8, 0x55);
  const MachineState before = s;
  EXPECT_EQ(peek_linear(s, 0x10000, 8), 0x55u);
  EXPECT_EQ(s, before);
}
