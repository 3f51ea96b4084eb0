#pragma once

#include <map>
#include <optional>
#include <random>

#include "x86sim.hpp"

namespace x86sim::testing {

// Builds 4-level tables by hand from the architectural entry layout, with a
// mix of 1 GiB, 2 MiB and 4 KiB leaves and A/D bits seeded at random. Keeps
// its own record of every mapping so translations can be checked against it.
class TableBuilder {
public:
  static constexpr u64 kPresent = 1, kRw = 2, kUs = 4, kA = 1 << 5, kD = 1 << 6, kPs = 1 << 7;

  TableBuilder(MachineState& s, u64 root, u64 seed) : s_(s), next_(root + kPageSize), rng_(seed)
  {
    s_.user_level_mode = false;
    s_.cr3 = root;
    root_ = root;
  }

  // Maps the page containing `lin` to a fresh random frame with a leaf at
  // `leaf_level` (1 = 1 GiB, 2 = 2 MiB, 3 = 4 KiB). Returns the expected
  // physical address, or nullopt when an existing mapping conflicts.
  std::optional<u64> map(u64 lin, unsigned leaf_level)
  {
    u64 table = root_;
    for (unsigned level = 0; level < leaf_level; ++level) {
      const u64 at = table + index(lin, level) * 8;
      const u64 e = *s_.mem.read(at, 8);
      if (!(e & kPresent)) {
        const u64 t = alloc();
        s_.mem.write(at, 8, t | kPresent | kRw | kUs | random_ad(false));
        table = t;
      } else if (e & kPs) {
        return std::nullopt;
      } else {
        table = e & 0x000FFFFFFFFFF000ull;
      }
    }
    const u64 at = table + index(lin, leaf_level) * 8;
    if (*s_.mem.read(at, 8) & kPresent)
      return std::nullopt;
    const unsigned shift = 39 - 9 * leaf_level;
    const u64 frame = frame_for(shift);
    s_.mem.write(at, 8, frame | kPresent | kRw | kUs | (leaf_level < 3 ? kPs : 0) | random_ad(true));
    return frame | (lin & ((u64{1} << shift) - 1));
  }

  static unsigned index(u64 lin, unsigned level) { return (lin >> (39 - 9 * level)) & 0x1FF; }

private:
  u64 alloc()
  {
    const u64 t = next_;
    next_ += kPageSize;
    for (u64 i = 0; i < 512; ++i)
      s_.mem.write(t + i * 8, 8, 0);
    return t;
  }

  // Frames are drawn above 64 GiB so they never overlap table pages.
  u64 frame_for(unsigned shift)
  {
    const u64 size = u64{1} << shift;
    const u64 lo = u64{64} << 30;
    const u64 n = ((u64{1} << 46) - lo) / size;
    return lo + (rng_() % n) * size;
  }

  u64 random_ad(bool leaf)
  {
    u64 v = 0;
    if (rng_() & 1)
      v |= kA;
    if (leaf && (rng_() & 1))
      v |= kD;
    return v;
  }

  MachineState& s_;
  u64 root_;
  u64 next_;
  std::mt19937_64 rng_;
};

} // namespace x86sim::testing
