#include <gtest/gtest.h>

#include <cmath>

#include "kavg/rng.hpp"

using namespace kavg;

// Known-answer vectors published with the Random123 library.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}),
            (std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStream, PureFunctionOfLineage) {
  const RngStream a(42, Lineage{7, 3, 5});
  const RngStream b(42, Lineage{7, 3, 5});
  for (std::uint64_t i = 0; i < 64; ++i) {
    EXPECT_EQ(a.bits(i), b.bits(i));
    EXPECT_EQ(a.normal(i), b.normal(i));
  }
  // Querying out of order does not change values.
  const double late = a.normal(63);
  const RngStream c(42, Lineage{7, 3, 5});
  EXPECT_EQ(c.normal(63), late);
}

TEST(RngStream, DistinctLineagesDiffer) {
  const RngStream base(1, Lineage{0, 0, 0});
  EXPECT_NE(base.bits(0), RngStream(1, Lineage{1, 0, 0}).bits(0));
  EXPECT_NE(base.bits(0), RngStream(1, Lineage{0, 1, 0}).bits(0));
  EXPECT_NE(base.bits(0), RngStream(1, Lineage{0, 0, 1}).bits(0));
  EXPECT_NE(base.bits(0), RngStream(2, Lineage{0, 0, 0}).bits(0));
  EXPECT_NE(base.bits(0), RngStream(1, Lineage{0, 0, 0}, Domain::Staleness).bits(0));
}

TEST(RngStream, NormalMomentsAndCrossCorrelation) {
  const int n = 200000;
  double sum = 0, sum2 = 0, cross = 0;
  for (int i = 0; i < n; ++i) {
    const double x = RngStream(9, Lineage{static_cast<std::uint64_t>(i), 0, 0}).normal(0);
    const double y = RngStream(9, Lineage{static_cast<std::uint64_t>(i), 1, 0}).normal(0);
    sum += x;
    sum2 += x * x;
    cross += x * y;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sum2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(cross / n, 0.0, 5.0 / std::sqrt(n));
}

TEST(RngStream, UniformAndBelowRanges) {
  const RngStream s(3, Lineage{1, 2, 3});
  std::array<int, 7> counts{};
  for (std::uint64_t i = 0; i < 70000; ++i) {
    const double u = s.uniform(i);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[s.below(7, i)];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}
