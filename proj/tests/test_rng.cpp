#include "arsv/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace arsv;

// Known-answer vectors from the Random123 reference distribution.
TEST(Philox, KnownAnswerVectors) {
  {
    const auto b = Philox4x32::block(0, 0, 0);
    EXPECT_EQ(b[0], 0x6627e8d5u);
    EXPECT_EQ(b[1], 0xe169c58du);
    EXPECT_EQ(b[2], 0xbc57ac4cu);
    EXPECT_EQ(b[3], 0x9b00dbd8u);
  }
  {
    const std::uint64_t all = ~std::uint64_t{0};
    const auto b = Philox4x32::block(all, all, all);
    EXPECT_EQ(b[0], 0x408f276du);
    EXPECT_EQ(b[1], 0x41c83b0eu);
    EXPECT_EQ(b[2], 0xa20bc7c6u);
    EXPECT_EQ(b[3], 0x6d5451fdu);
  }
  {
    // counter = pi digits, key = more pi digits
    const std::uint64_t pos = 0x85a308d3243f6a88ull;
    const std::uint64_t stream = 0x0370734413198a2eull;
    const std::uint64_t key = 0x299f31d0a4093822ull;
    const auto b = Philox4x32::block(key, stream, pos);
    EXPECT_EQ(b[0], 0xd16cfe09u);
    EXPECT_EQ(b[1], 0x94fdccebu);
    EXPECT_EQ(b[2], 0x5001e420u);
    EXPECT_EQ(b[3], 0x24126ea1u);
  }
}

TEST(RngStream, DeterministicAndStreamIndependent) {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  std::vector<double> va, vb, vc;
  for (int i = 0; i < 100; ++i) {
    va.push_back(a.next_normal());
    vb.push_back(b.next_normal());
    vc.push_back(c.next_normal());
  }
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
}

TEST(RngStream, UniformsInOpenUnitInterval) {
  RngStream r(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.next_uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RngStream, NormalMomentsSane) {
  RngStream r(5, 11);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.next_normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(StreamIds, PackingIsInjectiveOverFields) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t path : {0u, 1u, 199u})
    for (std::uint64_t t : {0u, 1u, 39u})
      for (std::uint64_t m : {0u, 1u, 6u})
        for (auto kind : {StreamKind::eval_path, StreamKind::inner_mc})
          ASSERT_TRUE(seen.insert(make_stream_id(kind, path, t, m)).second);
}
