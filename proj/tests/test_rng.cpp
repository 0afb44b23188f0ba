#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fbmq/rng.hpp"
#include "support/oracles.hpp"

using namespace fbmq;

TEST(Philox, KnownAnswerVectors) {
  using philox::philox4x32_10;
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (philox::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (philox::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (philox::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(NormalQuantile, InvertsTheNormalCdf) {
  for (double p : {1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9, 0.975, 0.999, 1 - 1e-12}) {
    const double x = normal_quantile(p);
    const double back = p < 0.5 ? oracle::normal_sf(-x) : 1.0 - oracle::normal_sf(x);
    EXPECT_NEAR(back / p, 1.0, 1e-13) << "p=" << p;
  }
  EXPECT_EQ(normal_quantile(0.5), 0.0);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-15);
}

TEST(NormalSource, DrawIsPureFunctionOfSeedStreamIndex) {
  NormalSource a(RngStream{42, 7});
  std::vector<double> seq(9);
  for (double& x : seq) x = a.normal();

  // Jumping straight to draw 5 reproduces it.
  NormalSource b(RngStream{42, 7}, 5);
  EXPECT_EQ(b.normal(), seq[5]);

  // Block filling from an odd offset matches one-at-a-time drawing.
  NormalSource c(RngStream{42, 7}, 1);
  std::vector<double> filled(8);
  c.fill_normal(filled.begin(), filled.size());
  for (std::size_t i = 0; i < filled.size(); ++i) EXPECT_EQ(filled[i], seq[i + 1]);

  NormalSource other(RngStream{42, 8});
  EXPECT_NE(other.normal(), seq[0]);
}

TEST(NormalSource, MomentsOfManyDraws) {
  NormalSource s(RngStream{3, 0});
  const int n = 200000;
  double m = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal();
    m += x;
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(NormalSource, StreamsAreUncorrelated) {
  const int n = 100000;
  double sxy = 0;
  for (int i = 0; i < n; ++i) {
    NormalSource a(RngStream{9, static_cast<std::uint64_t>(i)});
    NormalSource b(RngStream{9, static_cast<std::uint64_t>(i) + 1});
    sxy += a.normal() * b.normal();
  }
  EXPECT_NEAR(sxy / n, 0.0, 4.0 / std::sqrt(n));
}
