#include "rscache/combinatorics.hpp"

#include <gtest/gtest.h>

#include <stdexcept>

#include "oracles.hpp"

namespace comb = rscache::comb;

TEST(Binomial, MatchesPascalTriangle) {
  for (unsigned n = 0; n <= 30; ++n) {
    for (unsigned k = 0; k <= n + 2; ++k) {
      EXPECT_EQ(comb::binomial(n, k), oracles::binom_pascal(n, k)) << n << " " << k;
    }
  }
}

TEST(Binomial, KnownValues) {
  EXPECT_EQ(comb::binomial(4, 1), 4u);
  EXPECT_EQ(comb::binomial(4, 2), 6u);
  EXPECT_EQ(comb::binomial(6, 2), 15u);
  EXPECT_EQ(comb::binomial(6, 4), 15u);
  EXPECT_EQ(comb::binomial(18, 5), 8568u);
  EXPECT_EQ(comb::binomial(18, 7), 31824u);
  EXPECT_EQ(comb::binomial(28, 8), 3108105u);
  EXPECT_EQ(comb::binomial(40, 19), 131282408400ull);
}

TEST(Binomial, OverflowThrowsInsteadOfWrapping) {
  EXPECT_THROW(comb::binomial(130, 65), std::overflow_error);
  // largest full row that fits: C(66,33) < 2^63 < C(67,33) intermediate
  EXPECT_NO_THROW(comb::binomial(61, 30));
}

TEST(ColexOrder, EnumerationMatchesBitmaskOracle) {
  for (unsigned n = 1; n <= 10; ++n) {
    for (unsigned k = 1; k <= n; ++k) {
      const auto expect = oracles::subsets_colex(n, k);
      std::vector<std::vector<std::uint32_t>> got;
      comb::for_each_subset(n, k, [&](const std::vector<std::uint32_t>& s) {
        got.push_back(s);
      });
      EXPECT_EQ(got, expect) << "n=" << n << " k=" << k;
    }
  }
}

TEST(ColexOrder, RankInvertsEnumeration) {
  for (unsigned n = 2; n <= 9; ++n) {
    for (unsigned k = 1; k <= n; ++k) {
      std::uint64_t expected_rank = 0;
      comb::for_each_subset(n, k, [&](const std::vector<std::uint32_t>& s) {
        EXPECT_EQ(comb::colex_rank(s), expected_rank);
        EXPECT_EQ(comb::colex_unrank(expected_rank, k), s);
        ++expected_rank;
      });
      EXPECT_EQ(expected_rank, comb::binomial(n, k));
    }
  }
}

TEST(ColexOrder, RankIsStableUnderGroundSetGrowth) {
  // colex rank of a subset does not depend on n
  const std::vector<std::uint32_t> s{1, 3, 4};
  EXPECT_EQ(comb::colex_rank(s), comb::binomial(1, 1) + comb::binomial(3, 2) + comb::binomial(4, 3));
}
