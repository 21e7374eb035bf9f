#include "rscache/decentral.hpp"

#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "oracles.hpp"

using namespace rscache;
using decentral::Family;
using decentral::KPrimeChoice;
using decentral::VirtualPool;

namespace {

VirtualPool small_pool(std::uint64_t k_cap = 100) {
  auto graph = std::make_shared<const RsGraph>(construct_mn(4, 2));
  return decentral::make_pool(graph, k_cap);
}

// serialize user -> slot for the non-interference check
std::map<std::uint64_t, std::uint32_t> assignments(const VirtualPool& pool) {
  return {pool.slot_of.begin(), pool.slot_of.end()};
}

}  // namespace

TEST(SelectKPrime, Theorem3Formula) {
  const auto c = decentral::select_kprime(20, 0.5, 1.0, 0);
  EXPECT_EQ(c.k_prime, 40u);
}

TEST(SelectKPrime, Theorem4Formula) {
  const auto c = decentral::select_kprime(16, 0.5, 1.0, 0.5);
  EXPECT_EQ(c.k_prime, 1024u);
}

TEST(SelectKPrime, SmallestNondegenerateGain) {
  const auto c = decentral::select_kprime(1, 0.5, 1.0, 0);
  EXPECT_EQ(c.k_prime, 2u);
  EXPECT_GE(c.realized.virtual_users, 2u);
}

TEST(SelectKPrime, RealizedInstanceForGain20) {
  const auto c = decentral::select_kprime(20, 0.5, 1.0, 0);
  const auto& r = c.realized;
  EXPECT_EQ(r.param1, 18u);
  EXPECT_EQ(r.param2, 5u);
  EXPECT_EQ(r.virtual_users, 153u);
  EXPECT_EQ(r.subpacketization, 8568u);
  EXPECT_EQ(r.num_matchings, 31824u);
  EXPECT_EQ(r.min_right_degree, 4368u);
  EXPECT_EQ(r.rate, Ratio(26, 7));
  EXPECT_EQ(r.memory_ratio, Ratio(25, 51));
  // exact memory within budget, exact-gain condition K'c >= g t
  EXPECT_LE(r.memory_ratio.to_double(), 0.5);
  EXPECT_GE(r.virtual_users * r.min_right_degree, 20u * r.num_matchings);
}

TEST(SelectKPrime, BinomialGainIsTriangularNumber) {
  // K(1-M/N)/R_c = (a+1)(a+2)/2 for every binomial instance, n-free
  for (unsigned n = 4; n <= 12; ++n) {
    for (unsigned a = 1; a + 2 <= n; ++a) {
      const std::uint64_t K = comb::binomial(n, 2);
      const std::uint64_t c = comb::binomial(n - 2, a);
      const std::uint64_t t = comb::binomial(n, a + 2);
      EXPECT_EQ(2 * K * c, static_cast<std::uint64_t>(a + 1) * (a + 2) * t)
          << "n=" << n << " a=" << a;
    }
  }
}

TEST(SelectKPrime, SubpacketizationGrowsWithGain) {
  std::vector<std::uint64_t> fs;
  for (const double g : {5.0, 10.0, 20.0, 40.0}) {
    const auto c = decentral::select_kprime(g, 0.5, 1.0, 0);
    fs.push_back(c.realized.subpacketization);
    EXPECT_EQ(c.realized.subpacketization,
              comb::binomial(c.realized.param1, c.realized.param2));
  }
  EXPECT_EQ(fs, (std::vector<std::uint64_t>{28, 165, 8568, 3108105}));
}

TEST(SelectKPrime, Theorem4RealizationSatisfiesPremise) {
  // the realized family must satisfy R_c <= (K')^delta and hold >= k_prime
  // virtual users within the memory budget
  const auto c = decentral::select_kprime(16, 0.5, 1.0, 0.5);
  const auto& r = c.realized;
  EXPECT_EQ(r.param1, 46u);
  EXPECT_EQ(r.param2, 6u);
  EXPECT_EQ(r.virtual_users, 1035u);
  EXPECT_EQ(r.subpacketization, 9366819u);
  EXPECT_EQ(r.rate, Ratio(195, 7));
  EXPECT_GE(r.virtual_users, c.k_prime);
  EXPECT_LE(r.rate.to_double(), std::sqrt(static_cast<double>(r.virtual_users)));
  EXPECT_LE(r.memory_ratio.to_double(), 0.5);
}

TEST(SelectKPrime, MnFamilyRealization) {
  const auto c = decentral::select_kprime(3, 0.5, 1.0, 0, Family::mn);
  EXPECT_EQ(c.k_prime, 6u);
  EXPECT_EQ(c.realized.param1, 6u);  // K' = 6 users
  EXPECT_EQ(c.realized.param2, 2u);  // s = g - 1
  EXPECT_EQ(c.realized.subpacketization, 15u);
  EXPECT_EQ(c.realized.rate, Ratio(4, 3));
  EXPECT_EQ(c.realized.memory_ratio, Ratio(1, 3));
}

TEST(SelectKPrime, RejectsOutOfRange) {
  EXPECT_THROW(decentral::select_kprime(0.5, 0.5, 1, 0), ParameterError);
  EXPECT_THROW(decentral::select_kprime(2, 0.0, 1, 0), ParameterError);
  EXPECT_THROW(decentral::select_kprime(2, 1.0, 1, 0), ParameterError);
  EXPECT_THROW(decentral::select_kprime(2, 0.5, 0, 0), ParameterError);
  EXPECT_THROW(decentral::select_kprime(2, 0.5, 1, 1.0), ParameterError);
}

TEST(SelectKPrime, InfeasibleBudgetFailsCleanly) {
  EXPECT_THROW(decentral::select_kprime(4, 1e-9, 1.0, 0), ConstructionError);
}

TEST(JoinOverheadBits, ThreeLogK) {
  EXPECT_EQ(decentral::join_overhead_bits(1024), 30u);
  EXPECT_EQ(decentral::join_overhead_bits(2), 3u);
  EXPECT_EQ(decentral::join_overhead_bits(1000), 30u);
  EXPECT_THROW(decentral::join_overhead_bits(1), ParameterError);
}

TEST(VirtualPool, JoinFollowsTwoChoiceAndCountsBits) {
  auto pool = small_pool(1000);
  Rng rng = make_rng(5);
  const auto rec = decentral::sample_join(pool, rng);
  EXPECT_EQ(rec.bits_exchanged, 30u);
  EXPECT_EQ(rec.chosen, bins::pick_less_loaded(std::vector<std::uint32_t>(4, 0),
                                               rec.first_choice, rec.second_choice));
  EXPECT_EQ(pool.loads[rec.chosen], 1u);
  EXPECT_EQ(pool.population(), 1u);
}

TEST(VirtualPool, PlaceAllConservation) {
  for (const std::uint64_t k : {0ull, 1ull, 57ull}) {
    auto pool = small_pool();
    Rng rng = make_rng(k);
    decentral::place_all(pool, k, rng);
    std::uint64_t total = std::accumulate(pool.loads.begin(), pool.loads.end(), 0ull);
    EXPECT_EQ(total, k);
    EXPECT_EQ(pool.population(), k);
    if (k == 1) {
      EXPECT_EQ(pool.max_load(), 1u);
    }
  }
}

TEST(VirtualPool, LeaveDecrementsOnlyThatUser) {
  auto pool = small_pool();
  Rng rng = make_rng(8);
  decentral::place_all(pool, 10, rng);
  const auto before = assignments(pool);
  const auto loads_before = pool.loads;
  const std::uint32_t slot = pool.slot_of.at(4);
  decentral::leave(pool, 4);
  auto after = assignments(pool);
  EXPECT_EQ(after.count(4), 0u);
  after.emplace(4, slot);
  EXPECT_EQ(after, before);  // nothing else moved
  EXPECT_EQ(pool.loads[slot] + 1, loads_before[slot]);
  EXPECT_EQ(pool.population(), 9u);

  EXPECT_THROW(decentral::leave(pool, 4), UnknownUserError);
  EXPECT_THROW(decentral::leave(pool, 999), UnknownUserError);
}

TEST(VirtualPool, EmptiedSlotStaysAvailable) {
  auto pool = small_pool();
  pool.loads = {0, 0, 0, 0};
  Rng rng = make_rng(3);
  const auto rec = decentral::sample_join(pool, rng);
  decentral::leave(pool, rec.user);
  EXPECT_EQ(pool.loads[rec.chosen], 0u);
  // slot can be picked again
  decentral::place_all(pool, 40, rng);
  EXPECT_EQ(pool.population(), 40u);
}

TEST(VirtualPool, JoinNeverTouchesExistingAssignments) {
  auto pool = small_pool();
  Rng rng = make_rng(12);
  decentral::place_all(pool, 8, rng);
  const auto before = assignments(pool);
  const auto rec = decentral::sample_join(pool, rng);
  auto after = assignments(pool);
  EXPECT_EQ(after.at(rec.user), rec.chosen);
  after.erase(rec.user);
  EXPECT_EQ(after, before);
}

TEST(VirtualPool, SeededEquivalenceWithBallsBins) {
  // same seed, same draw protocol -> identical load vectors (20 seeds)
  auto graph = std::make_shared<const RsGraph>(construct_mn(100, 1));
  const auto proto = decentral::make_pool(graph, 1000);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto pool = proto.clone_empty();
    Rng rng1 = make_rng(seed);
    decentral::place_all(pool, 1000, rng1);
    Rng rng2 = make_rng(seed);
    const auto state = bins::run_static(1000, 100, rng2);
    EXPECT_EQ(pool.loads, state.loads) << "seed " << seed;
  }
}

TEST(BuildRounds, FifoPerSlotSchedule) {
  auto pool = small_pool();
  // users a=0,b=1,c=2 joined slot 0 in order, d=3 joined slot 1
  pool.members = {{0, 1, 2}, {3}, {}, {}};
  pool.loads = {3, 1, 0, 0};
  pool.slot_of = {{0, 0}, {1, 0}, {2, 0}, {3, 1}};
  const codec::DemandVector d{3, 2, 1, 0};
  const auto plan = decentral::build_rounds(pool, d);
  ASSERT_EQ(plan.rounds.size(), 3u);
  ASSERT_EQ(plan.rounds[0].size(), 2u);
  EXPECT_EQ(plan.rounds[0][0].slot, 0u);
  EXPECT_EQ(plan.rounds[0][0].user, 0u);
  EXPECT_EQ(plan.rounds[0][1].slot, 1u);
  EXPECT_EQ(plan.rounds[0][1].user, 3u);
  ASSERT_EQ(plan.rounds[1].size(), 1u);
  EXPECT_EQ(plan.rounds[1][0].user, 1u);
  ASSERT_EQ(plan.rounds[2].size(), 1u);
  EXPECT_EQ(plan.rounds[2][0].user, 2u);
  EXPECT_EQ(plan.naive_transmission_count, 4u * 3u);
}

TEST(BuildRounds, AllLoadsAtMostOneGivesSingleRound) {
  auto pool = small_pool();
  Rng rng = make_rng(2);
  decentral::place_all(pool, 3, rng);
  while (pool.max_load() > 1) {
    pool = small_pool();
    decentral::place_all(pool, 3, rng);
  }
  const auto plan = decentral::build_rounds(pool, codec::DemandVector{0, 0, 0});
  EXPECT_EQ(plan.rounds.size(), 1u);
}

TEST(BuildRounds, EqualLoadsCoverEverySlotEachRound) {
  auto pool = small_pool();
  pool.members = {{0, 4}, {1, 5}, {2, 6}, {3, 7}};
  pool.loads = {2, 2, 2, 2};
  for (std::uint64_t u = 0; u < 8; ++u) pool.slot_of[u] = static_cast<std::uint32_t>(u % 4);
  const auto plan = decentral::build_rounds(pool, codec::DemandVector(8, 0));
  ASSERT_EQ(plan.rounds.size(), 2u);
  for (const auto& round : plan.rounds) EXPECT_EQ(round.size(), 4u);
}

TEST(BuildRounds, RoundsPartitionUsersWithDistinctSlots) {
  auto pool = small_pool();
  Rng rng = make_rng(77);
  decentral::place_all(pool, 23, rng);
  const auto plan = decentral::build_rounds(pool, codec::DemandVector(23, 0));
  EXPECT_EQ(plan.rounds.size(), pool.max_load());
  std::set<std::uint64_t> seen;
  for (const auto& round : plan.rounds) {
    std::set<std::uint32_t> slots;
    for (const auto& rs : round) {
      EXPECT_TRUE(slots.insert(rs.slot).second) << "slot repeated within a round";
      EXPECT_TRUE(seen.insert(rs.user).second) << "user served twice";
    }
  }
  EXPECT_EQ(seen.size(), 23u);
}

TEST(DeliverDecentralized, FullOccupancyMeansNoPruning) {
  auto pool = small_pool();
  pool.members = {{0, 4}, {1, 5}, {2, 6}, {3, 7}};
  pool.loads = {2, 2, 2, 2};
  for (std::uint64_t u = 0; u < 8; ++u) pool.slot_of[u] = static_cast<std::uint32_t>(u % 4);
  const auto lib = codec::make_library(4, pool.graph->num_packets, 8, 5);
  auto plan = decentral::build_rounds(pool, codec::DemandVector(8, 1));
  const auto res = decentral::deliver_decentralized(pool, lib, plan);
  EXPECT_EQ(res.naive_count, 2u * pool.params.num_matchings);
  EXPECT_EQ(res.pruned_count, res.naive_count);
  EXPECT_TRUE(res.decode_ok);
  EXPECT_EQ(res.decode_checked, 8u);
}

TEST(DeliverDecentralized, SingleUserPrunesToUserDegreeMatchings) {
  auto graph = std::make_shared<const RsGraph>(construct_binomial(4, 1));
  auto pool = decentral::make_pool(graph, 10);
  pool.members[2] = {0};
  pool.loads[2] = 1;
  pool.slot_of[0] = 2;
  const auto lib = codec::make_library(3, graph->num_packets, 8, 6);
  auto plan = decentral::build_rounds(pool, codec::DemandVector{1});
  const auto res = decentral::deliver_decentralized(pool, lib, plan);
  EXPECT_EQ(res.naive_count, 4u);   // t = 4
  EXPECT_EQ(res.pruned_count, 2u);  // user degree C(2,1) = 2, one edge per matching
  EXPECT_TRUE(res.decode_ok);
}

TEST(DeliverDecentralized, EndToEndDecodeWithDummies) {
  auto pool = small_pool();
  Rng rng = make_rng(41);
  decentral::place_all(pool, 11, rng);
  const auto lib = codec::make_library(4, pool.graph->num_packets, 16, 51);
  codec::DemandVector d(11);
  for (auto& x : d) x = static_cast<std::uint32_t>(uniform_below(rng, 4));
  auto plan = decentral::build_rounds(pool, d);
  const auto res = decentral::deliver_decentralized(pool, lib, plan);
  EXPECT_TRUE(res.decode_ok);
  EXPECT_EQ(res.decode_checked, 11u);
  EXPECT_EQ(res.naive_count, pool.params.num_matchings * plan.rounds.size());
  EXPECT_EQ(plan.pruned_transmission_count, res.pruned_count);
}

TEST(DeliverDecentralized, DecodesUnderEveryDemandGenerator) {
  auto pool_proto = small_pool();
  const auto lib = codec::make_library(6, pool_proto.graph->num_packets, 16, 77);
  for (unsigned gen = 0; gen < 3; ++gen) {
    auto pool = pool_proto.clone_empty();
    Rng rng = make_rng(100 + gen);
    decentral::place_all(pool, 13, rng);
    codec::DemandVector d(13);
    if (gen == 0) {
      for (std::size_t u = 0; u < d.size(); ++u) d[u] = static_cast<std::uint32_t>(u % 6);
    } else if (gen == 1) {
      for (auto& x : d) x = static_cast<std::uint32_t>(uniform_below(rng, 6));
    } else {
      std::fill(d.begin(), d.end(), 2u);
    }
    auto plan = decentral::build_rounds(pool, d);
    const auto res = decentral::deliver_decentralized(pool, lib, plan);
    EXPECT_TRUE(res.decode_ok) << "generator " << gen;
    EXPECT_EQ(res.decode_checked, 13u);
  }
}

TEST(DeliverDecentralized, AccountingModeMatchesPayloadCounts) {
  auto pool = small_pool();
  Rng rng = make_rng(43);
  decentral::place_all(pool, 9, rng);
  const auto lib = codec::make_library(4, pool.graph->num_packets, 8, 3);
  codec::DemandVector d(9, 2);
  auto plan1 = decentral::build_rounds(pool, d);
  auto plan2 = plan1;
  decentral::DeliverOptions counting{.with_payload = false, .verify_decode = false};
  const auto full = decentral::deliver_decentralized(pool, lib, plan1);
  const auto fast = decentral::deliver_decentralized(pool, lib, plan2, counting);
  EXPECT_EQ(full.naive_count, fast.naive_count);
  EXPECT_EQ(full.pruned_count, fast.pruned_count);
  EXPECT_EQ(fast.decode_checked, 0u);
}

TEST(MeasureRate, NaiveRateIsRateTimesMaxLoad) {
  auto graph = std::make_shared<const RsGraph>(construct_binomial(4, 1));
  auto pool = decentral::make_pool(graph, 10);
  pool.members[0] = {0, 1, 2};
  pool.loads[0] = 3;
  for (std::uint64_t u = 0; u < 3; ++u) pool.slot_of[u] = 0;
  auto plan = decentral::build_rounds(pool, codec::DemandVector(3, 0));
  const auto r = decentral::measure_rate(pool, plan);
  EXPECT_EQ(r.max_load, 3u);
  EXPECT_DOUBLE_EQ(r.naive_rate, 3.0);  // R_c = 1
  EXPECT_EQ(r.naive_count, 12u);
}

TEST(MeasureRate, MaxLoadOneRecoversCentralizedRate) {
  auto pool = small_pool();
  pool.members[1] = {0};
  pool.loads[1] = 1;
  pool.slot_of[0] = 1;
  auto plan = decentral::build_rounds(pool, codec::DemandVector{0});
  const auto r = decentral::measure_rate(pool, plan);
  EXPECT_DOUBLE_EQ(r.naive_rate, pool.params.rate.to_double());
}

TEST(MeasureRate, BoundFieldUsesLemma2Substitution) {
  const auto choice = decentral::select_kprime(3, 0.5, 1.0, 0, Family::mn);
  auto pool = decentral::make_pool(choice, 50);
  Rng rng = make_rng(4);
  decentral::place_all(pool, 50, rng);
  auto plan = decentral::build_rounds(pool, codec::DemandVector(50, 0));
  const auto r = decentral::measure_rate(pool, plan);
  ASSERT_TRUE(r.bound.has_value());
  const double kprime = static_cast<double>(pool.num_slots());
  const double expect = 50.0 * (1.0 - pool.params.memory_ratio.to_double()) / 3.0 +
                        pool.params.rate.to_double() *
                            (std::log(std::log(kprime)) / std::log(2.0) + 9.0);
  EXPECT_DOUBLE_EQ(*r.bound, expect);
}

TEST(MeasureRate, LoadConcentrationAtFortyBins) {
  // the naive rate of a rate-1 scheme over 40 virtual slots is just the
  // max load of 4000 balls in 40 bins; it concentrates near K/K' = 100 and
  // stays under the Lemma 2 expression in (nearly) every run
  unsigned within = 0;
  std::uint32_t lo = ~0u, hi = 0;
  const double bound = bins::bound_static(4000, 40);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng = make_rng(trial_seed(4040, seed));
    const auto s = bins::run_static(4000, 40, rng);
    lo = std::min(lo, s.max_load_seen);
    hi = std::max(hi, s.max_load_seen);
    if (s.max_load_seen <= bound) ++within;
  }
  EXPECT_GE(within, 99u);
  EXPECT_GE(lo, 100u);  // never below the average
  EXPECT_LE(hi, 112u);
}

TEST(Materialize, RefusesOversizedInstances) {
  const auto c = decentral::select_kprime(40, 0.5, 1.0, 0);  // (28,8): 590M edges
  EXPECT_THROW(decentral::materialize(c.realized), ConstructionError);
}

TEST(Materialize, RealizedGraphMatchesReportedParams) {
  const auto c = decentral::select_kprime(10, 0.5, 1.0, 0);  // (11,3), tiny
  const auto g = decentral::materialize(c.realized);
  const auto p = scheme_params(g);
  EXPECT_EQ(g.num_users, c.realized.virtual_users);
  EXPECT_EQ(p.subpacketization, c.realized.subpacketization);
  EXPECT_EQ(p.num_matchings, c.realized.num_matchings);
  EXPECT_EQ(p.min_right_degree, c.realized.min_right_degree);
  EXPECT_EQ(p.rate, c.realized.rate);
  EXPECT_EQ(p.memory_ratio, c.realized.memory_ratio);
}
