#ifndef RSCACHE_DECENTRAL_HPP
#define RSCACHE_DECENTRAL_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rscache/ballsbins.hpp"
#include "rscache/codec.hpp"
#include "rscache/common.hpp"
#include "rscache/rng.hpp"
#include "rscache/rsgraph.hpp"

namespace rscache::decentral {

enum class Family { binomial, mn };

/// Exact parameters of the centralized instance realizing a virtual-user
/// target. Everything here is computed from binomials without touching an
/// actual graph, so arbitrarily large instances can be reported.
struct RealizedParams {
  Family family = Family::binomial;
  std::uint32_t param1 = 0;  // n  (binomial)  or K  (mn)
  std::uint32_t param2 = 0;  // a  (binomial)  or s  (mn)
  std::uint64_t virtual_users = 0;     // realized K'
  std::uint64_t subpacketization = 0;  // F_d
  std::uint64_t num_matchings = 0;     // t
  std::uint64_t min_right_degree = 0;  // c
  Ratio rate;                          // exact R_c = t/F
  Ratio memory_ratio;                  // exact 1 - c/F
};

struct KPrimeChoice {
  double target_gain = 0;        // g
  double memory_budget = 0;      // M/N
  double centralized_rate = 0;   // R_c prior fed to the Theorem 3 formula
  double exponent = 0;           // delta; 0 for constant-rate families
  std::uint64_t k_prime = 0;     // Theorem 3/4 formula value
  RealizedParams realized;
};

/// 3 * ceil(log2 K) bits exchanged per join under population bound K.
inline std::uint64_t join_overhead_bits(std::uint64_t k_cap) {
  if (k_cap < 2) throw ParameterError("join_overhead_bits needs K >= 2");
  return 3ULL * std::bit_width(k_cap - 1);
}

namespace detail {

inline bool memory_fits(std::uint64_t packets, std::uint64_t min_degree, double budget) {
  // exact ratio (F - c)/F against the budget
  return static_cast<long double>(packets - min_degree) <=
         static_cast<long double>(budget) * static_cast<long double>(packets);
}

// Realized K' must be at least Theorem 3's g*R_c/(1-M/N) with THIS
// instance's exact values; R_c/(1-M/N) = t/c, so the test is K'*c >= g*t.
inline bool gain_self_consistent(std::uint64_t users, std::uint64_t t, std::uint64_t c,
                                 double g) {
  return static_cast<long double>(users) * static_cast<long double>(c) >=
         static_cast<long double>(g) * static_cast<long double>(t);
}

inline RealizedParams binomial_params(std::uint32_t n, std::uint32_t a) {
  RealizedParams r;
  r.family = Family::binomial;
  r.param1 = n;
  r.param2 = a;
  r.virtual_users = comb::binomial(n, 2);
  r.subpacketization = comb::binomial(n, a);
  r.num_matchings = comb::binomial(n, a + 2);
  r.min_right_degree = comb::binomial(n - 2, a);
  r.rate = Ratio(r.num_matchings, r.subpacketization);
  r.memory_ratio = Ratio(r.subpacketization - r.min_right_degree, r.subpacketization);
  return r;
}

inline RealizedParams mn_params(std::uint32_t users, std::uint32_t s) {
  RealizedParams r;
  r.family = Family::mn;
  r.param1 = users;
  r.param2 = s;
  r.virtual_users = users;
  r.subpacketization = comb::binomial(users, s);
  r.num_matchings = comb::binomial(users, s + 1);
  r.min_right_degree = comb::binomial(users - 1, s);
  r.rate = Ratio(r.num_matchings, r.subpacketization);
  r.memory_ratio = Ratio(r.subpacketization - r.min_right_degree, r.subpacketization);
  return r;
}

}  // namespace detail

/// Theorem 3 / Theorem 4 parameter selection. k_prime follows the paper's
/// formula with the caller's prior R_c; the realized instance is then
/// searched so that its EXACT memory ratio fits the budget, it reaches
/// k_prime virtual users, and (delta = 0) Theorem 3's K' recomputed from
/// its own exact R_c and M/N is still covered, or (delta > 0) the premise
/// R_c <= K'^delta holds. For the binomial family the anchor n is the
/// lambda-root of the asymptotic memory expression, raised until the exact
/// ratio fits.
inline KPrimeChoice select_kprime(double g, double memory_ratio, double centralized_rate,
                                  double delta, Family family = Family::binomial) {
  if (g < 1) throw ParameterError("gain g must be >= 1");
  if (!(memory_ratio > 0) || !(memory_ratio < 1)) {
    throw ParameterError("memory ratio must lie in (0, 1)");
  }
  if (!(centralized_rate > 0)) throw ParameterError("centralized rate must be positive");
  if (delta < 0 || delta >= 1) throw ParameterError("delta must lie in [0, 1)");

  KPrimeChoice choice;
  choice.target_gain = g;
  choice.memory_budget = memory_ratio;
  choice.centralized_rate = centralized_rate;
  choice.exponent = delta;
  if (delta == 0) {
    choice.k_prime =
        static_cast<std::uint64_t>(std::ceil(g * centralized_rate / (1.0 - memory_ratio)));
  } else {
    choice.k_prime = static_cast<std::uint64_t>(
        std::ceil(std::pow(g / (1.0 - memory_ratio), 1.0 / (1.0 - delta))));
  }
  if (choice.k_prime < 1) choice.k_prime = 1;

  if (family == Family::mn) {
    const std::uint64_t s = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::ceil(g)) - 1);
    std::uint64_t users = std::max<std::uint64_t>(
        {choice.k_prime, s + 1,
         static_cast<std::uint64_t>(std::ceil(static_cast<double>(s) / memory_ratio))});
    for (; users < (1ULL << 32); ++users) {
      // exact memory ratio of mn is s/K'
      if (static_cast<long double>(s) >
          static_cast<long double>(memory_ratio) * static_cast<long double>(users)) {
        continue;
      }
      try {
        choice.realized = detail::mn_params(static_cast<std::uint32_t>(users),
                                            static_cast<std::uint32_t>(s));
      } catch (const std::overflow_error&) {
        throw ConstructionError("mn instance for g=" + std::to_string(g) +
                                " overflows exact 64-bit subpacketization");
      }
      return choice;
    }
    throw ConstructionError("no feasible mn instance");
  }

  const double lambda = (1.0 + std::sqrt(1.0 - memory_ratio)) / memory_ratio;
  constexpr std::uint32_t kMaxA = 64;
  constexpr std::uint32_t kMaxN = 4096;
  for (std::uint32_t a = 1; a <= kMaxA; ++a) {
    const std::uint64_t anchor =
        std::max<std::uint64_t>(static_cast<std::uint64_t>(std::llround(lambda * a)),
                                static_cast<std::uint64_t>(a) + 2);
    if (anchor > kMaxN) continue;
    for (std::uint32_t n = static_cast<std::uint32_t>(anchor); n <= kMaxN; ++n) {
      RealizedParams r;
      try {
        r = detail::binomial_params(n, a);
      } catch (const std::overflow_error&) {
        break;  // larger n only grows; try the next a
      }
      if (!detail::memory_fits(r.subpacketization, r.min_right_degree, memory_ratio)) {
        continue;
      }
      if (delta == 0) {
        // n-independent for this family: K'c/t = (a+1)(a+2)/2
        if (!detail::gain_self_consistent(r.virtual_users, r.num_matchings,
                                          r.min_right_degree, g)) {
          break;
        }
      } else if (static_cast<long double>(r.num_matchings) >
                 std::pow(static_cast<long double>(r.virtual_users),
                          static_cast<long double>(delta)) *
                     static_cast<long double>(r.subpacketization)) {
        continue;  // premise R_c <= K'^delta; K' grows with n
      }
      if (r.virtual_users < choice.k_prime) continue;
      choice.realized = r;
      return choice;
    }
  }
  throw ConstructionError("no feasible binomial instance reaches K'=" +
                          std::to_string(choice.k_prime) + " within the memory budget");
}

/// Materialize the centralized graph behind a KPrimeChoice. Refuses
/// instances whose edge count exceeds the budget instead of thrashing.
inline RsGraph materialize(const RealizedParams& r,
                           std::uint64_t max_edges = (1ULL << 26)) {
  const std::uint64_t edges =
      r.family == Family::binomial
          ? checked_mul(r.num_matchings,
                        static_cast<std::uint64_t>(r.param2 + 2) * (r.param2 + 1) / 2)
          : checked_mul(r.num_matchings, r.param2 + 1);
  if (edges > max_edges) {
    throw ConstructionError("instance has " + std::to_string(edges) +
                            " edges, over the materialization budget of " +
                            std::to_string(max_edges));
  }
  return r.family == Family::binomial ? construct_binomial(r.param1, r.param2)
                                      : construct_mn(r.param1, r.param2);
}

/// Virtual-user pool: K' precomputed centralized cache contents (bins) that
/// real users (balls) adopt. Single-writer; joins and leaves never touch
/// any other user's assignment.
struct VirtualPool {
  std::shared_ptr<const RsGraph> graph;
  std::shared_ptr<const std::vector<codec::CacheState>> virtual_caches;  // C_k
  SchemeParams params;  // exact t/F, c, memory ratio of the shared graph
  std::optional<KPrimeChoice> choice;
  std::uint64_t k_cap = 0;  // population bound for bit accounting

  std::vector<std::uint32_t> loads;                 // X_k
  std::vector<std::vector<std::uint64_t>> members;  // join order per slot
  std::unordered_map<std::uint64_t, std::uint32_t> slot_of;
  std::uint64_t next_user_id = 0;

  std::uint64_t num_slots() const { return loads.size(); }
  std::uint64_t population() const { return slot_of.size(); }

  std::uint32_t max_load() const {
    std::uint32_t m = 0;
    for (const auto x : loads) m = std::max(m, x);
    return m;
  }

  std::uint64_t loads_digest() const {
    return fnv1a64_u32le(loads);
  }

  /// Same shared graph/caches, no users: one fresh trial.
  VirtualPool clone_empty() const {
    VirtualPool p;
    p.graph = graph;
    p.virtual_caches = virtual_caches;
    p.params = params;
    p.choice = choice;
    p.k_cap = k_cap;
    p.loads.assign(loads.size(), 0);
    p.members.assign(members.size(), {});
    p.next_user_id = 0;
    return p;
  }
};

inline VirtualPool make_pool(std::shared_ptr<const RsGraph> graph, std::uint64_t k_cap,
                             std::optional<KPrimeChoice> choice = std::nullopt) {
  VirtualPool pool;
  pool.params = scheme_params(*graph);  // validates; throws on invalid graphs
  pool.virtual_caches = std::make_shared<const std::vector<codec::CacheState>>(
      codec::placement_from_graph(*graph));
  pool.graph = std::move(graph);
  pool.choice = std::move(choice);
  pool.k_cap = k_cap;
  pool.loads.assign(pool.graph->num_users, 0);
  pool.members.assign(pool.graph->num_users, {});
  return pool;
}

inline VirtualPool make_pool(const KPrimeChoice& choice, std::uint64_t k_cap,
                             std::uint64_t max_edges = (1ULL << 26)) {
  auto graph = std::make_shared<const RsGraph>(materialize(choice.realized, max_edges));
  return make_pool(std::move(graph), k_cap, choice);
}

struct JoinRecord {
  std::uint64_t user = 0;
  std::uint64_t first_choice = 0;
  std::uint64_t second_choice = 0;
  std::uint64_t chosen = 0;
  std::uint64_t bits_exchanged = 0;
};

/// Algorithm 2 Sampling: two uniform draws with replacement over the K'
/// cache contents; the new user adopts the less-loaded one (first draw on
/// ties) and only that load changes.
inline JoinRecord sample_join(VirtualPool& pool, Rng& rng) {
  const bins::TwoChoice pick = bins::two_choice_pick(rng, pool.loads);
  JoinRecord rec;
  rec.user = pool.next_user_id++;
  rec.first_choice = pick.first;
  rec.second_choice = pick.second;
  rec.chosen = pick.chosen;
  rec.bits_exchanged = pool.k_cap >= 2 ? join_overhead_bits(pool.k_cap) : 0;
  const auto slot = static_cast<std::uint32_t>(pick.chosen);
  ++pool.loads[slot];
  pool.members[slot].push_back(rec.user);
  pool.slot_of.emplace(rec.user, slot);
  return rec;
}

/// Departure: the user's load counter drops; nobody else is touched.
inline void leave(VirtualPool& pool, std::uint64_t user) {
  const auto it = pool.slot_of.find(user);
  if (it == pool.slot_of.end()) {
    throw UnknownUserError("leave of unknown user " + std::to_string(user));
  }
  const std::uint32_t slot = it->second;
  auto& m = pool.members[slot];
  m.erase(std::find(m.begin(), m.end(), user));
  --pool.loads[slot];
  pool.slot_of.erase(it);
}

/// Algorithm 2 Placement: K sequential joins.
inline void place_all(VirtualPool& pool, std::uint64_t num_users, Rng& rng) {
  for (std::uint64_t u = 0; u < num_users; ++u) sample_join(pool, rng);
}

struct RoundSlot {
  std::uint32_t slot = 0;     // virtual user index
  std::uint64_t user = 0;     // real user served
  std::uint32_t demand = 0;   // file index
};

/// Round-based delivery plan: round i serves, per slot with X_k >= i, the
/// i-th user that joined that slot (FIFO). That realizes maximal
/// distinct-content subsets in exactly max_k X_k rounds.
struct DeliveryPlan {
  std::vector<std::vector<RoundSlot>> rounds;
  std::uint64_t naive_transmission_count = 0;   // t * rounds, Lemma 1's count
  std::uint64_t pruned_transmission_count = 0;  // filled by delivery
};

/// Demands are indexed by real-user id, so ids must be dense (place_all
/// produces 0..K-1).
inline DeliveryPlan build_rounds(const VirtualPool& pool, const codec::DemandVector& d) {
  DeliveryPlan plan;
  plan.rounds.resize(pool.max_load());
  for (std::uint32_t slot = 0; slot < pool.members.size(); ++slot) {
    const auto& users = pool.members[slot];
    for (std::size_t i = 0; i < users.size(); ++i) {
      if (users[i] >= d.size()) {
        throw DimensionError("demand vector shorter than user id " +
                             std::to_string(users[i]));
      }
      plan.rounds[i].push_back(RoundSlot{slot, users[i], d[users[i]]});
    }
  }
  plan.naive_transmission_count = pool.params.num_matchings * plan.rounds.size();
  return plan;
}

struct DecodeFailure {
  std::uint64_t round = 0;
  std::uint64_t user = 0;
  std::string detail;
};

struct DecentralDelivery {
  std::uint64_t naive_count = 0;   // transmissions enumerated (t per round)
  std::uint64_t pruned_count = 0;  // matchings touching an occupied slot
  std::uint64_t decode_checked = 0;
  bool decode_ok = true;
  std::vector<DecodeFailure> failures;
};

struct DeliverOptions {
  bool with_payload = true;   // XOR real bytes; otherwise count only
  bool verify_decode = true;  // decode each served user and compare
};

/// Run the round-based delivery: per round the K'-user centralized
/// delivery runs with unoccupied slots demanding the all-zero dummy file.
/// The naive count is one transmission per matching per round (Lemma 1);
/// pruning drops transmissions whose matching touches only dummy slots.
inline DecentralDelivery deliver_decentralized(const VirtualPool& pool,
                                               const codec::Library& lib,
                                               DeliveryPlan& plan,
                                               const DeliverOptions& opts = {}) {
  const RsGraph& g = *pool.graph;
  if (lib.num_packets != g.num_packets) {
    throw DimensionError("library packets != graph packets");
  }
  DecentralDelivery out;
  std::optional<codec::EdgeIndex> idx;
  if (opts.with_payload && opts.verify_decode) idx = codec::EdgeIndex::build(g);

  std::vector<bool> occupied(g.num_users, false);
  codec::DemandVector vd(g.num_users, codec::kDummyFile);
  for (std::size_t round = 0; round < plan.rounds.size(); ++round) {
    std::fill(occupied.begin(), occupied.end(), false);
    std::fill(vd.begin(), vd.end(), codec::kDummyFile);
    for (const RoundSlot& rs : plan.rounds[round]) {
      occupied[rs.slot] = true;
      vd[rs.slot] = rs.demand;
    }

    out.naive_count += g.matchings.size();
    for (const auto& matching : g.matchings) {
      for (const Edge& e : matching) {
        if (occupied[e.user]) {
          ++out.pruned_count;
          break;
        }
      }
    }

    if (!opts.with_payload) continue;
    const auto txs = codec::deliver_partial(g, lib, vd);
    if (!opts.verify_decode) continue;
    for (const RoundSlot& rs : plan.rounds[round]) {
      ++out.decode_checked;
      try {
        const auto got = codec::decode(g, *idx, rs.slot, (*pool.virtual_caches)[rs.slot],
                                       txs, vd, lib);
        if (!std::equal(got.begin(), got.end(), lib.content[rs.demand].begin())) {
          out.decode_ok = false;
          out.failures.push_back({round, rs.user, "byte mismatch"});
        }
      } catch (const DecodeError& e) {
        out.decode_ok = false;
        out.failures.push_back({round, rs.user, e.what()});
      }
    }
  }
  plan.naive_transmission_count = out.naive_count;
  plan.pruned_transmission_count = out.pruned_count;
  return out;
}

struct RateReport {
  double centralized_rate = 0;  // R_c = t/F
  Ratio centralized_rate_exact;
  std::uint32_t max_load = 0;
  double naive_rate = 0;   // (t/F) * max load, exact by construction
  double pruned_rate = 0;  // pruned transmissions / F
  std::uint64_t naive_count = 0;
  std::uint64_t pruned_count = 0;
  std::optional<double> bound;  // K(1-M/N)/g + R_c(lnln K'/ln2 + 9)
};

/// Lemma 1 accounting plus the Lemma 2 substitution bound. The bound is a
/// report field (computed from the pool's gain target and exact realized
/// parameters), not a per-trial assertion.
inline RateReport measure_rate(const VirtualPool& pool, const DeliveryPlan& plan) {
  RateReport r;
  const std::uint64_t t = pool.params.num_matchings;
  const std::uint64_t F = pool.params.subpacketization;
  r.centralized_rate_exact = pool.params.rate;
  r.centralized_rate = pool.params.rate.to_double();
  r.max_load = pool.max_load();
  r.naive_count = checked_mul(t, r.max_load);
  r.naive_rate = static_cast<double>(r.naive_count) / static_cast<double>(F);
  r.pruned_count = plan.pruned_transmission_count;
  r.pruned_rate = static_cast<double>(r.pruned_count) / static_cast<double>(F);
  if (pool.choice && pool.num_slots() >= 3) {
    const double g = pool.choice->target_gain;
    const double one_minus_mn = one_minus(pool.params.memory_ratio).to_double();
    const double kprime = static_cast<double>(pool.num_slots());
    r.bound = static_cast<double>(pool.population()) * one_minus_mn / g +
              r.centralized_rate * (std::log(std::log(kprime)) / std::log(2.0) + 9.0);
  }
  return r;
}

}  // namespace rscache::decentral

#endif  // RSCACHE_DECENTRAL_HPP
