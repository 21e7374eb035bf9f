// Test-only oracles, kept independent of the implementation paths they
// check: Pascal-triangle binomials, bitmask subset enumeration, a
// from-scratch induced-matching checker, and a literal two-choice
// re-simulation.
#ifndef RSCACHE_TESTS_ORACLES_HPP
#define RSCACHE_TESTS_ORACLES_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "rscache/rng.hpp"
#include "rscache/rsgraph.hpp"

namespace oracles {

// Pascal's triangle, no multiplication involved.
inline std::uint64_t binom_pascal(unsigned n, unsigned k) {
  if (k > n) return 0;
  std::vector<std::vector<std::uint64_t>> row(n + 1);
  for (unsigned i = 0; i <= n; ++i) {
    row[i].assign(i + 1, 1);
    for (unsigned j = 1; j < i; ++j) row[i][j] = row[i - 1][j - 1] + row[i - 1][j];
  }
  return row[n][k];
}

// All k-subsets of [0,n) via bitmask sweep, sorted colexicographically:
// compare reversed descending element lists.
inline std::vector<std::vector<std::uint32_t>> subsets_colex(unsigned n, unsigned k) {
  std::vector<std::vector<std::uint32_t>> all;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<unsigned>(__builtin_popcount(mask)) != k) continue;
    std::vector<std::uint32_t> s;
    for (unsigned b = 0; b < n; ++b) {
      if (mask & (1u << b)) s.push_back(b);
    }
    all.push_back(std::move(s));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
  });
  return all;
}

// From-scratch Ruzsa-Szemeredi check over sorted edge vectors.
struct RsCheck {
  bool partition = true;
  bool matching = true;
  bool induced = true;
  std::uint64_t edges = 0;
  bool ok() const { return partition && matching && induced; }
};

inline RsCheck check_rs(const rscache::RsGraph& g) {
  RsCheck c;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& m : g.matchings) {
    if (m.empty()) c.partition = false;
    for (const auto& e : m) {
      if (e.packet >= g.num_packets || e.user >= g.num_users) c.partition = false;
      edges.emplace_back(e.packet, e.user);
    }
  }
  if (g.matchings.empty()) c.partition = false;
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) c.partition = false;
  c.edges = edges.size();

  const auto is_edge = [&](std::uint32_t f, std::uint32_t k) {
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(f, k));
  };
  for (const auto& m : g.matchings) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (i == j) continue;
        if (m[i].packet == m[j].packet || m[i].user == m[j].user) c.matching = false;
        if (is_edge(m[i].packet, m[j].user)) c.induced = false;
      }
    }
  }
  return c;
}

inline std::map<std::uint32_t, std::uint64_t> user_degrees(const rscache::RsGraph& g) {
  std::map<std::uint32_t, std::uint64_t> deg;
  for (std::uint32_t k = 0; k < g.num_users; ++k) deg[k] = 0;
  for (const auto& m : g.matchings) {
    for (const auto& e : m) ++deg[e.user];
  }
  return deg;
}

// Literal transcription of the committed two-choice protocol, sharing only
// the Rng type with the implementation.
inline std::vector<std::uint32_t> two_choice_loads(std::uint64_t balls, std::uint64_t bins,
                                                   rscache::Rng rng) {
  std::vector<std::uint32_t> loads(bins, 0);
  for (std::uint64_t i = 0; i < balls; ++i) {
    const std::uint64_t a = rscache::uniform_below(rng, bins);
    const std::uint64_t b = rscache::uniform_below(rng, bins);
    if (loads[a] <= loads[b]) {
      ++loads[a];
    } else {
      ++loads[b];
    }
  }
  return loads;
}

}  // namespace oracles

#endif  // RSCACHE_TESTS_ORACLES_HPP
