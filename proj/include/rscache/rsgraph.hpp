#ifndef RSCACHE_RSGRAPH_HPP
#define RSCACHE_RSGRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "rscache/combinatorics.hpp"
#include "rscache/common.hpp"

namespace rscache {

using PacketId = std::uint32_t;
using UserId = std::uint32_t;
using MatchingId = std::uint32_t;

struct Edge {
  PacketId packet;
  UserId user;

  friend bool operator==(const Edge& a, const Edge& b) {
    return a.packet == b.packet && a.user == b.user;
  }
};

/// Combinatorial labels attached by the constructed families: the subset
/// behind each packet / user / matching index. Purely descriptive.
struct GraphLabels {
  std::string family;                 // "binomial" or "mn"
  std::vector<std::uint32_t> params;  // {n, a} or {K, s}
  std::vector<std::vector<std::uint32_t>> packet_subsets;
  std::vector<std::vector<std::uint32_t>> user_subsets;
  std::vector<std::vector<std::uint32_t>> matching_subsets;
};

/// Bipartite graph on [F] packets x [K] users whose edge set is the
/// disjoint union of the listed matchings. The edge set is defined BY the
/// matchings; there is no separate edge container.
struct RsGraph {
  std::uint64_t num_packets = 0;  // F
  std::uint64_t num_users = 0;    // K
  std::vector<std::vector<Edge>> matchings;
  std::optional<GraphLabels> labels;

  std::uint64_t num_matchings() const { return matchings.size(); }

  std::uint64_t num_edges() const {
    std::uint64_t e = 0;
    for (const auto& m : matchings) e += m.size();
    return e;
  }

  std::uint64_t edge_key(PacketId f, UserId k) const {
    return static_cast<std::uint64_t>(f) * num_users + k;
  }
};

/// Packets are the a-subsets of [n], users the 2-subsets, with an edge when
/// disjoint; the matching through edge (A,B) is indexed by the (a+2)-subset
/// A u B. All three index spaces are colex-ranked.
inline RsGraph construct_binomial(std::uint32_t n, std::uint32_t a) {
  if (a < 1 || a + 2 > n) {
    throw ParameterError("construct_binomial requires 1 <= a and a + 2 <= n, got n=" +
                         std::to_string(n) + " a=" + std::to_string(a));
  }
  RsGraph g;
  g.num_packets = comb::binomial(n, a);
  g.num_users = comb::binomial(n, 2);
  const std::uint64_t t = comb::binomial(n, a + 2);
  checked_mul(g.num_packets, g.num_users);  // index arithmetic must not wrap

  GraphLabels labels;
  labels.family = "binomial";
  labels.params = {n, a};
  labels.packet_subsets.reserve(g.num_packets);
  comb::for_each_subset(n, a, [&](const std::vector<std::uint32_t>& s) {
    labels.packet_subsets.push_back(s);
  });
  labels.user_subsets.reserve(g.num_users);
  comb::for_each_subset(n, 2, [&](const std::vector<std::uint32_t>& s) {
    labels.user_subsets.push_back(s);
  });

  g.matchings.reserve(t);
  labels.matching_subsets.reserve(t);
  std::vector<std::uint32_t> packet_subset(a);
  comb::for_each_subset(n, a + 2, [&](const std::vector<std::uint32_t>& s) {
    std::vector<Edge> matching;
    matching.reserve(static_cast<std::size_t>(a + 2) * (a + 1) / 2);
    // every split of s into a 2-subset (user) and the remaining a-subset (packet)
    for (std::uint32_t i = 0; i + 1 < s.size(); ++i) {
      for (std::uint32_t j = i + 1; j < s.size(); ++j) {
        const std::uint32_t user_pair[2] = {s[i], s[j]};
        packet_subset.clear();
        for (std::uint32_t x = 0; x < s.size(); ++x) {
          if (x != i && x != j) packet_subset.push_back(s[x]);
        }
        matching.push_back(Edge{
            static_cast<PacketId>(comb::colex_rank(packet_subset)),
            static_cast<UserId>(comb::colex_rank(user_pair)),
        });
      }
    }
    std::sort(matching.begin(), matching.end(),
              [](const Edge& x, const Edge& y) { return x.packet < y.packet; });
    g.matchings.push_back(std::move(matching));
    labels.matching_subsets.push_back(s);
  });
  g.labels = std::move(labels);
  return g;
}

/// Packets are the s-subsets of [K] with an edge (A,k) when k is outside A;
/// the matching through (A,k) is indexed by the (s+1)-subset A u {k}.
inline RsGraph construct_mn(std::uint32_t num_users, std::uint32_t s) {
  if (s < 1 || s >= num_users) {
    throw ParameterError("construct_mn requires 1 <= s < K, got K=" +
                         std::to_string(num_users) + " s=" + std::to_string(s));
  }
  RsGraph g;
  g.num_packets = comb::binomial(num_users, s);
  g.num_users = num_users;
  const std::uint64_t t = comb::binomial(num_users, s + 1);
  checked_mul(g.num_packets, g.num_users);

  GraphLabels labels;
  labels.family = "mn";
  labels.params = {num_users, s};
  labels.packet_subsets.reserve(g.num_packets);
  comb::for_each_subset(num_users, s, [&](const std::vector<std::uint32_t>& sub) {
    labels.packet_subsets.push_back(sub);
  });
  labels.user_subsets.reserve(num_users);
  for (std::uint32_t k = 0; k < num_users; ++k) labels.user_subsets.push_back({k});

  g.matchings.reserve(t);
  labels.matching_subsets.reserve(t);
  std::vector<std::uint32_t> packet_subset(s);
  comb::for_each_subset(num_users, s + 1, [&](const std::vector<std::uint32_t>& sub) {
    std::vector<Edge> matching;
    matching.reserve(sub.size());
    for (std::uint32_t i = 0; i < sub.size(); ++i) {
      packet_subset.clear();
      for (std::uint32_t x = 0; x < sub.size(); ++x) {
        if (x != i) packet_subset.push_back(sub[x]);
      }
      matching.push_back(Edge{
          static_cast<PacketId>(comb::colex_rank(packet_subset)),
          static_cast<UserId>(sub[i]),
      });
    }
    std::sort(matching.begin(), matching.end(),
              [](const Edge& x, const Edge& y) { return x.packet < y.packet; });
    g.matchings.push_back(std::move(matching));
    labels.matching_subsets.push_back(sub);
  });
  g.labels = std::move(labels);
  return g;
}

struct Violation {
  enum class Kind {
    vertex_out_of_range,
    empty_matching,
    duplicate_edge,      // same edge in two matchings (or twice in one)
    shared_vertex,       // two edges of one matching share a packet or user
    not_induced,         // cross pair of a matching's edges is a graph edge
    no_matchings,
  };
  Kind kind;
  std::uint64_t matching_index = 0;
  std::string detail;
};

struct ValidationReport {
  bool valid = false;
  bool partition_ok = false;  // no duplicate edges, all vertices in range, t >= 1
  bool matching_ok = false;   // no two edges of a matching share a vertex
  bool induced_ok = false;    // no cross pair of a matching is a graph edge
  std::vector<Violation> violations;
  // summary, meaningful when valid
  std::uint64_t num_packets = 0;
  std::uint64_t num_users = 0;
  std::uint64_t num_matchings = 0;
  std::uint64_t num_edges = 0;
  std::uint64_t min_right_degree = 0;  // c
  Ratio avg_matching_size;             // r = |E| / t
};

/// Check the partition, matching, and induced-matching properties. The
/// graph's edge set is taken to be the union of its matchings, so the
/// induced check tests cross pairs against that union. Malformed graphs
/// come back as violation lists, never exceptions.
inline ValidationReport validate_rs(const RsGraph& g) {
  ValidationReport rep;
  rep.num_packets = g.num_packets;
  rep.num_users = g.num_users;
  rep.num_matchings = g.num_matchings();

  if (g.num_packets < 1 || g.num_users < 1) {
    rep.violations.push_back({Violation::Kind::vertex_out_of_range, 0,
                              "graph needs F >= 1 and K >= 1"});
    return rep;
  }
  if (g.matchings.empty()) {
    rep.violations.push_back({Violation::Kind::no_matchings, 0, "t >= 1 required"});
  }

  std::unordered_set<std::uint64_t> edges;
  edges.reserve(g.num_edges() * 2);
  bool in_range = true;
  for (std::uint64_t m = 0; m < g.matchings.size(); ++m) {
    if (g.matchings[m].empty()) {
      rep.violations.push_back({Violation::Kind::empty_matching, m, "empty matching"});
    }
    for (const Edge& e : g.matchings[m]) {
      if (e.packet >= g.num_packets || e.user >= g.num_users) {
        rep.violations.push_back({Violation::Kind::vertex_out_of_range, m,
                                  "edge (" + std::to_string(e.packet) + "," +
                                      std::to_string(e.user) + ") out of range"});
        in_range = false;
        continue;
      }
      if (!edges.insert(g.edge_key(e.packet, e.user)).second) {
        rep.violations.push_back({Violation::Kind::duplicate_edge, m,
                                  "edge (" + std::to_string(e.packet) + "," +
                                      std::to_string(e.user) + ") repeated"});
      }
    }
  }
  rep.num_edges = edges.size();
  rep.partition_ok = rep.violations.empty();

  rep.matching_ok = true;
  rep.induced_ok = true;
  for (std::uint64_t m = 0; m < g.matchings.size(); ++m) {
    const auto& matching = g.matchings[m];
    for (std::size_t i = 0; i < matching.size(); ++i) {
      for (std::size_t j = i + 1; j < matching.size(); ++j) {
        const Edge& e1 = matching[i];
        const Edge& e2 = matching[j];
        if (e1.packet == e2.packet || e1.user == e2.user) {
          rep.matching_ok = false;
          rep.violations.push_back({Violation::Kind::shared_vertex, m,
                                    "edges " + std::to_string(i) + " and " +
                                        std::to_string(j) + " share a vertex"});
          continue;
        }
        if (!in_range) continue;  // cross lookups meaningless with bad keys
        if (edges.count(g.edge_key(e1.packet, e2.user)) ||
            edges.count(g.edge_key(e2.packet, e1.user))) {
          rep.induced_ok = false;
          rep.violations.push_back({Violation::Kind::not_induced, m,
                                    "cross edge between edges " + std::to_string(i) +
                                        " and " + std::to_string(j) + " exists"});
        }
      }
    }
  }

  if (!rep.violations.empty()) return rep;

  std::vector<std::uint64_t> user_degree(g.num_users, 0);
  for (const auto& matching : g.matchings) {
    for (const Edge& e : matching) ++user_degree[e.user];
  }
  rep.min_right_degree = *std::min_element(user_degree.begin(), user_degree.end());
  rep.avg_matching_size = Ratio(rep.num_edges, rep.num_matchings);
  rep.valid = true;
  return rep;
}

/// Centralized-scheme parameters read off a valid graph: rate t/F, minimum
/// right-degree c, memory ratio 1 - c/F, average matching size |E|/t.
struct SchemeParams {
  Ratio rate;
  Ratio memory_ratio;
  std::uint64_t min_right_degree = 0;  // c
  Ratio avg_matching_size;             // r
  std::uint64_t subpacketization = 0;  // F
  std::uint64_t num_matchings = 0;     // t
  std::uint64_t num_users = 0;         // K
  std::uint64_t num_edges = 0;
};

inline SchemeParams scheme_params_from_report(const ValidationReport& rep) {
  if (!rep.valid) throw InvalidGraphError("scheme_params requires a valid graph");
  SchemeParams p;
  p.rate = Ratio(rep.num_matchings, rep.num_packets);
  p.min_right_degree = rep.min_right_degree;
  p.memory_ratio = Ratio(rep.num_packets - rep.min_right_degree, rep.num_packets);
  p.avg_matching_size = rep.avg_matching_size;
  p.subpacketization = rep.num_packets;
  p.num_matchings = rep.num_matchings;
  p.num_users = rep.num_users;
  p.num_edges = rep.num_edges;
  return p;
}

inline SchemeParams scheme_params(const RsGraph& g) {
  return scheme_params_from_report(validate_rs(g));
}

}  // namespace rscache

#endif  // RSCACHE_RSGRAPH_HPP
