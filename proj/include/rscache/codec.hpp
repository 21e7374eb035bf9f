#ifndef RSCACHE_CODEC_HPP
#define RSCACHE_CODEC_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rscache/common.hpp"
#include "rscache/rng.hpp"
#include "rscache/rsgraph.hpp"

namespace rscache::codec {

/// Demand entry standing for the all-zero dummy file (round-based delivery
/// substitutes it for unoccupied virtual users). XOR-neutral by definition.
inline constexpr std::uint32_t kDummyFile = 0xffffffffu;

/// N files split into F packets of B bytes each, filled from a seeded
/// stream: packet (n,f) is generated by splitmix64 chained off
/// mix_seed(seed, n*F+f), so content is reproducible from the seed alone.
struct Library {
  std::uint32_t num_files = 0;
  std::uint64_t num_packets = 0;  // F
  std::uint32_t packet_bytes = 0;  // B
  std::uint64_t seed = 0;
  std::vector<std::vector<std::uint8_t>> content;  // per file, F*B bytes

  std::span<const std::uint8_t> packet(std::uint32_t file, std::uint64_t f) const {
    return {content[file].data() + f * packet_bytes, packet_bytes};
  }
};

inline Library make_library(std::uint32_t num_files, std::uint64_t num_packets,
                            std::uint32_t packet_bytes, std::uint64_t seed) {
  if (num_files < 1 || num_packets < 1 || packet_bytes < 1) {
    throw ParameterError("library needs N, F, B >= 1");
  }
  Library lib;
  lib.num_files = num_files;
  lib.num_packets = num_packets;
  lib.packet_bytes = packet_bytes;
  lib.seed = seed;
  lib.content.resize(num_files);
  for (std::uint32_t n = 0; n < num_files; ++n) {
    auto& file = lib.content[n];
    file.resize(num_packets * packet_bytes);
    for (std::uint64_t f = 0; f < num_packets; ++f) {
      std::uint64_t x = mix_seed(seed, n * num_packets + f);
      std::uint8_t* out = file.data() + f * packet_bytes;
      for (std::uint32_t b = 0; b < packet_bytes; b += 8) {
        x = splitmix64(x);
        std::uint64_t w = x;
        for (std::uint32_t k = b; k < packet_bytes && k < b + 8; ++k) {
          out[k] = static_cast<std::uint8_t>(w);
          w >>= 8;
        }
      }
    }
  }
  return lib;
}

/// Packet indices a user holds: the complement of its edge neighborhood,
/// applied identically to every file.
struct CacheState {
  UserId owner = 0;
  std::vector<bool> cached;  // size F
  std::uint64_t cached_count = 0;

  bool has(std::uint64_t f) const { return cached[f]; }
};

/// Cached-index bitmaps for all users, derived from the graph alone.
inline std::vector<CacheState> placement_from_graph(const RsGraph& g) {
  std::vector<CacheState> caches(g.num_users);
  for (std::uint64_t k = 0; k < g.num_users; ++k) {
    caches[k].owner = static_cast<UserId>(k);
    caches[k].cached.assign(g.num_packets, true);
    caches[k].cached_count = g.num_packets;
  }
  for (const auto& matching : g.matchings) {
    for (const Edge& e : matching) {
      if (caches[e.user].cached[e.packet]) {
        caches[e.user].cached[e.packet] = false;
        --caches[e.user].cached_count;
      }
    }
  }
  return caches;
}

/// Placement phase: user k stores packet f of every file iff (f,k) is not
/// an edge.
inline std::vector<CacheState> place(const RsGraph& g, const Library& lib) {
  if (lib.num_packets != g.num_packets) {
    throw DimensionError("library has " + std::to_string(lib.num_packets) +
                         " packets per file but graph expects " +
                         std::to_string(g.num_packets));
  }
  return placement_from_graph(g);
}

using DemandVector = std::vector<std::uint32_t>;  // file index per user

struct Transmission {
  MatchingId matching_index = 0;
  std::vector<std::uint8_t> payload;  // XOR of the constituents, B bytes
  std::vector<Edge> constituents;     // audit trail; decoding works without it
};

inline void check_demands(const RsGraph& g, const Library& lib, const DemandVector& d,
                          bool allow_dummy) {
  if (d.size() != g.num_users) {
    throw DimensionError("demand vector length " + std::to_string(d.size()) +
                         " != K = " + std::to_string(g.num_users));
  }
  for (std::uint32_t file : d) {
    if (file == kDummyFile) {
      if (!allow_dummy) throw DimensionError("dummy demand outside round-based delivery");
      continue;
    }
    if (file >= lib.num_files) {
      throw DimensionError("demand " + std::to_string(file) + " out of range");
    }
  }
}

inline void xor_into(std::span<std::uint8_t> acc, std::span<const std::uint8_t> src) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] ^= src[i];
}

/// Delivery phase: one broadcast per induced matching, in matching order;
/// the payload XORs the packet each edge's user demands. Dummy demands
/// contribute nothing (all-zero file). Rate is t transmissions = t/F files
/// no matter what d is.
inline std::vector<Transmission> deliver_partial(const RsGraph& g, const Library& lib,
                                                 const DemandVector& d) {
  if (lib.num_packets != g.num_packets) throw DimensionError("library/graph packet count");
  check_demands(g, lib, d, true);
  std::vector<Transmission> out;
  out.reserve(g.matchings.size());
  for (std::uint64_t m = 0; m < g.matchings.size(); ++m) {
    Transmission tx;
    tx.matching_index = static_cast<MatchingId>(m);
    tx.payload.assign(lib.packet_bytes, 0);
    tx.constituents.reserve(g.matchings[m].size());
    for (const Edge& e : g.matchings[m]) {
      tx.constituents.push_back(e);
      if (d[e.user] == kDummyFile) continue;
      xor_into(tx.payload, lib.packet(d[e.user], e.packet));
    }
    out.push_back(std::move(tx));
  }
  return out;
}

inline std::vector<Transmission> deliver(const RsGraph& g, const Library& lib,
                                         const DemandVector& d) {
  check_demands(g, lib, d, false);
  return deliver_partial(g, lib, d);
}

/// Which matching carries each edge. Built once per graph and shared;
/// decoding only needs this plus the public matchings.
struct EdgeIndex {
  std::unordered_map<std::uint64_t, MatchingId> matching_of_edge;

  static EdgeIndex build(const RsGraph& g) {
    EdgeIndex idx;
    idx.matching_of_edge.reserve(g.num_edges() * 2);
    for (std::uint64_t m = 0; m < g.matchings.size(); ++m) {
      for (const Edge& e : g.matchings[m]) {
        idx.matching_of_edge.emplace(g.edge_key(e.packet, e.user),
                                     static_cast<MatchingId>(m));
      }
    }
    return idx;
  }
};

/// Recover user u's demanded file: cached packets are read straight from
/// the cache; for each missing packet f the matching through (f,u) is
/// looked up and its payload XORed with the user's cached copies of the
/// other constituents' demanded packets. The induced property guarantees
/// those copies are cached; hitting an uncached one means the graph was
/// not induced and decoding fails loudly.
inline std::vector<std::uint8_t> decode(const RsGraph& g, const EdgeIndex& idx,
                                        UserId user, const CacheState& cache,
                                        const std::vector<Transmission>& txs,
                                        const DemandVector& d, const Library& lib) {
  if (d.size() != g.num_users) throw DimensionError("demand vector length != K");
  if (cache.cached.size() != g.num_packets) throw DimensionError("cache bitmap size != F");
  const std::uint32_t want = d[user];
  if (want == kDummyFile) {
    return std::vector<std::uint8_t>(g.num_packets * lib.packet_bytes, 0);
  }

  std::unordered_map<MatchingId, const Transmission*> tx_of;
  tx_of.reserve(txs.size() * 2);
  for (const auto& tx : txs) tx_of.emplace(tx.matching_index, &tx);

  const std::uint32_t B = lib.packet_bytes;
  std::vector<std::uint8_t> file(g.num_packets * B, 0);
  for (std::uint64_t f = 0; f < g.num_packets; ++f) {
    std::span<std::uint8_t> out{file.data() + f * B, B};
    if (cache.has(f)) {
      // cache holds packet f of every file, the demanded one included
      auto src = lib.packet(want, f);
      std::copy(src.begin(), src.end(), out.begin());
      continue;
    }
    const auto it = idx.matching_of_edge.find(g.edge_key(static_cast<PacketId>(f), user));
    if (it == idx.matching_of_edge.end()) {
      throw DecodeError("packet " + std::to_string(f) + " neither cached nor on an edge of user " +
                        std::to_string(user));
    }
    const auto tx_it = tx_of.find(it->second);
    if (tx_it == tx_of.end()) {
      throw DecodeError("missing transmission for matching " + std::to_string(it->second));
    }
    const Transmission& tx = *tx_it->second;
    if (tx.payload.size() != B) {
      throw DecodeError("transmission " + std::to_string(tx.matching_index) +
                        " carries " + std::to_string(tx.payload.size()) +
                        " bytes, expected " + std::to_string(B));
    }
    std::copy(tx.payload.begin(), tx.payload.end(), out.begin());
    for (const Edge& e : g.matchings[it->second]) {
      if (e.user == user) continue;
      if (d[e.user] == kDummyFile) continue;  // all-zero file, nothing to strip
      if (!cache.has(e.packet)) {
        throw DecodeError("matching " + std::to_string(it->second) +
                          " not induced: user " + std::to_string(user) +
                          " lacks packet " + std::to_string(e.packet));
      }
      xor_into(out, lib.packet(d[e.user], e.packet));
    }
  }
  return file;
}

struct UserMismatch {
  UserId user = 0;
  std::uint64_t bad_packets = 0;
  std::uint64_t first_bad_packet = 0;
  std::string error;  // set when decoding threw instead of mismatching
};

struct VerifyReport {
  bool ok = false;
  std::vector<UserMismatch> mismatches;
  std::uint64_t transmission_count = 0;
  Ratio normalized_rate;  // transmissions / F
};

/// Compare every user's reconstruction with the demanded file, given
/// transmissions already produced (lets tests corrupt payloads).
inline VerifyReport verify_transmissions(const RsGraph& g, const Library& lib,
                                         const DemandVector& d,
                                         const std::vector<Transmission>& txs) {
  VerifyReport rep;
  rep.transmission_count = txs.size();
  rep.normalized_rate = Ratio(txs.size(), g.num_packets);
  const auto caches = place(g, lib);
  const auto idx = EdgeIndex::build(g);
  const std::uint32_t B = lib.packet_bytes;
  for (std::uint64_t u = 0; u < g.num_users; ++u) {
    if (d[u] == kDummyFile) continue;
    UserMismatch mm;
    mm.user = static_cast<UserId>(u);
    try {
      const auto got = decode(g, idx, static_cast<UserId>(u), caches[u], txs, d, lib);
      const auto& expect = lib.content[d[u]];
      for (std::uint64_t f = 0; f < g.num_packets; ++f) {
        if (!std::equal(got.begin() + f * B, got.begin() + (f + 1) * B,
                        expect.begin() + f * B)) {
          if (mm.bad_packets == 0) mm.first_bad_packet = f;
          ++mm.bad_packets;
        }
      }
    } catch (const DecodeError& e) {
      mm.error = e.what();
      mm.bad_packets = g.num_packets;
    }
    if (mm.bad_packets > 0) rep.mismatches.push_back(std::move(mm));
  }
  rep.ok = rep.mismatches.empty();
  return rep;
}

/// End-to-end check of the successful-delivery condition: place, deliver,
/// decode for all users, compare byte-for-byte.
inline VerifyReport verify_delivery(const RsGraph& g, const Library& lib,
                                    const DemandVector& d) {
  check_demands(g, lib, d, false);
  return verify_transmissions(g, lib, d, deliver(g, lib, d));
}

}  // namespace rscache::codec

#endif  // RSCACHE_CODEC_HPP
