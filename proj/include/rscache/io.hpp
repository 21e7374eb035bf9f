#ifndef RSCACHE_IO_HPP
#define RSCACHE_IO_HPP

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>  // vendored single-header copy
#endif

#include "rscache/ballsbins.hpp"
#include "rscache/common.hpp"
#include "rscache/decentral.hpp"
#include "rscache/rsgraph.hpp"

namespace rscache::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Graph file format: {"F": int, "K": int, "matchings": [[[f,k],...],...],
// "labels": {...}} with 0-based indices.
// ---------------------------------------------------------------------------

inline json graph_to_json(const RsGraph& g) {
  json j;
  j["F"] = g.num_packets;
  j["K"] = g.num_users;
  json ms = json::array();
  for (const auto& matching : g.matchings) {
    json m = json::array();
    for (const Edge& e : matching) m.push_back({e.packet, e.user});
    ms.push_back(std::move(m));
  }
  j["matchings"] = std::move(ms);
  if (g.labels) {
    json l;
    l["family"] = g.labels->family;
    l["params"] = g.labels->params;
    l["packet_subsets"] = g.labels->packet_subsets;
    l["user_subsets"] = g.labels->user_subsets;
    l["matching_subsets"] = g.labels->matching_subsets;
    j["labels"] = std::move(l);
  }
  return j;
}

inline RsGraph graph_from_json(const json& j) {
  RsGraph g;
  g.num_packets = j.at("F").get<std::uint64_t>();
  g.num_users = j.at("K").get<std::uint64_t>();
  for (const auto& m : j.at("matchings")) {
    std::vector<Edge> matching;
    matching.reserve(m.size());
    for (const auto& e : m) {
      if (!e.is_array() || e.size() != 2) throw Error("edge must be a [packet,user] pair");
      matching.push_back(Edge{e[0].get<PacketId>(), e[1].get<UserId>()});
    }
    g.matchings.push_back(std::move(matching));
  }
  if (j.contains("labels")) {
    GraphLabels labels;
    const auto& l = j.at("labels");
    labels.family = l.value("family", "");
    if (l.contains("params")) labels.params = l.at("params").get<std::vector<std::uint32_t>>();
    if (l.contains("packet_subsets")) {
      labels.packet_subsets = l.at("packet_subsets").get<std::vector<std::vector<std::uint32_t>>>();
    }
    if (l.contains("user_subsets")) {
      labels.user_subsets = l.at("user_subsets").get<std::vector<std::vector<std::uint32_t>>>();
    }
    if (l.contains("matching_subsets")) {
      labels.matching_subsets =
          l.at("matching_subsets").get<std::vector<std::vector<std::uint32_t>>>();
    }
    g.labels = std::move(labels);
  }
  return g;
}

inline void write_graph(const RsGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << graph_to_json(g).dump() << '\n';
}

inline RsGraph read_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json j;
  in >> j;
  return graph_from_json(j);
}

// ---------------------------------------------------------------------------
// Pool event log (JSON lines): one init record, then one record per join
// or leave carrying an FNV-1a digest of the load vector after the event.
// The digest chain is what the replay audit checks: a recorded trajectory
// matches a shadow replay that applies ONLY the declared single-user delta,
// so any hidden interference with other users would break the chain.
// ---------------------------------------------------------------------------

struct PoolEvent {
  enum class Op { join, leave };
  Op op = Op::join;
  std::uint64_t user = 0;
  std::uint64_t first_choice = 0;   // joins only
  std::uint64_t second_choice = 0;  // joins only
  std::uint64_t chosen = 0;         // joins only
  std::uint64_t loads_digest = 0;
};

struct EventLog {
  std::uint64_t k_prime = 0;
  std::uint64_t k_cap = 0;
  std::string family;                  // optional provenance
  std::vector<std::uint32_t> params;   // optional provenance
  std::vector<PoolEvent> events;
};

inline std::string digest_hex(std::uint64_t d) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << d;
  return os.str();
}

inline std::uint64_t digest_from_hex(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

inline std::string event_log_to_lines(const EventLog& log) {
  std::ostringstream out;
  json init;
  init["op"] = "init";
  init["k_prime"] = log.k_prime;
  init["k_cap"] = log.k_cap;
  if (!log.family.empty()) {
    init["family"] = log.family;
    init["params"] = log.params;
  }
  out << init.dump() << '\n';
  for (const PoolEvent& e : log.events) {
    json j;
    if (e.op == PoolEvent::Op::join) {
      j["op"] = "join";
      j["user"] = e.user;
      j["choices"] = {e.first_choice, e.second_choice};
      j["chosen"] = e.chosen;
    } else {
      j["op"] = "leave";
      j["user"] = e.user;
    }
    j["loads_digest"] = digest_hex(e.loads_digest);
    out << j.dump() << '\n';
  }
  return out.str();
}

inline EventLog event_log_from_lines(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t line_no = 0;
  bool saw_init = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("event log line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string op = j.at("op").get<std::string>();
    if (op == "init") {
      log.k_prime = j.at("k_prime").get<std::uint64_t>();
      log.k_cap = j.at("k_cap").get<std::uint64_t>();
      log.family = j.value("family", "");
      if (j.contains("params")) log.params = j.at("params").get<std::vector<std::uint32_t>>();
      saw_init = true;
      continue;
    }
    if (!saw_init) throw Error("event log must start with an init record");
    PoolEvent e;
    e.user = j.at("user").get<std::uint64_t>();
    if (op == "join") {
      e.op = PoolEvent::Op::join;
      const auto& c = j.at("choices");
      e.first_choice = c.at(0).get<std::uint64_t>();
      e.second_choice = c.at(1).get<std::uint64_t>();
      e.chosen = j.at("chosen").get<std::uint64_t>();
    } else if (op == "leave") {
      e.op = PoolEvent::Op::leave;
    } else {
      throw Error("event log line " + std::to_string(line_no) + ": unknown op " + op);
    }
    e.loads_digest = digest_from_hex(j.at("loads_digest").get<std::string>());
    log.events.push_back(e);
  }
  if (!saw_init) throw Error("event log has no init record");
  return log;
}

inline EventLog read_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return event_log_from_lines(in);
}

struct ReplayResult {
  bool ok = false;
  std::string failure;        // human-readable; empty when ok
  std::uint64_t failure_line = 0;  // 1-based log line (init is line 1)
  std::uint64_t joins = 0;
  std::uint64_t leaves = 0;
  std::uint64_t total_overhead_bits = 0;
  std::uint64_t final_population = 0;
  std::vector<std::uint32_t> final_loads;
};

/// Replay a log against a shadow pool and audit it: every join must follow
/// the two-choice rule on the shadow loads, every digest must match the
/// shadow's after applying only the declared user's delta, loads must stay
/// conserved. Overhead bits: 3*ceil(log2 k_cap) per join.
inline ReplayResult replay_event_log(const EventLog& log) {
  ReplayResult r;
  std::vector<std::uint32_t> loads(log.k_prime, 0);
  std::unordered_map<std::uint64_t, std::uint32_t> slot_of;
  const std::uint64_t bits_per_join =
      log.k_cap >= 2 ? decentral::join_overhead_bits(log.k_cap) : 0;

  const auto fail = [&](std::size_t idx, const std::string& why) {
    r.ok = false;
    r.failure = why;
    r.failure_line = idx + 2;  // +1 for init line, +1 for 1-basing
    return r;
  };

  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const PoolEvent& e = log.events[i];
    if (e.op == PoolEvent::Op::join) {
      if (e.first_choice >= log.k_prime || e.second_choice >= log.k_prime) {
        return fail(i, "choice out of range");
      }
      const std::uint64_t expect = loads[e.first_choice] <= loads[e.second_choice]
                                       ? e.first_choice
                                       : e.second_choice;
      if (e.chosen != expect) return fail(i, "chosen slot violates the two-choice rule");
      if (slot_of.count(e.user)) return fail(i, "join of user already present");
      ++loads[e.chosen];
      slot_of.emplace(e.user, static_cast<std::uint32_t>(e.chosen));
      ++r.joins;
      r.total_overhead_bits += bits_per_join;
    } else {
      const auto it = slot_of.find(e.user);
      if (it == slot_of.end()) return fail(i, "leave of unknown user");
      --loads[it->second];
      slot_of.erase(it);
      ++r.leaves;
    }
    const std::uint64_t digest = fnv1a64_u32le(loads);
    if (digest != e.loads_digest) {
      return fail(i, "loads digest mismatch: recorded state is not explained by this "
                     "event alone");
    }
    std::uint64_t total = 0;
    for (const auto l : loads) total += l;
    if (total != slot_of.size()) return fail(i, "load conservation broken");
  }
  r.ok = true;
  r.final_population = slot_of.size();
  r.final_loads = std::move(loads);
  return r;
}

// ---------------------------------------------------------------------------
// Transmission dump (JSON lines: matching index + hex payload), debugging
// aid only.
// ---------------------------------------------------------------------------

inline std::string transmissions_to_lines(const std::vector<codec::Transmission>& txs) {
  std::ostringstream out;
  for (const auto& tx : txs) {
    std::ostringstream hex;
    hex << std::hex << std::setfill('0');
    for (const std::uint8_t b : tx.payload) hex << std::setw(2) << static_cast<unsigned>(b);
    json j;
    j["matching_index"] = tx.matching_index;
    j["payload"] = hex.str();
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace rscache::io

#endif  // RSCACHE_IO_HPP
