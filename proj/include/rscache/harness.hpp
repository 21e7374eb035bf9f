#ifndef RSCACHE_HARNESS_HPP
#define RSCACHE_HARNESS_HPP

#include <charconv>
#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rscache/ballsbins.hpp"
#include "rscache/codec.hpp"
#include "rscache/common.hpp"
#include "rscache/decentral.hpp"
#include "rscache/io.hpp"
#include "rscache/rng.hpp"
#include "rscache/rsgraph.hpp"

namespace rscache::harness {

using io::json;

inline std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Demand generators. The schemes' rate is demand-invariant; these cover the
// extremes of d in N^K.
// ---------------------------------------------------------------------------

enum class DemandKind { distinct, uniform, constant };

inline const char* demand_name(DemandKind k) {
  switch (k) {
    case DemandKind::distinct: return "distinct";
    case DemandKind::uniform: return "uniform";
    case DemandKind::constant: return "constant";
  }
  return "?";
}

inline std::optional<DemandKind> demand_from_name(const std::string& s) {
  if (s == "distinct") return DemandKind::distinct;
  if (s == "uniform") return DemandKind::uniform;
  if (s == "constant") return DemandKind::constant;
  return std::nullopt;
}

/// distinct: d_u = u mod N (warns when K > N forces repeats);
/// uniform: independent uniform file per user; constant: everyone asks for
/// file 0.
inline codec::DemandVector make_demands(DemandKind kind, std::uint64_t num_users,
                                        std::uint32_t num_files, Rng& rng,
                                        bool warn = true) {
  if (num_files < 1) throw ParameterError("need at least one file");
  codec::DemandVector d(num_users);
  switch (kind) {
    case DemandKind::distinct:
      if (warn && num_users > num_files) {
        std::cerr << "warning: distinct demands need K <= N; wrapping modulo N\n";
      }
      for (std::uint64_t u = 0; u < num_users; ++u) {
        d[u] = static_cast<std::uint32_t>(u % num_files);
      }
      break;
    case DemandKind::uniform:
      for (std::uint64_t u = 0; u < num_users; ++u) {
        d[u] = static_cast<std::uint32_t>(uniform_below(rng, num_files));
      }
      break;
    case DemandKind::constant:
      std::fill(d.begin(), d.end(), 0u);
      break;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Reports. One record per trial; wall time goes to stderr (never into the
// report), keeping identical config + master_seed byte-identical.
// ---------------------------------------------------------------------------

enum class DecodeStatus { ok, fail, skipped };

inline const char* decode_status_name(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::ok: return "ok";
    case DecodeStatus::fail: return "fail";
    case DecodeStatus::skipped: return "skipped";
  }
  return "?";
}

struct TrialRecord {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::uint32_t max_load = 0;
  std::uint64_t round_count = 0;
  std::uint64_t naive_count = 0;
  double naive_rate = 0;
  std::uint64_t pruned_count = 0;
  double pruned_rate = 0;
  DecodeStatus decode_ok = DecodeStatus::skipped;
  std::uint64_t bits_overhead = 0;
  std::optional<bool> within_bound;
  std::optional<bool> height_invariant_ok;  // churn runs only
};

struct ExperimentReport {
  std::string subcommand;
  json config;            // echo of the run parameters
  json realized;          // exact realized scheme parameters, when any
  std::vector<TrialRecord> trials;
  double mean_naive_rate = 0;
  double max_naive_rate = 0;
  double mean_max_load = 0;
  std::uint32_t max_max_load = 0;
  std::optional<double> bound;
  std::optional<double> fraction_within_bound;
  bool pass = true;

  void finish() {
    double sum_rate = 0, sum_load = 0;
    std::uint64_t in_bound = 0, with_bound = 0;
    for (const TrialRecord& t : trials) {
      sum_rate += t.naive_rate;
      max_naive_rate = std::max(max_naive_rate, t.naive_rate);
      sum_load += t.max_load;
      max_max_load = std::max(max_max_load, t.max_load);
      if (t.within_bound) {
        ++with_bound;
        if (*t.within_bound) ++in_bound;
      }
      if (t.decode_ok == DecodeStatus::fail) pass = false;
      if (t.height_invariant_ok && !*t.height_invariant_ok) pass = false;
    }
    if (!trials.empty()) {
      mean_naive_rate = sum_rate / static_cast<double>(trials.size());
      mean_max_load = sum_load / static_cast<double>(trials.size());
    }
    if (with_bound > 0) {
      fraction_within_bound = static_cast<double>(in_bound) / static_cast<double>(with_bound);
    }
  }
};

inline json report_to_json(const ExperimentReport& rep) {
  json j;
  j["schema"] = "rscache-report-v1";
  j["subcommand"] = rep.subcommand;
  j["config"] = rep.config;
  if (!rep.realized.is_null()) j["realized"] = rep.realized;
  json trials = json::array();
  for (const TrialRecord& t : rep.trials) {
    json r;
    r["trial"] = t.trial;
    r["seed"] = t.seed;
    r["max_load"] = t.max_load;
    r["round_count"] = t.round_count;
    r["naive_count"] = t.naive_count;
    r["naive_rate"] = t.naive_rate;
    r["pruned_count"] = t.pruned_count;
    r["pruned_rate"] = t.pruned_rate;
    r["decode_ok"] = decode_status_name(t.decode_ok);
    r["bits_overhead"] = t.bits_overhead;
    if (t.within_bound) r["within_bound"] = *t.within_bound;
    if (t.height_invariant_ok) r["height_invariant_ok"] = *t.height_invariant_ok;
    trials.push_back(std::move(r));
  }
  j["trials"] = std::move(trials);
  json agg;
  agg["mean_naive_rate"] = rep.mean_naive_rate;
  agg["max_naive_rate"] = rep.max_naive_rate;
  agg["mean_max_load"] = rep.mean_max_load;
  agg["max_max_load"] = rep.max_max_load;
  if (rep.bound) agg["bound"] = *rep.bound;
  if (rep.fraction_within_bound) agg["fraction_within_bound"] = *rep.fraction_within_bound;
  agg["status"] = rep.pass ? "pass" : "fail";
  j["aggregate"] = std::move(agg);
  return j;
}

inline std::string report_to_csv(const ExperimentReport& rep) {
  std::ostringstream out;
  out << "# rscache-report-v1 subcommand=" << rep.subcommand << '\n';
  out << "# config " << rep.config.dump() << '\n';
  if (!rep.realized.is_null()) out << "# realized " << rep.realized.dump() << '\n';
  out << "trial,seed,max_load,round_count,naive_count,naive_rate,pruned_count,"
         "pruned_rate,decode_ok,bits_overhead,within_bound,height_invariant_ok\n";
  for (const TrialRecord& t : rep.trials) {
    out << t.trial << ',' << t.seed << ',' << t.max_load << ',' << t.round_count << ','
        << t.naive_count << ',' << fmt_double(t.naive_rate) << ',' << t.pruned_count << ','
        << fmt_double(t.pruned_rate) << ',' << decode_status_name(t.decode_ok) << ','
        << t.bits_overhead << ','
        << (t.within_bound ? (*t.within_bound ? "1" : "0") : "") << ','
        << (t.height_invariant_ok ? (*t.height_invariant_ok ? "1" : "0") : "") << '\n';
  }
  json agg = report_to_json(rep)["aggregate"];
  out << "# aggregate " << agg.dump() << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// centralized-sim
// ---------------------------------------------------------------------------

struct CentralizedConfig {
  std::shared_ptr<const RsGraph> graph;
  std::uint32_t files = 8;         // N
  std::uint32_t packet_bytes = 64; // B
  DemandKind demands = DemandKind::distinct;
  std::uint64_t master_seed = 0;
};

struct CentralizedResult {
  Ratio rate;  // t/F
  std::uint64_t transmission_count = 0;
  bool decode_ok = false;
  codec::VerifyReport verify;
  SchemeParams params;
};

inline CentralizedResult run_centralized(const CentralizedConfig& cfg) {
  CentralizedResult res;
  res.params = scheme_params(*cfg.graph);  // throws InvalidGraphError: gate on validity
  const auto lib = codec::make_library(cfg.files, cfg.graph->num_packets, cfg.packet_bytes,
                                       mix_seed(cfg.master_seed,
                                                static_cast<std::uint64_t>(Stream::library)));
  Rng demand_rng = make_rng(cfg.master_seed, Stream::demands);
  const auto d = make_demands(cfg.demands, cfg.graph->num_users, cfg.files, demand_rng);
  res.verify = codec::verify_delivery(*cfg.graph, lib, d);
  res.rate = res.verify.normalized_rate;
  res.transmission_count = res.verify.transmission_count;
  res.decode_ok = res.verify.ok;
  return res;
}

// ---------------------------------------------------------------------------
// decentralized-sim
// ---------------------------------------------------------------------------

enum class VerifyMode { automatic, on, off };

struct DecentralizedConfig {
  std::uint64_t users = 100;  // K (also the population bound for overhead bits)
  double gain = 4;            // g
  double memory_ratio = 0.5;  // M/N budget
  double rate_prior = 1.0;    // R_c fed to the Theorem 3 formula
  double delta = 0.0;
  decentral::Family family = decentral::Family::binomial;
  std::uint32_t files = 8;
  std::uint32_t packet_bytes = 64;
  DemandKind demands = DemandKind::uniform;
  std::uint64_t trials = 1;
  std::uint64_t master_seed = 0;
  VerifyMode verify = VerifyMode::automatic;
  std::uint64_t materialize_cap = (1ULL << 26);
  // auto mode verifies payload delivery only below this many XORed bytes
  std::uint64_t verify_byte_budget = (1ULL << 28);
  // optional join/leave dynamics before delivery: T delete+insert steps
  std::uint64_t churn_steps = 0;
  bins::AdversaryKind churn_adversary = bins::AdversaryKind::fifo;
};

struct DecentralExtras {
  io::EventLog first_trial_log;  // populated when churn_steps > 0
};

/// Run a ballsbins script against a virtual pool, logging every join and
/// leave. Ball inserted at time t (1-based) is user id t-1.
struct PoolChurnResult {
  io::EventLog log;
  decentral::VirtualPool pool;
  std::uint32_t running_max_load = 0;
};

inline PoolChurnResult run_pool_churn(const decentral::VirtualPool& proto,
                                      const bins::ChurnScript& script, Rng& rng) {
  bins::validate_script(script);
  PoolChurnResult out;
  out.pool = proto.clone_empty();
  auto& pool = out.pool;
  out.log.k_prime = pool.num_slots();
  out.log.k_cap = pool.k_cap;
  if (pool.graph->labels) {
    out.log.family = pool.graph->labels->family;
    out.log.params = pool.graph->labels->params;
  }
  const auto log_join = [&] {
    const auto rec = decentral::sample_join(pool, rng);
    io::PoolEvent e;
    e.op = io::PoolEvent::Op::join;
    e.user = rec.user;
    e.first_choice = rec.first_choice;
    e.second_choice = rec.second_choice;
    e.chosen = rec.chosen;
    e.loads_digest = pool.loads_digest();
    out.log.events.push_back(e);
    out.running_max_load = std::max(out.running_max_load, pool.max_load());
  };
  for (std::uint64_t i = 0; i < script.population_cap; ++i) log_join();
  for (const std::uint64_t v : script.deletions) {
    decentral::leave(pool, v - 1);
    io::PoolEvent e;
    e.op = io::PoolEvent::Op::leave;
    e.user = v - 1;
    e.loads_digest = pool.loads_digest();
    out.log.events.push_back(e);
    log_join();
  }
  return out;
}

inline json realized_to_json(const decentral::KPrimeChoice& choice) {
  const auto& r = choice.realized;
  json j;
  j["k_prime_formula"] = choice.k_prime;
  j["family"] = r.family == decentral::Family::binomial ? "binomial" : "mn";
  j["params"] = {r.param1, r.param2};
  j["virtual_users"] = r.virtual_users;
  j["subpacketization"] = r.subpacketization;      // F_d
  j["num_matchings"] = r.num_matchings;            // t
  j["min_right_degree"] = r.min_right_degree;      // c
  j["rate"] = {{"num", r.rate.num}, {"den", r.rate.den}};  // exact R_c
  j["rate_value"] = r.rate.to_double();
  j["memory_ratio"] = {{"num", r.memory_ratio.num}, {"den", r.memory_ratio.den}};
  j["memory_ratio_value"] = r.memory_ratio.to_double();
  return j;
}

inline ExperimentReport run_decentralized(const DecentralizedConfig& cfg,
                                          DecentralExtras* extras = nullptr) {
  ExperimentReport rep;
  rep.subcommand = "decentralized-sim";
  rep.config = {{"users", cfg.users},
                {"gain", cfg.gain},
                {"memory_ratio", cfg.memory_ratio},
                {"rate_prior", cfg.rate_prior},
                {"delta", cfg.delta},
                {"family", cfg.family == decentral::Family::binomial ? "binomial" : "mn"},
                {"files", cfg.files},
                {"packet_bytes", cfg.packet_bytes},
                {"demands", demand_name(cfg.demands)},
                {"trials", cfg.trials},
                {"seed", cfg.master_seed},
                {"churn_steps", cfg.churn_steps}};
  if (cfg.trials < 1) throw ParameterError("trials must be >= 1");

  const auto choice = decentral::select_kprime(cfg.gain, cfg.memory_ratio, cfg.rate_prior,
                                               cfg.delta, cfg.family);
  rep.realized = realized_to_json(choice);
  const auto proto = decentral::make_pool(choice, cfg.users, cfg.materialize_cap);

  // decide payload verification once; the estimate scales with XOR volume
  const std::uint64_t est_rounds = cfg.users / std::max<std::uint64_t>(1, proto.num_slots()) + 4;
  const std::uint64_t est_bytes =
      proto.params.num_edges * static_cast<std::uint64_t>(cfg.packet_bytes) * est_rounds * 2;
  const bool verify_payload = cfg.verify == VerifyMode::on ||
                              (cfg.verify == VerifyMode::automatic &&
                               est_bytes <= cfg.verify_byte_budget);

  const std::uint64_t joins_per_trial = cfg.users + cfg.churn_steps;
  for (std::uint64_t trial = 0; trial < cfg.trials; ++trial) {
    const std::uint64_t seed = trial_seed(cfg.master_seed, trial);
    Rng place_rng = make_rng(seed, Stream::placement);
    decentral::VirtualPool pool;
    if (cfg.churn_steps > 0) {
      const auto script = bins::make_adversary(cfg.churn_adversary, cfg.users,
                                               cfg.churn_steps, seed);
      auto churn = run_pool_churn(proto, script, place_rng);
      pool = std::move(churn.pool);
      if (extras && trial == 0) extras->first_trial_log = std::move(churn.log);
    } else {
      pool = proto.clone_empty();
      decentral::place_all(pool, cfg.users, place_rng);
    }

    Rng demand_rng = make_rng(seed, Stream::demands);
    // demands indexed by user id; churn ids run up to K + T - 1
    const auto d = make_demands(cfg.demands, joins_per_trial, cfg.files, demand_rng,
                                trial == 0);
    auto plan = decentral::build_rounds(pool, d);

    TrialRecord rec;
    rec.trial = trial;
    rec.seed = seed;
    rec.round_count = plan.rounds.size();
    rec.bits_overhead =
        cfg.users >= 2 ? joins_per_trial * decentral::join_overhead_bits(cfg.users) : 0;

    decentral::DeliverOptions opts;
    opts.with_payload = verify_payload;
    opts.verify_decode = verify_payload;
    std::optional<codec::Library> lib;
    if (verify_payload) {
      lib = codec::make_library(cfg.files, pool.graph->num_packets, cfg.packet_bytes,
                                mix_seed(seed, static_cast<std::uint64_t>(Stream::library)));
    } else {
      // accounting-only delivery still enumerates matchings per round
      lib.emplace();
      lib->num_files = cfg.files;
      lib->num_packets = pool.graph->num_packets;
      lib->packet_bytes = cfg.packet_bytes;
    }
    const auto delivery = decentral::deliver_decentralized(pool, *lib, plan, opts);
    const auto rate = decentral::measure_rate(pool, plan);

    rec.max_load = rate.max_load;
    rec.naive_count = delivery.naive_count;
    rec.naive_rate = rate.naive_rate;
    rec.pruned_count = delivery.pruned_count;
    rec.pruned_rate = rate.pruned_rate;
    rec.decode_ok = verify_payload
                        ? (delivery.decode_ok ? DecodeStatus::ok : DecodeStatus::fail)
                        : DecodeStatus::skipped;
    if (rate.bound) {
      rep.bound = rate.bound;
      rec.within_bound = rate.naive_rate <= *rate.bound;
    }
    rep.trials.push_back(rec);
  }
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// ballsbins
// ---------------------------------------------------------------------------

struct BallsBinsConfig {
  bool churn = false;
  std::uint64_t balls = 1000;  // K
  std::uint64_t bins = 100;    // K'
  std::uint64_t churn_steps = 0;
  bins::AdversaryKind adversary = bins::AdversaryKind::fifo;
  std::optional<std::vector<std::uint64_t>> explicit_deletions;
  double churn_slack = 20;  // additive constant in the churn threshold
  std::uint64_t trials = 1;
  std::uint64_t master_seed = 0;
  bool record_series = false;
};

struct BallsBinsExtras {
  // per trial, only when record_series: (step, max_load, population)
  std::vector<std::vector<std::uint32_t>> max_load_series;
  std::vector<std::vector<std::uint64_t>> population_series;
  std::vector<bins::HeightHistogram> histograms;
};

inline const char* adversary_name(bins::AdversaryKind k) {
  switch (k) {
    case bins::AdversaryKind::fifo: return "fifo";
    case bins::AdversaryKind::lifo: return "lifo";
    case bins::AdversaryKind::random_fixed: return "random";
  }
  return "?";
}

inline ExperimentReport run_ballsbins(const BallsBinsConfig& cfg,
                                      BallsBinsExtras* extras = nullptr) {
  ExperimentReport rep;
  rep.subcommand = "ballsbins";
  rep.config = {{"mode", cfg.churn ? "churn" : "static"},
                {"balls", cfg.balls},
                {"bins", cfg.bins},
                {"churn_steps", cfg.churn ? cfg.churn_steps : 0},
                {"adversary", cfg.churn ? adversary_name(cfg.adversary) : ""},
                {"trials", cfg.trials},
                {"seed", cfg.master_seed}};
  if (cfg.trials < 1) throw ParameterError("trials must be >= 1");

  const std::optional<double> bound =
      cfg.bins >= 3 ? std::optional<double>(cfg.churn
                                                ? bins::bound_dynamic(cfg.balls, cfg.bins,
                                                                      cfg.churn_slack)
                                                : bins::bound_static(cfg.balls, cfg.bins))
                    : std::nullopt;
  rep.bound = bound;

  for (std::uint64_t trial = 0; trial < cfg.trials; ++trial) {
    const std::uint64_t seed = trial_seed(cfg.master_seed, trial);
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = seed;
    Rng rng = make_rng(seed, Stream::placement);
    if (!cfg.churn) {
      const auto state = bins::run_static(cfg.balls, cfg.bins, rng);
      rec.max_load = state.max_load_seen;
      if (extras) extras->histograms.push_back(bins::height_histogram(state));
    } else {
      const auto script =
          cfg.explicit_deletions
              ? bins::make_explicit_adversary(cfg.balls, *cfg.explicit_deletions)
              : bins::make_adversary(cfg.adversary, cfg.balls, cfg.churn_steps, seed);
      const auto result = bins::run_dynamic(script, cfg.bins, rng, /*instrument=*/true,
                                            cfg.record_series);
      rec.max_load = result.running_max_load;
      rec.height_invariant_ok = result.height_invariant_ok;
      if (extras) {
        extras->histograms.push_back(bins::height_histogram(result.state));
        if (cfg.record_series) {
          extras->max_load_series.push_back(result.max_load_series);
          extras->population_series.push_back(result.population_series);
        }
      }
    }
    if (bound) rec.within_bound = static_cast<double>(rec.max_load) <= *bound;
    rep.trials.push_back(rec);
  }
  rep.finish();
  return rep;
}

inline std::string series_to_csv(const BallsBinsExtras& extras) {
  std::ostringstream out;
  out << "# rscache-series-v1\n";
  out << "trial,step,max_load,population\n";
  for (std::size_t trial = 0; trial < extras.max_load_series.size(); ++trial) {
    const auto& ml = extras.max_load_series[trial];
    const auto& pop = extras.population_series[trial];
    for (std::size_t step = 0; step < ml.size(); ++step) {
      out << trial << ',' << step + 1 << ',' << ml[step] << ',' << pop[step] << '\n';
    }
  }
  return out.str();
}

inline json histogram_to_json(const bins::HeightHistogram& h) {
  json j;
  j["mu_ge"] = h.mu_ge;
  j["nu_ge"] = h.nu_ge;
  return j;
}

}  // namespace rscache::harness

#endif  // RSCACHE_HARNESS_HPP
