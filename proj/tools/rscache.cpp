// Command-line front end: construct/validate RS graphs, run centralized and
// decentralized delivery simulations, balls-and-bins experiments, and event
// log replay. Exit codes: 0 pass, 1 property failure, 2 usage/config error.

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rscache/harness.hpp"
#include "rscache/io.hpp"

using namespace rscache;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitUsage = 2;

std::string ratio_str(const Ratio& r) {
  if (r.den == 1) return std::to_string(r.num);
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

void print_params(const SchemeParams& p) {
  std::cout << "F=" << p.subpacketization << " K=" << p.num_users
            << " t=" << p.num_matchings << " r=" << ratio_str(p.avg_matching_size)
            << " c=" << p.min_right_degree << " rate=" << ratio_str(p.rate) << " ("
            << harness::fmt_double(p.rate.to_double()) << ")"
            << " memory_ratio=" << ratio_str(p.memory_ratio) << " ("
            << harness::fmt_double(p.memory_ratio.to_double()) << ")\n";
}

void write_or_print(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error("cannot open " + out_path + " for writing");
  out << text;
}

void emit_report(const harness::ExperimentReport& rep, const std::string& format,
                 const std::string& out_path) {
  if (format == "json") {
    write_or_print(harness::report_to_json(rep).dump(2) + "\n", out_path);
  } else {
    write_or_print(harness::report_to_csv(rep), out_path);
  }
}

struct FamilyArgs {
  std::string graph_file;
  std::string family;
  std::uint32_t n = 0, a = 0;  // binomial
  std::uint32_t k = 0, s = 0;  // mn
};

std::shared_ptr<const RsGraph> load_graph(const FamilyArgs& fa) {
  if (!fa.graph_file.empty()) {
    return std::make_shared<const RsGraph>(io::read_graph(fa.graph_file));
  }
  if (fa.family == "binomial") {
    return std::make_shared<const RsGraph>(construct_binomial(fa.n, fa.a));
  }
  if (fa.family == "mn") {
    return std::make_shared<const RsGraph>(construct_mn(fa.k, fa.s));
  }
  throw ParameterError("need --graph or --family binomial|mn with its parameters");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ruzsa-Szemeredi coded-caching laboratory"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::uint64_t trials = 1;
  std::string out_path;
  std::string format = "csv";
  app.add_option("--seed", seed, "master seed")->capture_default_str();
  app.add_option("--trials", trials, "number of trials")->capture_default_str();
  app.add_option("--out", out_path, "report output path (stdout when empty)");
  app.add_option("--format", format, "report format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  // construct ---------------------------------------------------------------
  auto* construct = app.add_subcommand("construct", "build a graph family instance");
  construct->require_subcommand(1);
  std::uint32_t cb_n = 0, cb_a = 0;
  std::string construct_out;
  auto* cb = construct->add_subcommand("binomial", "packets = a-subsets of [n]");
  cb->add_option("--n", cb_n, "ground set size")->required();
  cb->add_option("--a", cb_a, "packet subset size")->required();
  cb->add_option("--out", construct_out, "write graph JSON here");
  std::uint32_t cm_k = 0, cm_s = 0;
  auto* cm = construct->add_subcommand("mn", "packets = s-subsets of [K]");
  cm->add_option("--k", cm_k, "number of users")->required();
  cm->add_option("--s", cm_s, "cached subset size")->required();
  cm->add_option("--out", construct_out, "write graph JSON here");

  // validate ----------------------------------------------------------------
  auto* validate = app.add_subcommand("validate", "check the RS properties of a graph file");
  std::string validate_in;
  validate->add_option("--in", validate_in, "graph JSON path")->required();

  // centralized-sim -----------------------------------------------------------
  auto* central = app.add_subcommand("centralized-sim",
                                     "placement + XOR delivery + per-user decoding");
  FamilyArgs central_fa;
  std::uint32_t central_files = 8, central_bytes = 64;
  std::string central_demands = "distinct";
  central->add_option("--graph", central_fa.graph_file, "graph JSON path");
  central->add_option("--family", central_fa.family, "binomial|mn");
  central->add_option("--n", central_fa.n, "binomial n");
  central->add_option("--a", central_fa.a, "binomial a");
  central->add_option("--k", central_fa.k, "mn K");
  central->add_option("--s", central_fa.s, "mn s");
  central->add_option("--files", central_files, "library size N")->capture_default_str();
  central->add_option("--packet-bytes", central_bytes, "packet size B")
      ->capture_default_str();
  central->add_option("--demands", central_demands, "demand generator")
      ->check(CLI::IsMember({"distinct", "uniform", "constant"}))
      ->capture_default_str();
  std::string central_dump;
  central->add_option("--dump-transmissions", central_dump,
                      "write the broadcast as JSON lines (matching index, hex payload)");

  // decentralized-sim ---------------------------------------------------------
  auto* decentral_cmd = app.add_subcommand(
      "decentralized-sim", "virtual pool, two-choice placement, round-based delivery");
  harness::DecentralizedConfig dcfg;
  std::string d_family = "binomial";
  std::string d_demands = "uniform";
  std::string d_verify = "auto";
  decentral_cmd->add_option("--users", dcfg.users, "real users K")->capture_default_str();
  decentral_cmd->add_option("--gain", dcfg.gain, "target coding gain g")
      ->capture_default_str();
  decentral_cmd->add_option("--memory-ratio", dcfg.memory_ratio, "M/N budget")
      ->capture_default_str();
  decentral_cmd->add_option("--rate-prior", dcfg.rate_prior, "R_c prior for K' formula")
      ->capture_default_str();
  decentral_cmd->add_option("--delta", dcfg.delta, "rate exponent delta")
      ->capture_default_str();
  decentral_cmd->add_option("--family", d_family, "virtual scheme family")
      ->check(CLI::IsMember({"binomial", "mn"}))
      ->capture_default_str();
  decentral_cmd->add_option("--files", dcfg.files, "library size N")->capture_default_str();
  decentral_cmd->add_option("--packet-bytes", dcfg.packet_bytes, "packet size B")
      ->capture_default_str();
  decentral_cmd->add_option("--demands", d_demands, "demand generator")
      ->check(CLI::IsMember({"distinct", "uniform", "constant"}))
      ->capture_default_str();
  decentral_cmd->add_option("--verify-delivery", d_verify, "XOR + decode every trial")
      ->check(CLI::IsMember({"auto", "on", "off"}))
      ->capture_default_str();
  decentral_cmd->add_option("--materialize-cap", dcfg.materialize_cap,
                            "edge budget for graph materialization")
      ->capture_default_str();
  std::string d_churn_adversary = "fifo";
  std::string d_event_log;
  decentral_cmd->add_option("--churn-steps", dcfg.churn_steps,
                            "leave+join steps before delivery")
      ->capture_default_str();
  decentral_cmd->add_option("--churn-adversary", d_churn_adversary, "who leaves")
      ->check(CLI::IsMember({"fifo", "lifo", "random"}))
      ->capture_default_str();
  decentral_cmd->add_option("--event-log", d_event_log,
                            "write the first trial's join/leave log here (JSON lines)");

  // ballsbins -----------------------------------------------------------------
  auto* bb = app.add_subcommand("ballsbins", "two-choice load experiments");
  harness::BallsBinsConfig bcfg;
  std::string bb_mode = "static";
  std::string bb_adversary = "fifo";
  std::string bb_deletions_file;
  std::string bb_series_out;
  std::string bb_hist_out;
  bb->add_option("--mode", bb_mode, "static|churn")
      ->check(CLI::IsMember({"static", "churn"}))
      ->capture_default_str();
  bb->add_option("--balls", bcfg.balls, "balls K")->capture_default_str();
  bb->add_option("--bins", bcfg.bins, "bins K'")->capture_default_str();
  bb->add_option("--churn-steps", bcfg.churn_steps, "delete+insert steps T")
      ->capture_default_str();
  bb->add_option("--adversary", bb_adversary, "deletion order")
      ->check(CLI::IsMember({"fifo", "lifo", "random", "explicit"}))
      ->capture_default_str();
  bb->add_option("--deletions", bb_deletions_file,
                 "explicit adversary vector, one ball time per line");
  bb->add_option("--churn-slack", bcfg.churn_slack,
                 "additive constant in the churn threshold")
      ->capture_default_str();
  bb->add_option("--series-out", bb_series_out, "per-step (step,max_load,population) CSV");
  bb->add_option("--hist-out", bb_hist_out, "mu/nu tail histogram JSON");

  // churn-replay ----------------------------------------------------------------
  auto* replay_cmd = app.add_subcommand("churn-replay", "replay and audit an event log");
  std::string replay_log;
  replay_cmd->add_option("--log", replay_log, "event log path (JSON lines)")->required();

  // global flags (--seed/--trials/--out/--format) may follow the subcommand
  for (auto* sub : {construct, validate, central, decentral_cmd, bb, replay_cmd, cb, cm}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  const auto started = std::chrono::steady_clock::now();
  const auto wall_ms = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - started)
        .count();
  };

  try {
    if (construct->parsed()) {
      const auto g = cb->parsed()
                         ? construct_binomial(cb_n, cb_a)
                         : construct_mn(cm_k, cm_s);
      print_params(scheme_params(g));
      if (!construct_out.empty()) io::write_graph(g, construct_out);
      return kExitPass;
    }

    if (validate->parsed()) {
      const auto g = io::read_graph(validate_in);
      const auto rep = validate_rs(g);
      if (rep.valid) {
        std::cout << "valid: ";
        print_params(scheme_params_from_report(rep));
        return kExitPass;
      }
      std::cout << "invalid: " << rep.violations.size() << " violation(s)\n";
      for (const auto& v : rep.violations) {
        std::cout << "  matching " << v.matching_index << ": " << v.detail << "\n";
      }
      return kExitPropertyFailure;
    }

    if (central->parsed()) {
      harness::CentralizedConfig cfg;
      try {
        cfg.graph = load_graph(central_fa);
        cfg.files = central_files;
        cfg.packet_bytes = central_bytes;
        cfg.demands = *harness::demand_from_name(central_demands);
        cfg.master_seed = seed;
        const auto res = harness::run_centralized(cfg);
        std::cout << "decode=" << (res.decode_ok ? "pass" : "fail")
                  << " rate=" << ratio_str(res.rate) << " ("
                  << harness::fmt_double(res.rate.to_double()) << ")"
                  << " transmissions=" << res.transmission_count << "\n";
        if (!central_dump.empty()) {
          const auto lib = codec::make_library(
              cfg.files, cfg.graph->num_packets, cfg.packet_bytes,
              mix_seed(cfg.master_seed, static_cast<std::uint64_t>(Stream::library)));
          Rng demand_rng = make_rng(cfg.master_seed, Stream::demands);
          const auto d = harness::make_demands(cfg.demands, cfg.graph->num_users,
                                               cfg.files, demand_rng, false);
          write_or_print(io::transmissions_to_lines(codec::deliver(*cfg.graph, lib, d)),
                         central_dump);
        }
        for (const auto& mm : res.verify.mismatches) {
          std::cout << "  user " << mm.user << ": " << mm.bad_packets
                    << " bad packet(s), first at " << mm.first_bad_packet
                    << (mm.error.empty() ? "" : " (" + mm.error + ")") << "\n";
        }
        std::cerr << "wall_time_ms=" << wall_ms() << "\n";
        return res.decode_ok ? kExitPass : kExitPropertyFailure;
      } catch (const InvalidGraphError& e) {
        std::cerr << "refusing delivery on invalid graph: " << e.what() << "\n";
        return kExitUsage;
      }
    }

    if (decentral_cmd->parsed()) {
      dcfg.family = d_family == "mn" ? decentral::Family::mn : decentral::Family::binomial;
      dcfg.demands = *harness::demand_from_name(d_demands);
      dcfg.verify = d_verify == "on"    ? harness::VerifyMode::on
                    : d_verify == "off" ? harness::VerifyMode::off
                                        : harness::VerifyMode::automatic;
      dcfg.churn_adversary = d_churn_adversary == "lifo" ? bins::AdversaryKind::lifo
                             : d_churn_adversary == "random"
                                 ? bins::AdversaryKind::random_fixed
                                 : bins::AdversaryKind::fifo;
      dcfg.trials = trials;
      dcfg.master_seed = seed;
      harness::DecentralExtras extras;
      const auto rep = harness::run_decentralized(dcfg, &extras);
      emit_report(rep, format, out_path);
      if (!d_event_log.empty()) {
        if (dcfg.churn_steps == 0) throw ParameterError("--event-log needs --churn-steps");
        write_or_print(io::event_log_to_lines(extras.first_trial_log), d_event_log);
      }
      std::cerr << "status=" << (rep.pass ? "pass" : "fail")
                << " mean_naive_rate=" << harness::fmt_double(rep.mean_naive_rate)
                << (rep.bound ? " bound=" + harness::fmt_double(*rep.bound) : "")
                << " wall_time_ms=" << wall_ms() << "\n";
      return rep.pass ? kExitPass : kExitPropertyFailure;
    }

    if (bb->parsed()) {
      bcfg.churn = bb_mode == "churn";
      if (bb_adversary == "explicit") {
        if (bb_deletions_file.empty()) {
          throw ParameterError("explicit adversary needs --deletions");
        }
        std::ifstream in(bb_deletions_file);
        if (!in) throw Error("cannot open " + bb_deletions_file);
        std::vector<std::uint64_t> v;
        std::uint64_t x = 0;
        while (in >> x) v.push_back(x);
        bins::validate_script({bcfg.balls, v});  // surfaces bad vectors as exit 2
        bcfg.explicit_deletions = std::move(v);
      } else if (bb_adversary == "lifo") {
        bcfg.adversary = bins::AdversaryKind::lifo;
      } else if (bb_adversary == "random") {
        bcfg.adversary = bins::AdversaryKind::random_fixed;
      } else {
        bcfg.adversary = bins::AdversaryKind::fifo;
      }
      bcfg.trials = trials;
      bcfg.master_seed = seed;
      bcfg.record_series = !bb_series_out.empty();
      harness::BallsBinsExtras extras;
      const auto rep = harness::run_ballsbins(bcfg, &extras);
      emit_report(rep, format, out_path);
      if (!bb_series_out.empty()) {
        write_or_print(harness::series_to_csv(extras), bb_series_out);
      }
      if (!bb_hist_out.empty()) {
        io::json hists = io::json::array();
        for (const auto& h : extras.histograms) {
          hists.push_back(harness::histogram_to_json(h));
        }
        write_or_print(hists.dump(2) + "\n", bb_hist_out);
      }
      std::cerr << "status=" << (rep.pass ? "pass" : "fail")
                << " max_max_load=" << rep.max_max_load
                << (rep.bound ? " bound=" + harness::fmt_double(*rep.bound) : "")
                << (rep.fraction_within_bound
                        ? " fraction_within_bound=" +
                              harness::fmt_double(*rep.fraction_within_bound)
                        : "")
                << " wall_time_ms=" << wall_ms() << "\n";
      return rep.pass ? kExitPass : kExitPropertyFailure;
    }

    if (replay_cmd->parsed()) {
      const auto log = io::read_event_log(replay_log);
      const auto res = io::replay_event_log(log);
      if (!res.ok) {
        std::cout << "replay=fail line=" << res.failure_line << " " << res.failure << "\n";
        return kExitPropertyFailure;
      }
      std::cout << "replay=ok joins=" << res.joins << " leaves=" << res.leaves
                << " population=" << res.final_population
                << " bits_overhead=" << res.total_overhead_bits << "\n";
      return kExitPass;
    }
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConstructionError& e) {
    std::cerr << "construction error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ScriptError& e) {
    std::cerr << "script error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::overflow_error& e) {
    std::cerr << "overflow: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    // malformed input files land here (JSON parse errors and friends)
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
