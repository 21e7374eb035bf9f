#ifndef RSCACHE_BALLSBINS_HPP
#define RSCACHE_BALLSBINS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "rscache/common.hpp"
#include "rscache/rng.hpp"

namespace rscache::bins {

struct TwoChoice {
  std::uint64_t first = 0;
  std::uint64_t second = 0;
  std::uint64_t chosen = 0;
};

/// The tie rule, alone: the earlier draw wins ties ("<=").
inline std::uint64_t pick_less_loaded(std::span<const std::uint32_t> loads,
                                      std::uint64_t first, std::uint64_t second) {
  return loads[first] <= loads[second] ? first : second;
}

/// The committed draw protocol shared with the decentral placement: draw
/// bin1 then bin2 with replacement from one stream, put the ball in the
/// less loaded bin, first draw winning ties (Algorithm 2's "<=").
inline TwoChoice two_choice_pick(Rng& rng, std::span<const std::uint32_t> loads,
                                 std::uint32_t choices = 2) {
  if (loads.empty()) throw ParameterError("two-choice draw over zero bins");
  TwoChoice c;
  c.first = uniform_below(rng, loads.size());
  c.second = c.first;
  c.chosen = c.first;
  for (std::uint32_t i = 1; i < choices; ++i) {
    const std::uint64_t next = uniform_below(rng, loads.size());
    if (i == 1) c.second = next;
    c.chosen = pick_less_loaded(loads, c.chosen, next);
  }
  return c;
}

/// Balls-and-bins state. Balls are named by insertion time (1-based, as in
/// the deletion vector v); each ball's height is fixed at insertion as the
/// bin load including itself and never recomputed.
struct BinsState {
  std::uint64_t num_bins = 0;
  std::vector<std::uint32_t> loads;
  std::vector<std::uint32_t> heights;   // per ball time-1; 0 after deletion
  std::vector<std::uint32_t> bin_of;    // per ball time-1
  std::vector<bool> alive;              // per ball time-1
  std::uint64_t time = 0;               // balls inserted so far
  std::uint64_t population = 0;
  std::uint32_t max_load_seen = 0;

  // load/height occupancy counts for O(max_load) invariant checks
  std::vector<std::uint64_t> bins_with_load;    // index: load
  std::vector<std::uint64_t> balls_with_height; // index: height

  explicit BinsState(std::uint64_t bins = 0) { reset(bins); }

  void reset(std::uint64_t bins) {
    num_bins = bins;
    loads.assign(bins, 0);
    heights.clear();
    bin_of.clear();
    alive.clear();
    time = 0;
    population = 0;
    max_load_seen = 0;
    bins_with_load.assign(1, bins);
    balls_with_height.assign(1, 0);
  }

  std::uint32_t max_load() const {
    for (std::size_t l = bins_with_load.size(); l-- > 1;) {
      if (bins_with_load[l] > 0) return static_cast<std::uint32_t>(l);
    }
    return 0;
  }

  /// Insert one ball by the two-choice rule; returns its time.
  std::uint64_t insert(Rng& rng, std::uint32_t choices = 2) {
    const TwoChoice c = two_choice_pick(rng, loads, choices);
    const auto bin = c.chosen;
    --bins_with_load[loads[bin]];
    ++loads[bin];
    if (loads[bin] >= bins_with_load.size()) bins_with_load.resize(loads[bin] + 1, 0);
    ++bins_with_load[loads[bin]];
    const std::uint32_t h = loads[bin];
    if (h >= balls_with_height.size()) balls_with_height.resize(h + 1, 0);
    ++balls_with_height[h];
    heights.push_back(h);
    bin_of.push_back(static_cast<std::uint32_t>(bin));
    alive.push_back(true);
    ++time;
    ++population;
    max_load_seen = std::max(max_load_seen, h);
    return time;
  }

  /// Delete the ball inserted at `ball_time`; its bin loses one load but
  /// the surviving balls keep their insertion heights.
  void remove(std::uint64_t ball_time) {
    if (ball_time < 1 || ball_time > time || !alive[ball_time - 1]) {
      throw ScriptError("deletion of absent ball " + std::to_string(ball_time));
    }
    alive[ball_time - 1] = false;
    const auto bin = bin_of[ball_time - 1];
    --bins_with_load[loads[bin]];
    --loads[bin];
    ++bins_with_load[loads[bin]];
    --balls_with_height[heights[ball_time - 1]];
    heights[ball_time - 1] = 0;
    --population;
  }

  /// mu_{>=k} >= nu_{>=k} for every k; the paper asserts this at
  /// post-insertion instants.
  bool height_dominates_load() const {
    const std::size_t top = std::max(bins_with_load.size(), balls_with_height.size());
    std::uint64_t mu = 0, nu = 0;
    for (std::size_t k = top; k-- > 1;) {
      if (k < balls_with_height.size()) mu += balls_with_height[k];
      if (k < bins_with_load.size()) nu += bins_with_load[k];
      if (mu < nu) return false;
    }
    return true;
  }
};

/// Tail counts mu_{>=k} (balls by height) and nu_{>=k} (bins by load),
/// k = 1..max; computed over surviving balls.
struct HeightHistogram {
  std::vector<std::uint64_t> mu_ge;  // index k-1
  std::vector<std::uint64_t> nu_ge;
};

inline HeightHistogram height_histogram(const BinsState& s) {
  HeightHistogram h;
  const std::size_t top = std::max(s.bins_with_load.size(), s.balls_with_height.size());
  if (top <= 1) return h;
  h.mu_ge.assign(top - 1, 0);
  h.nu_ge.assign(top - 1, 0);
  std::uint64_t mu = 0, nu = 0;
  for (std::size_t k = top - 1; k >= 1; --k) {
    if (k < s.balls_with_height.size()) mu += s.balls_with_height[k];
    if (k < s.bins_with_load.size()) nu += s.bins_with_load[k];
    h.mu_ge[k - 1] = mu;
    h.nu_ge[k - 1] = nu;
  }
  return h;
}

/// Static two-choice process: K balls into K' bins.
inline BinsState run_static(std::uint64_t num_balls, std::uint64_t num_bins, Rng& rng,
                            std::uint32_t choices = 2) {
  if (num_bins < 1) throw ParameterError("need at least one bin");
  BinsState s(num_bins);
  for (std::uint64_t i = 0; i < num_balls; ++i) s.insert(rng, choices);
  return s;
}

/// Oblivious adversary script for the insert/delete process P2(v):
/// K insertions, then per churn step a deletion of the ball inserted at
/// time v_j followed by an insertion. Fixed before the process runs.
struct ChurnScript {
  std::uint64_t population_cap = 0;      // K
  std::vector<std::uint64_t> deletions;  // v, 1-based ball times
};

inline void validate_script(const ChurnScript& script) {
  if (script.population_cap < 1 && !script.deletions.empty()) {
    throw ScriptError("churn steps with zero population");
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(script.deletions.size() * 2);
  for (std::size_t j = 0; j < script.deletions.size(); ++j) {
    const std::uint64_t v = script.deletions[j];
    if (v < 1 || v > script.population_cap + j) {
      throw ScriptError("v_" + std::to_string(j + 1) + " = " + std::to_string(v) +
                        " outside [1, K+j-1]");
    }
    if (!seen.insert(v).second) {
      throw ScriptError("v_" + std::to_string(j + 1) + " repeats ball " + std::to_string(v));
    }
  }
}

enum class AdversaryKind { fifo, lifo, random_fixed };

/// Build a valid deletion vector ahead of the process. fifo deletes the
/// oldest surviving ball, lifo the newest; random_fixed commits an
/// independent stream up front.
inline ChurnScript make_adversary(AdversaryKind kind, std::uint64_t population_cap,
                                  std::uint64_t churn_steps, std::uint64_t seed = 0) {
  ChurnScript script;
  script.population_cap = population_cap;
  if (churn_steps == 0) return script;
  if (population_cap < 1) throw ScriptError("churn steps with zero population");
  script.deletions.reserve(churn_steps);
  if (kind == AdversaryKind::fifo) {
    // oldest surviving is 1,2,3,...: each step deletes it, insertion K+j survives later
    for (std::uint64_t j = 1; j <= churn_steps; ++j) script.deletions.push_back(j);
  } else if (kind == AdversaryKind::lifo) {
    // newest surviving: first the ball K, afterwards always the one just inserted
    script.deletions.push_back(population_cap);
    for (std::uint64_t j = 2; j <= churn_steps; ++j) {
      script.deletions.push_back(population_cap + j - 1);
    }
  } else {
    Rng rng = make_rng(seed, Stream::adversary);
    std::vector<std::uint64_t> aliveList(population_cap);
    for (std::uint64_t i = 0; i < population_cap; ++i) aliveList[i] = i + 1;
    for (std::uint64_t j = 1; j <= churn_steps; ++j) {
      const std::uint64_t pick = uniform_below(rng, aliveList.size());
      script.deletions.push_back(aliveList[pick]);
      aliveList[pick] = aliveList.back();
      aliveList.back() = population_cap + j;  // the ball this step inserts
    }
  }
  validate_script(script);
  return script;
}

inline ChurnScript make_explicit_adversary(std::uint64_t population_cap,
                                           std::vector<std::uint64_t> v) {
  ChurnScript script;
  script.population_cap = population_cap;
  script.deletions = std::move(v);
  validate_script(script);
  return script;
}

struct DynamicResult {
  BinsState state{0};
  std::vector<std::uint32_t> max_load_series;  // after every step
  std::vector<std::uint64_t> population_series;
  std::uint32_t running_max_load = 0;
  bool height_invariant_ok = true;  // checked at post-insertion instants
};

/// Execute P2(v): K insertions, then alternating delete/insert steps.
/// `instrument` asserts the mu/nu domination after every insertion and is
/// cheap enough to leave on.
inline DynamicResult run_dynamic(const ChurnScript& script, std::uint64_t num_bins,
                                 Rng& rng, bool instrument = true,
                                 bool record_series = true, std::uint32_t choices = 2) {
  validate_script(script);
  if (num_bins < 1) throw ParameterError("need at least one bin");
  DynamicResult result;
  result.state.reset(num_bins);
  auto& s = result.state;
  const auto step_done = [&] {
    result.running_max_load = std::max(result.running_max_load, s.max_load_seen);
    if (record_series) {
      result.max_load_series.push_back(s.max_load());
      result.population_series.push_back(s.population);
    }
  };
  for (std::uint64_t i = 0; i < script.population_cap; ++i) {
    s.insert(rng, choices);
    if (instrument && !s.height_dominates_load()) result.height_invariant_ok = false;
    step_done();
  }
  for (const std::uint64_t v : script.deletions) {
    s.remove(v);
    s.insert(rng, choices);
    if (instrument && !s.height_dominates_load()) result.height_invariant_ok = false;
    step_done();
  }
  return result;
}

/// Lemma-2 style threshold K/K' + lnln(K')/ln2 + 9. The K/K' term is split
/// into integer quotient plus remainder and the quotient is added last, so
/// adding one full bin's worth of balls shifts the bound by exactly 1.0.
inline double bound_static(std::uint64_t num_balls, std::uint64_t num_bins,
                           double additive = 9.0) {
  if (num_bins < 3) throw ParameterError("load bound needs K' >= 3");
  const double tail = static_cast<double>(num_balls % num_bins) /
                          static_cast<double>(num_bins) +
                      std::log(std::log(static_cast<double>(num_bins))) / std::log(2.0) +
                      additive;
  return static_cast<double>(num_balls / num_bins) + tail;
}

/// Churn threshold with the additive constant left as a knob standing in
/// for the analysis' unspecified O(c1+c2).
inline double bound_dynamic(std::uint64_t population_cap, std::uint64_t num_bins,
                            double slack) {
  return bound_static(population_cap, num_bins, slack);
}

}  // namespace rscache::bins

#endif  // RSCACHE_BALLSBINS_HPP
