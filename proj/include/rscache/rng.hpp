#ifndef RSCACHE_RNG_HPP
#define RSCACHE_RNG_HPP

#include <cstdint>
#include <limits>
#include <random>

namespace rscache {

// Every stochastic component draws from std::mt19937_64, whose output is
// bit-exact across platforms by [rand.eng.mers]. Bounded draws go through
// uniform_below() below; std::uniform_int_distribution is implementation
// defined and would break the reproducibility contract.
using Rng = std::mt19937_64;

// splitmix64 finalizer (Vigna). Stateless mixer used for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL * (b + 1)));
}

// Per-trial seed: trial i of a run with master seed m gets mix_seed(m, i),
// so trials are order-independent and parallel-safe.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
  return mix_seed(master_seed, trial_index);
}

// Named sub-streams of one trial (placement draws, demand draws, library
// content) so consuming one stream never perturbs another.
enum class Stream : std::uint64_t {
  placement = 1,
  demands = 2,
  library = 3,
  adversary = 4,
};

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  return Rng(mix_seed(seed, static_cast<std::uint64_t>(stream)));
}

// Unbiased draw from [0, n) by rejection; (-n) % n == 2^64 mod n.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t min = (-n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= min) return r % n;
  }
}

}  // namespace rscache

#endif  // RSCACHE_RNG_HPP
