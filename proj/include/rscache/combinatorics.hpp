#ifndef RSCACHE_COMBINATORICS_HPP
#define RSCACHE_COMBINATORICS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "rscache/common.hpp"

namespace rscache::comb {

/// C(n, k) in exact 64-bit integer arithmetic; throws std::overflow_error
/// rather than wrapping. Each intermediate product C(n-k+i-1, i-1)*(n-k+i)
/// is divisible by i, so the division below is exact.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = checked_mul(r, n - k + i) / i;
  }
  return r;
}

/// Colexicographic rank of an ascending k-subset of {0,1,...}:
/// rank = sum_i C(s[i], i+1). Colex order sorts subsets by largest
/// element, then next largest, and so on; it does not depend on the
/// ground-set size, which keeps vertex indices stable when n grows.
inline std::uint64_t colex_rank(std::span<const std::uint32_t> subset) {
  std::uint64_t r = 0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    r = checked_add(r, binomial(subset[i], static_cast<std::uint64_t>(i) + 1));
  }
  return r;
}

/// Inverse of colex_rank for k-subsets.
inline std::vector<std::uint32_t> colex_unrank(std::uint64_t rank, std::uint32_t k) {
  std::vector<std::uint32_t> subset(k);
  for (std::uint32_t i = k; i >= 1; --i) {
    // largest c with C(c, i) <= rank; c >= i-1 always exists since C(i-1,i)=0
    std::uint32_t c = i - 1;
    while (binomial(c + 1, i) <= rank) ++c;
    subset[i - 1] = c;
    rank -= binomial(c, i);
  }
  return subset;
}

/// Advance an ascending k-subset of [0,n) to its colex successor in place.
/// Returns false (leaving the first subset) once the last one is passed.
inline bool next_subset_colex(std::vector<std::uint32_t>& s, std::uint32_t n) {
  const std::size_t k = s.size();
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint32_t limit = (i + 1 < k) ? s[i + 1] : n;
    if (s[i] + 1 < limit) {
      ++s[i];
      for (std::size_t j = 0; j < i; ++j) s[j] = static_cast<std::uint32_t>(j);
      return true;
    }
  }
  for (std::size_t j = 0; j < k; ++j) s[j] = static_cast<std::uint32_t>(j);
  return false;
}

/// Visit all k-subsets of [0,n) in colex order.
template <typename Fn>
void for_each_subset(std::uint32_t n, std::uint32_t k, Fn&& fn) {
  if (k > n) return;
  std::vector<std::uint32_t> s(k);
  for (std::uint32_t i = 0; i < k; ++i) s[i] = i;
  do {
    fn(static_cast<const std::vector<std::uint32_t>&>(s));
  } while (next_subset_colex(s, n));
}

}  // namespace rscache::comb

#endif  // RSCACHE_COMBINATORICS_HPP
