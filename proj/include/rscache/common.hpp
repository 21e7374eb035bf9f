#ifndef RSCACHE_COMMON_HPP
#define RSCACHE_COMMON_HPP

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rscache {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violations: parameters outside their documented ranges.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Mismatched sizes between cooperating objects (graph vs library vs demands).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Graph failed validation where a valid graph is a precondition.
class InvalidGraphError : public Error {
 public:
  using Error::Error;
};

// No family instance satisfies the requested virtual-user count and memory budget.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// Decoding impossible: missing transmission or a non-induced matching.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class UnknownUserError : public Error {
 public:
  using Error::Error;
};

// Malformed churn script (duplicate or out-of-range deletion targets).
class ScriptError : public Error {
 public:
  using Error::Error;
};

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw std::overflow_error("64-bit multiply overflow: " + std::to_string(a) +
                              " * " + std::to_string(b));
  }
  return r;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) {
    throw std::overflow_error("64-bit add overflow");
  }
  return r;
}

// ceil(a / b) for b > 0.
inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return a / b + (a % b != 0);
}

/// Exact nonnegative rational, kept reduced. Used wherever the contract
/// demands exact rate/memory arithmetic instead of floating point.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  constexpr Ratio() = default;
  Ratio(std::uint64_t n, std::uint64_t d) : num(n), den(d) {
    if (den == 0) throw ParameterError("Ratio with zero denominator");
    reduce();
  }

  void reduce() {
    const std::uint64_t g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    if (num == 0) den = 1;
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Ratio& a, const Ratio& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Ratio& a, const Ratio& b) { return !(a == b); }
};

// 1 - r for r <= 1.
inline Ratio one_minus(const Ratio& r) {
  if (r.num > r.den) throw ParameterError("one_minus on ratio > 1");
  return Ratio(r.den - r.num, r.den);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// FNV-1a over u32 values serialized little-endian; the event-log digests
// must not depend on host byte order.
template <typename Container>
inline std::uint64_t fnv1a64_u32le(const Container& values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const std::uint32_t v : values) {
    for (int b = 0; b < 4; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace rscache

#endif  // RSCACHE_COMMON_HPP
