#pragma once

// Shared basics: error taxonomy, deterministic RNG, numeric formatting.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace snalab {

inline constexpr double kPi = 3.14159265358979323846;

// Base class for all library errors.
class SnaLabError : public std::runtime_error {
 public:
  explicit SnaLabError(const std::string& what) : std::runtime_error(what) {}
};

// x outside the working phase interval X.
class DomainError : public SnaLabError {
 public:
  explicit DomainError(const std::string& what) : SnaLabError(what) {}
};

// Backward step left the domain of the fiber inverse by more than the slack.
class InverseDomainError : public SnaLabError {
 public:
  InverseDomainError(double theta, double y, double excess)
      : SnaLabError("inverse domain violation"), theta(theta), y(y), excess(excess) {}
  double theta = 0.0;      // base point where the inverse was attempted
  double y = 0.0;          // value whose preimage was requested
  double excess = 0.0;     // amount by which |arg| exceeded 1
  std::int64_t step = 0;        // backward step index (1-based), set by the caller
  std::int64_t grid_index = -1; // grid point, set by line computations
};

class MismatchError : public SnaLabError {
 public:
  explicit MismatchError(const std::string& what) : SnaLabError(what) {}
};

class DegenerateMaskError : public SnaLabError {
 public:
  explicit DegenerateMaskError(const std::string& what) : SnaLabError(what) {}
};

class InsufficientScales : public SnaLabError {
 public:
  explicit InsufficientScales(const std::string& what) : SnaLabError(what) {}
};

class DivergentSeries : public SnaLabError {
 public:
  explicit DivergentSeries(const std::string& what) : SnaLabError(what) {}
};

class BudgetInconclusive : public SnaLabError {
 public:
  BudgetInconclusive(const std::string& what, double lo, double hi)
      : SnaLabError(what), lo(lo), hi(hi) {}
  double lo, hi;  // bracket achieved before giving up
};

class EmptyRegion : public SnaLabError {
 public:
  explicit EmptyRegion(const std::string& what) : SnaLabError(what) {}
};

// Bad user input (config files, CLI arguments).
class ConfigError : public SnaLabError {
 public:
  explicit ConfigError(const std::string& what) : SnaLabError(what) {}
};

// splitmix64: tiny, fast, reproducible across platforms.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform double in [0, 1)
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(next_double() * static_cast<double>(n)) % n;
  }
};

// 17 significant digits: round-trips any double exactly.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// log(exp(a) + exp(b)) without overflow
inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

}  // namespace snalab
