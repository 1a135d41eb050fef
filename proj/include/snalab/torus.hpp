#pragma once

// The circle T = R/Z: fractional-part reduction, rotations, the circle
// metric, and closed-arc geometry used by the critical-region machinery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "snalab/common.hpp"

namespace snalab {

// fractional part in [0, 1); guards against the r == 1.0 rounding corner
inline double frac(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? r - 1.0 : r;
}

// golden mean rotation number (sqrt(5)-1)/2
inline double golden_omega() { return (std::sqrt(5.0) - 1.0) / 2.0; }

// theta + n*omega mod 1, with a single multiplication so the rounding error
// stays ~ |n| ulp instead of accumulating over |n| additions
inline double rotate(double theta, double omega, std::int64_t n) {
  return frac(theta + static_cast<double>(n) * omega);
}

// circle metric d(a, b) = min(|delta|, 1 - |delta|) <= 1/2
inline double torus_distance(double a, double b) {
  double d = std::fabs(frac(a) - frac(b));
  return std::min(d, 1.0 - d);
}

// Closed arc [lo, lo+len] mod 1. len = 1 means the full circle; len = 0 a point.
struct Arc {
  double lo = 0.0;
  double len = 0.0;

  bool full() const { return len >= 1.0; }
  double hi() const { return frac(lo + len); }
};

// membership in the closed arc
inline bool point_in_arc(const Arc& a, double theta) {
  if (a.full()) return true;
  return frac(theta - a.lo) <= a.len;
}

inline Arc arc_shift(const Arc& a, double delta) { return Arc{frac(a.lo + delta), a.len}; }

// distance between two closed arcs on the circle (0 when they intersect)
inline double arc_distance(const Arc& a, const Arc& b) {
  if (a.full() || b.full()) return 0.0;
  double s = frac(b.lo - a.lo);       // b's start, measured upward from a's start
  double gap_up = s - a.len;          // gap from a's end up to b's start
  double gap_down = 1.0 - s - b.len;  // gap from b's end up to a's start
  if (gap_up <= 0.0 || gap_down <= 0.0) return 0.0;
  return std::min(gap_up, gap_down);
}

// distance from a point to an arc set
inline double point_to_arcs_distance(double theta, const std::vector<Arc>& arcs) {
  double best = 0.5;
  for (const Arc& a : arcs) best = std::min(best, arc_distance(Arc{frac(theta), 0.0}, a));
  return best;
}

inline bool point_in_arcs(double theta, const std::vector<Arc>& arcs) {
  for (const Arc& a : arcs)
    if (point_in_arc(a, theta)) return true;
  return false;
}

// Smallest closed arc containing all flagged cells of a circular boolean
// grid (cell i at theta = i/m): complement of the longest unflagged run.
// Returns len = 1 when everything is flagged. Caller must ensure any flag set.
inline Arc smallest_enclosing_arc_of_grid(const std::vector<char>& flags) {
  const std::int64_t m = static_cast<std::int64_t>(flags.size());
  std::int64_t total = 0;
  for (char f : flags) total += (f != 0);
  if (total == 0) throw EmptyRegion("smallest_enclosing_arc_of_grid: no flagged cell");
  if (total == m) return Arc{0.0, 1.0};

  // longest circular run of zeros
  std::int64_t best_start = -1, best_len = 0;
  std::int64_t run_start = -1, run_len = 0;
  for (std::int64_t i = 0; i < 2 * m; ++i) {
    if (!flags[i % m]) {
      if (run_len == 0) run_start = i;
      ++run_len;
      if (run_len > best_len && run_len <= m) {
        best_len = run_len;
        best_start = run_start;
      }
    } else {
      run_len = 0;
    }
  }
  // arc spans the flagged complement: from the cell after the gap to the cell before it
  std::int64_t first = (best_start + best_len) % m;  // first flagged cell
  std::int64_t count = m - best_len;                 // flagged span in cells
  double lo = static_cast<double>(first) / static_cast<double>(m);
  double len = static_cast<double>(count - 1) / static_cast<double>(m);
  return Arc{lo, len};
}

}  // namespace snalab
