#pragma once

// Iterated boundary lines. The upper line phi_n^+(theta) = f^n_{theta-n*omega}(1)
// pushes the top of the phase rectangle forward; the lower line
// phi_n^-(theta) = f^{-n}_{theta+n*omega}(0) pulls the bottom backward. Both are
// instances of one grid-trace engine: a fiber map traced n steps along a rigid
// rotation, with the fiber evaluated either at the pre-rotation base (forward
// skew products) or at the post-rotation base (inverse skew products, whose
// fiber g_theta = f^{-1} is indexed by the landing point).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "snalab/common.hpp"
#include "snalab/parallel.hpp"
#include "snalab/qpf_map.hpp"
#include "snalab/torus.hpp"

namespace snalab {

struct CurveSample {
  std::int64_t m = 0;      // grid size; values[i] sits at theta_i = i/m exactly
  std::int64_t n = 0;      // iteration count
  bool is_upper = true;
  double a = 0.0;          // family parameters used (0 when not the arctan family)
  double beta = 0.0;
  std::vector<double> values;

  double theta(std::int64_t i) const { return static_cast<double>(i) / static_cast<double>(m); }
};

struct GapProfile {
  std::int64_t m = 0;
  std::int64_t n = 0;
  std::vector<double> gaps;  // upper - lower per grid point
  double min_gap = 0.0;
  double max_gap = 0.0;
  std::int64_t argmin = 0;
};

enum class BaseConvention {
  kPreRotation,   // step k evaluates the fiber at frac(theta + (k-n)*rho)
  kPostRotation,  // step k evaluates the fiber at frac(theta + (k+1-n)*rho)
};

// Trace value(theta_i) = n fiber steps along rotation rho, one independent
// orbit per grid point. fiber(base, x, i, k) -> next x.
template <class Fiber>
std::vector<double> trace_grid(Fiber&& fiber, double rho, BaseConvention conv, double start,
                               std::int64_t n, std::int64_t m, int threads = -1) {
  std::vector<double> out(static_cast<std::size_t>(m));
  const std::int64_t off = (conv == BaseConvention::kPostRotation) ? 1 : 0;
  parallel_for(
      m,
      [&](std::int64_t i) {
        double theta = static_cast<double>(i) / static_cast<double>(m);
        double x = start;
        for (std::int64_t k = 0; k < n; ++k) {
          double base = frac(theta + static_cast<double>(k + off - n) * rho);
          x = fiber(base, x, i, k);
        }
        out[static_cast<std::size_t>(i)] = x;
      },
      threads);
  return out;
}

// family-parameter tagging: only the arctan family carries (a, beta)
template <class Map>
void tag_family(CurveSample&, const Map&) {}
inline void tag_family(CurveSample& curve, const ArctanMap& map) {
  curve.a = map.a;
  curve.beta = map.beta;
}

template <class Map>
CurveSample upper_line(const Map& map, double omega, std::int64_t n, std::int64_t m,
                       int threads = -1) {
  CurveSample curve{m, n, true, 0.0, 0.0, {}};
  curve.values = trace_grid(
      [&map](double base, double x, std::int64_t, std::int64_t) { return map.apply(base, x); },
      omega, BaseConvention::kPreRotation, map.x_hi(), n, m, threads);
  tag_family(curve, map);
  return curve;
}

template <class Map>
CurveSample lower_line(const Map& map, double omega, std::int64_t n, std::int64_t m,
                       int threads = -1) {
  CurveSample curve{m, n, false, 0.0, 0.0, {}};
  curve.values = trace_grid(
      [&map](double base, double x, std::int64_t i, std::int64_t k) {
        try {
          return map.apply_inverse(base, x);
        } catch (InverseDomainError& e) {
          e.step = k + 1;
          e.grid_index = i;
          throw;
        }
      },
      -omega, BaseConvention::kPostRotation, 0.0, n, m, threads);
  tag_family(curve, map);
  return curve;
}

// Upper-line trace that keeps every intermediate value: row i holds
// [phi_0, ..., phi_n] along the orbit that ends at theta_i. Used by the
// exact-recurrence bookkeeping test.
template <class Map>
std::vector<std::vector<double>> upper_line_orbits(const Map& map, double omega, std::int64_t n,
                                                   std::int64_t m, int threads = -1) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m));
  parallel_for(
      m,
      [&](std::int64_t i) {
        double theta = static_cast<double>(i) / static_cast<double>(m);
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(n) + 1);
        double x = map.x_hi();
        row.push_back(x);
        for (std::int64_t k = 0; k < n; ++k) {
          double base = frac(theta + static_cast<double>(k - n) * omega);
          x = map.apply(base, x);
          row.push_back(x);
        }
        rows[static_cast<std::size_t>(i)] = std::move(row);
      },
      threads);
  return rows;
}

inline GapProfile gap_profile(const CurveSample& upper, const CurveSample& lower) {
  if (upper.m != lower.m || upper.n != lower.n)
    throw MismatchError("gap_profile: grid size or iteration count differ");
  if (upper.a != lower.a || upper.beta != lower.beta)
    throw MismatchError("gap_profile: family parameters differ");
  GapProfile g;
  g.m = upper.m;
  g.n = upper.n;
  g.gaps.resize(static_cast<std::size_t>(upper.m));
  g.min_gap = std::numeric_limits<double>::infinity();
  g.max_gap = -std::numeric_limits<double>::infinity();
  g.argmin = 0;
  for (std::int64_t i = 0; i < upper.m; ++i) {
    double d = upper.values[static_cast<std::size_t>(i)] - lower.values[static_cast<std::size_t>(i)];
    g.gaps[static_cast<std::size_t>(i)] = d;
    if (d < g.min_gap) {
      g.min_gap = d;
      g.argmin = i;
    }
    if (d > g.max_gap) g.max_gap = d;
  }
  return g;
}

// For each grid point, the smallest n* such that every successive upper-line
// difference with index in (n*, N] stays below tol; N+1 encodes "still moving
// at the last step". Each phi_n value comes from its own fresh orbit (the
// recurrence would need off-grid neighbors), so the cost is O(m N^2) map calls.
template <class Map>
std::vector<std::int64_t> stabilization_profile(const Map& map, double omega, std::int64_t N,
                                                std::int64_t m, double tol = 1e-10,
                                                int threads = -1) {
  std::vector<std::int64_t> profile(static_cast<std::size_t>(m));
  parallel_for(
      m,
      [&](std::int64_t i) {
        double theta = static_cast<double>(i) / static_cast<double>(m);
        double prev = map.x_hi();
        std::int64_t last_fail = 0;
        for (std::int64_t n = 1; n <= N; ++n) {
          double x = map.x_hi();
          for (std::int64_t k = 0; k < n; ++k) {
            double base = frac(theta + static_cast<double>(k - n) * omega);
            x = map.apply(base, x);
          }
          if (!(std::fabs(x - prev) < tol)) last_fail = n;
          prev = x;
        }
        profile[static_cast<std::size_t>(i)] = (last_fail == N) ? N + 1 : last_fail;
      },
      threads);
  return profile;
}

// Max slope |dv| / d(theta) over consecutive retained grid pairs, wraparound
// pair included (the torus metric handles it). "Consecutive" means no retained
// entry between the two.
inline double local_lipschitz(const CurveSample& curve, const std::vector<char>& mask) {
  const std::int64_t m = curve.m;
  if (static_cast<std::int64_t>(mask.size()) != m)
    throw MismatchError("local_lipschitz: mask length != grid size");
  std::vector<std::int64_t> kept;
  for (std::int64_t i = 0; i < m; ++i)
    if (mask[static_cast<std::size_t>(i)]) kept.push_back(i);
  if (kept.size() < 2) throw DegenerateMaskError("local_lipschitz: fewer than 2 retained points");

  double best = 0.0;
  const std::size_t K = kept.size();
  for (std::size_t j = 0; j < K; ++j) {
    std::int64_t i1 = kept[j];
    std::int64_t i2 = kept[(j + 1) % K];  // wraps around the circle
    if (i1 == i2) continue;
    double dv = std::fabs(curve.values[static_cast<std::size_t>(i2)] -
                          curve.values[static_cast<std::size_t>(i1)]);
    double dt = torus_distance(curve.theta(i1), curve.theta(i2));
    if (dt > 0.0) best = std::max(best, dv / dt);
  }
  return best;
}

inline double local_lipschitz(const CurveSample& curve) {
  return local_lipschitz(curve, std::vector<char>(static_cast<std::size_t>(curve.m), 1));
}

}  // namespace snalab
