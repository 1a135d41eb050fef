#pragma once

// Parameter classification (does the invariant set survive?), bisection for
// the critical parameter, Lyapunov exponents of the bounding graphs, pinched
// points, and an orbit-coverage probe of minimality.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include "snalab/boundary_lines.hpp"
#include "snalab/common.hpp"
#include "snalab/qpf_map.hpp"
#include "snalab/torus.hpp"

namespace snalab {

enum class Verdict { kSurvives, kCollapses };

inline const char* verdict_name(Verdict v) {
  return v == Verdict::kSurvives ? "Survives" : "Collapses";
}

struct ClassifyResult {
  Verdict verdict = Verdict::kSurvives;
  std::int64_t collapse_step = -1;      // first checked n with collapse evidence
  double min_gap = 0.0;                 // min gap at budget (Survives) or the witness value
  bool via_domain_error = false;        // collapse witnessed by an inverse domain escape
  std::int64_t checkpoints_run = 0;
};

// Gap checkpoints: the pointwise gap is monotone nonincreasing in n, so a
// crossing is still visible at the next power of two. Checking n = 1, 2, 4, ...
// plus the budget itself keeps the certificate sound at O(log N) line builds;
// collapse_step is therefore the first *checked* n, an upper bound for the
// first actual crossing.
inline std::vector<std::int64_t> classify_checkpoints(std::int64_t budget) {
  std::vector<std::int64_t> ns;
  for (std::int64_t n = 1; n < budget; n *= 2) ns.push_back(n);
  ns.push_back(budget);
  return ns;
}

// Collapse iff the two boundary lines cross (min gap < -safety_margin) at some
// checked n <= budget, or the lower line's backward orbit escapes the inverse
// domain (which only happens past a crossing in exact arithmetic).
template <class Map>
ClassifyResult classify(const Map& map, double omega, std::int64_t budget, std::int64_t m,
                        double safety_margin = 0.0, int threads = -1) {
  ClassifyResult result;
  for (std::int64_t n : classify_checkpoints(budget)) {
    ++result.checkpoints_run;
    CurveSample up = upper_line(map, omega, n, m, threads);
    CurveSample lo;
    try {
      lo = lower_line(map, omega, n, m, threads);
    } catch (const InverseDomainError&) {
      result.verdict = Verdict::kCollapses;
      result.collapse_step = n;
      result.min_gap = -std::numeric_limits<double>::infinity();
      result.via_domain_error = true;
      return result;
    }
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < m; ++i)
      min_gap = std::min(min_gap, up.values[static_cast<std::size_t>(i)] -
                                      lo.values[static_cast<std::size_t>(i)]);
    result.min_gap = min_gap;
    if (min_gap < -safety_margin) {
      result.verdict = Verdict::kCollapses;
      result.collapse_step = n;
      return result;
    }
  }
  result.verdict = Verdict::kSurvives;
  result.collapse_step = -1;
  return result;
}

struct BisectionTraceRow {
  std::int64_t step;
  double beta;
  Verdict verdict;
  std::int64_t collapse_step;
  double min_gap;
};

struct BetaCBracket {
  double lo = 0.0;
  double hi = 1.0;
  double tol = 0.0;
  std::int64_t evaluations = 0;
  std::vector<BisectionTraceRow> trace;

  double midpoint() const { return 0.5 * (lo + hi); }
};

// Plain bisection on the classify verdict over [0, 1]. The verdict is monotone
// in beta, so the bracket always halves; BudgetInconclusive can only arise
// from the endpoint precondition failing at the given budgets.
inline BetaCBracket find_beta_c(double a, double omega, double tol, std::int64_t budget,
                                std::int64_t m, int threads = -1) {
  if (!(tol > 0.0) || tol > 1.0) throw ConfigError("find_beta_c: tol must be in (0, 1]");
  BetaCBracket bracket;
  bracket.tol = tol;
  std::int64_t step = 0;

  auto run = [&](double beta) {
    ClassifyResult r = classify(ArctanMap{a, beta}, omega, budget, m, 0.0, threads);
    ++bracket.evaluations;
    bracket.trace.push_back({step++, beta, r.verdict, r.collapse_step, r.min_gap});
    return r.verdict;
  };

  if (run(0.0) != Verdict::kSurvives)
    throw BudgetInconclusive("find_beta_c: beta = 0 did not classify as Survives", 0.0, 1.0);
  if (run(1.0) != Verdict::kCollapses)
    throw BudgetInconclusive("find_beta_c: beta = 1 did not classify as Collapses", 0.0, 1.0);

  while (bracket.hi - bracket.lo > tol) {
    double mid = 0.5 * (bracket.lo + bracket.hi);
    if (run(mid) == Verdict::kSurvives)
      bracket.lo = mid;
    else
      bracket.hi = mid;
  }
  return bracket;
}

// Birkhoff average of log fiber_derivative along the forward orbit, after a
// burn-in that lets the orbit settle onto the attracting graph.
template <class Map>
double lyapunov(const Map& map, double omega, double theta0, double x0, std::int64_t N,
                std::int64_t burn_in = 10000) {
  double theta = frac(theta0);
  double x = x0;
  for (std::int64_t k = 0; k < burn_in; ++k) {
    x = map.apply(theta, x);
    theta = frac(theta + omega);
  }
  double sum = 0.0;
  for (std::int64_t k = 0; k < N; ++k) {
    sum += std::log(map.fiber_derivative(theta, x));
    x = map.apply(theta, x);
    theta = frac(theta + omega);
  }
  return sum / static_cast<double>(N);
}

struct LyapunovEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::int64_t blocks = 0;
};

namespace detail {
inline LyapunovEstimate block_stats(const std::vector<double>& block_means) {
  LyapunovEstimate est;
  est.blocks = static_cast<std::int64_t>(block_means.size());
  double mean = 0.0;
  for (double b : block_means) mean += b;
  mean /= static_cast<double>(block_means.size());
  double var = 0.0;
  for (double b : block_means) var += (b - mean) * (b - mean);
  var /= static_cast<double>(block_means.size() - 1);
  est.mean = mean;
  est.standard_error = std::sqrt(var / static_cast<double>(block_means.size()));
  return est;
}
}  // namespace detail

// Forward-graph exponent with a block-average standard error (default 100 blocks).
template <class Map>
LyapunovEstimate lyapunov_blocks(const Map& map, double omega, double theta0, double x0,
                                 std::int64_t N, std::int64_t burn_in = 10000,
                                 std::int64_t num_blocks = 100) {
  double theta = frac(theta0);
  double x = x0;
  for (std::int64_t k = 0; k < burn_in; ++k) {
    x = map.apply(theta, x);
    theta = frac(theta + omega);
  }
  std::int64_t block_len = N / num_blocks;
  std::vector<double> block_means;
  block_means.reserve(static_cast<std::size_t>(num_blocks));
  for (std::int64_t b = 0; b < num_blocks; ++b) {
    double sum = 0.0;
    for (std::int64_t k = 0; k < block_len; ++k) {
      sum += std::log(map.fiber_derivative(theta, x));
      x = map.apply(theta, x);
      theta = frac(theta + omega);
    }
    block_means.push_back(sum / static_cast<double>(block_len));
  }
  return detail::block_stats(block_means);
}

// Forward fiber exponent sampled along the backward orbit (the lower bounding
// graph is reached by pulling 0 backward; its forward exponent is positive on
// the repelling side). Derivatives are evaluated at the landing points.
template <class Map>
LyapunovEstimate lyapunov_backward_blocks(const Map& map, double omega, double theta0, double x0,
                                          std::int64_t N, std::int64_t burn_in = 10000,
                                          std::int64_t num_blocks = 100) {
  double theta = frac(theta0);
  double x = x0;
  for (std::int64_t k = 0; k < burn_in; ++k) {
    double base = frac(theta - omega);
    x = map.apply_inverse(base, x);
    theta = base;
  }
  std::int64_t block_len = N / num_blocks;
  std::vector<double> block_means;
  block_means.reserve(static_cast<std::size_t>(num_blocks));
  for (std::int64_t b = 0; b < num_blocks; ++b) {
    double sum = 0.0;
    for (std::int64_t k = 0; k < block_len; ++k) {
      double base = frac(theta - omega);
      x = map.apply_inverse(base, x);
      theta = base;
      sum += std::log(map.fiber_derivative(theta, x));
    }
    block_means.push_back(sum / static_cast<double>(block_len));
  }
  return detail::block_stats(block_means);
}

// Grid indices where the gap dips below tol.
inline std::vector<std::int64_t> pinched_points(const GapProfile& gap, double tol) {
  if (!(tol > 0.0)) throw ConfigError("pinched_points: tol must be positive");
  std::vector<std::int64_t> idx;
  for (std::int64_t i = 0; i < gap.m; ++i)
    if (gap.gaps[static_cast<std::size_t>(i)] < tol) idx.push_back(i);
  return idx;
}

struct MinimalityReport {
  double coverage = 0.0;
  std::int64_t tiles_total = 0;
  std::int64_t tiles_hit = 0;
  std::int64_t orbit_len = 0;
  double box_eps = 0.0;
};

// Tile the region between the sampled lower and upper lines with box_eps
// squares (x binned from the region's own minimum) and report the fraction of
// tiles the forward orbit visits. The orbit starts from a seeded random theta
// on the upper graph (burn-in from the top of the phase rectangle) and records
// orbit_len + 1 points, the start included.
template <class Map>
MinimalityReport minimality_probe(const Map& map, double omega, std::uint64_t seed,
                                  std::int64_t orbit_len, double box_eps,
                                  const CurveSample& upper, const CurveSample& lower,
                                  std::int64_t burn_in = 10000) {
  if (!(box_eps > 0.0) || box_eps > 1.0)
    throw ConfigError("minimality_probe: box_eps must be in (0, 1]");
  if (upper.m != lower.m) throw MismatchError("minimality_probe: grid sizes differ");
  const std::int64_t m = upper.m;

  const std::int64_t ncols =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(1.0 / box_eps + 1e-9)));
  double x_min = std::numeric_limits<double>::infinity();
  for (double v : lower.values) x_min = std::min(x_min, v);

  auto col_of = [&](double theta) {
    auto c = static_cast<std::int64_t>(std::floor(frac(theta) / box_eps));
    return std::min(c, ncols - 1);
  };
  auto row_of = [&](double x) { return static_cast<std::int64_t>(std::floor((x - x_min) / box_eps)); };

  // per-column extent of the region
  std::vector<double> col_lo(static_cast<std::size_t>(ncols),
                             std::numeric_limits<double>::infinity());
  std::vector<double> col_hi(static_cast<std::size_t>(ncols),
                             -std::numeric_limits<double>::infinity());
  for (std::int64_t i = 0; i < m; ++i) {
    std::int64_t c = col_of(upper.theta(i));
    col_lo[static_cast<std::size_t>(c)] =
        std::min(col_lo[static_cast<std::size_t>(c)], lower.values[static_cast<std::size_t>(i)]);
    col_hi[static_cast<std::size_t>(c)] =
        std::max(col_hi[static_cast<std::size_t>(c)], upper.values[static_cast<std::size_t>(i)]);
  }

  std::unordered_set<std::int64_t> region;
  for (std::int64_t c = 0; c < ncols; ++c) {
    if (!(col_lo[static_cast<std::size_t>(c)] <= col_hi[static_cast<std::size_t>(c)])) continue;
    std::int64_t r0 = row_of(col_lo[static_cast<std::size_t>(c)]);
    // top edge exactly on a bin boundary belongs to the tile below it
    auto r1 = static_cast<std::int64_t>(
        std::ceil((col_hi[static_cast<std::size_t>(c)] - x_min) / box_eps)) - 1;
    r1 = std::max(r0, r1);
    for (std::int64_t r = r0; r <= r1; ++r) region.insert(c * (1ll << 32) + r);
  }

  SplitMix64 rng(seed);
  double theta = rng.next_double();
  double x = map.x_hi();
  for (std::int64_t k = 0; k < burn_in; ++k) {
    x = map.apply(theta, x);
    theta = frac(theta + omega);
  }

  std::unordered_set<std::int64_t> hit;
  for (std::int64_t k = 0; k <= orbit_len; ++k) {
    std::int64_t key = col_of(theta) * (1ll << 32) + row_of(x);
    if (region.count(key)) hit.insert(key);
    if (k < orbit_len) {
      x = map.apply(theta, x);
      theta = frac(theta + omega);
    }
  }

  MinimalityReport report;
  report.tiles_total = static_cast<std::int64_t>(region.size());
  report.tiles_hit = static_cast<std::int64_t>(hit.size());
  report.coverage = report.tiles_total > 0
                        ? static_cast<double>(report.tiles_hit) / static_cast<double>(report.tiles_total)
                        : 0.0;
  report.orbit_len = orbit_len;
  report.box_eps = box_eps;
  return report;
}

}  // namespace snalab
