#pragma once

// Box-counting, pointwise, and information dimension estimators over point
// clouds on the torus-times-interval phase space (sup metric, circular theta),
// plus the masked-Lipschitz decomposition report and calibration clouds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include "snalab/boundary_lines.hpp"
#include "snalab/common.hpp"
#include "snalab/parallel.hpp"
#include "snalab/torus.hpp"

namespace snalab {

struct PointCloud {
  std::vector<double> theta;
  std::vector<double> x;
  std::string tag;

  std::int64_t size() const { return static_cast<std::int64_t>(theta.size()); }
};

// Number of eps-boxes (theta binned on [0,1), x binned from the cloud minimum)
// that the cloud touches.
inline std::int64_t box_count(const PointCloud& cloud, double eps) {
  if (!(eps > 0.0) || eps > 1.0) throw ConfigError("box_count: eps must be in (0, 1]");
  if (cloud.size() == 0) return 0;
  double x_min = std::numeric_limits<double>::infinity();
  for (double v : cloud.x) x_min = std::min(x_min, v);

  std::unordered_set<std::int64_t> boxes;
  boxes.reserve(static_cast<std::size_t>(cloud.size()) / 4 + 16);
  for (std::int64_t i = 0; i < cloud.size(); ++i) {
    auto col = static_cast<std::int64_t>(std::floor(frac(cloud.theta[static_cast<std::size_t>(i)]) / eps));
    auto row = static_cast<std::int64_t>(
        std::floor((cloud.x[static_cast<std::size_t>(i)] - x_min) / eps));
    boxes.insert(col * (1ll << 32) + row);
  }
  return static_cast<std::int64_t>(boxes.size());
}

// Halving ladder from eps_max down to the last rung >= eps_min.
inline std::vector<double> make_dyadic_ladder(double eps_max, double eps_min) {
  if (!(eps_min > 0.0) || !(eps_max > eps_min) || eps_max > 1.0)
    throw ConfigError("make_dyadic_ladder: need 0 < eps_min < eps_max <= 1");
  std::vector<double> ladder;
  for (double eps = eps_max; eps >= eps_min * (1.0 - 1e-12); eps *= 0.5) ladder.push_back(eps);
  if (ladder.size() < 5)
    throw InsufficientScales("make_dyadic_ladder: fewer than 5 rungs between eps_max and eps_min");
  return ladder;
}

namespace detail {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace detail

struct DimensionFit {
  double slope = 0.0;
  double r_squared = 0.0;
  bool inconclusive = false;          // r^2 below 0.98 on the kept window
  std::vector<double> scales;         // kept rungs (descending)
  std::vector<double> log_values;     // ln N(eps) or mean ln mu(eps) on kept rungs
  std::vector<double> ladder;         // every rung, before any trimming
  std::vector<double> raw;            // per-rung raw value: box count or mean ln mu
  std::int64_t trimmed_coarse = 0;    // head rungs dropped (box count below 16)
  std::int64_t trimmed_saturated = 0; // tail rungs dropped (count above npoints/4)
};

// Box-counting dimension: LSQ slope of ln N(eps) against ln(1/eps) over the
// dyadic ladder, after trimming under-resolved and saturated rungs.
inline DimensionFit box_dimension(const PointCloud& cloud, double eps_max, double eps_min) {
  std::vector<double> ladder = make_dyadic_ladder(eps_max, eps_min);
  std::vector<std::int64_t> counts;
  counts.reserve(ladder.size());
  for (double eps : ladder) counts.push_back(box_count(cloud, eps));

  std::size_t lo = 0, hi = ladder.size();
  while (lo < hi && counts[lo] < 16) ++lo;                     // coarse rungs carry no slope
  const auto cap = cloud.size() / 4;
  while (hi > lo && counts[hi - 1] > cap) --hi;                // saturated rungs flatten it
  if (hi - lo < 4)
    throw InsufficientScales("box_dimension: fewer than 4 usable rungs after trimming");

  DimensionFit fit;
  fit.trimmed_coarse = static_cast<std::int64_t>(lo);
  fit.trimmed_saturated = static_cast<std::int64_t>(ladder.size() - hi);
  fit.ladder = ladder;
  for (std::int64_t c : counts) fit.raw.push_back(static_cast<double>(c));
  std::vector<double> xs, ys;
  for (std::size_t i = lo; i < hi; ++i) {
    fit.scales.push_back(ladder[i]);
    xs.push_back(-std::log(ladder[i]));
    ys.push_back(std::log(static_cast<double>(counts[i])));
    fit.log_values.push_back(ys.back());
  }
  detail::LinearFit lsq = detail::linear_fit(xs, ys);
  fit.slope = lsq.slope;
  fit.r_squared = lsq.r_squared;
  fit.inconclusive = lsq.r_squared < 0.98;
  return fit;
}

namespace detail {

inline double sup_distance(double theta_a, double x_a, double theta_b, double x_b) {
  return std::max(torus_distance(theta_a, theta_b), std::abs(x_a - x_b));
}

// per-center ball counts over a descending ladder
inline std::vector<std::int64_t> ball_counts(const PointCloud& cloud, std::int64_t center,
                                             const std::vector<double>& ladder) {
  std::vector<std::int64_t> counts(ladder.size(), 0);
  const double tc = cloud.theta[static_cast<std::size_t>(center)];
  const double xc = cloud.x[static_cast<std::size_t>(center)];
  for (std::int64_t i = 0; i < cloud.size(); ++i) {
    const double d = sup_distance(tc, xc, cloud.theta[static_cast<std::size_t>(i)],
                                  cloud.x[static_cast<std::size_t>(i)]);
    for (std::size_t s = 0; s < ladder.size(); ++s) {
      if (d <= ladder[s])
        ++counts[s];
      else
        break;  // ladder descends, so no finer rung contains the point either
    }
  }
  return counts;
}

}  // namespace detail

// Pointwise (local mass) dimension at one cloud point: LSQ slope of ln mu(eps)
// against ln eps; rungs with empty balls are dropped.
inline DimensionFit pointwise_dimension(const PointCloud& cloud, std::int64_t center_index,
                                        double eps_max, double eps_min) {
  if (center_index < 0 || center_index >= cloud.size())
    throw ConfigError("pointwise_dimension: center index out of range");
  std::vector<double> ladder = make_dyadic_ladder(eps_max, eps_min);
  std::vector<std::int64_t> counts = detail::ball_counts(cloud, center_index, ladder);

  DimensionFit fit;
  std::vector<double> xs, ys;
  for (std::size_t s = 0; s < ladder.size(); ++s) {
    fit.ladder.push_back(ladder[s]);
    if (counts[s] == 0) {  // EmptyBall: scale dropped
      fit.raw.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double log_mu = std::log(static_cast<double>(counts[s]) / static_cast<double>(cloud.size()));
    fit.raw.push_back(log_mu);
    fit.scales.push_back(ladder[s]);
    xs.push_back(std::log(ladder[s]));
    ys.push_back(log_mu);
    fit.log_values.push_back(ys.back());
  }
  if (xs.size() < 4)
    throw InsufficientScales("pointwise_dimension: fewer than 4 usable rungs");
  detail::LinearFit lsq = detail::linear_fit(xs, ys);
  fit.slope = lsq.slope;
  fit.r_squared = lsq.r_squared;
  fit.inconclusive = lsq.r_squared < 0.98;
  return fit;
}

// Information dimension: centers drawn from the cloud itself (so mu-weighted),
// per-rung average of ln mu over centers, then one LSQ slope against ln eps.
inline DimensionFit information_dimension(const PointCloud& cloud, std::int64_t num_centers,
                                          double eps_max, double eps_min, std::uint64_t seed,
                                          int threads = -1) {
  if (num_centers < 1) throw ConfigError("information_dimension: need at least one center");
  if (cloud.size() == 0) throw ConfigError("information_dimension: empty cloud");
  std::vector<double> ladder = make_dyadic_ladder(eps_max, eps_min);

  SplitMix64 rng(seed);
  std::vector<std::int64_t> centers(static_cast<std::size_t>(num_centers));
  for (auto& c : centers) c = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(cloud.size())));

  std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(num_centers));
  parallel_for(num_centers,
               [&](std::int64_t i) {
                 counts[static_cast<std::size_t>(i)] =
                     detail::ball_counts(cloud, centers[static_cast<std::size_t>(i)], ladder);
               },
               threads);

  DimensionFit fit;
  std::vector<double> xs, ys;
  for (std::size_t s = 0; s < ladder.size(); ++s) {
    double sum_log_mu = 0.0;
    std::int64_t valid = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c][s] == 0) continue;  // EmptyBall center at this rung
      sum_log_mu += std::log(static_cast<double>(counts[c][s]) / static_cast<double>(cloud.size()));
      ++valid;
    }
    fit.ladder.push_back(ladder[s]);
    if (valid == 0) {  // rung dropped entirely
      fit.raw.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double mean_log_mu = sum_log_mu / static_cast<double>(valid);
    fit.raw.push_back(mean_log_mu);
    fit.scales.push_back(ladder[s]);
    xs.push_back(std::log(ladder[s]));
    ys.push_back(mean_log_mu);
    fit.log_values.push_back(ys.back());
  }
  if (xs.size() < 4)
    throw InsufficientScales("information_dimension: fewer than 4 usable rungs");
  detail::LinearFit lsq = detail::linear_fit(xs, ys);
  fit.slope = lsq.slope;
  fit.r_squared = lsq.r_squared;
  fit.inconclusive = lsq.r_squared < 0.98;
  return fit;
}

// ---------------------------------------------------------------------------
// masked-Lipschitz decomposition report

struct LipschitzRow {
  std::int64_t label = 0;      // caller-chosen level tag for the mask/bound pair
  std::int64_t n = 0;          // iterate depth of the curve
  double empirical = 0.0;      // masked local Lipschitz constant
  double log_empirical = 0.0;
  double log_bound = 0.0;      // closed-form log bound supplied by the caller
  bool within_bound = false;
  std::int64_t mask_kept = 0;
  double mask_measure = 0.0;   // kept fraction of the grid
  double union_bound = 0.0;    // measure bound on the masked-out set
  bool vacuous = false;        // mask too small to measure a slope
};

// Pair each curve with its mask, bound, and label; empirical masked slopes are
// compared against the supplied log bounds.
inline std::vector<LipschitzRow> lipschitz_decomposition_report(
    const std::vector<CurveSample>& curves, const std::vector<std::vector<char>>& masks,
    const std::vector<double>& log_bounds, const std::vector<std::int64_t>& labels,
    const std::vector<double>& union_bounds) {
  if (curves.size() != masks.size() || curves.size() != log_bounds.size() ||
      curves.size() != labels.size() || curves.size() != union_bounds.size())
    throw MismatchError("lipschitz_decomposition_report: input lengths differ");

  std::vector<LipschitzRow> rows;
  rows.reserve(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    LipschitzRow row;
    row.label = labels[i];
    row.n = curves[i].n;
    row.log_bound = log_bounds[i];
    row.union_bound = union_bounds[i];
    std::int64_t kept = 0;
    for (char f : masks[i]) kept += f != 0;
    row.mask_kept = kept;
    row.mask_measure = static_cast<double>(kept) / static_cast<double>(curves[i].m);
    try {
      row.empirical = local_lipschitz(curves[i], masks[i]);
      row.log_empirical = row.empirical > 0.0 ? std::log(row.empirical)
                                              : -std::numeric_limits<double>::infinity();
      row.within_bound = row.log_empirical <= row.log_bound;
    } catch (const DegenerateMaskError&) {
      row.vacuous = true;
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// cloud builders

// forward orbit cloud after burn-in
template <class Map>
PointCloud orbit_cloud(const Map& map, double omega, double theta0, double x0,
                       std::int64_t npoints, std::int64_t burn_in = 10000) {
  PointCloud cloud;
  cloud.tag = "orbit";
  cloud.theta.reserve(static_cast<std::size_t>(npoints));
  cloud.x.reserve(static_cast<std::size_t>(npoints));
  double theta = frac(theta0);
  double x = x0;
  for (std::int64_t k = 0; k < burn_in; ++k) {
    x = map.apply(theta, x);
    theta = frac(theta + omega);
  }
  for (std::int64_t k = 0; k < npoints; ++k) {
    cloud.theta.push_back(theta);
    cloud.x.push_back(x);
    x = map.apply(theta, x);
    theta = frac(theta + omega);
  }
  return cloud;
}

// graph cloud straight from a sampled boundary line
inline PointCloud graph_cloud(const CurveSample& curve) {
  PointCloud cloud;
  cloud.tag = curve.is_upper ? "upper_graph" : "lower_graph";
  cloud.theta.reserve(static_cast<std::size_t>(curve.m));
  cloud.x = curve.values;
  for (std::int64_t i = 0; i < curve.m; ++i) cloud.theta.push_back(curve.theta(i));
  return cloud;
}

// uniform random filling of the unit square (box dimension 2)
inline PointCloud make_square_cloud(std::int64_t npoints, std::uint64_t seed) {
  PointCloud cloud;
  cloud.tag = "square";
  SplitMix64 rng(seed);
  cloud.theta.reserve(static_cast<std::size_t>(npoints));
  cloud.x.reserve(static_cast<std::size_t>(npoints));
  for (std::int64_t i = 0; i < npoints; ++i) {
    cloud.theta.push_back(rng.next_double());
    cloud.x.push_back(rng.next_double());
  }
  return cloud;
}

// smooth sine graph on a uniform grid (box dimension 1)
inline PointCloud make_sine_cloud(std::int64_t m) {
  PointCloud cloud;
  cloud.tag = "sine";
  cloud.theta.reserve(static_cast<std::size_t>(m));
  cloud.x.reserve(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) {
    double theta = static_cast<double>(i) / static_cast<double>(m);
    cloud.theta.push_back(theta);
    cloud.x.push_back(0.5 + 0.25 * std::sin(2.0 * kPi * theta));
  }
  return cloud;
}

// every point identical (information dimension 0)
inline PointCloud make_atom_cloud(std::int64_t npoints, double theta = 0.5, double x = 0.5) {
  PointCloud cloud;
  cloud.tag = "atom";
  cloud.theta.assign(static_cast<std::size_t>(npoints), frac(theta));
  cloud.x.assign(static_cast<std::size_t>(npoints), x);
  return cloud;
}

// uniform grid on a horizontal segment (pointwise dimension 1 at the middle)
inline PointCloud make_segment_cloud(std::int64_t npoints, double length = 0.8) {
  PointCloud cloud;
  cloud.tag = "segment";
  cloud.theta.reserve(static_cast<std::size_t>(npoints));
  cloud.x.assign(static_cast<std::size_t>(npoints), 0.5);
  for (std::int64_t i = 0; i < npoints; ++i)
    cloud.theta.push_back(length * static_cast<double>(i) / static_cast<double>(npoints - 1));
  return cloud;
}

}  // namespace snalab
