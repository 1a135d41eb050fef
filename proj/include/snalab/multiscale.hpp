#pragma once

// Multiscale machinery: slope-exponent constants fitting, the nested critical
// regions I_n, the recurrence conditions (F1)/(F2)/(E), the peak-avoiding sets
// Omega_j^n, the closed-form Lipschitz bound L_j (log space: the values exceed
// double range), and the combinatorial orbit counters with their indices.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "snalab/common.hpp"
#include "snalab/parallel.hpp"
#include "snalab/qpf_map.hpp"
#include "snalab/torus.hpp"

namespace snalab {

struct MultiscaleConstants {
  double alpha = 0.0;  // slope scale: alpha^{-p} <= f' <= alpha^{p} on X
  double p = 0.0;      // exponent, >= sqrt(2)
  double S = 0.0;      // theta-Lipschitz bound of the fiber family
  double c = 0.0;      // contracting region C = [c, 1]
  double e = 0.0;      // expanding region E = [0, e]
  double c0 = 0.0;     // epsilon-sequence prefactor (eps_0 = c0)
  std::int64_t K0 = 0;
  std::int64_t kappa = 2;
  std::int64_t M0 = 0;
  double dio_C = 0.2;    // Diophantine constants, reporting only
  double dio_eta = 1.01;

  double K_real(std::int64_t level) const {
    return static_cast<double>(K0) * std::pow(static_cast<double>(kappa), static_cast<double>(level));
  }

  std::int64_t K(std::int64_t level) const {
    double k = K_real(level);
    if (k > 4.0e18) throw SnaLabError("K_n exceeds integer range at level " + std::to_string(level));
    return static_cast<std::int64_t>(k);
  }

  // M_0 given; M_{n} = K_{n-1} M_{n-1} (the minimum of the allowed window)
  double M_real(std::int64_t level) const {
    if (level < 0) return 0.0;  // M_{-1} = 0 convention
    double m = static_cast<double>(M0);
    for (std::int64_t l = 1; l <= level; ++l) m *= K_real(l - 1);
    return m;
  }

  std::int64_t M(std::int64_t level) const {
    double m = M_real(level);
    if (m > 4.0e18) throw SnaLabError("M_n exceeds integer range at level " + std::to_string(level));
    return static_cast<std::int64_t>(m);
  }

  // b_0 = 1, b_n = (1 - 1/K_{n-1}) b_{n-1}
  double b_partial(std::int64_t n) const {
    double b = 1.0;
    for (std::int64_t l = 0; l < n; ++l) b *= 1.0 - 1.0 / K_real(l);
    return b;
  }

  // limit of b_n; the factors reach 1.0 exactly once K_l > 2^53
  double b_limit() const {
    double b = 1.0;
    for (std::int64_t l = 0; l < 128; ++l) {
      double f = 1.0 - 1.0 / K_real(l);
      if (f >= 1.0) break;
      b *= f;
    }
    return b;
  }

  double lambda() const {
    double b = b_limit();
    return 2.0 * b * b / p - p * (1.0 - b * b);
  }

  // log eps_n = log c0 - M_{n-1} * b/(2p) * log alpha  (M_{-1} = 0)
  double eps_log(std::int64_t n) const {
    return std::log(c0) - M_real(n - 1) * (b_limit() / (2.0 * p)) * std::log(alpha);
  }

  double eps(std::int64_t n) const { return std::exp(eps_log(n)); }

  double b_threshold() const { return std::sqrt((p * p + 1.0) / (p * p + 2.0)); }

  // throws on any violated structural invariant
  void validate() const {
    if (!(alpha > 1.0)) throw SnaLabError("constants: alpha must exceed 1");
    if (!(p >= std::sqrt(2.0))) throw SnaLabError("constants: p must be >= sqrt(2)");
    if (!(0.0 < e && e < c && c < 1.0)) throw SnaLabError("constants: need 0 < e < c < 1");
    if (!(c0 > 0.0)) throw SnaLabError("constants: c0 must be positive");
    if (K0 < 2 || kappa < 2 || M0 < 2) throw SnaLabError("constants: K0, kappa, M0 must be >= 2");
    if (!(b_limit() > b_threshold()))
      throw SnaLabError("constants: b-invariant b > sqrt((p^2+1)/(p^2+2)) violated");
    if (!(lambda() > 0.0)) throw SnaLabError("constants: lambda must be positive");
  }
};

struct CriticalRegion {
  std::int64_t level = 0;
  Arc arc;
};

// ---------------------------------------------------------------------------
// constants fitting

struct FitGridConfig {
  std::vector<double> p_list{1.5, 2.0, 3.0, 4.0};
  // log-spaced alpha grid: 10^(k/100), k = 1..400
  std::int64_t alpha_decades_steps = 400;
  std::vector<double> c_grid;  // candidate contracting thresholds (ascending)
  std::vector<double> e_grid;  // candidate expanding thresholds (descending)
  std::vector<std::int64_t> K0_list{8, 16, 32};
  std::int64_t kappa = 2;
  std::vector<std::int64_t> M0_list{2, 3, 4};
  double c0_headroom = 1.02;      // c0 = headroom * |I_0| so (E)_0 holds
  std::int64_t region_grid = 1 << 17;  // grid for the I_0 scan behind the c0 choice
  std::int64_t slope_grid_theta = 4096;
  std::int64_t slope_grid_x = 64;
};

// default grids straddle the slope-1 point of the arctan fiber map
inline FitGridConfig make_default_fit_grid(const ArctanMap& map) {
  FitGridConfig cfg;
  double xs = map.x_star();
  for (int j = 2; j <= 7; ++j)
    if (j * xs < 1.0) cfg.c_grid.push_back(j * xs);
  for (int k = 1; k <= 12; ++k) cfg.e_grid.push_back(xs / std::pow(2.0, k));
  return cfg;
}

struct SlopeEstimates {
  double sup_X = 0.0;  // sup of the fiber slope on X
  double inf_X = 0.0;  // inf of the fiber slope on X
};

// Grid scan refined with the interval endpoints and x = 0 (the arctan slope is
// unimodal with its peak at 0, so these candidates capture the true extrema).
template <class Map>
double slope_sup_on(const Map& map, double x_lo, double x_hi, std::int64_t grid_theta,
                    std::int64_t grid_x) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::int64_t it = 0; it < grid_theta; ++it) {
    double theta = static_cast<double>(it) / static_cast<double>(grid_theta);
    for (std::int64_t ix = 0; ix <= grid_x; ++ix) {
      double x = x_lo + (x_hi - x_lo) * static_cast<double>(ix) / static_cast<double>(grid_x);
      best = std::max(best, map.fiber_derivative(theta, x));
    }
    if (x_lo < 0.0 && x_hi > 0.0) best = std::max(best, map.fiber_derivative(theta, 0.0));
  }
  return best;
}

template <class Map>
double slope_inf_on(const Map& map, double x_lo, double x_hi, std::int64_t grid_theta,
                    std::int64_t grid_x) {
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t it = 0; it < grid_theta; ++it) {
    double theta = static_cast<double>(it) / static_cast<double>(grid_theta);
    for (std::int64_t ix = 0; ix <= grid_x; ++ix) {
      double x = x_lo + (x_hi - x_lo) * static_cast<double>(ix) / static_cast<double>(grid_x);
      best = std::min(best, map.fiber_derivative(theta, x));
    }
  }
  return best;
}

struct FitResult {
  std::optional<MultiscaleConstants> constants;
  std::string violated;  // the deepest constraint that blocked the search, when infeasible
  double sup_X = 0.0, inf_X = 0.0;
  double b = 0.0, lambda = 0.0;
  double i0_length = -1.0;  // length of I_0 behind the c0 choice (-1: none computed)
};

template <class Map>
CriticalRegion compute_I0(const Map& map, const MultiscaleConstants& constants, std::int64_t m);

// Search the lattice for constants satisfying the slope-exponent inequalities,
// the b-invariant, and lambda > 0; (p, K0) pairs are tried in decreasing-lambda
// order, everything else first-feasible. c0 is then set so (E)_0 holds.
template <class Map>
FitResult fit_constants(const Map& map, const FitGridConfig& cfg) {
  FitResult result;
  result.sup_X = slope_sup_on(map, map.x_lo(), map.x_hi(), cfg.slope_grid_theta, cfg.slope_grid_x);
  result.inf_X = slope_inf_on(map, map.x_lo(), map.x_hi(), cfg.slope_grid_theta, cfg.slope_grid_x);

  // deepest search stage reached, for the infeasibility citation
  int deepest = -1;
  const char* stage_names[] = {
      "p >= sqrt(2) with b-invariant b > sqrt((p^2+1)/(p^2+2)) and lambda > 0",
      "slope range on X (alpha^p >= sup slope and alpha^{-p} <= inf slope)",
      "expansion on E (alpha^{2/p} <= inf slope on [0, e] for some grid e)",
      "contraction on C (alpha^{-2/p} >= sup slope on [c, 1] for some grid c)",
  };

  struct Candidate {
    double p;
    std::int64_t K0;
    double lambda;
  };
  std::vector<Candidate> candidates;
  for (double p : cfg.p_list) {
    if (!(p >= std::sqrt(2.0))) continue;
    for (std::int64_t K0 : cfg.K0_list) {
      MultiscaleConstants probe;
      probe.p = p;
      probe.K0 = K0;
      probe.kappa = cfg.kappa;
      double b = probe.b_limit();
      if (!(b > probe.b_threshold())) continue;
      double lam = probe.lambda();
      if (!(lam > 0.0)) continue;
      candidates.push_back({p, K0, lam});
    }
  }
  if (candidates.empty()) {
    result.violated = stage_names[0];
    return result;
  }
  deepest = 0;
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.lambda > b.lambda; });

  // slope extrema per grid threshold are alpha-independent: scan them once
  std::vector<double> e_inf_slope;
  for (double e : cfg.e_grid)
    e_inf_slope.push_back(e > 0.0 && e < 1.0
                              ? slope_inf_on(map, 0.0, e, cfg.slope_grid_theta, cfg.slope_grid_x)
                              : -1.0);
  std::vector<double> c_sup_slope;
  for (double c : cfg.c_grid)
    c_sup_slope.push_back(c > 0.0 && c < 1.0
                              ? slope_sup_on(map, c, map.x_hi(), cfg.slope_grid_theta,
                                             cfg.slope_grid_x)
                              : std::numeric_limits<double>::infinity());

  for (const Candidate& cand : candidates) {
    for (std::int64_t k = 1; k <= cfg.alpha_decades_steps; ++k) {
      double alpha = std::pow(10.0, static_cast<double>(k) / 100.0);
      double alpha_p = std::pow(alpha, cand.p);
      if (!(alpha_p >= result.sup_X && 1.0 / alpha_p <= result.inf_X)) continue;
      deepest = std::max(deepest, 1);

      double expansion_needed = std::pow(alpha, 2.0 / cand.p);
      double e_pick = -1.0;
      for (std::size_t ie = 0; ie < cfg.e_grid.size(); ++ie) {  // descending: largest feasible e
        if (e_inf_slope[ie] >= expansion_needed) {
          e_pick = cfg.e_grid[ie];
          break;
        }
      }
      if (e_pick < 0.0) continue;
      deepest = std::max(deepest, 2);

      double contraction_needed = 1.0 / expansion_needed;  // alpha^{-2/p}
      double c_pick = -1.0;
      for (std::size_t ic = 0; ic < cfg.c_grid.size(); ++ic) {  // ascending: smallest feasible c
        if (!(cfg.c_grid[ic] > e_pick)) continue;
        if (c_sup_slope[ic] <= contraction_needed) {
          c_pick = cfg.c_grid[ic];
          break;
        }
      }
      if (c_pick < 0.0) continue;
      deepest = std::max(deepest, 3);

      MultiscaleConstants constants;
      constants.alpha = alpha;
      constants.p = cand.p;
      constants.S = map.theta_lipschitz_bound();
      constants.c = c_pick;
      constants.e = e_pick;
      constants.K0 = cand.K0;
      constants.kappa = cfg.kappa;
      constants.M0 = cfg.M0_list.front();
      constants.c0 = 1.0;  // provisional: fixed below from |I_0|
      try {
        CriticalRegion i0 = compute_I0(map, constants, cfg.region_grid);
        result.i0_length = i0.arc.len;
        constants.c0 = cfg.c0_headroom * std::max(i0.arc.len, 1e-6);
      } catch (const EmptyRegion&) {
        result.i0_length = 0.0;
        constants.c0 = 1.0;
      }
      constants.validate();
      result.constants = constants;
      result.b = constants.b_limit();
      result.lambda = constants.lambda();
      return result;
    }
  }
  // the blocker is the stage after the deepest one any candidate passed
  result.violated = stage_names[deepest < 0 ? 0 : std::min(deepest + 1, 3)];
  return result;
}

// ---------------------------------------------------------------------------
// critical regions

namespace detail {

// forward orbit value f^steps_{theta - steps*omega}(x) using one-multiplication bases
template <class Map>
double forward_from_shifted(const Map& map, double omega, double theta, std::int64_t steps,
                            double x) {
  for (std::int64_t k = 0; k < steps; ++k) {
    double base = frac(theta + static_cast<double>(k - steps) * omega);
    x = map.apply(base, x);
  }
  return x;
}

// backward orbit value f^{-steps}_{theta + steps*omega}(x); throws InverseDomainError
template <class Map>
double backward_from_shifted(const Map& map, double omega, double theta, std::int64_t steps,
                             double x) {
  for (std::int64_t k = 0; k < steps; ++k) {
    double base = frac(theta + static_cast<double>(steps - k - 1) * omega);
    x = map.apply_inverse(base, x);
  }
  return x;
}

}  // namespace detail

// I_0 = smallest closed arc containing {theta : f_theta(e) < c}; by fiber
// monotonicity this is exactly the set where the one-step climb from E to C
// fails. Endpoints are sharpened by bisection on f_theta(e) - c.
template <class Map>
CriticalRegion compute_I0(const Map& map, const MultiscaleConstants& constants, std::int64_t m) {
  auto violates = [&](double theta) { return map.apply(theta, constants.e) < constants.c; };

  std::vector<char> flags(static_cast<std::size_t>(m));
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < m; ++i) {
    bool v = violates(static_cast<double>(i) / static_cast<double>(m));
    flags[static_cast<std::size_t>(i)] = v ? 1 : 0;
    count += v;
  }
  if (count == 0) throw EmptyRegion("compute_I0: no grid point violates the climb condition");
  if (count == m) return CriticalRegion{0, Arc{0.0, 1.0}};

  Arc cells = smallest_enclosing_arc_of_grid(flags);
  double step = 1.0 / static_cast<double>(m);

  // refine each endpoint inside the adjacent non-violating cell
  auto refine = [&](double inside, double outside) {
    for (int it = 0; it < 60; ++it) {
      double mid = inside + 0.5 * (outside - inside);
      if (violates(frac(mid)))
        inside = mid;
      else
        outside = mid;
    }
    return frac(inside);
  };
  double lo = refine(cells.lo, cells.lo - step);
  double hi = refine(cells.lo + cells.len, cells.lo + cells.len + step);
  return CriticalRegion{0, Arc{lo, frac(hi - lo)}};
}

// One refinement step of the region recursion: keep theta in I_n whose
// contracted forward image of [c, 1] still meets the expanded backward image
// of [0, e]. A dead backward orbit of 0 excludes theta; a dead backward orbit
// of e only uncaps the interval's top at the phase ceiling.
template <class Map>
CriticalRegion refine_critical_region(const Map& map, double omega, const CriticalRegion& I_n,
                                      const MultiscaleConstants& constants, std::int64_t m) {
  const std::int64_t Mn = constants.M(I_n.level);
  const std::int64_t steps_f = Mn - 1;
  const std::int64_t steps_b = Mn + 1;

  auto qualifies = [&](double theta) {
    double f_c = detail::forward_from_shifted(map, omega, theta, steps_f, constants.c);
    double f_1 = detail::forward_from_shifted(map, omega, theta, steps_f, map.x_hi());
    double b_0, b_e;
    try {
      b_0 = detail::backward_from_shifted(map, omega, theta, steps_b, 0.0);
    } catch (const InverseDomainError&) {
      return false;  // the backward orbit of 0 left the conjugacy region
    }
    try {
      b_e = detail::backward_from_shifted(map, omega, theta, steps_b, constants.e);
    } catch (const InverseDomainError&) {
      b_e = map.x_hi();
    }
    return f_c <= b_e && b_0 <= f_1;
  };

  const bool full = I_n.arc.full();
  const double span = full ? 1.0 : I_n.arc.len;
  auto theta_at = [&](double t) { return frac(I_n.arc.lo + t); };  // arc-local coordinate

  std::vector<char> flags(static_cast<std::size_t>(m));
  std::vector<double> ts(static_cast<std::size_t>(m));
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < m; ++i) {
    double t = full ? span * static_cast<double>(i) / static_cast<double>(m)
                    : span * static_cast<double>(i) / static_cast<double>(m - 1);
    ts[static_cast<std::size_t>(i)] = t;
    bool q = qualifies(theta_at(t));
    flags[static_cast<std::size_t>(i)] = q ? 1 : 0;
    count += q;
  }
  if (count == 0)
    throw EmptyRegion("refine_critical_region: no theta qualifies at level " +
                      std::to_string(I_n.level + 1));

  auto refine_boundary = [&](double t_in, double t_out) {
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (t_in + t_out);
      if (qualifies(theta_at(mid)))
        t_in = mid;
      else
        t_out = mid;
    }
    return t_in;
  };

  if (full && count == m) return CriticalRegion{I_n.level + 1, Arc{0.0, 1.0}};

  double t_lo, t_hi;
  if (full) {
    Arc cells = smallest_enclosing_arc_of_grid(flags);
    double step = 1.0 / static_cast<double>(m);
    // work in the covering coordinate so the arc does not wrap mid-interval
    double t_first = cells.lo;
    double t_last = cells.lo + cells.len;
    t_lo = refine_boundary(t_first, t_first - step);
    t_hi = refine_boundary(t_last, t_last + step);
    return CriticalRegion{I_n.level + 1, Arc{frac(I_n.arc.lo + t_lo), frac(t_hi - t_lo)}};
  }

  std::int64_t first = 0, last = m - 1;
  while (!flags[static_cast<std::size_t>(first)]) ++first;
  while (!flags[static_cast<std::size_t>(last)]) --last;
  t_lo = first == 0 ? ts[0]
                    : refine_boundary(ts[static_cast<std::size_t>(first)],
                                      ts[static_cast<std::size_t>(first - 1)]);
  t_hi = last == m - 1 ? ts[static_cast<std::size_t>(last)]
                       : refine_boundary(ts[static_cast<std::size_t>(last)],
                                         ts[static_cast<std::size_t>(last + 1)]);
  return CriticalRegion{I_n.level + 1, Arc{theta_at(t_lo), t_hi - t_lo}};
}

// ---------------------------------------------------------------------------
// region family and the shifted-union zones

struct RegionFamily {
  std::vector<CriticalRegion> regions;  // nonempty levels 0..depth
  MultiscaleConstants constants;
  double omega = 0.0;
  bool truncated_by_empty = false;   // recursion ended on an empty refinement
  bool truncated_by_length = false;  // recursion ended on the length floor

  std::int64_t depth() const { return static_cast<std::int64_t>(regions.size()) - 1; }

  // Z^-_n: shifts l in [-(M_j - 2), 0] of I_j, j = 0..n
  std::vector<Arc> Z_minus(std::int64_t n) const { return shifted_union(n, true, 0); }
  // Z^+_n: shifts l in [1, M_j]
  std::vector<Arc> Z_plus(std::int64_t n) const { return shifted_union(n, false, 0); }
  // V_n: shifts l in [1, M_j + 1]
  std::vector<Arc> V(std::int64_t n) const { return shifted_union(n, false, 1); }
  // W_n: shifts l in [-(M_j - 1), 0]
  std::vector<Arc> W(std::int64_t n) const { return shifted_union(n, true, 1); }

 private:
  // negative_side: l in [-(M_j - 2 + widen), 0]; else l in [1, M_j + widen]
  std::vector<Arc> shifted_union(std::int64_t n, bool negative_side, std::int64_t widen) const {
    std::vector<Arc> arcs;
    const std::int64_t top = std::min<std::int64_t>(n, depth());
    for (std::int64_t j = 0; j <= top; ++j) {
      const std::int64_t Mj = constants.M(j);
      std::int64_t l_lo = negative_side ? -(Mj - 2 + widen) : 1;
      std::int64_t l_hi = negative_side ? 0 : Mj + widen;
      for (std::int64_t l = l_lo; l <= l_hi; ++l)
        arcs.push_back(arc_shift(regions[static_cast<std::size_t>(j)].arc,
                                 static_cast<double>(l) * omega));
    }
    return arcs;
  }
};

// Run the recursion until a refinement comes back empty, the arc length drops
// below min_len, or max_levels is hit. Depth 1-2 is the expected desk reach:
// the orbit lengths M_n grow like K0^n 2^(n(n-1)/2).
template <class Map>
RegionFamily build_region_family(const Map& map, double omega, const MultiscaleConstants& constants,
                                 std::int64_t m, std::int64_t max_levels = 6,
                                 double min_len = 1e-10) {
  RegionFamily family;
  family.constants = constants;
  family.omega = omega;
  family.regions.push_back(compute_I0(map, constants, m));
  while (family.depth() < max_levels) {
    const CriticalRegion& last = family.regions.back();
    if (!last.arc.full() && last.arc.len <= min_len) {
      family.truncated_by_length = true;
      break;
    }
    try {
      family.regions.push_back(refine_critical_region(map, omega, last, constants, m));
    } catch (const EmptyRegion&) {
      family.truncated_by_empty = true;
      break;
    }
  }
  return family;
}

// ---------------------------------------------------------------------------
// recurrence conditions

struct ConditionResult {
  bool ok = false;
  std::string witness;      // human-readable failure witness
  std::int64_t witness_k = -1;   // violating shift (F1)
  double margin = 0.0;      // distance-vs-epsilon or length-vs-epsilon slack
};

// (F1)_j core: d(I_j, union of its first 2 K_j M_j rotated copies) > eps_j
inline ConditionResult check_F1(const CriticalRegion& I_j, double omega,
                                const MultiscaleConstants& constants) {
  ConditionResult r;
  const double eps_j = constants.eps(I_j.level);
  const std::int64_t k_max = 2 * constants.K(I_j.level) * constants.M(I_j.level);
  double min_d = std::numeric_limits<double>::infinity();
  std::int64_t min_k = -1;
  for (std::int64_t k = 1; k <= k_max; ++k) {
    double d = arc_distance(I_j.arc, arc_shift(I_j.arc, static_cast<double>(k) * omega));
    if (d < min_d) {
      min_d = d;
      min_k = k;
    }
    if (!(min_d > eps_j)) break;  // violation already certain
  }
  r.ok = min_d > eps_j;
  r.margin = min_d - eps_j;
  if (!r.ok) {
    r.witness_k = min_k;
    r.witness = "shift k = " + std::to_string(min_k) + " comes within " + format_g17(min_d) +
                " <= eps_j = " + format_g17(eps_j);
  }
  return r;
}

// (F2)_j core: (I_j - (M_j-1) omega  u  I_j + (M_j+1) omega) misses V_{j-1} u W_{j-1}
inline ConditionResult check_F2(const CriticalRegion& I_j, const RegionFamily& family,
                                double omega, const MultiscaleConstants& constants) {
  ConditionResult r;
  const std::int64_t Mj = constants.M(I_j.level);
  const Arc left = arc_shift(I_j.arc, -static_cast<double>(Mj - 1) * omega);
  const Arc right = arc_shift(I_j.arc, static_cast<double>(Mj + 1) * omega);

  std::vector<Arc> obstacles = family.V(I_j.level - 1);
  std::vector<Arc> w = family.W(I_j.level - 1);
  obstacles.insert(obstacles.end(), w.begin(), w.end());

  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (arc_distance(left, obstacles[i]) == 0.0) {
      r.ok = false;
      r.witness = "I_j - (M_j-1)w intersects obstacle arc #" + std::to_string(i);
      return r;
    }
    if (arc_distance(right, obstacles[i]) == 0.0) {
      r.ok = false;
      r.witness = "I_j + (M_j+1)w intersects obstacle arc #" + std::to_string(i);
      return r;
    }
  }
  r.ok = true;
  return r;
}

// (E)_n: |I_n| < eps_n; an empty level is trivially fine
inline bool check_E(const std::optional<CriticalRegion>& I_n, std::int64_t level,
                    const MultiscaleConstants& constants) {
  if (!I_n.has_value()) return true;
  return I_n->arc.len < constants.eps(level);
}

inline bool check_E(const CriticalRegion& I_n, const MultiscaleConstants& constants) {
  return I_n.arc.len < constants.eps(I_n.level);
}

// ---------------------------------------------------------------------------
// peak-avoiding masks and their measure bound

// Omega_j^n mask on an m-grid: true iff theta_i avoids I_k + l*omega for all
// computed levels k >= j and shifts l in [M_{k-1}, min(n, 2 K_k M_k)]. Levels
// beyond the family's truncation depth contribute nothing (documented).
inline std::vector<char> omega_mask(std::int64_t j, std::int64_t n, const RegionFamily& family,
                                    double omega, const MultiscaleConstants& constants,
                                    std::int64_t m) {
  std::vector<char> mask(static_cast<std::size_t>(m), 1);
  for (std::int64_t k = j; k <= family.depth(); ++k) {
    if (k < 0) continue;
    const Arc& arc = family.regions[static_cast<std::size_t>(k)].arc;
    const std::int64_t l_lo = k == 0 ? 0 : constants.M(k - 1);
    double l_hi_real = std::min(static_cast<double>(n),
                                2.0 * constants.K_real(k) * constants.M_real(k));
    const auto l_hi = static_cast<std::int64_t>(l_hi_real);
    for (std::int64_t l = l_lo; l <= l_hi; ++l) {
      if (arc.full()) {
        std::fill(mask.begin(), mask.end(), 0);
        return mask;
      }
      Arc shifted = arc_shift(arc, static_cast<double>(l) * omega);
      // flag the closed arc's grid cells
      auto first = static_cast<std::int64_t>(std::ceil(shifted.lo * static_cast<double>(m) - 1e-9));
      auto last = static_cast<std::int64_t>(
          std::floor((shifted.lo + shifted.len) * static_cast<double>(m) + 1e-9));
      for (std::int64_t i = first; i <= last; ++i) {
        std::int64_t cell = ((i % m) + m) % m;
        mask[static_cast<std::size_t>(cell)] = 0;
      }
    }
  }
  return mask;
}

// Truncated union bound sum_{k=j} 2 K_k M_k eps_k plus a tail beyond k_max.
// Tail terms use max(2 K M eps, sqrt(eps)): the sqrt majorant the series
// comparison relies on, kept safe where it has not kicked in yet.
inline double omega_measure_bound(std::int64_t j, const MultiscaleConstants& constants,
                                  std::int64_t k_max) {
  double total = 0.0;
  for (std::int64_t k = j; k <= k_max; ++k) {
    double term_log = std::log(2.0) + std::log(constants.K_real(k)) +
                      std::log(constants.M_real(k)) + constants.eps_log(k);
    total += std::exp(term_log);
  }
  for (std::int64_t k = k_max + 1; k <= k_max + 64; ++k) {
    double full_log = std::log(2.0) + std::log(constants.K_real(k)) +
                      std::log(constants.M_real(k)) + constants.eps_log(k);
    double sqrt_log = 0.5 * constants.eps_log(k);
    double term = std::exp(std::max(full_log, sqrt_log));
    total += term;
    if (term < 1e-300) break;
  }
  return total;
}

// ---------------------------------------------------------------------------
// closed-form Lipschitz bound (log space)

struct LipschitzBound {
  double log_value = 0.0;      // natural log of L_j (the linear value overflows double)
  double log_tail_part = 0.0;  // log of the geometric tail sum
  double log_power_part = 0.0; // log of the finite alpha-power sum
  double ratio = 0.0;          // r = alpha^(2p(1-b^2) - 2(2b^2-1)/p), must be < 1
  double required_C = 0.0;     // smallest C with L_j <= eps_j^(-C K_{j-1})
  bool eps_power_ok = false;   // required_C <= the stored Diophantine C
};

// L_j = S * ( sum_{l >= l0} r^l + sum_{l=0}^{l0+1} alpha^{p l} ) with
// l0 = 2 K_{j-1} M_{j-1} - M_{j-1} - 1, evaluated in log space.
inline LipschitzBound lipschitz_bound(std::int64_t j, const MultiscaleConstants& constants) {
  if (j < 1) throw ConfigError("lipschitz_bound: defined for levels j >= 1");
  const double b = constants.b_limit();
  const double b2 = b * b;
  const double p = constants.p;
  const double ln_alpha = std::log(constants.alpha);
  const double expo = 2.0 * p * (1.0 - b2) - 2.0 * (2.0 * b2 - 1.0) / p;
  if (expo >= 0.0)
    throw DivergentSeries("lipschitz_bound: tail exponent >= 0 (lambda <= 0 regime)");

  const std::int64_t l0 = 2 * constants.K(j - 1) * constants.M(j - 1) - constants.M(j - 1) - 1;
  const std::int64_t l1 = l0 + 1;

  LipschitzBound out;
  out.ratio = std::exp(expo * ln_alpha);
  // geometric tail: r^{l0} / (1 - r)
  out.log_tail_part = static_cast<double>(l0) * expo * ln_alpha - std::log1p(-out.ratio);
  // finite powers: (alpha^{p(l1+1)} - 1) / (alpha^p - 1)
  double top = p * static_cast<double>(l1 + 1) * ln_alpha;
  out.log_power_part = top + std::log1p(-std::exp(-top)) - std::log(std::expm1(p * ln_alpha));
  out.log_value = std::log(constants.S) + log_add_exp(out.log_tail_part, out.log_power_part);

  const double neg_log_eps = -constants.eps_log(j);
  if (neg_log_eps > 0.0) {
    out.required_C = out.log_value / (constants.K_real(j - 1) * neg_log_eps);
    out.eps_power_ok = out.required_C <= constants.dio_C;
  } else {
    out.required_C = std::numeric_limits<double>::infinity();
    out.eps_power_ok = false;
  }
  return out;
}

// brute-force log-space summation oracle for the same quantity
inline double lipschitz_bound_brute_log(std::int64_t j, const MultiscaleConstants& constants) {
  if (j < 1) throw ConfigError("lipschitz_bound_brute_log: defined for levels j >= 1");
  const double b = constants.b_limit();
  const double b2 = b * b;
  const double p = constants.p;
  const double ln_alpha = std::log(constants.alpha);
  const double expo = 2.0 * p * (1.0 - b2) - 2.0 * (2.0 * b2 - 1.0) / p;
  if (expo >= 0.0) throw DivergentSeries("lipschitz_bound_brute_log: tail exponent >= 0");

  const std::int64_t l0 = 2 * constants.K(j - 1) * constants.M(j - 1) - constants.M(j - 1) - 1;
  const std::int64_t l1 = l0 + 1;

  double acc = -std::numeric_limits<double>::infinity();
  for (std::int64_t l = l0;; ++l) {
    double term = static_cast<double>(l) * expo * ln_alpha;
    double next = log_add_exp(acc, term);
    if (l > l0 && next - acc < 1e-18) {
      acc = next;
      break;
    }
    acc = next;
  }
  for (std::int64_t l = 0; l <= l1; ++l)
    acc = log_add_exp(acc, p * static_cast<double>(l) * ln_alpha);
  return std::log(constants.S) + acc;
}

// ---------------------------------------------------------------------------
// combinatorial counters

// #{ l in [k, n-1] : f^l(x) in C = [c, 1] and theta + l*omega not in I_0 }
template <class Map>
std::int64_t count_P(const Map& map, double omega, double theta, double x, std::int64_t k,
                     std::int64_t n, const Arc& I0, const MultiscaleConstants& constants) {
  if (k < 0 || k > n) throw ConfigError("count_P: need 0 <= k <= n");
  std::int64_t count = 0;
  double cur_theta = frac(theta);
  double cur_x = x;
  for (std::int64_t l = 0; l < n; ++l) {
    if (l >= k) {
      bool in_C = cur_x >= constants.c && cur_x <= map.x_hi();
      if (in_C && !point_in_arc(I0, rotate(theta, omega, l))) ++count;
    }
    cur_x = map.apply(cur_theta, cur_x);
    cur_theta = frac(cur_theta + omega);
  }
  return count;
}

// #{ l in [k, n-1] : f^{-l}(x) in E = [0, e] and theta - l*omega not in I_0 + omega }
template <class Map>
std::int64_t count_Q(const Map& map, double omega, double theta, double x, std::int64_t k,
                     std::int64_t n, const Arc& I0, const MultiscaleConstants& constants) {
  if (k < 0 || k > n) throw ConfigError("count_Q: need 0 <= k <= n");
  const Arc I0_shift = arc_shift(I0, omega);
  std::int64_t count = 0;
  double cur_theta = frac(theta);
  double cur_x = x;
  for (std::int64_t l = 0; l < n; ++l) {
    if (l >= k) {
      bool in_E = cur_x >= 0.0 && cur_x <= constants.e;
      if (in_E && !point_in_arc(I0_shift, rotate(theta, omega, -l))) ++count;
    }
    double base = frac(cur_theta - omega);
    cur_x = map.apply_inverse(base, cur_x);
    cur_theta = base;
  }
  return count;
}

// max{ p : some l in [M_{p-1}, min(n, n-k+M_p+1)] has theta - l*omega in I_p }, -1 if none
inline std::int64_t p_index(double theta, std::int64_t k, std::int64_t n,
                            const RegionFamily& family, double omega,
                            const MultiscaleConstants& constants) {
  for (std::int64_t p = family.depth(); p >= 0; --p) {
    const Arc& arc = family.regions[static_cast<std::size_t>(p)].arc;
    const std::int64_t l_lo = p == 0 ? 0 : constants.M(p - 1);
    const std::int64_t l_hi = std::min(n, n - k + constants.M(p) + 1);
    for (std::int64_t l = l_lo; l <= l_hi; ++l)
      if (point_in_arc(arc, rotate(theta, omega, -l))) return p;
  }
  return -1;
}

// max{ l : n - k >= 2 K_l M_l - M_l - 1 }, -1 if none
inline std::int64_t i_index(std::int64_t k, std::int64_t n, const MultiscaleConstants& constants) {
  const auto budget = static_cast<double>(n - k);
  std::int64_t best = -1;
  for (std::int64_t l = 0; l < 64; ++l) {
    double threshold = 2.0 * constants.K_real(l) * constants.M_real(l) - constants.M_real(l) - 1.0;
    if (threshold > budget) break;
    best = l;
  }
  return best;
}

enum class BKind { kB1, kB2 };

// (B1): x in C and theta outside Z^-_{level-1}; (B2): x in E and theta outside Z^+_{level-1}
template <class Map>
bool check_B(const Map& map, double theta, double x, std::int64_t level,
             const RegionFamily& family, const MultiscaleConstants& constants, BKind which) {
  if (which == BKind::kB1) {
    if (!(x >= constants.c && x <= map.x_hi())) return false;
    return !point_in_arcs(frac(theta), family.Z_minus(level - 1));
  }
  if (!(x >= 0.0 && x <= constants.e)) return false;
  return !point_in_arcs(frac(theta), family.Z_plus(level - 1));
}

}  // namespace snalab
