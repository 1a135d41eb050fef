#pragma once

// Batch commands behind the sna-lab entry point: config parsing, resolution of
// beta = "critical" through the cache sidecar, and the self-check battery.

#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "snalab/bifurcation.hpp"
#include "snalab/boundary_lines.hpp"
#include "snalab/common.hpp"
#include "snalab/dimension.hpp"
#include "snalab/io.hpp"
#include "snalab/multiscale.hpp"
#include "snalab/qpf_map.hpp"
#include "snalab/torus.hpp"

namespace snalab {

struct RunConfig {
  std::string config_path;
  nlohmann::json raw;
  double a = 40.0;
  nlohmann::json beta_spec = "critical";
  double omega = golden_omega();
  std::uint64_t seed = 0;
};

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

inline nlohmann::json block_of(const RunConfig& cfg, const char* name) {
  if (cfg.raw.is_object() && cfg.raw.contains(name)) return cfg.raw.at(name);
  return nlohmann::json::object();
}

}  // namespace detail

inline RunConfig load_config(const std::string& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config file not found: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ConfigError("config is not a JSON object: " + path);

  static const std::vector<std::string> known = {
      "family", "rotation", "seed",       "find_betac", "lines",
      "dimension", "lyapunov", "multiscale", "minimality", "verify"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown config key: " + it.key());
  }

  RunConfig cfg;
  cfg.config_path = path;
  cfg.raw = j;
  if (j.contains("family")) {
    const nlohmann::json& fam = j.at("family");
    if (!fam.is_object()) throw ConfigError("family must be an object");
    for (auto it = fam.begin(); it != fam.end(); ++it)
      if (it.key() != "a" && it.key() != "beta")
        throw ConfigError("unknown family key: " + it.key());
    cfg.a = detail::get_or(fam, "a", 40.0);
    if (!(cfg.a > 0.0)) throw ConfigError("family.a must be positive");
    if (fam.contains("beta")) {
      const nlohmann::json& b = fam.at("beta");
      if (!(b.is_number() || (b.is_string() && b.get<std::string>() == "critical")))
        throw ConfigError("family.beta must be a number or \"critical\"");
      cfg.beta_spec = b;
    }
  }
  if (j.contains("rotation")) {
    const nlohmann::json& r = j.at("rotation");
    if (r.is_string()) {
      if (r.get<std::string>() != "golden") throw ConfigError("rotation: unknown name");
      cfg.omega = golden_omega();
    } else if (r.is_number()) {
      cfg.omega = r.get<double>();
      if (!(cfg.omega > 0.0 && cfg.omega < 1.0))
        throw ConfigError("rotation must lie strictly between 0 and 1");
    } else {
      throw ConfigError("rotation must be \"golden\" or a number");
    }
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (seed_override.has_value()) cfg.seed = *seed_override;
  return cfg;
}

// Resolve the family's beta: a literal number passes through; "critical" uses
// the cache sidecar next to the config (computing and storing on a miss) and
// resolves to the bracket's lower endpoint, the last beta proven to survive.
inline double resolve_beta(const RunConfig& cfg) {
  if (cfg.beta_spec.is_number()) return cfg.beta_spec.get<double>();

  nlohmann::json block = detail::block_of(cfg, "find_betac");
  const double tol = detail::get_or(block, "tol", 1e-5);
  const auto budget = detail::get_or<std::int64_t>(block, "budget", 10000);
  const auto m = detail::get_or<std::int64_t>(block, "m", 4096);

  const std::string cache_path = betac_cache_path(cfg.config_path);
  const std::string key = betac_cache_key(cfg.a, tol, budget, m);
  nlohmann::json cache = load_betac_cache(cache_path);
  if (auto hit = lookup_betac(cache, key)) return hit->lo;

  BetaCBracket bracket = find_beta_c(cfg.a, cfg.omega, tol, budget, m);
  store_betac(cache_path, key, bracket, cfg.a, budget, m);
  return bracket.lo;
}

inline nlohmann::json resolved_echo(const RunConfig& cfg, double beta) {
  nlohmann::json echo;
  echo["a"] = cfg.a;
  echo["beta"] = beta;
  echo["rotation"] = cfg.omega;
  echo["seed"] = cfg.seed;
  return echo;
}

// ---------------------------------------------------------------------------
// commands

inline int cmd_find_betac(const RunConfig& cfg, const std::string& out_dir) {
  nlohmann::json block = detail::block_of(cfg, "find_betac");
  const double tol = detail::get_or(block, "tol", 1e-5);
  const auto budget = detail::get_or<std::int64_t>(block, "budget", 10000);
  const auto m = detail::get_or<std::int64_t>(block, "m", 4096);
  const int threads = detail::get_or(block, "threads", -1);

  BetaCBracket bracket = find_beta_c(cfg.a, cfg.omega, tol, budget, m, threads);

  write_bisection_trace_csv(out_dir + "/betac_trace.csv", bracket.trace);
  nlohmann::json out;
  out["lo"] = bracket.lo;
  out["hi"] = bracket.hi;
  out["midpoint"] = bracket.midpoint();
  out["tol"] = tol;
  out["budget"] = budget;
  out["m"] = m;
  out["evaluations"] = bracket.evaluations;
  out["config"] = resolved_echo(cfg, bracket.lo);
  write_text_file(out_dir + "/betac.json", out.dump(2) + "\n");

  store_betac(betac_cache_path(cfg.config_path), betac_cache_key(cfg.a, tol, budget, m), bracket,
              cfg.a, budget, m);
  return 0;
}

inline int cmd_lines(const RunConfig& cfg, const std::string& out_dir) {
  nlohmann::json block = detail::block_of(cfg, "lines");
  std::vector<std::int64_t> ns =
      detail::get_or(block, "n", std::vector<std::int64_t>{1, 2, 3, 4, 5, 6});
  const auto m = detail::get_or<std::int64_t>(block, "m", 4096);
  const int threads = detail::get_or(block, "threads", -1);

  const double beta = resolve_beta(cfg);
  ArctanMap map{cfg.a, beta};

  std::vector<std::pair<CurveSample, CurveSample>> curves;
  curves.reserve(ns.size());
  nlohmann::json summary = nlohmann::json::array();
  for (std::int64_t n : ns) {
    CurveSample upper = upper_line(map, cfg.omega, n, m, threads);
    CurveSample lower = lower_line(map, cfg.omega, n, m, threads);
    write_lines_csv(out_dir + "/lines_n" + std::to_string(n) + ".csv", upper, lower);
    GapProfile gap = gap_profile(upper, lower);
    nlohmann::json row;
    row["n"] = n;
    row["min_gap"] = gap.min_gap;
    row["max_gap"] = gap.max_gap;
    row["argmin"] = gap.argmin;
    row["pinched_below_1e-3"] =
        static_cast<std::int64_t>(pinched_points(gap, 1e-3).size());
    summary.push_back(row);
    curves.emplace_back(std::move(upper), std::move(lower));
  }

  std::vector<SvgPanel> panels;
  panels.reserve(curves.size());
  for (const auto& pair : curves) panels.push_back({&pair.first, &pair.second});
  write_text_file(out_dir + "/lines.svg", render_lines_svg(panels));

  nlohmann::json out;
  out["lines"] = summary;
  out["m"] = m;
  out["config"] = resolved_echo(cfg, beta);
  write_text_file(out_dir + "/lines.json", out.dump(2) + "\n");
  return 0;
}

inline int cmd_dimension(const RunConfig& cfg, const std::string& out_dir) {
  nlohmann::json block = detail::block_of(cfg, "dimension");
  const std::string cloud_kind = detail::get_or<std::string>(block, "cloud", "orbit");
  const std::string kind = detail::get_or<std::string>(block, "kind", "box");
  const double eps_max = detail::get_or(block, "eps_max", std::pow(2.0, -4));
  const double eps_min = detail::get_or(block, "eps_min", std::pow(2.0, -12));
  const int threads = detail::get_or(block, "threads", -1);

  PointCloud cloud;
  double beta = 0.0;
  if (cloud_kind == "orbit" || cloud_kind == "graph") beta = resolve_beta(cfg);
  if (cloud_kind == "orbit") {
    ArctanMap map{cfg.a, beta};
    cloud = orbit_cloud(map, cfg.omega, detail::get_or(block, "theta0", 0.0),
                        detail::get_or(block, "x0", map.x_hi()),
                        detail::get_or<std::int64_t>(block, "npoints", 10000000),
                        detail::get_or<std::int64_t>(block, "burn_in", 10000));
  } else if (cloud_kind == "graph") {
    ArctanMap map{cfg.a, beta};
    CurveSample upper = upper_line(map, cfg.omega, detail::get_or<std::int64_t>(block, "graph_n", 10000),
                                   detail::get_or<std::int64_t>(block, "m", 1 << 16), threads);
    cloud = graph_cloud(upper);
  } else if (cloud_kind == "square") {
    cloud = make_square_cloud(detail::get_or<std::int64_t>(block, "npoints", 1000000), cfg.seed);
  } else if (cloud_kind == "sine") {
    cloud = make_sine_cloud(detail::get_or<std::int64_t>(block, "m", 1 << 16));
  } else if (cloud_kind == "atom") {
    cloud = make_atom_cloud(detail::get_or<std::int64_t>(block, "npoints", 1000000));
  } else {
    throw ConfigError("dimension.cloud: unknown kind " + cloud_kind);
  }

  DimensionFit fit;
  std::string value_column;
  if (kind == "box") {
    fit = box_dimension(cloud, eps_max, eps_min);
    value_column = "count";
  } else if (kind == "information") {
    fit = information_dimension(cloud, detail::get_or<std::int64_t>(block, "num_centers", 1024),
                                eps_max, eps_min, cfg.seed, threads);
    value_column = "mean_log_mu";
  } else if (kind == "pointwise") {
    fit = pointwise_dimension(cloud, detail::get_or<std::int64_t>(block, "center_index", 0),
                              eps_max, eps_min);
    value_column = "mean_log_mu";
  } else {
    throw ConfigError("dimension.kind: unknown kind " + kind);
  }

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < fit.ladder.size(); ++i) {
    if (std::isnan(fit.raw[i])) continue;  // dropped rung
    rows.push_back({format_g17(fit.ladder[i]), format_g17(fit.raw[i])});
  }
  write_csv(out_dir + "/dimension.csv", {"eps", value_column}, rows);

  nlohmann::json out;
  out["cloud"] = cloud.tag;
  out["kind"] = kind;
  out["npoints"] = cloud.size();
  out["slope"] = fit.slope;
  out["r_squared"] = fit.r_squared;
  out["inconclusive"] = fit.inconclusive;
  out["window"] = {{"eps_coarse", fit.scales.front()},
                   {"eps_fine", fit.scales.back()},
                   {"rungs", static_cast<std::int64_t>(fit.scales.size())}};
  out["trimmed_coarse"] = fit.trimmed_coarse;
  out["trimmed_saturated"] = fit.trimmed_saturated;
  out["config"] = resolved_echo(cfg, beta);
  write_text_file(out_dir + "/dimension.json", out.dump(2) + "\n");
  return 0;
}

inline int cmd_lyapunov(const RunConfig& cfg, const std::string& out_dir) {
  nlohmann::json block = detail::block_of(cfg, "lyapunov");
  const auto N = detail::get_or<std::int64_t>(block, "N", 1000000);
  const auto burn_in = detail::get_or<std::int64_t>(block, "burn_in", 10000);
  const auto blocks = detail::get_or<std::int64_t>(block, "blocks", 100);
  const std::string direction = detail::get_or<std::string>(block, "direction", "both");

  const double beta = resolve_beta(cfg);
  ArctanMap map{cfg.a, beta};

  nlohmann::json out;
  if (direction == "forward" || direction == "both") {
    LyapunovEstimate est = lyapunov_blocks(map, cfg.omega, detail::get_or(block, "theta0", 0.0),
                                           detail::get_or(block, "x0", map.x_hi()), N, burn_in,
                                           blocks);
    out["forward"] = {{"mean", est.mean}, {"standard_error", est.standard_error},
                      {"blocks", est.blocks}};
  }
  if (direction == "backward" || direction == "both") {
    LyapunovEstimate est = lyapunov_backward_blocks(
        map, cfg.omega, detail::get_or(block, "theta0", 0.0),
        detail::get_or(block, "x0_backward", 0.0), N, burn_in, blocks);
    out["backward"] = {{"mean", est.mean}, {"standard_error", est.standard_error},
                       {"blocks", est.blocks}};
  }
  out["N"] = N;
  out["burn_in"] = burn_in;
  out["config"] = resolved_echo(cfg, beta);
  write_text_file(out_dir + "/lyapunov.json", out.dump(2) + "\n");
  return 0;
}

inline int cmd_minimality(const RunConfig& cfg, const std::string& out_dir) {
  nlohmann::json block = detail::block_of(cfg, "minimality");
  const auto orbit_len = detail::get_or<std::int64_t>(block, "orbit_len", 10000000);
  const double box_eps = detail::get_or(block, "box_eps", std::pow(2.0, -6));
  const auto n = detail::get_or<std::int64_t>(block, "n", 2000);
  const auto m = detail::get_or<std::int64_t>(block, "m", 1 << 16);
  const auto burn_in = detail::get_or<std::int64_t>(block, "burn_in", 10000);
  const int threads = detail::get_or(block, "threads", -1);

  const double beta = resolve_beta(cfg);
  ArctanMap map{cfg.a, beta};
  CurveSample upper = upper_line(map, cfg.omega, n, m, threads);
  CurveSample lower = lower_line(map, cfg.omega, n, m, threads);
  MinimalityReport report =
      minimality_probe(map, cfg.omega, cfg.seed, orbit_len, box_eps, upper, lower, burn_in);

  nlohmann::json out;
  out["coverage"] = report.coverage;
  out["tiles_total"] = report.tiles_total;
  out["tiles_hit"] = report.tiles_hit;
  out["orbit_len"] = report.orbit_len;
  out["box_eps"] = report.box_eps;
  out["line_n"] = n;
  out["line_m"] = m;
  out["config"] = resolved_echo(cfg, beta);
  write_text_file(out_dir + "/minimality.json", out.dump(2) + "\n");
  return 0;
}

inline int cmd_multiscale(const RunConfig& cfg, const std::string& out_dir) {
  nlohmann::json block = detail::block_of(cfg, "multiscale");
  const auto m = detail::get_or<std::int64_t>(block, "m", 1 << 17);
  const auto max_levels = detail::get_or<std::int64_t>(block, "max_levels", 4);
  const auto mask_m = detail::get_or<std::int64_t>(block, "mask_m", 4096);
  const auto mask_n = detail::get_or<std::int64_t>(block, "mask_n", 64);
  const auto k_max = detail::get_or<std::int64_t>(block, "k_max", 8);

  const double beta = resolve_beta(cfg);
  ArctanMap map{cfg.a, beta};

  nlohmann::json out;
  out["config"] = resolved_echo(cfg, beta);

  FitGridConfig grid = make_default_fit_grid(map);
  grid.region_grid = m;
  FitResult fit = fit_constants(map, grid);
  out["feasible"] = fit.constants.has_value();
  out["slope_sup_X"] = fit.sup_X;
  out["slope_inf_X"] = fit.inf_X;
  if (!fit.constants.has_value()) {
    out["violated"] = fit.violated;
    write_text_file(out_dir + "/multiscale.json", out.dump(2) + "\n");
    return 0;
  }
  const MultiscaleConstants& constants = *fit.constants;
  out["constants"] = {{"alpha", constants.alpha}, {"p", constants.p},   {"S", constants.S},
                      {"c", constants.c},         {"e", constants.e},   {"c0", constants.c0},
                      {"K0", constants.K0},       {"kappa", constants.kappa},
                      {"M0", constants.M0},       {"b", constants.b_limit()},
                      {"lambda", constants.lambda()}};

  RegionFamily family = build_region_family(map, cfg.omega, constants, m, max_levels);
  nlohmann::json regions = nlohmann::json::array();
  for (const CriticalRegion& r : family.regions) {
    nlohmann::json jr;
    jr["level"] = r.level;
    jr["lo"] = r.arc.lo;
    jr["len"] = r.arc.len;
    jr["eps"] = constants.eps(r.level);
    jr["length_ok"] = check_E(r, constants);
    ConditionResult f1 = check_F1(r, cfg.omega, constants);
    jr["separation_ok"] = f1.ok;
    if (!f1.ok) jr["separation_witness"] = f1.witness;
    if (r.level >= 1) {
      ConditionResult f2 = check_F2(r, family, cfg.omega, constants);
      jr["clearance_ok"] = f2.ok;
      if (!f2.ok) jr["clearance_witness"] = f2.witness;
    }
    regions.push_back(jr);
  }
  out["regions"] = regions;
  out["truncated_by_empty"] = family.truncated_by_empty;
  out["truncated_by_length"] = family.truncated_by_length;

  nlohmann::json lips = nlohmann::json::array();
  for (std::int64_t j = 1; j <= std::min<std::int64_t>(family.depth() + 1, 2); ++j) {
    LipschitzBound bound = lipschitz_bound(j, constants);
    nlohmann::json jl;
    jl["j"] = j;
    jl["log_value"] = bound.log_value;
    jl["ratio"] = bound.ratio;
    jl["required_C"] = bound.required_C;
    jl["eps_power_ok"] = bound.eps_power_ok;
    jl["brute_log_value"] = lipschitz_bound_brute_log(j, constants);
    lips.push_back(jl);
  }
  out["lipschitz"] = lips;
  out["omega_measure_bound_j1"] = omega_measure_bound(1, constants, k_max);

  std::vector<char> mask = omega_mask(1, mask_n, family, cfg.omega, constants, mask_m);
  std::int64_t kept = 0;
  for (char f : mask) kept += f != 0;
  out["mask"] = {{"j", 1},
                 {"n", mask_n},
                 {"m", mask_m},
                 {"kept", kept},
                 {"kept_fraction", static_cast<double>(kept) / static_cast<double>(mask_m)}};

  write_text_file(out_dir + "/multiscale.json", out.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// verify: invariant battery, one line per check, exit 0 when nothing fails

namespace detail {

struct CheckOutcome {
  int status = 0;  // 0 ok, 1 ok-but-vacuous, 2 fail
  std::string note;
};

inline CheckOutcome ok_check() { return {0, ""}; }
inline CheckOutcome vacuous_check(std::string note) { return {1, std::move(note)}; }
inline CheckOutcome fail_check(std::string note) { return {2, std::move(note)}; }

}  // namespace detail

inline int cmd_verify(const RunConfig& cfg, const std::string& /*out_dir*/) {
  using detail::CheckOutcome;
  const double omega = cfg.omega;
  std::vector<std::pair<std::string, std::function<CheckOutcome()>>> checks;

  checks.emplace_back("frozen-oracle-values", [&]() -> CheckOutcome {
    ArctanMap map{40.0, 0.48714};
    if (std::abs(rotate(0.0, golden_omega(), 3) - 0.8541019662496847) > 1e-15)
      return detail::fail_check("three-step rotation drifted");
    if (std::abs(map.apply(0.0, 1.0) - 0.00980782017594839) > 1e-14)
      return detail::fail_check("fiber image of 1 at theta 0 drifted");
    if (std::abs(map.fiber_derivative(0.3, 0.0) - 25.464790894703256) > 1e-12)
      return detail::fail_check("peak slope drifted");
    if (std::abs(map.fiber_derivative(0.3, 1.0) - 0.015905553338353064) > 1e-15)
      return detail::fail_check("slope at x = 1 drifted");
    return detail::ok_check();
  });

  checks.emplace_back("inverse-roundtrip", [&]() -> CheckOutcome {
    ArctanMap map{40.0, 0.48714};
    SplitMix64 rng(42);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
      double theta = rng.next_double();
      double x = map.x_lo() + (map.x_hi() - map.x_lo()) * rng.next_double();
      double y = map.apply(theta, x);
      worst = std::max(worst, std::abs(map.apply_inverse(theta, y) - x));
    }
    if (worst > 1e-12) return detail::fail_check("worst residual " + format_g17(worst));
    return detail::ok_check();
  });

  checks.emplace_back("line-monotonicity-and-gap", [&]() -> CheckOutcome {
    ArctanMap map{40.0, 0.48714};
    const std::int64_t m = 512;
    CurveSample prev_u = upper_line(map, omega, 0, m);
    CurveSample prev_l = lower_line(map, omega, 0, m);
    double prev_min_gap = gap_profile(prev_u, prev_l).min_gap;
    for (std::int64_t n = 1; n <= 48; ++n) {
      CurveSample u = upper_line(map, omega, n, m);
      CurveSample l = lower_line(map, omega, n, m);
      for (std::int64_t i = 0; i < m; ++i) {
        if (u.values[static_cast<std::size_t>(i)] >
            prev_u.values[static_cast<std::size_t>(i)] + 1e-12)
          return detail::fail_check("upper line rose at n = " + std::to_string(n));
        if (l.values[static_cast<std::size_t>(i)] <
            prev_l.values[static_cast<std::size_t>(i)] - 1e-12)
          return detail::fail_check("lower line fell at n = " + std::to_string(n));
      }
      double min_gap = gap_profile(u, l).min_gap;
      if (min_gap > prev_min_gap + 1e-12)
        return detail::fail_check("min gap grew at n = " + std::to_string(n));
      prev_min_gap = min_gap;
      prev_u = std::move(u);
      prev_l = std::move(l);
    }
    return detail::ok_check();
  });

  checks.emplace_back("exact-recurrence-bitwise", [&]() -> CheckOutcome {
    ArctanMap map{40.0, 0.48714};
    const std::int64_t m = 256, n = 32;
    auto rows = upper_line_orbits(map, omega, n, m);
    CurveSample top = upper_line(map, omega, n, m);
    for (std::int64_t i = 0; i < m; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      double theta = top.theta(i);
      for (std::int64_t k = 0; k < n; ++k) {
        double base = frac(theta + static_cast<double>(k - n) * omega);
        if (map.apply(base, row[static_cast<std::size_t>(k)]) != row[static_cast<std::size_t>(k + 1)])
          return detail::fail_check("recurrence mismatch at i=" + std::to_string(i) +
                                    " k=" + std::to_string(k));
      }
      if (row[static_cast<std::size_t>(n)] != top.values[static_cast<std::size_t>(i)])
        return detail::fail_check("sampled curve differs from its own orbit");
    }
    CurveSample one = upper_line(map, omega, 1, m);
    for (std::int64_t i = 0; i < m; ++i) {
      double expect = map.apply(frac(one.theta(i) - omega), map.x_hi());
      if (one.values[static_cast<std::size_t>(i)] != expect)
        return detail::fail_check("single-step line is not the shifted fiber image");
    }
    return detail::ok_check();
  });

  checks.emplace_back("verdict-monotone-ladder", [&]() -> CheckOutcome {
    bool seen_collapse = false;
    for (int k = 0; k < 32; ++k) {
      double beta = 0.3 + 0.4 * static_cast<double>(k) / 31.0;
      ArctanMap map{40.0, beta};
      ClassifyResult r = classify(map, omega, 256, 512);
      if (r.verdict == Verdict::kCollapses) seen_collapse = true;
      else if (seen_collapse)
        return detail::fail_check("survival above a collapsing beta at beta = " + format_g17(beta));
    }
    if (!seen_collapse) return detail::fail_check("no collapse found on the ladder");
    ArctanMap calm{40.0, 0.0};
    if (classify(calm, omega, 64, 256).verdict != Verdict::kSurvives)
      return detail::fail_check("beta = 0 failed to survive");
    return detail::ok_check();
  });

  // shared multiscale state for the remaining checks
  ArctanMap crit_map{40.0, 0.48714};
  std::optional<MultiscaleConstants> constants;
  std::optional<RegionFamily> family;

  checks.emplace_back("constants-and-regions", [&]() -> CheckOutcome {
    FitGridConfig grid = make_default_fit_grid(crit_map);
    grid.region_grid = 1 << 15;
    FitResult fit = fit_constants(crit_map, grid);
    if (!fit.constants.has_value())
      return detail::fail_check("no feasible constants: " + fit.violated);
    constants = fit.constants;
    if (constants->p != 2.0 || constants->K0 != 32 || constants->M0 != 2)
      return detail::fail_check("fitted lattice point moved");
    if (std::abs(constants->alpha - 23.988329190194904) > 1e-6)
      return detail::fail_check("fitted alpha moved: " + format_g17(constants->alpha));

    family = build_region_family(crit_map, omega, *constants, 1 << 15, 4);
    if (family->depth() < 1) return detail::fail_check("region recursion died before level 1");
    const Arc& I0 = family->regions[0].arc;
    const Arc& I1 = family->regions[1].arc;
    if (!I0.full() && arc_distance(I1, I0) != 0.0)
      return detail::fail_check("level-1 region escaped level 0");
    if (std::abs(I1.len - 0.054077) > 2e-4)
      return detail::fail_check("level-1 region length moved: " + format_g17(I1.len));
    if (!check_E(family->regions[0], *constants) || !check_E(family->regions[1], *constants))
      return detail::fail_check("length condition failed on computed levels");

    LipschitzBound bound = lipschitz_bound(1, *constants);
    double brute = lipschitz_bound_brute_log(1, *constants);
    if (std::abs(bound.log_value - brute) > 1e-12 * std::abs(brute))
      return detail::fail_check("closed-form log bound disagrees with brute sum");
    if (std::abs(bound.log_value - 801.8674045956951) > 1e-6)
      return detail::fail_check("log bound moved: " + format_g17(bound.log_value));
    return detail::ok_check();
  });

  checks.emplace_back("contracting-visit-shadow", [&]() -> CheckOutcome {
    if (!constants || !family) return detail::vacuous_check("constants unavailable");
    const Arc& I0 = family->regions[0].arc;
    const double b = constants->b_limit();
    const std::int64_t n = 1000;
    SplitMix64 rng(777);
    std::int64_t kept = 0;
    for (int s = 0; s < 200; ++s) {
      double theta = rng.next_double();
      std::int64_t p0 = p_index(theta, 0, n, *family, omega, *constants);
      if (!check_B(crit_map, theta, crit_map.x_hi(), p0 + 1, *family, *constants, BKind::kB1))
        continue;
      ++kept;
      std::int64_t visits = count_P(crit_map, omega, theta, crit_map.x_hi(), 0, n, I0, *constants);
      if (static_cast<double>(visits) < b * b * static_cast<double>(n))
        return detail::fail_check("visit count fell short at theta = " + format_g17(theta));
    }
    if (kept == 0)
      return detail::vacuous_check(
          "no sample passes the start condition: the negative zone contains the full-circle "
          "level-0 region, so every start is excluded at these constants");
    return detail::ok_check();
  });

  checks.emplace_back("index-ordering-shadow", [&]() -> CheckOutcome {
    if (!constants || !family) return detail::vacuous_check("constants unavailable");
    const std::int64_t n = 1000, m = 4096;
    // smallest level whose peak-avoiding mask is nonempty at this n
    std::int64_t j = -1;
    std::vector<char> mask;
    for (std::int64_t cand = 1; cand <= family->depth() + 1; ++cand) {
      mask = omega_mask(cand, n, *family, omega, *constants, m);
      if (std::count(mask.begin(), mask.end(), char{1}) > 0) {
        j = cand;
        break;
      }
    }
    if (j < 0) return detail::vacuous_check("every mask level is empty at n = 1000");
    const std::int64_t spent = 2 * constants->K(j - 1) * constants->M(j - 1) -
                               constants->M(j - 1) - 1;  // orbit cost entering level j
    const std::int64_t k_hi = n - spent;
    if (k_hi < 0)
      return detail::vacuous_check(
          "admissible range empty at mask level " + std::to_string(j) + ": n - " +
          std::to_string(spent) + " = " + std::to_string(k_hi) + ", no k to test");
    SplitMix64 rng(778);
    for (int s = 0; s < 200; ++s) {
      auto cell = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(m)));
      if (!mask[static_cast<std::size_t>(cell)]) continue;  // sample only inside the mask
      double theta = static_cast<double>(cell) / static_cast<double>(m);
      for (std::int64_t k = 0; k <= k_hi; k += std::max<std::int64_t>(1, k_hi / 8)) {
        std::int64_t i_idx = i_index(k, n, *constants);
        std::int64_t p_idx = p_index(theta, k, n, *family, omega, *constants);
        if (i_idx < p_idx)
          return detail::fail_check("index inversion at theta = " + format_g17(theta));
      }
    }
    return detail::ok_check();
  });

  checks.emplace_back("masked-slope-bound", [&]() -> CheckOutcome {
    if (!constants || !family) return detail::vacuous_check("constants unavailable");
    const std::int64_t n = 64, m = 4096;
    CurveSample curve = upper_line(crit_map, omega, n, m);
    std::vector<char> mask = omega_mask(1, n, *family, omega, *constants, m);
    std::int64_t kept = 0;
    for (char f : mask) kept += f != 0;
    if (kept < 2)
      return detail::vacuous_check("mask keeps " + std::to_string(kept) +
                                   " cells, no slope to measure");
    double emp = local_lipschitz(curve, mask);
    LipschitzBound bound = lipschitz_bound(1, *constants);
    if (!(std::log(emp) <= bound.log_value))
      return detail::fail_check("masked slope exceeds the closed-form bound");
    return detail::ok_check();
  });

  checks.emplace_back("geometric-stabilization-shadow", [&]() -> CheckOutcome {
    if (!constants || !family) return detail::vacuous_check("constants unavailable");
    ConditionResult f1 = check_F1(family->regions[0], omega, *constants);
    if (!f1.ok)
      return detail::vacuous_check(
          "hypotheses unmet: the level-0 region fails self-separation (" + f1.witness +
          "), so the stabilization claim has a false antecedent here");
    const std::int64_t n0 = 2 * constants->K(0) * constants->M(0) - constants->M(0) - 1;
    const std::int64_t n = n0 + 1, m = 2048;
    std::vector<char> mask = omega_mask(1, n, *family, omega, *constants, m);
    std::int64_t kept = 0;
    for (char f : mask) kept += f != 0;
    if (kept == 0) return detail::vacuous_check("mask empty beyond the stabilization threshold");
    CurveSample cur = upper_line(crit_map, omega, n, m);
    CurveSample prev = upper_line(crit_map, omega, n - 1, m);
    double bound = std::pow(constants->alpha, -constants->lambda() * static_cast<double>(n - 1));
    for (std::int64_t i = 0; i < m; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      if (std::abs(cur.values[static_cast<std::size_t>(i)] -
                   prev.values[static_cast<std::size_t>(i)]) > bound)
        return detail::fail_check("stabilization rate violated at cell " + std::to_string(i));
    }
    return detail::ok_check();
  });

  checks.emplace_back("atom-information-calibration", [&]() -> CheckOutcome {
    DimensionFit fit = information_dimension(make_atom_cloud(10000), 64, std::pow(2.0, -3),
                                             std::pow(2.0, -8), 1);
    if (std::abs(fit.slope) > 0.01)
      return detail::fail_check("atom slope " + format_g17(fit.slope));
    return detail::ok_check();
  });

  int failures = 0;
  for (auto& check : checks) {
    CheckOutcome outcome = check.second();
    if (outcome.status == 0) {
      std::printf("ok %s\n", check.first.c_str());
    } else if (outcome.status == 1) {
      std::printf("ok %s (vacuous: %s)\n", check.first.c_str(), outcome.note.c_str());
    } else {
      std::printf("FAIL %s: %s\n", check.first.c_str(), outcome.note.c_str());
      ++failures;
    }
  }
  std::printf("%s: %zu checks, %d failed\n", failures == 0 ? "PASS" : "FAIL", checks.size(),
              failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace snalab
