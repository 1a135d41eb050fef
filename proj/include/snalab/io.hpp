#pragma once

// File artifacts: CSV writers (17 significant digits, LF), the hand-emitted
// SVG renderer for boundary-line panels, and the critical-beta cache sidecar.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "snalab/bifurcation.hpp"
#include "snalab/boundary_lines.hpp"
#include "snalab/common.hpp"

namespace snalab {

inline void ensure_parent_dir(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

inline void write_text_file(const std::string& path, const std::string& content) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw SnaLabError("cannot open for writing: " + path);
  out << content;
  if (!out) throw SnaLabError("write failed: " + path);
}

// generic CSV: caller supplies already-formatted cells; no quoting needed
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

// theta,upper,lower,gap per grid point
inline void write_lines_csv(const std::string& path, const CurveSample& upper,
                            const CurveSample& lower) {
  if (upper.m != lower.m) throw MismatchError("write_lines_csv: grid sizes differ");
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(upper.m));
  for (std::int64_t i = 0; i < upper.m; ++i) {
    double u = upper.values[static_cast<std::size_t>(i)];
    double l = lower.values[static_cast<std::size_t>(i)];
    rows.push_back({format_g17(upper.theta(i)), format_g17(u), format_g17(l), format_g17(u - l)});
  }
  write_csv(path, {"theta", "upper", "lower", "gap"}, rows);
}

// step,beta,verdict,collapse_step,min_gap
inline void write_bisection_trace_csv(const std::string& path,
                                      const std::vector<BisectionTraceRow>& trace) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(trace.size());
  for (const auto& r : trace)
    rows.push_back({std::to_string(r.step), format_g17(r.beta), verdict_name(r.verdict),
                    std::to_string(r.collapse_step), format_g17(r.min_gap)});
  write_csv(path, {"step", "beta", "verdict", "collapse_step", "min_gap"}, rows);
}

// ---------------------------------------------------------------------------
// SVG renderer: fixed 1000x600 canvas, two columns of panels, red upper line
// over blue lower line, theta on [0,1] horizontally, x autoscaled per panel.

struct SvgPanel {
  const CurveSample* upper = nullptr;
  const CurveSample* lower = nullptr;
};

inline std::string render_lines_svg(const std::vector<SvgPanel>& panels) {
  const double canvas_w = 1000.0, canvas_h = 600.0;
  const auto count = static_cast<std::int64_t>(panels.size());
  const std::int64_t cols = count > 1 ? 2 : 1;
  const std::int64_t rows = (count + cols - 1) / cols;
  const double margin = 10.0;
  const double panel_w = (canvas_w - margin * static_cast<double>(cols + 1)) / static_cast<double>(cols);
  const double panel_h = (canvas_h - margin * static_cast<double>(rows + 1)) / static_cast<double>(rows);

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 600\">\n";
  for (std::int64_t idx = 0; idx < count; ++idx) {
    const SvgPanel& panel = panels[static_cast<std::size_t>(idx)];
    if (panel.upper == nullptr || panel.lower == nullptr)
      throw ConfigError("render_lines_svg: panel missing a curve");
    const double px = margin + static_cast<double>(idx % cols) * (panel_w + margin);
    const double py = margin + static_cast<double>(idx / cols) * (panel_h + margin);

    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -std::numeric_limits<double>::infinity();
    for (double v : panel.upper->values) {
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    for (double v : panel.lower->values) {
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    if (!(vmax > vmin)) vmax = vmin + 1.0;  // flat panel still renders

    auto emit_polyline = [&](const CurveSample& curve, const char* color) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"0.5\" points=\"";
      for (std::int64_t i = 0; i < curve.m; ++i) {
        double sx = px + curve.theta(i) * panel_w;
        double sy = py + panel_h * (1.0 - (curve.values[static_cast<std::size_t>(i)] - vmin) / (vmax - vmin));
        if (i) out << ' ';
        out << format_g17(sx) << ',' << format_g17(sy);
      }
      out << "\"/>\n";
    };

    out << "<g>\n";
    out << "<rect x=\"" << format_g17(px) << "\" y=\"" << format_g17(py) << "\" width=\""
        << format_g17(panel_w) << "\" height=\"" << format_g17(panel_h)
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    emit_polyline(*panel.upper, "red");
    emit_polyline(*panel.lower, "blue");
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// critical-beta cache sidecar (JSON next to the config file)

inline std::string betac_cache_key(double a, double tol, std::int64_t budget, std::int64_t m) {
  std::string material = format_g17(a) + "|" + format_g17(tol) + "|" + std::to_string(budget) +
                         "|" + std::to_string(m);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char ch : material) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string betac_cache_path(const std::string& config_path) {
  return config_path + ".betac.json";
}

inline nlohmann::json load_betac_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return nlohmann::json::object();
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return nlohmann::json::object();
  return j;
}

inline std::optional<BetaCBracket> lookup_betac(const nlohmann::json& cache,
                                                const std::string& key) {
  if (!cache.contains(key)) return std::nullopt;
  const nlohmann::json& e = cache.at(key);
  if (!e.is_object() || !e.contains("lo") || !e.contains("hi")) return std::nullopt;
  BetaCBracket b;
  b.lo = e.at("lo").get<double>();
  b.hi = e.at("hi").get<double>();
  b.tol = e.value("tol", 0.0);
  b.evaluations = e.value("evaluations", std::int64_t{0});
  return b;
}

inline void store_betac(const std::string& path, const std::string& key, const BetaCBracket& b,
                        double a, std::int64_t budget, std::int64_t m) {
  nlohmann::json cache = load_betac_cache(path);
  nlohmann::json e;
  e["lo"] = b.lo;
  e["hi"] = b.hi;
  e["tol"] = b.tol;
  e["evaluations"] = b.evaluations;
  e["a"] = a;
  e["budget"] = budget;
  e["m"] = m;
  cache[key] = e;
  write_text_file(path, cache.dump(2) + "\n");
}

}  // namespace snalab
