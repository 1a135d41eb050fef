// sna-lab: desk-scale laboratory for quasiperiodically forced interval maps.
// Subcommands run one batch configuration each and write CSV/JSON/SVG
// artifacts into the output directory.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "snalab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"sna-lab: boundary lines, bifurcation search, dimension and multiscale reports"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_override;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (default: out)");
    sub->add_option("--seed", seed_override, "override the config's RNG seed");
  };

  CLI::App* find_betac = app.add_subcommand("find-betac", "bisect the collapse threshold");
  CLI::App* lines = app.add_subcommand("lines", "sample boundary lines to CSV and SVG");
  CLI::App* dimension = app.add_subcommand("dimension", "box / information / pointwise dimension");
  CLI::App* multiscale = app.add_subcommand("multiscale", "constants fit and region recursion report");
  CLI::App* lyapunov = app.add_subcommand("lyapunov", "vertical Lyapunov exponents with block errors");
  CLI::App* minimality = app.add_subcommand("minimality", "orbit coverage of the bounded region");
  CLI::App* verify = app.add_subcommand("verify", "run the invariant self-check battery");
  for (CLI::App* sub : {find_betac, lines, dimension, multiscale, lyapunov, minimality, verify})
    add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    snalab::RunConfig cfg = snalab::load_config(config_path, seed_override);
    if (find_betac->parsed()) return snalab::cmd_find_betac(cfg, out_dir);
    if (lines->parsed()) return snalab::cmd_lines(cfg, out_dir);
    if (dimension->parsed()) return snalab::cmd_dimension(cfg, out_dir);
    if (multiscale->parsed()) return snalab::cmd_multiscale(cfg, out_dir);
    if (lyapunov->parsed()) return snalab::cmd_lyapunov(cfg, out_dir);
    if (minimality->parsed()) return snalab::cmd_minimality(cfg, out_dir);
    if (verify->parsed()) return snalab::cmd_verify(cfg, out_dir);
  } catch (const snalab::BudgetInconclusive& e) {
    std::fprintf(stderr, "inconclusive: %s\n", e.what());
    return 2;
  } catch (const snalab::SnaLabError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
