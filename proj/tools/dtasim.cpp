// dtasim: command line front end for the DTA experiments.
//
//   dtasim bounds  <config>
//   dtasim run     <config> [--out dir] [--seed S]
//   dtasim compare <config> [--out dir] [--seed S]
//   dtasim sweep   <config> --axis alpha|beta|theta --values v1,v2,...
//
// Exit codes: 0 ok, 1 other error, 2 config error, 3 network not connected
// in mean, 4 at least one point diverged.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dta/errors.hpp"
#include "dta/experiment.hpp"

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kNetwork = 3, kDivergence = 4 };

void print_points(const dta::SummaryReport& rep) {
  for (const auto& p : rep.points) {
    if (p.divergence) {
      std::printf("%-18s diverged: %s\n", p.label.c_str(), p.divergence->c_str());
      continue;
    }
    std::printf("%-18s q_n=%.6g  |x-x*| %.6g -> %.6g%s%s\n", p.label.c_str(),
                p.rate.q_n, p.initial_distance, p.final_distance,
                p.converged ? "  converged" : "",
                p.non_convergent ? "  NON-CONVERGENT" : "");
  }
  if (rep.compare) {
    const auto& c = *rep.compare;
    for (const auto* p : {&c.dta, &c.wga}) {
      if (p->divergence) {
        std::printf("%-6s diverged: %s\n", p->label.c_str(), p->divergence->c_str());
      } else {
        std::printf("%-6s |x-x*| %.6g -> %.6g  gap %.6g\n", p->label.c_str(),
                    p->initial_distance, p->final_distance,
                    p->trace.feasibility_gap.back());
      }
    }
    std::printf("wga/dta final distance ratio %.6g, drift mismatch %.3g\n",
                c.plateau_ratio, c.max_drift_mismatch);
  }
  for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

int exit_for(const dta::SummaryReport& rep) {
  for (const auto& p : rep.points) {
    if (p.divergence) return kDivergence;
  }
  if (rep.compare && (rep.compare->dta.divergence || rep.compare->wga.divergence)) {
    return kDivergence;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deviation-tracking resource allocation over stochastic networks"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::string axis;
  std::vector<double> values;

  auto* bounds = app.add_subcommand("bounds", "print spectra, constants and optimal stepsizes");
  bounds->add_option("config", config, "experiment config (YAML)")->required();

  auto add_run_opts = [&](CLI::App* cmd) {
    cmd->add_option("config", config, "experiment config (YAML)")->required();
    cmd->add_option("--out", out, std::string("output directory (default: config, then $") +
                                      dta::kOutDirEnv + ")");
    cmd->add_option("--seed", seed, "override engine.seed");
  };
  auto* run = app.add_subcommand("run", "run the configured experiment");
  add_run_opts(run);
  auto* compare = app.add_subcommand("compare", "DTA vs WGA under paired disturbances");
  add_run_opts(compare);
  auto* sweep = app.add_subcommand("sweep", "sweep one axis");
  add_run_opts(sweep);
  sweep->add_option("--axis", axis, "alpha | beta | theta")
      ->required()
      ->check(CLI::IsMember({"alpha", "beta", "theta"}));
  sweep->add_option("--values", values, "comma separated values")
      ->required()
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    dta::ExperimentConfig cfg = dta::load_config(config);
    if (seed) cfg.engine.seed = *seed;

    if (bounds->parsed()) {
      const auto rep = dta::cmd_bounds(cfg);
      std::cout << dta::summary_json(rep);
      for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      return kOk;
    }
    const auto dir = dta::output_dir(cfg, out);
    dta::SummaryReport rep;
    if (run->parsed()) {
      rep = dta::cmd_run(cfg, dir);
    } else if (compare->parsed()) {
      rep = dta::cmd_compare(cfg, dir);
    } else {
      rep = dta::sweep(cfg, axis, values, dir);
    }
    print_points(rep);
    std::printf("wrote %s\n", (dir / (cfg.name + "_summary.json")).string().c_str());
    return exit_for(rep);
  } catch (const dta::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const dta::InfeasibleNetworkError& e) {
    std::fprintf(stderr, "infeasible network: %s\n", e.what());
    return kNetwork;
  } catch (const dta::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return kDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
}
