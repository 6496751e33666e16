#pragma once

// Configuration-driven experiments: single runs, alpha/beta/theta sweeps,
// uncoordinated plans and the DTA vs WGA disturbance comparison.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dta/engine.hpp"

namespace dta {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kOutDirEnv = "DTASIM_OUT_DIR";

struct CostsConfig {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;
  bool operator==(const CostsConfig&) const = default;
};

struct NetworkConfig {
  std::string topology = "complete";  // complete | ring | edge-list | random
  double theta = 1.0;
  std::vector<Edge> edges;
  double edge_probability = 0.5;
  std::uint64_t topology_seed = 1;
  std::string proposals = "metropolis";  // metropolis | uniform
  double proposal_weight = 0.0;
  std::string square_mode = "analytic";  // analytic | exact | monte-carlo
  std::int64_t square_samples = 100000;
  bool operator==(const NetworkConfig&) const = default;
};

struct EngineSection {
  std::string algorithm = "dta";
  std::int64_t iterations = 25000;
  int replicas = 20;
  std::uint64_t seed = 1;
  std::string x0 = "zero";  // zero | demand | explicit
  StateMatrix x0_values;
  std::string execution = "parallel";
  bool operator==(const EngineSection& o) const;
};

struct StepsizeSection {
  std::string source = "optimal";  // optimal | explicit | uncoordinated
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_scale = 1.0;
  double beta_scale = 1.0;
  /// Compute optimal stepsizes on the network with this theta instead.
  std::optional<double> theta_base;
  std::vector<double> alphas;
  std::vector<double> betas;
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  double beta_lo = 0.0;
  double beta_hi = 0.0;
  int plans = 0;
  std::uint64_t plan_seed = 1;
  /// Also run each sampled plan with every alpha_i set to max and to min.
  bool bracket = false;
  bool operator==(const StepsizeSection&) const = default;
};

struct DisturbanceSection {
  std::string kind = "none";
  /// nullopt means auto: |x0 - x*|_F.
  std::optional<double> m_zeta;
  double q_zeta = 0.999;
  std::optional<std::int64_t> cutoff;
  bool operator==(const DisturbanceSection&) const = default;
};

struct SweepSection {
  std::string axis;  // alpha | beta | theta
  std::vector<double> values;
  bool operator==(const SweepSection&) const = default;
};

struct RateSection {
  /// nullopt means the last iteration.
  std::optional<std::int64_t> k_e;
  std::int64_t N = 1000;
  double floor_rel = kDefaultFloorRel;
  bool operator==(const RateSection&) const = default;
};

struct WgaSection {
  /// nullopt means auto: 1 / (phi_hi (1 - lambdan_floor)).
  std::optional<double> alpha;
  bool operator==(const WgaSection&) const = default;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string name = "experiment";
  CostsConfig costs;
  StateMatrix demands;
  NetworkConfig network;
  EngineSection engine;
  StepsizeSection stepsizes;
  DisturbanceSection disturbance;
  std::optional<SweepSection> sweep;
  RateSection rate;
  WgaSection wga;
  std::string output_dir;

  bool operator==(const ExperimentConfig& o) const;
};

/// Throws ConfigError on malformed input.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

/// Everything derived from a config before any iteration runs.
struct Resolved {
  explicit Resolved(CostSpec s) : spec(std::move(s)) {}

  CostSpec spec;
  NetworkModel model;
  SpectralReport net;
  KktSolution kkt;
  StateMatrix x0;
  /// Constants of the network the stepsizes are computed on.
  RateConstants rc;
  SpectralReport stepsize_net;
  std::optional<OptimalStepsizes> optimal;
  /// Base plans before sweep multipliers; several for sampled plans.
  std::vector<StepsizePlan> plans;
  DisturbanceSpec disturbance;
  double wga_alpha = 0.0;
};

Resolved resolve(const ExperimentConfig& cfg);

struct PointResult {
  std::string label;
  std::string axis;
  double value = 0.0;
  std::string algorithm;
  StepsizePlan plan;
  double theta = 0.0;
  std::optional<FeasibilityVerdict> verdict;
  std::optional<double> predicted_rate;
  std::optional<double> fixed_network_rate;
  std::string notes;
  RateEstimate rate;
  double initial_distance = 0.0;
  double final_distance = 0.0;
  std::optional<LinearFit> fit;
  bool converged = false;
  bool non_convergent = false;
  std::optional<std::string> divergence;
  std::string trace_file;
  RunTrace trace;  // mean-square aggregate
};

struct CompareResult {
  PointResult dta;
  PointResult wga;
  /// Per replica: |1'x(K) - 1'd| of WGA and |sum_k 1' zeta(k)|.
  std::vector<double> wga_final_gap;
  std::vector<double> disturbance_drift;
  double max_drift_mismatch = 0.0;
  double plateau_ratio = 0.0;  // WGA final distance / DTA final distance
};

struct SummaryReport {
  std::string command;
  ExperimentConfig config;
  std::optional<Resolved> resolved;
  std::vector<PointResult> points;
  std::optional<CompareResult> compare;
  std::vector<std::string> warnings;
};

/// Output directory precedence: explicit argument, config, environment, "dtasim-out".
std::filesystem::path output_dir(const ExperimentConfig& cfg,
                                 const std::optional<std::string>& cli_out);

SummaryReport cmd_bounds(const ExperimentConfig& cfg);

/// Runs the configured sweep (or a single point). Writes one CSV per point
/// and a JSON summary when `out` is set.
SummaryReport cmd_run(const ExperimentConfig& cfg,
                      const std::optional<std::filesystem::path>& out);

SummaryReport cmd_compare(const ExperimentConfig& cfg,
                          const std::optional<std::filesystem::path>& out);

/// cmd_run with the sweep section replaced.
SummaryReport sweep(ExperimentConfig cfg, const std::string& axis,
                    const std::vector<double>& values,
                    const std::optional<std::filesystem::path>& out);

void write_trace_csv(std::ostream& os, const RunTrace& trace);
std::string summary_json(const SummaryReport& report);

/// Residual and fit analysis on an aggregated trace.
PointResult analyze_trace(const RunTrace& trace, const RateSection& rate,
                          std::int64_t iterations);

}  // namespace dta
