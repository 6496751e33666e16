#pragma once

// Matrix-form step kernels and the Monte-Carlo replica driver.
//
//   x+ = x + zeta - D_alpha y - D_beta (I - W) grad f(x)
//   y+ = W y + x+ - x
//
// with y(0) = x(0) - d. WGA drops y: x+ = x + zeta - alpha (I - W) grad f(x).

#include <cstdint>
#include <string>
#include <vector>

#include "dta/cost_model.hpp"
#include "dta/disturbance.hpp"
#include "dta/metrics.hpp"
#include "dta/network.hpp"
#include "dta/stepsize.hpp"

namespace dta {

enum class Algorithm { Dta, DtaDisturbed, DtaUncoordinated, Wga };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

inline constexpr double kDivergenceNorm = 1e12;

struct IterateState {
  StateMatrix x;
  StateMatrix y;
  std::int64_t k = 0;
};

IterateState init(const CostSpec& spec, const StateMatrix& x0);

/// Scratch buffers reused across steps.
struct StepWorkspace {
  StateMatrix grad;
  StateMatrix mixed;
  StateMatrix dx;
};

void dta_step(IterateState& s, const CostSpec& spec, const WeightSample& w,
              const StepsizePlan& plan, StepWorkspace& ws);

void dta_step_disturbed(IterateState& s, const CostSpec& spec,
                        const WeightSample& w, const StepsizePlan& plan,
                        const StateMatrix& zeta, StepWorkspace& ws);

void dta_step_uncoordinated(IterateState& s, const CostSpec& spec,
                            const WeightSample& w, const StepsizePlan& plan,
                            StepWorkspace& ws);

/// y is left untouched.
void wga_step(IterateState& s, const CostSpec& spec, const WeightSample& w,
              double alpha, const StateMatrix& zeta, StepWorkspace& ws);

/// out = (I - W) v, accumulated as antisymmetric pairwise fluxes
/// w_ij (v_i - v_j) so that 1'out vanishes up to rounding of the fluxes.
void laplacian_apply(const Eigen::MatrixXd& w, const StateMatrix& v,
                     StateMatrix& out);

/// Throws DivergenceError(replica, k) on a non-finite or blown-up state.
void check_divergence(const IterateState& s, int replica);

enum class Execution { Serial, Parallel };

struct EngineConfig {
  Algorithm algorithm = Algorithm::Dta;
  StepsizePlan plan;
  /// WGA stepsize; used only by Algorithm::Wga.
  double wga_alpha = 0.0;
  std::int64_t iterations = 1;
  StateMatrix x0;
  std::uint64_t seed = 1;
  int replicas = 1;
  DisturbanceSpec disturbance;
  Execution execution = Execution::Parallel;

  void validate(const CostSpec& spec) const;
};

struct ReplicaResult {
  RunTrace trace;
  IterateState final_state;
  /// sum_k 1' zeta(k), a u-vector.
  Eigen::RowVectorXd disturbance_sum;
};

struct RunResult {
  std::vector<ReplicaResult> replicas;
  KktSolution kkt;

  std::vector<RunTrace> traces() const;
  RunTrace aggregated() const { return aggregate(traces()); }
};

/// Runs `replicas` independent realizations. Replica r draws W(k) from
/// stream (seed, r, Network) and zeta(k) from (seed, r, Disturbance), so the
/// serial and parallel paths agree bitwise and paired runs share draws.
RunResult run(const EngineConfig& cfg, const CostSpec& spec,
              const NetworkModel& model);

ReplicaResult run_replica(const EngineConfig& cfg, const CostSpec& spec,
                          const NetworkModel& model, const KktSolution& kkt,
                          int replica);

}  // namespace dta
