#pragma once

// Constants, feasibility regions, optimal stepsizes and predicted rates for
// the shared and uncoordinated stepsize plans.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dta/cost_model.hpp"
#include "dta/network.hpp"

namespace dta {

inline constexpr double kFeasibilityMargin = 1e-12;

enum class PlanMode { Shared, Uncoordinated };

struct ConditionCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct FeasibilityVerdict {
  bool feasible = false;
  /// Name of the first failed condition, empty when feasible.
  std::string failed;
  std::vector<ConditionCheck> checks;
};

struct StepsizePlan {
  PlanMode mode = PlanMode::Shared;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> alphas;
  std::vector<double> betas;
  std::optional<FeasibilityVerdict> verdict;
  std::optional<double> predicted_rate;

  static StepsizePlan shared(double alpha, double beta);
  static StepsizePlan uncoordinated(std::vector<double> alphas,
                                    std::vector<double> betas);

  double alpha_hi() const;
  double alpha_lo() const;
  double beta_hi() const;
  double beta_lo() const;
  double alpha_sum(int n) const;
  /// Per-agent stepsizes, expanding the shared scalars when needed.
  std::vector<double> alpha_vector(int n) const;
  std::vector<double> beta_vector(int n) const;
};

struct RateConstants {
  double K1 = 0.0;
  double K2 = 0.0;
  double K1p = 0.0;
  double K2p = 0.0;
  /// Uncoordinated constants; equal to K1, K2 unless a per-agent plan is given.
  double K1pp = 0.0;
  double K2pp = 0.0;
  double eta_lo = 0.0;
  double phi_hi = 0.0;
  int n = 0;
};

struct SharedContractions {
  double s1 = 0.0;
  double s2 = 0.0;
  double s1p = 0.0;
  double s2p = 0.0;
};

struct UncoordinatedContractions {
  double s4 = 0.0;
  double s5 = 0.0;
  double s6 = 0.0;
};

/// eta(1-l2)[phi+(n-1)eta] / sqrt(n[phi^2+(n-1)eta^2])
double lower_contraction(double eta_lo, double phi_hi, double lambda2, int n);

RateConstants constants(const CostSpec& spec, const SpectralReport& net,
                        const StepsizePlan* plan = nullptr);

SharedContractions shared_contractions(const RateConstants& rc,
                                       const SpectralReport& net,
                                       double alpha, double beta);

UncoordinatedContractions uncoordinated_contractions(
    const RateConstants& rc, const SpectralReport& net,
    const StepsizePlan& plan);

struct SharedRegion {
  double alpha_max = 0.0;  // sqrt(2 - lambda2_sq) - 1
  double beta_max = 0.0;   // 2 K1 / K2^2
  FeasibilityVerdict check(double alpha, double beta) const;

  RateConstants rc;
  SpectralReport net;
};

SharedRegion feasible_region_shared(const RateConstants& rc,
                                    const SpectralReport& net);

/// Fixed-network region: alpha < 1 - ln_e, beta < 1/K2', and the product
/// condition with s1', s2'.
FeasibilityVerdict feasible_fixed(const RateConstants& rc,
                                  const SpectralReport& net, double alpha,
                                  double beta);

struct OptimalStepsizes {
  double alpha = 0.0;
  double beta = 0.0;
  /// NaN marks an inactive branch.
  std::array<double, 4> branches{};
  int active_branch = -1;
  std::vector<std::string> warnings;
};

OptimalStepsizes optimal_stepsizes(const RateConstants& rc,
                                   const SpectralReport& net);

/// max{s1 + ab phi(1-ln)/(1-s2), s2 + ab phi(1-ln)/(1-s1), |1-a|, q_zeta}.
/// Throws InfeasiblePlanError when the plan is outside the shared region.
double predicted_rate(const RateConstants& rc, const StepsizePlan& plan,
                      const SpectralReport& net,
                      std::optional<double> q_zeta = std::nullopt);

/// The same max structure with the fixed-network contractions s1', s2' and
/// ln_e in place of the floor. Does not check feasibility.
double fixed_network_rate(const RateConstants& rc, const SpectralReport& net,
                          double alpha, double beta,
                          std::optional<double> q_zeta = std::nullopt);

FeasibilityVerdict feasible_region_uncoordinated(const RateConstants& rc,
                                                 const StepsizePlan& plan,
                                                 const SpectralReport& net);

/// Draw per-agent plans uniformly from the given boxes until one lands in the
/// uncoordinated region.
StepsizePlan sample_uncoordinated_plan(const CostSpec& spec,
                                       const SpectralReport& net,
                                       double alpha_lo, double alpha_hi,
                                       double beta_lo, double beta_hi,
                                       Rng& rng, int max_attempts = 10000);

}  // namespace dta
