#include "dta/stepsize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dta/errors.hpp"

namespace dta {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ConditionCheck less_than(std::string name, double lhs, double rhs) {
  return {std::move(name), lhs, rhs, lhs < rhs - kFeasibilityMargin};
}

FeasibilityVerdict verdict_of(std::vector<ConditionCheck> checks) {
  FeasibilityVerdict v;
  v.feasible = true;
  for (const auto& c : checks) {
    if (!c.holds) {
      v.feasible = false;
      v.failed = c.name;
      break;
    }
  }
  v.checks = std::move(checks);
  return v;
}

void require_nonnegative(double alpha, double beta) {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) ||
      !std::isfinite(beta)) {
    throw DomainError("stepsizes must be finite and non-negative");
  }
}

}  // namespace

StepsizePlan StepsizePlan::shared(double alpha, double beta) {
  require_nonnegative(alpha, beta);
  StepsizePlan p;
  p.mode = PlanMode::Shared;
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

StepsizePlan StepsizePlan::uncoordinated(std::vector<double> alphas,
                                         std::vector<double> betas) {
  if (alphas.empty() || alphas.size() != betas.size()) {
    throw DomainError("per-agent stepsize lists must be non-empty and equal");
  }
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    require_nonnegative(alphas[i], betas[i]);
  }
  StepsizePlan p;
  p.mode = PlanMode::Uncoordinated;
  p.alphas = std::move(alphas);
  p.betas = std::move(betas);
  p.alpha = *std::max_element(p.alphas.begin(), p.alphas.end());
  p.beta = *std::max_element(p.betas.begin(), p.betas.end());
  return p;
}

double StepsizePlan::alpha_hi() const {
  return mode == PlanMode::Shared
             ? alpha
             : *std::max_element(alphas.begin(), alphas.end());
}
double StepsizePlan::alpha_lo() const {
  return mode == PlanMode::Shared
             ? alpha
             : *std::min_element(alphas.begin(), alphas.end());
}
double StepsizePlan::beta_hi() const {
  return mode == PlanMode::Shared
             ? beta
             : *std::max_element(betas.begin(), betas.end());
}
double StepsizePlan::beta_lo() const {
  return mode == PlanMode::Shared
             ? beta
             : *std::min_element(betas.begin(), betas.end());
}
double StepsizePlan::alpha_sum(int n) const {
  return mode == PlanMode::Shared
             ? alpha * n
             : std::accumulate(alphas.begin(), alphas.end(), 0.0);
}

std::vector<double> StepsizePlan::alpha_vector(int n) const {
  if (mode == PlanMode::Shared) return std::vector<double>(n, alpha);
  if (static_cast<int>(alphas.size()) != n) {
    throw DomainError("per-agent alpha list does not match n");
  }
  return alphas;
}

std::vector<double> StepsizePlan::beta_vector(int n) const {
  if (mode == PlanMode::Shared) return std::vector<double>(n, beta);
  if (static_cast<int>(betas.size()) != n) {
    throw DomainError("per-agent beta list does not match n");
  }
  return betas;
}

double lower_contraction(double eta_lo, double phi_hi, double lambda2, int n) {
  const double m = n - 1.0;
  return eta_lo * (1.0 - lambda2) * (phi_hi + m * eta_lo) /
         std::sqrt(n * (phi_hi * phi_hi + m * eta_lo * eta_lo));
}

RateConstants constants(const CostSpec& spec, const SpectralReport& net,
                        const StepsizePlan* plan) {
  if (!net.connected_in_mean()) {
    throw InfeasibleNetworkError(
        "network is not connected in mean (rho(E{W} - 11'/n) = " +
        std::to_string(net.rho_mean_gap) + ")");
  }
  RateConstants rc;
  rc.n = spec.agents();
  rc.eta_lo = spec.eta_lo();
  rc.phi_hi = spec.phi_hi();
  rc.K1 = lower_contraction(rc.eta_lo, rc.phi_hi, net.lambda2_mean, rc.n);
  rc.K2 = rc.phi_hi * (1.0 - net.lambdan_mean);
  // Time-invariant theta: the fixed-network constants use the same spectra.
  rc.K1p = rc.K1;
  rc.K2p = rc.K2;
  rc.K1pp = rc.K1;
  rc.K2pp = rc.K2;
  if (plan != nullptr && plan->mode == PlanMode::Uncoordinated) {
    const double bl = plan->beta_lo();
    const double bh = plan->beta_hi();
    const double m = rc.n - 1.0;
    const double eta = rc.eta_lo;
    const double phi = rc.phi_hi;
    rc.K1pp = bl * eta * (1.0 - net.lambda2_mean) * (bh * phi + m * eta * bl) /
              std::sqrt(rc.n * (bh * bh * phi * phi + m * eta * eta * bl * bl));
    rc.K2pp = bh * phi * (1.0 - net.lambdan_mean);
  }
  return rc;
}

SharedContractions shared_contractions(const RateConstants& rc,
                                       const SpectralReport& net,
                                       double alpha, double beta) {
  SharedContractions s;
  s.s1 = alpha * alpha + 2.0 * alpha + net.lambda2_sq;
  s.s2 = std::sqrt(
      std::max(0.0, 1.0 + beta * beta * rc.K2 * rc.K2 - 2.0 * beta * rc.K1));
  s.s1p = std::max(net.lambda2_mean - alpha, alpha - net.lambdan_mean);
  s.s2p = std::max(std::abs(1.0 - beta * rc.K1p), std::abs(beta * rc.K2p - 1.0));
  return s;
}

UncoordinatedContractions uncoordinated_contractions(
    const RateConstants& rc, const SpectralReport& net,
    const StepsizePlan& plan) {
  UncoordinatedContractions u;
  const double ah = plan.alpha_hi();
  u.s4 = 1.0 - plan.alpha_sum(rc.n);
  u.s5 = ah * ah + 2.0 * ah + net.lambda2_sq;
  u.s6 = std::sqrt(
      std::max(0.0, 1.0 + rc.K2pp * rc.K2pp - 2.0 * rc.K1pp));
  return u;
}

SharedRegion feasible_region_shared(const RateConstants& rc,
                                    const SpectralReport& net) {
  SharedRegion r;
  r.alpha_max = std::sqrt(2.0 - net.lambda2_sq) - 1.0;
  r.beta_max = 2.0 * rc.K1 / (rc.K2 * rc.K2);
  r.rc = rc;
  r.net = net;
  return r;
}

FeasibilityVerdict SharedRegion::check(double alpha, double beta) const {
  require_nonnegative(alpha, beta);
  const auto s = shared_contractions(rc, net, alpha, beta);
  return verdict_of({
      less_than("alpha < sqrt(2 - lambda2_sq) - 1", alpha, alpha_max),
      less_than("beta < 2 K1 / K2^2", beta, beta_max),
      less_than("alpha beta phi (1 - lambdan_floor) < (1 - s1)(1 - s2)",
                alpha * beta * rc.phi_hi * (1.0 - net.lambdan_floor),
                (1.0 - s.s1) * (1.0 - s.s2)),
  });
}

FeasibilityVerdict feasible_fixed(const RateConstants& rc,
                                  const SpectralReport& net, double alpha,
                                  double beta) {
  require_nonnegative(alpha, beta);
  const auto s = shared_contractions(rc, net, alpha, beta);
  return verdict_of({
      less_than("alpha < 1 - lambdan_mean", alpha, 1.0 - net.lambdan_mean),
      less_than("beta < 1 / K2'", beta, 1.0 / rc.K2p),
      less_than("alpha beta phi (1 - lambdan_mean) < (1 - s1')(1 - s2')",
                alpha * beta * rc.phi_hi * (1.0 - net.lambdan_mean),
                (1.0 - s.s1p) * (1.0 - s.s2p)),
  });
}

OptimalStepsizes optimal_stepsizes(const RateConstants& rc,
                                   const SpectralReport& net) {
  const double k1 = rc.K1p;
  const double k2 = rc.K2p;
  const double l2 = net.lambda2_mean;
  const double ln = net.lambdan_mean;

  OptimalStepsizes o;
  o.beta = 2.0 / (k1 + k2);
  const double b = o.beta;
  o.branches[0] = k1 * (1.0 - l2) / k2;
  o.branches[1] = k1 * (1.0 + ln) / (2.0 * k1 + k2);
  o.branches[2] =
      0.5 * (1.0 + l2 - 2.0 * b * k2 +
             std::sqrt(4.0 * (b * k2 - 1.0) * (b * k2 - 1.0) +
                       (1.0 - l2) * (5.0 - l2)));
  const double disc = (3.0 + ln) * (3.0 + ln) - 4.0 * b * k1 * (1.0 + ln);
  if (disc < 0.0) {
    o.branches[3] = kNaN;
    o.warnings.push_back(
        "fourth alpha branch has a negative discriminant and is excluded");
  } else {
    o.branches[3] = 0.5 * (3.0 + ln - std::sqrt(disc));
  }

  o.alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    if (!std::isnan(o.branches[i]) && o.branches[i] < o.alpha) {
      o.alpha = o.branches[i];
      o.active_branch = i;
    }
  }
  return o;
}

double predicted_rate(const RateConstants& rc, const StepsizePlan& plan,
                      const SpectralReport& net, std::optional<double> q_zeta) {
  if (plan.mode != PlanMode::Shared) {
    throw InfeasiblePlanError("predicted rate is defined for shared plans");
  }
  const auto verdict = feasible_region_shared(rc, net).check(plan.alpha, plan.beta);
  if (!verdict.feasible) {
    throw InfeasiblePlanError("plan violates: " + verdict.failed);
  }
  const double a = plan.alpha;
  const auto s = shared_contractions(rc, net, a, plan.beta);
  const double coupling = a * plan.beta * rc.phi_hi * (1.0 - net.lambdan_floor);
  double rate = std::max({s.s1 + coupling / (1.0 - s.s2),
                          s.s2 + coupling / (1.0 - s.s1), std::abs(1.0 - a)});
  if (q_zeta) rate = std::max(rate, *q_zeta);
  return rate;
}

double fixed_network_rate(const RateConstants& rc, const SpectralReport& net,
                          double alpha, double beta,
                          std::optional<double> q_zeta) {
  const auto s = shared_contractions(rc, net, alpha, beta);
  const double coupling = alpha * beta * rc.phi_hi * (1.0 - net.lambdan_mean);
  double rate = std::max({s.s1p + coupling / (1.0 - s.s2p),
                          s.s2p + coupling / (1.0 - s.s1p),
                          std::abs(1.0 - alpha)});
  if (q_zeta) rate = std::max(rate, *q_zeta);
  return rate;
}

FeasibilityVerdict feasible_region_uncoordinated(const RateConstants& rc,
                                                 const StepsizePlan& plan,
                                                 const SpectralReport& net) {
  if (plan.mode != PlanMode::Uncoordinated) {
    throw DomainError("uncoordinated region needs per-agent stepsizes");
  }
  const auto u = uncoordinated_contractions(rc, net, plan);
  const double ah = plan.alpha_hi();
  const double coupling = plan.beta_hi() * (1.0 - net.lambdan_floor) * rc.phi_hi;
  const double lhs = (1.0 - u.s4) * (1.0 - u.s5) * (1.0 - u.s6) -
                     coupling * ah * (2.0 - u.s4 - u.s5);
  const double rhs = ah * ah * (1.0 - u.s6) + 2.0 * ah * ah * coupling;
  return verdict_of({
      less_than("sum alpha_i < 2", plan.alpha_sum(rc.n), 2.0),
      less_than("|s4| < 1", std::abs(u.s4), 1.0),
      less_than("alpha_hi < sqrt(2 - lambda2_sq) - 1", ah,
                std::sqrt(2.0 - net.lambda2_sq) - 1.0),
      less_than("K2''^2 < 2 K1''", rc.K2pp * rc.K2pp, 2.0 * rc.K1pp),
      less_than("uncoordinated coupling inequality", lhs, rhs),
  });
}

StepsizePlan sample_uncoordinated_plan(const CostSpec& spec,
                                       const SpectralReport& net,
                                       double alpha_lo, double alpha_hi,
                                       double beta_lo, double beta_hi,
                                       Rng& rng, int max_attempts) {
  const int n = spec.agents();
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<double> as(n), bs(n);
    for (int i = 0; i < n; ++i) as[i] = rng.uniform(alpha_lo, alpha_hi);
    for (int i = 0; i < n; ++i) bs[i] = rng.uniform(beta_lo, beta_hi);
    auto plan = StepsizePlan::uncoordinated(std::move(as), std::move(bs));
    const auto rc = constants(spec, net, &plan);
    auto verdict = feasible_region_uncoordinated(rc, plan, net);
    if (verdict.feasible) {
      plan.verdict = std::move(verdict);
      return plan;
    }
  }
  throw InfeasiblePlanError("no uncoordinated plan found inside the region");
}

}  // namespace dta
