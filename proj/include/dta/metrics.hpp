#pragma once

#include <cstdint>
#include <vector>

#include "dta/cost_model.hpp"

namespace dta {

struct IterateState;

struct Residuals {
  double optimality_distance = 0.0;  // |x - x*|_F
  double feasibility_gap = 0.0;      // |1'x - 1'd|
  double tracking_norm = 0.0;        // |y|_F
  double gradient_dispersion = 0.0;  // |L grad f(x)|_F, L = I - 11'/n
};

Residuals residuals(const IterateState& state, const CostSpec& spec,
                    const KktSolution& kkt);

/// Per-iteration series; index k holds the value after k steps.
struct RunTrace {
  std::vector<double> optimality_distance;
  std::vector<double> feasibility_gap;
  std::vector<double> tracking_norm;
  std::vector<double> gradient_dispersion;

  void reserve(std::size_t n);
  void push(const Residuals& r);
  std::size_t size() const { return optimality_distance.size(); }
  bool operator==(const RunTrace&) const = default;
};

/// Elementwise sqrt(mean of squares) across replicas.
RunTrace aggregate(const std::vector<RunTrace>& traces);

struct RateEstimate {
  double q_n = 0.0;
  std::int64_t k_e = 0;
  std::int64_t N = 0;
  /// The window was moved before the numerical floor.
  bool window_shrunk = false;
  /// Fewer than two usable ratios remained; q_n is reported as 0.
  bool exact_convergence = false;
};

inline constexpr double kDefaultFloorRel = 1e-10;

/// Index of the first entry at or below floor_rel * series[0], or
/// series.size() if the series never reaches the floor.
std::size_t floor_index(const std::vector<double>& series,
                        double floor_rel = kDefaultFloorRel);

/// q_n = (r(k_e) / r(k_e - N))^(1/N). Entries at or below floor_rel * r(0)
/// count as zero; if the window touches them, k_e moves to the last entry
/// before the floor and N shrinks to at most half of it.
RateEstimate empirical_rate(const std::vector<double>& series,
                            std::int64_t k_e = 25000, std::int64_t N = 1000,
                            double floor_rel = kDefaultFloorRel);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least squares fit of log(series[k]) against k for k in [begin, end).
LinearFit log_linear_fit(const std::vector<double>& series, std::size_t begin,
                         std::size_t end);

/// Residual has not decreased over the last `window` entries and is above
/// the numerical floor.
bool non_convergent(const std::vector<double>& series, std::size_t window,
                    double floor_rel = kDefaultFloorRel);

}  // namespace dta
