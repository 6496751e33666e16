#include "dta/metrics.hpp"

#include <cmath>

#include "dta/engine.hpp"
#include "dta/errors.hpp"

namespace dta {

Residuals residuals(const IterateState& state, const CostSpec& spec,
                    const KktSolution& kkt) {
  if (state.x.rows() != kkt.x_star.rows() || state.x.cols() != kkt.x_star.cols()) {
    throw DomainError("state shape does not match the KKT solution");
  }
  Residuals r;
  r.optimality_distance = (state.x - kkt.x_star).norm();
  r.feasibility_gap =
      (state.x.colwise().sum() - spec.demands().colwise().sum()).norm();
  r.tracking_norm = state.y.norm();
  StateMatrix g;
  stacked_gradient(spec, state.x, g);
  const Eigen::RowVectorXd mean = g.colwise().mean();
  r.gradient_dispersion = (g.rowwise() - mean).norm();
  return r;
}

void RunTrace::reserve(std::size_t n) {
  optimality_distance.reserve(n);
  feasibility_gap.reserve(n);
  tracking_norm.reserve(n);
  gradient_dispersion.reserve(n);
}

void RunTrace::push(const Residuals& r) {
  optimality_distance.push_back(r.optimality_distance);
  feasibility_gap.push_back(r.feasibility_gap);
  tracking_norm.push_back(r.tracking_norm);
  gradient_dispersion.push_back(r.gradient_dispersion);
}

namespace {

std::vector<double> rms(const std::vector<RunTrace>& traces,
                        std::vector<double> RunTrace::*field) {
  const std::size_t len = (traces.front().*field).size();
  std::vector<double> out(len, 0.0);
  for (const auto& t : traces) {
    const auto& v = t.*field;
    for (std::size_t k = 0; k < len; ++k) out[k] += v[k] * v[k];
  }
  const double inv = 1.0 / static_cast<double>(traces.size());
  for (double& v : out) v = std::sqrt(v * inv);
  return out;
}

}  // namespace

RunTrace aggregate(const std::vector<RunTrace>& traces) {
  if (traces.empty()) throw DomainError("cannot aggregate zero traces");
  const std::size_t len = traces.front().size();
  for (const auto& t : traces) {
    if (t.size() != len) throw DomainError("traces have unequal lengths");
  }
  if (traces.size() == 1) return traces.front();
  RunTrace out;
  out.optimality_distance = rms(traces, &RunTrace::optimality_distance);
  out.feasibility_gap = rms(traces, &RunTrace::feasibility_gap);
  out.tracking_norm = rms(traces, &RunTrace::tracking_norm);
  out.gradient_dispersion = rms(traces, &RunTrace::gradient_dispersion);
  return out;
}

std::size_t floor_index(const std::vector<double>& series, double floor_rel) {
  if (series.empty()) return 0;
  const double floor = floor_rel * series.front();
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (!(series[k] > floor)) return k;
  }
  return series.size();
}

RateEstimate empirical_rate(const std::vector<double>& series,
                            std::int64_t k_e, std::int64_t N,
                            double floor_rel) {
  if (N < 1 || N > k_e) throw DomainError("rate window needs 1 <= N <= k_e");
  if (static_cast<std::int64_t>(series.size()) <= k_e) {
    throw DomainError("rate window extends past the end of the trace");
  }
  RateEstimate est;
  est.k_e = k_e;
  est.N = N;

  const auto first_floor = static_cast<std::int64_t>(floor_index(series, floor_rel));
  if (first_floor <= k_e) {
    est.window_shrunk = true;
    est.k_e = first_floor - 1;
    est.N = std::min<std::int64_t>(N, est.k_e / 2);
    if (est.N < 2) {
      est.exact_convergence = true;
      est.k_e = std::max<std::int64_t>(est.k_e, 0);
      est.N = std::max<std::int64_t>(est.N, 0);
      est.q_n = 0.0;
      return est;
    }
  }
  const double end = series[est.k_e];
  const double start = series[est.k_e - est.N];
  est.q_n = std::pow(end / start, 1.0 / static_cast<double>(est.N));
  return est;
}

LinearFit log_linear_fit(const std::vector<double>& series, std::size_t begin,
                         std::size_t end) {
  if (end > series.size() || end < begin + 2) {
    throw DomainError("fit range needs at least two points inside the trace");
  }
  const double m = static_cast<double>(end - begin);
  double sx = 0.0, sy = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    if (!(series[k] > 0.0)) throw DomainError("log fit needs positive values");
    sx += static_cast<double>(k);
    sy += std::log(series[k]);
  }
  const double mx = sx / m;
  const double my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    const double dx = static_cast<double>(k) - mx;
    const double dy = std::log(series[k]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

bool non_convergent(const std::vector<double>& series, std::size_t window,
                    double floor_rel) {
  if (series.size() <= window) throw DomainError("window longer than trace");
  const double last = series.back();
  const double first = series[series.size() - 1 - window];
  return last > floor_rel * series.front() && last >= first * (1.0 - 1e-9);
}

}  // namespace dta
