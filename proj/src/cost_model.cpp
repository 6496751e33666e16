#include "dta/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dta/errors.hpp"

namespace dta {

namespace {

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace

QuadraticCost::QuadraticCost(double a, double b, double c)
    : a_(a), b_(b), c_(c) {
  if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b) ||
      !std::isfinite(c)) {
    throw InvalidSpecError("quadratic cost requires finite a > 0");
  }
}

double QuadraticCost::evaluate(std::span<const double> x) const {
  double value = c_;
  for (double v : x) value += a_ * v * v + b_ * v;
  return value;
}

void QuadraticCost::gradient(std::span<const double> x,
                             std::span<double> out) const {
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = 2.0 * a_ * x[j] + b_;
}

CostSpec::CostSpec(std::vector<std::shared_ptr<const CostFunction>> costs,
                   StateMatrix demands)
    : costs_(std::move(costs)), demands_(std::move(demands)) {
  if (costs_.empty()) throw InvalidSpecError("cost spec needs n >= 1 agents");
  if (demands_.rows() != static_cast<Eigen::Index>(costs_.size())) {
    throw InvalidSpecError("one demand row per agent is required");
  }
  if (demands_.cols() < 1) throw InvalidSpecError("dimension u must be >= 1");
  if (!demands_.allFinite()) throw InvalidSpecError("demands must be finite");

  eta_lo_ = std::numeric_limits<double>::infinity();
  phi_hi_ = 0.0;
  for (const auto& c : costs_) {
    if (!c) throw InvalidSpecError("null cost function");
    const double eta = c->eta();
    const double phi = c->phi();
    if (!(eta > 0.0) || eta > phi) {
      throw InvalidSpecError("each agent needs 0 < eta_i <= phi_i");
    }
    eta_lo_ = std::min(eta_lo_, eta);
    phi_hi_ = std::max(phi_hi_, phi);
  }
}

CostSpec CostSpec::quadratic(const std::vector<QuadraticCost>& costs,
                             StateMatrix demands) {
  std::vector<std::shared_ptr<const CostFunction>> owned;
  owned.reserve(costs.size());
  for (const auto& c : costs) owned.push_back(std::make_shared<QuadraticCost>(c));
  return CostSpec(std::move(owned), std::move(demands));
}

std::vector<const QuadraticCost*> CostSpec::quadratic_costs() const {
  std::vector<const QuadraticCost*> out;
  out.reserve(costs_.size());
  for (const auto& c : costs_) {
    out.push_back(dynamic_cast<const QuadraticCost*>(c.get()));
  }
  return out;
}

Eigen::RowVectorXd gradient(const CostSpec& spec, int agent,
                            const Eigen::RowVectorXd& x) {
  if (agent < 0 || agent >= spec.agents()) {
    throw DomainError("agent index out of range");
  }
  if (x.size() != spec.dimension()) throw DomainError("dimension mismatch");
  if (!all_finite({x.data(), static_cast<std::size_t>(x.size())})) {
    throw DomainError("gradient evaluated at a non-finite point");
  }
  Eigen::RowVectorXd g(x.size());
  spec.cost(agent).gradient({x.data(), static_cast<std::size_t>(x.size())},
                            {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

void stacked_gradient(const CostSpec& spec, const StateMatrix& x,
                      StateMatrix& out) {
  const auto u = static_cast<std::size_t>(x.cols());
  out.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    spec.cost(static_cast<int>(i))
        .gradient({x.row(i).data(), u}, {out.row(i).data(), u});
  }
}

KktSolution kkt_solve(const CostSpec& spec) {
  const auto quads = spec.quadratic_costs();
  const int n = spec.agents();
  const int u = spec.dimension();

  double inv_sum = 0.0;
  double offset = 0.0;
  for (const auto* q : quads) {
    if (q == nullptr) {
      throw InvalidSpecError("closed-form KKT needs quadratic costs");
    }
    if (!(q->a() > 0.0)) throw InvalidSpecError("a_i must be positive");
    inv_sum += 1.0 / (2.0 * q->a());
    offset += q->b() / (2.0 * q->a());
  }

  KktSolution sol;
  sol.mu_star = (spec.demands().colwise().sum().array() + offset) / inv_sum;
  sol.x_star.resize(n, u);
  for (int i = 0; i < n; ++i) {
    const auto* q = quads[i];
    sol.x_star.row(i) = (sol.mu_star.array() - q->b()) / (2.0 * q->a());
  }
  return sol;
}

double global_cost(const CostSpec& spec, const StateMatrix& x) {
  if (x.rows() != spec.agents() || x.cols() != spec.dimension()) {
    throw DomainError("state shape does not match the cost spec");
  }
  const auto u = static_cast<std::size_t>(x.cols());
  double total = 0.0;
  for (int i = 0; i < spec.agents(); ++i) {
    total += spec.cost(i).evaluate({x.row(i).data(), u});
  }
  return total;
}

}  // namespace dta
