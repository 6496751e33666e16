#include "dta/agents.hpp"

#include "dta/errors.hpp"

namespace dta {

std::vector<std::vector<NeighborMessage>> exchange(const NetworkModel& model,
                                                   const WeightSample& w,
                                                   const CostSpec& spec,
                                                   const IterateState& s) {
  std::vector<std::vector<NeighborMessage>> inbox(model.n);
  for (int e : w.active_edges) {
    const auto [i, j] = model.edges[e];
    const double wij = model.negotiated(e);
    inbox[i].push_back({j, wij, gradient(spec, j, s.x.row(j)), s.y.row(j)});
    inbox[j].push_back({i, wij, gradient(spec, i, s.x.row(i)), s.y.row(i)});
  }
  return inbox;
}

void agent_dta_step(IterateState& s, const CostSpec& spec,
                    const NetworkModel& model, const WeightSample& w,
                    const StepsizePlan& plan, const StateMatrix* zeta) {
  const int n = spec.agents();
  const auto alphas = plan.alpha_vector(n);
  const auto betas = plan.beta_vector(n);
  const auto inbox = exchange(model, w, spec, s);

  StateMatrix x_next(s.x.rows(), s.x.cols());
  StateMatrix y_next(s.y.rows(), s.y.cols());
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXd gi = gradient(spec, i, s.x.row(i));
    Eigen::RowVectorXd pull = Eigen::RowVectorXd::Zero(gi.size());
    Eigen::RowVectorXd mixed_y = Eigen::RowVectorXd::Zero(gi.size());
    double self = 1.0;
    for (const auto& m : inbox[i]) {
      pull += m.weight * (gi - m.grad);
      mixed_y += m.weight * m.y;
      self -= m.weight;
    }
    mixed_y += self * s.y.row(i);

    Eigen::RowVectorXd dx = -alphas[i] * s.y.row(i) - betas[i] * pull;
    if (zeta != nullptr) dx += zeta->row(i);
    x_next.row(i) = s.x.row(i) + dx;
    y_next.row(i) = mixed_y + dx;
  }
  s.x = std::move(x_next);
  s.y = std::move(y_next);
  ++s.k;
  check_divergence(s, -1);
}

void agent_wga_step(IterateState& s, const CostSpec& spec,
                    const NetworkModel& model, const WeightSample& w,
                    double alpha, const StateMatrix* zeta) {
  const int n = spec.agents();
  const auto inbox = exchange(model, w, spec, s);
  StateMatrix x_next(s.x.rows(), s.x.cols());
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXd gi = gradient(spec, i, s.x.row(i));
    Eigen::RowVectorXd pull = Eigen::RowVectorXd::Zero(gi.size());
    for (const auto& m : inbox[i]) pull += m.weight * (gi - m.grad);
    x_next.row(i) = s.x.row(i) - alpha * pull;
    if (zeta != nullptr) x_next.row(i) += zeta->row(i);
  }
  s.x = std::move(x_next);
  ++s.k;
  check_divergence(s, -1);
}

}  // namespace dta
