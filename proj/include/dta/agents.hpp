#pragma once

// Per-agent form of the step kernels. Agent i only reads its own state and
// the messages (grad f_j(x_j), y_j) from neighbors whose link is active this
// round, weighted by the negotiated w_ij. Used as an independent check of the
// matrix kernels.

#include "dta/engine.hpp"

namespace dta {

struct NeighborMessage {
  int from = 0;
  double weight = 0.0;
  Eigen::RowVectorXd grad;
  Eigen::RowVectorXd y;
};

/// Inbox of every agent for the round described by `w.active_edges`.
std::vector<std::vector<NeighborMessage>> exchange(const NetworkModel& model,
                                                   const WeightSample& w,
                                                   const CostSpec& spec,
                                                   const IterateState& s);

/// Covers shared, disturbed and uncoordinated DTA; `zeta` may be null.
void agent_dta_step(IterateState& s, const CostSpec& spec,
                    const NetworkModel& model, const WeightSample& w,
                    const StepsizePlan& plan, const StateMatrix* zeta);

void agent_wga_step(IterateState& s, const CostSpec& spec,
                    const NetworkModel& model, const WeightSample& w,
                    double alpha, const StateMatrix* zeta);

}  // namespace dta
