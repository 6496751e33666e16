#include "dta/engine.hpp"

#include <cmath>
#include <exception>

#include "dta/errors.hpp"

namespace dta {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Dta: return "dta";
    case Algorithm::DtaDisturbed: return "dta-disturbed";
    case Algorithm::DtaUncoordinated: return "dta-uncoordinated";
    case Algorithm::Wga: return "wga";
  }
  return "dta";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "dta") return Algorithm::Dta;
  if (s == "dta-disturbed") return Algorithm::DtaDisturbed;
  if (s == "dta-uncoordinated") return Algorithm::DtaUncoordinated;
  if (s == "wga") return Algorithm::Wga;
  throw ConfigError("unknown algorithm '" + s + "'");
}

IterateState init(const CostSpec& spec, const StateMatrix& x0) {
  if (x0.rows() != spec.agents() || x0.cols() != spec.dimension()) {
    throw DomainError("x0 shape does not match the cost spec");
  }
  if (!x0.allFinite()) throw DomainError("x0 must be finite");
  IterateState s;
  s.x = x0;
  s.y = x0 - spec.demands();
  s.k = 0;
  return s;
}

void check_divergence(const IterateState& s, int replica) {
  if (!s.x.allFinite() || !s.y.allFinite() || s.x.norm() > kDivergenceNorm ||
      s.y.norm() > kDivergenceNorm) {
    throw DivergenceError(replica, s.k);
  }
}

namespace {

void require_square(const IterateState& s, const WeightSample& w) {
  if (w.matrix.rows() != s.x.rows() || w.matrix.cols() != s.x.rows()) {
    throw DomainError("weight matrix does not match the agent count");
  }
}

}  // namespace

void laplacian_apply(const Eigen::MatrixXd& w, const StateMatrix& v,
                     StateMatrix& out) {
  const Eigen::Index n = w.rows();
  out.setZero(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      for (Eigen::Index c = 0; c < v.cols(); ++c) {
        const double f = wij * (v(i, c) - v(j, c));
        out(i, c) += f;
        out(j, c) -= f;
      }
    }
  }
}

namespace {

// dx = zeta - D_alpha y - D_beta (g - W g); x += dx; y = W y + dx.
void tracking_step(IterateState& s, const CostSpec& spec, const WeightSample& w,
                   const StepsizePlan& plan, const StateMatrix* zeta,
                   StepWorkspace& ws) {
  require_square(s, w);
  stacked_gradient(spec, s.x, ws.grad);
  laplacian_apply(w.matrix, ws.grad, ws.mixed);
  if (plan.mode == PlanMode::Shared) {
    ws.dx = -plan.alpha * s.y - plan.beta * ws.mixed;
  } else {
    const Eigen::Index n = s.x.rows();
    if (static_cast<Eigen::Index>(plan.alphas.size()) != n) {
      throw DomainError("per-agent plan does not match the agent count");
    }
    ws.dx.resize(s.x.rows(), s.x.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      ws.dx.row(i) = -plan.alphas[i] * s.y.row(i) - plan.betas[i] * ws.mixed.row(i);
    }
  }
  if (zeta != nullptr) ws.dx += *zeta;
  s.x += ws.dx;
  laplacian_apply(w.matrix, s.y, ws.mixed);
  s.y += ws.dx - ws.mixed;
  ++s.k;
  check_divergence(s, -1);
}

}  // namespace

void dta_step(IterateState& s, const CostSpec& spec, const WeightSample& w,
              const StepsizePlan& plan, StepWorkspace& ws) {
  if (plan.mode != PlanMode::Shared) {
    throw DomainError("dta_step needs a shared stepsize plan");
  }
  tracking_step(s, spec, w, plan, nullptr, ws);
}

void dta_step_disturbed(IterateState& s, const CostSpec& spec,
                        const WeightSample& w, const StepsizePlan& plan,
                        const StateMatrix& zeta, StepWorkspace& ws) {
  if (zeta.rows() != s.x.rows() || zeta.cols() != s.x.cols()) {
    throw DomainError("disturbance shape does not match the state");
  }
  tracking_step(s, spec, w, plan, &zeta, ws);
}

void dta_step_uncoordinated(IterateState& s, const CostSpec& spec,
                            const WeightSample& w, const StepsizePlan& plan,
                            StepWorkspace& ws) {
  if (plan.mode != PlanMode::Uncoordinated) {
    throw DomainError("dta_step_uncoordinated needs per-agent stepsizes");
  }
  tracking_step(s, spec, w, plan, nullptr, ws);
}

void wga_step(IterateState& s, const CostSpec& spec, const WeightSample& w,
              double alpha, const StateMatrix& zeta, StepWorkspace& ws) {
  require_square(s, w);
  if (zeta.rows() != s.x.rows() || zeta.cols() != s.x.cols()) {
    throw DomainError("disturbance shape does not match the state");
  }
  stacked_gradient(spec, s.x, ws.grad);
  laplacian_apply(w.matrix, ws.grad, ws.mixed);
  s.x += zeta - alpha * ws.mixed;
  ++s.k;
  check_divergence(s, -1);
}

void EngineConfig::validate(const CostSpec& spec) const {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (replicas < 1) throw ConfigError("replicas must be >= 1");
  if (x0.rows() != spec.agents() || x0.cols() != spec.dimension()) {
    throw ConfigError("x0 shape does not match the cost spec");
  }
  const bool per_agent = plan.mode == PlanMode::Uncoordinated;
  if (algorithm == Algorithm::DtaUncoordinated) {
    if (!per_agent) throw ConfigError("dta-uncoordinated needs per-agent stepsizes");
    if (static_cast<int>(plan.alphas.size()) != spec.agents()) {
      throw ConfigError("per-agent stepsize lists must have n entries");
    }
  } else if (algorithm == Algorithm::Wga) {
    if (!(wga_alpha > 0.0)) throw ConfigError("wga needs a positive stepsize");
  } else if (per_agent) {
    throw ConfigError(to_string(algorithm) + " needs a shared stepsize plan");
  }
  disturbance.validate();
}

std::vector<RunTrace> RunResult::traces() const {
  std::vector<RunTrace> out;
  out.reserve(replicas.size());
  for (const auto& r : replicas) out.push_back(r.trace);
  return out;
}

ReplicaResult run_replica(const EngineConfig& cfg, const CostSpec& spec,
                          const NetworkModel& model, const KktSolution& kkt,
                          int replica) {
  Rng net_rng = make_stream(cfg.seed, static_cast<std::uint64_t>(replica),
                            StreamPurpose::Network);
  Rng dist_rng = make_stream(cfg.seed, static_cast<std::uint64_t>(replica),
                             StreamPurpose::Disturbance);
  const bool disturbed = cfg.disturbance.active() &&
                         (cfg.algorithm == Algorithm::DtaDisturbed ||
                          cfg.algorithm == Algorithm::Wga);

  ReplicaResult out;
  IterateState s = init(spec, cfg.x0);
  out.trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  out.trace.push(residuals(s, spec, kkt));
  out.disturbance_sum = Eigen::RowVectorXd::Zero(spec.dimension());

  StateMatrix zeta = StateMatrix::Zero(spec.agents(), spec.dimension());
  // Neumaier compensation keeps the long drift sum exact to a few ulps.
  Eigen::RowVectorXd drift_carry = Eigen::RowVectorXd::Zero(spec.dimension());
  WeightSample w;
  StepWorkspace ws;
  try {
    for (std::int64_t k = 0; k < cfg.iterations; ++k) {
      sample_into(model, net_rng, w);
      if (disturbed) {
        draw_disturbance(cfg.disturbance, k, dist_rng, zeta);
        for (Eigen::Index j = 0; j < zeta.cols(); ++j) {
          for (Eigen::Index i = 0; i < zeta.rows(); ++i) {
            double& sum = out.disturbance_sum(j);
            const double v = zeta(i, j);
            const double t = sum + v;
            drift_carry(j) += std::abs(sum) >= std::abs(v) ? (sum - t) + v
                                                          : (v - t) + sum;
            sum = t;
          }
        }
      }
      switch (cfg.algorithm) {
        case Algorithm::Dta:
          dta_step(s, spec, w, cfg.plan, ws);
          break;
        case Algorithm::DtaDisturbed:
          dta_step_disturbed(s, spec, w, cfg.plan, zeta, ws);
          break;
        case Algorithm::DtaUncoordinated:
          dta_step_uncoordinated(s, spec, w, cfg.plan, ws);
          break;
        case Algorithm::Wga:
          wga_step(s, spec, w, cfg.wga_alpha, zeta, ws);
          break;
      }
      out.trace.push(residuals(s, spec, kkt));
    }
  } catch (const DivergenceError& e) {
    throw DivergenceError(replica, e.iteration());
  }
  out.disturbance_sum += drift_carry;
  out.final_state = std::move(s);
  return out;
}

RunResult run(const EngineConfig& cfg, const CostSpec& spec,
              const NetworkModel& model) {
  model.validate();
  cfg.validate(spec);
  if (model.n != spec.agents()) {
    throw ConfigError("network size does not match the agent count");
  }

  RunResult result;
  result.kkt = kkt_solve(spec);
  result.replicas.resize(cfg.replicas);
  std::vector<std::exception_ptr> errors(cfg.replicas);

  if (cfg.execution == Execution::Serial) {
    for (int r = 0; r < cfg.replicas; ++r) {
      try {
        result.replicas[r] = run_replica(cfg, spec, model, result.kkt, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (int r = 0; r < cfg.replicas; ++r) {
      try {
        result.replicas[r] = run_replica(cfg, spec, model, result.kkt, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

}  // namespace dta
