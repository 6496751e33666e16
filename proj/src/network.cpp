#include "dta/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include "dta/errors.hpp"

namespace dta {

void NetworkModel::validate() const {
  if (n < 1) throw InvalidModelError("network needs n >= 1");
  const std::size_t m = edges.size();
  if (theta.size() != m || w_ij.size() != m || w_ji.size() != m) {
    throw InvalidModelError("per-edge arrays must match the edge list");
  }
  std::set<std::pair<int, int>> seen;
  std::vector<double> row(n, 0.0);
  for (std::size_t e = 0; e < m; ++e) {
    const auto [i, j] = edges[e];
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
      throw InvalidModelError("edge endpoints must be distinct agents");
    }
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second) {
      throw InvalidModelError("duplicate undirected edge");
    }
    if (!(theta[e] >= 0.0 && theta[e] <= 1.0)) {
      throw InvalidModelError("theta must lie in [0, 1]");
    }
    if (!(w_ij[e] > 0.0) || !(w_ji[e] > 0.0) || !std::isfinite(w_ij[e]) ||
        !std::isfinite(w_ji[e])) {
      throw InvalidModelError("proposed weights must be positive");
    }
    row[i] += negotiated(e);
    row[j] += negotiated(e);
  }
  for (int i = 0; i < n; ++i) {
    if (!(row[i] < 1.0)) {
      throw InvalidModelError("self-weight of agent " + std::to_string(i) +
                              " would not be positive");
    }
  }
}

double NetworkModel::negotiated(std::size_t e) const {
  return std::min(w_ij[e], w_ji[e]);
}

std::vector<int> NetworkModel::degrees() const {
  std::vector<int> deg(n, 0);
  for (const auto& e : edges) {
    ++deg[e.i];
    ++deg[e.j];
  }
  return deg;
}

NetworkModel NetworkModel::from_edges(int n, std::vector<Edge> edges,
                                      double theta) {
  NetworkModel m;
  m.n = n;
  m.edges = std::move(edges);
  m.theta.assign(m.edges.size(), theta);
  m.set_metropolis();
  return m;
}

NetworkModel NetworkModel::complete(int n, double theta) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
  return from_edges(n, std::move(edges), theta);
}

NetworkModel NetworkModel::ring(int n, double theta) {
  std::vector<Edge> edges;
  if (n == 2) edges.push_back({0, 1});
  if (n > 2)
    for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  return from_edges(n, std::move(edges), theta);
}

NetworkModel NetworkModel::random(int n, double p, double theta, Rng& rng) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.bernoulli(p)) edges.push_back({i, j});
    auto m = from_edges(n, std::move(edges), theta);
    if (graph_connected(m)) return m;
  }
  throw InvalidModelError("could not draw a connected random graph");
}

void NetworkModel::set_metropolis() {
  const auto deg = degrees();
  w_ij.resize(edges.size());
  w_ji.resize(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double w =
        1.0 / (std::max(deg[edges[e].i], deg[edges[e].j]) + 1.0);
    w_ij[e] = w;
    w_ji[e] = w;
  }
}

void NetworkModel::set_uniform_proposals(double w) {
  w_ij.assign(edges.size(), w);
  w_ji.assign(edges.size(), w);
}

void NetworkModel::set_theta(double value) {
  theta.assign(edges.size(), value);
}

namespace {

void fill_weights(const NetworkModel& model, std::span<const int> active,
                  Eigen::MatrixXd& w) {
  w.setIdentity(model.n, model.n);
  for (int e : active) {
    const auto [i, j] = model.edges[e];
    const double v = model.negotiated(e);
    w(i, j) = v;
    w(j, i) = v;
    w(i, i) -= v;
    w(j, j) -= v;
  }
}

}  // namespace

WeightSample negotiate_weights(const NetworkModel& model,
                               std::span<const int> active) {
  model.validate();
  for (int e : active) {
    if (e < 0 || static_cast<std::size_t>(e) >= model.edges.size()) {
      throw InvalidModelError("active edge index out of range");
    }
  }
  WeightSample out;
  out.active_edges.assign(active.begin(), active.end());
  fill_weights(model, active, out.matrix);
  return out;
}

WeightSample sample(const NetworkModel& model, Rng& rng) {
  model.validate();
  WeightSample out;
  sample_into(model, rng, out);
  return out;
}

void sample_into(const NetworkModel& model, Rng& rng, WeightSample& out) {
  out.active_edges.clear();
  for (std::size_t e = 0; e < model.edges.size(); ++e) {
    if (rng.bernoulli(model.theta[e])) {
      out.active_edges.push_back(static_cast<int>(e));
    }
  }
  fill_weights(model, out.active_edges, out.matrix);
}

Eigen::MatrixXd expected_weight_matrix(const NetworkModel& model) {
  model.validate();
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(model.n, model.n);
  for (std::size_t e = 0; e < model.edges.size(); ++e) {
    const auto [i, j] = model.edges[e];
    const double v = model.theta[e] * model.negotiated(e);
    w(i, j) += v;
    w(j, i) += v;
    w(i, i) -= v;
    w(j, j) -= v;
  }
  return w;
}

Eigen::MatrixXd expected_square_matrix(const NetworkModel& model,
                                       SquareMode mode, std::int64_t samples,
                                       std::uint64_t seed) {
  model.validate();
  const int n = model.n;
  const std::size_t m = model.edges.size();

  switch (mode) {
    case SquareMode::Exact: {
      if (m > kMaxExactEdges) {
        throw CapacityError("exact E{W^2} supports at most " +
                            std::to_string(kMaxExactEdges) +
                            " edges; use monte-carlo mode");
      }
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
      Eigen::MatrixXd w;
      std::vector<int> active;
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        double p = 1.0;
        active.clear();
        for (std::size_t e = 0; e < m; ++e) {
          if (mask & (std::uint64_t{1} << e)) {
            p *= model.theta[e];
            active.push_back(static_cast<int>(e));
          } else {
            p *= 1.0 - model.theta[e];
          }
        }
        if (p == 0.0) continue;
        fill_weights(model, active, w);
        acc.noalias() += p * (w * w);
      }
      return acc;
    }
    case SquareMode::MonteCarlo: {
      if (samples < 1) throw DomainError("monte-carlo mode needs samples >= 1");
      Rng rng = make_stream(seed, 0, StreamPurpose::Model);
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
      WeightSample ws;
      for (std::int64_t s = 0; s < samples; ++s) {
        sample_into(model, rng, ws);
        acc.noalias() += ws.matrix * ws.matrix;
      }
      return acc / static_cast<double>(samples);
    }
    case SquareMode::Analytic: {
      const Eigen::MatrixXd ew = expected_weight_matrix(model);
      Eigen::MatrixXd acc = ew * ew;
      // E_e = w_e (e_i e_j' + e_j e_i' - e_i e_i' - e_j e_j'); E_e^2 = -2 w_e E_e.
      for (std::size_t e = 0; e < m; ++e) {
        const double th = model.theta[e];
        const double var = th * (1.0 - th);
        if (var == 0.0) continue;
        const auto [i, j] = model.edges[e];
        const double w = model.negotiated(e);
        const double c = var * 2.0 * w * w;
        acc(i, i) += c;
        acc(j, j) += c;
        acc(i, j) -= c;
        acc(j, i) -= c;
      }
      return acc;
    }
  }
  throw DomainError("unknown square mode");
}

Eigen::VectorXd symmetric_eigenvalues_desc(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

double gershgorin_floor(const NetworkModel& model) {
  std::vector<double> row(model.n, 0.0);
  for (std::size_t e = 0; e < model.edges.size(); ++e) {
    if (!(model.theta[e] > 0.0)) continue;
    row[model.edges[e].i] += model.negotiated(e);
    row[model.edges[e].j] += model.negotiated(e);
  }
  const double worst = row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
  return std::max(1.0 - 2.0 * worst, std::nextafter(-1.0, 0.0));
}

bool graph_connected(const NetworkModel& model) {
  if (model.n <= 1) return true;
  std::vector<std::vector<int>> adj(model.n);
  for (std::size_t e = 0; e < model.edges.size(); ++e) {
    if (!(model.theta[e] > 0.0)) continue;
    adj[model.edges[e].i].push_back(model.edges[e].j);
    adj[model.edges[e].j].push_back(model.edges[e].i);
  }
  std::vector<char> seen(model.n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int u : adj[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        q.push(u);
      }
    }
  }
  return count == model.n;
}

SpectralReport spectral_report(const NetworkModel& model, SquareMode sq_mode) {
  model.validate();
  const int n = model.n;
  const Eigen::MatrixXd ew = expected_weight_matrix(model);
  const Eigen::MatrixXd ew2 = expected_square_matrix(model, sq_mode);
  const Eigen::MatrixXd avg =
      Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));

  SpectralReport r;
  const Eigen::VectorXd ev = symmetric_eigenvalues_desc(ew);
  const Eigen::VectorXd ev2 = symmetric_eigenvalues_desc(ew2);
  r.lambda2_mean = n > 1 ? ev(1) : 0.0;
  r.lambdan_mean = n > 1 ? ev(n - 1) : 0.0;
  r.lambda2_sq = n > 1 ? ev2(1) : 0.0;
  r.lambdan_floor = gershgorin_floor(model);
  r.rho_mean_gap = symmetric_eigenvalues_desc(ew - avg).cwiseAbs().maxCoeff();
  r.rho_sq_gap = symmetric_eigenvalues_desc(ew2 - avg).cwiseAbs().maxCoeff();
  r.graph_connected = graph_connected(model);
  return r;
}

}  // namespace dta
