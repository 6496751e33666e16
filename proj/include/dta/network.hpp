#pragma once

// Random link failure with min-weight negotiation. Each undirected edge (i,j)
// is active with probability theta independently of the other edges; when
// active, w_ij = min(w_i^j, w_j^i), and the diagonal absorbs the rest of the
// row so every realization is symmetric and doubly stochastic.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "dta/rng.hpp"

namespace dta {

struct Edge {
  int i = 0;
  int j = 0;
  bool operator==(const Edge&) const = default;
};

struct NetworkModel {
  int n = 0;
  std::vector<Edge> edges;
  std::vector<double> theta;
  /// Proposed weights: w_ij[e] = w_{i}^{j} and w_ji[e] = w_{j}^{i} for edge e.
  std::vector<double> w_ij;
  std::vector<double> w_ji;

  /// Throws InvalidModelError on broken invariants. Connectivity is not
  /// required here; spectral_report flags it.
  void validate() const;

  double negotiated(std::size_t e) const;
  std::vector<int> degrees() const;

  static NetworkModel complete(int n, double theta);
  static NetworkModel ring(int n, double theta);
  static NetworkModel from_edges(int n, std::vector<Edge> edges, double theta);
  /// Erdos-Renyi graph with edge probability p, re-drawn until connected.
  static NetworkModel random(int n, double p, double theta, Rng& rng);

  /// Metropolis proposals 1/(max(deg_i, deg_j) + 1) on every edge.
  void set_metropolis();
  void set_uniform_proposals(double w);
  void set_theta(double value);
};

struct WeightSample {
  Eigen::MatrixXd matrix;
  std::vector<int> active_edges;
};

WeightSample negotiate_weights(const NetworkModel& model,
                               std::span<const int> active);

WeightSample sample(const NetworkModel& model, Rng& rng);

/// Allocation-free variant for hot loops; `out` is reused between rounds.
void sample_into(const NetworkModel& model, Rng& rng, WeightSample& out);

Eigen::MatrixXd expected_weight_matrix(const NetworkModel& model);

enum class SquareMode {
  Exact,       // enumerate all 2^|E| activation patterns
  MonteCarlo,  // average of sampled W^2
  Analytic,    // (EW)^2 + sum_e theta_e (1 - theta_e) E_e^2
};

inline constexpr std::size_t kMaxExactEdges = 20;

Eigen::MatrixXd expected_square_matrix(const NetworkModel& model,
                                       SquareMode mode,
                                       std::int64_t samples = 100000,
                                       std::uint64_t seed = 1);

struct SpectralReport {
  double lambda2_mean = 0.0;
  double lambdan_mean = 0.0;
  double lambda2_sq = 0.0;
  double lambdan_floor = 0.0;
  double rho_mean_gap = 0.0;
  double rho_sq_gap = 0.0;
  bool graph_connected = false;

  bool connected_in_mean() const {
    return graph_connected && rho_mean_gap < 1.0 - 1e-12;
  }
};

SpectralReport spectral_report(const NetworkModel& model,
                               SquareMode sq_mode = SquareMode::Analytic);

/// Eigenvalues of a symmetric matrix in descending order.
Eigen::VectorXd symmetric_eigenvalues_desc(const Eigen::MatrixXd& m);

/// Gershgorin floor on the smallest eigenvalue over all realizations.
double gershgorin_floor(const NetworkModel& model);

bool graph_connected(const NetworkModel& model);

}  // namespace dta
