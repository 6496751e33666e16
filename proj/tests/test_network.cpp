#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dta/errors.hpp"
#include "dta/network.hpp"
#include "fixtures.hpp"
#include "oracles/oracles.hpp"

using namespace dta;

namespace {

NetworkModel pair_model(double w_ij, double w_ji, double theta) {
  auto m = NetworkModel::from_edges(2, {{0, 1}}, theta);
  m.w_ij = {w_ij};
  m.w_ji = {w_ji};
  return m;
}

void expect_weight_invariants(const Eigen::MatrixXd& W) {
  const auto n = W.rows();
  EXPECT_LE((W - W.transpose()).cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    EXPECT_NEAR(W.row(i).sum(), 1.0, 1e-12);
    EXPECT_NEAR(W.col(i).sum(), 1.0, 1e-12);
    EXPECT_GT(W(i, i), 0.0);
  }
  EXPECT_GE(W.minCoeff(), 0.0);
}

}  // namespace

TEST(Negotiation, TakesTheSmallerProposal) {
  const auto m = pair_model(0.3, 0.2, 1.0);
  const std::vector<int> on{0};
  const auto s = negotiate_weights(m, on);
  EXPECT_DOUBLE_EQ(s.matrix(0, 1), 0.2);
  EXPECT_DOUBLE_EQ(s.matrix(1, 0), 0.2);
  EXPECT_DOUBLE_EQ(s.matrix(0, 0), 0.8);
}

TEST(Negotiation, FailedLinkCarriesNoWeight) {
  const auto m = pair_model(0.3, 0.2, 1.0);
  const auto s = negotiate_weights(m, std::vector<int>{});
  EXPECT_EQ(s.matrix(0, 1), 0.0);
  EXPECT_TRUE(s.matrix.isIdentity());
}

TEST(Negotiation, TwoNodeRowCompletion) {
  const auto m = pair_model(0.4, 0.4, 1.0);
  const auto s = negotiate_weights(m, std::vector<int>{0});
  Eigen::Matrix2d expect;
  expect << 0.6, 0.4, 0.4, 0.6;
  EXPECT_LE((s.matrix - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Negotiation, RejectsUnknownEdgeAndBadProposals) {
  const auto m = pair_model(0.4, 0.4, 1.0);
  EXPECT_THROW(negotiate_weights(m, std::vector<int>{3}), InvalidModelError);
  auto heavy = NetworkModel::complete(3, 1.0);
  heavy.set_uniform_proposals(0.6);
  EXPECT_THROW(heavy.validate(), InvalidModelError);
}

TEST(Sampling, FullActivationIsDeterministic) {
  Rng rng = make_stream(1, 0, StreamPurpose::Test);
  const auto m = NetworkModel::ring(8, 1.0);
  std::vector<int> all(m.edges.size());
  std::iota(all.begin(), all.end(), 0);
  const auto ref = negotiate_weights(m, all).matrix;
  for (int t = 0; t < 20; ++t) EXPECT_EQ(sample(m, rng).matrix, ref);
}

TEST(Sampling, IsolatedSubgraphIsFlagged) {
  auto m = NetworkModel::from_edges(4, {{0, 1}, {2, 3}}, 0.5);
  const auto r = spectral_report(m);
  EXPECT_FALSE(r.graph_connected);
  EXPECT_FALSE(r.connected_in_mean());
  EXPECT_NEAR(r.rho_mean_gap, 1.0, 1e-12);
}

TEST(Sampling, ActivationFrequencyMatchesTheta) {
  Rng rng = make_stream(2, 0, StreamPurpose::Test);
  const auto m = pair_model(0.4, 0.4, 0.5);
  int hits = 0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) hits += sample(m, rng).matrix(0, 1) > 0.0;
  EXPECT_NEAR(static_cast<double>(hits) / trials, 0.5, 0.01);
}

TEST(Sampling, RealizationsAreDoublyStochastic) {
  Rng rng = make_stream(3, 0, StreamPurpose::Test);
  for (int t = 0; t < 300; ++t) {
    const auto m = fixtures::random_model(rng, 2 + rng.index(20), rng.uniform(0.1, 0.9));
    const auto s = sample(m, rng);
    expect_weight_invariants(s.matrix);
    WeightSample into;
    Rng a = make_stream(t, 1, StreamPurpose::Test), b = a;
    sample_into(m, a, into);
    EXPECT_EQ(into.matrix, sample(m, b).matrix);
  }
}

TEST(ExpectedWeights, FullActivationEqualsNegotiated) {
  const auto m = NetworkModel::complete(5, 1.0);
  std::vector<int> all(m.edges.size());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_LE((expected_weight_matrix(m) - negotiate_weights(m, all).matrix).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(ExpectedWeights, TwoNodeHalfActivation) {
  const auto m = pair_model(0.4, 0.4, 0.5);
  Eigen::Matrix2d expect;
  expect << 0.8, 0.2, 0.2, 0.8;
  EXPECT_LE((expected_weight_matrix(m) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ExpectedWeights, MatchesMonteCarloAverage) {
  Rng rng = make_stream(4, 0, StreamPurpose::Test);
  const auto m = fixtures::random_model(rng, 10, 0.4);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(10, 10);
  WeightSample s;
  const int draws = 1000000;
  for (int t = 0; t < draws; ++t) {
    sample_into(m, rng, s);
    acc += s.matrix;
  }
  acc /= draws;
  EXPECT_LE((acc - expected_weight_matrix(m)).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(ExpectedSquare, FullActivationIsSquare) {
  const auto m = NetworkModel::ring(6, 1.0);
  const auto W = expected_weight_matrix(m);
  for (auto mode : {SquareMode::Exact, SquareMode::Analytic}) {
    EXPECT_LE((expected_square_matrix(m, mode) - W * W).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ExpectedSquare, TwoOutcomeEnumeration) {
  const auto m = pair_model(0.5, 0.5, 0.5);
  Eigen::Matrix2d expect;
  expect << 0.75, 0.25, 0.25, 0.75;
  for (auto mode : {SquareMode::Exact, SquareMode::Analytic}) {
    EXPECT_LE((expected_square_matrix(m, mode) - expect).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ExpectedSquare, RingExactAgreesWithMonteCarlo) {
  auto m = NetworkModel::ring(10, 0.5);
  const auto exact = expected_square_matrix(m, SquareMode::Exact);
  const auto mc = expected_square_matrix(m, SquareMode::MonteCarlo, 1000000, 9);
  EXPECT_LE((exact - mc).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(ExpectedSquare, AnalyticEqualsExactEnumeration) {
  Rng rng = make_stream(5, 0, StreamPurpose::Test);
  for (int t = 0; t < 20; ++t) {
    auto m = fixtures::random_model(rng, 4 + rng.index(4), 0.5);
    if (m.edges.size() > kMaxExactEdges) continue;
    const auto ex = expected_square_matrix(m, SquareMode::Exact);
    const auto an = expected_square_matrix(m, SquareMode::Analytic);
    EXPECT_LE((ex - an).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(ExpectedSquare, ExactRefusesLargeEdgeSets) {
  const auto m = NetworkModel::complete(8, 0.5);
  EXPECT_THROW(expected_square_matrix(m, SquareMode::Exact), CapacityError);
}

TEST(Spectral, TwoNodeAveragingHasZeroLambda2) {
  const auto r = spectral_report(pair_model(0.5, 0.5, 1.0));
  EXPECT_NEAR(r.lambda2_mean, 0.0, 1e-15);
}

TEST(Spectral, CompleteGraphUniformWeights) {
  auto m = NetworkModel::complete(6, 1.0);
  m.set_uniform_proposals(1.0 / 6.0);
  const auto r = spectral_report(m);
  EXPECT_NEAR(r.lambda2_mean, 0.0, 1e-14);
  EXPECT_NEAR(r.lambdan_mean, 0.0, 1e-14);
  EXPECT_NEAR(r.lambda2_sq, 0.0, 1e-14);
}

TEST(Spectral, GapAgreesWithPowerIteration) {
  Rng rng = make_stream(6, 0, StreamPurpose::Test);
  for (int t = 0; t < 20; ++t) {
    const auto m = fixtures::random_model(rng, 10, 0.3);
    const auto r = spectral_report(m);
    const Eigen::MatrixXd J = Eigen::MatrixXd::Constant(10, 10, 0.1);
    const double pi = oracle::power_iteration_radius(expected_weight_matrix(m) - J);
    EXPECT_NEAR(r.rho_mean_gap, pi, 1e-8);
    EXPECT_LT(r.rho_mean_gap, 1.0);
  }
}

TEST(Spectral, SecondMomentGapIsContractiveWhenMeanIs) {
  Rng rng = make_stream(7, 0, StreamPurpose::Test);
  for (int t = 0; t < 200; ++t) {
    const auto m = fixtures::random_model(rng, 3 + rng.index(15), rng.uniform(0.1, 0.8), 0.01);
    const auto r = spectral_report(m);
    ASSERT_TRUE(r.connected_in_mean());
    EXPECT_LT(r.rho_sq_gap, 1.0);
    EXPECT_LE(r.lambdan_mean, r.lambda2_mean);
    EXPECT_LT(r.lambda2_mean, 1.0);
    EXPECT_GT(r.lambdan_floor, -1.0);
  }
}

TEST(Spectral, FloorBoundsEveryRealization) {
  Rng rng = make_stream(8, 0, StreamPurpose::Test);
  for (int t = 0; t < 50; ++t) {
    const auto m = fixtures::random_model(rng, 3 + rng.index(10), 0.5);
    const double floor = gershgorin_floor(m);
    for (int k = 0; k < 50; ++k) {
      const auto ev = symmetric_eigenvalues_desc(sample(m, rng).matrix);
      EXPECT_GE(ev(ev.size() - 1), floor - 1e-12);
    }
  }
}
