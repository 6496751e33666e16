#pragma once

#include <vector>

#include "dta/cost_model.hpp"
#include "dta/network.hpp"
#include "dta/rng.hpp"

namespace fixtures {

inline const std::vector<double> kA = {0.0314, 0.0342, 0.0392, 0.0379, 0.0366,
                                       0.0304, 0.0385, 0.0393, 0.0368, 0.0396};
inline const std::vector<double> kB = {0.352, 0.349, 0.278, 0.331, 0.234,
                                       0.341, 0.206, 0.255, 0.209, 0.219};
inline const std::vector<double> kDemand = {6.8964, 14.9987, 10.8666, 13.351,
                                            7.6571, 6.1248, 12.8603, 10.1994,
                                            14.3626, 11.4449};

inline dta::StateMatrix column(const std::vector<double>& v) {
  dta::StateMatrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

inline dta::CostSpec table_spec() {
  std::vector<dta::QuadraticCost> q;
  for (std::size_t i = 0; i < kA.size(); ++i) q.emplace_back(kA[i], kB[i], 0.0);
  return dta::CostSpec::quadratic(q, column(kDemand));
}

inline std::vector<double> gammas(const std::vector<double>& a) {
  std::vector<double> g;
  for (double v : a) g.push_back(2.0 * v);
  return g;
}

struct RandomSpec {
  std::vector<double> a, b, c;
  dta::StateMatrix demands;
  dta::CostSpec spec() const {
    std::vector<dta::QuadraticCost> q;
    for (std::size_t i = 0; i < a.size(); ++i) q.emplace_back(a[i], b[i], c[i]);
    return dta::CostSpec::quadratic(q, demands);
  }
};

inline RandomSpec random_spec(dta::Rng& rng, int n, int u,
                              double a_lo = 0.01, double a_hi = 2.0) {
  RandomSpec s;
  for (int i = 0; i < n; ++i) {
    s.a.push_back(rng.uniform(a_lo, a_hi));
    s.b.push_back(rng.uniform(-1.0, 1.0));
    s.c.push_back(rng.uniform(-1.0, 1.0));
  }
  s.demands.resize(n, u);
  for (Eigen::Index k = 0; k < s.demands.size(); ++k) s.demands.data()[k] = rng.uniform(-5.0, 15.0);
  return s;
}

/// Random connected model with random theta in [theta_lo, 1] per edge.
inline dta::NetworkModel random_model(dta::Rng& rng, int n, double p,
                                      double theta_lo = 0.05) {
  auto m = dta::NetworkModel::random(n, p, 1.0, rng);
  for (auto& t : m.theta) t = rng.uniform(theta_lo, 1.0);
  return m;
}

}  // namespace fixtures
