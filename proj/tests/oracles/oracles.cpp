#include "oracles.hpp"

#include <cmath>
#include <numeric>

namespace oracle {

std::vector<double> projected_gradient_kkt(const std::vector<double>& a,
                                           const std::vector<double>& b,
                                           double D, int max_iters,
                                           double tol) {
  const std::size_t n = a.size();
  double amax = 0.0;
  for (double v : a) amax = std::max(amax, v);
  const double step = 1.0 / (2.0 * amax);
  std::vector<double> x(n, D / static_cast<double>(n));
  std::vector<double> g(n);
  for (int it = 0; it < max_iters; ++it) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = 2.0 * a[i] * x[i] + b[i];
      mean += g[i];
    }
    mean /= static_cast<double>(n);
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = step * (g[i] - mean);
      x[i] -= dx;
      moved = std::max(moved, std::abs(dx));
    }
    if (moved < tol) break;
  }
  return x;
}

double power_iteration_radius(const Eigen::MatrixXd& m, int iters) {
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(m.rows(), 1.0, 2.0);
  v.normalize();
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    // Squaring keeps the iteration monotone when eigenvalues of both signs exist.
    Eigen::VectorXd w = m * (m * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double next = std::sqrt(nw);
    v = w / nw;
    if (std::abs(next - lambda) < 1e-15) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

RefState reference_init(const std::vector<double>& x0,
                        const std::vector<double>& d) {
  RefState s{x0, x0};
  for (std::size_t i = 0; i < d.size(); ++i) s.y[i] = x0[i] - d[i];
  return s;
}

void reference_dta_step(RefState& s, const std::vector<double>& a,
                        const std::vector<double>& b,
                        const std::vector<std::vector<double>>& W,
                        const std::vector<double>& alpha,
                        const std::vector<double>& beta,
                        const std::vector<double>* zeta) {
  const std::size_t n = s.x.size();
  std::vector<double> g(n), xn(n), yn(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * a[i] * s.x[i] + b[i];
  for (std::size_t i = 0; i < n; ++i) {
    double lap = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      lap += ((i == j ? 1.0 : 0.0) - W[i][j]) * g[j];
    }
    xn[i] = s.x[i] - alpha[i] * s.y[i] - beta[i] * lap;
    if (zeta) xn[i] += (*zeta)[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    double wy = 0.0;
    for (std::size_t j = 0; j < n; ++j) wy += W[i][j] * s.y[j];
    yn[i] = wy + xn[i] - s.x[i];
  }
  s.x = xn;
  s.y = yn;
}

Eigen::MatrixXd single_pattern(const dta::NetworkModel& model,
                               const std::vector<int>& active) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(model.n, model.n);
  for (int e : active) {
    const int i = model.edges[e].i;
    const int j = model.edges[e].j;
    const double v = std::min(model.w_ij[e], model.w_ji[e]);
    w(i, j) += v;
    w(j, i) += v;
    w(i, i) -= v;
    w(j, j) -= v;
  }
  return w;
}

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd error_map(const Eigen::MatrixXd& W, const Eigen::VectorXd& gamma,
                          const Eigen::VectorXd& alphas,
                          const Eigen::VectorXd& betas) {
  const Eigen::Index n = W.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd lap =
      betas.asDiagonal() * ((I - W) * gamma.asDiagonal());
  Eigen::MatrixXd m(2 * n, 2 * n);
  m.topLeftCorner(n, n) = I - lap;
  m.topRightCorner(n, n) = -Eigen::MatrixXd(alphas.asDiagonal());
  m.bottomLeftCorner(n, n) = -lap;
  m.bottomRightCorner(n, n) = W - Eigen::MatrixXd(alphas.asDiagonal());
  return m;
}

}  // namespace

double exact_mean_square_rate(const dta::NetworkModel& model,
                              const std::vector<double>& gamma,
                              const std::vector<double>& alphas,
                              const std::vector<double>& betas) {
  const int n = model.n;
  const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(gamma.data(), n);
  const Eigen::VectorXd al = Eigen::Map<const Eigen::VectorXd>(alphas.data(), n);
  const Eigen::VectorXd be = Eigen::Map<const Eigen::VectorXd>(betas.data(), n);

  const Eigen::MatrixXd m0 = error_map(Eigen::MatrixXd::Identity(n, n), g, al, be);
  Eigen::MatrixXd mbar = m0;
  std::vector<Eigen::MatrixXd> deltas;
  std::vector<double> var;
  for (std::size_t e = 0; e < model.edges.size(); ++e) {
    Eigen::MatrixXd d =
        error_map(single_pattern(model, {static_cast<int>(e)}), g, al, be) - m0;
    mbar += model.theta[e] * d;
    var.push_back(model.theta[e] * (1.0 - model.theta[e]));
    deltas.push_back(std::move(d));
  }
  Eigen::MatrixXd second = kron(mbar, mbar);
  for (std::size_t e = 0; e < deltas.size(); ++e) {
    if (var[e] != 0.0) second += var[e] * kron(deltas[e], deltas[e]);
  }

  // Orthonormal basis of the complement of c = [1; -1].
  Eigen::VectorXd c(2 * n);
  c << Eigen::VectorXd::Ones(n), -Eigen::VectorXd::Ones(n);
  c.normalize();
  Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(2 * n, 2 * n) - c * c.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(proj);
  const Eigen::MatrixXd Q = es.eigenvectors().rightCols(2 * n - 1);
  const Eigen::MatrixXd QQ = kron(Q, Q);
  const Eigen::MatrixXd reduced = QQ.transpose() * second * QQ;
  Eigen::EigenSolver<Eigen::MatrixXd> gs(reduced, false);
  return std::sqrt(gs.eigenvalues().cwiseAbs().maxCoeff());
}

double contraction_second_moment(const dta::NetworkModel& model,
                            const std::vector<double>& gamma, double beta,
                            const Eigen::VectorXd& v) {
  const int n = model.n;
  const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n) -
                            Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(gamma.data(), n);
  Eigen::VectorXd mean = v;
  double spread = 0.0;
  for (std::size_t e = 0; e < model.edges.size(); ++e) {
    // I - W = -sum_e delta_e E_e, so the e-th contribution is +beta L Gamma E_e v.
    const Eigen::MatrixXd Ee =
        single_pattern(model, {static_cast<int>(e)}) - Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd m = beta * (L * (g.asDiagonal() * (Ee * v)));
    mean += model.theta[e] * m;
    spread += model.theta[e] * (1.0 - model.theta[e]) * m.squaredNorm();
  }
  return mean.squaredNorm() + spread;
}

}  // namespace oracle
