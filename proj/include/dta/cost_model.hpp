#pragma once

// Agent cost functions for the resource allocation problem
//
//   minimize  sum_i f_i(x_i)   subject to   sum_i x_i = sum_i d_i,
//
// where x_i, d_i live in R^u. Stacked quantities are n x u row-major matrices,
// one row per agent.

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace dta {

using StateMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Differentiable, strongly convex cost with Lipschitz gradient.
class CostFunction {
 public:
  virtual ~CostFunction() = default;

  virtual double evaluate(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x,
                        std::span<double> out) const = 0;
  /// Strong convexity modulus.
  virtual double eta() const = 0;
  /// Lipschitz constant of the gradient.
  virtual double phi() const = 0;
};

/// f(x) = a |x|^2 + b 1'x + c, applied coordinate-wise for u > 1.
class QuadraticCost final : public CostFunction {
 public:
  QuadraticCost(double a, double b, double c = 0.0);

  double evaluate(std::span<const double> x) const override;
  void gradient(std::span<const double> x,
                std::span<double> out) const override;
  double eta() const override { return 2.0 * a_; }
  double phi() const override { return 2.0 * a_; }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }

 private:
  double a_;
  double b_;
  double c_;
};

class CostSpec {
 public:
  CostSpec(std::vector<std::shared_ptr<const CostFunction>> costs,
           StateMatrix demands);

  static CostSpec quadratic(const std::vector<QuadraticCost>& costs,
                            StateMatrix demands);

  int agents() const { return static_cast<int>(costs_.size()); }
  int dimension() const { return static_cast<int>(demands_.cols()); }

  const CostFunction& cost(int agent) const { return *costs_.at(agent); }
  const StateMatrix& demands() const { return demands_; }

  /// min_i eta_i
  double eta_lo() const { return eta_lo_; }
  /// max_i phi_i
  double phi_hi() const { return phi_hi_; }

  /// Non-null only when every agent cost is quadratic.
  std::vector<const QuadraticCost*> quadratic_costs() const;

 private:
  std::vector<std::shared_ptr<const CostFunction>> costs_;
  StateMatrix demands_;
  double eta_lo_ = 0.0;
  double phi_hi_ = 0.0;
};

struct KktSolution {
  StateMatrix x_star;
  Eigen::RowVectorXd mu_star;
};

Eigen::RowVectorXd gradient(const CostSpec& spec, int agent,
                            const Eigen::RowVectorXd& x);

/// Row i of `out` receives grad f_i(x_i). No validation; used in hot loops.
void stacked_gradient(const CostSpec& spec, const StateMatrix& x,
                      StateMatrix& out);

/// Closed-form optimum for quadratic costs:
///   mu* = (sum d_i + sum b_i/(2a_i)) / sum 1/(2a_i),  x_i* = (mu* - b_i)/(2a_i).
KktSolution kkt_solve(const CostSpec& spec);

double global_cost(const CostSpec& spec, const StateMatrix& x);

}  // namespace dta
