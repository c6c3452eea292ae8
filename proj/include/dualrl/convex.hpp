#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "dualrl/error.hpp"

namespace dualrl {

enum class GeneratorKind { kSquare, kChiSquare, kKL, kPNorm };

// A convex f from the catalog together with its conjugate. Optionally
// scaled: f_a(x) = a f(x), so f_a*(y) = a f*(y / a).
//
//   square     f = x^2/2          f* = y^2/2        f*' = y
//   chisquare  f = (x-1)^2/2      f* = y + y^2/2    f*' = 1 + y
//   kl         f = x log x        f* = exp(y - 1)   f*' = exp(y - 1)
//   pnorm:p    f = |x|^p/p        f* = |y|^q/q      1/p + 1/q = 1
//
// The chisquare conjugate follows from the shift rule: f(x) = g(x - 1)
// gives f*(y) = y + g*(y).
class ConvexGenerator {
 public:
  static ConvexGenerator square() { return ConvexGenerator(GeneratorKind::kSquare); }
  static ConvexGenerator chi_square() { return ConvexGenerator(GeneratorKind::kChiSquare); }
  static ConvexGenerator kl() { return ConvexGenerator(GeneratorKind::kKL); }
  static ConvexGenerator pnorm(double p);
  // "square" | "chisquare" | "kl" | "pnorm:<p>"
  static ConvexGenerator parse(std::string_view name);

  ConvexGenerator scaled(double alpha) const;

  GeneratorKind kind() const { return kind_; }
  double p() const { return p_; }
  double q() const { return q_; }
  double scale() const { return scale_; }
  std::string name() const;
  // KL is only defined for x >= 0.
  bool nonnegative_domain() const { return kind_ == GeneratorKind::kKL; }

  double eval(double x) const;
  double derivative(double x) const;
  double conjugate(double y) const;
  double conjugate_derivative(double y) const;

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
  Eigen::VectorXd derivative(const Eigen::VectorXd& x) const;
  Eigen::VectorXd conjugate(const Eigen::VectorXd& y) const;
  Eigen::VectorXd conjugate_derivative(const Eigen::VectorXd& y) const;

 private:
  explicit ConvexGenerator(GeneratorKind kind) : kind_(kind) {}

  double raw_eval(double x) const;
  double raw_derivative(double x) const;
  double raw_conjugate(double y) const;
  double raw_conjugate_derivative(double y) const;

  GeneratorKind kind_;
  double p_ = 2.0;
  double q_ = 2.0;
  double scale_ = 1.0;
};

double conjugate_eval(const ConvexGenerator& gen, double y);

// Brute-force max over an evenly spaced grid of x*y - f(x).
double conjugate_grid_oracle(const ConvexGenerator& gen, double y, double x_lo, double x_hi,
                             int n_grid);

// sum_z p(z) f(d(z) / p(z)).
double f_divergence(const ConvexGenerator& gen, const Eigen::VectorXd& d,
                    const Eigen::VectorXd& p);

// Unconstrained: E_p[f*(y)]. Constrained (KL only, d a distribution):
// log E_p[exp y].
double divergence_conjugate(const ConvexGenerator& gen, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& p, bool constrained);

// log E_p[exp h], with max subtraction.
double log_mean_exp(const Eigen::VectorXd& h, const Eigen::VectorXd& p);

// w(z) = exp h(z) / E_p[exp h].
Eigen::VectorXd softmax_weights(const Eigen::VectorXd& h, const Eigen::VectorXd& p);

enum class ConstraintKind {
  kEquals,     // g = indicator of {b}
  kAtLeast,    // g = indicator of {z >= b}
};

// min_x sum_i f(x_i) + g(A x)
struct FenchelProblem {
  ConvexGenerator f = ConvexGenerator::square();
  ConstraintKind constraint = ConstraintKind::kEquals;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

struct FenchelGap {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  Eigen::VectorXd primal_solution;
  Eigen::VectorXd dual_solution;
  // x* = f*'(-A^T y*)
  Eigen::VectorXd primal_recovered;
};

struct FenchelOptions {
  int max_iters = 200000;
  double tol = 1e-10;
};

// Solves the primal and max_y -sum f*(-A^T y) - g*(y) independently by
// gradient methods and reports both values.
FenchelGap fenchel_gap_check(const FenchelProblem& prob, const FenchelOptions& options = {});

}  // namespace dualrl
