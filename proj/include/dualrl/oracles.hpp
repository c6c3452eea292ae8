#pragma once

#include <Eigen/Dense>

#include "dualrl/convex.hpp"
#include "dualrl/dataset.hpp"
#include "dualrl/mdp.hpp"

namespace dualrl {

// Exact ground truth by dense linear solves. The discounted routines throw
// UndiscountedUnsupported when the discount is 1.

// Solves (I - gamma P^pi) Q = R.
StateActionVector exact_q_values(const TabularMdp& mdp, const Policy& policy);

// Solves d = (1 - gamma) mu0 pi + gamma P^pi_* d.
StateActionVector exact_visitation(const TabularMdp& mdp, const Policy& policy);

// rho(pi), computed as E_d[R] after checking it against (1 - gamma) E_{mu0,pi}[Q].
double exact_value(const TabularMdp& mdp, const Policy& policy);

// d rho / d logits for pi = softmax(logits).
Eigen::MatrixXd exact_policy_gradient(const TabularMdp& mdp, const Eigen::MatrixXd& logits);

struct ErgodicityOptions {
  int max_iters = 10000;
  double tol = 1e-10;
};

// d = P^pi_* d, sum d = 1. Throws NotErgodic when power iteration from the
// uniform distribution does not settle, or the fixed point is not unique.
StateActionVector exact_stationary(const TabularMdp& mdp, const Policy& policy,
                                   const ErgodicityOptions& options = {});

// Average reward E_{d_stationary}[R].
double exact_average_reward(const TabularMdp& mdp, const Policy& policy);

enum class FlowMode { kDiscounted, kUndiscounted };

struct RegularizedOptimum {
  StateActionVector d;
  double value = 0.0;
  int iters = 0;
};

inline constexpr int kRegularizedOracleBudget = 64;

// max_d sum d R - D_f(d || d^D) over d >= 0 satisfying the flow constraints
// of the chosen mode (discounted state flow, or stationarity plus sum d = 1).
RegularizedOptimum exact_regularized_optimum(const TabularMdp& mdp, const Eigen::VectorXd& data,
                                             const ConvexGenerator& gen, FlowMode mode);
RegularizedOptimum exact_regularized_optimum(const TabularMdp& mdp, const OfflineDataset& dataset,
                                             const ConvexGenerator& gen, FlowMode mode);

// Residuals of the state flow constraints for d, one entry per state (plus
// the normalization residual in undiscounted mode).
Eigen::VectorXd flow_residual(const TabularMdp& mdp, const StateActionVector& d, FlowMode mode);

}  // namespace dualrl
