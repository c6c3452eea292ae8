#pragma once

#include <string>

#include <Eigen/Dense>

#include "dualrl/convex.hpp"
#include "dualrl/dataset.hpp"
#include "dualrl/estimators.hpp"
#include "dualrl/mdp.hpp"
#include "dualrl/solver.hpp"

namespace dualrl {

struct OptResult {
  std::string method;
  Eigen::MatrixXd policy_logits;
  Policy policy = Policy::uniform(1, 1);
  StateActionVector q_table;
  // Normalization multiplier; undiscounted methods only.
  double lambda = 0.0;
  // Oracle value of the returned policy: rho for discount < 1, average
  // reward for the undiscounted methods.
  double value_of_policy = 0.0;
  // Oracle value of the regularized objective at the returned policy,
  // sum d^pi R - D_f(d^pi || d^D).
  double regularized_objective = 0.0;
  // Solver objective at the returned point.
  double objective_value = 0.0;
  // Undiscounted only: whether the returned policy's chain is ergodic.
  bool policy_ergodic = true;
  SolveReport report;
};

// Value and gradients of the Q-LP policy objective
//   (1-g) E_{mu0,pi}[Q] + E_D[f*(r + g P^pi Q - Q)]
// with pi = softmax(logits) and r = R or 0. constrained switches to
// log E_D[exp(.)] (kl).
struct PolicyObjectiveEval {
  double value = 0.0;
  Eigen::MatrixXd grad_logits;
  StateActionVector grad_q;
  StateActionVector zeta;
};
PolicyObjectiveEval qlp_policy_objective(const TabularMdp& mdp, const Eigen::VectorXd& weights,
                                         const ConvexGenerator& gen, bool constrained,
                                         bool reward_on, const Eigen::MatrixXd& logits,
                                         const StateActionVector& q);

// max_pi min_Q of the objective above with f scaled by alpha.
OptResult algaedice_primal(const TabularMdp& mdp, const OfflineDataset& dataset,
                           const ConvexGenerator& gen, bool reward_on, double alpha,
                           const SolverConfig& config, const EstimatorOptions& options = {});

// max_pi min_Q (1-g) E_{mu0,pi}[Q] + log E_D[exp(R + g P^pi Q - Q)].
OptResult kl_qlp_optimize(const TabularMdp& mdp, const OfflineDataset& dataset,
                          const SolverConfig& config, const EstimatorOptions& options = {});

// Solves the Reward-mode Lagrangian at pi = softmax(logits) and returns
// dL/dlogits at the solution. Throws InnerNonconvergence if the inner
// saddle does not reach its tolerance.
Eigen::MatrixXd policy_gradient_via_lagrangian(const TabularMdp& mdp,
                                               const OfflineDataset& dataset,
                                               const Eigen::MatrixXd& logits,
                                               const SolverConfig& config,
                                               const EstimatorOptions& options = {});

// sum d^pi r - D_f(d^pi || d^D), computed from oracles (discounted
// visitation or stationary distribution by the MDP's discount).
double regularized_policy_value(const TabularMdp& mdp, const Eigen::VectorXd& weights,
                                const ConvexGenerator& gen, bool reward_on,
                                const Policy& policy);

}  // namespace dualrl
