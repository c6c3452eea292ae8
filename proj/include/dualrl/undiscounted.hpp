#pragma once

#include <string>

#include <Eigen/Dense>

#include "dualrl/convex.hpp"
#include "dualrl/dataset.hpp"
#include "dualrl/estimators.hpp"
#include "dualrl/mdp.hpp"
#include "dualrl/policy_opt.hpp"
#include "dualrl/solver.hpp"
#include "dualrl/vlp.hpp"

// Average-reward (discount = 1) estimators and optimizers. Every function
// here ignores the MDP's stored discount and works with discount 1. Q and V
// are pinned at their first coordinate except in the GenDICE objective,
// whose Q^2 term already fixes the level.
namespace dualrl {

struct UndiscountedResult {
  std::string method;
  StateActionVector zeta_table;
  StateActionVector q_table;
  // Dual of the normalization constraint.
  double lambda = 0.0;
  double value_estimate = 0.0;
  double objective_value = 0.0;
  SolveReport report;
};

// -lambda + E_D[f*(lambda + P^pi Q - Q)]. kl uses its unconstrained conjugate.
double undisc_fdiv_objective(const TabularMdp& mdp, const Policy& target,
                             const Eigen::VectorXd& weights, const ConvexGenerator& gen,
                             const StateActionVector& q, double lambda);

// Plain: -lambda + E_D[zeta (lambda + P^pi Q - Q) - f(zeta)].
// GenDICE: -lambda + lambda^2 / 2 + E_D[zeta (lambda + P^pi Q - Q + Q^2 / 4)];
// gen is unused there.
double undisc_lagrangian_objective(const TabularMdp& mdp, const Policy& target,
                                   const Eigen::VectorXd& weights, const ConvexGenerator& gen,
                                   bool regularized, const StateActionVector& q, double lambda,
                                   const StateActionVector& zeta);

// -lambda + E_D[f*(lambda + R + P^pi Q - Q)] with pi = softmax(logits).
double undisc_policy_objective(const TabularMdp& mdp, const Eigen::VectorXd& weights,
                               const ConvexGenerator& gen, const Eigen::MatrixXd& logits,
                               const StateActionVector& q, double lambda);

// log E_D[exp(R + T V - V)].
double undisc_reps_objective(const TabularMdp& mdp, const Eigen::VectorXd& weights,
                             const StateVector& v);

// min_{Q, lambda} of undisc_fdiv_objective; zeta = f*'(lambda + P^pi Q - Q).
// Throws NotErgodic for a target without a unique stationary distribution.
UndiscountedResult undisc_fdiv_dual(const TabularMdp& mdp, const Policy& target,
                                    const OfflineDataset& dataset, const ConvexGenerator& gen,
                                    const SolverConfig& config,
                                    const EstimatorOptions& options = {});

// max_zeta min_{Q, lambda} of undisc_lagrangian_objective, zeta = exp(w).
UndiscountedResult undisc_lagrangian(const TabularMdp& mdp, const Policy& target,
                                     const OfflineDataset& dataset, const ConvexGenerator& gen,
                                     bool regularized, const SolverConfig& config,
                                     const EstimatorOptions& options = {});

// max_pi min_{Q, lambda} of undisc_policy_objective. The returned policy is
// scored by its stationary distribution; policy_ergodic is false (and the
// oracle fields NaN) when that distribution is not unique.
OptResult undisc_policy_opt(const TabularMdp& mdp, const OfflineDataset& dataset,
                            const ConvexGenerator& gen, const SolverConfig& config,
                            const EstimatorOptions& options = {});

// min_V of undisc_reps_objective; d = d^D softmax(R + T V - V).
VlpResult undisc_reps(const TabularMdp& mdp, const OfflineDataset& dataset,
                      const SolverConfig& config, const EstimatorOptions& options = {});

}  // namespace dualrl
