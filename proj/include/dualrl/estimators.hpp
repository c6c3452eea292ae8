#pragma once

#include <string>

#include <Eigen/Dense>

#include "dualrl/convex.hpp"
#include "dualrl/dataset.hpp"
#include "dualrl/mdp.hpp"
#include "dualrl/solver.hpp"

namespace dualrl {

struct EstimatorOptions {
  double coverage_epsilon = kDefaultCoverageEpsilon;
  // Raise uncovered weights to coverage_epsilon instead of failing.
  bool allow_clamp = false;
};

struct EvalResult {
  std::string method;
  double value_estimate = 0.0;
  // Objective (Lagrangian or dual) at the returned point.
  double objective_value = 0.0;
  StateActionVector q_table;
  // Density ratios d^pi / d^D.
  StateActionVector zeta_table;
  SolveReport report;
};

// What the Lagrangian adds on top of the flow terms.
enum class LagrangianMode {
  kReward,  // + E_D[zeta R]
  kZero,    // nothing
  kFDiv,    // - E_D[f(zeta)]
};

struct LagrangianSpec {
  LagrangianMode mode = LagrangianMode::kReward;
  ConvexGenerator gen = ConvexGenerator::square();  // kFDiv only
};

// min_Q max_zeta (1-g) E_{mu0,pi}[Q] + E_D[zeta (h + g P^pi Q - Q)].
// Reward and Zero modes are bilinear: zeta is a free variable started at 1
// and kAuto means extragradient. kFDiv uses zeta = exp(w) and simultaneous
// steps. Reward mode reports L(Q, zeta); the other modes report E_D[zeta R].
// zeta_table is clamped at 0. A run that hits max_iters is returned with
// report.converged = false.
EvalResult lagrangian_ope(const TabularMdp& mdp, const Policy& target,
                          const OfflineDataset& dataset, const LagrangianSpec& spec,
                          const SolverConfig& config, const EstimatorOptions& options = {});

// Lagrangian value and gradients at a point, for tests and inner solves.
struct LagrangianEval {
  double value = 0.0;
  StateActionVector grad_q;
  StateActionVector grad_zeta;
};
LagrangianEval lagrangian_eval(const TabularMdp& mdp, const Policy& target,
                               const Eigen::VectorXd& weights, const LagrangianSpec& spec,
                               const StateActionVector& q, const StateActionVector& zeta);

// min_Q (1-g) E_{mu0,pi}[Q] + E_D[f*(g P^pi Q - Q)], zeta = f*'(g P^pi Q - Q).
// kl uses log E_D[exp(.)] and softmax weights. closed_form solves the
// square case as a linear system.
EvalResult dualdice_dual(const TabularMdp& mdp, const Policy& target,
                         const OfflineDataset& dataset, const ConvexGenerator& gen,
                         const SolverConfig& config, bool closed_form,
                         const EstimatorOptions& options = {});

// The dual objective itself (exact transitions).
double dualdice_objective(const TabularMdp& mdp, const Policy& target,
                          const Eigen::VectorXd& weights, const ConvexGenerator& gen,
                          const StateActionVector& q);

// Reward-mode Lagrangian at the given tables, no optimization.
double doubly_robust_eval(const TabularMdp& mdp, const Policy& target,
                          const OfflineDataset& dataset, const StateActionVector& q_table,
                          const StateActionVector& zeta_table);

// sum d^D zeta R.
double value_from_zeta(const OfflineDataset& dataset, const TabularMdp& mdp,
                       const StateActionVector& zeta_table);

}  // namespace dualrl
