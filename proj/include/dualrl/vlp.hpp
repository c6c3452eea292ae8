#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualrl/convex.hpp"
#include "dualrl/dataset.hpp"
#include "dualrl/estimators.hpp"
#include "dualrl/mdp.hpp"
#include "dualrl/solver.hpp"

namespace dualrl {

struct VlpResult {
  std::string method;
  StateVector v_table;
  // Nonnegativity multipliers K = exp(k); empty for the kl objectives.
  StateActionVector k_table;
  // Renormalized to sum to one.
  StateActionVector recovered_d;
  double raw_d_sum = 0.0;
  Policy recovered_policy = Policy::uniform(1, 1);
  // States where recovered_d has no mass (policy row falls back to uniform).
  std::vector<int> zero_mass_states;
  double objective_value = 0.0;
  SolveReport report;
};

// min_{V, K >= 0} (1-g) E_mu0[V] + E_D[f*(K + R + g T V - V)], K = exp(k);
// d* = d^D f*'(.) and pi* by Bayes' rule. kl is handled by
// reps_objective_solve.
VlpResult vlp_fdiv_dual(const TabularMdp& mdp, const OfflineDataset& dataset,
                        const ConvexGenerator& gen, const SolverConfig& config,
                        const EstimatorOptions& options = {});

// min_V (1-g) E_mu0[V] + log E_D[exp(R + g T V - V)].
VlpResult reps_objective_solve(const TabularMdp& mdp, const OfflineDataset& dataset,
                               const SolverConfig& config, const EstimatorOptions& options = {});

// pi(a|s) proportional to d^D(s,a) w(s,a); rows without mass are uniform.
Policy max_likelihood_policy(const OfflineDataset& dataset, const StateActionVector& weights);

// Bayes' rule: pi(a|s) = d(s,a) / sum_a d(s,a).
Policy policy_from_distribution(const TabularMdp& mdp, const StateActionVector& d,
                                std::vector<int>* zero_mass_states = nullptr);

struct VlpEvalResult {
  StateVector mu;
  StateVector v_table;
  double value = 0.0;
  SolveReport report;
};

// Lagrangian of max_mu sum mu(s) pi(a|s) R(s,a) subject to
// mu = (1-g) mu0 + g T_*(mu x pi), with mu(s) = d^D(s) zeta(s) and the
// action expectation reweighted by pi(a|s) / d^D(a|s).
VlpEvalResult vlp_policy_eval_lagrangian(const TabularMdp& mdp, const Policy& target,
                                         const OfflineDataset& dataset,
                                         const SolverConfig& config,
                                         const EstimatorOptions& options = {});

}  // namespace dualrl
