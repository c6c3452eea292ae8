#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "dualrl/dataset.hpp"
#include "dualrl/estimators.hpp"
#include "dualrl/mdp.hpp"

namespace dualrl::detail {

// d^D after the coverage gate: throws CoverageError on violations unless the
// caller allowed clamping. Without a target every pair must be covered.
Eigen::VectorXd covered_weights(const OfflineDataset& dataset, const TabularMdp& mdp,
                                const Policy* target, const EstimatorOptions& options);

// x -> discount * P^pi x - x
StateActionVector bellman_forward(const TabularMdp& mdp, const Policy& policy,
                                  const StateActionVector& q, double discount);
// x -> discount * P^pi_* x - x
StateActionVector bellman_adjoint(const TabularMdp& mdp, const Policy& policy,
                                  const StateActionVector& x, double discount);

// nu(s) pi(b|s) (Q(s,b) - sum_a pi(a|s) Q(s,a)): the softmax chain rule for
// objectives linear in pi through a state weighting nu.
Eigen::MatrixXd softmax_policy_gradient(const Policy& policy, const StateVector& nu,
                                        const StateActionVector& q);

Eigen::VectorXd flatten(const Eigen::MatrixXd& table);
Eigen::MatrixXd unflatten(const Eigen::VectorXd& flat, int rows, int cols);

Eigen::VectorXd clip(const Eigen::VectorXd& x, double bound);

}  // namespace dualrl::detail
