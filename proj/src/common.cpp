#include "common.hpp"

namespace dualrl::detail {

Eigen::VectorXd covered_weights(const OfflineDataset& dataset, const TabularMdp& mdp,
                                const Policy* target, const EstimatorOptions& options) {
  const CoverageReport report =
      target ? coverage_check(dataset, mdp, *target, options.coverage_epsilon)
             : full_support_check(dataset, mdp, options.coverage_epsilon);
  if (report.ok()) return dataset.weights;
  if (options.allow_clamp) return clamped_weights(dataset.weights, options.coverage_epsilon);
  throw Error(ErrorKind::kCoverageError, "dataset does not cover " + report.summary());
}

StateActionVector bellman_forward(const TabularMdp& mdp, const Policy& policy,
                                  const StateActionVector& q, double discount) {
  return discount * policy_forward(mdp, policy, q) - q;
}

StateActionVector bellman_adjoint(const TabularMdp& mdp, const Policy& policy,
                                  const StateActionVector& x, double discount) {
  return discount * policy_adjoint(mdp, policy, x) - x;
}

Eigen::MatrixXd softmax_policy_gradient(const Policy& policy, const StateVector& nu,
                                        const StateActionVector& q) {
  const StateVector v = policy_average(policy, q);
  const int n_a = policy.n_actions();
  Eigen::MatrixXd grad(policy.n_states(), n_a);
  for (int s = 0; s < policy.n_states(); ++s) {
    for (int a = 0; a < n_a; ++a) grad(s, a) = nu[s] * policy(s, a) * (q[s * n_a + a] - v[s]);
  }
  return grad;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& table) {
  Eigen::VectorXd out(table.size());
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) out[r * table.cols() + c] = table(r, c);
  }
  return out;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& flat, int rows, int cols) {
  Eigen::MatrixXd out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = flat[r * cols + c];
  }
  return out;
}

Eigen::VectorXd clip(const Eigen::VectorXd& x, double bound) {
  return x.cwiseMax(-bound).cwiseMin(bound);
}

}  // namespace dualrl::detail
