#include "dualrl/policy_opt.hpp"

#include <cmath>

#include "common.hpp"
#include "dualrl/oracles.hpp"

namespace dualrl {
namespace {

void require_discounted(const TabularMdp& mdp, const char* what) {
  if (mdp.discount() >= 1.0) {
    throw Error(ErrorKind::kUndiscountedUnsupported,
                std::string(what) + " needs discount < 1; see undisc_policy_opt");
  }
}

struct QlpProblem {
  const TabularMdp& mdp;
  Eigen::VectorXd weights;
  ConvexGenerator gen;
  bool constrained;
  bool reward_on;
};

OptResult solve_qlp(const QlpProblem& prob, const SolverConfig& config, std::string method) {
  const TabularMdp& mdp = prob.mdp;
  const int n_s = mdp.n_states();
  const int n_a = mdp.n_actions();
  const int n_sa = mdp.n_state_actions();
  const auto objective = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& theta) {
    const PolicyObjectiveEval ev =
        qlp_policy_objective(mdp, prob.weights, prob.gen, prob.constrained, prob.reward_on,
                             detail::unflatten(theta, n_s, n_a), q);
    SaddleEval out;
    out.value = ev.value;
    out.grad_min = ev.grad_q;
    out.grad_max = detail::flatten(ev.grad_logits);
    out.step_min = n_sa * out.grad_min;
    out.step_max = n_s * out.grad_max;
    return out;
  };
  const SaddleSolution sol =
      solve_saddle(objective, Eigen::VectorXd::Zero(n_sa), Eigen::VectorXd::Zero(n_sa),
                   resolve_update(config, SaddleUpdate::kSimultaneous));
  OptResult out;
  out.method = std::move(method);
  out.policy_logits = detail::unflatten(sol.max_params, n_s, n_a);
  out.policy = Policy::from_logits(out.policy_logits);
  out.q_table = sol.min_params;
  out.objective_value = sol.report.objective_value;
  out.report = sol.report;
  out.value_of_policy = exact_value(mdp, out.policy);
  const ConvexGenerator divergence = prob.constrained ? ConvexGenerator::kl().scaled(prob.gen.scale())
                                                      : prob.gen;
  out.regularized_objective =
      regularized_policy_value(mdp, prob.weights, divergence, prob.reward_on, out.policy);
  return out;
}

}  // namespace

PolicyObjectiveEval qlp_policy_objective(const TabularMdp& mdp, const Eigen::VectorXd& weights,
                                         const ConvexGenerator& gen, bool constrained,
                                         bool reward_on, const Eigen::MatrixXd& logits,
                                         const StateActionVector& q) {
  if (constrained && gen.kind() != GeneratorKind::kKL) {
    throw Error(ErrorKind::kUnsupportedConstrainedGenerator,
                "constrained objective needs kl, not " + gen.name());
  }
  const double g = mdp.discount();
  const Policy policy = Policy::from_logits(logits);
  StateActionVector y = detail::bellman_forward(mdp, policy, q, g);
  if (reward_on) y += mdp.reward();
  const StateActionVector c = (1.0 - g) * initial_state_action(mdp, policy);
  PolicyObjectiveEval out;
  out.zeta = constrained ? softmax_weights(Eigen::VectorXd(y / gen.scale()), weights)
                         : gen.conjugate_derivative(y);
  out.value = c.dot(q) + divergence_conjugate(gen, y, weights, constrained);
  const StateActionVector flow = weights.cwiseProduct(out.zeta);
  out.grad_q = c + detail::bellman_adjoint(mdp, policy, flow, g);
  // pi enters through mu0 pi in the first term and through P^pi inside f*.
  const StateVector nu = (1.0 - g) * mdp.initial_dist() + g * transition_adjoint(mdp, flow);
  out.grad_logits = detail::softmax_policy_gradient(policy, nu, q);
  return out;
}

double regularized_policy_value(const TabularMdp& mdp, const Eigen::VectorXd& weights,
                                const ConvexGenerator& gen, bool reward_on,
                                const Policy& policy) {
  const StateActionVector d = mdp.discount() < 1.0 ? exact_visitation(mdp, policy)
                                                   : exact_stationary(mdp, policy);
  const double reward = reward_on ? d.dot(mdp.reward()) : 0.0;
  return reward - f_divergence(gen, d.cwiseMax(0.0), weights);
}

OptResult algaedice_primal(const TabularMdp& mdp, const OfflineDataset& dataset,
                           const ConvexGenerator& gen, bool reward_on, double alpha,
                           const SolverConfig& config, const EstimatorOptions& options) {
  require_discounted(mdp, "algaedice_primal");
  const QlpProblem prob{mdp, detail::covered_weights(dataset, mdp, nullptr, options),
                        gen.scaled(alpha), false, reward_on};
  return solve_qlp(prob, config, "algaedice:" + gen.name() + (reward_on ? "" : ":noreward"));
}

OptResult kl_qlp_optimize(const TabularMdp& mdp, const OfflineDataset& dataset,
                          const SolverConfig& config, const EstimatorOptions& options) {
  require_discounted(mdp, "kl_qlp_optimize");
  const QlpProblem prob{mdp, detail::covered_weights(dataset, mdp, nullptr, options),
                        ConvexGenerator::kl(), true, true};
  return solve_qlp(prob, config, "klqlp");
}

Eigen::MatrixXd policy_gradient_via_lagrangian(const TabularMdp& mdp,
                                               const OfflineDataset& dataset,
                                               const Eigen::MatrixXd& logits,
                                               const SolverConfig& config,
                                               const EstimatorOptions& options) {
  require_discounted(mdp, "policy_gradient_via_lagrangian");
  const Policy policy = Policy::from_logits(logits);
  SolverConfig inner = config;
  inner.grad_tol = std::min(config.grad_tol, 1e-6);
  const EvalResult sol =
      lagrangian_ope(mdp, policy, dataset, LagrangianSpec{LagrangianMode::kReward}, inner, options);
  if (!sol.report.converged) {
    throw Error(ErrorKind::kInnerNonconvergence,
                "inner Lagrangian stopped at gradient norm " +
                    std::to_string(sol.report.final_grad_norm));
  }
  const Eigen::VectorXd weights = detail::covered_weights(dataset, mdp, &policy, options);
  const double g = mdp.discount();
  // Danskin: differentiate L in pi at the inner solution.
  const StateVector nu =
      (1.0 - g) * mdp.initial_dist() +
      g * transition_adjoint(mdp, weights.cwiseProduct(sol.zeta_table));
  return detail::softmax_policy_gradient(policy, nu, sol.q_table);
}

}  // namespace dualrl
