#include "dualrl/undiscounted.hpp"

#include <cmath>
#include <limits>

#include "common.hpp"
#include "dualrl/oracles.hpp"

namespace dualrl {
namespace {

TabularMdp average_reward_view(const TabularMdp& mdp) {
  return mdp.discount() == 1.0 ? mdp : mdp.with_discount(1.0);
}

// Behavior chains must be ergodic for d^D to be a stationary distribution.
void require_ergodic_behavior(const TabularMdp& mdp, const OfflineDataset& dataset) {
  if (dataset.behavior.n_states() == mdp.n_states() &&
      dataset.behavior.n_actions() == mdp.n_actions()) {
    (void)exact_stationary(mdp, dataset.behavior);
  }
}

struct FDivEval {
  double value = 0.0;
  StateActionVector zeta;
  StateActionVector grad_q;
  double grad_lambda = 0.0;
};

FDivEval fdiv_eval(const TabularMdp& mdp, const Policy& target, const Eigen::VectorXd& weights,
                   const ConvexGenerator& gen, const StateActionVector& shift,
                   const StateActionVector& q, double lambda) {
  const StateActionVector y =
      (detail::bellman_forward(mdp, target, q, 1.0) + shift).array() + lambda;
  FDivEval out;
  out.zeta = gen.conjugate_derivative(y);
  const StateActionVector u = weights.cwiseProduct(out.zeta);
  out.value = -lambda + weights.dot(gen.conjugate(y));
  out.grad_q = detail::bellman_adjoint(mdp, target, u, 1.0);
  out.grad_lambda = -1.0 + u.sum();
  return out;
}

struct LagrangianParts {
  double value = 0.0;
  StateActionVector grad_q;
  double grad_lambda = 0.0;
  StateActionVector grad_zeta;
};

LagrangianParts lagrangian_parts(const TabularMdp& mdp, const Policy& target,
                                 const Eigen::VectorXd& weights, const ConvexGenerator& gen,
                                 bool regularized, const StateActionVector& q, double lambda,
                                 const StateActionVector& zeta) {
  StateActionVector residual = detail::bellman_forward(mdp, target, q, 1.0).array() + lambda;
  if (regularized) residual += 0.25 * q.cwiseProduct(q);
  const StateActionVector flow = weights.cwiseProduct(zeta);
  LagrangianParts out;
  out.value = -lambda + flow.dot(residual);
  out.grad_q = detail::bellman_adjoint(mdp, target, flow, 1.0);
  out.grad_lambda = -1.0 + flow.sum();
  out.grad_zeta = weights.cwiseProduct(residual);
  if (regularized) {
    out.value += 0.5 * lambda * lambda;
    out.grad_lambda += lambda;
    out.grad_q += 0.5 * flow.cwiseProduct(q);
  } else {
    out.value -= weights.dot(gen.eval(zeta));
    out.grad_zeta -= weights.cwiseProduct(gen.derivative(zeta));
  }
  return out;
}

// Pins coordinate 0 of the gauge-free block by freezing it at its start.
void pin_first(Eigen::VectorXd& grad, Eigen::VectorXd& step) {
  grad[0] = 0.0;
  step[0] = 0.0;
}

}  // namespace

double undisc_fdiv_objective(const TabularMdp& mdp, const Policy& target,
                             const Eigen::VectorXd& weights, const ConvexGenerator& gen,
                             const StateActionVector& q, double lambda) {
  const TabularMdp m = average_reward_view(mdp);
  return fdiv_eval(m, target, weights, gen, StateActionVector::Zero(q.size()), q, lambda).value;
}

double undisc_lagrangian_objective(const TabularMdp& mdp, const Policy& target,
                                   const Eigen::VectorXd& weights, const ConvexGenerator& gen,
                                   bool regularized, const StateActionVector& q, double lambda,
                                   const StateActionVector& zeta) {
  const TabularMdp m = average_reward_view(mdp);
  return lagrangian_parts(m, target, weights, gen, regularized, q, lambda, zeta).value;
}

double undisc_policy_objective(const TabularMdp& mdp, const Eigen::VectorXd& weights,
                               const ConvexGenerator& gen, const Eigen::MatrixXd& logits,
                               const StateActionVector& q, double lambda) {
  const TabularMdp m = average_reward_view(mdp);
  return fdiv_eval(m, Policy::from_logits(logits), weights, gen, m.reward(), q, lambda).value;
}

double undisc_reps_objective(const TabularMdp& mdp, const Eigen::VectorXd& weights,
                             const StateVector& v) {
  const TabularMdp m = average_reward_view(mdp);
  const StateActionVector y = m.reward() + transition_forward(m, v) - expand_states(m, v);
  return log_mean_exp(y, weights);
}

UndiscountedResult undisc_fdiv_dual(const TabularMdp& mdp, const Policy& target,
                                    const OfflineDataset& dataset, const ConvexGenerator& gen,
                                    const SolverConfig& config, const EstimatorOptions& options) {
  const TabularMdp m = average_reward_view(mdp);
  const Eigen::VectorXd weights = detail::covered_weights(dataset, m, &target, options);
  const int n_sa = m.n_state_actions();
  const StateActionVector no_shift = StateActionVector::Zero(n_sa);
  const auto objective = [&](const Eigen::VectorXd& x) {
    const FDivEval ev = fdiv_eval(m, target, weights, gen, no_shift, x.head(n_sa), x[n_sa]);
    MinEval out;
    out.value = ev.value;
    out.grad.resize(n_sa + 1);
    out.grad << ev.grad_q, ev.grad_lambda;
    out.step.resize(n_sa + 1);
    out.step << n_sa * ev.grad_q, ev.grad_lambda;
    pin_first(out.grad, out.step);
    return out;
  };
  const MinSolution sol = solve_min(objective, Eigen::VectorXd::Zero(n_sa + 1), config);

  UndiscountedResult out;
  out.method = "undisc-dual:" + gen.name();
  out.q_table = sol.params.head(n_sa);
  out.lambda = sol.params[n_sa];
  out.zeta_table = fdiv_eval(m, target, weights, gen, no_shift, out.q_table, out.lambda).zeta;
  out.value_estimate = weights.cwiseProduct(out.zeta_table).dot(m.reward());
  out.objective_value = sol.report.objective_value;
  out.report = sol.report;
  return out;
}

UndiscountedResult undisc_lagrangian(const TabularMdp& mdp, const Policy& target,
                                     const OfflineDataset& dataset, const ConvexGenerator& gen,
                                     bool regularized, const SolverConfig& config,
                                     const EstimatorOptions& options) {
  const TabularMdp m = average_reward_view(mdp);
  const Eigen::VectorXd weights = detail::covered_weights(dataset, m, &target, options);
  const int n_sa = m.n_state_actions();
  const auto objective = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
    const StateActionVector zeta = w.array().exp().matrix();
    const LagrangianParts ev =
        lagrangian_parts(m, target, weights, gen, regularized, x.head(n_sa), x[n_sa], zeta);
    SaddleEval out;
    out.value = ev.value;
    out.grad_min.resize(n_sa + 1);
    out.grad_min << ev.grad_q, ev.grad_lambda;
    out.step_min.resize(n_sa + 1);
    out.step_min << n_sa * ev.grad_q, ev.grad_lambda;
    if (!regularized) pin_first(out.grad_min, out.step_min);
    out.grad_max = ev.grad_zeta.cwiseProduct(zeta);
    Eigen::VectorXd residual = ev.grad_zeta;
    for (int i = 0; i < n_sa; ++i) residual[i] = weights[i] > 0.0 ? residual[i] / weights[i] : 0.0;
    out.step_max = detail::clip(residual, 1.0);
    return out;
  };
  const SaddleSolution sol =
      solve_saddle(objective, Eigen::VectorXd::Zero(n_sa + 1), Eigen::VectorXd::Zero(n_sa),
                   resolve_update(config, SaddleUpdate::kSimultaneous));

  UndiscountedResult out;
  out.method = regularized ? "undisc-lagrangian:gendice" : "undisc-lagrangian";
  out.q_table = sol.min_params.head(n_sa);
  out.lambda = sol.min_params[n_sa];
  out.zeta_table = sol.max_params.array().exp().matrix();
  out.value_estimate = weights.cwiseProduct(out.zeta_table).dot(m.reward());
  out.objective_value = sol.report.objective_value;
  out.report = sol.report;
  return out;
}

OptResult undisc_policy_opt(const TabularMdp& mdp, const OfflineDataset& dataset,
                            const ConvexGenerator& gen, const SolverConfig& config,
                            const EstimatorOptions& options) {
  const TabularMdp m = average_reward_view(mdp);
  require_ergodic_behavior(m, dataset);
  const Eigen::VectorXd weights = detail::covered_weights(dataset, m, nullptr, options);
  const int n_s = m.n_states();
  const int n_a = m.n_actions();
  const int n_sa = m.n_state_actions();
  const auto objective = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
    const Policy policy = Policy::from_logits(detail::unflatten(theta, n_s, n_a));
    const FDivEval ev = fdiv_eval(m, policy, weights, gen, m.reward(), x.head(n_sa), x[n_sa]);
    SaddleEval out;
    out.value = ev.value;
    out.grad_min.resize(n_sa + 1);
    out.grad_min << ev.grad_q, ev.grad_lambda;
    out.step_min.resize(n_sa + 1);
    out.step_min << n_sa * ev.grad_q, ev.grad_lambda;
    pin_first(out.grad_min, out.step_min);
    const StateVector nu = transition_adjoint(m, weights.cwiseProduct(ev.zeta));
    out.grad_max = detail::flatten(detail::softmax_policy_gradient(policy, nu, x.head(n_sa)));
    out.step_max = n_s * out.grad_max;
    return out;
  };
  const SaddleSolution sol =
      solve_saddle(objective, Eigen::VectorXd::Zero(n_sa + 1), Eigen::VectorXd::Zero(n_sa),
                   resolve_update(config, SaddleUpdate::kSimultaneous));

  OptResult out;
  out.method = "undisc-opt:" + gen.name();
  out.policy_logits = detail::unflatten(sol.max_params, n_s, n_a);
  out.policy = Policy::from_logits(out.policy_logits);
  out.q_table = sol.min_params.head(n_sa);
  out.lambda = sol.min_params[n_sa];
  out.objective_value = sol.report.objective_value;
  out.report = sol.report;
  try {
    out.value_of_policy = exact_average_reward(m, out.policy);
    out.regularized_objective = regularized_policy_value(m, weights, gen, true, out.policy);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNotErgodic) throw;
    out.policy_ergodic = false;
    out.value_of_policy = std::numeric_limits<double>::quiet_NaN();
    out.regularized_objective = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

VlpResult undisc_reps(const TabularMdp& mdp, const OfflineDataset& dataset,
                      const SolverConfig& config, const EstimatorOptions& options) {
  const TabularMdp m = average_reward_view(mdp);
  require_ergodic_behavior(m, dataset);
  const Eigen::VectorXd weights = detail::covered_weights(dataset, m, nullptr, options);
  const int n_s = m.n_states();
  const auto residual = [&](const StateVector& v) -> StateActionVector {
    return m.reward() + transition_forward(m, v) - expand_states(m, v);
  };
  const auto objective = [&](const Eigen::VectorXd& v) {
    const StateActionVector y = residual(v);
    const StateActionVector u = weights.cwiseProduct(softmax_weights(y, weights));
    MinEval ev;
    ev.value = log_mean_exp(y, weights);
    ev.grad = transition_adjoint(m, u) - state_marginal(m, u);
    ev.step = n_s * ev.grad;
    pin_first(ev.grad, ev.step);
    return ev;
  };
  const MinSolution sol = solve_min(objective, Eigen::VectorXd::Zero(n_s), config);

  VlpResult out;
  out.method = "undisc-reps";
  out.v_table = sol.params;
  out.objective_value = sol.report.objective_value;
  out.report = sol.report;
  const StateActionVector w = softmax_weights(residual(sol.params), weights);
  const StateActionVector d = weights.cwiseProduct(w);
  out.raw_d_sum = d.sum();
  out.recovered_d = d / out.raw_d_sum;
  OfflineDataset view = dataset;
  view.weights = weights;
  out.recovered_policy = max_likelihood_policy(view, w);
  return out;
}

}  // namespace dualrl
