#include "dualrl/vlp.hpp"

#include <cmath>

#include "common.hpp"

namespace dualrl {
namespace {

void require_discounted(const TabularMdp& mdp, const char* what) {
  if (mdp.discount() >= 1.0) {
    throw Error(ErrorKind::kUndiscountedUnsupported,
                std::string(what) + " needs discount < 1; see the undiscounted module");
  }
}

void finish_recovery(const TabularMdp& mdp, StateActionVector raw, VlpResult& out) {
  raw = raw.cwiseMax(0.0);
  out.raw_d_sum = raw.sum();
  out.recovered_d = out.raw_d_sum > 0.0 ? StateActionVector(raw / out.raw_d_sum) : raw;
  out.recovered_policy = policy_from_distribution(mdp, out.recovered_d, &out.zero_mass_states);
}

}  // namespace

Policy policy_from_distribution(const TabularMdp& mdp, const StateActionVector& d,
                                std::vector<int>* zero_mass_states) {
  Eigen::MatrixXd table(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) table(s, a) = d[mdp.index(s, a)];
    if (zero_mass_states && !(table.row(s).sum() > 0.0)) zero_mass_states->push_back(s);
  }
  return Policy::normalized(std::move(table));
}

Policy max_likelihood_policy(const OfflineDataset& dataset, const StateActionVector& weights) {
  if (weights.size() != dataset.size()) {
    throw Error(ErrorKind::kShapeMismatch, "max_likelihood_policy: weight length mismatch");
  }
  if ((weights.array() < 0.0).any()) {
    throw Error(ErrorKind::kNegativeEntry, "max_likelihood_policy: weights must be >= 0");
  }
  const int n_a = dataset.behavior.n_actions();
  const int n_s = dataset.size() / n_a;
  Eigen::MatrixXd table(n_s, n_a);
  for (int s = 0; s < n_s; ++s) {
    for (int a = 0; a < n_a; ++a) table(s, a) = dataset.weights[s * n_a + a] * weights[s * n_a + a];
  }
  return Policy::normalized(std::move(table));
}

VlpResult vlp_fdiv_dual(const TabularMdp& mdp, const OfflineDataset& dataset,
                        const ConvexGenerator& gen, const SolverConfig& config,
                        const EstimatorOptions& options) {
  require_discounted(mdp, "vlp_fdiv_dual");
  if (gen.kind() == GeneratorKind::kKL) {
    throw Error(ErrorKind::kInvalidArgument, "vlp_fdiv_dual does not take kl; use reps");
  }
  const Eigen::VectorXd weights = detail::covered_weights(dataset, mdp, nullptr, options);
  const int n_s = mdp.n_states();
  const int n_sa = mdp.n_state_actions();
  const double g = mdp.discount();
  const StateVector c = (1.0 - g) * mdp.initial_dist();

  const auto residual = [&](const Eigen::VectorXd& x) -> StateActionVector {
    const StateVector v = x.head(n_s);
    return x.tail(n_sa).array().exp().matrix() + mdp.reward() +
           g * transition_forward(mdp, v) - expand_states(mdp, v);
  };
  const auto objective = [&](const Eigen::VectorXd& x) {
    const StateActionVector y = residual(x);
    const StateActionVector ratio = gen.conjugate_derivative(y);
    const StateActionVector u = weights.cwiseProduct(ratio);
    MinEval ev;
    ev.value = c.dot(x.head(n_s)) + weights.dot(gen.conjugate(y));
    ev.grad.resize(n_s + n_sa);
    ev.grad.head(n_s) = c + g * transition_adjoint(mdp, u) - state_marginal(mdp, u);
    ev.grad.tail(n_sa) = u.cwiseProduct(x.tail(n_sa).array().exp().matrix());
    ev.step.resize(n_s + n_sa);
    ev.step.head(n_s) = n_s * ev.grad.head(n_s);
    // Multiplicative step on K: shrinks K wherever d is positive.
    ev.step.tail(n_sa) = detail::clip(ratio, 1.0);
    return ev;
  };
  const MinSolution sol = solve_min(objective, Eigen::VectorXd::Zero(n_s + n_sa), config);

  VlpResult out;
  out.method = "vlp:" + gen.name();
  out.v_table = sol.params.head(n_s);
  out.k_table = sol.params.tail(n_sa).array().exp().matrix();
  out.objective_value = sol.report.objective_value;
  out.report = sol.report;
  finish_recovery(mdp, weights.cwiseProduct(gen.conjugate_derivative(residual(sol.params))), out);
  return out;
}

VlpResult reps_objective_solve(const TabularMdp& mdp, const OfflineDataset& dataset,
                               const SolverConfig& config, const EstimatorOptions& options) {
  require_discounted(mdp, "reps_objective_solve");
  const Eigen::VectorXd weights = detail::covered_weights(dataset, mdp, nullptr, options);
  const int n_s = mdp.n_states();
  const double g = mdp.discount();
  const StateVector c = (1.0 - g) * mdp.initial_dist();
  const auto residual = [&](const StateVector& v) -> StateActionVector {
    return mdp.reward() + g * transition_forward(mdp, v) - expand_states(mdp, v);
  };
  const auto objective = [&](const Eigen::VectorXd& v) {
    const StateActionVector y = residual(v);
    const StateActionVector u = weights.cwiseProduct(softmax_weights(y, weights));
    MinEval ev;
    ev.value = c.dot(v) + log_mean_exp(y, weights);
    ev.grad = c + g * transition_adjoint(mdp, u) - state_marginal(mdp, u);
    ev.step = n_s * ev.grad;
    return ev;
  };
  const MinSolution sol = solve_min(objective, Eigen::VectorXd::Zero(n_s), config);

  VlpResult out;
  out.method = "reps";
  out.v_table = sol.params;
  out.objective_value = sol.report.objective_value;
  out.report = sol.report;
  const StateActionVector w = softmax_weights(residual(sol.params), weights);
  finish_recovery(mdp, weights.cwiseProduct(w), out);
  OfflineDataset view = dataset;
  view.weights = weights;
  out.recovered_policy = max_likelihood_policy(view, w);
  return out;
}

VlpEvalResult vlp_policy_eval_lagrangian(const TabularMdp& mdp, const Policy& target,
                                         const OfflineDataset& dataset,
                                         const SolverConfig& config,
                                         const EstimatorOptions& options) {
  require_discounted(mdp, "vlp_policy_eval_lagrangian");
  const Eigen::VectorXd weights = detail::covered_weights(dataset, mdp, &target, options);
  const int n_s = mdp.n_states();
  const int n_a = mdp.n_actions();
  const double g = mdp.discount();
  const StateVector c = (1.0 - g) * mdp.initial_dist();
  const StateVector data_states = state_marginal(mdp, weights);
  // d^D(s,a) pi(a|s) / d^D(a|s): the behavior conditional enters here.
  StateActionVector reweighted = StateActionVector::Zero(mdp.n_state_actions());
  for (int s = 0; s < n_s; ++s) {
    for (int a = 0; a < n_a; ++a) {
      const int sa = mdp.index(s, a);
      if (weights[sa] > 0.0) {
        const double conditional = weights[sa] / data_states[s];
        reweighted[sa] = weights[sa] * target(s, a) / conditional;
      }
    }
  }

  const auto objective = [&](const StateVector& v, const StateVector& zeta) {
    const StateVector mu = data_states.cwiseProduct(zeta);
    const StateActionVector m = reweighted.cwiseProduct(expand_states(mdp, zeta));
    const StateActionVector backup = mdp.reward() + g * transition_forward(mdp, v);
    SaddleEval ev;
    ev.value = c.dot(v) + m.dot(backup) - mu.dot(v);
    ev.grad_min = c + g * transition_adjoint(mdp, m) - mu;
    ev.grad_max = state_marginal(mdp, reweighted.cwiseProduct(backup)) -
                  data_states.cwiseProduct(v);
    // Steps as if the max block were mu = d^D(s) zeta(s).
    ev.step_min = ev.grad_min;
    ev.step_max = ev.grad_max.cwiseQuotient(data_states.cwiseProduct(data_states));
    return ev;
  };
  const SaddleSolution sol =
      solve_saddle(objective, StateVector::Zero(n_s), StateVector::Ones(n_s),
                   resolve_update(config, SaddleUpdate::kExtragradient));
  VlpEvalResult out;
  out.v_table = sol.min_params;
  out.mu = data_states.cwiseProduct(sol.max_params);
  out.report = sol.report;
  out.value = 0.0;
  for (int s = 0; s < n_s; ++s) {
    for (int a = 0; a < n_a; ++a) out.value += out.mu[s] * target(s, a) * mdp.reward()[mdp.index(s, a)];
  }
  return out;
}

}  // namespace dualrl
