#include "dualrl/estimators.hpp"

#include <cmath>

#include "common.hpp"
#include "dualrl/oracles.hpp"

namespace dualrl {
namespace {

void require_discounted(const TabularMdp& mdp, const char* what) {
  if (mdp.discount() >= 1.0) {
    throw Error(ErrorKind::kUndiscountedUnsupported,
                std::string(what) + " needs discount < 1; see the undiscounted estimators");
  }
}

std::string mode_tag(const LagrangianSpec& spec) {
  switch (spec.mode) {
    case LagrangianMode::kReward: return "lagrangian:reward";
    case LagrangianMode::kZero: return "lagrangian:zero";
    case LagrangianMode::kFDiv: return "lagrangian:fdiv:" + spec.gen.name();
  }
  return "lagrangian";
}

// Samples grouped as a sparse empirical operator for the single-sample dual.
struct SampledTerms {
  std::vector<int> sa;
  std::vector<int> next_state;
};

SampledTerms sampled_terms(const OfflineDataset& dataset, const TabularMdp& mdp) {
  SampledTerms out;
  for (const Transition& t : dataset.samples) {
    if (t.state < 0 || t.state >= mdp.n_states() || t.action < 0 || t.action >= mdp.n_actions() ||
        t.next_state < 0 || t.next_state >= mdp.n_states()) {
      throw Error(ErrorKind::kShapeMismatch, "sample indices outside the MDP");
    }
    out.sa.push_back(mdp.index(t.state, t.action));
    out.next_state.push_back(t.next_state);
  }
  return out;
}

}  // namespace

LagrangianEval lagrangian_eval(const TabularMdp& mdp, const Policy& target,
                               const Eigen::VectorXd& weights, const LagrangianSpec& spec,
                               const StateActionVector& q, const StateActionVector& zeta) {
  const double g = mdp.discount();
  const StateActionVector c = (1.0 - g) * initial_state_action(mdp, target);
  StateActionVector residual = detail::bellman_forward(mdp, target, q, g);
  if (spec.mode == LagrangianMode::kReward) residual += mdp.reward();
  const StateActionVector flow = weights.cwiseProduct(zeta);
  LagrangianEval out;
  out.value = c.dot(q) + flow.dot(residual);
  out.grad_q = c + detail::bellman_adjoint(mdp, target, flow, g);
  out.grad_zeta = weights.cwiseProduct(residual);
  if (spec.mode == LagrangianMode::kFDiv) {
    out.value -= weights.dot(spec.gen.eval(zeta));
    out.grad_zeta -= weights.cwiseProduct(spec.gen.derivative(zeta));
  }
  return out;
}

EvalResult lagrangian_ope(const TabularMdp& mdp, const Policy& target,
                          const OfflineDataset& dataset, const LagrangianSpec& spec,
                          const SolverConfig& config, const EstimatorOptions& options) {
  require_discounted(mdp, "lagrangian_ope");
  const Eigen::VectorXd weights = detail::covered_weights(dataset, mdp, &target, options);
  const int n_sa = mdp.n_state_actions();
  const bool fdiv = spec.mode == LagrangianMode::kFDiv;
  const SolverConfig cfg =
      resolve_update(config, fdiv ? SaddleUpdate::kSimultaneous : SaddleUpdate::kExtragradient);
  const auto per_pair = [&](const Eigen::VectorXd& grad_zeta) {
    Eigen::VectorXd r = grad_zeta;
    for (int i = 0; i < n_sa; ++i) r[i] = weights[i] > 0.0 ? r[i] / weights[i] : 0.0;
    return r;
  };
  // Reward and Zero modes: zeta itself, stepped as d = d^D zeta would be.
  const auto linear = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& zeta) {
    const LagrangianEval ev = lagrangian_eval(mdp, target, weights, spec, q, zeta);
    SaddleEval out;
    out.value = ev.value;
    out.grad_min = ev.grad_q;
    out.grad_max = ev.grad_zeta;
    out.step_min = ev.grad_q;
    out.step_max = per_pair(per_pair(ev.grad_zeta));
    return out;
  };
  // FDiv mode: zeta = exp(w).
  const auto exponential = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& w) {
    const StateActionVector zeta = w.array().exp().matrix();
    const LagrangianEval ev = lagrangian_eval(mdp, target, weights, spec, q, zeta);
    SaddleEval out;
    out.value = ev.value;
    out.grad_min = ev.grad_q;
    out.grad_max = ev.grad_zeta.cwiseProduct(zeta);
    out.step_min = n_sa * ev.grad_q;
    out.step_max = detail::clip(per_pair(ev.grad_zeta), 1.0);
    return out;
  };
  const SaddleSolution sol =
      fdiv ? solve_saddle(exponential, Eigen::VectorXd::Zero(n_sa), Eigen::VectorXd::Zero(n_sa), cfg)
           : solve_saddle(linear, Eigen::VectorXd::Zero(n_sa), Eigen::VectorXd::Ones(n_sa), cfg);

  EvalResult out;
  out.method = mode_tag(spec);
  out.q_table = sol.min_params;
  const StateActionVector zeta =
      fdiv ? StateActionVector(sol.max_params.array().exp().matrix()) : sol.max_params;
  out.report = sol.report;
  out.objective_value = sol.report.objective_value;
  out.value_estimate = spec.mode == LagrangianMode::kReward
                           ? lagrangian_eval(mdp, target, weights, spec, out.q_table, zeta).value
                           : weights.cwiseProduct(zeta).dot(mdp.reward());
  // Ratios the target never reaches come out as roundoff around zero.
  out.zeta_table = zeta.cwiseMax(0.0);
  return out;
}

double dualdice_objective(const TabularMdp& mdp, const Policy& target,
                          const Eigen::VectorXd& weights, const ConvexGenerator& gen,
                          const StateActionVector& q) {
  const double g = mdp.discount();
  const StateActionVector c = (1.0 - g) * initial_state_action(mdp, target);
  const StateActionVector y = detail::bellman_forward(mdp, target, q, g);
  return c.dot(q) + divergence_conjugate(gen, y, weights, gen.kind() == GeneratorKind::kKL);
}

EvalResult dualdice_dual(const TabularMdp& mdp, const Policy& target,
                         const OfflineDataset& dataset, const ConvexGenerator& gen,
                         const SolverConfig& config, bool closed_form,
                         const EstimatorOptions& options) {
  require_discounted(mdp, "dualdice_dual");
  const Eigen::VectorXd weights = detail::covered_weights(dataset, mdp, &target, options);
  const int n_sa = mdp.n_state_actions();
  const double g = mdp.discount();
  const bool constrained = gen.kind() == GeneratorKind::kKL;
  const StateActionVector c = (1.0 - g) * initial_state_action(mdp, target);

  const auto ratio = [&](const StateActionVector& y) -> StateActionVector {
    return constrained ? softmax_weights(Eigen::VectorXd(y / gen.scale()), weights)
                       : gen.conjugate_derivative(y);
  };

  EvalResult out;
  out.method = "dualdice:" + gen.name() + (closed_form ? ":closed" : "");
  if (closed_form) {
    if (gen.kind() != GeneratorKind::kSquare) {
      throw Error(ErrorKind::kClosedFormUnsupported,
                  "closed form exists only for square, not " + gen.name());
    }
    // sum_D f*(B Q) = (B Q)^T D (B Q) / (2 a): normal equations.
    const Eigen::MatrixXd b = g * policy_transition_matrix(mdp, target) -
                              Eigen::MatrixXd::Identity(n_sa, n_sa);
    const Eigen::MatrixXd h = b.transpose() * weights.asDiagonal() * b / gen.scale();
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(h);
    if (!(lu.rcond() > 1e-14)) {
      throw Error(ErrorKind::kSingularSystem, "closed-form DualDICE system is singular");
    }
    out.q_table = lu.solve(Eigen::VectorXd(-c));
    out.report.converged = true;
    out.report.iters_used = 0;
    const StateActionVector y = b * out.q_table;
    out.report.final_grad_norm =
        (c + b.transpose() * weights.cwiseProduct(gen.conjugate_derivative(y))).norm();
  } else {
    const bool sampled = dataset.mode == DatasetMode::kSampled && !dataset.samples.empty();
    const SampledTerms terms = sampled ? sampled_terms(dataset, mdp) : SampledTerms{};
    const auto objective = [&](const Eigen::VectorXd& q) {
      MinEval ev;
      if (!sampled) {
        const StateActionVector y = detail::bellman_forward(mdp, target, q, g);
        const StateActionVector z = ratio(y);
        ev.value = c.dot(q) + divergence_conjugate(gen, y, weights, constrained);
        ev.grad = c + detail::bellman_adjoint(mdp, target, weights.cwiseProduct(z), g);
      } else {
        // One sampled next state inside f*: the biased single-sample form.
        const StateVector v = policy_average(target, q);
        const int n = static_cast<int>(terms.sa.size());
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = g * v[terms.next_state[i]] - q[terms.sa[i]];
        const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
        const Eigen::VectorXd z =
            constrained ? softmax_weights(Eigen::VectorXd(y / gen.scale()), uniform)
                        : gen.conjugate_derivative(y);
        ev.value = c.dot(q) + divergence_conjugate(gen, y, uniform, constrained);
        ev.grad = c;
        for (int i = 0; i < n; ++i) {
          const double u = z[i] / n;
          const int sp = terms.next_state[i];
          for (int a = 0; a < mdp.n_actions(); ++a) ev.grad[mdp.index(sp, a)] += g * u * target(sp, a);
          ev.grad[terms.sa[i]] -= u;
        }
      }
      ev.step = n_sa * ev.grad;
      return ev;
    };
    const MinSolution sol = solve_min(objective, Eigen::VectorXd::Zero(n_sa), config);
    out.q_table = sol.params;
    out.report = sol.report;
  }
  out.zeta_table = ratio(detail::bellman_forward(mdp, target, out.q_table, g));
  out.objective_value = dualdice_objective(mdp, target, weights, gen, out.q_table);
  out.report.objective_value = out.objective_value;
  out.value_estimate = weights.cwiseProduct(out.zeta_table).dot(mdp.reward());
  return out;
}

double doubly_robust_eval(const TabularMdp& mdp, const Policy& target,
                          const OfflineDataset& dataset, const StateActionVector& q_table,
                          const StateActionVector& zeta_table) {
  require_discounted(mdp, "doubly_robust_eval");
  if (q_table.size() != mdp.n_state_actions() || zeta_table.size() != mdp.n_state_actions()) {
    throw Error(ErrorKind::kShapeMismatch, "doubly_robust_eval: table lengths do not match");
  }
  return lagrangian_eval(mdp, target, dataset.weights, LagrangianSpec{}, q_table, zeta_table)
      .value;
}

double value_from_zeta(const OfflineDataset& dataset, const TabularMdp& mdp,
                       const StateActionVector& zeta_table) {
  if (zeta_table.size() != mdp.n_state_actions() || dataset.size() != mdp.n_state_actions()) {
    throw Error(ErrorKind::kShapeMismatch, "value_from_zeta: table lengths do not match");
  }
  return dataset.weights.cwiseProduct(zeta_table).dot(mdp.reward());
}

}  // namespace dualrl
