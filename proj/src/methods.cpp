#include "dualrl/methods.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "dualrl/oracles.hpp"
#include "dualrl/policy_opt.hpp"
#include "dualrl/undiscounted.hpp"
#include "dualrl/vlp.hpp"

namespace dualrl {
namespace {

struct FamilyInfo {
  MethodFamily family;
  const char* pattern;
  const char* example;
  MethodRole role;
  bool undiscounted;
};

const std::vector<FamilyInfo>& family_table() {
  using F = MethodFamily;
  using R = MethodRole;
  static const std::vector<FamilyInfo> table = {
      {F::kLagrangianReward, "lagrangian:reward", "lagrangian:reward", R::kEvaluation, false},
      {F::kLagrangianZero, "lagrangian:zero", "lagrangian:zero", R::kEvaluation, false},
      {F::kLagrangianFDiv, "lagrangian:fdiv:<gen>", "lagrangian:fdiv:square", R::kEvaluation,
       false},
      {F::kDualDice, "dualdice:<gen>[:closed]", "dualdice:square:closed", R::kEvaluation, false},
      {F::kAlgaeDice, "algaedice:<gen>[:noreward]", "algaedice:square",
       R::kPolicyOptimization, false},
      {F::kKlQlp, "klqlp", "klqlp", R::kPolicyOptimization, false},
      {F::kVlp, "vlp:<gen>", "vlp:square", R::kDistribution, false},
      {F::kReps, "reps", "reps", R::kDistribution, false},
      {F::kVlpEval, "vlp-eval", "vlp-eval", R::kEvaluation, false},
      {F::kUndiscDual, "undisc-dual:<gen>", "undisc-dual:square", R::kEvaluation, true},
      {F::kUndiscLagrangian, "undisc-lagrangian", "undisc-lagrangian", R::kEvaluation, true},
      {F::kUndiscGenDice, "undisc-lagrangian:gendice", "undisc-lagrangian:gendice",
       R::kEvaluation, true},
      {F::kUndiscOpt, "undisc-opt:<gen>", "undisc-opt:square", R::kPolicyOptimization, true},
      {F::kUndiscReps, "undisc-reps", "undisc-reps", R::kDistribution, true},
  };
  return table;
}

const FamilyInfo& info(MethodFamily family) {
  for (const FamilyInfo& f : family_table()) {
    if (f.family == family) return f;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown method family");
}

bool consume_prefix(std::string_view& text, std::string_view prefix) {
  if (!text.starts_with(prefix)) return false;
  text.remove_prefix(prefix.size());
  return true;
}

bool consume_suffix(std::string_view& text, std::string_view suffix) {
  if (!text.ends_with(suffix)) return false;
  text.remove_suffix(suffix.size());
  return true;
}

[[noreturn]] void reject(std::string_view text, const std::string& why) {
  throw Error(ErrorKind::kParseError, "method '" + std::string(text) + "': " + why);
}

ConvexGenerator generator_or_reject(std::string_view whole, std::string_view gen) {
  if (gen.empty()) reject(whole, "missing generator");
  try {
    return ConvexGenerator::parse(gen);
  } catch (const Error& e) {
    reject(whole, e.what());
  }
}

// Largest entrywise gap between two ratio tables where the data has mass.
double ratio_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& oracle,
                   const Eigen::VectorXd& data) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (data[i] > 0.0) worst = std::max(worst, std::abs(estimate[i] - oracle[i]));
  }
  return worst;
}

Eigen::VectorXd safe_ratio(const Eigen::VectorXd& num, const Eigen::VectorXd& den) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num.size());
  for (Eigen::Index i = 0; i < num.size(); ++i) {
    if (den[i] > 0.0) out[i] = num[i] / den[i];
  }
  return out;
}

void fill_report(MethodOutcome& out, const SolveReport& report) {
  out.converged = report.converged;
  out.iters = report.iters_used;
  out.final_grad_norm = report.final_grad_norm;
  out.objective_value = report.objective_value;
}

const Policy& require_target(const MethodSpec& spec, const MethodRun& run) {
  if (!run.target) {
    throw Error(ErrorKind::kMissingPolicy, spec.text + " needs a target policy");
  }
  return *run.target;
}

MethodOutcome run_evaluation(const MethodSpec& spec, const MethodRun& run) {
  const TabularMdp& mdp = run.mdp;
  const Policy& target = require_target(spec, run);
  MethodOutcome out;
  out.method = spec.text;
  switch (spec.family) {
    case MethodFamily::kLagrangianReward:
    case MethodFamily::kLagrangianZero:
    case MethodFamily::kLagrangianFDiv:
    case MethodFamily::kDualDice: {
      EvalResult r;
      if (spec.family == MethodFamily::kDualDice) {
        r = dualdice_dual(mdp, target, run.dataset, spec.gen, run.solver, spec.closed_form,
                          run.options);
      } else {
        const LagrangianMode mode = spec.family == MethodFamily::kLagrangianReward
                                        ? LagrangianMode::kReward
                                        : spec.family == MethodFamily::kLagrangianZero
                                              ? LagrangianMode::kZero
                                              : LagrangianMode::kFDiv;
        r = lagrangian_ope(mdp, target, run.dataset, LagrangianSpec{mode, spec.gen}, run.solver,
                           run.options);
      }
      fill_report(out, r.report);
      out.objective_value = r.objective_value;
      out.value_estimate = r.value_estimate;
      out.zeta_table = r.zeta_table;
      out.q_table = r.q_table;
      if (run.with_oracle && mdp.n_state_actions() <= kValueOracleBudget) {
        out.oracle_value = exact_value(mdp, target);
        out.zeta_max_error =
            ratio_error(r.zeta_table, safe_ratio(exact_visitation(mdp, target), run.dataset.weights),
                        run.dataset.weights);
      }
      break;
    }
    case MethodFamily::kVlpEval: {
      const VlpEvalResult r =
          vlp_policy_eval_lagrangian(mdp, target, run.dataset, run.solver, run.options);
      fill_report(out, r.report);
      out.value_estimate = r.value;
      out.v_table = r.v_table;
      const StateVector data_states = state_marginal(mdp, run.dataset.weights);
      out.zeta_table = safe_ratio(r.mu, data_states);
      if (run.with_oracle && mdp.n_state_actions() <= kValueOracleBudget) {
        out.oracle_value = exact_value(mdp, target);
        const StateVector truth = state_marginal(mdp, exact_visitation(mdp, target));
        out.zeta_max_error =
            ratio_error(out.zeta_table, safe_ratio(truth, data_states), data_states);
      }
      break;
    }
    default: {
      UndiscountedResult r;
      if (spec.family == MethodFamily::kUndiscDual) {
        r = undisc_fdiv_dual(mdp, target, run.dataset, spec.gen, run.solver, run.options);
      } else {
        r = undisc_lagrangian(mdp, target, run.dataset, spec.gen,
                              spec.family == MethodFamily::kUndiscGenDice, run.solver,
                              run.options);
      }
      fill_report(out, r.report);
      out.objective_value = r.objective_value;
      out.value_estimate = r.value_estimate;
      out.zeta_table = r.zeta_table;
      out.q_table = r.q_table;
      out.lambda = r.lambda;
      if (run.with_oracle && mdp.n_state_actions() <= kValueOracleBudget) {
        const TabularMdp m = mdp.with_discount(1.0);
        out.oracle_value = exact_average_reward(m, target);
        out.zeta_max_error =
            ratio_error(r.zeta_table, safe_ratio(exact_stationary(m, target), run.dataset.weights),
                        run.dataset.weights);
      }
      break;
    }
  }
  return out;
}

// Scores optimization and distribution methods: the solver objective
// against the regularized optimum, and the implied ratio against d*/d^D.
void attach_regularized_oracle(MethodOutcome& out, const TabularMdp& mdp,
                               const Eigen::VectorXd& weights, const ConvexGenerator& gen,
                               FlowMode mode) {
  try {
    const RegularizedOptimum opt = exact_regularized_optimum(mdp, weights, gen, mode);
    out.oracle_value = opt.value;
    out.zeta_max_error = ratio_error(out.zeta_table, safe_ratio(opt.d, weights), weights);
  } catch (const Error&) {
    // Budget or solver limits: leave the oracle columns empty.
  }
}

std::optional<double> policy_value_or_empty(const TabularMdp& mdp, const Policy& policy) {
  try {
    return mdp.discount() < 1.0 ? exact_value(mdp, policy)
                                : exact_average_reward(mdp, policy);
  } catch (const Error&) {
    return std::nullopt;
  }
}

MethodOutcome run_optimization(const MethodSpec& spec, const MethodRun& run) {
  const TabularMdp& mdp = run.mdp;
  MethodOutcome out;
  out.method = spec.text;
  const bool oracle = run.with_oracle && mdp.n_state_actions() <= kRegularizedOracleBudget;
  switch (spec.family) {
    case MethodFamily::kAlgaeDice:
    case MethodFamily::kKlQlp: {
      const bool kl = spec.family == MethodFamily::kKlQlp;
      const OptResult r = kl ? kl_qlp_optimize(mdp, run.dataset, run.solver, run.options)
                             : algaedice_primal(mdp, run.dataset, spec.gen, spec.reward_on,
                                                spec.alpha, run.solver, run.options);
      fill_report(out, r.report);
      out.objective_value = r.objective_value;
      out.value_estimate = r.objective_value;
      out.q_table = r.q_table;
      out.policy = r.policy;
      out.policy_value = r.value_of_policy;
      const ConvexGenerator gen = kl ? ConvexGenerator::kl() : spec.gen.scaled(spec.alpha);
      const bool reward_on = kl || spec.reward_on;
      out.zeta_table = qlp_policy_objective(mdp, run.dataset.weights, gen, kl, reward_on,
                                            r.policy_logits, r.q_table)
                           .zeta;
      if (oracle) {
        const TabularMdp scored =
            reward_on ? mdp : mdp.with_reward(Eigen::VectorXd::Zero(mdp.n_state_actions()));
        attach_regularized_oracle(out, scored, run.dataset.weights, gen, FlowMode::kDiscounted);
      }
      break;
    }
    case MethodFamily::kVlp:
    case MethodFamily::kReps:
    case MethodFamily::kUndiscReps: {
      VlpResult r;
      if (spec.family == MethodFamily::kVlp) {
        r = vlp_fdiv_dual(mdp, run.dataset, spec.gen, run.solver, run.options);
      } else if (spec.family == MethodFamily::kReps) {
        r = reps_objective_solve(mdp, run.dataset, run.solver, run.options);
      } else {
        r = undisc_reps(mdp, run.dataset, run.solver, run.options);
      }
      const bool undisc = spec.family == MethodFamily::kUndiscReps;
      const TabularMdp scored = undisc ? mdp.with_discount(1.0) : mdp;
      fill_report(out, r.report);
      out.value_estimate = r.objective_value;
      out.v_table = r.v_table;
      out.policy = r.recovered_policy;
      out.policy_value = policy_value_or_empty(scored, r.recovered_policy);
      out.zeta_table = safe_ratio(r.recovered_d, run.dataset.weights);
      if (oracle) {
        const ConvexGenerator gen =
            spec.family == MethodFamily::kVlp ? spec.gen : ConvexGenerator::kl();
        attach_regularized_oracle(out, scored, run.dataset.weights, gen,
                                  undisc ? FlowMode::kUndiscounted : FlowMode::kDiscounted);
      }
      break;
    }
    default: {
      const OptResult r = undisc_policy_opt(mdp, run.dataset, spec.gen, run.solver, run.options);
      const TabularMdp m = mdp.with_discount(1.0);
      fill_report(out, r.report);
      out.objective_value = r.objective_value;
      out.value_estimate = r.objective_value;
      out.q_table = r.q_table;
      out.lambda = r.lambda;
      out.policy = r.policy;
      if (r.policy_ergodic) out.policy_value = r.value_of_policy;
      const StateActionVector y =
          (m.reward() + policy_forward(m, r.policy, r.q_table) - r.q_table).array() + r.lambda;
      out.zeta_table = spec.gen.conjugate_derivative(y);
      if (oracle) {
        attach_regularized_oracle(out, m, run.dataset.weights, spec.gen, FlowMode::kUndiscounted);
      }
      break;
    }
  }
  return out;
}

}  // namespace

MethodSpec parse_method(std::string_view text) {
  MethodSpec spec;
  spec.text = std::string(text);
  std::string_view rest = text;
  using F = MethodFamily;
  if (rest == "lagrangian:reward") {
    spec.family = F::kLagrangianReward;
  } else if (rest == "lagrangian:zero") {
    spec.family = F::kLagrangianZero;
  } else if (consume_prefix(rest, "lagrangian:fdiv:")) {
    spec.family = F::kLagrangianFDiv;
    spec.gen = generator_or_reject(text, rest);
  } else if (consume_prefix(rest, "dualdice:")) {
    spec.family = F::kDualDice;
    spec.closed_form = consume_suffix(rest, ":closed");
    spec.gen = generator_or_reject(text, rest);
  } else if (consume_prefix(rest, "algaedice:")) {
    spec.family = F::kAlgaeDice;
    spec.reward_on = !consume_suffix(rest, ":noreward");
    spec.gen = generator_or_reject(text, rest);
  } else if (rest == "klqlp") {
    spec.family = F::kKlQlp;
    spec.gen = ConvexGenerator::kl();
  } else if (consume_prefix(rest, "vlp:")) {
    spec.family = F::kVlp;
    spec.gen = generator_or_reject(text, rest);
    if (spec.gen.kind() == GeneratorKind::kKL) reject(text, "kl is served by 'reps'");
  } else if (rest == "reps") {
    spec.family = F::kReps;
    spec.gen = ConvexGenerator::kl();
  } else if (rest == "vlp-eval") {
    spec.family = F::kVlpEval;
  } else if (consume_prefix(rest, "undisc-dual:")) {
    spec.family = F::kUndiscDual;
    spec.gen = generator_or_reject(text, rest);
  } else if (rest == "undisc-lagrangian") {
    spec.family = F::kUndiscLagrangian;
  } else if (rest == "undisc-lagrangian:gendice") {
    spec.family = F::kUndiscGenDice;
  } else if (consume_prefix(rest, "undisc-opt:")) {
    spec.family = F::kUndiscOpt;
    spec.gen = generator_or_reject(text, rest);
  } else if (rest == "undisc-reps") {
    spec.family = F::kUndiscReps;
    spec.gen = ConvexGenerator::kl();
  } else {
    reject(text, "not a registered method");
  }
  return spec;
}

const std::vector<std::string>& registered_method_patterns() {
  static const std::vector<std::string> patterns = [] {
    std::vector<std::string> out;
    for (const FamilyInfo& f : family_table()) out.emplace_back(f.pattern);
    return out;
  }();
  return patterns;
}

std::string_view method_pattern(MethodFamily family) { return info(family).pattern; }

std::string example_method(MethodFamily family) { return info(family).example; }

std::vector<MethodFamily> all_method_families() {
  std::vector<MethodFamily> out;
  for (const FamilyInfo& f : family_table()) out.push_back(f.family);
  return out;
}

MethodRole method_role(MethodFamily family) { return info(family).role; }

bool is_undiscounted(MethodFamily family) { return info(family).undiscounted; }

SolverConfig default_solver_config(const MethodSpec& spec) {
  SolverConfig config;
  switch (spec.family) {
    case MethodFamily::kLagrangianReward:
    case MethodFamily::kLagrangianZero:
    case MethodFamily::kVlpEval:
      config.step_size_min = 1.0;
      config.step_size_max = 1.0;
      break;
    default:
      break;
  }
  return config;
}

MethodOutcome run_method(const MethodSpec& spec, const MethodRun& run) {
  run.solver.validate();
  MethodOutcome out = method_role(spec.family) == MethodRole::kEvaluation
                          ? run_evaluation(spec, run)
                          : run_optimization(spec, run);
  if (out.oracle_value) out.abs_error = std::abs(out.value_estimate - *out.oracle_value);
  return out;
}

}  // namespace dualrl
