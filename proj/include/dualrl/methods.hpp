#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dualrl/convex.hpp"
#include "dualrl/dataset.hpp"
#include "dualrl/estimators.hpp"
#include "dualrl/mdp.hpp"
#include "dualrl/solver.hpp"

namespace dualrl {

enum class MethodFamily {
  kLagrangianReward,
  kLagrangianZero,
  kLagrangianFDiv,
  kDualDice,
  kAlgaeDice,
  kKlQlp,
  kVlp,
  kReps,
  kVlpEval,
  kUndiscDual,
  kUndiscLagrangian,
  kUndiscGenDice,
  kUndiscOpt,
  kUndiscReps,
};

// Evaluation methods estimate rho(target); the others return a policy or a
// distribution and are scored against the regularized optimum.
enum class MethodRole { kEvaluation, kPolicyOptimization, kDistribution };

struct MethodSpec {
  std::string text;
  MethodFamily family = MethodFamily::kLagrangianReward;
  ConvexGenerator gen = ConvexGenerator::square();
  bool closed_form = false;
  bool reward_on = true;
  // Divergence weight for algaedice.
  double alpha = 1.0;
};

// Accepts every registered grammar, e.g. "dualdice:square:closed",
// "algaedice:pnorm:3:noreward", "undisc-lagrangian:gendice". Throws
// ParseError naming the offending string.
MethodSpec parse_method(std::string_view text);

// Grammar patterns, one per family, in registry order.
const std::vector<std::string>& registered_method_patterns();
std::string_view method_pattern(MethodFamily family);
// One concrete, parseable string per family.
std::string example_method(MethodFamily family);
std::vector<MethodFamily> all_method_families();

MethodRole method_role(MethodFamily family);
bool is_undiscounted(MethodFamily family);

// Solver defaults tuned per family; user overrides apply on top.
SolverConfig default_solver_config(const MethodSpec& spec);

struct MethodOutcome {
  std::string method;
  // Evaluation: the estimate of rho(target). Otherwise the solver's value of
  // the regularized objective.
  double value_estimate = 0.0;
  std::optional<double> oracle_value;
  std::optional<double> abs_error;
  // Max entry error of the estimated ratio table against the oracle ratio.
  std::optional<double> zeta_max_error;
  // Oracle value of the returned policy (optimization methods).
  std::optional<double> policy_value;
  bool converged = false;
  int iters = 0;
  double final_grad_norm = 0.0;
  double objective_value = 0.0;
  std::optional<double> lambda;
  StateActionVector zeta_table;
  StateActionVector q_table;
  StateVector v_table;
  std::optional<Policy> policy;
};

// Oracle columns are skipped above these sizes (state-action pairs).
inline constexpr int kValueOracleBudget = 4096;

struct MethodRun {
  const TabularMdp& mdp;
  const OfflineDataset& dataset;
  // Required by evaluation methods.
  const Policy* target = nullptr;
  SolverConfig solver;
  EstimatorOptions options;
  bool with_oracle = true;
};

MethodOutcome run_method(const MethodSpec& spec, const MethodRun& run);

}  // namespace dualrl
