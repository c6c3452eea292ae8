#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualrl/dataset.hpp"
#include "dualrl/estimators.hpp"
#include "dualrl/mdp.hpp"
#include "dualrl/methods.hpp"
#include "dualrl/solver.hpp"

namespace dualrl {

// Exit codes of the dualrl tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUnexpected = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCoverage = 3;
inline constexpr int kExitNotErgodic = 4;

int exit_code_for(ErrorKind kind);

// Experiment JSON:
//   {"mdp": {"path": F} | {"n_states", "n_actions", "discount", "seed"},
//    "behavior": "uniform" | {"random": seed} | {"path": F} | [[...]],
//    "target": same forms; default {"random": seed + 1000},
//    "dataset": {"path": F} | {"mode": "exact"|"sampled", "n_samples", "seed"},
//    "method": M, "methods": [M...], "seed": N, "seeds": [N...],
//    "alpha": a, "solver": {...}, "coverage": {"epsilon", "allow_clamp"},
//    "output": {"result": F, "csv": F}}
struct ExperimentConfig {
  std::optional<std::string> mdp_path;
  RandomMdpSpec generator;
  nlohmann::json behavior = "uniform";
  std::optional<nlohmann::json> target;
  std::optional<std::string> dataset_path;
  DatasetMode dataset_mode = DatasetMode::kExact;
  std::optional<int> n_samples;
  std::optional<std::uint64_t> dataset_seed;
  std::vector<std::string> methods;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  double alpha = 1.0;
  nlohmann::json solver = nlohmann::json::object();
  EstimatorOptions options;
  std::optional<std::string> result_path;
  std::optional<std::string> csv_path;
  nlohmann::json raw = nlohmann::json::object();
};

// Throws ParseError on unknown keys or malformed values. Relative paths are
// resolved against base_dir.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const std::string& base_dir = "");

// Applies the keys of a "solver" block on top of base.
SolverConfig solver_from_json(const nlohmann::json& block, SolverConfig base);
nlohmann::json solver_to_json(const SolverConfig& config);

// One experiment cell: builds the MDP, policies and dataset for seed and runs
// method on them.
nlohmann::json run_experiment(const ExperimentConfig& config, const std::string& method,
                              std::uint64_t seed);

// seed,method,value_estimate,oracle_value,abs_error,zeta_max_error,iters,converged,error
std::string compare_csv(const ExperimentConfig& config);

// Entry point of the dualrl tool; errors go to err as JSON lines.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dualrl
