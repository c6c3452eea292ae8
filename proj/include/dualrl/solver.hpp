#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dualrl/error.hpp"

namespace dualrl {

enum class StepDecay { kNone, kInverseSqrt };

enum class SaddleUpdate {
  kAuto,           // the caller's default; simultaneous in solve_saddle
  kSimultaneous,   // plain gradient descent-ascent
  kExtragradient,  // look-ahead step, then update with the look-ahead gradient;
                   // the step shrinks when the look-ahead field changes too fast
};

struct SolverConfig {
  double step_size_min = 0.1;  // min block
  double step_size_max = 0.1;  // max block
  int max_iters = 200000;
  double grad_tol = 1e-8;
  StepDecay step_decay = StepDecay::kNone;
  std::uint64_t seed = 0;
  bool averaging = true;
  // The averaging window restarts once the iteration count reaches this
  // multiple of the window start.
  double average_restart_ratio = 2.0;
  SaddleUpdate update = SaddleUpdate::kAuto;
  int check_every = 10;
  int record_every = 1000;

  void validate() const;
};

// config with kAuto replaced by fallback.
SolverConfig resolve_update(SolverConfig config, SaddleUpdate fallback);

struct SolveReport {
  bool converged = false;
  int iters_used = 0;
  double final_grad_norm = 0.0;
  double objective_value = 0.0;
  // (iteration, objective) every record_every iterations.
  std::vector<std::pair<int, double>> trajectory;
};

// Value and gradient of a scalar objective. step, when non-empty, is the
// direction actually moved along (a preconditioned gradient); convergence is
// always judged on grad.
struct MinEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd step;
};

struct SaddleEval {
  double value = 0.0;
  Eigen::VectorXd grad_min;
  Eigen::VectorXd grad_max;
  Eigen::VectorXd step_min;
  Eigen::VectorXd step_max;
};

using MinObjective = std::function<MinEval(const Eigen::VectorXd&)>;
using SaddleObjective = std::function<SaddleEval(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct MinSolution {
  Eigen::VectorXd params;
  SolveReport report;
};

struct SaddleSolution {
  Eigen::VectorXd min_params;
  Eigen::VectorXd max_params;
  SolveReport report;
};

// Gradient descent; returns the last iterate. Throws NonFiniteObjective.
MinSolution solve_min(const MinObjective& objective, Eigen::VectorXd init,
                      const SolverConfig& config);

// Descent on the min block, ascent on the max block. With averaging the
// returned point is the uniform average of the iterates since the last
// power-of-two iteration, and convergence is judged there.
SaddleSolution solve_saddle(const SaddleObjective& objective, Eigen::VectorXd init_min,
                            Eigen::VectorXd init_max, const SolverConfig& config);

}  // namespace dualrl
