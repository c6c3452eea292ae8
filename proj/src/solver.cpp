#include "dualrl/solver.hpp"

#include <cmath>
#include <sstream>

namespace dualrl {
namespace {

constexpr double kLookaheadRatio = 0.7;
constexpr double kScaleGrowth = 1.05;

double step_at(double base, StepDecay decay, int iter) {
  if (decay == StepDecay::kInverseSqrt) return base / std::sqrt(1.0 + iter);
  return base;
}

void require_finite(double value, const Eigen::VectorXd& g1, const Eigen::VectorXd& g2,
                    int iter) {
  if (!std::isfinite(value) || !g1.allFinite() || !g2.allFinite()) {
    std::ostringstream os;
    os << "objective or gradient is not finite at iteration " << iter;
    throw Error(ErrorKind::kNonFiniteObjective, os.str());
  }
}

const Eigen::VectorXd& direction(const Eigen::VectorXd& step, const Eigen::VectorXd& grad) {
  return step.size() ? step : grad;
}

double joint_norm(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::sqrt(a.squaredNorm() + b.squaredNorm());
}

}  // namespace

void SolverConfig::validate() const {
  if (!(step_size_min > 0.0) || !(step_size_max > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "solver step sizes must be positive");
  }
  if (max_iters < 1) throw Error(ErrorKind::kInvalidArgument, "solver max_iters must be >= 1");
  if (!(grad_tol > 0.0)) throw Error(ErrorKind::kInvalidArgument, "solver grad_tol must be > 0");
  if (!(average_restart_ratio > 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "solver average_restart_ratio must be > 1");
  }
  if (check_every < 1 || record_every < 1) {
    throw Error(ErrorKind::kInvalidArgument, "solver check/record intervals must be >= 1");
  }
}

SolverConfig resolve_update(SolverConfig config, SaddleUpdate fallback) {
  if (config.update == SaddleUpdate::kAuto) config.update = fallback;
  return config;
}

MinSolution solve_min(const MinObjective& objective, Eigen::VectorXd x,
                      const SolverConfig& config) {
  config.validate();
  const Eigen::VectorXd empty;
  MinSolution out;
  SolveReport& report = out.report;
  MinEval ev = objective(x);
  require_finite(ev.value, ev.grad, empty, 0);
  int iter = 0;
  for (;;) {
    report.final_grad_norm = ev.grad.norm();
    report.objective_value = ev.value;
    if (iter % config.record_every == 0) report.trajectory.emplace_back(iter, ev.value);
    if (report.final_grad_norm < config.grad_tol) {
      report.converged = true;
      break;
    }
    if (iter >= config.max_iters) break;
    x -= step_at(config.step_size_min, config.step_decay, iter) * direction(ev.step, ev.grad);
    ++iter;
    ev = objective(x);
    require_finite(ev.value, ev.grad, empty, iter);
  }
  report.iters_used = iter;
  out.params = std::move(x);
  return out;
}

SaddleSolution solve_saddle(const SaddleObjective& objective, Eigen::VectorXd x,
                            Eigen::VectorXd y, const SolverConfig& config) {
  config.validate();
  SaddleSolution out;
  SolveReport& report = out.report;

  Eigen::VectorXd sum_x = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd sum_y = Eigen::VectorXd::Zero(y.size());
  long window = 0;
  int window_start = 1;

  const auto averaged = [&](Eigen::VectorXd& ax, Eigen::VectorXd& ay) {
    if (config.averaging && window > 0) {
      ax = sum_x / static_cast<double>(window);
      ay = sum_y / static_cast<double>(window);
    } else {
      ax = x;
      ay = y;
    }
  };
  const auto assess = [&](int iter) {
    Eigen::VectorXd ax, ay;
    averaged(ax, ay);
    const SaddleEval ev = objective(ax, ay);
    require_finite(ev.value, ev.grad_min, ev.grad_max, iter);
    report.final_grad_norm = joint_norm(ev.grad_min, ev.grad_max);
    report.objective_value = ev.value;
    report.iters_used = iter;
    out.min_params = std::move(ax);
    out.max_params = std::move(ay);
    return report.final_grad_norm < config.grad_tol;
  };

  // Multiplier on the configured steps; only extragradient adapts it.
  double scale = 1.0;

  if (assess(0)) {
    report.converged = true;
    report.trajectory.emplace_back(0, report.objective_value);
    return out;
  }
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const double eta_x = step_at(config.step_size_min, config.step_decay, iter - 1);
    const double eta_y = step_at(config.step_size_max, config.step_decay, iter - 1);
    SaddleEval ev = objective(x, y);
    require_finite(ev.value, ev.grad_min, ev.grad_max, iter);
    if (iter == 1 || (iter - 1) % config.record_every == 0) {
      report.trajectory.emplace_back(iter - 1, ev.value);
    }
    if (config.update == SaddleUpdate::kExtragradient) {
      // Look-ahead with backtracking: the step field may not change by more
      // than kLookaheadRatio of its own size over the look-ahead move.
      const Eigen::VectorXd dx0 = eta_x * direction(ev.step_min, ev.grad_min);
      const Eigen::VectorXd dy0 = eta_y * direction(ev.step_max, ev.grad_max);
      const double size0 = joint_norm(dx0, dy0);
      SaddleEval ahead;
      for (int k = 0;; ++k) {
        ahead = objective(x - scale * dx0, y + scale * dy0);
        if (!std::isfinite(ahead.value) && k < 60) {
          scale *= 0.5;
          continue;
        }
        require_finite(ahead.value, ahead.grad_min, ahead.grad_max, iter);
        const Eigen::VectorXd dx1 = eta_x * direction(ahead.step_min, ahead.grad_min);
        const Eigen::VectorXd dy1 = eta_y * direction(ahead.step_max, ahead.grad_max);
        if (k >= 60 || joint_norm(dx1 - dx0, dy1 - dy0) <= kLookaheadRatio * size0) break;
        scale *= 0.5;
      }
      ev = std::move(ahead);
    }
    x -= scale * eta_x * direction(ev.step_min, ev.grad_min);
    y += scale * eta_y * direction(ev.step_max, ev.grad_max);
    if (config.update == SaddleUpdate::kExtragradient) scale = std::min(1.0, scale * kScaleGrowth);

    if (iter >= config.average_restart_ratio * window_start && iter > window_start) {
      window_start = iter;
      sum_x.setZero();
      sum_y.setZero();
      window = 0;
    }
    sum_x += x;
    sum_y += y;
    ++window;

    if (iter % config.check_every == 0 || iter == config.max_iters) {
      if (assess(iter)) {
        report.converged = true;
        return out;
      }
    }
  }
  return out;
}

}  // namespace dualrl
