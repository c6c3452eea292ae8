#include <doctest.h>

#include <cmath>
#include <random>

#include "dualrl/solver.hpp"
#include "fixtures.hpp"

using namespace dualrl;
using fixtures::error_kind;

TEST_SUITE("solver") {
  TEST_CASE("minimizes (x - 3)^2 from 0") {
    const MinObjective f = [](const Eigen::VectorXd& x) {
      MinEval e;
      e.value = (x[0] - 3) * (x[0] - 3);
      e.grad = Eigen::VectorXd::Constant(1, 2 * (x[0] - 3));
      return e;
    };
    const MinSolution sol = solve_min(f, Eigen::VectorXd::Zero(1), SolverConfig{});
    CHECK(sol.report.converged);
    CHECK(std::abs(sol.params[0] - 3.0) < 1e-6);
  }

  TEST_CASE("random convex quadratics match the normal-equations minimizer") {
    for (int seed = 0; seed < 5; ++seed) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal;
      Eigen::MatrixXd b(5, 5);
      Eigen::VectorXd c(5);
      for (int i = 0; i < 5; ++i) {
        c[i] = normal(rng);
        for (int j = 0; j < 5; ++j) b(i, j) = normal(rng);
      }
      const Eigen::MatrixXd h = b.transpose() * b + Eigen::MatrixXd::Identity(5, 5);
      const double curvature = h.selfadjointView<Eigen::Upper>().eigenvalues().maxCoeff();
      const MinObjective f = [&](const Eigen::VectorXd& x) {
        MinEval e;
        e.value = 0.5 * x.dot(h * x) - c.dot(x);
        e.grad = h * x - c;
        return e;
      };
      SolverConfig config;
      config.step_size_min = 1.0 / curvature;
      const MinSolution sol = solve_min(f, Eigen::VectorXd::Zero(5), config);
      CHECK(sol.report.converged);
      CHECK(sol.report.final_grad_norm < config.grad_tol);
      CHECK(fixtures::max_abs(sol.params - h.ldlt().solve(c)) < 1e-6);
    }
  }

  TEST_CASE("single-state dual objective reaches Q = -2") {
    // (1 - g) Q + (1/2) ((g - 1) Q)^2 at g = 0.5.
    const MinObjective f = [](const Eigen::VectorXd& q) {
      MinEval e;
      const double r = -0.5 * q[0];
      e.value = 0.5 * q[0] + 0.5 * r * r;
      e.grad = Eigen::VectorXd::Constant(1, 0.5 - 0.5 * r);
      return e;
    };
    CHECK(solve_min(f, Eigen::VectorXd::Zero(1), SolverConfig{}).params[0] ==
          doctest::Approx(-2.0).epsilon(1e-6));
  }

  TEST_CASE("strongly convex-concave saddle at the origin") {
    const SaddleObjective f = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
      SaddleEval e;
      e.value = 0.5 * x[0] * x[0] + x[0] * y[0] - 0.5 * y[0] * y[0];
      e.grad_min = Eigen::VectorXd::Constant(1, x[0] + y[0]);
      e.grad_max = Eigen::VectorXd::Constant(1, x[0] - y[0]);
      return e;
    };
    const SaddleSolution sol =
        solve_saddle(f, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, -2.0), SolverConfig{});
    CHECK(sol.report.converged);
    CHECK(std::abs(sol.min_params[0]) < 1e-5);
    CHECK(std::abs(sol.max_params[0]) < 1e-5);
  }

  TEST_CASE("bilinear xy: extragradient with averaging reaches the origin") {
    const SaddleObjective f = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
      SaddleEval e;
      e.value = x[0] * y[0];
      e.grad_min = y;
      e.grad_max = x;
      return e;
    };
    SolverConfig config;
    config.update = SaddleUpdate::kExtragradient;
    const SaddleSolution sol =
        solve_saddle(f, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), config);
    CHECK(std::abs(sol.min_params[0]) < 1e-3);
    CHECK(std::abs(sol.max_params[0]) < 1e-3);
  }

  TEST_CASE("identical configurations give bitwise-identical results") {
    const SaddleObjective f = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
      SaddleEval e;
      e.value = 0.5 * x.squaredNorm() + x.dot(y) - 0.25 * y.squaredNorm();
      e.grad_min = x + y;
      e.grad_max = x - 0.5 * y;
      return e;
    };
    SolverConfig config;
    config.record_every = 7;
    const Eigen::Vector3d x0(1, 2, 3);
    const Eigen::Vector3d y0(-1, 0, 4);
    const SaddleSolution a = solve_saddle(f, x0, y0, config);
    const SaddleSolution b = solve_saddle(f, x0, y0, config);
    CHECK(a.min_params == b.min_params);
    CHECK(a.max_params == b.max_params);
    CHECK(a.report.iters_used == b.report.iters_used);
    CHECK(a.report.trajectory == b.report.trajectory);
  }

  TEST_CASE("nonconvergence is reported, not thrown") {
    const MinObjective f = [](const Eigen::VectorXd& x) {
      MinEval e;
      e.value = x.squaredNorm();
      e.grad = 2 * x;
      return e;
    };
    SolverConfig config;
    config.max_iters = 3;
    const MinSolution sol = solve_min(f, Eigen::VectorXd::Ones(2), config);
    CHECK_FALSE(sol.report.converged);
    CHECK(sol.report.iters_used == 3);
    CHECK(sol.report.final_grad_norm > 0.0);
  }

  TEST_CASE("non-finite objectives and invalid configs throw") {
    const MinObjective blowup = [](const Eigen::VectorXd& x) {
      MinEval e;
      e.value = std::exp(x[0]);
      e.grad = Eigen::VectorXd::Constant(1, -std::exp(x[0]));
      return e;
    };
    SolverConfig fast;
    fast.step_size_min = 10.0;
    CHECK(error_kind([&] { solve_min(blowup, Eigen::VectorXd::Ones(1), fast); }) ==
          ErrorKind::kNonFiniteObjective);
    SolverConfig bad;
    bad.step_size_min = -1.0;
    CHECK(error_kind([&] { bad.validate(); }) == ErrorKind::kInvalidArgument);
    bad = SolverConfig{};
    bad.max_iters = 0;
    CHECK(error_kind([&] { bad.validate(); }) == ErrorKind::kInvalidArgument);
  }

  TEST_CASE("resolve_update replaces only kAuto") {
    SolverConfig config;
    CHECK(resolve_update(config, SaddleUpdate::kExtragradient).update == SaddleUpdate::kExtragradient);
    config.update = SaddleUpdate::kSimultaneous;
    CHECK(resolve_update(config, SaddleUpdate::kExtragradient).update == SaddleUpdate::kSimultaneous);
  }
}
