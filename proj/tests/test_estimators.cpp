#include <doctest.h>

#include <cmath>
#include <random>

#include "dualrl/dataset.hpp"
#include "dualrl/estimators.hpp"
#include "dualrl/methods.hpp"
#include "dualrl/oracles.hpp"
#include "fixtures.hpp"

using namespace dualrl;
using fixtures::error_kind;

namespace {

SolverConfig tuned(const char* method) { return default_solver_config(parse_method(method)); }

Eigen::VectorXd oracle_ratio(const TabularMdp& mdp, const Policy& target,
                             const OfflineDataset& ds) {
  return exact_visitation(mdp, target).cwiseQuotient(ds.weights);
}

struct Instance {
  TabularMdp mdp;
  Policy target;
  OfflineDataset dataset;
};

Instance seeded(int seed, int n_states = 4, int n_actions = 2) {
  const TabularMdp mdp = random_mdp({n_states, n_actions, 0.9, static_cast<std::uint64_t>(seed)});
  return {mdp, random_policy(n_states, n_actions, seed + 1000),
          from_behavior(mdp, Policy::uniform(n_states, n_actions), DatasetMode::kExact)};
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("single-state self loop: every mode returns 1 with ratio 1") {
    const TabularMdp mdp = fixtures::single_state({1.0}, 0.5);
    const Policy pi = Policy::uniform(1, 1);
    const OfflineDataset ds = from_behavior(mdp, pi, DatasetMode::kExact);
    for (const char* method : {"lagrangian:reward", "lagrangian:zero", "lagrangian:fdiv:square"}) {
      const MethodSpec spec = parse_method(method);
      LagrangianSpec ls;
      ls.mode = spec.family == MethodFamily::kLagrangianReward ? LagrangianMode::kReward
                : spec.family == MethodFamily::kLagrangianZero ? LagrangianMode::kZero
                                                               : LagrangianMode::kFDiv;
      const EvalResult r = lagrangian_ope(mdp, pi, ds, ls, default_solver_config(spec));
      CHECK(std::abs(r.value_estimate - 1.0) < 1e-4);
      CHECK(std::abs(r.zeta_table[0] - 1.0) < 1e-3);
    }
  }

  TEST_CASE("single-state square dual: Q = -2 and residual 1") {
    const TabularMdp mdp = fixtures::single_state({1.0}, 0.5);
    const Policy pi = Policy::uniform(1, 1);
    const OfflineDataset ds = from_behavior(mdp, pi, DatasetMode::kExact);
    for (const bool closed : {false, true}) {
      const EvalResult r = dualdice_dual(mdp, pi, ds, ConvexGenerator::square(), SolverConfig{}, closed);
      CHECK(r.q_table[0] == doctest::Approx(-2.0).epsilon(1e-6));
      CHECK(r.zeta_table[0] == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("swap chain, deterministic target, zero mode recovers the oracle ratio") {
    const TabularMdp mdp = fixtures::swap_chain(0.5, 2);
    const std::vector<int> actions{0, 0};
    const Policy target = Policy::deterministic(2, actions);
    const OfflineDataset ds = from_behavior(mdp, Policy::uniform(2, 2), DatasetMode::kExact);
    LagrangianSpec spec;
    spec.mode = LagrangianMode::kZero;
    const EvalResult r = lagrangian_ope(mdp, target, ds, spec, tuned("lagrangian:zero"));
    CHECK(r.report.converged);
    // Pairs the target never visits have ratio 0; exp(w) only approaches it.
    CHECK(fixtures::max_abs(r.zeta_table - oracle_ratio(mdp, target, ds)) < 1e-3);
  }

  TEST_CASE("f-divergence Lagrangian on a seeded 4-state instance matches the exact value") {
    const Instance in = seeded(0);
    LagrangianSpec spec;
    spec.mode = LagrangianMode::kFDiv;
    const EvalResult r = lagrangian_ope(in.mdp, in.target, in.dataset, spec, SolverConfig{});
    CHECK(r.report.converged);
    CHECK(std::abs(r.value_estimate - exact_value(in.mdp, in.target)) < 1e-3);
  }

  TEST_CASE("zero reward gives an exactly zero estimate") {
    const Instance in = seeded(3);
    const TabularMdp zero = in.mdp.with_reward(Eigen::VectorXd::Zero(8));
    const EvalResult r = dualdice_dual(zero, in.target, in.dataset, ConvexGenerator::square(),
                                       SolverConfig{}, false);
    CHECK(r.value_estimate == 0.0);
  }

  TEST_CASE("closed-form square dual recovers the oracle ratio; descent agrees") {
    for (int seed = 0; seed < 10; ++seed) {
      const Instance in = seeded(seed, 2 + seed % 5);
      const EvalResult closed = dualdice_dual(in.mdp, in.target, in.dataset,
                                              ConvexGenerator::square(), SolverConfig{}, true);
      const Eigen::VectorXd truth = oracle_ratio(in.mdp, in.target, in.dataset);
      CHECK(fixtures::max_abs(closed.zeta_table - truth) < 1e-8);
      CHECK(std::abs(closed.value_estimate - exact_value(in.mdp, in.target)) < 1e-10);
      if (seed < 3) {
        const EvalResult descent = dualdice_dual(in.mdp, in.target, in.dataset,
                                                 ConvexGenerator::square(), SolverConfig{}, false);
        CHECK(fixtures::max_abs(descent.zeta_table - closed.zeta_table) < 1e-4);
      }
    }
  }

  TEST_CASE("closed form is square only") {
    const Instance in = seeded(0);
    CHECK(error_kind([&] {
            dualdice_dual(in.mdp, in.target, in.dataset, ConvexGenerator::chi_square(),
                          SolverConfig{}, true);
          }) == ErrorKind::kClosedFormUnsupported);
  }

  TEST_CASE("ratio recovery across estimator paths on seeds 0-9") {
    for (int seed = 0; seed < 10; ++seed) {
      const Instance in = seeded(seed, 2 + seed % 5);
      const Eigen::VectorXd truth = oracle_ratio(in.mdp, in.target, in.dataset);
      LagrangianSpec zero;
      zero.mode = LagrangianMode::kZero;
      const EvalResult a = lagrangian_ope(in.mdp, in.target, in.dataset, zero, tuned("lagrangian:zero"));
      LagrangianSpec fdiv;
      fdiv.mode = LagrangianMode::kFDiv;
      const EvalResult b = lagrangian_ope(in.mdp, in.target, in.dataset, fdiv, SolverConfig{});
      const EvalResult c = dualdice_dual(in.mdp, in.target, in.dataset, ConvexGenerator::square(),
                                         SolverConfig{}, false);
      for (const EvalResult* r : {&a, &b, &c}) {
        CHECK(r->report.converged);
        CHECK(fixtures::max_abs(r->zeta_table - truth) < 1e-2);
        CHECK(r->zeta_table.minCoeff() >= 0.0);
      }
    }
  }

  TEST_CASE("doubly robust identity in both slots") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 2.0);
    for (int seed = 0; seed < 5; ++seed) {
      const Instance in = seeded(seed);
      const double rho = exact_value(in.mdp, in.target);
      Eigen::VectorXd noise(8);
      for (int i = 0; i < 8; ++i) noise[i] = unit(rng);
      const Eigen::VectorXd q = exact_q_values(in.mdp, in.target);
      const Eigen::VectorXd zeta = oracle_ratio(in.mdp, in.target, in.dataset);
      CHECK(std::abs(doubly_robust_eval(in.mdp, in.target, in.dataset, q, noise) - rho) < 1e-9);
      CHECK(std::abs(doubly_robust_eval(in.mdp, in.target, in.dataset, noise, zeta) - rho) < 1e-9);
    }
    const Instance in = seeded(0);
    CHECK(doubly_robust_eval(in.mdp, in.target, in.dataset, Eigen::VectorXd::Zero(8),
                             Eigen::VectorXd::Zero(8)) == 0.0);
  }

  TEST_CASE("value from zeta") {
    const Instance in = seeded(2);
    CHECK(value_from_zeta(in.dataset, in.mdp, Eigen::VectorXd::Ones(8)) ==
          doctest::Approx(in.dataset.weights.dot(in.mdp.reward())));
    CHECK(std::abs(value_from_zeta(in.dataset, in.mdp, oracle_ratio(in.mdp, in.target, in.dataset)) -
                   exact_value(in.mdp, in.target)) < 1e-10);
    CHECK(value_from_zeta(in.dataset, in.mdp, Eigen::VectorXd::Zero(8)) == 0.0);
  }

  TEST_CASE("strong duality: saddle value, dual minimum and -D_f(d^pi || d^D)") {
    for (int seed = 0; seed < 3; ++seed) {
      const Instance in = seeded(seed, 3);
      const ConvexGenerator gen = ConvexGenerator::square();
      const double oracle =
          -f_divergence(gen, exact_visitation(in.mdp, in.target), in.dataset.weights);
      LagrangianSpec spec;
      spec.mode = LagrangianMode::kFDiv;
      const EvalResult saddle = lagrangian_ope(in.mdp, in.target, in.dataset, spec, SolverConfig{});
      const EvalResult dual = dualdice_dual(in.mdp, in.target, in.dataset, gen, SolverConfig{}, true);
      CHECK(std::abs(saddle.objective_value - oracle) < 1e-4);
      CHECK(std::abs(dual.objective_value - oracle) < 1e-4);
      CHECK(std::abs(saddle.value_estimate - dual.value_estimate) < 1e-4);
    }
  }

  TEST_CASE("coverage gaps raise CoverageError unless clamping is allowed") {
    const TabularMdp mdp = random_mdp({3, 2, 0.9, 1});
    const std::vector<int> first{0, 0, 0};
    const OfflineDataset narrow =
        from_behavior(mdp, Policy::deterministic(2, first), DatasetMode::kExact);
    const Policy target = Policy::uniform(3, 2);
    CHECK(error_kind([&] {
            dualdice_dual(mdp, target, narrow, ConvexGenerator::square(), SolverConfig{}, true);
          }) == ErrorKind::kCoverageError);
    EstimatorOptions clamp;
    clamp.allow_clamp = true;
    const EvalResult r =
        dualdice_dual(mdp, target, narrow, ConvexGenerator::square(), SolverConfig{}, true, clamp);
    CHECK(std::isfinite(r.value_estimate));
  }

  TEST_CASE("discount 1 is rejected") {
    const TabularMdp mdp = fixtures::lazy_chain(0.5, 2, 1.0);
    const OfflineDataset ds = from_behavior(mdp, Policy::uniform(2, 2), DatasetMode::kExact);
    CHECK(error_kind([&] {
            dualdice_dual(mdp, Policy::uniform(2, 2), ds, ConvexGenerator::square(), SolverConfig{}, true);
          }) == ErrorKind::kUndiscountedUnsupported);
  }

  TEST_CASE("sampled mode runs the single-sample dual") {
    const Instance in = seeded(1, 3);
    const OfflineDataset sampled =
        from_behavior(in.mdp, Policy::uniform(3, 2), DatasetMode::kSampled, 20000, 0);
    const EvalResult r = dualdice_dual(in.mdp, in.target, sampled, ConvexGenerator::square(),
                                       SolverConfig{}, false);
    CHECK(std::isfinite(r.value_estimate));
    CHECK(std::abs(r.value_estimate - exact_value(in.mdp, in.target)) < 0.2);
  }
}
