#include <doctest.h>

#include <cmath>

#include "dualrl/dataset.hpp"
#include "dualrl/io.hpp"
#include "dualrl/oracles.hpp"
#include "fixtures.hpp"

using namespace dualrl;
using fixtures::error_kind;

TEST_SUITE("dataset") {
  TEST_CASE("single-state self loop has weights [1] in both modes") {
    const TabularMdp mdp = fixtures::single_state({1.0}, 0.5);
    const Policy pi = Policy::uniform(1, 1);
    CHECK(from_behavior(mdp, pi, DatasetMode::kExact).weights[0] == doctest::Approx(1.0));
    const OfflineDataset sampled = from_behavior(mdp, pi, DatasetMode::kSampled, 50, 3);
    CHECK(sampled.weights[0] == 1.0);
    CHECK(sampled.samples.size() == 50);
  }

  TEST_CASE("exact weights are the behavior visitation and satisfy its flow equations") {
    const TabularMdp swap = fixtures::swap_chain(0.5);
    const Policy uniform = Policy::uniform(2, 1);
    CHECK(from_behavior(swap, uniform, DatasetMode::kExact).weights ==
          exact_visitation(swap, uniform));
    for (int seed = 0; seed < 5; ++seed) {
      const TabularMdp mdp = random_mdp({5, 2, 0.9, static_cast<std::uint64_t>(seed)});
      const Policy behavior = random_policy(5, 2, seed + 7);
      const OfflineDataset ds = from_behavior(mdp, behavior, DatasetMode::kExact);
      CHECK(std::abs(ds.weights.sum() - 1.0) < 1e-10);
      CHECK(fixtures::max_abs(flow_residual(mdp, ds.weights, FlowMode::kDiscounted)) < 1e-9);
    }
  }

  TEST_CASE("discount 1 uses the stationary distribution and rejects periodic chains") {
    const TabularMdp lazy = fixtures::lazy_chain(0.5, 2, 1.0);
    const OfflineDataset ds = from_behavior(lazy, Policy::uniform(2, 2), DatasetMode::kExact);
    CHECK(fixtures::max_abs(ds.weights - Eigen::VectorXd::Constant(4, 0.25)) < 1e-12);
    CHECK(error_kind([] {
            from_behavior(fixtures::swap_chain(1.0), Policy::uniform(2, 1), DatasetMode::kExact);
          }) == ErrorKind::kNotErgodic);
  }

  TEST_CASE("sampled weights are empirical frequencies and reproducible") {
    const TabularMdp mdp = random_mdp({3, 2, 0.9, 1});
    const Policy behavior = Policy::uniform(3, 2);
    const OfflineDataset a = from_behavior(mdp, behavior, DatasetMode::kSampled, 1000, 9);
    const OfflineDataset b = from_behavior(mdp, behavior, DatasetMode::kSampled, 1000, 9);
    CHECK(a.weights == b.weights);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(6);
    for (const Transition& t : a.samples) {
      counts[mdp.index(t.state, t.action)] += 1.0;
      CHECK(t.reward == mdp.reward()[mdp.index(t.state, t.action)]);
      CHECK(mdp.transition()(mdp.index(t.state, t.action), t.next_state) > 0.0);
    }
    CHECK(fixtures::max_abs(counts / 1000.0 - a.weights) < 1e-15);
    CHECK(error_kind([&] { from_behavior(mdp, behavior, DatasetMode::kSampled, 0); }) ==
          ErrorKind::kInvalidArgument);
  }

  TEST_CASE("sampled weights approach the exact weights") {
    const TabularMdp mdp = random_mdp({4, 2, 0.9, 0});
    const Policy behavior = Policy::uniform(4, 2);
    const Eigen::VectorXd exact = from_behavior(mdp, behavior, DatasetMode::kExact).weights;
    const OfflineDataset big = from_behavior(mdp, behavior, DatasetMode::kSampled, 100000, 0);
    CHECK(fixtures::max_abs(big.weights - exact) < 0.01);
  }

  TEST_CASE("sup-norm error roughly halves when the sample count quadruples") {
    const TabularMdp mdp = random_mdp({4, 2, 0.9, 2});
    const Policy behavior = Policy::uniform(4, 2);
    const Eigen::VectorXd exact = from_behavior(mdp, behavior, DatasetMode::kExact).weights;
    const auto mean_error = [&](int n) {
      double total = 0.0;
      for (std::uint64_t seed = 0; seed < 40; ++seed) {
        total += fixtures::max_abs(
            from_behavior(mdp, behavior, DatasetMode::kSampled, n, seed).weights - exact);
      }
      return total / 40.0;
    };
    const double ratio = mean_error(2000) / mean_error(8000);
    CHECK(ratio > 2.0 / 1.5);
    CHECK(ratio < 2.0 * 1.5);
  }

  TEST_CASE("coverage: behavior equal to target, forced gap, Dirichlet instances") {
    const TabularMdp mdp = random_mdp({3, 2, 0.9, 4});
    const Policy pi = random_policy(3, 2, 5);
    CHECK(coverage_check(from_behavior(mdp, pi, DatasetMode::kExact), mdp, pi).ok());

    const std::vector<int> only_first{0, 0, 0};
    const OfflineDataset narrow =
        from_behavior(mdp, Policy::deterministic(2, only_first), DatasetMode::kExact);
    const CoverageReport report = coverage_check(narrow, mdp, Policy::uniform(3, 2));
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations.size() == 3);
    for (const CoverageViolation& v : report.violations) CHECK(v.action == 1);
    CHECK_FALSE(full_support_check(narrow, mdp).ok());

    for (int seed = 0; seed < 10; ++seed) {
      const TabularMdp m = random_mdp({4, 3, 0.9, static_cast<std::uint64_t>(seed)});
      const OfflineDataset ds = from_behavior(m, Policy::uniform(4, 3), DatasetMode::kExact);
      CHECK(coverage_check(ds, m, random_policy(4, 3, seed + 20)).ok());
      CHECK(full_support_check(ds, m).ok());
    }
  }

  TEST_CASE("behavior conditional and clamping") {
    const TabularMdp mdp = random_mdp({3, 2, 0.9, 6});
    const Policy behavior = random_policy(3, 2, 7);
    const OfflineDataset ds = from_behavior(mdp, behavior, DatasetMode::kExact);
    CHECK((behavior_conditional(ds, mdp).probs() - behavior.probs()).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd clamped = clamped_weights(Eigen::Vector3d(0.0, 0.5, 0.5), 0.1);
    CHECK(clamped.minCoeff() > 0.0);
    CHECK(clamped.sum() == doctest::Approx(1.0));
  }

  TEST_CASE("dataset JSON round trip") {
    const TabularMdp mdp = random_mdp({3, 2, 0.9, 1});
    const OfflineDataset ds = from_behavior(mdp, Policy::uniform(3, 2), DatasetMode::kSampled, 20, 4, "m");
    const OfflineDataset back = dataset_from_json(nlohmann::json::parse(dataset_to_json(ds).dump()));
    CHECK(back.weights == ds.weights);
    CHECK(back.samples.size() == ds.samples.size());
    CHECK(back.samples[5].next_state == ds.samples[5].next_state);
    CHECK(back.mode == DatasetMode::kSampled);
    CHECK(back.mdp_id == "m");
    CHECK(back.seed == 4);
  }
}
