#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualrl/mdp.hpp"

namespace dualrl {

enum class DatasetMode { kExact, kSampled };

struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
};

// The offline distribution d^D over state-action pairs. In sampled mode the
// weights are the empirical frequencies of samples.
struct OfflineDataset {
  DatasetMode mode = DatasetMode::kExact;
  Eigen::VectorXd weights;
  Policy behavior = Policy::uniform(1, 1);
  std::vector<Transition> samples;
  std::string mdp_id;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

inline constexpr double kDefaultCoverageEpsilon = 1e-8;

// Exact: weights are the behavior visitation (discount < 1) or stationary
// distribution (discount = 1). Sampled: n_samples i.i.d. (s, a) draws from
// those weights with s' ~ T(s, a).
OfflineDataset from_behavior(const TabularMdp& mdp, const Policy& behavior, DatasetMode mode,
                             std::optional<int> n_samples = std::nullopt,
                             std::uint64_t seed = 0, std::string mdp_id = "");

struct CoverageViolation {
  int state = 0;
  int action = 0;
  double data_weight = 0.0;
  double target_weight = 0.0;
};

struct CoverageReport {
  std::vector<CoverageViolation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

// d^D(s,a) >= epsilon wherever the target distribution exceeds epsilon. The
// target distribution is the visitation for discount < 1 and the stationary
// distribution for discount = 1.
CoverageReport coverage_check(const OfflineDataset& dataset, const TabularMdp& mdp,
                              const Policy& target, double epsilon = kDefaultCoverageEpsilon);

// Every weight at least epsilon; used where all policies must be covered.
CoverageReport full_support_check(const OfflineDataset& dataset, const TabularMdp& mdp,
                                  double epsilon = kDefaultCoverageEpsilon);

// d^D(a|s); states without data get a uniform row.
Policy behavior_conditional(const OfflineDataset& dataset, const TabularMdp& mdp);

// Weights with entries below epsilon raised to epsilon and renormalized.
Eigen::VectorXd clamped_weights(const Eigen::VectorXd& weights, double epsilon);

}  // namespace dualrl
