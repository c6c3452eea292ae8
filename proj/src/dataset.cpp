#include "dualrl/dataset.hpp"

#include <random>
#include <sstream>

#include "dualrl/oracles.hpp"
#include "random_util.hpp"

namespace dualrl {

OfflineDataset from_behavior(const TabularMdp& mdp, const Policy& behavior, DatasetMode mode,
                             std::optional<int> n_samples, std::uint64_t seed,
                             std::string mdp_id) {
  OfflineDataset out;
  out.mode = mode;
  out.behavior = behavior;
  out.seed = seed;
  out.mdp_id = std::move(mdp_id);
  const Eigen::VectorXd exact = mdp.discount() < 1.0 ? exact_visitation(mdp, behavior)
                                                     : exact_stationary(mdp, behavior);
  // Solves can leave -1e-17 style noise.
  out.weights = exact.cwiseMax(0.0);
  out.weights /= out.weights.sum();
  if (mode == DatasetMode::kExact) return out;

  if (!n_samples || *n_samples < 1) {
    throw Error(ErrorKind::kInvalidArgument, "sampled datasets need n_samples >= 1");
  }
  std::mt19937_64 rng(seed);
  Eigen::VectorXd cumulative(out.weights.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < out.weights.size(); ++i) cumulative[i] = acc += out.weights[i];
  std::vector<Eigen::VectorXd> next_cumulative(mdp.n_state_actions());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(mdp.n_state_actions());
  out.samples.reserve(static_cast<std::size_t>(*n_samples));
  for (int i = 0; i < *n_samples; ++i) {
    const int sa = detail::sample_index(rng, cumulative);
    if (next_cumulative[sa].size() == 0) {
      Eigen::VectorXd c(mdp.n_states());
      double run = 0.0;
      for (int sp = 0; sp < mdp.n_states(); ++sp) c[sp] = run += mdp.transition()(sa, sp);
      next_cumulative[sa] = c;
    }
    const int next = detail::sample_index(rng, next_cumulative[sa]);
    out.samples.push_back({sa / mdp.n_actions(), sa % mdp.n_actions(), mdp.reward()[sa], next});
    counts[sa] += 1.0;
  }
  out.weights = counts / static_cast<double>(*n_samples);
  return out;
}

std::string CoverageReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const CoverageViolation& v = violations[i];
    if (i) os << "; ";
    os << "(s=" << v.state << ",a=" << v.action << ") data " << v.data_weight << " target "
       << v.target_weight;
  }
  return os.str();
}

CoverageReport coverage_check(const OfflineDataset& dataset, const TabularMdp& mdp,
                              const Policy& target, double epsilon) {
  if (dataset.size() != mdp.n_state_actions()) {
    throw Error(ErrorKind::kShapeMismatch, "dataset does not match the MDP");
  }
  const Eigen::VectorXd target_d = mdp.discount() < 1.0 ? exact_visitation(mdp, target)
                                                        : exact_stationary(mdp, target);
  CoverageReport report;
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const int sa = mdp.index(s, a);
      if (target_d[sa] > epsilon && dataset.weights[sa] < epsilon) {
        report.violations.push_back({s, a, dataset.weights[sa], target_d[sa]});
      }
    }
  }
  return report;
}

CoverageReport full_support_check(const OfflineDataset& dataset, const TabularMdp& mdp,
                                  double epsilon) {
  if (dataset.size() != mdp.n_state_actions()) {
    throw Error(ErrorKind::kShapeMismatch, "dataset does not match the MDP");
  }
  CoverageReport report;
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const int sa = mdp.index(s, a);
      if (dataset.weights[sa] < epsilon) {
        report.violations.push_back({s, a, dataset.weights[sa], 1.0});
      }
    }
  }
  return report;
}

Policy behavior_conditional(const OfflineDataset& dataset, const TabularMdp& mdp) {
  Eigen::MatrixXd table(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) table(s, a) = dataset.weights[mdp.index(s, a)];
  }
  return Policy::normalized(std::move(table));
}

Eigen::VectorXd clamped_weights(const Eigen::VectorXd& weights, double epsilon) {
  Eigen::VectorXd w = weights.cwiseMax(epsilon);
  return w / w.sum();
}

}  // namespace dualrl
