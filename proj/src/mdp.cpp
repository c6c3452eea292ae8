#include "dualrl/mdp.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "random_util.hpp"

namespace dualrl {
namespace {

void require_state_action(const TabularMdp& mdp, const Eigen::VectorXd& x, const char* what) {
  if (x.size() != mdp.n_state_actions()) {
    std::ostringstream os;
    os << what << ": expected state-action vector of length " << mdp.n_state_actions()
       << ", got " << x.size();
    throw Error(ErrorKind::kShapeMismatch, os.str());
  }
}

void require_state(const TabularMdp& mdp, const Eigen::VectorXd& x, const char* what) {
  if (x.size() != mdp.n_states()) {
    std::ostringstream os;
    os << what << ": expected state vector of length " << mdp.n_states() << ", got " << x.size();
    throw Error(ErrorKind::kShapeMismatch, os.str());
  }
}

void require_policy(const TabularMdp& mdp, const Policy& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    std::ostringstream os;
    os << "policy is " << policy.n_states() << "x" << policy.n_actions() << ", MDP is "
       << mdp.n_states() << "x" << mdp.n_actions();
    throw Error(ErrorKind::kShapeMismatch, os.str());
  }
}

}  // namespace

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const Violation& v = violations[i];
    if (i) os << "; ";
    os << to_string(v.kind);
    if (v.state >= 0) {
      os << "(s=" << v.state;
      if (v.action >= 0) os << ",a=" << v.action;
      os << ")";
    }
    if (!v.detail.empty()) os << " " << v.detail;
  }
  return os.str();
}

ValidationReport validate_mdp(const MdpTables& t) {
  ValidationReport report;
  auto add = [&](ErrorKind kind, int s, int a, std::string detail) {
    report.violations.push_back({kind, s, a, std::move(detail)});
  };
  if (t.n_states < 1 || t.n_actions < 1) {
    add(ErrorKind::kShapeMismatch, -1, -1, "n_states and n_actions must be positive");
    return report;
  }
  const int n_sa = t.n_states * t.n_actions;
  if (t.transition.rows() != n_sa || t.transition.cols() != t.n_states) {
    add(ErrorKind::kShapeMismatch, -1, -1, "transition must be [S*A][S]");
  }
  if (t.reward.size() != n_sa) add(ErrorKind::kShapeMismatch, -1, -1, "reward must be [S*A]");
  if (t.initial_dist.size() != t.n_states) {
    add(ErrorKind::kShapeMismatch, -1, -1, "initial_dist must be [S]");
  }
  if (!report.ok()) return report;

  for (int s = 0; s < t.n_states; ++s) {
    for (int a = 0; a < t.n_actions; ++a) {
      const auto row = t.transition.row(s * t.n_actions + a);
      if ((row.array() < 0.0).any() || !row.allFinite()) {
        add(ErrorKind::kNegativeEntry, s, a, "transition row has a negative or non-finite entry");
      }
      const double sum = row.sum();
      if (std::abs(sum - 1.0) > kStochasticTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "transition row sums to " << sum;
        add(ErrorKind::kNonStochasticRow, s, a, os.str());
      }
    }
  }
  if (!t.reward.allFinite()) add(ErrorKind::kDomainError, -1, -1, "reward has non-finite entries");
  if ((t.initial_dist.array() < 0.0).any() || !t.initial_dist.allFinite()) {
    add(ErrorKind::kNegativeEntry, -1, -1, "initial_dist has a negative or non-finite entry");
  }
  if (std::abs(t.initial_dist.sum() - 1.0) > kStochasticTolerance) {
    add(ErrorKind::kNonStochasticRow, -1, -1, "initial_dist does not sum to 1");
  }
  if (!(t.discount > 0.0 && t.discount <= 1.0)) {
    std::ostringstream os;
    os << "discount " << t.discount << " outside (0, 1]";
    add(ErrorKind::kBadDiscount, -1, -1, os.str());
  }
  return report;
}

ValidationReport validate_mdp(const TabularMdp& mdp) { return validate_mdp(mdp.tables()); }

TabularMdp::TabularMdp(MdpTables tables) : t_(std::move(tables)) {
  const ValidationReport report = validate_mdp(t_);
  if (!report.ok()) throw Error(report.violations.front().kind, report.summary());
}

TabularMdp TabularMdp::with_reward(Eigen::VectorXd reward) const {
  MdpTables t = t_;
  t.reward = std::move(reward);
  return TabularMdp(std::move(t));
}

TabularMdp TabularMdp::with_discount(double discount) const {
  MdpTables t = t_;
  t.discount = discount;
  return TabularMdp(std::move(t));
}

Policy::Policy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) {
    throw Error(ErrorKind::kShapeMismatch, "policy table must be non-empty");
  }
  for (int s = 0; s < probs_.rows(); ++s) {
    if ((probs_.row(s).array() < 0.0).any() || !probs_.row(s).allFinite()) {
      throw Error(ErrorKind::kNegativeEntry,
                  "policy row " + std::to_string(s) + " has a negative or non-finite entry");
    }
    if (std::abs(probs_.row(s).sum() - 1.0) > kStochasticTolerance) {
      throw Error(ErrorKind::kNonStochasticRow,
                  "policy row " + std::to_string(s) + " does not sum to 1");
    }
  }
}

Policy Policy::uniform(int n_states, int n_actions) {
  return Policy(Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions));
}

Policy Policy::deterministic(int n_actions, std::span<const int> actions) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions) {
      throw Error(ErrorKind::kInvalidArgument, "deterministic action out of range");
    }
    p(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  return Policy(std::move(p));
}

Policy Policy::from_logits(const Eigen::MatrixXd& logits) { return Policy(softmax_rows(logits)); }

Policy Policy::normalized(Eigen::MatrixXd weights) {
  for (int s = 0; s < weights.rows(); ++s) {
    const double z = weights.row(s).sum();
    if (z > 0.0) {
      weights.row(s) /= z;
    } else {
      weights.row(s).setConstant(1.0 / static_cast<double>(weights.cols()));
    }
  }
  return Policy(std::move(weights));
}

StateActionVector Policy::flat() const {
  StateActionVector out(probs_.size());
  for (int s = 0; s < n_states(); ++s) {
    for (int a = 0; a < n_actions(); ++a) out[s * n_actions() + a] = probs_(s, a);
  }
  return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (int s = 0; s < logits.rows(); ++s) {
    const double m = logits.row(s).maxCoeff();
    out.row(s) = (logits.row(s).array() - m).exp().matrix();
    out.row(s) /= out.row(s).sum();
  }
  return out;
}

StateVector policy_average(const Policy& policy, const StateActionVector& q) {
  const int n_actions = policy.n_actions();
  StateVector v(policy.n_states());
  for (int s = 0; s < policy.n_states(); ++s) {
    v[s] = policy.probs().row(s).dot(q.segment(s * n_actions, n_actions));
  }
  return v;
}

StateActionVector policy_forward(const TabularMdp& mdp, const Policy& policy,
                                 const StateActionVector& q) {
  require_policy(mdp, policy);
  require_state_action(mdp, q, "PolicyForward");
  return mdp.transition() * policy_average(policy, q);
}

StateActionVector policy_adjoint(const TabularMdp& mdp, const Policy& policy,
                                 const StateActionVector& d) {
  require_policy(mdp, policy);
  require_state_action(mdp, d, "PolicyAdjoint");
  const StateVector flow = mdp.transition().transpose() * d;
  StateActionVector out(mdp.n_state_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) out[mdp.index(s, a)] = policy(s, a) * flow[s];
  }
  return out;
}

StateActionVector transition_forward(const TabularMdp& mdp, const StateVector& v) {
  require_state(mdp, v, "TransitionForward");
  return mdp.transition() * v;
}

StateVector transition_adjoint(const TabularMdp& mdp, const StateActionVector& d) {
  require_state_action(mdp, d, "TransitionAdjoint");
  return mdp.transition().transpose() * d;
}

Eigen::VectorXd apply_operator(OperatorKind kind, const TabularMdp& mdp,
                               const Eigen::VectorXd& x) {
  switch (kind) {
    case OperatorKind::kPolicyForward:
    case OperatorKind::kPolicyAdjoint:
      throw Error(ErrorKind::kMissingPolicy, "policy operators need a policy");
    case OperatorKind::kTransitionForward: return transition_forward(mdp, x);
    case OperatorKind::kTransitionAdjoint: return transition_adjoint(mdp, x);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown operator kind");
}

Eigen::VectorXd apply_operator(OperatorKind kind, const TabularMdp& mdp, const Policy& policy,
                               const Eigen::VectorXd& x) {
  switch (kind) {
    case OperatorKind::kPolicyForward: return policy_forward(mdp, policy, x);
    case OperatorKind::kPolicyAdjoint: return policy_adjoint(mdp, policy, x);
    case OperatorKind::kTransitionForward:
    case OperatorKind::kTransitionAdjoint: return apply_operator(kind, mdp, x);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown operator kind");
}

StateActionVector initial_state_action(const TabularMdp& mdp, const Policy& policy) {
  require_policy(mdp, policy);
  StateActionVector out(mdp.n_state_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      out[mdp.index(s, a)] = mdp.initial_dist()[s] * policy(s, a);
    }
  }
  return out;
}

StateActionVector expand_states(const TabularMdp& mdp, const StateVector& v) {
  require_state(mdp, v, "expand_states");
  StateActionVector out(mdp.n_state_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    out.segment(s * mdp.n_actions(), mdp.n_actions()).setConstant(v[s]);
  }
  return out;
}

StateVector state_marginal(const TabularMdp& mdp, const StateActionVector& d) {
  require_state_action(mdp, d, "state_marginal");
  StateVector out(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    out[s] = d.segment(s * mdp.n_actions(), mdp.n_actions()).sum();
  }
  return out;
}

Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const Policy& policy) {
  require_policy(mdp, policy);
  const int n_sa = mdp.n_state_actions();
  Eigen::MatrixXd p(n_sa, n_sa);
  for (int sp = 0; sp < mdp.n_states(); ++sp) {
    for (int ap = 0; ap < mdp.n_actions(); ++ap) {
      p.col(mdp.index(sp, ap)) = mdp.transition().col(sp) * policy(sp, ap);
    }
  }
  return p;
}

Eigen::MatrixXd state_transition_matrix(const TabularMdp& mdp, const Policy& policy) {
  require_policy(mdp, policy);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mdp.n_states(), mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      p.row(s) += policy(s, a) * mdp.transition().row(mdp.index(s, a));
    }
  }
  return p;
}

TabularMdp random_mdp(const RandomMdpSpec& spec) {
  if (spec.n_states < 1 || spec.n_actions < 1) {
    throw Error(ErrorKind::kInvalidArgument, "random_mdp needs positive state and action counts");
  }
  std::mt19937_64 rng(spec.seed);
  MdpTables t;
  t.n_states = spec.n_states;
  t.n_actions = spec.n_actions;
  t.discount = spec.discount;
  const int n_sa = spec.n_states * spec.n_actions;
  t.transition.resize(n_sa, spec.n_states);
  for (int i = 0; i < n_sa; ++i) t.transition.row(i) = detail::dirichlet_flat(rng, spec.n_states);
  t.reward.resize(n_sa);
  for (int i = 0; i < n_sa; ++i) t.reward[i] = detail::uniform01(rng);
  t.initial_dist = detail::dirichlet_flat(rng, spec.n_states);
  return TabularMdp(std::move(t));
}

Policy random_policy(int n_states, int n_actions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd p(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) p.row(s) = detail::dirichlet_flat(rng, n_actions).transpose();
  return Policy(std::move(p));
}

}  // namespace dualrl
