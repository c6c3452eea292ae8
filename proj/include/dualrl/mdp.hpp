#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualrl/error.hpp"

namespace dualrl {

// Flat tables indexed by s * n_actions + a.
using StateActionVector = Eigen::VectorXd;
using StateVector = Eigen::VectorXd;

inline constexpr double kStochasticTolerance = 1e-12;

// Raw, unvalidated MDP components. transition has one row per state-action
// pair (s * n_actions + a) and one column per next state.
struct MdpTables {
  int n_states = 0;
  int n_actions = 0;
  Eigen::MatrixXd transition;
  Eigen::VectorXd reward;
  Eigen::VectorXd initial_dist;
  double discount = 0.0;
};

struct Violation {
  ErrorKind kind;
  int state = -1;
  int action = -1;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_mdp(const MdpTables& tables);

// A finite MDP <S, A, R, T, mu0, gamma>. Immutable; the constructor throws
// Error with the kind of the first violation when the tables are invalid.
class TabularMdp {
 public:
  explicit TabularMdp(MdpTables tables);

  int n_states() const { return t_.n_states; }
  int n_actions() const { return t_.n_actions; }
  int n_state_actions() const { return t_.n_states * t_.n_actions; }
  int index(int s, int a) const { return s * t_.n_actions + a; }

  double discount() const { return t_.discount; }
  const Eigen::MatrixXd& transition() const { return t_.transition; }
  const Eigen::VectorXd& reward() const { return t_.reward; }
  const Eigen::VectorXd& initial_dist() const { return t_.initial_dist; }
  const MdpTables& tables() const { return t_; }

  TabularMdp with_reward(Eigen::VectorXd reward) const;
  TabularMdp with_discount(double discount) const;

 private:
  MdpTables t_;
};

ValidationReport validate_mdp(const TabularMdp& mdp);

// Row-stochastic state -> action table.
class Policy {
 public:
  explicit Policy(Eigen::MatrixXd probs);

  static Policy uniform(int n_states, int n_actions);
  static Policy deterministic(int n_actions, std::span<const int> actions);
  static Policy from_logits(const Eigen::MatrixXd& logits);
  // Rescales each row to sum to one; rows with no mass become uniform.
  static Policy normalized(Eigen::MatrixXd weights);

  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }
  double operator()(int s, int a) const { return probs_(s, a); }
  const Eigen::MatrixXd& probs() const { return probs_; }
  StateActionVector flat() const;

 private:
  Eigen::MatrixXd probs_;
};

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

enum class OperatorKind {
  kPolicyForward,      // (P^pi Q)(s,a) = E_{s'~T(s,a), a'~pi(s')} Q(s',a')
  kPolicyAdjoint,      // (P^pi_* d)(s,a) = pi(a|s) sum_{s~,a~} T(s|s~,a~) d(s~,a~)
  kTransitionForward,  // (T V)(s,a) = E_{s'~T(s,a)} V(s')
  kTransitionAdjoint,  // (T_* d)(s) = sum_{s~,a~} T(s|s~,a~) d(s~,a~)
};

Eigen::VectorXd apply_operator(OperatorKind kind, const TabularMdp& mdp,
                               const Eigen::VectorXd& x);
Eigen::VectorXd apply_operator(OperatorKind kind, const TabularMdp& mdp, const Policy& policy,
                               const Eigen::VectorXd& x);

// Unchecked-by-kind building blocks (shapes are still checked).
StateActionVector policy_forward(const TabularMdp& mdp, const Policy& policy,
                                 const StateActionVector& q);
StateActionVector policy_adjoint(const TabularMdp& mdp, const Policy& policy,
                                 const StateActionVector& d);
StateActionVector transition_forward(const TabularMdp& mdp, const StateVector& v);
StateVector transition_adjoint(const TabularMdp& mdp, const StateActionVector& d);

// mu0(s) * pi(a|s).
StateActionVector initial_state_action(const TabularMdp& mdp, const Policy& policy);
// v(s) broadcast over actions.
StateActionVector expand_states(const TabularMdp& mdp, const StateVector& v);
// sum_a d(s,a).
StateVector state_marginal(const TabularMdp& mdp, const StateActionVector& d);
// sum_a pi(a|s) q(s,a).
StateVector policy_average(const Policy& policy, const StateActionVector& q);
// Dense P^pi (rows and columns indexed by state-action pairs).
Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const Policy& policy);
// State-to-state chain sum_a pi(a|s) T(s'|s,a).
Eigen::MatrixXd state_transition_matrix(const TabularMdp& mdp, const Policy& policy);

struct RandomMdpSpec {
  int n_states = 4;
  int n_actions = 2;
  double discount = 0.9;
  std::uint64_t seed = 0;
};

// Transition rows and mu0 from a flat Dirichlet, rewards uniform on [0, 1].
TabularMdp random_mdp(const RandomMdpSpec& spec);
// Rows from a flat Dirichlet.
Policy random_policy(int n_states, int n_actions, std::uint64_t seed);

}  // namespace dualrl
