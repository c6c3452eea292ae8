#pragma once

#include <functional>
#include <vector>

#include <doctest.h>

#include <Eigen/Dense>

#include "dualrl/error.hpp"
#include "dualrl/mdp.hpp"

namespace fixtures {

// One state, self loop, one action per reward entry.
inline dualrl::TabularMdp single_state(std::vector<double> rewards, double discount) {
  dualrl::MdpTables t;
  t.n_states = 1;
  t.n_actions = static_cast<int>(rewards.size());
  t.transition = Eigen::MatrixXd::Ones(t.n_actions, 1);
  t.reward = Eigen::Map<Eigen::VectorXd>(rewards.data(), t.n_actions);
  t.initial_dist = Eigen::VectorXd::Ones(1);
  t.discount = discount;
  return dualrl::TabularMdp(t);
}

// s0 -> s1 -> s0 under every action; mu0 = point mass at s0.
inline dualrl::TabularMdp swap_chain(double discount, int n_actions = 1,
                                     Eigen::VectorXd reward = Eigen::VectorXd()) {
  dualrl::MdpTables t;
  t.n_states = 2;
  t.n_actions = n_actions;
  t.transition = Eigen::MatrixXd::Zero(2 * n_actions, 2);
  for (int a = 0; a < n_actions; ++a) {
    t.transition(a, 1) = 1.0;
    t.transition(n_actions + a, 0) = 1.0;
  }
  if (reward.size() == 0) {
    reward = Eigen::VectorXd::Zero(2 * n_actions);
    reward.head(n_actions).setOnes();
  }
  t.reward = reward;
  t.initial_dist = Eigen::Vector2d(1.0, 0.0);
  t.discount = discount;
  return dualrl::TabularMdp(t);
}

// Two states, every action stays with probability stay and switches otherwise.
inline dualrl::TabularMdp lazy_chain(double stay, int n_actions, double discount) {
  dualrl::MdpTables t;
  t.n_states = 2;
  t.n_actions = n_actions;
  t.transition.resize(2 * n_actions, 2);
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      t.transition(s * n_actions + a, s) = stay;
      t.transition(s * n_actions + a, 1 - s) = 1.0 - stay;
    }
  }
  t.reward = Eigen::VectorXd::LinSpaced(2 * n_actions, 0.0, 1.0);
  t.initial_dist = Eigen::Vector2d(0.5, 0.5);
  t.discount = discount;
  return dualrl::TabularMdp(t);
}

// Kind of the Error thrown by f; fails the test when nothing is thrown.
inline dualrl::ErrorKind error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const dualrl::Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return dualrl::ErrorKind::kInvalidArgument;
}

inline double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace fixtures
