#include "dualrl/oracles.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace dualrl {
namespace {

void require_discounted(const TabularMdp& mdp, const char* what) {
  if (mdp.discount() >= 1.0) {
    throw Error(ErrorKind::kUndiscountedUnsupported,
                std::string(what) + " needs discount < 1; use the stationary oracle");
  }
}

Eigen::VectorXd checked_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs,
                              const char* what) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  if (!(lu.rcond() > 1e-14)) {
    throw Error(ErrorKind::kSingularSystem, std::string(what) + ": system is singular");
  }
  Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) {
    throw Error(ErrorKind::kSingularSystem, std::string(what) + ": non-finite solution");
  }
  return x;
}

// Second derivative of the (scaled) generator; an independent restatement
// used only by the brute-force optimum.
double generator_curvature(const ConvexGenerator& gen, double x) {
  switch (gen.kind()) {
    case GeneratorKind::kSquare:
    case GeneratorKind::kChiSquare: return gen.scale();
    case GeneratorKind::kKL: return gen.scale() / x;
    case GeneratorKind::kPNorm:
      return gen.scale() * (gen.p() - 1.0) * std::pow(std::abs(x), gen.p() - 2.0);
  }
  return 0.0;
}

struct FlowSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

FlowSystem flow_system(const TabularMdp& mdp, FlowMode mode) {
  const int n_s = mdp.n_states();
  const int n_sa = mdp.n_state_actions();
  Eigen::MatrixXd marginal = Eigen::MatrixXd::Zero(n_s, n_sa);
  for (int s = 0; s < n_s; ++s) {
    marginal.block(s, s * mdp.n_actions(), 1, mdp.n_actions()).setOnes();
  }
  FlowSystem sys;
  if (mode == FlowMode::kDiscounted) {
    sys.A = marginal - mdp.discount() * mdp.transition().transpose();
    sys.b = (1.0 - mdp.discount()) * mdp.initial_dist();
  } else {
    sys.A.resize(n_s + 1, n_sa);
    sys.A.topRows(n_s) = marginal - mdp.transition().transpose();
    sys.A.row(n_s).setOnes();
    sys.b = Eigen::VectorXd::Zero(n_s + 1);
    sys.b[n_s] = 1.0;
  }
  return sys;
}

class RegularizedProblem {
 public:
  RegularizedProblem(const TabularMdp& mdp, const Eigen::VectorXd& data, const ConvexGenerator& gen,
                     FlowMode mode)
      : reward_(mdp.reward()), data_(data), gen_(gen), sys_(flow_system(mdp, mode)) {}

  // Objective, +inf-safe: returns -inf outside the generator domain.
  double value(const Eigen::VectorXd& d) const {
    double v = reward_.dot(d);
    for (Eigen::Index z = 0; z < d.size(); ++z) {
      if (data_[z] > 0.0) {
        v -= data_[z] * gen_.eval(d[z] / data_[z]);
      } else if (d[z] != 0.0) {
        return -std::numeric_limits<double>::infinity();
      }
    }
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& d) const {
    Eigen::VectorXd g = reward_;
    for (Eigen::Index z = 0; z < d.size(); ++z) {
      if (data_[z] > 0.0) g[z] -= gen_.derivative(d[z] / data_[z]);
    }
    return g;
  }

  // Damped Newton ascent over the free coordinates (data support minus
  // `fixed_zero`), restricted to the affine flow set. Returns false when
  // the free coordinates cannot satisfy the constraints or the iteration
  // leaves the domain.
  bool newton(const std::vector<bool>& fixed_zero, Eigen::VectorXd& d, int& iters) const {
    std::vector<int> free;
    for (Eigen::Index z = 0; z < data_.size(); ++z) {
      if (data_[z] > 0.0 && !fixed_zero[z]) free.push_back(static_cast<int>(z));
    }
    const int n = static_cast<int>(free.size());
    if (n == 0) return false;
    Eigen::MatrixXd a(sys_.A.rows(), n);
    for (int j = 0; j < n; ++j) a.col(j) = sys_.A.col(free[j]);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double thresh = 1e-10 * std::max(1.0, svd.singularValues().maxCoeff());
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()[i] > thresh) ++rank;
    }
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    {
      const Eigen::VectorXd ub = svd.matrixU().transpose() * sys_.b;
      for (int i = 0; i < rank; ++i) x0 += svd.matrixV().col(i) * (ub[i] / svd.singularValues()[i]);
    }
    if ((a * x0 - sys_.b).norm() > 1e-9) return false;
    const Eigen::MatrixXd null = svd.matrixV().rightCols(n - rank);

    const auto embed = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd full = Eigen::VectorXd::Zero(data_.size());
      for (int j = 0; j < n; ++j) full[free[j]] = x[j];
      return full;
    };
    // Start from the current point when it is usable, else from x0.
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = d[free[j]];
    Eigen::VectorXd z = null.transpose() * (x - x0);
    x = x0 + null * z;
    if (!std::isfinite(value(embed(x)))) {
      z.setZero();
      x = x0;
      if (!std::isfinite(value(embed(x)))) return false;
    }
    if (null.cols() == 0) {
      d = embed(x);
      return true;
    }
    double fx = value(embed(x));
    for (int it = 0; it < 200; ++it) {
      ++iters;
      const Eigen::VectorXd full_grad = gradient(embed(x));
      Eigen::VectorXd g(n);
      Eigen::VectorXd curv(n);
      for (int j = 0; j < n; ++j) {
        g[j] = full_grad[free[j]];
        curv[j] = generator_curvature(gen_, x[j] / data_[free[j]]) / data_[free[j]];
      }
      const Eigen::VectorXd gz = null.transpose() * g;
      if (gz.norm() < 1e-13) break;
      const Eigen::MatrixXd h = null.transpose() * curv.asDiagonal() * null;
      const Eigen::VectorXd step = h.ldlt().solve(gz);
      if (!step.allFinite()) return false;
      double t = 1.0;
      bool moved = false;
      for (int k = 0; k < 80; ++k) {
        const Eigen::VectorXd cand = x0 + null * (z + t * step);
        const double fc = value(embed(cand));
        if (std::isfinite(fc) && fc >= fx + 0.25 * t * gz.dot(step)) {
          z += t * step;
          x = cand;
          moved = fc > fx || gz.dot(step) * t < 1e-30;
          fx = fc;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
    }
    d = embed(x);
    return true;
  }

  // Projected gradient ascent on {A d = b, d >= 0, d = 0 off the data
  // support}, projecting by Dykstra's alternating scheme.
  Eigen::VectorXd projected_ascent(Eigen::VectorXd d, int& iters) const {
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys_.A);
    const Eigen::MatrixXd pinv = cod.pseudoInverse();
    const auto project = [&](const Eigen::VectorXd& x0) {
      Eigen::VectorXd x = x0;
      Eigen::VectorXd p = Eigen::VectorXd::Zero(x.size());
      Eigen::VectorXd q = Eigen::VectorXd::Zero(x.size());
      for (int round = 0; round < 20000; ++round) {
        const Eigen::VectorXd y = x + p;
        const Eigen::VectorXd ya = y - pinv * (sys_.A * y - sys_.b);
        p = y - ya;
        Eigen::VectorXd yc = ya + q;
        Eigen::VectorXd xn = yc.cwiseMax(0.0);
        for (Eigen::Index z = 0; z < xn.size(); ++z) {
          if (data_[z] <= 0.0) xn[z] = 0.0;
        }
        q = yc - xn;
        const double change = (xn - x).cwiseAbs().maxCoeff();
        x = xn;
        if (change < 1e-15 && (sys_.A * x - sys_.b).cwiseAbs().maxCoeff() < 1e-13) break;
      }
      return x;
    };
    double lip = 0.0;
    for (Eigen::Index z = 0; z < data_.size(); ++z) {
      if (data_[z] > 0.0) lip = std::max(lip, generator_curvature(gen_, 1.0) / data_[z]);
    }
    const double t = 1.0 / std::max(lip, 1e-12);
    d = project(d);
    for (int it = 0; it < 100000; ++it) {
      ++iters;
      const Eigen::VectorXd next = project(d + t * gradient(d));
      const double change = (next - d).cwiseAbs().maxCoeff();
      d = next;
      if (change < 1e-13) break;
    }
    return d;
  }

  const FlowSystem& system() const { return sys_; }

 private:
  const Eigen::VectorXd& reward_;
  const Eigen::VectorXd& data_;
  const ConvexGenerator& gen_;
  FlowSystem sys_;
};

}  // namespace

StateActionVector exact_q_values(const TabularMdp& mdp, const Policy& policy) {
  require_discounted(mdp, "exact_q_values");
  const int n = mdp.n_state_actions();
  const Eigen::MatrixXd m =
      Eigen::MatrixXd::Identity(n, n) - mdp.discount() * policy_transition_matrix(mdp, policy);
  return checked_solve(m, mdp.reward(), "exact_q_values");
}

StateActionVector exact_visitation(const TabularMdp& mdp, const Policy& policy) {
  require_discounted(mdp, "exact_visitation");
  const int n = mdp.n_state_actions();
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) -
                            mdp.discount() * policy_transition_matrix(mdp, policy).transpose();
  const Eigen::VectorXd rhs = (1.0 - mdp.discount()) * initial_state_action(mdp, policy);
  return checked_solve(m, rhs, "exact_visitation");
}

double exact_value(const TabularMdp& mdp, const Policy& policy) {
  const StateActionVector q = exact_q_values(mdp, policy);
  const StateActionVector d = exact_visitation(mdp, policy);
  const double via_q = (1.0 - mdp.discount()) * initial_state_action(mdp, policy).dot(q);
  const double via_d = d.dot(mdp.reward());
  const double scale = std::max(1.0, mdp.reward().cwiseAbs().maxCoeff());
  if (std::abs(via_q - via_d) > 1e-9 * scale) {
    std::ostringstream os;
    os.precision(17);
    os << "value via Q-values " << via_q << " disagrees with value via visitation " << via_d;
    throw Error(ErrorKind::kIdentityMismatch, os.str());
  }
  return via_d;
}

Eigen::MatrixXd exact_policy_gradient(const TabularMdp& mdp, const Eigen::MatrixXd& logits) {
  require_discounted(mdp, "exact_policy_gradient");
  const Policy policy = Policy::from_logits(logits);
  const StateActionVector q = exact_q_values(mdp, policy);
  const StateVector state_d = state_marginal(mdp, exact_visitation(mdp, policy));
  const StateVector v = policy_average(policy, q);
  Eigen::MatrixXd grad(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      grad(s, a) = state_d[s] * policy(s, a) * (q[mdp.index(s, a)] - v[s]);
    }
  }
  return grad;
}

StateActionVector exact_stationary(const TabularMdp& mdp, const Policy& policy,
                                   const ErgodicityOptions& options) {
  const Eigen::MatrixXd adjoint = policy_transition_matrix(mdp, policy).transpose();
  const int n = mdp.n_state_actions();
  Eigen::VectorXd d = Eigen::VectorXd::Constant(n, 1.0 / n);
  double dist = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iters && dist > options.tol; ++it) {
    const Eigen::VectorXd next = adjoint * d;
    dist = (next - d).cwiseAbs().maxCoeff();
    d = next;
  }
  if (!(dist <= options.tol)) {
    std::ostringstream os;
    os << "power iteration did not settle (successive distance " << dist << " after "
       << options.max_iters << " iterations)";
    throw Error(ErrorKind::kNotErgodic, os.str());
  }

  const int n_s = mdp.n_states();
  const Eigen::MatrixXd chain = state_transition_matrix(mdp, policy);
  const Eigen::MatrixXd balance = Eigen::MatrixXd::Identity(n_s, n_s) - chain.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(balance);
  lu.setThreshold(1e-10);
  if (lu.dimensionOfKernel() != 1) {
    throw Error(ErrorKind::kNotErgodic, "stationary distribution is not unique (" +
                                            std::to_string(lu.dimensionOfKernel()) +
                                            " closed classes)");
  }
  // Power iteration from uniform cannot see periodicity when uniform is
  // already stationary, so also require a single unit-modulus eigenvalue.
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(chain, false);
  int unit = 0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    if (std::abs(eig.eigenvalues()[i]) > 1.0 - 1e-9) ++unit;
  }
  if (unit != 1) {
    throw Error(ErrorKind::kNotErgodic,
                "chain is periodic (" + std::to_string(unit) + " eigenvalues on the unit circle)");
  }
  Eigen::MatrixXd aug(n_s + 1, n_s);
  aug.topRows(n_s) = balance;
  aug.row(n_s).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_s + 1);
  rhs[n_s] = 1.0;
  const Eigen::VectorXd mu = aug.colPivHouseholderQr().solve(rhs);
  StateActionVector exact(n);
  for (int s = 0; s < n_s; ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) exact[mdp.index(s, a)] = mu[s] * policy(s, a);
  }
  exact = exact.cwiseMax(0.0);
  exact /= exact.sum();
  if ((adjoint * exact - exact).cwiseAbs().maxCoeff() < 1e-10) return exact;
  return d;
}

double exact_average_reward(const TabularMdp& mdp, const Policy& policy) {
  return exact_stationary(mdp, policy).dot(mdp.reward());
}

Eigen::VectorXd flow_residual(const TabularMdp& mdp, const StateActionVector& d, FlowMode mode) {
  const FlowSystem sys = flow_system(mdp, mode);
  return sys.A * d - sys.b;
}

RegularizedOptimum exact_regularized_optimum(const TabularMdp& mdp, const Eigen::VectorXd& data,
                                             const ConvexGenerator& gen, FlowMode mode) {
  const int n = mdp.n_state_actions();
  if (n > kRegularizedOracleBudget) {
    throw Error(ErrorKind::kBudgetExceeded, "regularized optimum oracle supports at most " +
                                                std::to_string(kRegularizedOracleBudget) +
                                                " state-action pairs, got " + std::to_string(n));
  }
  if (data.size() != n) throw Error(ErrorKind::kShapeMismatch, "data weights length mismatch");
  if (mode == FlowMode::kDiscounted) require_discounted(mdp, "exact_regularized_optimum");

  const RegularizedProblem problem(mdp, data, gen, mode);
  RegularizedOptimum out;
  std::vector<bool> none(n, false);
  // The uniform policy's flow is a strictly positive feasible start when the
  // data covers everything.
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  try {
    const Policy uniform = Policy::uniform(mdp.n_states(), mdp.n_actions());
    d = mode == FlowMode::kDiscounted ? exact_visitation(mdp, uniform)
                                      : exact_stationary(mdp, uniform);
  } catch (const Error&) {
    d.setZero();
  }
  const bool interior = problem.newton(none, d, out.iters);

  const auto feasible = [&](const Eigen::VectorXd& x) {
    return (problem.system().A * x - problem.system().b).cwiseAbs().maxCoeff() < 1e-8 &&
           x.minCoeff() >= -1e-12;
  };

  if (gen.kind() == GeneratorKind::kKL) {
    // x log x keeps the Newton iterate strictly inside d > 0.
    if (!interior || !feasible(d)) {
      throw Error(ErrorKind::kInfeasible,
                  "no distribution on the data support satisfies the flow constraints");
    }
  } else if (!interior || !feasible(d)) {
    d = problem.projected_ascent(interior ? d : Eigen::VectorXd(data), out.iters);
    // Polish: re-solve exactly with the active set pinned at zero.
    std::vector<bool> active(n, false);
    for (int z = 0; z < n; ++z) active[z] = d[z] < 1e-9;
    Eigen::VectorXd polished = d;
    if (problem.newton(active, polished, out.iters) && feasible(polished) &&
        problem.value(polished) >= problem.value(d) - 1e-12) {
      d = polished;
    }
    if (!feasible(d)) {
      throw Error(ErrorKind::kNonconvergence,
                  "regularized optimum oracle could not reach a feasible point");
    }
  }
  out.d = d.cwiseMax(0.0);
  out.value = problem.value(out.d);
  return out;
}

RegularizedOptimum exact_regularized_optimum(const TabularMdp& mdp, const OfflineDataset& dataset,
                                             const ConvexGenerator& gen, FlowMode mode) {
  return exact_regularized_optimum(mdp, dataset.weights, gen, mode);
}

}  // namespace dualrl
