#include "dualrl/convex.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace dualrl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign(double x) { return (x > 0.0) - (x < 0.0); }

void require_same_size(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kShapeMismatch, std::string(what) + ": vector lengths differ");
  }
}

void require_distribution(const Eigen::VectorXd& p, const char* what) {
  if ((p.array() < 0.0).any() || !p.allFinite()) {
    throw Error(ErrorKind::kNegativeEntry, std::string(what) + ": weights must be nonnegative");
  }
}

// Alternating projections with Dykstra corrections onto {x : A x >= b}.
Eigen::VectorXd project_halfspaces(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                   const Eigen::VectorXd& x0, int max_rounds = 5000,
                                   double tol = 1e-13) {
  const int m = static_cast<int>(A.rows());
  Eigen::VectorXd x = x0;
  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(x0.size(), m);
  for (int round = 0; round < max_rounds; ++round) {
    double change = 0.0;
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd y = x + corr.col(i);
      const double nrm2 = A.row(i).squaredNorm();
      Eigen::VectorXd px = y;
      const double slack = A.row(i).dot(y) - b[i];
      if (slack < 0.0 && nrm2 > 0.0) px -= (slack / nrm2) * A.row(i).transpose();
      corr.col(i) = y - px;
      change = std::max(change, (px - x).cwiseAbs().maxCoeff());
      x = px;
    }
    if (change < tol) break;
  }
  return x;
}

double sum_f(const ConvexGenerator& f, const Eigen::VectorXd& x) { return f.eval(x).sum(); }

double sum_conj(const ConvexGenerator& f, const Eigen::VectorXd& y) {
  return f.conjugate(y).sum();
}

struct Descent {
  Eigen::VectorXd x;
  double value = 0.0;
  bool converged = false;
};

// Projected gradient descent with Armijo backtracking. project may be the
// identity.
template <class Value, class Grad, class Project>
Descent projected_descent(Value value, Grad grad, Project project, Eigen::VectorXd x,
                          const FenchelOptions& opt) {
  Descent out;
  double fx = value(x);
  double step = 1.0;
  for (int it = 0; it < opt.max_iters; ++it) {
    const Eigen::VectorXd g = grad(x);
    const Eigen::VectorXd mapped = project(Eigen::VectorXd(x - g));
    if ((mapped - x).norm() < opt.tol) {
      out.converged = true;
      break;
    }
    step = std::min(1.0, step * 2.0);
    for (int k = 0; k < 60; ++k) {
      const Eigen::VectorXd cand = project(Eigen::VectorXd(x - step * g));
      const double fc = value(cand);
      const double moved = (cand - x).norm();
      if (std::isfinite(fc) && step * (grad(cand) - g).norm() <= moved) {
        x = cand;
        fx = fc;
        break;
      }
      step *= 0.5;
    }
    if (step < 1e-300) break;
  }
  out.x = std::move(x);
  out.value = fx;
  return out;
}

}  // namespace

ConvexGenerator ConvexGenerator::pnorm(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    std::ostringstream os;
    os << "pnorm needs p > 1, got " << p;
    throw Error(ErrorKind::kDomainError, os.str());
  }
  ConvexGenerator g(GeneratorKind::kPNorm);
  g.p_ = p;
  g.q_ = p / (p - 1.0);
  return g;
}

ConvexGenerator ConvexGenerator::parse(std::string_view name) {
  if (name == "square") return square();
  if (name == "chisquare") return chi_square();
  if (name == "kl") return kl();
  if (name.substr(0, 6) == "pnorm:") {
    const std::string num(name.substr(6));
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != num.size()) {
      throw Error(ErrorKind::kParseError, "bad pnorm exponent '" + num + "'");
    }
    return pnorm(p);
  }
  throw Error(ErrorKind::kParseError, "unknown generator '" + std::string(name) + "'");
}

ConvexGenerator ConvexGenerator::scaled(double alpha) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::kDomainError, "generator scale must be positive");
  }
  ConvexGenerator g = *this;
  g.scale_ *= alpha;
  return g;
}

std::string ConvexGenerator::name() const {
  switch (kind_) {
    case GeneratorKind::kSquare: return "square";
    case GeneratorKind::kChiSquare: return "chisquare";
    case GeneratorKind::kKL: return "kl";
    case GeneratorKind::kPNorm: {
      std::ostringstream os;
      os << "pnorm:" << p_;
      return os.str();
    }
  }
  return "unknown";
}

double ConvexGenerator::raw_eval(double x) const {
  switch (kind_) {
    case GeneratorKind::kSquare: return 0.5 * x * x;
    case GeneratorKind::kChiSquare: return 0.5 * (x - 1.0) * (x - 1.0);
    case GeneratorKind::kKL:
      if (x < 0.0) return kInf;
      return x == 0.0 ? 0.0 : x * std::log(x);
    case GeneratorKind::kPNorm: return std::pow(std::abs(x), p_) / p_;
  }
  return kInf;
}

double ConvexGenerator::raw_derivative(double x) const {
  switch (kind_) {
    case GeneratorKind::kSquare: return x;
    case GeneratorKind::kChiSquare: return x - 1.0;
    case GeneratorKind::kKL:
      if (x < 0.0) return std::numeric_limits<double>::quiet_NaN();
      return x == 0.0 ? -kInf : std::log(x) + 1.0;
    case GeneratorKind::kPNorm: return sign(x) * std::pow(std::abs(x), p_ - 1.0);
  }
  return 0.0;
}

double ConvexGenerator::raw_conjugate(double y) const {
  switch (kind_) {
    case GeneratorKind::kSquare: return 0.5 * y * y;
    case GeneratorKind::kChiSquare: return y + 0.5 * y * y;
    case GeneratorKind::kKL: return std::exp(y - 1.0);
    case GeneratorKind::kPNorm: return std::pow(std::abs(y), q_) / q_;
  }
  return kInf;
}

double ConvexGenerator::raw_conjugate_derivative(double y) const {
  switch (kind_) {
    case GeneratorKind::kSquare: return y;
    case GeneratorKind::kChiSquare: return 1.0 + y;
    case GeneratorKind::kKL: return std::exp(y - 1.0);
    case GeneratorKind::kPNorm: return sign(y) * std::pow(std::abs(y), q_ - 1.0);
  }
  return 0.0;
}

double ConvexGenerator::eval(double x) const { return scale_ * raw_eval(x); }
double ConvexGenerator::derivative(double x) const { return scale_ * raw_derivative(x); }
double ConvexGenerator::conjugate(double y) const { return scale_ * raw_conjugate(y / scale_); }
double ConvexGenerator::conjugate_derivative(double y) const {
  return raw_conjugate_derivative(y / scale_);
}

Eigen::VectorXd ConvexGenerator::eval(const Eigen::VectorXd& x) const {
  return x.unaryExpr([this](double v) { return eval(v); });
}
Eigen::VectorXd ConvexGenerator::derivative(const Eigen::VectorXd& x) const {
  return x.unaryExpr([this](double v) { return derivative(v); });
}
Eigen::VectorXd ConvexGenerator::conjugate(const Eigen::VectorXd& y) const {
  return y.unaryExpr([this](double v) { return conjugate(v); });
}
Eigen::VectorXd ConvexGenerator::conjugate_derivative(const Eigen::VectorXd& y) const {
  return y.unaryExpr([this](double v) { return conjugate_derivative(v); });
}

double conjugate_eval(const ConvexGenerator& gen, double y) { return gen.conjugate(y); }

double conjugate_grid_oracle(const ConvexGenerator& gen, double y, double x_lo, double x_hi,
                             int n_grid) {
  if (n_grid < 1000) throw Error(ErrorKind::kInvalidArgument, "grid oracle needs n_grid >= 1000");
  if (!(x_hi > x_lo)) throw Error(ErrorKind::kInvalidArgument, "grid oracle needs x_lo < x_hi");
  const double h = (x_hi - x_lo) / static_cast<double>(n_grid - 1);
  double best = -kInf;
  for (int i = 0; i < n_grid; ++i) {
    const double x = x_lo + h * i;
    const double fx = gen.eval(x);
    if (std::isfinite(fx)) best = std::max(best, x * y - fx);
  }
  return best;
}

double f_divergence(const ConvexGenerator& gen, const Eigen::VectorXd& d,
                    const Eigen::VectorXd& p) {
  require_same_size(d, p, "f_divergence");
  require_distribution(p, "f_divergence");
  double total = 0.0;
  for (Eigen::Index z = 0; z < d.size(); ++z) {
    if (p[z] > 0.0) {
      const double term = p[z] * gen.eval(d[z] / p[z]);
      if (!std::isfinite(term)) {
        throw Error(ErrorKind::kDomainError,
                    "f_divergence: ratio outside the generator domain at index " +
                        std::to_string(z));
      }
      total += term;
    } else if (d[z] != 0.0) {
      throw Error(ErrorKind::kSupportViolation,
                  "f_divergence: mass at index " + std::to_string(z) + " where p is zero");
    }
  }
  return total;
}

double log_mean_exp(const Eigen::VectorXd& h, const Eigen::VectorXd& p) {
  require_same_size(h, p, "log_mean_exp");
  double m = -kInf;
  for (Eigen::Index z = 0; z < h.size(); ++z) {
    if (p[z] > 0.0) m = std::max(m, h[z]);
  }
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (Eigen::Index z = 0; z < h.size(); ++z) {
    if (p[z] > 0.0) acc += p[z] * std::exp(h[z] - m);
  }
  return m + std::log(acc);
}

double divergence_conjugate(const ConvexGenerator& gen, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& p, bool constrained) {
  require_same_size(y, p, "divergence_conjugate");
  require_distribution(p, "divergence_conjugate");
  if (constrained) {
    if (gen.kind() != GeneratorKind::kKL) {
      throw Error(ErrorKind::kUnsupportedConstrainedGenerator,
                  "constrained conjugate is only available for kl, not " + gen.name());
    }
    const double a = gen.scale();
    return a * log_mean_exp(y / a, p);
  }
  return p.dot(gen.conjugate(y));
}

Eigen::VectorXd softmax_weights(const Eigen::VectorXd& h, const Eigen::VectorXd& p) {
  require_same_size(h, p, "softmax_weights");
  double m = -kInf;
  for (Eigen::Index z = 0; z < h.size(); ++z) {
    if (p[z] > 0.0) m = std::max(m, h[z]);
  }
  if (!std::isfinite(m)) m = h.maxCoeff();
  const Eigen::VectorXd e = (h.array() - m).exp().matrix();
  return e / p.dot(e);
}

FenchelGap fenchel_gap_check(const FenchelProblem& prob, const FenchelOptions& opt) {
  const Eigen::MatrixXd& A = prob.A;
  const Eigen::VectorXd& b = prob.b;
  if (A.rows() != b.size() || A.cols() < 1) {
    throw Error(ErrorKind::kShapeMismatch, "fenchel_gap_check: A and b are inconsistent");
  }
  if (A.rows() > 32 || A.cols() > 32) {
    throw Error(ErrorKind::kBudgetExceeded, "fenchel_gap_check supports at most 32 dimensions");
  }
  if (prob.f.kind() == GeneratorKind::kKL) {
    throw Error(ErrorKind::kInvalidArgument, "fenchel_gap_check does not support kl");
  }
  const ConvexGenerator& f = prob.f;
  const auto identity = [](Eigen::VectorXd v) { return v; };
  FenchelGap out;
  bool primal_ok = false;
  bool dual_ok = false;

  if (prob.constraint == ConstraintKind::kEquals) {
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    const Eigen::VectorXd x0 = cod.solve(b);
    if ((A * x0 - b).norm() > 1e-8 * (1.0 + b.norm())) {
      throw Error(ErrorKind::kInfeasible, "fenchel_gap_check: A x = b has no solution");
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    Eigen::MatrixXd kernel = lu.kernel();
    if (lu.rank() == A.cols()) kernel.resize(A.cols(), 0);
    if (kernel.cols() > 0) {
      // Orthonormal basis keeps the substituted problem well scaled.
      kernel = Eigen::HouseholderQR<Eigen::MatrixXd>(kernel).householderQ() *
               Eigen::MatrixXd::Identity(A.cols(), kernel.cols());
      const auto value = [&](const Eigen::VectorXd& z) {
        return sum_f(f, Eigen::VectorXd(x0 + kernel * z));
      };
      const auto grad = [&](const Eigen::VectorXd& z) {
        return Eigen::VectorXd(kernel.transpose() * f.derivative(Eigen::VectorXd(x0 + kernel * z)));
      };
      const Descent d = projected_descent(value, grad, identity,
                                          Eigen::VectorXd::Zero(kernel.cols()), opt);
      out.primal_solution = x0 + kernel * d.x;
      primal_ok = d.converged;
    } else {
      out.primal_solution = x0;
      primal_ok = true;
    }
    out.primal = sum_f(f, out.primal_solution);

    // Dual as a minimization of sum f*(-A^T y) + <b, y>.
    const auto value = [&](const Eigen::VectorXd& y) {
      return sum_conj(f, Eigen::VectorXd(-A.transpose() * y)) + b.dot(y);
    };
    const auto grad = [&](const Eigen::VectorXd& y) {
      return Eigen::VectorXd(-A * f.conjugate_derivative(Eigen::VectorXd(-A.transpose() * y)) + b);
    };
    const Descent d = projected_descent(value, grad, identity, Eigen::VectorXd::Zero(b.size()), opt);
    out.dual_solution = d.x;
    out.dual = -d.value;
    dual_ok = d.converged;
  } else {
    const Eigen::VectorXd start = project_halfspaces(A, b, Eigen::VectorXd::Zero(A.cols()));
    if (((A * start - b).array() < -1e-8).any()) {
      throw Error(ErrorKind::kInfeasible, "fenchel_gap_check: A x >= b has no solution");
    }
    const auto project = [&](Eigen::VectorXd x) { return project_halfspaces(A, b, x); };
    const auto pvalue = [&](const Eigen::VectorXd& x) { return sum_f(f, x); };
    const auto pgrad = [&](const Eigen::VectorXd& x) { return f.derivative(x); };
    const Descent p = projected_descent(pvalue, pgrad, project, start, opt);
    out.primal_solution = p.x;
    out.primal = p.value;
    primal_ok = p.converged;

    // g*(y) = <b, y> on y <= 0.
    const auto dvalue = [&](const Eigen::VectorXd& y) {
      return sum_conj(f, Eigen::VectorXd(-A.transpose() * y)) + b.dot(y);
    };
    const auto dgrad = [&](const Eigen::VectorXd& y) {
      return Eigen::VectorXd(-A * f.conjugate_derivative(Eigen::VectorXd(-A.transpose() * y)) + b);
    };
    const auto nonpositive = [](Eigen::VectorXd y) { return Eigen::VectorXd(y.cwiseMin(0.0)); };
    const Descent d =
        projected_descent(dvalue, dgrad, nonpositive, Eigen::VectorXd::Zero(b.size()), opt);
    out.dual_solution = d.x;
    out.dual = -d.value;
    dual_ok = d.converged;
  }
  out.primal_recovered = f.conjugate_derivative(Eigen::VectorXd(-A.transpose() * out.dual_solution));
  out.gap = std::abs(out.primal - out.dual);
  if (!primal_ok || !dual_ok) {
    std::ostringstream os;
    os.precision(6);
    os << "fenchel_gap_check did not converge (primal " << (primal_ok ? "ok" : "stalled")
       << ", dual " << (dual_ok ? "ok" : "stalled") << ", gap " << out.gap << ")";
    throw Error(ErrorKind::kNonconvergence, os.str());
  }
  return out;
}

}  // namespace dualrl
