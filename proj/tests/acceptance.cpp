// Acceptance report: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dualrl/cli.hpp"
#include "dualrl/convex.hpp"
#include "dualrl/dataset.hpp"
#include "dualrl/estimators.hpp"
#include "dualrl/io.hpp"
#include "dualrl/methods.hpp"
#include "dualrl/oracles.hpp"
#include "dualrl/policy_opt.hpp"
#include "dualrl/undiscounted.hpp"
#include "dualrl/vlp.hpp"

using namespace dualrl;
namespace fs = std::filesystem;

namespace {

// Tracks the worst observed value of each measured quantity against its bound.
class Check {
 public:
  void bound(const std::string& what, double observed, double limit) {
    if (!(observed <= limit)) ok_ = false;
    auto it = std::find_if(worst_.begin(), worst_.end(), [&](const auto& w) { return w.name == what; });
    if (it == worst_.end()) {
      worst_.push_back({what, observed, limit});
    } else if (!(observed <= it->observed)) {
      it->observed = observed;
    }
  }
  void require(const std::string& what, bool condition) {
    if (!condition) {
      ok_ = false;
      failures_.push_back(what);
    }
  }
  bool ok() const { return ok_; }
  std::string summary() const {
    std::ostringstream out;
    out.precision(2);
    out << std::scientific;
    bool first = true;
    for (const auto& w : worst_) {
      out << (first ? "" : "; ") << w.name << " " << w.observed << " <= " << w.limit;
      first = false;
    }
    for (const auto& f : failures_) out << (first ? "" : "; ") << "failed: " << f, first = false;
    return first ? "all checks held" : out.str();
  }

 private:
  struct Worst {
    std::string name;
    double observed;
    double limit;
  };
  bool ok_ = true;
  std::vector<Worst> worst_;
  std::vector<std::string> failures_;
};

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Eigen::VectorXd gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

TabularMdp one_state(std::vector<double> rewards, double discount) {
  MdpTables t;
  t.n_states = 1;
  t.n_actions = static_cast<int>(rewards.size());
  t.transition = Eigen::MatrixXd::Ones(t.n_actions, 1);
  t.reward = Eigen::Map<Eigen::VectorXd>(rewards.data(), t.n_actions);
  t.initial_dist = Eigen::VectorXd::Ones(1);
  t.discount = discount;
  return TabularMdp(t);
}

OfflineDataset uniform_data(const TabularMdp& mdp) {
  return from_behavior(mdp, Policy::uniform(mdp.n_states(), mdp.n_actions()), DatasetMode::kExact);
}

struct Instance {
  TabularMdp mdp;
  Policy target;
  OfflineDataset dataset;
};

Instance seeded(int seed, int n_states, int n_actions = 2, double discount = 0.9) {
  const TabularMdp mdp =
      random_mdp({n_states, n_actions, discount, static_cast<std::uint64_t>(seed)});
  return {mdp, random_policy(n_states, n_actions, seed + 1000), uniform_data(mdp)};
}

Eigen::VectorXd oracle_ratio(const Instance& in) {
  return exact_visitation(in.mdp, in.target).cwiseQuotient(in.dataset.weights);
}

std::vector<ConvexGenerator> generator_catalog() {
  return {ConvexGenerator::square(), ConvexGenerator::chi_square(), ConvexGenerator::kl(),
          ConvexGenerator::pnorm(3.0), ConvexGenerator::pnorm(1.5)};
}

void operator_algebra(Check& c) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 100; ++k) {
    const int n_s = 1 + k % 20;
    const int n_a = 1 + k % 3;
    const TabularMdp mdp = random_mdp({n_s, n_a, 0.9, static_cast<std::uint64_t>(k)});
    const Policy pi = random_policy(n_s, n_a, k + 500);
    const Eigen::VectorXd d = gaussian(n_s * n_a, rng);
    const Eigen::VectorXd q = gaussian(n_s * n_a, rng);
    const Eigen::VectorXd v = gaussian(n_s, rng);
    c.bound("policy adjointness",
            std::abs(d.dot(policy_forward(mdp, pi, q)) - policy_adjoint(mdp, pi, d).dot(q)), 1e-10);
    c.bound("transition adjointness",
            std::abs(d.dot(transition_forward(mdp, v)) - transition_adjoint(mdp, d).dot(v)), 1e-10);
    c.bound("mass preservation", std::abs(policy_adjoint(mdp, pi, d).sum() - d.sum()), 1e-10);
    c.bound("transition mass", std::abs(transition_adjoint(mdp, d).sum() - d.sum()), 1e-10);
  }
}

void oracle_identities(Check& c) {
  for (int k = 0; k < 100; ++k) {
    const int n_s = 1 + (k * 7) % 20;
    const double discount = k % 2 ? 0.99 : 0.9;
    const TabularMdp mdp = random_mdp({n_s, 1 + k % 3, discount, static_cast<std::uint64_t>(k)});
    const Policy pi = random_policy(n_s, mdp.n_actions(), k + 50);
    const Eigen::VectorXd q = exact_q_values(mdp, pi);
    const Eigen::VectorXd d = exact_visitation(mdp, pi);
    const double g = mdp.discount();
    c.bound("two-ways value gap",
            std::abs((1 - g) * initial_state_action(mdp, pi).dot(q) - d.dot(mdp.reward())), 1e-9);
    c.bound("Bellman residual", max_abs(q - mdp.reward() - g * policy_forward(mdp, pi, q)), 1e-9);
    c.bound("transpose residual",
            max_abs(d - (1 - g) * initial_state_action(mdp, pi) - g * policy_adjoint(mdp, pi, d)),
            1e-9);
  }
}

void conjugate_catalog(Check& c) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  std::uniform_real_distribution<double> positive(0.0, 5.0);
  for (const ConvexGenerator& gen : generator_catalog()) {
    for (int i = 0; i < 10000; ++i) {
      const double x = gen.nonnegative_domain() ? positive(rng) : coord(rng);
      const double y = coord(rng);
      c.bound("Fenchel-Young violation", x * y - gen.eval(x) - gen.conjugate(y), 1e-12);
    }
    const double lo = gen.nonnegative_domain() ? 0.0 : -10.0;
    for (double y : {-1.5, -0.5, 0.0, 0.5, 1.5}) {
      c.bound("grid oracle gap", std::abs(conjugate_grid_oracle(gen, y, lo, 10.0, 20001) - gen.conjugate(y)),
              1e-3);
    }
    const std::vector<double> xs = gen.nonnegative_domain() ? std::vector<double>{0.5, 1.0, 2.0}
                                                            : std::vector<double>{-2.0, 0.0, 1.0, 2.0};
    for (const double x : xs) {
      double best = -1e300;
      const int n = 40001;
      for (int i = 0; i < n; ++i) {
        const double y = -8.0 + 16.0 * i / (n - 1);
        best = std::max(best, x * y - gen.conjugate(y));
      }
      c.bound("biconjugate gap", std::abs(best - gen.eval(x)), 1e-3);
    }
  }
}

void doubly_robust(Check& c) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const Instance in = seeded(k, 2 + k % 5);
    const int n = in.mdp.n_state_actions();
    Eigen::VectorXd noise(n);
    for (int i = 0; i < n; ++i) noise[i] = unit(rng);
    const double rho = exact_value(in.mdp, in.target);
    const Eigen::VectorXd q = exact_q_values(in.mdp, in.target);
    c.bound("true Q slot", std::abs(doubly_robust_eval(in.mdp, in.target, in.dataset, q, noise) - rho), 1e-9);
    c.bound("true zeta slot",
            std::abs(doubly_robust_eval(in.mdp, in.target, in.dataset, gaussian(n, rng), oracle_ratio(in)) - rho),
            1e-9);
  }
}

void square_dual_identity(Check& c) {
  const ConvexGenerator square = ConvexGenerator::square();
  for (int seed = 0; seed < 10; ++seed) {
    const Instance in = seeded(seed, 2 + seed % 5);
    const Eigen::VectorXd truth = oracle_ratio(in);
    const EvalResult closed = dualdice_dual(in.mdp, in.target, in.dataset, square,
                                            default_solver_config(parse_method("dualdice:square:closed")), true);
    const EvalResult gda = dualdice_dual(in.mdp, in.target, in.dataset, square,
                                         default_solver_config(parse_method("dualdice:square")), false);
    c.bound("closed-form ratio error", max_abs(closed.zeta_table - truth), 1e-8);
    c.bound("descent ratio error", max_abs(gda.zeta_table - truth), 1e-3);
    c.require("descent converged", gda.report.converged);
  }
}

void strong_duality(Check& c) {
  for (const char* name : {"square", "chisquare"}) {
    const ConvexGenerator gen = ConvexGenerator::parse(name);
    for (int seed = 0; seed < 5; ++seed) {
      const Instance in = seeded(seed, 3);
      const double oracle = -f_divergence(gen, exact_visitation(in.mdp, in.target), in.dataset.weights);
      LagrangianSpec spec;
      spec.mode = LagrangianMode::kFDiv;
      spec.gen = gen;
      const EvalResult saddle = lagrangian_ope(in.mdp, in.target, in.dataset, spec,
                                               default_solver_config(parse_method(std::string("lagrangian:fdiv:") + name)));
      const EvalResult dual = dualdice_dual(in.mdp, in.target, in.dataset, gen,
                                            default_solver_config(parse_method(std::string("dualdice:") + name)), false);
      c.bound("saddle vs oracle", std::abs(saddle.objective_value - oracle), 1e-4);
      c.bound("dual vs oracle", std::abs(dual.objective_value - oracle), 1e-4);
      c.bound("saddle vs dual", std::abs(saddle.objective_value - dual.objective_value), 1e-4);
    }
  }
}

void value_recovery(Check& c) {
  const std::vector<std::string> methods{
      "lagrangian:reward", "lagrangian:zero",  "lagrangian:fdiv:square", "lagrangian:fdiv:chisquare",
      "dualdice:square",   "dualdice:square:closed", "dualdice:chisquare", "dualdice:kl", "vlp-eval"};
  int runs = 0;
  int unconverged = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const Instance in = seeded(seed, 4);
    for (const std::string& method : methods) {
      const MethodSpec spec = parse_method(method);
      const MethodOutcome r = run_method(
          spec, MethodRun{in.mdp, in.dataset, &in.target, default_solver_config(spec), {}, true});
      ++runs;
      if (!r.converged) {
        ++unconverged;
        continue;
      }
      c.bound("value error", std::abs(r.value_estimate - exact_value(in.mdp, in.target)), 1e-3);
    }
  }
  c.require(std::to_string(unconverged) + "/" + std::to_string(runs) + " runs unconverged",
            unconverged == 0);
}

void policy_gradient(Check& c) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  const SolverConfig config = default_solver_config(parse_method("lagrangian:reward"));
  for (int seed = 0; seed < 3; ++seed) {
    const int n_s = 2 + seed % 2;
    const TabularMdp mdp = random_mdp({n_s, 2, 0.9, static_cast<std::uint64_t>(seed)});
    const OfflineDataset ds = uniform_data(mdp);
    for (int point = 0; point < 5; ++point) {
      Eigen::MatrixXd logits(n_s, 2);
      for (int i = 0; i < 2 * n_s; ++i) logits(i / 2, i % 2) = normal(rng);
      const Eigen::MatrixXd exact = exact_policy_gradient(mdp, logits);
      for (int s = 0; s < n_s; ++s) {
        for (int a = 0; a < 2; ++a) {
          const double h = 1e-5;
          Eigen::MatrixXd up = logits;
          Eigen::MatrixXd down = logits;
          up(s, a) += h;
          down(s, a) -= h;
          const double fd = (exact_value(mdp, Policy(softmax_rows(up))) -
                             exact_value(mdp, Policy(softmax_rows(down)))) / (2 * h);
          c.bound("exact vs finite differences", std::abs(fd - exact(s, a)), 1e-6);
        }
      }
      const Eigen::MatrixXd via = policy_gradient_via_lagrangian(mdp, ds, logits, config);
      c.bound("Lagrangian vs exact gradient", (via - exact).cwiseAbs().maxCoeff(), 1e-3);
    }
  }
}

void reps_duality(Check& c) {
  const std::vector<std::pair<int, int>> shapes{{2, 2}, {3, 2}, {4, 2}, {4, 4}, {8, 2}};
  int seed = 0;
  for (const auto& [n_s, n_a] : shapes) {
    const TabularMdp mdp = random_mdp({n_s, n_a, 0.9, static_cast<std::uint64_t>(seed++)});
    const OfflineDataset ds = uniform_data(mdp);
    const VlpResult r = reps_objective_solve(mdp, ds, default_solver_config(parse_method("reps")));
    const RegularizedOptimum opt =
        exact_regularized_optimum(mdp, ds, ConvexGenerator::kl(), FlowMode::kDiscounted);
    c.bound("objective vs oracle", std::abs(r.objective_value - opt.value), 1e-4);
    c.bound("flow residual", max_abs(flow_residual(mdp, r.recovered_d, FlowMode::kDiscounted)), 1e-4);
    c.bound("normalization", std::abs(r.raw_d_sum - 1.0), 1e-6);
    const OfflineDataset behavior_data =
        from_behavior(mdp, random_policy(n_s, n_a, seed + 40), DatasetMode::kExact);
    const Eigen::MatrixXd diff =
        max_likelihood_policy(behavior_data, Eigen::VectorXd::Ones(n_s * n_a)).probs() -
        behavior_conditional(behavior_data, mdp).probs();
    c.bound("max-likelihood(w = 1) vs behavior", diff.cwiseAbs().maxCoeff(), 0.0);
  }
}

void undiscounted_suite(Check& c) {
  const ConvexGenerator square = ConvexGenerator::square();
  std::mt19937_64 rng(4);
  for (int seed = 0; seed < 5; ++seed) {
    const Instance in = seeded(seed, 3, 2, 1.0);
    const Eigen::VectorXd truth =
        exact_stationary(in.mdp, in.target).cwiseQuotient(in.dataset.weights);
    const UndiscountedResult dual = undisc_fdiv_dual(
        in.mdp, in.target, in.dataset, square, default_solver_config(parse_method("undisc-dual:square")));
    const UndiscountedResult plain = undisc_lagrangian(
        in.mdp, in.target, in.dataset, square, false, default_solver_config(parse_method("undisc-lagrangian")));
    const UndiscountedResult gendice =
        undisc_lagrangian(in.mdp, in.target, in.dataset, square, true,
                          default_solver_config(parse_method("undisc-lagrangian:gendice")));
    for (const UndiscountedResult* r : {&dual, &plain, &gendice}) {
      c.bound("ratio error", max_abs(r->zeta_table - truth), 1e-2);
      c.bound("normalization", std::abs(in.dataset.weights.dot(r->zeta_table) - 1.0), 1e-3);
    }
    c.bound("plain vs GenDICE", max_abs(plain.zeta_table - gendice.zeta_table), 1e-2);

    const Eigen::VectorXd& w = in.dataset.weights;
    const Eigen::VectorXd q = gaussian(6, rng);
    const Eigen::VectorXd v = gaussian(3, rng);
    const Eigen::VectorXd zeta = gaussian(6, rng).cwiseAbs();
    Eigen::MatrixXd logits(3, 2);
    logits.reshaped() = gaussian(6, rng);
    const double shift = 10.0 * gaussian(1, rng)[0];
    const Eigen::VectorXd qc = q.array() + shift;
    const Eigen::VectorXd vc = v.array() + shift;
    c.bound("gauge shift",
            std::max({std::abs(undisc_fdiv_objective(in.mdp, in.target, w, square, qc, 0.3) -
                               undisc_fdiv_objective(in.mdp, in.target, w, square, q, 0.3)),
                      std::abs(undisc_lagrangian_objective(in.mdp, in.target, w, square, false, qc, 0.3, zeta) -
                               undisc_lagrangian_objective(in.mdp, in.target, w, square, false, q, 0.3, zeta)),
                      std::abs(undisc_policy_objective(in.mdp, w, square, logits, qc, 0.3) -
                               undisc_policy_objective(in.mdp, w, square, logits, q, 0.3)),
                      std::abs(undisc_reps_objective(in.mdp, w, vc) - undisc_reps_objective(in.mdp, w, v))}),
            1e-10);
  }
}

void optimization_sanity(Check& c) {
  for (const MethodFamily family : all_method_families()) {
    if (method_role(family) == MethodRole::kEvaluation) continue;
    const std::vector<std::string> variants =
        family == MethodFamily::kAlgaeDice ? std::vector<std::string>{"algaedice:square", "algaedice:chisquare"}
        : family == MethodFamily::kVlp     ? std::vector<std::string>{"vlp:square", "vlp:chisquare"}
        : family == MethodFamily::kUndiscOpt
            ? std::vector<std::string>{"undisc-opt:square", "undisc-opt:chisquare"}
            : std::vector<std::string>{example_method(family)};
    for (const std::string& method : variants) {
      const MethodSpec spec = parse_method(method);
      const TabularMdp mdp = one_state({1.0, 0.0}, is_undiscounted(family) ? 1.0 : 0.9);
      const OfflineDataset ds = uniform_data(mdp);
      const MethodOutcome r =
          run_method(spec, MethodRun{mdp, ds, nullptr, default_solver_config(spec), {}, true});
      if (!r.policy) {
        c.require(method + " returned a policy", false);
        continue;
      }
      c.require(method + " moves mass to the rewarding action", (*r.policy)(0, 0) > 0.5);
      const bool kl = family == MethodFamily::kKlQlp || family == MethodFamily::kReps ||
                      family == MethodFamily::kUndiscReps;
      const ConvexGenerator gen = kl ? ConvexGenerator::kl() : spec.gen;
      double best = -1e300;
      for (int i = 0; i <= 10000; ++i) {
        Eigen::MatrixXd probs(1, 2);
        probs << i / 1e4, 1.0 - i / 1e4;
        best = std::max(best, regularized_policy_value(mdp, ds.weights, gen, spec.reward_on, Policy(probs)));
      }
      c.bound("gap to sweep maximum",
              std::abs(regularized_policy_value(mdp, ds.weights, gen, spec.reward_on, *r.policy) - best), 1e-3);
    }
  }
}

struct CliCall {
  int code;
  std::string out;
};

CliCall cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void cli_contract(Check& c) {
  const fs::path fixtures = DUALRL_FIXTURE_DIR;
  const auto fx = [&](const char* name) { return (fixtures / name).string(); };
  const fs::path tmp = fs::temp_directory_path() / ("dualrl_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(tmp);
  const auto at = [&](const char* name) { return (tmp / name).string(); };

  const std::vector<std::string> gen{"gen", "--states", "4", "--actions", "2", "--gamma", "0.9", "--seed", "3"};
  auto gen_to = [&](const char* mdp, const char* data) {
    auto args = gen;
    args.insert(args.end(), {"--out", at(mdp), "--dataset-out", at(data)});
    return cli(args).code;
  };
  c.require("gen exits 0", gen_to("a.json", "da.json") == 0);
  const std::string first_mdp = slurp(at("a.json"));
  const std::string first_data = slurp(at("da.json"));
  c.require("gen reruns exit 0", gen_to("a.json", "da.json") == 0);
  c.require("gen files identical across reruns",
            first_mdp == slurp(at("a.json")) && first_data == slurp(at("da.json")));
  save_mdp(at("c.json"), load_mdp(at("a.json")));
  c.require("MDP load/save round trip", slurp(at("a.json")) == slurp(at("c.json")));
  save_dataset(at("dc.json"), load_dataset(at("da.json")));
  c.require("dataset load/save round trip", slurp(at("da.json")) == slurp(at("dc.json")));

  c.require("bad discount exits 2",
            cli({"gen", "--states", "3", "--actions", "2", "--gamma", "1.2", "--out", at("bad.json")}).code ==
                kExitConfig);
  c.require("unknown method exits 2",
            cli({"run", "--method", "nope", "--mdp", fx("single_state.json")}).code == kExitConfig);
  c.require("missing coverage exits 3",
            cli({"run", "--method", "dualdice:square:closed", "--mdp", fx("lazy_swap_discounted.json"),
                 "--dataset", fx("action0_only_dataset.json"), "--target", fx("uniform_policy_2x2.json")})
                    .code == kExitCoverage);
  c.require("periodic target exits 4",
            cli({"run", "--method", "undisc-dual:square", "--mdp", fx("lazy_swap_undiscounted.json"),
                 "--target", fx("always_swap_policy.json")})
                    .code == kExitNotErgodic);
  c.require("run exits 0", cli({"run", "--method", "dualdice:square:closed", "--mdp",
                                fx("single_state.json"), "--out", at("r.json")})
                                   .code == kExitOk);

  const std::vector<std::string> compare{"compare", "--config", fx("compare_config.json"), "--seeds", "0-2"};
  auto compare_to = [&](const char* name) {
    auto args = compare;
    args.insert(args.end(), {"--out", at(name)});
    return cli(args).code;
  };
  c.require("compare exits 0", compare_to("x.csv") == 0 && compare_to("y.csv") == 0);
  const std::string csv = slurp(at("x.csv"));
  c.require("compare CSV bitwise stable", !csv.empty() && csv == slurp(at("y.csv")));
  c.require("compare CSV has 6 rows", std::count(csv.begin(), csv.end(), '\n') == 7);
  fs::remove_all(tmp);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria{
      {"operator adjointness and mass preservation", operator_algebra},
      {"oracle value identities and Bellman residuals", oracle_identities},
      {"conjugate catalog: Fenchel-Young, grid oracle, biconjugacy", conjugate_catalog},
      {"doubly robust Lagrangian", doubly_robust},
      {"square dual residuals equal the density ratio", square_dual_identity},
      {"strong duality", strong_duality},
      {"value recovery of discounted estimators", value_recovery},
      {"policy gradient via the Lagrangian", policy_gradient},
      {"REPS duality and max-likelihood policy", reps_duality},
      {"undiscounted ratio estimation and gauge invariance", undiscounted_suite},
      {"policy optimization sanity", optimization_sanity},
      {"CLI determinism and exit codes", cli_contract},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    std::string detail;
    try {
      criteria[i].second(check);
      detail = check.summary();
    } catch (const std::exception& e) {
      check.require("threw", false);
      detail = std::string("exception: ") + e.what();
    }
    const bool ok = check.ok();
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " ("
              << detail << ")" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
