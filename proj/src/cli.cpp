#include "dualrl/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "dualrl/catalog.hpp"
#include "dualrl/io.hpp"

namespace dualrl {
namespace {

using nlohmann::json;

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorKind::kParseError, "config: " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  if (!obj.is_object()) bad_config(std::string(where) + " must be an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) bad_config("unknown key '" + item.key() + "' in " + where);
  }
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
  if (base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base_dir) / path).string();
}

json resolve_policy_paths(json spec, const std::string& base_dir) {
  if (spec.is_object() && spec.contains("path")) {
    spec["path"] = resolve_path(spec["path"].get<std::string>(), base_dir);
  }
  return spec;
}

DatasetMode parse_mode(const std::string& mode) {
  if (mode == "exact") return DatasetMode::kExact;
  if (mode == "sampled") return DatasetMode::kSampled;
  bad_config("dataset mode must be 'exact' or 'sampled', got '" + mode + "'");
}

Policy resolve_policy(const json& spec, int n_states, int n_actions) {
  Policy policy = Policy::uniform(n_states, n_actions);
  if (spec.is_string()) {
    const std::string text = spec.get<std::string>();
    if (text.rfind("random:", 0) == 0) {
      policy = random_policy(n_states, n_actions, std::stoull(text.substr(7)));
    } else if (text != "uniform") {
      policy = policy_from_json(read_json_file(text));
    }
  } else if (spec.is_array()) {
    policy = policy_from_json(spec);
  } else if (spec.is_object() && spec.contains("random")) {
    policy = random_policy(n_states, n_actions, spec["random"].get<std::uint64_t>());
  } else if (spec.is_object() && spec.contains("path")) {
    policy = policy_from_json(read_json_file(spec["path"].get<std::string>()));
  } else {
    bad_config("policy must be \"uniform\", {\"random\": seed}, {\"path\": file} or a table");
  }
  if (policy.n_states() != n_states || policy.n_actions() != n_actions) {
    throw Error(ErrorKind::kShapeMismatch, "policy shape does not match the MDP");
  }
  return policy;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

void emit_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kInvalidArgument, "cannot write " + path);
  f << text;
}

std::string parent_dir(const std::string& path) {
  return std::filesystem::path(path).parent_path().string();
}

// "0-4" or "0,2,5".
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  try {
    const auto dash = text.find('-');
    if (dash != std::string::npos) {
      const std::uint64_t lo = std::stoull(text.substr(0, dash));
      const std::uint64_t hi = std::stoull(text.substr(dash + 1));
      if (hi < lo) bad_config("empty seed range " + text);
      for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      std::stringstream in(text);
      std::string item;
      while (std::getline(in, item, ',')) out.push_back(std::stoull(item));
    }
  } catch (const std::logic_error&) {
    bad_config("bad seed list '" + text + "'");
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_experiment_config(read_json_file(path), parent_dir(path));
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kCoverageError: return kExitCoverage;
    case ErrorKind::kNotErgodic: return kExitNotErgodic;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kParseError:
    case ErrorKind::kNonStochasticRow:
    case ErrorKind::kNegativeEntry:
    case ErrorKind::kBadDiscount:
    case ErrorKind::kShapeMismatch:
    case ErrorKind::kMissingPolicy:
    case ErrorKind::kUndiscountedUnsupported:
    case ErrorKind::kDomainError:
    case ErrorKind::kUnsupportedConstrainedGenerator:
    case ErrorKind::kClosedFormUnsupported:
      return kExitConfig;
    default:
      return kExitUnexpected;
  }
}

SolverConfig solver_from_json(const json& block, SolverConfig base) {
  check_keys(block,
             {"step_size", "step_size_min", "step_size_max", "max_iters", "grad_tol", "step_decay",
              "seed", "averaging", "average_restart_ratio", "update", "check_every",
              "record_every"},
             "solver");
  try {
    if (block.contains("step_size")) {
      base.step_size_min = base.step_size_max = block["step_size"].get<double>();
    }
    if (block.contains("step_size_min")) base.step_size_min = block["step_size_min"].get<double>();
    if (block.contains("step_size_max")) base.step_size_max = block["step_size_max"].get<double>();
    if (block.contains("max_iters")) base.max_iters = block["max_iters"].get<int>();
    if (block.contains("grad_tol")) base.grad_tol = block["grad_tol"].get<double>();
    if (block.contains("step_decay")) {
      const std::string decay = block["step_decay"].get<std::string>();
      if (decay == "none") {
        base.step_decay = StepDecay::kNone;
      } else if (decay == "inverse_sqrt") {
        base.step_decay = StepDecay::kInverseSqrt;
      } else {
        bad_config("step_decay must be 'none' or 'inverse_sqrt'");
      }
    }
    if (block.contains("seed")) base.seed = block["seed"].get<std::uint64_t>();
    if (block.contains("averaging")) base.averaging = block["averaging"].get<bool>();
    if (block.contains("average_restart_ratio")) {
      base.average_restart_ratio = block["average_restart_ratio"].get<double>();
    }
    if (block.contains("update")) {
      const std::string update = block["update"].get<std::string>();
      if (update == "auto") {
        base.update = SaddleUpdate::kAuto;
      } else if (update == "simultaneous") {
        base.update = SaddleUpdate::kSimultaneous;
      } else if (update == "extragradient") {
        base.update = SaddleUpdate::kExtragradient;
      } else {
        bad_config("update must be 'auto', 'simultaneous' or 'extragradient'");
      }
    }
    if (block.contains("check_every")) base.check_every = block["check_every"].get<int>();
    if (block.contains("record_every")) base.record_every = block["record_every"].get<int>();
  } catch (const json::exception& e) {
    bad_config(std::string("solver: ") + e.what());
  }
  base.validate();
  return base;
}

json solver_to_json(const SolverConfig& c) {
  const char* update = c.update == SaddleUpdate::kAuto            ? "auto"
                       : c.update == SaddleUpdate::kSimultaneous ? "simultaneous"
                                                                 : "extragradient";
  return json{{"step_size_min", c.step_size_min},
              {"step_size_max", c.step_size_max},
              {"max_iters", c.max_iters},
              {"grad_tol", c.grad_tol},
              {"step_decay", c.step_decay == StepDecay::kNone ? "none" : "inverse_sqrt"},
              {"seed", c.seed},
              {"averaging", c.averaging},
              {"average_restart_ratio", c.average_restart_ratio},
              {"update", update},
              {"check_every", c.check_every},
              {"record_every", c.record_every}};
}

ExperimentConfig parse_experiment_config(const json& doc, const std::string& base_dir) {
  check_keys(doc,
             {"mdp", "behavior", "target", "dataset", "method", "methods", "seed", "seeds", "alpha",
              "solver", "coverage", "output"},
             "experiment");
  ExperimentConfig c;
  c.raw = doc;
  try {
    if (doc.contains("mdp")) {
      const json& m = doc["mdp"];
      check_keys(m, {"path", "n_states", "n_actions", "discount", "seed"}, "mdp");
      if (m.contains("path")) {
        c.mdp_path = resolve_path(m["path"].get<std::string>(), base_dir);
      } else {
        c.generator.n_states = m.value("n_states", c.generator.n_states);
        c.generator.n_actions = m.value("n_actions", c.generator.n_actions);
        c.generator.discount = m.value("discount", c.generator.discount);
        c.generator.seed = m.value("seed", c.generator.seed);
      }
    }
    c.seed = doc.value("seed", c.generator.seed);
    if (doc.contains("seeds")) c.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    if (doc.contains("behavior")) c.behavior = resolve_policy_paths(doc["behavior"], base_dir);
    if (doc.contains("target")) c.target = resolve_policy_paths(doc["target"], base_dir);
    if (doc.contains("dataset")) {
      const json& d = doc["dataset"];
      check_keys(d, {"path", "mode", "n_samples", "seed"}, "dataset");
      if (d.contains("path")) c.dataset_path = resolve_path(d["path"].get<std::string>(), base_dir);
      if (d.contains("mode")) c.dataset_mode = parse_mode(d["mode"].get<std::string>());
      if (d.contains("n_samples")) c.n_samples = d["n_samples"].get<int>();
      if (d.contains("seed")) c.dataset_seed = d["seed"].get<std::uint64_t>();
    }
    if (doc.contains("method")) c.methods.push_back(doc["method"].get<std::string>());
    if (doc.contains("methods")) {
      for (const auto& m : doc["methods"]) c.methods.push_back(m.get<std::string>());
    }
    c.alpha = doc.value("alpha", 1.0);
    if (doc.contains("solver")) {
      c.solver = doc["solver"];
      (void)solver_from_json(c.solver, SolverConfig{});
    }
    if (doc.contains("coverage")) {
      const json& cov = doc["coverage"];
      check_keys(cov, {"epsilon", "allow_clamp"}, "coverage");
      c.options.coverage_epsilon = cov.value("epsilon", c.options.coverage_epsilon);
      c.options.allow_clamp = cov.value("allow_clamp", false);
    }
    if (doc.contains("output")) {
      const json& o = doc["output"];
      check_keys(o, {"result", "csv"}, "output");
      if (o.contains("result")) c.result_path = resolve_path(o["result"].get<std::string>(), base_dir);
      if (o.contains("csv")) c.csv_path = resolve_path(o["csv"].get<std::string>(), base_dir);
    }
  } catch (const json::exception& e) {
    bad_config(e.what());
  }
  if (!(c.alpha > 0.0)) bad_config("alpha must be positive");
  for (const std::string& m : c.methods) (void)parse_method(m);
  return c;
}

json run_experiment(const ExperimentConfig& config, const std::string& method,
                    std::uint64_t seed) {
  MethodSpec spec = parse_method(method);
  spec.alpha = config.alpha;
  RandomMdpSpec gen = config.generator;
  gen.seed = seed;
  const TabularMdp mdp = config.mdp_path ? load_mdp(*config.mdp_path) : random_mdp(gen);
  const int n_s = mdp.n_states();
  const int n_a = mdp.n_actions();
  const bool undisc = is_undiscounted(spec.family);
  const TabularMdp data_mdp = undisc && mdp.discount() < 1.0 ? mdp.with_discount(1.0) : mdp;

  std::optional<Policy> target;
  if (method_role(spec.family) == MethodRole::kEvaluation) {
    target = config.target ? resolve_policy(*config.target, n_s, n_a)
                           : random_policy(n_s, n_a, seed + 1000);
  }
  OfflineDataset dataset;
  if (config.dataset_path) {
    dataset = load_dataset(*config.dataset_path);
    if (dataset.size() != mdp.n_state_actions()) {
      throw Error(ErrorKind::kShapeMismatch, "dataset does not match the MDP");
    }
  } else {
    const Policy behavior = resolve_policy(config.behavior, n_s, n_a);
    dataset = from_behavior(data_mdp, behavior, config.dataset_mode, config.n_samples,
                            config.dataset_seed.value_or(seed),
                            config.mdp_path.value_or("random:" + std::to_string(seed)));
  }
  const SolverConfig solver = solver_from_json(config.solver, default_solver_config(spec));
  const MethodOutcome r = run_method(
      spec, MethodRun{mdp, dataset, target ? &*target : nullptr, solver, config.options, true});

  json result{{"method", r.method},
              {"value_estimate", r.value_estimate},
              {"oracle_value", optional_number(r.oracle_value)},
              {"abs_error", optional_number(r.abs_error)},
              {"zeta_max_error", optional_number(r.zeta_max_error)},
              {"converged", r.converged},
              {"iters", r.iters},
              {"final_grad_norm", r.final_grad_norm},
              {"objective_value", r.objective_value},
              {"zeta_table", vector_to_json(r.zeta_table)},
              {"q_table", vector_to_json(r.q_table)},
              {"v_table", vector_to_json(r.v_table)},
              {"seed", seed},
              {"config", config.raw},
              {"solver", solver_to_json(solver)}};
  if (r.lambda) result["lambda"] = *r.lambda;
  if (r.policy) {
    result["policy"] = policy_to_json(*r.policy);
    result["policy_value"] = optional_number(r.policy_value);
  }
  if (target) result["target"] = policy_to_json(*target);
  return result;
}

std::string compare_csv(const ExperimentConfig& config) {
  if (config.methods.empty()) throw Error(ErrorKind::kInvalidArgument, "compare needs methods");
  const std::vector<std::uint64_t> seeds =
      config.seeds.empty() ? std::vector<std::uint64_t>{config.seed} : config.seeds;
  std::ostringstream out;
  out << "seed,method,value_estimate,oracle_value,abs_error,zeta_max_error,iters,converged,error\n";
  for (const std::uint64_t seed : seeds) {
    for (const std::string& method : config.methods) {
      out << seed << "," << method << ",";
      try {
        const json r = run_experiment(config, method, seed);
        const auto num = [&](const char* key) {
          return r[key].is_null() ? std::optional<double>() : r[key].get<double>();
        };
        out << csv_number(num("value_estimate")) << "," << csv_number(num("oracle_value")) << ","
            << csv_number(num("abs_error")) << "," << csv_number(num("zeta_max_error")) << ","
            << r["iters"].get<int>() << "," << (r["converged"].get<bool>() ? "true" : "false")
            << ",\n";
      } catch (const Error& e) {
        out << "NA,NA,NA,NA,NA,false," << to_string(e.kind()) << "\n";
      }
    }
  }
  return out.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Convex-duality estimators and optimizers for tabular MDPs", "dualrl"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Generate a random MDP (and optionally a dataset)");
  RandomMdpSpec spec;
  std::string gen_out, gen_dataset_out, gen_behavior = "uniform", gen_mode = "exact";
  std::optional<int> gen_samples;
  gen->add_option("--states", spec.n_states, "Number of states")->required();
  gen->add_option("--actions", spec.n_actions, "Number of actions")->required();
  gen->add_option("--gamma", spec.discount, "Discount in (0, 1]")->required();
  gen->add_option("--seed", spec.seed, "Generator seed");
  gen->add_option("--out", gen_out, "MDP JSON path")->required();
  gen->add_option("--dataset-out", gen_dataset_out, "Dataset JSON path");
  gen->add_option("--behavior", gen_behavior, "uniform | random:<seed> | policy JSON path");
  gen->add_option("--mode", gen_mode, "exact | sampled");
  gen->add_option("--samples", gen_samples, "Sample count for sampled mode");

  auto* run = app.add_subcommand("run", "Run one method and write a result JSON");
  std::string run_config, run_method_text, run_mdp, run_dataset, run_target, run_behavior,
      run_out;
  std::optional<std::uint64_t> run_seed;
  run->add_option("--config", run_config, "Experiment JSON");
  run->add_option("--method", run_method_text, "Method string");
  run->add_option("--mdp", run_mdp, "MDP JSON");
  run->add_option("--dataset", run_dataset, "Dataset JSON");
  run->add_option("--target", run_target, "Target policy JSON");
  run->add_option("--behavior", run_behavior, "Behavior policy JSON");
  run->add_option("--seed", run_seed, "Seed");
  run->add_option("--out", run_out, "Result JSON path (default: stdout)");

  auto* compare = app.add_subcommand("compare", "Sweep methods over seeds and write CSV");
  std::string cmp_config, cmp_methods, cmp_seeds, cmp_out;
  compare->add_option("--config", cmp_config, "Experiment JSON");
  compare->add_option("--methods", cmp_methods, "Comma-separated method strings");
  compare->add_option("--seeds", cmp_seeds, "Seeds as 0-4 or 0,2,5");
  compare->add_option("--out", cmp_out, "CSV path (default: stdout)");

  auto* catalog = app.add_subcommand("catalog", "Write the objective catalog");
  std::string catalog_out;
  catalog->add_option("--out", catalog_out, "Markdown path (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "UsageError", e.what());
    return kExitConfig;
  }

  try {
    if (gen->parsed()) {
      const TabularMdp mdp = random_mdp(spec);
      save_mdp(gen_out, mdp);
      if (!gen_dataset_out.empty()) {
        const Policy behavior =
            resolve_policy(json(gen_behavior), mdp.n_states(), mdp.n_actions());
        save_dataset(gen_dataset_out, from_behavior(mdp, behavior, parse_mode(gen_mode),
                                                    gen_samples, spec.seed, gen_out));
      }
      return kExitOk;
    }
    if (run->parsed()) {
      ExperimentConfig config = run_config.empty() ? ExperimentConfig{} : load_config(run_config);
      if (!run_method_text.empty()) config.methods = {run_method_text};
      if (!run_mdp.empty()) config.mdp_path = run_mdp;
      if (!run_dataset.empty()) config.dataset_path = run_dataset;
      if (!run_target.empty()) config.target = json{{"path", run_target}};
      if (!run_behavior.empty()) config.behavior = json{{"path", run_behavior}};
      if (run_seed) config.seed = *run_seed;
      if (!run_out.empty()) config.result_path = run_out;
      if (config.methods.size() != 1) {
        throw Error(ErrorKind::kInvalidArgument, "run needs exactly one method");
      }
      const json result = run_experiment(config, config.methods.front(), config.seed);
      if (config.result_path) {
        write_json_file(*config.result_path, result);
      } else {
        out << result.dump(2) << "\n";
      }
      return kExitOk;
    }
    if (compare->parsed()) {
      ExperimentConfig config = cmp_config.empty() ? ExperimentConfig{} : load_config(cmp_config);
      if (!cmp_methods.empty()) {
        config.methods = split_commas(cmp_methods);
        for (const std::string& m : config.methods) (void)parse_method(m);
      }
      if (!cmp_seeds.empty()) config.seeds = parse_seed_list(cmp_seeds);
      if (!cmp_out.empty()) config.csv_path = cmp_out;
      const std::string csv = compare_csv(config);
      if (config.csv_path) {
        write_text(*config.csv_path, csv);
      } else {
        out << csv;
      }
      return kExitOk;
    }
    const std::string doc = emit_catalog();
    if (catalog_out.empty()) {
      out << doc;
    } else {
      write_text(catalog_out, doc);
    }
    return kExitOk;
  } catch (const Error& e) {
    emit_error(err, std::string(to_string(e.kind())), e.what());
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    emit_error(err, "ParseError", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    emit_error(err, "Unexpected", e.what());
    return kExitUnexpected;
  }
}

}  // namespace dualrl
