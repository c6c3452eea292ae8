#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dualrl/catalog.hpp"
#include "dualrl/cli.hpp"
#include "dualrl/convex.hpp"
#include "dualrl/dataset.hpp"
#include "dualrl/io.hpp"
#include "dualrl/methods.hpp"
#include "dualrl/oracles.hpp"

namespace py = pybind11;
using namespace dualrl;

namespace {

py::object maybe(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict outcome_dict(const MethodOutcome& r) {
  py::dict out;
  out["method"] = r.method;
  out["value_estimate"] = r.value_estimate;
  out["oracle_value"] = maybe(r.oracle_value);
  out["abs_error"] = maybe(r.abs_error);
  out["zeta_max_error"] = maybe(r.zeta_max_error);
  out["policy_value"] = maybe(r.policy_value);
  out["converged"] = r.converged;
  out["iters"] = r.iters;
  out["final_grad_norm"] = r.final_grad_norm;
  out["objective_value"] = r.objective_value;
  out["lambda"] = maybe(r.lambda);
  out["zeta_table"] = r.zeta_table;
  out["q_table"] = r.q_table;
  out["v_table"] = r.v_table;
  out["policy"] = r.policy ? py::cast(r.policy->probs()) : py::none();
  return out;
}

DatasetMode mode_from(const std::string& mode) {
  if (mode == "exact") return DatasetMode::kExact;
  if (mode == "sampled") return DatasetMode::kSampled;
  throw Error(ErrorKind::kInvalidArgument, "mode must be 'exact' or 'sampled'");
}

}  // namespace

PYBIND11_MODULE(_dualrl, m) {
  m.doc() = "Tabular MDP duality estimators";

  static py::exception<Error> error_type(m, "DualRLError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<TabularMdp>(m, "Mdp")
      .def(py::init([](const Eigen::MatrixXd& transition, const Eigen::VectorXd& reward,
                       const Eigen::VectorXd& initial_dist, double discount) {
             MdpTables t;
             t.n_states = static_cast<int>(initial_dist.size());
             t.n_actions = t.n_states ? static_cast<int>(reward.size()) / t.n_states : 0;
             t.transition = transition;
             t.reward = reward;
             t.initial_dist = initial_dist;
             t.discount = discount;
             return TabularMdp(t);
           }),
           py::arg("transition"), py::arg("reward"), py::arg("initial_dist"), py::arg("discount"),
           "transition is (S*A, S) with row s*A + a; reward is flat (S*A).")
      .def_property_readonly("n_states", &TabularMdp::n_states)
      .def_property_readonly("n_actions", &TabularMdp::n_actions)
      .def_property_readonly("discount", &TabularMdp::discount)
      .def_property_readonly("transition", &TabularMdp::transition)
      .def_property_readonly("reward", &TabularMdp::reward)
      .def_property_readonly("initial_dist", &TabularMdp::initial_dist)
      .def("with_discount", &TabularMdp::with_discount)
      .def("to_json", [](const TabularMdp& mdp) { return mdp_to_json(mdp).dump(); });

  py::class_<Policy>(m, "Policy")
      .def(py::init<Eigen::MatrixXd>(), py::arg("probs"))
      .def_static("uniform", &Policy::uniform)
      .def_static("from_logits", &Policy::from_logits)
      .def_property_readonly("probs", &Policy::probs)
      .def_property_readonly("n_states", &Policy::n_states)
      .def_property_readonly("n_actions", &Policy::n_actions);

  py::class_<OfflineDataset>(m, "Dataset")
      .def_readonly("weights", &OfflineDataset::weights)
      .def_readonly("behavior", &OfflineDataset::behavior)
      .def_property_readonly("n_samples", [](const OfflineDataset& d) { return d.samples.size(); });

  m.def("random_mdp",
        [](int n_states, int n_actions, double discount, std::uint64_t seed) {
          return random_mdp({n_states, n_actions, discount, seed});
        },
        py::arg("n_states"), py::arg("n_actions"), py::arg("discount"), py::arg("seed") = 0);
  m.def("random_policy", &random_policy, py::arg("n_states"), py::arg("n_actions"), py::arg("seed"));
  m.def("load_mdp", &load_mdp);
  m.def("save_mdp", &save_mdp);

  m.def("from_behavior",
        [](const TabularMdp& mdp, const Policy& behavior, const std::string& mode,
           std::optional<int> n_samples, std::uint64_t seed) {
          return from_behavior(mdp, behavior, mode_from(mode), n_samples, seed);
        },
        py::arg("mdp"), py::arg("behavior"), py::arg("mode") = "exact",
        py::arg("n_samples") = py::none(), py::arg("seed") = 0);

  m.def("exact_value", &exact_value);
  m.def("exact_q_values", &exact_q_values);
  m.def("exact_visitation", &exact_visitation);
  m.def("exact_average_reward", &exact_average_reward);
  m.def("exact_policy_gradient", &exact_policy_gradient);

  m.def("conjugate", [](const std::string& gen, double y) { return ConvexGenerator::parse(gen).conjugate(y); });
  m.def("generator_value", [](const std::string& gen, double x) { return ConvexGenerator::parse(gen).eval(x); });
  m.def("f_divergence", [](const std::string& gen, const Eigen::VectorXd& d, const Eigen::VectorXd& p) {
    return f_divergence(ConvexGenerator::parse(gen), d, p);
  });

  m.def("method_patterns", &registered_method_patterns);
  m.def("check_method", [](const std::string& text) { return parse_method(text).text; });
  m.def("emit_catalog", py::overload_cast<>(&emit_catalog));

  m.def("_run_method",
        [](const std::string& method, const TabularMdp& mdp, const OfflineDataset& dataset,
           const Policy* target, const std::string& solver_json, bool with_oracle) {
          const MethodSpec spec = parse_method(method);
          const SolverConfig solver =
              solver_from_json(nlohmann::json::parse(solver_json), default_solver_config(spec));
          MethodOutcome r;
          {
            py::gil_scoped_release release;
            r = run_method(spec, MethodRun{mdp, dataset, target, solver, {}, with_oracle});
          }
          return outcome_dict(r);
        },
        py::arg("method"), py::arg("mdp"), py::arg("dataset"), py::arg("target").none(true),
        py::arg("solver_json"), py::arg("with_oracle"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
