#include "dualrl/io.hpp"

#include <fstream>
#include <sstream>

namespace dualrl {
namespace {

using nlohmann::json;

const json& field(const json& doc, const char* name) {
  if (!doc.is_object() || !doc.contains(name)) {
    throw Error(ErrorKind::kParseError, std::string("missing field '") + name + "'");
  }
  return doc.at(name);
}

double number(const json& v, const char* what) {
  if (!v.is_number()) throw Error(ErrorKind::kParseError, std::string(what) + " must be a number");
  return v.get<double>();
}

int count(const json& v, const char* what) {
  if (!v.is_number_integer()) {
    throw Error(ErrorKind::kParseError, std::string(what) + " must be an integer");
  }
  return v.get<int>();
}

const json& array_of(const json& v, std::size_t n, const char* what) {
  if (!v.is_array() || v.size() != n) {
    std::ostringstream os;
    os << what << " must be an array of length " << n;
    throw Error(ErrorKind::kShapeMismatch, os.str());
  }
  return v;
}

Eigen::MatrixXd table_from_json(const json& v, int rows, int cols, const char* what) {
  Eigen::MatrixXd m(rows, cols);
  array_of(v, rows, what);
  for (int r = 0; r < rows; ++r) {
    array_of(v[r], cols, what);
    for (int c = 0; c < cols; ++c) m(r, c) = number(v[r][c], what);
  }
  return m;
}

}  // namespace

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
  return out;
}

json mdp_to_json(const TabularMdp& mdp) {
  const int n_s = mdp.n_states();
  const int n_a = mdp.n_actions();
  json transition = json::array();
  json reward = json::array();
  for (int s = 0; s < n_s; ++s) {
    json t_row = json::array();
    json r_row = json::array();
    for (int a = 0; a < n_a; ++a) {
      t_row.push_back(vector_to_json(mdp.transition().row(mdp.index(s, a)).transpose()));
      r_row.push_back(mdp.reward()[mdp.index(s, a)]);
    }
    transition.push_back(std::move(t_row));
    reward.push_back(std::move(r_row));
  }
  json out;
  out["n_states"] = n_s;
  out["n_actions"] = n_a;
  out["discount"] = mdp.discount();
  out["transition"] = std::move(transition);
  out["reward"] = std::move(reward);
  out["initial_dist"] = vector_to_json(mdp.initial_dist());
  return out;
}

TabularMdp mdp_from_json(const json& doc) {
  MdpTables t;
  t.n_states = count(field(doc, "n_states"), "n_states");
  t.n_actions = count(field(doc, "n_actions"), "n_actions");
  if (t.n_states < 1 || t.n_actions < 1) {
    throw Error(ErrorKind::kShapeMismatch, "n_states and n_actions must be positive");
  }
  t.discount = number(field(doc, "discount"), "discount");
  const json& tr = array_of(field(doc, "transition"), t.n_states, "transition");
  t.transition.resize(t.n_states * t.n_actions, t.n_states);
  for (int s = 0; s < t.n_states; ++s) {
    const Eigen::MatrixXd block = table_from_json(tr[s], t.n_actions, t.n_states, "transition");
    t.transition.middleRows(s * t.n_actions, t.n_actions) = block;
  }
  const Eigen::MatrixXd r = table_from_json(field(doc, "reward"), t.n_states, t.n_actions, "reward");
  t.reward.resize(t.n_states * t.n_actions);
  for (int s = 0; s < t.n_states; ++s) {
    for (int a = 0; a < t.n_actions; ++a) t.reward[s * t.n_actions + a] = r(s, a);
  }
  const json& mu = array_of(field(doc, "initial_dist"), t.n_states, "initial_dist");
  t.initial_dist.resize(t.n_states);
  for (int s = 0; s < t.n_states; ++s) t.initial_dist[s] = number(mu[s], "initial_dist");
  return TabularMdp(std::move(t));
}

json policy_to_json(const Policy& policy) { return matrix_to_json(policy.probs()); }

Policy policy_from_json(const json& doc) {
  if (!doc.is_array() || doc.empty() || !doc[0].is_array()) {
    throw Error(ErrorKind::kParseError, "policy must be a nested [s][a] array");
  }
  return Policy(table_from_json(doc, static_cast<int>(doc.size()),
                                static_cast<int>(doc[0].size()), "policy"));
}

json dataset_to_json(const OfflineDataset& dataset) {
  const int n_a = dataset.behavior.n_actions();
  const int n_s = dataset.behavior.n_states();
  Eigen::MatrixXd w(n_s, n_a);
  for (int s = 0; s < n_s; ++s) {
    for (int a = 0; a < n_a; ++a) w(s, a) = dataset.weights[s * n_a + a];
  }
  json samples = json::array();
  for (const Transition& t : dataset.samples) {
    samples.push_back(json::array({t.state, t.action, t.reward, t.next_state}));
  }
  json out;
  out["mode"] = dataset.mode == DatasetMode::kExact ? "exact" : "sampled";
  out["weights"] = matrix_to_json(w);
  out["behavior"] = policy_to_json(dataset.behavior);
  out["samples"] = std::move(samples);
  out["mdp_id"] = dataset.mdp_id;
  out["seed"] = dataset.seed;
  return out;
}

OfflineDataset dataset_from_json(const json& doc) {
  OfflineDataset out;
  const json& mode = field(doc, "mode");
  if (mode == "exact") {
    out.mode = DatasetMode::kExact;
  } else if (mode == "sampled") {
    out.mode = DatasetMode::kSampled;
  } else {
    throw Error(ErrorKind::kParseError, "dataset mode must be 'exact' or 'sampled'");
  }
  out.behavior = policy_from_json(field(doc, "behavior"));
  const int n_s = out.behavior.n_states();
  const int n_a = out.behavior.n_actions();
  const Eigen::MatrixXd w = table_from_json(field(doc, "weights"), n_s, n_a, "weights");
  out.weights.resize(n_s * n_a);
  for (int s = 0; s < n_s; ++s) {
    for (int a = 0; a < n_a; ++a) out.weights[s * n_a + a] = w(s, a);
  }
  if ((out.weights.array() < 0.0).any() || std::abs(out.weights.sum() - 1.0) > 1e-10) {
    throw Error(ErrorKind::kNonStochasticRow, "dataset weights must be a distribution");
  }
  if (doc.contains("samples")) {
    for (const json& row : doc.at("samples")) {
      if (!row.is_array() || row.size() != 4) {
        throw Error(ErrorKind::kParseError, "samples must be [s, a, r, s'] rows");
      }
      out.samples.push_back({count(row[0], "sample state"), count(row[1], "sample action"),
                             number(row[2], "sample reward"), count(row[3], "sample next state")});
    }
  }
  if (doc.contains("mdp_id")) out.mdp_id = doc.at("mdp_id").get<std::string>();
  if (doc.contains("seed")) out.seed = doc.at("seed").get<std::uint64_t>();
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kParseError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParseError, "'" + path + "': " + e.what());
  }
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kInvalidArgument, "cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
}

TabularMdp load_mdp(const std::string& path) {
  try {
    return mdp_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, "'" + path + "': " + e.what());
  }
}

void save_mdp(const std::string& path, const TabularMdp& mdp) {
  write_json_file(path, mdp_to_json(mdp));
}

OfflineDataset load_dataset(const std::string& path) {
  try {
    return dataset_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, "'" + path + "': " + e.what());
  }
}

void save_dataset(const std::string& path, const OfflineDataset& dataset) {
  write_json_file(path, dataset_to_json(dataset));
}

}  // namespace dualrl
