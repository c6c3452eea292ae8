#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "dualrl/dataset.hpp"
#include "dualrl/mdp.hpp"

namespace dualrl {

// {"n_states", "n_actions", "discount", "transition" [s][a][s'],
//  "reward" [s][a], "initial_dist" [s]}
nlohmann::json mdp_to_json(const TabularMdp& mdp);
// Throws ParseError for malformed documents and the validation error kind
// for invalid tables.
TabularMdp mdp_from_json(const nlohmann::json& doc);

nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& doc);

// {"mode", "weights" [s][a], "behavior" [s][a], "samples" [[s,a,r,s'],...],
//  "mdp_id", "seed"}
nlohmann::json dataset_to_json(const OfflineDataset& dataset);
OfflineDataset dataset_from_json(const nlohmann::json& doc);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);

nlohmann::json read_json_file(const std::string& path);
// Two-space indent and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& doc);

TabularMdp load_mdp(const std::string& path);
void save_mdp(const std::string& path, const TabularMdp& mdp);
OfflineDataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const OfflineDataset& dataset);

}  // namespace dualrl
