#pragma once

#include <string>

#include <json.hpp>

#include "pace/ensemble.hpp"
#include "pace/iforest.hpp"

// Shared JSON model schema; see docs/model_schema.md.
namespace pace::io {

nlohmann::json tree_to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);

nlohmann::json ensemble_to_json(const WeightedEnsemble& ens);
WeightedEnsemble ensemble_from_json(const nlohmann::json& j);

nlohmann::json iforest_to_json(const IsolationForest& forest);
IsolationForest iforest_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace pace::io
