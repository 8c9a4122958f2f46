#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinlab/spin_system.hpp"

namespace spinlab {

// Canonical model document:
// {"q":int,"n":int,"edges":[[u,v,beta]...],"field":[[v,spin,h]...],
//  "bipartition":[[L ids],[R ids]]}   (bipartition optional)
nlohmann::json model_to_json(const SpinSystem& model);

// Schema problems as human-readable strings; empty when the document is valid.
std::vector<std::string> validate_model_json(const nlohmann::json& doc);

SpinSystem model_from_json(const nlohmann::json& doc);
SpinSystem parse_model(std::string_view text);
SpinSystem load_model(const std::filesystem::path& path);

nlohmann::json parse_json_text(std::string_view text);

}  // namespace spinlab
