#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "lcdrl/system.hpp"

namespace lcdrl {

/// Builds a SystemModel from an environment definition file (see the schema
/// section of the README). Relative file references (truss geometry, gamma
/// cache) resolve against the directory of `path`.
SystemModel load_system(const std::string& path);
SystemModel load_system_json(const nlohmann::json& j, const std::string& base_dir);

}  // namespace lcdrl
