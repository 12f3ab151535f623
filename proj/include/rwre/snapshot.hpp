#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "rwre/lattice.hpp"

namespace rwre {

// {"d": .., "n": .., "order": "row-major over (x_1+n-1, ..., x_d+n-1)",
//  "sites": [[p_0, ..., p_2d], ...]}
inline constexpr const char* kSnapshotOrder = "row-major over (x_1+n-1, ..., x_d+n-1)";

nlohmann::json to_json(const TorusEnvironment& env);
TorusEnvironment environment_from_json(const nlohmann::json& j);

void save_environment(const TorusEnvironment& env, const std::filesystem::path& path);
TorusEnvironment load_environment(const std::filesystem::path& path);

}  // namespace rwre
