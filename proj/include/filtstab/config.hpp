#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "filtstab/model.hpp"

namespace filtstab {

/// Reads a model document:
///
///   {
///     "states": 2,
///     "psi": [1, 1],                                   // optional
///     "transition": [[0.5, 0.5], [0.3, 0.7]],
///     "observation": {"type": "finite", "gamma": [[0.8, 0.2], [0.2, 0.8]],
///                     "theta": [1, 1]},                // theta optional
///     // or {"type": "gaussian", "means": [0, 1], "sigma": 1}
///     "nu": [0.9, 0.1],
///     "beta": [0.5, 0.5]
///   }
///
/// Optional "name" and "description" strings are accepted; any other key is
/// rejected. Errors are InvalidInput messages prefixed with a JSON pointer
/// to the offending value.
ModelSetup parse_config(const nlohmann::json& document);

ModelSetup load_config(const std::filesystem::path& path);

/// Serializes a validated setup in the same schema (lossless for doubles).
nlohmann::json model_to_json(const ModelSetup& setup);

}  // namespace filtstab
