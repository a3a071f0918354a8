#pragma once

#include <sulcikit/synth.hpp>

#include <json.hpp>

#include <filesystem>

namespace sulcikit::synth {

// Field names follow the config documents in data/. Missing fields keep their
// defaults; malformed values raise ConfigError.
GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorConfig& config);

// Accepts either {"priors": [...]} or a bare array of
// {"label", "mean_range", "std_range"} objects.
TissuePriors priors_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TissuePriors& priors);

nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace sulcikit::synth
