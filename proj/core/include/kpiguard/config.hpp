#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "kpiguard/experiment.hpp"

namespace kpiguard {

const char* library_version();

// JSON config file: every section and key is optional and falls back to the
// built-in defaults; unknown keys are rejected so typos fail loudly.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Canonical serialization of the full effective configuration.
std::string experiment_config_to_json(const ExperimentConfig& config);

// FNV-1a over the canonical serialization; pins a run to its configuration.
std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace kpiguard
