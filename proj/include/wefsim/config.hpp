#pragma once

#include <string>

#include "wefsim/sim.hpp"

namespace wefsim {

inline constexpr const char* kToolVersion = "0.1.0";

// Flat sectioned key = value format, '#' comments. Unknown keys are errors
// (with line numbers); missing keys keep their defaults. A serialized
// config re-parses to the same values (round-trip fixed point).
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// The manifest written into every run directory: tool version plus the
// fully resolved config. It is itself a valid config file, so a run can be
// reproduced from it directly.
std::string serialize_manifest(const ExperimentConfig& cfg);

}  // namespace wefsim
