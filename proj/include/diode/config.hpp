#pragma once

#include <map>
#include <string>

#include "diode/bridge.hpp"

namespace diode {

// Flat key=value properties file; '#' starts a comment, values are trimmed,
// unknown keys warn (collected, not fatal).
struct ParsedProperties {
    std::map<std::string, std::string> values;
    std::vector<std::string> warnings;
};

ParsedProperties parse_properties(const std::string& text);

// Typed config from properties text. Throws ParseError (with line context)
// on bad numbers or invariant violations.
BridgeConfig parse_config_text(const std::string& text);
BridgeConfig parse_config_file(const std::string& path);

// Inverse of parse_config_text for the supported keys (round-trip tested).
std::string write_config(const BridgeConfig& cfg);

}  // namespace diode
