#pragma once

// YAML configuration file: sections scenario, profile, rssi_map, per_curve,
// link_budget and handover. Every section and key is optional; absent values
// keep their defaults. Unknown keys are rejected.

#include <filesystem>
#include <string>
#include <string_view>

#include "iolws/radio_channel.hpp"
#include "iolws/scenario.hpp"

namespace iolws::config {

struct AppConfig {
    sim::ScenarioConfig scenario;
    radio::LinkBudget link_budget;
};

// Throws Error(ConfigError) naming `source` for syntax, type or range errors.
AppConfig parse_config(std::string_view yaml, std::string_view source = "<config>");
AppConfig load_config(const std::filesystem::path& path);

// Full YAML rendering that parses back to the same configuration.
std::string render_config(const AppConfig& config);

/// config/default.yaml of the source tree.
std::filesystem::path default_config_path();

// Keyword parsers shared with the command line. Throw Error(ConfigError).
sim::ScenarioKind parse_kind(std::string_view text);
sim::HandoverOrder parse_order(std::string_view text);
sim::HandoverStart parse_start(std::string_view text);
stack::JitterShape parse_jitter_shape(std::string_view text);

} // namespace iolws::config
