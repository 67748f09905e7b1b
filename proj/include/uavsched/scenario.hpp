#pragma once

#include <filesystem>
#include <string>

#include "uavsched/domain.hpp"

namespace uavsched {

/// Built-in airport layout and station set for a scheme. Geometry is
/// synthetic: rectangular AGV loops with 10 m node spacing and four stations
/// 500-1500 m from the airport on straight routes at per-route altitudes.
AirportLayout default_layout(Scheme scheme);

/// Default scenario for a scheme: default layout, 6 UAVs, 6 AGVs, 2 staff,
/// one simulated hour.
ScenarioConfig default_scenario(Scheme scheme);

/// Text form of a scenario (JSON with unit-suffixed keys).
std::string dump_scenario(const ScenarioConfig& config);
/// Parses and validates. Throws ScenarioError on parse or invariant failure.
ScenarioConfig parse_scenario(const std::string& text);

ScenarioConfig load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path);

/// File name of the bundled scenario, e.g. "two_cycle.scenario".
std::string bundled_scenario_name(Scheme scheme);
/// Path under the bundled scenario directory.
std::filesystem::path bundled_scenario_path(Scheme scheme);

}  // namespace uavsched
