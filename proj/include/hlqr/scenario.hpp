#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hlqr/sim.hpp"

namespace hlqr {

// Parsed scenario document: the physical scenario plus output options.
struct ScenarioConfig {
  std::string name = "scenario";
  FormationScenario scenario;
  std::string out_dir = "out";
  double csv_period = 0.01;  // spacing of CSV/plot rows
  std::vector<std::pair<int, int>> input_traces;  // (group, agent) pairs to plot
};

// Strict JSON parsing: unknown keys are rejected and every value is
// range-checked; errors name the offending field. The only required keys are
// "groups", "targets", "formation_offsets" and "edges".
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config_file(const std::string& path);

std::string serialize_config(const ScenarioConfig& config);

// Built-in scenario presets: "paper-4groups" and "paper-4groups-10x".
ScenarioConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace hlqr
