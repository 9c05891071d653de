#pragma once

#include <string>
#include <vector>

#include "hlqr/reporting.hpp"
#include "hlqr/scenario.hpp"

namespace hlqr {

// Model-based synthesis; writes report.json into config.out_dir.
void cmd_synth(const ScenarioConfig& config);

// Learning pipeline (phases 1-2); writes report.json and traj_learn.csv.
void cmd_learn(const ScenarioConfig& config);

// Full comparison against the optimal baseline; additionally writes
// traj_baseline.csv, plots/*.svg and the cost-ratio table over the two
// coupling scales.
void cmd_compare(const ScenarioConfig& config);

// Argv-level entry point. Exit codes: 0 success, 2 config error,
// 3 numerical failure, 4 excitation failure.
int cli_main(const std::vector<std::string>& args);

}  // namespace hlqr
