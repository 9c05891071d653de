#pragma once

#include <string>
#include <vector>

#include "hlqr/hierarchy.hpp"
#include "hlqr/scenario.hpp"
#include "hlqr/sim.hpp"

namespace hlqr {

// Model-based synthesis results for the report.
struct SynthResult {
  std::vector<CareSolution> locals;
  HierarchicalGain gain;
  SuboptimalityReport subopt;
};

// One row of the cost-ratio table (criterion: ratio grows with the coupling
// scale).
struct CostRatioEntry {
  double qtilde_scale = 0.0;
  double j_opt = 0.0;
  double j_hier = 0.0;
  double ratio = 1.0;
};

std::string synth_report_json(const ScenarioConfig& config, const SynthResult& result);
std::string learn_report_json(const ScenarioConfig& config, const ExperimentReport& report);
std::string compare_report_json(const ScenarioConfig& config, const ExperimentReport& report,
                                const std::vector<CostRatioEntry>& cost_table);

// CSV schema: header, then one row per logged step with columns
// time, gX_aY_px, gX_aY_py, gX_aY_vx, gX_aY_vy, gX_aY_ux, gX_aY_uy per agent.
void write_trajectory_csv(const std::string& path,
                          const std::vector<AugmentedGroupPlant>& plants,
                          const std::vector<int>& state_offsets,
                          const std::vector<int>& input_offsets, const TrajectoryLog& log);

// Overlaid agent paths in the plane: solid optimal baseline, dash-dotted
// learned controller, targets drawn as plus marks, one color per group.
void write_trajectory_svg(const std::string& path, const FormationScenario& scenario,
                          const std::vector<AugmentedGroupPlant>& plants,
                          const std::vector<int>& state_offsets, const TrajectoryLog& learned,
                          const TrajectoryLog& baseline);

// Input components over time for one agent, learned vs baseline.
void write_input_svg(const std::string& path, const std::vector<AugmentedGroupPlant>& plants,
                     const std::vector<int>& input_offsets, int group, int agent,
                     const TrajectoryLog& learned, const TrajectoryLog& baseline);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace hlqr
