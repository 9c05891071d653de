#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "hlqr/adp.hpp"
#include "hlqr/hierarchy.hpp"
#include "hlqr/model.hpp"

namespace hlqr {

struct RobotParams {
  double mass = 1.0;     // kg, > 0
  double damping = 0.0;  // kg/s, >= 0
};

// Planar point robot m qdd + c qd = u as a 4-state, 2-input system over
// x = [q; qd].
AgentDynamics robot_state_space(const RobotParams& params);

struct ScenarioGroup {
  int size = 1;
  RobotParams robot;
  double exploration_duration = 5.0;  // s of noisy data collection
  double noise_amplitude = 1.0;
  // Coarse model guess used only to seed a stabilizing initial gain.
  double k0_mass_guess = 1.0;
  double k0_damping_guess = 0.0;
};

// Formation/target-tracking scenario over grouped planar robots.
struct FormationScenario {
  std::vector<ScenarioGroup> groups;
  std::vector<Eigen::Vector2d> targets;                        // one per group
  std::vector<std::vector<Eigen::Vector2d>> formation_offsets; // p_j - 1 per group
  std::vector<std::pair<int, int>> edges;                      // inter-group topology
  double q_bar_weight = 0.1;   // Q_bar_j = w * I over the augmented state
  double r_weight = 1.0;       // R_j = w * I
  double qtilde_scale = 0.1;   // scale on (L (x) S^T S)
  double sample_period = 0.01; // T
  double sim_step = 5e-4;      // integration step; divides sample_period
  double deploy_step = 0.0;    // deployment/baseline step; 0 means sim_step
  double horizon = 40.0;       // deployment duration after learning
  double init_box = 8.0;       // initial positions uniform in [-box, box]^2
  std::uint64_t seed = 1;
  int noise_freqs = 24;
  double care_tol = 1e-9;
  double adp_eps = 1e-3;
  int adp_max_iters = 30;

  int num_groups() const { return static_cast<int>(groups.size()); }
};

void validate_scenario(const FormationScenario& scenario);

// Group plant after the relative/centroid coordinate change and LQI
// augmentation: state X_j = [z_j; zeta_j] with z_j = T x_j and
// zeta_dot = (I (x) C) z - setpoint.
struct AugmentedGroupPlant {
  Mat t_transform;  // 4p x 4p
  Mat t_inverse;
  Mat a_aug;        // 6p x 6p
  Mat b_aug;        // 6p x 2p
  Vec setpoint;     // [offsets...; target], length 2p
  Mat s_centroid;   // 4 x 6p, extracts the centroid block of z
  int p = 0;

  int state_dim() const { return 6 * p; }
  int input_dim() const { return 2 * p; }
};

AugmentedGroupPlant build_augmented_group(const GroupModel& group,
                                          const FormationScenario& scenario, int j);

// Centroid-coupling cost scale * (L (x) S^T S) over the stacked augmented
// states (block (j,l) is scale * L_jl * S_j^T S_l).
Mat build_global_coupling(const FormationScenario& scenario,
                          const std::vector<AugmentedGroupPlant>& plants);

// Scenario assembled into synthesis form: augmented plants, the coupled
// hierarchy problem and the seeded initial condition shared by every
// subcommand.
struct ScenarioSetup {
  std::vector<AugmentedGroupPlant> plants;
  HierarchyProblem problem;
  Vec x0;
  std::vector<int> state_offsets;
  std::vector<int> input_offsets;
};

ScenarioSetup build_scenario_setup(const FormationScenario& scenario);

// Called once per integration step (including both endpoints) with the step
// index, time, state and applied input; used to stream data-matrix
// accumulation without retaining the fine-grid log.
using StepObserver = std::function<void(long, double, const Vec&, const Vec&)>;

// Fixed-step RK4 of xdot = A x + B (-K x + noise(t)) + drift, logging every
// log_stride-th step. noise may be empty (no exploration) and drift empty
// (regulation). Throws NumericalError("diverged") past a 1e9 state norm.
TrajectoryLog integrate(const Mat& a, const Mat& b, const Mat& k_fb,
                        const std::function<Vec(double)>& noise, const Vec& drift,
                        const Vec& x0, double step, double horizon, double sample_period,
                        int log_stride = 1, double t0 = 0.0,
                        const StepObserver& observer = nullptr);

struct GroupLearnReport {
  int unknowns = 0;
  int data_rows = 0;
  int rank = 0;
  bool rank_ok = false;
  int iterations = 0;
  std::vector<double> history;
  double ls_condition = 0.0;
  double gain_error_rel = 0.0;  // vs the model-based policy-iteration oracle
  Mat k0;
  Mat k_learned;
  Mat k_oracle;
};

struct ExperimentReport {
  std::vector<AugmentedGroupPlant> plants;
  std::vector<GroupLearnReport> groups;
  int centralized_unknowns = 0;

  Mat k_total_learned;  // deployed gain (learned local + computed global)
  Mat k_global_learned;
  Mat k_total_model;    // model-based hierarchical gain
  Mat k_star;           // optimal gain for the full coupled cost
  double coupling_residual = 0.0;

  double j_opt = 0.0;
  double j_hier_learned = 0.0;
  double j_hier_model = 0.0;
  double cost_ratio_learned = 1.0;
  double cost_ratio_model = 1.0;

  bool deployed_hurwitz = false;
  double deployed_abscissa = 0.0;
  double t_sync = 0.0;  // end of the longest exploration window

  TrajectoryLog run_log;       // exploration + deployment, logged on the CSV grid
  TrajectoryLog baseline_log;  // optimal controller from the same x0

  Vec x0;
  std::vector<std::vector<double>> final_formation_errors;  // per group, agents 2..p
  std::vector<double> final_centroid_errors;                // per group
  double max_formation_error = 0.0;
  double max_centroid_error = 0.0;
  // Max over agents of sup_t |pos - pos_opt| with both gains running the task
  // from the same x0 (isolates the controller difference from exploration).
  double sup_deviation = 0.0;

  std::vector<int> state_offsets;  // group offsets into the stacked X
  std::vector<int> input_offsets;
};

// Full pipeline: per-group exploration + learning (parallel), global-gain
// computation, deployment with setpoints, and (optionally) the model-based
// optimal baseline simulated from the same initial conditions.
ExperimentReport run_experiment(const FormationScenario& scenario, double csv_period = 0.01,
                                bool with_baseline = true);

// Physical positions of every agent (original coordinates) from a stacked
// augmented state.
std::vector<Eigen::Vector2d> agent_positions(const std::vector<AugmentedGroupPlant>& plants,
                                             const std::vector<int>& state_offsets,
                                             const Vec& x_stacked);

// Physical per-agent states [px py vx vy] in agent order.
std::vector<Eigen::Vector4d> agent_phase_states(const std::vector<AugmentedGroupPlant>& plants,
                                                const std::vector<int>& state_offsets,
                                                const Vec& x_stacked);

}  // namespace hlqr
