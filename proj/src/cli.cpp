#include "hlqr/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "hlqr/errors.hpp"

namespace hlqr {
namespace {

namespace fs = std::filesystem;

SynthResult run_synth(const FormationScenario& scenario) {
  const ScenarioSetup setup = build_scenario_setup(scenario);
  SynthResult result;
  result.locals = solve_local(setup.problem, scenario.care_tol);
  std::vector<Mat> p_blocks;
  for (const CareSolution& c : result.locals) p_blocks.push_back(c.p);
  const RTildeResult rt =
      compute_r_tilde(p_blocks, setup.problem.b_blocks(), setup.problem.coupling);
  result.gain = assemble_gain(result.locals, rt, setup.problem.r_blocks(),
                              setup.problem.b_blocks());
  result.subopt = suboptimality_report(setup.problem, result.gain, setup.x0,
                                       scenario.care_tol);
  return result;
}

CostRatioEntry cost_ratio_at_scale(const FormationScenario& base, double scale) {
  FormationScenario scenario = base;
  scenario.qtilde_scale = scale;
  const SynthResult synth = run_synth(scenario);
  return {scale, synth.subopt.j_opt, synth.subopt.j_hier, synth.subopt.ratio};
}

void ensure_out_dir(const ScenarioConfig& config, bool with_plots = false) {
  fs::create_directories(config.out_dir);
  if (with_plots) fs::create_directories(fs::path(config.out_dir) / "plots");
}

}  // namespace

void cmd_synth(const ScenarioConfig& config) {
  ensure_out_dir(config);
  const SynthResult result = run_synth(config.scenario);
  write_text_file((fs::path(config.out_dir) / "report.json").string(),
                  synth_report_json(config, result));
  std::cout << "synth: cost ratio " << result.subopt.ratio << ", coupling residual "
            << result.gain.coupling_residual << "\n";
}

void cmd_learn(const ScenarioConfig& config) {
  ensure_out_dir(config);
  const ExperimentReport rep =
      run_experiment(config.scenario, config.csv_period, /*with_baseline=*/false);
  write_text_file((fs::path(config.out_dir) / "report.json").string(),
                  learn_report_json(config, rep));
  write_trajectory_csv((fs::path(config.out_dir) / "traj_learn.csv").string(), rep.plants,
                       rep.state_offsets, rep.input_offsets, rep.run_log);
  std::cout << "learn: max gain error ";
  double worst = 0.0;
  for (const GroupLearnReport& g : rep.groups) worst = std::max(worst, g.gain_error_rel);
  std::cout << worst << ", max centroid error " << rep.max_centroid_error << " m\n";
}

void cmd_compare(const ScenarioConfig& config) {
  ensure_out_dir(config, /*with_plots=*/true);
  const ExperimentReport rep =
      run_experiment(config.scenario, config.csv_period, /*with_baseline=*/true);

  std::vector<CostRatioEntry> table;
  for (double scale : {0.1, 1.0}) {
    table.push_back(cost_ratio_at_scale(config.scenario, scale));
  }

  write_text_file((fs::path(config.out_dir) / "report.json").string(),
                  compare_report_json(config, rep, table));
  write_trajectory_csv((fs::path(config.out_dir) / "traj_learn.csv").string(), rep.plants,
                       rep.state_offsets, rep.input_offsets, rep.run_log);
  write_trajectory_csv((fs::path(config.out_dir) / "traj_baseline.csv").string(), rep.plants,
                       rep.state_offsets, rep.input_offsets, rep.baseline_log);
  write_trajectory_svg((fs::path(config.out_dir) / "plots" / "trajectories.svg").string(),
                       config.scenario, rep.plants, rep.state_offsets, rep.run_log,
                       rep.baseline_log);
  for (auto [g, a] : config.input_traces) {
    const std::string file =
        "inputs_g" + std::to_string(g + 1) + "_a" + std::to_string(a + 1) + ".svg";
    write_input_svg((fs::path(config.out_dir) / "plots" / file).string(), rep.plants,
                    rep.input_offsets, g, a, rep.run_log, rep.baseline_log);
  }
  std::cout << "compare: ratio@0.1 " << table[0].ratio << ", ratio@1.0 " << table[1].ratio
            << ", sup deviation " << rep.sup_deviation << " m\n";
}

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Hierarchical LQR synthesis and model-free learning for grouped "
               "multi-agent systems"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> qtilde_scale;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Scenario config JSON file");
    sub->add_option("--preset", preset, "Built-in preset name");
    sub->add_option("--out", out_dir, "Output directory (overrides config)");
    sub->add_option("--seed", seed, "Seed override");
    sub->add_option("--qtilde-scale", qtilde_scale, "Coupling scale override");
  };
  CLI::App* synth = app.add_subcommand("synth", "Model-based hierarchical synthesis");
  CLI::App* learn = app.add_subcommand("learn", "Model-free learning pipeline");
  CLI::App* compare = app.add_subcommand("compare", "Learned vs optimal comparison");
  add_common(synth);
  add_common(learn);
  add_common(compare);

  std::vector<const char*> argv;
  argv.push_back("hlqr");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ScenarioConfig config;
    if (!config_path.empty() && !preset.empty()) {
      throw ConfigError("config: pass either --config or --preset, not both");
    }
    if (!config_path.empty()) {
      config = load_config_file(config_path);
    } else if (!preset.empty()) {
      config = preset_config(preset);
    } else {
      throw ConfigError("config: one of --config or --preset is required");
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed.has_value()) config.scenario.seed = *seed;
    if (qtilde_scale.has_value()) {
      if (*qtilde_scale < 0.0) throw ConfigError("config: qtilde-scale must be >= 0");
      config.scenario.qtilde_scale = *qtilde_scale;
    }

    if (synth->parsed()) cmd_synth(config);
    if (learn->parsed()) cmd_learn(config);
    if (compare->parsed()) cmd_compare(config);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ExcitationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace hlqr
