#include "hlqr/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hlqr/errors.hpp"
#include "json.hpp"

namespace hlqr {
namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw ConfigError("config: unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

double get_number(const json& obj, const std::string& key, double fallback,
                  double lo = -1e300, double hi = 1e300) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    throw ConfigError("config: field \"" + key + "\" must be a number");
  }
  const double v = obj[key].get<double>();
  if (v < lo || v > hi) {
    throw ConfigError("config: field \"" + key + "\" out of range");
  }
  return v;
}

Eigen::Vector2d get_vec2(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError("config: " + where + " must be a [x, y] pair");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: document must be a JSON object");
  require_keys(doc,
               {"name", "seed", "groups", "targets", "formation_offsets", "edges",
                "q_bar_weight", "r_weight", "qtilde_scale", "sample_period", "sim_step",
                "deploy_step", "horizon", "init_box", "noise_freqs", "care_tol", "adp_eps",
                "adp_max_iters", "out_dir", "csv_period", "input_traces"},
               "top level");
  for (const char* key : {"groups", "targets", "formation_offsets", "edges"}) {
    if (!doc.contains(key)) {
      throw ConfigError(std::string("config: missing required field \"") + key + "\"");
    }
  }

  ScenarioConfig cfg;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ConfigError("config: field \"name\" must be a string");
    cfg.name = doc["name"].get<std::string>();
  }
  FormationScenario& sc = cfg.scenario;

  if (!doc["groups"].is_array() || doc["groups"].empty()) {
    throw ConfigError("config: field \"groups\" must be a non-empty array");
  }
  for (std::size_t j = 0; j < doc["groups"].size(); ++j) {
    const json& g = doc["groups"][j];
    const std::string where = "groups[" + std::to_string(j) + "]";
    if (!g.is_object()) throw ConfigError("config: " + where + " must be an object");
    require_keys(g,
                 {"size", "mass", "damping", "exploration_duration", "noise_amplitude",
                  "k0_mass_guess", "k0_damping_guess"},
                 where);
    ScenarioGroup sg;
    sg.size = static_cast<int>(get_number(g, "size", 1, 1, 64));
    sg.robot.mass = get_number(g, "mass", 1.0, 1e-9);
    sg.robot.damping = get_number(g, "damping", 0.0, 0.0);
    sg.exploration_duration = get_number(g, "exploration_duration", 5.0, 1e-6);
    sg.noise_amplitude = get_number(g, "noise_amplitude", 1.0, 0.0);
    sg.k0_mass_guess = get_number(g, "k0_mass_guess", sg.robot.mass, 1e-9);
    sg.k0_damping_guess = get_number(g, "k0_damping_guess", 0.0, 0.0);
    sc.groups.push_back(sg);
  }

  for (std::size_t j = 0; j < doc["targets"].size(); ++j) {
    sc.targets.push_back(get_vec2(doc["targets"][j], "targets[" + std::to_string(j) + "]"));
  }
  for (std::size_t j = 0; j < doc["formation_offsets"].size(); ++j) {
    std::vector<Eigen::Vector2d> offs;
    const json& list = doc["formation_offsets"][j];
    if (!list.is_array()) {
      throw ConfigError("config: formation_offsets[" + std::to_string(j) +
                        "] must be an array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      offs.push_back(get_vec2(list[i], "formation_offsets[" + std::to_string(j) + "][" +
                                           std::to_string(i) + "]"));
    }
    sc.formation_offsets.push_back(std::move(offs));
  }
  for (std::size_t e = 0; e < doc["edges"].size(); ++e) {
    const json& edge = doc["edges"][e];
    if (!edge.is_array() || edge.size() != 2 || !edge[0].is_number_integer() ||
        !edge[1].is_number_integer()) {
      throw ConfigError("config: edges[" + std::to_string(e) + "] must be [group, group]");
    }
    sc.edges.emplace_back(edge[0].get<int>(), edge[1].get<int>());
  }

  sc.seed = static_cast<std::uint64_t>(get_number(doc, "seed", 1, 0, 9.007e15));
  sc.q_bar_weight = get_number(doc, "q_bar_weight", 0.1, 0.0);
  sc.r_weight = get_number(doc, "r_weight", 1.0, 1e-12);
  sc.qtilde_scale = get_number(doc, "qtilde_scale", 0.1, 0.0);
  sc.sample_period = get_number(doc, "sample_period", 0.01, 1e-9);
  sc.sim_step = get_number(doc, "sim_step", 5e-4, 1e-9);
  sc.deploy_step = get_number(doc, "deploy_step", 0.0, 0.0);
  sc.horizon = get_number(doc, "horizon", 40.0, 1e-6);
  sc.init_box = get_number(doc, "init_box", 8.0, 0.0);
  sc.noise_freqs = static_cast<int>(get_number(doc, "noise_freqs", 24, 1, 4096));
  sc.care_tol = get_number(doc, "care_tol", 1e-9, 1e-15, 1e-3);
  sc.adp_eps = get_number(doc, "adp_eps", 1e-3, 0.0);
  sc.adp_max_iters = static_cast<int>(get_number(doc, "adp_max_iters", 30, 1, 10000));

  if (doc.contains("out_dir")) {
    if (!doc["out_dir"].is_string()) {
      throw ConfigError("config: field \"out_dir\" must be a string");
    }
    cfg.out_dir = doc["out_dir"].get<std::string>();
  }
  cfg.csv_period = get_number(doc, "csv_period", 0.01, 1e-9);
  if (doc.contains("input_traces")) {
    for (std::size_t i = 0; i < doc["input_traces"].size(); ++i) {
      const json& tr = doc["input_traces"][i];
      if (!tr.is_array() || tr.size() != 2 || !tr[0].is_number_integer() ||
          !tr[1].is_number_integer()) {
        throw ConfigError("config: input_traces[" + std::to_string(i) +
                          "] must be [group, agent]");
      }
      cfg.input_traces.emplace_back(tr[0].get<int>(), tr[1].get<int>());
    }
  }

  try {
    validate_scenario(sc);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " (while validating \"" + cfg.name + "\")");
  }
  for (auto [g, a] : cfg.input_traces) {
    if (g < 0 || g >= sc.num_groups() || a < 0 || a >= sc.groups[g].size) {
      throw ConfigError("config: input_traces entry out of range");
    }
  }
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  const FormationScenario& sc = cfg.scenario;
  json doc;
  doc["name"] = cfg.name;
  doc["seed"] = sc.seed;
  doc["groups"] = json::array();
  for (const ScenarioGroup& g : sc.groups) {
    doc["groups"].push_back({{"size", g.size},
                             {"mass", g.robot.mass},
                             {"damping", g.robot.damping},
                             {"exploration_duration", g.exploration_duration},
                             {"noise_amplitude", g.noise_amplitude},
                             {"k0_mass_guess", g.k0_mass_guess},
                             {"k0_damping_guess", g.k0_damping_guess}});
  }
  doc["targets"] = json::array();
  for (const auto& t : sc.targets) doc["targets"].push_back({t.x(), t.y()});
  doc["formation_offsets"] = json::array();
  for (const auto& group_offs : sc.formation_offsets) {
    json list = json::array();
    for (const auto& o : group_offs) list.push_back({o.x(), o.y()});
    doc["formation_offsets"].push_back(std::move(list));
  }
  doc["edges"] = json::array();
  for (auto [u, v] : sc.edges) doc["edges"].push_back({u, v});
  doc["q_bar_weight"] = sc.q_bar_weight;
  doc["r_weight"] = sc.r_weight;
  doc["qtilde_scale"] = sc.qtilde_scale;
  doc["sample_period"] = sc.sample_period;
  doc["sim_step"] = sc.sim_step;
  doc["deploy_step"] = sc.deploy_step;
  doc["horizon"] = sc.horizon;
  doc["init_box"] = sc.init_box;
  doc["noise_freqs"] = sc.noise_freqs;
  doc["care_tol"] = sc.care_tol;
  doc["adp_eps"] = sc.adp_eps;
  doc["adp_max_iters"] = sc.adp_max_iters;
  doc["out_dir"] = cfg.out_dir;
  doc["csv_period"] = cfg.csv_period;
  doc["input_traces"] = json::array();
  for (auto [g, a] : cfg.input_traces) doc["input_traces"].push_back({g, a});
  return doc.dump(2) + "\n";
}

std::vector<std::string> preset_names() { return {"paper-4groups", "paper-4groups-10x"}; }

ScenarioConfig preset_config(const std::string& name) {
  if (name != "paper-4groups" && name != "paper-4groups-10x") {
    throw ConfigError("config: unknown preset \"" + name + "\"");
  }
  ScenarioConfig cfg;
  cfg.name = name;
  FormationScenario& sc = cfg.scenario;

  // Four groups of planar robots: sizes (3, 4, 4, 3), mass j, damping 0.1/j,
  // star topology with group 4 as hub. The exploration windows are sized so
  // the excitation rank condition is actually reachable at these group
  // dimensions (279 and 492 unknowns); see the README notes on learning time.
  const int sizes[4] = {3, 4, 4, 3};
  const double explore[4] = {40.0, 60.0, 60.0, 50.0};
  const double amplitude[4] = {10.0, 10.0, 10.0, 20.0};
  for (int j = 0; j < 4; ++j) {
    ScenarioGroup g;
    g.size = sizes[j];
    g.robot.mass = static_cast<double>(j + 1);
    g.robot.damping = 0.1 / static_cast<double>(j + 1);
    g.exploration_duration = explore[j];
    g.noise_amplitude = amplitude[j];
    g.k0_mass_guess = 1.3 * g.robot.mass;
    g.k0_damping_guess = 0.0;
    sc.groups.push_back(g);
  }
  sc.targets = {{5.0, 5.0}, {5.0, -5.0}, {-5.0, 5.0}, {-5.0, -5.0}};

  // Unit equilateral triangle and unit square, axis-aligned, relative to
  // agent 1.
  const std::vector<Eigen::Vector2d> triangle = {{1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
  const std::vector<Eigen::Vector2d> square = {{1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  sc.formation_offsets = {triangle, square, square, triangle};
  sc.edges = {{0, 3}, {1, 3}, {2, 3}};

  sc.q_bar_weight = 0.1;
  sc.r_weight = 1.0;
  sc.qtilde_scale = name == "paper-4groups-10x" ? 1.0 : 0.1;
  sc.sample_period = 0.01;
  sc.sim_step = 1e-4;
  sc.deploy_step = 1e-3;
  sc.horizon = 40.0;
  sc.init_box = 8.0;
  sc.seed = 20240314;
  sc.noise_freqs = 24;
  sc.care_tol = 1e-9;
  sc.adp_eps = 1e-2;
  sc.adp_max_iters = 30;

  cfg.out_dir = "out";
  cfg.csv_period = 0.01;
  cfg.input_traces = {{0, 0}, {2, 2}};
  return cfg;
}

}  // namespace hlqr
