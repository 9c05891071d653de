#include "hlqr/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "hlqr/errors.hpp"
#include "json.hpp"

namespace hlqr {
namespace {

using nlohmann::json;

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json group_reports_json(const ExperimentReport& rep) {
  json groups = json::array();
  for (const GroupLearnReport& g : rep.groups) {
    groups.push_back({{"unknowns", g.unknowns},
                      {"data_rows", g.data_rows},
                      {"rank", g.rank},
                      {"rank_ok", g.rank_ok},
                      {"iterations", g.iterations},
                      {"update_history", g.history},
                      {"ls_condition", g.ls_condition},
                      {"gain_error_rel", g.gain_error_rel},
                      {"k_learned", mat_to_json(g.k_learned)},
                      {"k_oracle", mat_to_json(g.k_oracle)}});
  }
  return groups;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string synth_report_json(const ScenarioConfig& config, const SynthResult& result) {
  json doc;
  doc["scenario"] = config.name;
  doc["qtilde_scale"] = config.scenario.qtilde_scale;
  json locals = json::array();
  for (std::size_t j = 0; j < result.locals.size(); ++j) {
    locals.push_back({{"group", j},
                      {"are_residual", result.locals[j].residual_norm},
                      {"positive_definite", result.locals[j].positive_definite},
                      {"p", mat_to_json(result.locals[j].p)}});
  }
  doc["locals"] = std::move(locals);
  doc["r_tilde"] = mat_to_json(result.gain.r_tilde);
  doc["k_local"] = mat_to_json(result.gain.k_local);
  doc["k_global"] = mat_to_json(result.gain.k_global);
  doc["k_total"] = mat_to_json(result.gain.k_total);
  doc["coupling_residual"] = result.gain.coupling_residual;
  doc["cost"] = {{"j_opt", result.subopt.j_opt},
                 {"j_hier", result.subopt.j_hier},
                 {"ratio", result.subopt.ratio},
                 {"q_tilde_gap", result.subopt.q_tilde_gap}};
  return doc.dump(2) + "\n";
}

std::string learn_report_json(const ScenarioConfig& config, const ExperimentReport& rep) {
  json doc;
  doc["scenario"] = config.name;
  doc["seed"] = config.scenario.seed;
  doc["qtilde_scale"] = config.scenario.qtilde_scale;
  doc["groups"] = group_reports_json(rep);
  doc["centralized_unknowns"] = rep.centralized_unknowns;
  doc["t_sync"] = rep.t_sync;
  doc["k_global"] = mat_to_json(rep.k_global_learned);
  doc["k_total"] = mat_to_json(rep.k_total_learned);
  doc["deployment"] = {{"hurwitz", rep.deployed_hurwitz},
                       {"spectral_abscissa", rep.deployed_abscissa},
                       {"final_formation_errors", rep.final_formation_errors},
                       {"final_centroid_errors", rep.final_centroid_errors},
                       {"max_formation_error", rep.max_formation_error},
                       {"max_centroid_error", rep.max_centroid_error}};
  doc["cost"] = {{"j_opt", rep.j_opt},
                 {"j_hier_learned", rep.j_hier_learned},
                 {"j_hier_model", rep.j_hier_model},
                 {"ratio_learned", rep.cost_ratio_learned},
                 {"ratio_model", rep.cost_ratio_model}};
  doc["coupling_residual"] = rep.coupling_residual;
  doc["x0"] = vec_to_json(rep.x0);
  return doc.dump(2) + "\n";
}

std::string compare_report_json(const ScenarioConfig& config, const ExperimentReport& rep,
                                const std::vector<CostRatioEntry>& cost_table) {
  json doc = json::parse(learn_report_json(config, rep));
  json table = json::array();
  for (const CostRatioEntry& e : cost_table) {
    table.push_back({{"qtilde_scale", e.qtilde_scale},
                     {"j_opt", e.j_opt},
                     {"j_hier", e.j_hier},
                     {"ratio", e.ratio}});
  }
  doc["cost_ratio_table"] = std::move(table);
  doc["sup_trajectory_deviation"] = rep.sup_deviation;
  return doc.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file \"" + path + "\"");
  out << content;
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<AugmentedGroupPlant>& plants,
                          const std::vector<int>& state_offsets,
                          const std::vector<int>& input_offsets, const TrajectoryLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file \"" + path + "\"");
  out << "time";
  for (std::size_t j = 0; j < plants.size(); ++j) {
    for (int i = 0; i < plants[j].p; ++i) {
      const std::string tag = "g" + std::to_string(j + 1) + "_a" + std::to_string(i + 1);
      out << "," << tag << "_px," << tag << "_py," << tag << "_vx," << tag << "_vy," << tag
          << "_ux," << tag << "_uy";
    }
  }
  out << "\n";
  for (std::size_t k = 0; k < log.states.size(); ++k) {
    out << format_number(log.times[k]);
    const auto phase = agent_phase_states(plants, state_offsets, log.states[k]);
    std::size_t agent = 0;
    for (std::size_t j = 0; j < plants.size(); ++j) {
      const Vec u = log.inputs[k].segment(input_offsets[j], plants[j].input_dim());
      for (int i = 0; i < plants[j].p; ++i, ++agent) {
        out << "," << format_number(phase[agent](0)) << "," << format_number(phase[agent](1))
            << "," << format_number(phase[agent](2)) << "," << format_number(phase[agent](3))
            << "," << format_number(u(2 * i)) << "," << format_number(u(2 * i + 1));
      }
    }
    out << "\n";
  }
}

namespace {

constexpr int kSvgWidth = 760;
constexpr int kSvgHeight = 600;
constexpr int kMargin = 55;

const char* group_color(std::size_t j) {
  static const char* colors[] = {"#d62728", "#111111", "#2ca02c", "#1f77b4",
                                 "#9467bd", "#8c564b"};
  return colors[j % 6];
}

struct Bounds {
  double x_min = std::numeric_limits<double>::max();
  double x_max = std::numeric_limits<double>::lowest();
  double y_min = std::numeric_limits<double>::max();
  double y_max = std::numeric_limits<double>::lowest();
  void include(double x, double y) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
  void pad() {
    const double dx = std::max(1e-6, 0.06 * (x_max - x_min));
    const double dy = std::max(1e-6, 0.06 * (y_max - y_min));
    x_min -= dx;
    x_max += dx;
    y_min -= dy;
    y_max += dy;
  }
};

class SvgCanvas {
 public:
  SvgCanvas(Bounds b, std::string title, std::string x_label, std::string y_label)
      : b_(b) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
             std::to_string(kSvgWidth) + "\" height=\"" + std::to_string(kSvgHeight) +
             "\" viewBox=\"0 0 " + std::to_string(kSvgWidth) + " " +
             std::to_string(kSvgHeight) + "\">\n";
    body_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    body_ += "<rect x=\"" + std::to_string(kMargin) + "\" y=\"" + std::to_string(kMargin) +
             "\" width=\"" + std::to_string(kSvgWidth - 2 * kMargin) + "\" height=\"" +
             std::to_string(kSvgHeight - 2 * kMargin) +
             "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    body_ += "<text x=\"" + std::to_string(kSvgWidth / 2) + "\" y=\"28\" font-size=\"15\" " +
             "text-anchor=\"middle\" font-family=\"sans-serif\">" + title + "</text>\n";
    body_ += "<text x=\"" + std::to_string(kSvgWidth / 2) + "\" y=\"" +
             std::to_string(kSvgHeight - 12) +
             "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
             x_label + "</text>\n";
    body_ += "<text x=\"16\" y=\"" + std::to_string(kSvgHeight / 2) +
             "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" " +
             "transform=\"rotate(-90 16 " + std::to_string(kSvgHeight / 2) + ")\">" + y_label +
             "</text>\n";
    axes();
  }

  double px(double x) const {
    return kMargin + (x - b_.x_min) / (b_.x_max - b_.x_min) * (kSvgWidth - 2 * kMargin);
  }
  double py(double y) const {
    return kSvgHeight - kMargin -
           (y - b_.y_min) / (b_.y_max - b_.y_min) * (kSvgHeight - 2 * kMargin);
  }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& color, const std::string& dash, double width) {
    if (xs.size() < 2) return;
    std::string pts;
    // Thin dense traces so files stay small; 1500 points per path is plenty.
    const std::size_t stride = std::max<std::size_t>(1, xs.size() / 1500);
    for (std::size_t i = 0; i < xs.size(); i += stride) {
      pts += format_number(px(xs[i])) + "," + format_number(py(ys[i])) + " ";
    }
    pts += format_number(px(xs.back())) + "," + format_number(py(ys.back()));
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
             format_number(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += " points=\"" + pts + "\"/>\n";
  }

  void plus_mark(double x, double y, const std::string& color) {
    const double cx = px(x), cy = py(y), r = 7.0;
    body_ += "<path d=\"M " + format_number(cx - r) + " " + format_number(cy) + " H " +
             format_number(cx + r) + " M " + format_number(cx) + " " + format_number(cy - r) +
             " V " + format_number(cy + r) + "\" stroke=\"" + color +
             "\" stroke-width=\"2.4\"/>\n";
  }

  void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    double y = kMargin + 18;
    for (const auto& [label, dash] : entries) {
      const double x0 = kSvgWidth - kMargin - 190;
      body_ += "<line x1=\"" + format_number(x0) + "\" y1=\"" + format_number(y - 4) +
               "\" x2=\"" + format_number(x0 + 36) + "\" y2=\"" + format_number(y - 4) +
               "\" stroke=\"#333\" stroke-width=\"2\"";
      if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
      body_ += "/>\n";
      body_ += "<text x=\"" + format_number(x0 + 44) + "\" y=\"" + format_number(y) +
               "\" font-size=\"12\" font-family=\"sans-serif\">" + label + "</text>\n";
      y += 18;
    }
  }

  std::string finish() { return body_ + "</svg>\n"; }

 private:
  void axes() {
    for (int k = 0; k <= 5; ++k) {
      const double fx = b_.x_min + k * (b_.x_max - b_.x_min) / 5.0;
      const double fy = b_.y_min + k * (b_.y_max - b_.y_min) / 5.0;
      body_ += "<text x=\"" + format_number(px(fx)) + "\" y=\"" +
               std::to_string(kSvgHeight - kMargin + 18) +
               "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
               format_number(std::round(fx * 100.0) / 100.0) + "</text>\n";
      body_ += "<text x=\"" + std::to_string(kMargin - 8) + "\" y=\"" +
               format_number(py(fy) + 4) +
               "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" +
               format_number(std::round(fy * 100.0) / 100.0) + "</text>\n";
    }
  }

  Bounds b_;
  std::string body_;
};

constexpr const char* kLearnedDash = "9 3 2 3";  // dash-dotted

}  // namespace

void write_trajectory_svg(const std::string& path, const FormationScenario& scenario,
                          const std::vector<AugmentedGroupPlant>& plants,
                          const std::vector<int>& state_offsets, const TrajectoryLog& learned,
                          const TrajectoryLog& baseline) {
  // Per-agent position traces for both runs.
  const std::size_t num_agents = [&] {
    std::size_t n = 0;
    for (const auto& pl : plants) n += pl.p;
    return n;
  }();
  auto traces = [&](const TrajectoryLog& log) {
    std::vector<std::vector<double>> xs(num_agents), ys(num_agents);
    for (const Vec& x : log.states) {
      const auto pos = agent_positions(plants, state_offsets, x);
      for (std::size_t a = 0; a < pos.size(); ++a) {
        xs[a].push_back(pos[a].x());
        ys[a].push_back(pos[a].y());
      }
    }
    return std::pair(xs, ys);
  };
  const auto [lx, ly] = traces(learned);
  const auto [bx, by] = traces(baseline);

  Bounds b;
  for (std::size_t a = 0; a < num_agents; ++a) {
    for (std::size_t i = 0; i < lx[a].size(); ++i) b.include(lx[a][i], ly[a][i]);
    for (std::size_t i = 0; i < bx[a].size(); ++i) b.include(bx[a][i], by[a][i]);
  }
  for (const auto& t : scenario.targets) b.include(t.x(), t.y());
  b.pad();

  SvgCanvas svg(b, "Agent trajectories", "x (meters)", "y (meters)");
  std::size_t agent = 0;
  for (std::size_t j = 0; j < plants.size(); ++j) {
    for (int i = 0; i < plants[j].p; ++i, ++agent) {
      if (!bx[agent].empty()) {
        svg.polyline(bx[agent], by[agent], group_color(j), "", 1.6);
      }
      svg.polyline(lx[agent], ly[agent], group_color(j), kLearnedDash, 1.4);
    }
  }
  for (std::size_t j = 0; j < scenario.targets.size(); ++j) {
    svg.plus_mark(scenario.targets[j].x(), scenario.targets[j].y(), group_color(j));
  }
  svg.legend({{"optimal control", ""}, {"learned control", kLearnedDash}});
  write_text_file(path, svg.finish());
}

void write_input_svg(const std::string& path, const std::vector<AugmentedGroupPlant>& plants,
                     const std::vector<int>& input_offsets, int group, int agent,
                     const TrajectoryLog& learned, const TrajectoryLog& baseline) {
  if (group < 0 || group >= static_cast<int>(plants.size()) || agent < 0 ||
      agent >= plants[group].p) {
    throw ConfigError("write_input_svg: (group, agent) out of range");
  }
  const int off = input_offsets[group] + 2 * agent;
  auto component = [&](const TrajectoryLog& log, int c) {
    std::vector<double> out;
    out.reserve(log.inputs.size());
    for (const Vec& u : log.inputs) out.push_back(u(off + c));
    return out;
  };
  const auto lux = component(learned, 0), luy = component(learned, 1);
  const auto bux = baseline.inputs.empty() ? std::vector<double>{} : component(baseline, 0);
  const auto buy = baseline.inputs.empty() ? std::vector<double>{} : component(baseline, 1);

  Bounds b;
  for (std::size_t i = 0; i < learned.times.size(); ++i) {
    b.include(learned.times[i], lux[i]);
    b.include(learned.times[i], luy[i]);
  }
  for (std::size_t i = 0; i < baseline.times.size(); ++i) {
    b.include(baseline.times[i], bux[i]);
    b.include(baseline.times[i], buy[i]);
  }
  b.pad();

  SvgCanvas svg(b,
                "Control input, group " + std::to_string(group + 1) + " agent " +
                    std::to_string(agent + 1),
                "time (s)", "u (N)");
  if (!bux.empty()) {
    svg.polyline(baseline.times, bux, "#d62728", "", 1.5);
    svg.polyline(baseline.times, buy, "#1f77b4", "", 1.5);
  }
  svg.polyline(learned.times, lux, "#d62728", kLearnedDash, 1.3);
  svg.polyline(learned.times, luy, "#1f77b4", kLearnedDash, 1.3);
  svg.legend({{"u_x optimal", ""},
              {"u_x learned", kLearnedDash},
              {"u_y optimal", ""},
              {"u_y learned", kLearnedDash}});
  write_text_file(path, svg.finish());
}

}  // namespace hlqr
