#include "hlqr/model.hpp"

#include <Eigen/SVD>
#include <set>
#include <string>

#include "hlqr/errors.hpp"

namespace hlqr {
namespace {

// Numerical rank of the Kalman controllability matrix [B, AB, ..., A^{n-1}B]
// with a relative singular-value cutoff.
int controllability_rank(const Mat& a, const Mat& b, double rel_tol = 1e-8) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Mat ctrb(n, n * m);
  Mat power = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.block(0, k * m, n, m) = power;
    power = a * power;
  }
  Eigen::JacobiSVD<Mat> svd(ctrb);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * sv(0)) ++rank;
  }
  return rank;
}

int observability_rank(const Mat& c, const Mat& a, double rel_tol = 1e-8) {
  const Eigen::Index n = a.rows();
  const Eigen::Index p = c.rows();
  Mat obsv(n * p, n);
  Mat block = c;
  for (Eigen::Index k = 0; k < n; ++k) {
    obsv.block(k * p, 0, p, n) = block;
    block = block * a;
  }
  Eigen::JacobiSVD<Mat> svd(obsv);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * sv(0)) ++rank;
  }
  return rank;
}

Mat symmetric_sqrt(const Mat& q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(q));
  Vec ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

GroupModel make_group(std::vector<AgentDynamics> agents) {
  if (agents.empty()) {
    throw DimensionError("make_group: group must contain at least one agent");
  }
  const int n = agents.front().state_dim();
  const int m = agents.front().input_dim();
  std::vector<Mat> gs, hs;
  gs.reserve(agents.size());
  hs.reserve(agents.size());
  for (const AgentDynamics& ag : agents) {
    if (ag.g.rows() != ag.g.cols()) {
      throw DimensionError("make_group: agent state matrix must be square");
    }
    if (ag.h.rows() != ag.g.rows()) {
      throw DimensionError("make_group: agent input matrix row count mismatch");
    }
    if (ag.state_dim() != n || ag.input_dim() != m) {
      throw DimensionError("make_group: agents within a group must share (n, m)");
    }
    gs.push_back(ag.g);
    hs.push_back(ag.h);
  }
  GroupModel group;
  group.agents = std::move(agents);
  group.a = block_diag(gs);
  group.b = block_diag(hs);
  return group;
}

GroupModel make_group_from_matrices(Mat a, Mat b) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    throw DimensionError("make_group_from_matrices: inconsistent plant dimensions");
  }
  GroupModel group;
  group.agents = {AgentDynamics{a, b}};
  group.a = std::move(a);
  group.b = std::move(b);
  return group;
}

NetworkModel make_network(std::vector<GroupModel> groups) {
  if (groups.empty()) {
    throw DimensionError("make_network: network must contain at least one group");
  }
  std::vector<Mat> as, bs;
  as.reserve(groups.size());
  bs.reserve(groups.size());
  for (const GroupModel& g : groups) {
    as.push_back(g.a);
    bs.push_back(g.b);
  }
  NetworkModel net;
  net.groups = std::move(groups);
  net.a_net = block_diag(as);
  net.b_net = block_diag(bs);
  return net;
}

std::vector<int> NetworkModel::group_state_dims() const {
  std::vector<int> dims;
  dims.reserve(groups.size());
  for (const GroupModel& g : groups) dims.push_back(g.state_dim());
  return dims;
}

std::vector<int> NetworkModel::group_input_dims() const {
  std::vector<int> dims;
  dims.reserve(groups.size());
  for (const GroupModel& g : groups) dims.push_back(g.input_dim());
  return dims;
}

void validate_topology(const GroupTopology& topology) {
  if (topology.edge_weights.size() != topology.edges.size()) {
    throw DimensionError("topology: weight count does not match edge count");
  }
  const int n_groups = topology.num_groups();
  std::set<std::pair<int, int>> seen;
  for (std::size_t e = 0; e < topology.edges.size(); ++e) {
    auto [u, v] = topology.edges[e];
    if (u == v) throw DimensionError("topology: self-loop on group " + std::to_string(u));
    if (u < 0 || v < 0 || u >= n_groups || v >= n_groups) {
      throw DimensionError("topology: edge endpoint out of range");
    }
    auto key = std::minmax(u, v);
    if (!seen.insert(key).second) {
      throw DimensionError("topology: duplicate edge (" + std::to_string(u) + "," +
                           std::to_string(v) + ")");
    }
    const Mat& w = topology.edge_weights[e];
    if (w.rows() != w.cols()) throw DimensionError("topology: edge weight must be square");
    if (min_symmetric_eigenvalue(w) < -1e-9 * std::max(1.0, w.norm())) {
      throw NumericalError("topology: edge weight " + std::to_string(e) + " is not PSD");
    }
  }
}

bool ValidationReport::all_ok() const {
  if (!dims_ok || !network_observable) return false;
  for (const GroupValidation& g : groups) {
    if (!g.controllable || !g.q_bar_psd || !g.r_pd) return false;
  }
  return true;
}

ValidationReport validate(const NetworkModel& model, const CostSpec& cost, const Mat* q_total) {
  ValidationReport report;
  const int n_groups = model.num_groups();
  if (static_cast<int>(cost.q_bar_blocks.size()) != n_groups ||
      static_cast<int>(cost.r_blocks.size()) != n_groups) {
    throw DimensionError("validate: cost block count does not match group count");
  }
  for (int j = 0; j < n_groups; ++j) {
    if (cost.q_bar_blocks[j].rows() != model.groups[j].state_dim() ||
        cost.r_blocks[j].rows() != model.groups[j].input_dim()) {
      throw DimensionError("validate: cost block dims mismatch in group " + std::to_string(j));
    }
  }
  validate_topology(cost.topology);
  report.dims_ok = true;

  for (int j = 0; j < n_groups; ++j) {
    const GroupModel& g = model.groups[j];
    GroupValidation gv;
    gv.controllability_rank = controllability_rank(g.a, g.b);
    gv.controllable = gv.controllability_rank == g.state_dim();
    gv.q_bar_psd = min_symmetric_eigenvalue(cost.q_bar_blocks[j]) >
                   -1e-9 * std::max(1.0, cost.q_bar_blocks[j].norm());
    gv.r_pd = is_spd(cost.r_blocks[j], 1e-12);
    if (!gv.controllable) {
      report.warnings.push_back("group " + std::to_string(j) + ": (A_j, B_j) not controllable " +
                                "(rank " + std::to_string(gv.controllability_rank) + "/" +
                                std::to_string(g.state_dim()) + ")");
    }
    if (!gv.q_bar_psd) {
      report.warnings.push_back("group " + std::to_string(j) + ": Q_bar block not PSD");
    }
    if (!gv.r_pd) {
      report.warnings.push_back("group " + std::to_string(j) + ": R block not PD");
    }
    report.groups.push_back(gv);
  }

  // Observability of (Q^{1/2}, A). Uses the assembled total Q when the caller
  // has it; Q_bar alone is a conservative fallback since adding the PSD
  // coupling term can only enlarge the observable subspace.
  Mat q = q_total != nullptr ? *q_total : block_diag(cost.q_bar_blocks);
  if (q.rows() == model.state_dim()) {
    const int rank = observability_rank(symmetric_sqrt(q), model.a_net);
    report.network_observable = rank == model.state_dim();
    if (!report.network_observable) {
      report.warnings.push_back("(Q^{1/2}, A) not observable (rank " + std::to_string(rank) +
                                "/" + std::to_string(model.state_dim()) + ")");
    }
  }
  return report;
}

}  // namespace hlqr
