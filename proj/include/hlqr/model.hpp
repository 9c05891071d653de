#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hlqr/mats.hpp"

namespace hlqr {

// Single agent in state-space form: xdot = g x + h u.
struct AgentDynamics {
  Mat g;  // n x n
  Mat h;  // n x m
  int state_dim() const { return static_cast<int>(g.rows()); }
  int input_dim() const { return static_cast<int>(h.cols()); }
};

// A group stacks agents block-diagonally; all agents share (n, m).
struct GroupModel {
  std::vector<AgentDynamics> agents;
  Mat a;  // block_diag of agent g's
  Mat b;  // block_diag of agent h's
  int size() const { return static_cast<int>(agents.size()); }
  int state_dim() const { return static_cast<int>(a.rows()); }
  int input_dim() const { return static_cast<int>(b.cols()); }
};

GroupModel make_group(std::vector<AgentDynamics> agents);

// Wraps an already-assembled group plant (used when the group matrices come
// from a coordinate transform rather than a block-diagonal stack).
GroupModel make_group_from_matrices(Mat a, Mat b);

struct NetworkModel {
  std::vector<GroupModel> groups;
  Mat a_net;  // block_diag of group a's
  Mat b_net;  // block_diag of group b's
  int num_groups() const { return static_cast<int>(groups.size()); }
  int state_dim() const { return static_cast<int>(a_net.rows()); }
  int input_dim() const { return static_cast<int>(b_net.cols()); }
  std::vector<int> group_state_dims() const;
  std::vector<int> group_input_dims() const;
};

NetworkModel make_network(std::vector<GroupModel> groups);

// Undirected inter-group topology with PSD n x n edge weights.
struct GroupTopology {
  std::vector<int> group_sizes;                  // p_j
  std::vector<std::pair<int, int>> edges;        // unordered pairs, no self-loops
  std::vector<Mat> edge_weights;                 // one PSD weight per edge
  int num_groups() const { return static_cast<int>(group_sizes.size()); }
};

void validate_topology(const GroupTopology& topology);

// Separated performance weights: block-diagonal state/input weights plus the
// centroid coupling carried by the topology.
struct CostSpec {
  std::vector<Mat> q_bar_blocks;  // PSD, one per group
  std::vector<Mat> r_blocks;      // PD, one per group
  GroupTopology topology;
};

struct GroupValidation {
  bool controllable = false;
  int controllability_rank = 0;
  bool q_bar_psd = false;
  bool r_pd = false;
};

struct ValidationReport {
  bool dims_ok = false;
  std::vector<GroupValidation> groups;
  bool network_observable = false;  // (Q^{1/2}, A) pair
  std::vector<std::string> warnings;
  bool all_ok() const;
};

// Structural checks: per-group controllability, observability of the total
// cost pair, and definiteness of the weights. Failures are reported as
// warnings (data-driven learning may still be possible); only dimension
// mismatches throw. Pass the assembled total Q (Q_bar + coupling) when
// available; otherwise the observability check falls back to Q_bar.
ValidationReport validate(const NetworkModel& model, const CostSpec& cost,
                          const Mat* q_total = nullptr);

}  // namespace hlqr
