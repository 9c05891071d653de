#pragma once

#include <optional>
#include <vector>

#include "hlqr/model.hpp"
#include "hlqr/riccati.hpp"

namespace hlqr {

// Cost separation over agent states: block-diagonal part plus centroid
// coupling expressed through the group-averaging matrix M.
struct SeparatedCost {
  Mat q_bar;       // block_diag of Q_bar_j, pn x pn
  Mat q_tilde;     // (M^T M) (x) I_n, pn x pn
  Mat l_w;         // weighted Laplacian over centroids, Nn x Nn
  Mat coupling;    // (M (x) I_n)^T L_w (M (x) I_n), pn x pn
  Mat q_total;     // q_bar + coupling
  Mat m_centroid;  // N x p averaging matrix (rows sum to 1)
  int agent_dim = 0;
};

// Weighted Laplacian L_w = (D (x) I_n) Q (D^T (x) I_n) with one PSD weight
// per edge. Block (j,l) of an edge is -Q_jl; diagonal blocks sum the
// incident weights.
Mat build_weighted_laplacian(const GroupTopology& topology, int n);

// Builds M, Q_tilde, L_w and the coupling congruence, then spot-checks the
// centroid identity x_av^T L_w x_av = x^T coupling x on random vectors.
SeparatedCost build_separated_cost(const CostSpec& cost, int n);

// One group's plant and weights as used by the decoupled Riccati design.
struct GroupPlantCost {
  Mat a;
  Mat b;
  Mat q_bar;
  Mat r;
};

// Synthesis input: per-group plants/weights plus the PSD coupling over the
// stacked group states. q_tilde optionally carries the unweighted coupling
// pattern for reporting.
struct HierarchyProblem {
  std::vector<GroupPlantCost> groups;
  Mat coupling;
  Mat a_net, b_net, q_bar_net, r_net, q_total;
  std::optional<Mat> q_tilde;

  std::vector<Mat> b_blocks() const;
  std::vector<Mat> r_blocks() const;
};

HierarchyProblem make_problem(std::vector<GroupPlantCost> groups, Mat coupling);
HierarchyProblem make_problem(const NetworkModel& model, const CostSpec& cost);

// Per-group Riccati solutions of the decoupled local equations, solved
// independently (worker per group) and returned in group order. A failed
// group is reported by index.
std::vector<CareSolution> solve_local(const HierarchyProblem& problem, double tol = 1e-9);
std::vector<CareSolution> solve_local(const NetworkModel& model, const CostSpec& cost,
                                      double tol = 1e-9);

struct RTildeResult {
  Mat r_tilde;                    // mp x mp, symmetric
  double coupling_residual = 0.0; // || P B Rt B^T P - coupling ||_F
  double max_block_condition = 0.0;
};

// Least-squares input-weight correction
//   Rt = (B^T P P B)^{-1} B^T P coupling P B (B^T P P B)^{-1},
// computed block-wise so the coupling sparsity carries over exactly.
// Throws on rank-deficient actuation (singular B_j^T P_j P_j B_j).
RTildeResult compute_r_tilde(const std::vector<Mat>& p_blocks,
                             const std::vector<Mat>& b_blocks, const Mat& coupling);

// Same correction from the per-group products phi_j = P_j B_j directly;
// the model-free path recovers these as (R_j K_j)^T without knowing B or P.
RTildeResult r_tilde_from_phi(const std::vector<Mat>& phi_blocks, const Mat& coupling);

// Input-space image of the coupling pattern:
//   diag{(B_i^T P_i P_i B_i)^{-1} B_i^T P_i} Qt diag{P_i B_i (B_i^T P_i P_i B_i)^{-1}}.
Mat compute_q_tilde_prime(const std::vector<CareSolution>& locals,
                          const std::vector<Mat>& b_blocks, const Mat& q_tilde);

struct HierarchicalGain {
  std::vector<Mat> p_blocks;
  Mat p_cal;    // block_diag of P_j
  Mat r_tilde;
  Mat k_local;  // R^{-1} B^T P, block-diagonal
  Mat k_global; // r_tilde B^T P
  Mat k_total;  // k_local + k_global
  Mat r_eff;    // (R^{-1} + r_tilde)^{-1}
  double coupling_residual = 0.0;
};

HierarchicalGain assemble_gain(const std::vector<CareSolution>& locals,
                               const RTildeResult& r_tilde,
                               const std::vector<Mat>& r_blocks,
                               const std::vector<Mat>& b_blocks);

// Full model-based pipeline: local solves, correction, assembly.
HierarchicalGain synthesize(const HierarchyProblem& problem, double care_tol = 1e-9);

struct SuboptimalityReport {
  double j_opt = 0.0;   // optimal cost for the original (Q, R) from x0
  double j_hier = 0.0;  // hierarchical-gain cost on the same (Q, R)
  double ratio = 1.0;   // j_hier / j_opt, >= 1 up to solver tolerance
  double coupling_residual = 0.0;
  double q_tilde_gap = 0.0;  // || Qt - Pi Qt Pi ||_F with Pi the per-group projector
};

// Empirical cost comparison between the hierarchical gain and the true
// optimum of the original objective, both evaluated from the same x0.
SuboptimalityReport suboptimality_report(const HierarchyProblem& problem,
                                         const HierarchicalGain& gain, const Vec& x0,
                                         double care_tol = 1e-9);

}  // namespace hlqr
