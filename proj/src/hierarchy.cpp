#include "hlqr/hierarchy.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <future>
#include <string>

#include "hlqr/errors.hpp"
#include "hlqr/rng.hpp"

namespace hlqr {
namespace {

std::vector<Eigen::Index> block_offsets(const std::vector<Mat>& blocks, bool cols) {
  std::vector<Eigen::Index> offs(blocks.size() + 1, 0);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    offs[i + 1] = offs[i] + (cols ? blocks[i].cols() : blocks[i].rows());
  }
  return offs;
}

double spd_condition(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

Mat build_weighted_laplacian(const GroupTopology& topology, int n) {
  validate_topology(topology);
  for (const Mat& w : topology.edge_weights) {
    if (w.rows() != n) {
      throw DimensionError("build_weighted_laplacian: edge weight must be n x n");
    }
  }
  const int num_groups = topology.num_groups();
  if (topology.edges.empty()) {
    return Mat::Zero(num_groups * n, num_groups * n);
  }
  const Mat d = incidence_from_edges(num_groups, topology.edges);
  const Mat d_kron = kron(d, Mat::Identity(n, n));
  return symmetrize(d_kron * block_diag(topology.edge_weights) * d_kron.transpose());
}

SeparatedCost build_separated_cost(const CostSpec& cost, int n) {
  const GroupTopology& topology = cost.topology;
  const int num_groups = topology.num_groups();
  if (static_cast<int>(cost.q_bar_blocks.size()) != num_groups ||
      static_cast<int>(cost.r_blocks.size()) != num_groups) {
    throw DimensionError("build_separated_cost: block count mismatch");
  }
  int total_agents = 0;
  for (int p_j : topology.group_sizes) total_agents += p_j;

  // Averaging matrix: row j holds 1/p_j over the agents of group j.
  Mat m = Mat::Zero(num_groups, total_agents);
  int col = 0;
  for (int j = 0; j < num_groups; ++j) {
    const int p_j = topology.group_sizes[j];
    if (cost.q_bar_blocks[j].rows() != p_j * n) {
      throw DimensionError("build_separated_cost: Q_bar block dim mismatch in group " +
                           std::to_string(j));
    }
    m.block(j, col, 1, p_j).setConstant(1.0 / p_j);
    col += p_j;
  }

  SeparatedCost sc;
  sc.agent_dim = n;
  sc.m_centroid = m;
  sc.q_bar = block_diag(cost.q_bar_blocks);
  sc.q_tilde = kron(m.transpose() * m, Mat::Identity(n, n));
  sc.l_w = build_weighted_laplacian(topology, n);
  const Mat m_kron = kron(m, Mat::Identity(n, n));
  sc.coupling = symmetrize(m_kron.transpose() * sc.l_w * m_kron);
  sc.q_total = sc.q_bar + sc.coupling;

  // Centroid identity x_av^T L_w x_av = x^T coupling x, spot-checked.
  Rng rng(0x5eedc0de);
  for (int trial = 0; trial < 5; ++trial) {
    Vec x(total_agents * n);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    const Vec x_av = m_kron * x;
    const double lhs = x_av.dot(sc.l_w * x_av);
    const double rhs = x.dot(sc.coupling * x);
    if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, std::abs(lhs))) {
      throw NumericalError("build_separated_cost: centroid cost identity violated");
    }
  }
  return sc;
}

std::vector<Mat> HierarchyProblem::b_blocks() const {
  std::vector<Mat> out;
  out.reserve(groups.size());
  for (const GroupPlantCost& g : groups) out.push_back(g.b);
  return out;
}

std::vector<Mat> HierarchyProblem::r_blocks() const {
  std::vector<Mat> out;
  out.reserve(groups.size());
  for (const GroupPlantCost& g : groups) out.push_back(g.r);
  return out;
}

HierarchyProblem make_problem(std::vector<GroupPlantCost> groups, Mat coupling) {
  if (groups.empty()) {
    throw DimensionError("make_problem: at least one group required");
  }
  HierarchyProblem pb;
  std::vector<Mat> as, bs, qs, rs;
  for (const GroupPlantCost& g : groups) {
    as.push_back(g.a);
    bs.push_back(g.b);
    qs.push_back(g.q_bar);
    rs.push_back(g.r);
  }
  pb.groups = std::move(groups);
  pb.a_net = block_diag(as);
  pb.b_net = block_diag(bs);
  pb.q_bar_net = block_diag(qs);
  pb.r_net = block_diag(rs);
  if (coupling.size() == 0) {
    coupling = Mat::Zero(pb.a_net.rows(), pb.a_net.cols());
  }
  if (coupling.rows() != pb.a_net.rows()) {
    throw DimensionError("make_problem: coupling dims must match stacked state");
  }
  pb.coupling = symmetrize(coupling);
  pb.q_total = pb.q_bar_net + pb.coupling;
  return pb;
}

HierarchyProblem make_problem(const NetworkModel& model, const CostSpec& cost) {
  const int n = model.groups.front().agents.front().state_dim();
  SeparatedCost sc = build_separated_cost(cost, n);
  std::vector<GroupPlantCost> groups;
  for (int j = 0; j < model.num_groups(); ++j) {
    groups.push_back({model.groups[j].a, model.groups[j].b, cost.q_bar_blocks[j],
                      cost.r_blocks[j]});
  }
  HierarchyProblem pb = make_problem(std::move(groups), sc.coupling);
  pb.q_tilde = sc.q_tilde;
  return pb;
}

std::vector<CareSolution> solve_local(const HierarchyProblem& problem, double tol) {
  const std::size_t num_groups = problem.groups.size();
  std::vector<std::future<CareSolution>> futures;
  futures.reserve(num_groups);
  for (std::size_t j = 0; j < num_groups; ++j) {
    futures.push_back(std::async(std::launch::async, [&problem, j, tol] {
      const GroupPlantCost& g = problem.groups[j];
      return solve_care(g.a, g.b, g.q_bar, g.r, tol);
    }));
  }
  std::vector<CareSolution> locals;
  locals.reserve(num_groups);
  for (std::size_t j = 0; j < num_groups; ++j) {
    try {
      locals.push_back(futures[j].get());
    } catch (const std::exception& e) {
      throw NumericalError("solve_local: group " + std::to_string(j) + ": " + e.what());
    }
  }
  return locals;
}

std::vector<CareSolution> solve_local(const NetworkModel& model, const CostSpec& cost,
                                      double tol) {
  return solve_local(make_problem(model, cost), tol);
}

RTildeResult r_tilde_from_phi(const std::vector<Mat>& phi_blocks, const Mat& coupling) {
  if (phi_blocks.empty()) {
    throw DimensionError("r_tilde_from_phi: no blocks");
  }
  const std::size_t num_groups = phi_blocks.size();
  const auto row_offs = block_offsets(phi_blocks, /*cols=*/false);
  const auto col_offs = block_offsets(phi_blocks, /*cols=*/true);
  if (coupling.rows() != row_offs.back()) {
    throw DimensionError("r_tilde_from_phi: coupling dims mismatch");
  }

  // z_j = phi_j (phi_j^T phi_j)^{-1}; then Rt_{jl} = z_j^T coupling_{jl} z_l.
  std::vector<Mat> z(num_groups);
  double max_cond = 0.0;
  for (std::size_t j = 0; j < num_groups; ++j) {
    const Mat gram = phi_blocks[j].transpose() * phi_blocks[j];
    Eigen::LLT<Mat> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("r_tilde_from_phi: rank-deficient actuation in group " +
                           std::to_string(j) + " (B^T P P B singular)");
    }
    max_cond = std::max(max_cond, spd_condition(gram));
    z[j] = llt.solve(phi_blocks[j].transpose()).transpose();
  }

  const Eigen::Index mp = col_offs.back();
  Mat r_tilde = Mat::Zero(mp, mp);
  for (std::size_t j = 0; j < num_groups; ++j) {
    for (std::size_t l = 0; l < num_groups; ++l) {
      const Mat cpl = coupling.block(row_offs[j], row_offs[l], phi_blocks[j].rows(),
                                     phi_blocks[l].rows());
      if (cpl.cwiseAbs().maxCoeff() == 0.0) continue;
      r_tilde.block(col_offs[j], col_offs[l], phi_blocks[j].cols(), phi_blocks[l].cols()) =
          z[j].transpose() * cpl * z[l];
    }
  }
  r_tilde = symmetrize(r_tilde);

  Mat effective = Mat::Zero(coupling.rows(), coupling.cols());
  for (std::size_t j = 0; j < num_groups; ++j) {
    for (std::size_t l = 0; l < num_groups; ++l) {
      effective.block(row_offs[j], row_offs[l], phi_blocks[j].rows(), phi_blocks[l].rows()) =
          phi_blocks[j] *
          r_tilde.block(col_offs[j], col_offs[l], phi_blocks[j].cols(), phi_blocks[l].cols()) *
          phi_blocks[l].transpose();
    }
  }

  RTildeResult out;
  out.r_tilde = std::move(r_tilde);
  out.coupling_residual = (effective - coupling).norm();
  out.max_block_condition = max_cond;
  return out;
}

RTildeResult compute_r_tilde(const std::vector<Mat>& p_blocks,
                             const std::vector<Mat>& b_blocks, const Mat& coupling) {
  if (p_blocks.size() != b_blocks.size() || p_blocks.empty()) {
    throw DimensionError("compute_r_tilde: block count mismatch");
  }
  std::vector<Mat> phi(p_blocks.size());
  for (std::size_t j = 0; j < p_blocks.size(); ++j) {
    phi[j] = p_blocks[j] * b_blocks[j];
  }
  return r_tilde_from_phi(phi, coupling);
}

Mat compute_q_tilde_prime(const std::vector<CareSolution>& locals,
                          const std::vector<Mat>& b_blocks, const Mat& q_tilde) {
  std::vector<Mat> p_blocks;
  p_blocks.reserve(locals.size());
  for (const CareSolution& c : locals) p_blocks.push_back(c.p);
  // Reuse the Rt kernel with the unweighted pattern as "coupling".
  return compute_r_tilde(p_blocks, b_blocks, q_tilde).r_tilde;
}

HierarchicalGain assemble_gain(const std::vector<CareSolution>& locals,
                               const RTildeResult& r_tilde,
                               const std::vector<Mat>& r_blocks,
                               const std::vector<Mat>& b_blocks) {
  if (locals.size() != r_blocks.size() || locals.size() != b_blocks.size()) {
    throw DimensionError("assemble_gain: block count mismatch");
  }
  HierarchicalGain gain;
  std::vector<Mat> k_local_blocks, bt_p_blocks, r_inv_blocks;
  for (std::size_t j = 0; j < locals.size(); ++j) {
    gain.p_blocks.push_back(locals[j].p);
    const Mat bt_p = b_blocks[j].transpose() * locals[j].p;
    bt_p_blocks.push_back(bt_p);
    Eigen::LLT<Mat> llt(symmetrize(r_blocks[j]));
    if (llt.info() != Eigen::Success) {
      throw NumericalError("assemble_gain: R block " + std::to_string(j) + " not PD");
    }
    k_local_blocks.push_back(llt.solve(bt_p));
    r_inv_blocks.push_back(llt.solve(Mat::Identity(r_blocks[j].rows(), r_blocks[j].cols())));
  }
  gain.p_cal = block_diag(gain.p_blocks);
  gain.r_tilde = r_tilde.r_tilde;
  gain.coupling_residual = r_tilde.coupling_residual;
  gain.k_local = block_diag(k_local_blocks);
  gain.k_global = gain.r_tilde * block_diag(bt_p_blocks);
  gain.k_total = gain.k_local + gain.k_global;

  const Mat r_inv_eff = block_diag(r_inv_blocks) + gain.r_tilde;
  Eigen::LLT<Mat> llt(symmetrize(r_inv_eff));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("assemble_gain: effective R^{-1} + Rt not PD");
  }
  gain.r_eff = symmetrize(llt.solve(Mat::Identity(r_inv_eff.rows(), r_inv_eff.cols())));
  return gain;
}

HierarchicalGain synthesize(const HierarchyProblem& problem, double care_tol) {
  const std::vector<CareSolution> locals = solve_local(problem, care_tol);
  std::vector<Mat> p_blocks;
  p_blocks.reserve(locals.size());
  for (const CareSolution& c : locals) p_blocks.push_back(c.p);
  const RTildeResult rt = compute_r_tilde(p_blocks, problem.b_blocks(), problem.coupling);
  return assemble_gain(locals, rt, problem.r_blocks(), problem.b_blocks());
}

SuboptimalityReport suboptimality_report(const HierarchyProblem& problem,
                                         const HierarchicalGain& gain, const Vec& x0,
                                         double care_tol) {
  SuboptimalityReport rep;
  const CareSolution opt =
      solve_care(problem.a_net, problem.b_net, problem.q_total, problem.r_net, care_tol);
  rep.j_opt = closed_loop_cost(problem.a_net, problem.b_net, problem.q_total, problem.r_net,
                               opt.k, x0);
  rep.j_hier = closed_loop_cost(problem.a_net, problem.b_net, problem.q_total, problem.r_net,
                                gain.k_total, x0);
  rep.ratio = rep.j_hier / rep.j_opt;
  rep.coupling_residual = gain.coupling_residual;

  // Gap between the requested coupling pattern and its image under the
  // per-group projector onto range(P_j B_j).
  const Mat& pattern = problem.q_tilde.has_value() ? *problem.q_tilde : problem.coupling;
  std::vector<Mat> projectors;
  const std::vector<Mat> b_blocks = problem.b_blocks();
  for (std::size_t j = 0; j < gain.p_blocks.size(); ++j) {
    const Mat phi = gain.p_blocks[j] * b_blocks[j];
    Eigen::LLT<Mat> llt(phi.transpose() * phi);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("suboptimality_report: singular B^T P P B block");
    }
    projectors.push_back(phi * llt.solve(phi.transpose()));
  }
  const Mat pi = block_diag(projectors);
  rep.q_tilde_gap = (pattern - pi * pattern * pi).norm();
  return rep;
}

}  // namespace hlqr
