#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hlqr/mats.hpp"

namespace hlqr {

// Uniformly sampled closed-loop run: states, applied inputs and the
// exploration component, logged on a fine grid whose spacing divides the
// sampling period so the data integrals can be quadratured between samples.
struct TrajectoryLog {
  double step = 0.0;           // spacing of logged rows (s)
  double sample_period = 0.0;  // T (s); an integer multiple of step
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> inputs;  // input applied during collection
  std::vector<Vec> noise;   // exploration part of the input

  int substeps_per_sample() const;
  int num_samples() const;  // number l of complete sample intervals
  int state_dim() const;
  int input_dim() const;
};

// Learning data matrices. delta_xx and i_xx use the half-vectorized
// quadratic monomials (off-diagonal terms doubled, so row * vecs(S) equals
// the x^T S x increment/integral for symmetric S); i_xu holds the integrals
// of x (x) u. rank_ok certifies the excitation condition
// rank([i_xx, i_xu]) = n(n+1)/2 + n m.
struct AdpData {
  Mat delta_xx;  // l x n(n+1)/2
  Mat i_xx;      // l x n(n+1)/2
  Mat i_xu;      // l x (n m)
  int n = 0;
  int m = 0;
  int rank = 0;
  bool rank_ok = false;
  int unknown_count() const { return vecs_length(n) + n * m; }
};

// Number of unknowns solved per iteration for an (n, m) plant.
inline int adp_unknown_count(int n, int m) { return n * (n + 1) / 2 + n * m; }

// Builds the data matrices from a log via composite trapezoidal quadrature
// over the substeps of each sample interval.
AdpData build_adp_data(const TrajectoryLog& log);

// Streaming equivalent of build_adp_data for long runs whose fine-grid log
// would not fit comfortably in memory: feed every integration step in order
// and call finish() once. Produces bit-identical matrices to the log-based
// path.
class AdpDataAccumulator {
 public:
  // substeps = sample_period / step, num_samples = row count l.
  AdpDataAccumulator(int n, int m, int substeps, double step, int num_samples);
  void add(long step_index, const Vec& x, const Vec& u);
  AdpData finish();

 private:
  int n_, m_, substeps_, num_samples_;
  double step_;
  int row_ = 0;
  AdpData data_;
  Vec quad_first_;  // monomials at the row's left boundary
};

struct LearnResult {
  Mat p_learned;  // symmetric by parametrization
  Mat k_learned;
  int iterations = 0;
  std::vector<double> history;  // ||P_k - P_{k-1}||_F per iteration
  double ls_condition = 0.0;    // worst least-squares condition estimate seen
};

// Off-policy policy iteration on recorded data: at each step solves
//   [delta_xx, -2 i_xx (I (x) K_k^T R) - 2 i_xu (I (x) R)] [vecs(P); vec(K)]
//     = -i_xx vecs(Q_bar + K_k^T R K_k)
// in the least-squares sense and stops when ||P_k - P_{k-1}||_F < eps.
// With exact data the iterates coincide with Kleinman's. Throws
// ExcitationError when rank_ok is false and ConvergenceError past max_iters.
// If p_history is given, the per-iteration P_k are appended.
LearnResult adp_learn(const AdpData& data, const Mat& k0, const Mat& q_bar, const Mat& r,
                      double eps, int max_iters, std::vector<Mat>* p_history = nullptr);

// Deterministic seeded sum-of-sinusoids exploration signal. Per channel,
// num_freqs frequencies drawn uniformly from [0.5, 25] rad/s with phases in
// [0, 2 pi); identical seeds reproduce the signal bit for bit.
class ExplorationNoise {
 public:
  ExplorationNoise(int dims, std::uint64_t seed, int num_freqs, double amplitude);
  Vec operator()(double t) const;
  int dims() const { return static_cast<int>(freqs_.size()); }

 private:
  std::vector<std::vector<double>> freqs_;   // per channel
  std::vector<std::vector<double>> phases_;  // per channel
  double amplitude_;
};

ExplorationNoise make_exploration_noise(int dims, std::uint64_t seed, int num_freqs,
                                        double amplitude);

struct GlobalGain {
  Mat r_tilde;   // recovered input-weight correction
  Mat k_global;  // r_tilde * blockdiag(B_j^T P_j)
};

// Computes the global controller from the learned local quantities alone:
// per group alpha_j = B_j^T P_j = R_j K_j, then the least-squares correction
// and the global gain r_tilde * blockdiag(alpha_j).
GlobalGain compute_global_from_learned(const std::vector<LearnResult>& learned,
                                       const std::vector<Mat>& r_blocks, const Mat& coupling);

// Joint actuation u = -(K_local x + K_global x) under the u = -K x convention.
Vec joint_control(const std::vector<Mat>& k_local_blocks, const Mat& k_global, const Vec& x);

}  // namespace hlqr
