#include "hlqr/adp.hpp"

#include <Eigen/QR>
#include <cmath>
#include <numbers>
#include <string>

#include "hlqr/errors.hpp"
#include "hlqr/hierarchy.hpp"
#include "hlqr/rng.hpp"

namespace hlqr {
namespace {

// Index of entry (i, j), i <= j, in the row-wise upper-triangle order of vecs.
inline int vecs_index(int i, int j, int n) {
  return i * n - i * (i - 1) / 2 + (j - i);
}

// Doubled quadratic monomials: quad(x)^T vecs(S) = x^T S x for symmetric S.
Vec quad_monomials(const Vec& x) {
  const int n = static_cast<int>(x.size());
  Vec q(vecs_length(n));
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    q(idx++) = x(i) * x(i);
    for (int j = i + 1; j < n; ++j) {
      q(idx++) = 2.0 * x(i) * x(j);
    }
  }
  return q;
}

Vec kron_xu(const Vec& x, const Vec& u) {
  Vec out(x.size() * u.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out.segment(i * u.size(), u.size()) = x(i) * u;
  }
  return out;
}

// Rank of [i_xx, i_xu] at the 1e-8 relative threshold.
void finalize_rank(AdpData& data) {
  Mat excitation(data.i_xx.rows(), data.i_xx.cols() + data.i_xu.cols());
  excitation << data.i_xx, data.i_xu;
  Eigen::ColPivHouseholderQR<Mat> qr(excitation);
  qr.setThreshold(1e-8);
  data.rank = static_cast<int>(qr.rank());
  data.rank_ok = data.rank == data.unknown_count();
}

}  // namespace

int TrajectoryLog::substeps_per_sample() const {
  if (step <= 0.0 || sample_period <= 0.0) return 0;
  const double ratio = sample_period / step;
  const int s = static_cast<int>(std::llround(ratio));
  if (s < 1 || std::abs(ratio - s) > 1e-6) return 0;
  return s;
}

int TrajectoryLog::num_samples() const {
  const int s = substeps_per_sample();
  if (s == 0 || states.empty()) return 0;
  return (static_cast<int>(states.size()) - 1) / s;
}

int TrajectoryLog::state_dim() const {
  return states.empty() ? 0 : static_cast<int>(states.front().size());
}

int TrajectoryLog::input_dim() const {
  return inputs.empty() ? 0 : static_cast<int>(inputs.front().size());
}

AdpData build_adp_data(const TrajectoryLog& log) {
  if (log.states.empty()) {
    throw DimensionError("build_adp_data: empty trajectory log");
  }
  const int s = log.substeps_per_sample();
  if (s == 0) {
    throw DimensionError("build_adp_data: log step does not divide the sampling period");
  }
  // Spot-check uniform spacing of the recorded times.
  for (std::size_t i = 1; i < log.times.size(); i += std::max<std::size_t>(1, log.times.size() / 7)) {
    const double dt = log.times[i] - log.times[i - 1];
    if (std::abs(dt - log.step) > 1e-9 * std::max(1.0, std::abs(log.times[i]))) {
      throw DimensionError("build_adp_data: non-uniform sampling in log");
    }
  }
  const int l = log.num_samples();
  if (l < 1) {
    throw DimensionError("build_adp_data: log shorter than one sample interval");
  }
  const int n = log.state_dim();
  const int m = log.input_dim();
  const int q = vecs_length(n);

  AdpData data;
  data.n = n;
  data.m = m;
  data.delta_xx.resize(l, q);
  data.i_xx.resize(l, q);
  data.i_xu.resize(l, n * m);

  const double h = log.step;
  for (int j = 0; j < l; ++j) {
    const int lo = j * s;
    const int hi = lo + s;
    data.delta_xx.row(j) =
        (quad_monomials(log.states[hi]) - quad_monomials(log.states[lo])).transpose();
    Vec acc_xx = Vec::Zero(q);
    Vec acc_xu = Vec::Zero(n * m);
    for (int k = lo; k <= hi; ++k) {
      const double w = (k == lo || k == hi) ? 0.5 * h : h;
      acc_xx += w * quad_monomials(log.states[k]);
      acc_xu += w * kron_xu(log.states[k], log.inputs[k]);
    }
    data.i_xx.row(j) = acc_xx.transpose();
    data.i_xu.row(j) = acc_xu.transpose();
  }

  finalize_rank(data);
  return data;
}

AdpDataAccumulator::AdpDataAccumulator(int n, int m, int substeps, double step,
                                       int num_samples)
    : n_(n), m_(m), substeps_(substeps), num_samples_(num_samples), step_(step) {
  if (substeps < 1 || num_samples < 1 || step <= 0.0) {
    throw DimensionError("AdpDataAccumulator: invalid grid");
  }
  data_.n = n;
  data_.m = m;
  const int q = vecs_length(n);
  data_.delta_xx = Mat::Zero(num_samples, q);
  data_.i_xx = Mat::Zero(num_samples, q);
  data_.i_xu = Mat::Zero(num_samples, n * m);
}

void AdpDataAccumulator::add(long step_index, const Vec& x, const Vec& u) {
  if (row_ >= num_samples_) return;
  const long lo = static_cast<long>(row_) * substeps_;
  const long hi = lo + substeps_;
  if (step_index < lo || step_index > hi) {
    throw DimensionError("AdpDataAccumulator: steps must arrive in order");
  }
  const Vec quad = quad_monomials(x);
  const double w = (step_index == lo || step_index == hi) ? 0.5 * step_ : step_;
  data_.i_xx.row(row_) += w * quad.transpose();
  data_.i_xu.row(row_) += w * kron_xu(x, u).transpose();
  if (step_index == lo) {
    quad_first_ = quad;
  }
  if (step_index == hi) {
    data_.delta_xx.row(row_) = (quad - quad_first_).transpose();
    ++row_;
    // The boundary sample also opens the next interval with half weight.
    if (row_ < num_samples_) {
      quad_first_ = quad;
      data_.i_xx.row(row_) += (0.5 * step_) * quad.transpose();
      data_.i_xu.row(row_) += (0.5 * step_) * kron_xu(x, u).transpose();
    }
  }
}

AdpData AdpDataAccumulator::finish() {
  if (row_ != num_samples_) {
    throw DimensionError("AdpDataAccumulator: run ended before the last sample interval");
  }
  finalize_rank(data_);
  return std::move(data_);
}

LearnResult adp_learn(const AdpData& data, const Mat& k0, const Mat& q_bar, const Mat& r,
                      double eps, int max_iters, std::vector<Mat>* p_history) {
  const int n = data.n;
  const int m = data.m;
  const int q = vecs_length(n);
  if (k0.rows() != m || k0.cols() != n || q_bar.rows() != n || r.rows() != m) {
    throw DimensionError("adp_learn: gain/weight dimensions do not match the data");
  }
  if (!data.rank_ok) {
    throw ExcitationError("adp_learn: insufficient excitation (rank " +
                          std::to_string(data.rank) + " of " +
                          std::to_string(data.unknown_count()) + ")");
  }
  const int l = static_cast<int>(data.delta_xx.rows());
  const int cols = q + n * m;

  LearnResult result;
  Mat k = k0;
  Mat p_prev;
  Mat theta(l, cols);
  theta.leftCols(q) = data.delta_xx;

  for (int iter = 0; iter < max_iters; ++iter) {
    // Policy-dependent column block: column (row rr, col ss) of vec(K) is
    // -2 i_xx vecs(sym(w e_ss^T)) - 2 i_xu (e_ss (x) R e_rr), with
    // w = K_k^T R e_rr. Only the n entries touching index ss survive in the
    // vecs image, so the first term is assembled sparsely.
    const Mat ktr = k.transpose() * r;  // n x m
    for (int ss = 0; ss < n; ++ss) {
      for (int rr = 0; rr < m; ++rr) {
        const int c = q + ss * m + rr;
        Vec col = data.i_xu.middleCols(static_cast<Eigen::Index>(ss) * m, m) * r.col(rr);
        const Vec w = ktr.col(rr);
        for (int i = 0; i < n; ++i) {
          const double v = (i == ss) ? w(ss) : 0.5 * w(i);
          col += v * data.i_xx.col(vecs_index(std::min(i, ss), std::max(i, ss), n));
        }
        theta.col(c) = -2.0 * col;
      }
    }
    const Vec phi = -data.i_xx * vecs(symmetrize(q_bar + k.transpose() * r * k));

    // Column equilibration keeps the QR well-scaled without changing the
    // least-squares solution.
    Vec scale(cols);
    for (int c = 0; c < cols; ++c) {
      const double s = theta.col(c).norm();
      scale(c) = s > 0.0 ? s : 1.0;
    }
    Eigen::ColPivHouseholderQR<Mat> qr(theta * scale.cwiseInverse().asDiagonal());
    const auto r_diag = qr.matrixR().diagonal().cwiseAbs();
    const double cond =
        r_diag(r_diag.size() - 1) > 0.0 ? r_diag(0) / r_diag(r_diag.size() - 1)
                                        : std::numeric_limits<double>::infinity();
    result.ls_condition = std::max(result.ls_condition, cond);
    const Vec sol = scale.cwiseInverse().asDiagonal() * qr.solve(phi);

    const Mat p = unvecs(sol.head(q), n);
    if (p_history != nullptr) p_history->push_back(p);
    Mat k_next(m, n);
    for (int ss = 0; ss < n; ++ss) {
      for (int rr = 0; rr < m; ++rr) {
        k_next(rr, ss) = sol(q + ss * m + rr);
      }
    }

    if (iter > 0) {
      const double diff = (p - p_prev).norm();
      result.history.push_back(diff);
      if (diff < eps) {
        result.p_learned = p;
        result.k_learned = k_next;
        result.iterations = iter + 1;
        return result;
      }
    }
    p_prev = p;
    k = k_next;
  }
  const std::string msg =
      "adp_learn: no convergence within " + std::to_string(max_iters) +
      " iterations (last update " +
      std::to_string(result.history.empty() ? -1.0 : result.history.back()) + ")";
  throw ConvergenceError(msg, std::move(result.history));
}

ExplorationNoise::ExplorationNoise(int dims, std::uint64_t seed, int num_freqs,
                                   double amplitude)
    : amplitude_(amplitude) {
  Rng rng(seed);
  freqs_.resize(dims);
  phases_.resize(dims);
  for (int c = 0; c < dims; ++c) {
    freqs_[c].resize(num_freqs);
    phases_[c].resize(num_freqs);
    for (int k = 0; k < num_freqs; ++k) {
      freqs_[c][k] = rng.uniform(0.5, 25.0);
      phases_[c][k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  }
}

Vec ExplorationNoise::operator()(double t) const {
  Vec u = Vec::Zero(static_cast<Eigen::Index>(freqs_.size()));
  if (amplitude_ == 0.0) return u;
  for (std::size_t c = 0; c < freqs_.size(); ++c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < freqs_[c].size(); ++k) {
      acc += std::sin(freqs_[c][k] * t + phases_[c][k]);
    }
    u(static_cast<Eigen::Index>(c)) =
        amplitude_ * acc / static_cast<double>(freqs_[c].size());
  }
  return u;
}

ExplorationNoise make_exploration_noise(int dims, std::uint64_t seed, int num_freqs,
                                        double amplitude) {
  return ExplorationNoise(dims, seed, num_freqs, amplitude);
}

GlobalGain compute_global_from_learned(const std::vector<LearnResult>& learned,
                                       const std::vector<Mat>& r_blocks,
                                       const Mat& coupling) {
  if (learned.size() != r_blocks.size() || learned.empty()) {
    throw DimensionError("compute_global_from_learned: block count mismatch");
  }
  std::vector<Mat> alpha(learned.size());  // B_j^T P_j = R_j K_j
  std::vector<Mat> phi(learned.size());    // P_j B_j = alpha_j^T
  for (std::size_t j = 0; j < learned.size(); ++j) {
    alpha[j] = r_blocks[j] * learned[j].k_learned;
    phi[j] = alpha[j].transpose();
  }
  const RTildeResult rt = r_tilde_from_phi(phi, coupling);
  GlobalGain out;
  out.r_tilde = rt.r_tilde;
  out.k_global = rt.r_tilde * block_diag(alpha);
  return out;
}

Vec joint_control(const std::vector<Mat>& k_local_blocks, const Mat& k_global, const Vec& x) {
  const Mat k_local = block_diag(k_local_blocks);
  if (k_local.cols() != x.size() || (k_global.size() != 0 && k_global.cols() != x.size())) {
    throw DimensionError("joint_control: dimension mismatch");
  }
  Vec u = k_local * x;
  if (k_global.size() != 0) u += k_global * x;
  return -u;
}

}  // namespace hlqr
