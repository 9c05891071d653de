#pragma once

// Shared helpers for the test suites: seeded random matrices and systems with
// known structure, independent of the code under test wherever a spec example
// calls for an oracle.

#include "hlqr/adp.hpp"
#include "hlqr/mats.hpp"
#include "hlqr/riccati.hpp"
#include "hlqr/rng.hpp"
#include "hlqr/sim.hpp"

namespace hlqr::testing {

inline Mat random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

inline Vec random_vector(Rng& rng, int n, double scale = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

inline Mat random_spd(Rng& rng, int n, double ridge = 0.5) {
  const Mat w = random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
  return Mat(w * w.transpose() + ridge * Mat::Identity(n, n));
}

inline Mat random_psd(Rng& rng, int n, int rank = -1) {
  if (rank < 0) rank = n;
  const Mat w = random_matrix(rng, n, rank) / std::sqrt(static_cast<double>(n));
  return Mat(w * w.transpose());
}

// Random (A, B) pair; generic entries make it controllable almost surely.
struct RandomSystem {
  Mat a;
  Mat b;
};

inline RandomSystem random_system(Rng& rng, int n, int m) {
  RandomSystem sys;
  sys.a = random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
  // Cap how unstable the plant can be; a strongly unstable mode with tiny
  // modal controllability makes P blow up and tests nothing useful.
  const double abscissa = spectral_abscissa(sys.a);
  if (abscissa > 0.3) {
    sys.a -= (abscissa - 0.3) * Mat::Identity(n, n);
  }
  sys.b = random_matrix(rng, n, m);
  return sys;
}

// A stabilizing gain for (a, b) obtained from an unrelated design cost, so
// tests that iterate from a seed gain do not start at the answer.
inline Mat coarse_stabilizing_gain(const Mat& a, const Mat& b) {
  return solve_care(a, b, Mat::Identity(a.rows(), a.cols()),
                    Mat::Identity(b.cols(), b.cols()), 1e-9)
      .k;
}

// Double integrator with the closed-form ARE solution used across suites:
// P = [[sqrt(3), 1], [1, sqrt(3)]], K = [1, sqrt(3)].
inline Mat double_integrator_a() {
  Mat a = Mat::Zero(2, 2);
  a(0, 1) = 1.0;
  return a;
}

inline Mat double_integrator_b() {
  Mat b = Mat::Zero(2, 1);
  b(1, 0) = 1.0;
  return b;
}

// Closed-loop exploration run u = -k0 x + noise for learning tests. The
// substep controls the quadrature floor; tight tolerances need a fine one.
inline TrajectoryLog make_learning_log(const Mat& a, const Mat& b, const Mat& k0,
                                       const Vec& x0, std::uint64_t seed, double amplitude,
                                       double sample_period, int num_samples,
                                       double substep) {
  const ExplorationNoise noise =
      make_exploration_noise(static_cast<int>(b.cols()), seed, 16, amplitude);
  TrajectoryLog log = integrate(a, b, k0, [&noise](double t) { return noise(t); }, Vec(),
                                x0, substep, sample_period * num_samples, sample_period);
  return log;
}

// Band-limited variant for oracle-equivalence checks: slow sinusoids keep
// the trapezoid error of the data integrals near machine level.
inline TrajectoryLog make_smooth_learning_log(const Mat& a, const Mat& b, const Mat& k0,
                                              const Vec& x0, std::uint64_t seed,
                                              double amplitude, double sample_period,
                                              int num_samples, double substep,
                                              int num_freqs = 12) {
  const int m = static_cast<int>(b.cols());
  Rng rng(seed);
  std::vector<std::vector<double>> freqs(m), phases(m);
  for (int c = 0; c < m; ++c) {
    for (int k = 0; k < num_freqs; ++k) {
      freqs[c].push_back(rng.uniform(0.5, 8.0));
      phases[c].push_back(rng.uniform(0.0, 6.283185307179586));
    }
  }
  auto noise = [m, amplitude, freqs, phases](double t) {
    Vec u = Vec::Zero(m);
    for (int c = 0; c < m; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < freqs[c].size(); ++k) {
        acc += std::sin(freqs[c][k] * t + phases[c][k]);
      }
      u(c) = amplitude * acc / static_cast<double>(freqs[c].size());
    }
    return u;
  };
  return integrate(a, b, k0, noise, Vec(), x0, substep, sample_period * num_samples,
                   sample_period);
}

}  // namespace hlqr::testing
