#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hlqr/adp.hpp"
#include "hlqr/errors.hpp"
#include "hlqr/hierarchy.hpp"
#include "support.hpp"

using namespace hlqr;
using namespace hlqr::testing;

TEST_CASE("build_adp_data: constant trajectory has zero increments") {
  TrajectoryLog log;
  log.step = 0.001;
  log.sample_period = 0.01;
  Vec x(2), u(1);
  x << 1.0, -2.0;
  u << 0.5;
  for (int k = 0; k <= 20; ++k) {
    log.times.push_back(k * log.step);
    log.states.push_back(x);
    log.inputs.push_back(u);
    log.noise.push_back(u);
  }
  const AdpData data = build_adp_data(log);
  REQUIRE(data.delta_xx.rows() == 2);
  CHECK(data.delta_xx.cwiseAbs().maxCoeff() == 0.0);
  // Integrals of constants are exact under the trapezoid rule.
  CHECK(data.i_xx(0, 0) == doctest::Approx(0.01 * 1.0));       // x1^2
  CHECK(data.i_xx(0, 1) == doctest::Approx(0.01 * 2.0 * -2.0)); // 2 x1 x2
  CHECK(data.i_xu(0, 0) == doctest::Approx(0.01 * 0.5));
}

TEST_CASE("build_adp_data quadrature matches closed forms at 1e-3 substeps") {
  // x(t) = e^{-t}, u(t) = sin(t), one sample interval [0, T].
  const double T = 0.01, h = 1e-3;
  TrajectoryLog log;
  log.step = h;
  log.sample_period = T;
  for (int k = 0; k <= 10; ++k) {
    const double t = k * h;
    log.times.push_back(t);
    log.states.push_back(Vec::Constant(1, std::exp(-t)));
    log.inputs.push_back(Vec::Constant(1, std::sin(t)));
    log.noise.push_back(Vec::Zero(1));
  }
  const AdpData data = build_adp_data(log);
  CHECK(data.delta_xx(0, 0) == doctest::Approx(std::exp(-0.02) - 1.0).epsilon(1e-12));

  const double i_xx_exact = 0.5 * (1.0 - std::exp(-2.0 * T));
  CHECK(std::abs(data.i_xx(0, 0) - i_xx_exact) < 1e-8);

  // int_0^T e^{-t} sin(t) dt = [1 - e^{-T}(cos T + sin T)] / 2.
  const double i_xu_exact = 0.5 * (1.0 - std::exp(-T) * (std::cos(T) + std::sin(T)));
  CHECK(std::abs(data.i_xu(0, 0) - i_xu_exact) < 1e-8);
}

TEST_CASE("build_adp_data input validation") {
  TrajectoryLog empty;
  empty.step = 0.001;
  empty.sample_period = 0.01;
  CHECK_THROWS_AS(build_adp_data(empty), DimensionError);

  TrajectoryLog bad;
  bad.step = 0.003;  // does not divide the sampling period
  bad.sample_period = 0.01;
  for (int k = 0; k <= 10; ++k) {
    bad.times.push_back(k * bad.step);
    bad.states.push_back(Vec::Ones(1));
    bad.inputs.push_back(Vec::Zero(1));
    bad.noise.push_back(Vec::Zero(1));
  }
  CHECK_THROWS_AS(build_adp_data(bad), DimensionError);
}

TEST_CASE("unknown counts match the group dimensions") {
  CHECK(adp_unknown_count(24, 8) == 492);
  CHECK(adp_unknown_count(18, 6) == 279);
  CHECK(adp_unknown_count(84, 28) == 5922);
}

TEST_CASE("exploration noise is deterministic, seeded and bounded") {
  const ExplorationNoise zero = make_exploration_noise(3, 7, 12, 0.0);
  CHECK(zero(1.234).norm() == 0.0);

  const ExplorationNoise a = make_exploration_noise(2, 42, 16, 2.0);
  const ExplorationNoise b = make_exploration_noise(2, 42, 16, 2.0);
  const ExplorationNoise c = make_exploration_noise(2, 43, 16, 2.0);
  bool differs = false;
  for (double t : {0.0, 0.37, 1.0, 5.5}) {
    CHECK((a(t) - b(t)).norm() == 0.0);
    CHECK(a(t).cwiseAbs().maxCoeff() <= 2.0 + 1e-12);
    differs = differs || (a(t) - c(t)).norm() > 1e-12;
  }
  CHECK(differs);
}

TEST_CASE("adp_learn recovers the scalar closed form") {
  Mat a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << -1.0;
  b << 1.0;
  q << 1.0;
  r << 1.0;
  const Mat k0 = Mat::Zero(1, 1);  // a is already stable
  const TrajectoryLog log =
      make_learning_log(a, b, k0, Vec::Ones(1), 11, 1.0, 0.02, 30, 1e-4);
  const AdpData data = build_adp_data(log);
  REQUIRE(data.rank_ok);
  const LearnResult res = adp_learn(data, k0, q, r, 1e-9, 20);
  CHECK(std::abs(res.k_learned(0, 0) - (std::sqrt(2.0) - 1.0)) < 1e-3);
  CHECK(std::abs(res.p_learned(0, 0) - (std::sqrt(2.0) - 1.0)) < 1e-3);
  CHECK(res.history.back() < 1e-9);
}

TEST_CASE("adp_learn recovers the double-integrator gain") {
  const Mat a = double_integrator_a();
  const Mat b = double_integrator_b();
  const Mat q = Mat::Identity(2, 2);
  const Mat r = Mat::Identity(1, 1);
  Mat k0(1, 2);
  k0 << 1.0, 1.0;
  Vec x0(2);
  x0 << 1.0, -0.5;
  const TrajectoryLog log = make_learning_log(a, b, k0, x0, 13, 1.5, 0.02, 40, 1e-4);
  const AdpData data = build_adp_data(log);
  REQUIRE(data.rank_ok);
  const LearnResult res = adp_learn(data, k0, q, r, 1e-8, 25);
  Mat k_expected(1, 2);
  k_expected << 1.0, std::sqrt(3.0);
  CHECK((res.k_learned - k_expected).cwiseAbs().maxCoeff() < 1e-2);
  CHECK(res.iterations <= 25);
  // Update norms shrink as the policy iteration contracts.
  REQUIRE(res.history.size() >= 2);
  CHECK(res.history.back() < res.history.front());
}

TEST_CASE("adp iterates match kleinman iterates on exact data") {
  Rng rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 2 + trial;
    const int m = 1 + trial % 2;
    const RandomSystem sys = random_system(rng, n, m);
    const Mat q = random_spd(rng, n, 0.2);
    const Mat r = random_spd(rng, m, 0.5);
    const Mat k0 = coarse_stabilizing_gain(sys.a, sys.b);

    const int unknowns = adp_unknown_count(n, m);
    const TrajectoryLog log = make_smooth_learning_log(
        sys.a, sys.b, k0, random_vector(rng, n, 2.0), 100 + trial, 3.0, 0.05,
        4 * unknowns, 1e-5);
    const AdpData data = build_adp_data(log);
    REQUIRE(data.rank_ok);

    std::vector<Mat> p_adp, p_kl;
    const LearnResult res = adp_learn(data, k0, q, r, 1e-8, 30, &p_adp);
    const CareSolution oracle = kleinman_iterate(sys.a, sys.b, q, r, k0, 1e-10, 30, &p_kl);

    const std::size_t shared = std::min(p_adp.size(), p_kl.size());
    REQUIRE(shared >= 3);
    for (std::size_t k = 0; k < shared; ++k) {
      CHECK((p_adp[k] - p_kl[k]).norm() < 1e-6);
    }
    CHECK((res.k_learned - oracle.k).norm() < 1e-6);
  }
}

TEST_CASE("streaming accumulation matches the log-based data matrices exactly") {
  const Mat a = double_integrator_a();
  const Mat b = double_integrator_b();
  Mat k0(1, 2);
  k0 << 1.0, 1.0;
  const TrajectoryLog log = make_learning_log(a, b, k0, Vec::Ones(2), 31, 1.2, 0.01, 25, 1e-3);
  const AdpData reference = build_adp_data(log);

  AdpDataAccumulator acc(2, 1, log.substeps_per_sample(), log.step, log.num_samples());
  for (std::size_t k = 0; k < log.states.size(); ++k) {
    acc.add(static_cast<long>(k), log.states[k], log.inputs[k]);
  }
  const AdpData streamed = acc.finish();
  CHECK((streamed.delta_xx - reference.delta_xx).cwiseAbs().maxCoeff() == 0.0);
  CHECK((streamed.i_xx - reference.i_xx).cwiseAbs().maxCoeff() == 0.0);
  CHECK((streamed.i_xu - reference.i_xu).cwiseAbs().maxCoeff() == 0.0);
  CHECK(streamed.rank == reference.rank);
}

TEST_CASE("adp_learn refuses rank-deficient data") {
  const Mat a = double_integrator_a();
  const Mat b = double_integrator_b();
  Mat k0(1, 2);
  k0 << 1.0, 1.0;
  // Far fewer samples than unknowns.
  const TrajectoryLog log = make_learning_log(a, b, k0, Vec::Ones(2), 19, 1.0, 0.01, 3, 1e-3);
  const AdpData data = build_adp_data(log);
  CHECK_FALSE(data.rank_ok);
  CHECK_THROWS_AS(
      adp_learn(data, k0, Mat::Identity(2, 2), Mat::Identity(1, 1), 1e-6, 10),
      ExcitationError);
}

TEST_CASE("global gain from exact learned quantities matches the model-based one") {
  Rng rng(23);
  // Two fully actuated scalar groups with coupling.
  Mat a1(1, 1), a2(1, 1), b1(1, 1), b2(1, 1);
  a1 << -0.5;
  a2 << -1.5;
  b1 << 1.0;
  b2 << 2.0;
  const double w = 0.6;
  Mat coupling(2, 2);
  coupling << w, -w, -w, w;
  std::vector<GroupPlantCost> groups = {{a1, b1, Mat::Identity(1, 1), Mat::Identity(1, 1)},
                                        {a2, b2, Mat::Identity(1, 1), Mat::Identity(1, 1)}};
  const HierarchyProblem problem = make_problem(groups, coupling);
  const HierarchicalGain gain = synthesize(problem, 1e-11);

  // "Learned" results seeded with the exact model-based local gains.
  std::vector<LearnResult> learned(2);
  for (int j = 0; j < 2; ++j) {
    const auto locals = solve_local(problem, 1e-11);
    learned[j].p_learned = locals[j].p;
    learned[j].k_learned = locals[j].k;
    learned[j].iterations = 1;
  }
  const GlobalGain global =
      compute_global_from_learned(learned, problem.r_blocks(), coupling);
  CHECK((global.r_tilde - gain.r_tilde).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((global.k_global - gain.k_global).cwiseAbs().maxCoeff() < 1e-9);

  // Zero coupling produces a zero global gain.
  const GlobalGain none =
      compute_global_from_learned(learned, problem.r_blocks(), Mat::Zero(2, 2));
  CHECK(none.k_global.norm() == 0.0);
}

TEST_CASE("joint_control composes local and global terms") {
  Rng rng(29);
  std::vector<Mat> k_blocks = {random_matrix(rng, 1, 2), random_matrix(rng, 2, 3)};
  const Mat k_global = random_matrix(rng, 3, 5);
  const Vec x = random_vector(rng, 5);

  CHECK(joint_control(k_blocks, k_global, Vec::Zero(5)).norm() == 0.0);
  const Vec no_global = joint_control(k_blocks, Mat(), x);
  CHECK((no_global + block_diag(k_blocks) * x).norm() < 1e-14);
  const Vec full = joint_control(k_blocks, k_global, x);
  CHECK((full + (block_diag(k_blocks) + k_global) * x).norm() < 1e-14);
}
