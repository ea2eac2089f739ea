#include "support.hpp"

#include "qsdlab/errors.hpp"
#include "qsdlab/monte_carlo.hpp"
#include "qsdlab/q_process.hpp"
#include "qsdlab/quasi_ergodic.hpp"
#include "qsdlab/quasi_limit.hpp"

#include <gtest/gtest.h>

using namespace qsdtest;

TEST(MonteCarlo, PureCycleNeverAbsorbed) {
  const TrajectoryBatch b = simulate_paths(instances::pure_cycle3(), Measure::Unit(3, 0), 9, 50, 1);
  for (std::size_t i = 0; i < b.paths.size(); ++i) {
    EXPECT_EQ(b.absorption_time[i], -1);
    ASSERT_EQ(b.paths[i].size(), 10u);
    for (int s = 0; s <= 9; ++s) EXPECT_EQ(b.paths[i][static_cast<std::size_t>(s)], s % 3);
  }
}

TEST(MonteCarlo, ZeroKernelAbsorbsAtOne) {
  const AbsorbedKernel zero(Matrix::Zero(2, 2), {"a", "b"});
  const TrajectoryBatch b = simulate_paths(zero, Measure::Constant(2, 0.5), 5, 100, 3);
  for (std::size_t i = 0; i < b.paths.size(); ++i) {
    EXPECT_EQ(b.absorption_time[i], 1);
    EXPECT_EQ(b.paths[i].size(), 1u);
  }
  EXPECT_THROW(conditional_empirical(b, 1), QsdError);
}

TEST(MonteCarlo, TwoCycleSurvivalBand) {
  const int paths = 100000;
  const TrajectoryBatch b = simulate_paths(instances::two_cycle(0.8, 0.5), Measure::Unit(2, 0), 2, paths, 42);
  int alive = 0;
  for (const auto& p : b.paths) alive += p.size() == 3u;
  const double sigma = std::sqrt(0.4 * 0.6 / paths);
  EXPECT_LE(std::abs(alive / static_cast<double>(paths) - 0.4), 4 * sigma);
  const EmpiricalLaw one = conditional_empirical(b, 1);
  EXPECT_EQ(one.law[1], 1.0);
  const EmpiricalLaw zero = conditional_empirical(b, 0);
  EXPECT_EQ(zero.law[0], 1.0);
  EXPECT_EQ(zero.ess, paths);
}

TEST(MonteCarlo, TimeAverages) {
  const TrajectoryBatch b = simulate_paths(instances::two_cycle(0.8, 0.5), Measure::Unit(2, 0), 6, 20000, 8);
  const MeanEstimate ones = estimate_time_average_mc(b, StateFunction::Ones(2), 6);
  EXPECT_EQ(ones.mean, 1.0);
  EXPECT_EQ(ones.stderr_, 0.0);
  const MeanEstimate fa = estimate_time_average_mc(b, StateFunction::Unit(2, 0), 6);
  EXPECT_NEAR(fa.mean, 4.0 / 7.0, 1e-12);  // conditioned path is deterministic
}

TEST(MonteCarlo, QProcessPaths) {
  const Instance tc = two_cycle();
  const QProcessKernel qp = build_q_process(tc.cert, tc.kernel, tc.cyclic);
  const TrajectoryBatch b = simulate_q_process(qp, Measure::Unit(2, 0), 11, 10, 5);
  for (const auto& p : b.paths) {
    ASSERT_EQ(p.size(), 12u);
    for (int s = 0; s <= 11; ++s) EXPECT_EQ(p[static_cast<std::size_t>(s)], s % 2);
  }
  const OccupationEstimate occ = q_process_occupation(qp, Measure::Unit(2, 0), 9999, 4, 5);
  EXPECT_NEAR(occ.mean[0], 0.5, 1e-12);
  const TrajectoryBatch h0 = simulate_q_process(qp, Measure::Constant(2, 0.5), 0, 10, 5);
  for (const auto& p : h0.paths) EXPECT_EQ(p.size(), 1u);
}

TEST(MonteCarloProperty, DeterministicAcrossThreads) {
  const auto suite = random_suite(3, 4040);
  for (const auto& inst : suite) {
    const Measure mu = Measure::Constant(inst.kernel.size(), 1.0 / static_cast<double>(inst.kernel.size()));
    const TrajectoryBatch a = simulate_paths(inst.kernel, mu, 30, 3000, 77, 1);
    const TrajectoryBatch b = simulate_paths(inst.kernel, mu, 30, 3000, 77, 5);
    ASSERT_EQ(a.paths, b.paths);
    ASSERT_EQ(a.absorption_time, b.absorption_time);
    const TrajectoryBatch c = simulate_paths(inst.kernel, mu, 30, 3000, 78, 1);
    ASSERT_NE(a.paths, c.paths);
  }
}

TEST(MonteCarloProperty, StatisticalConsistency) {
  // Each comparison may be retried once with an independent seed.
  const auto suite = random_suite(6, 5050);
  for (const auto& inst : suite) {
    const auto n = inst.kernel.size();
    const Measure mu = Measure::Unit(n, inst.cyclic.members(0).front());
    const int horizon = 4;
    auto law_ok = [&](std::uint64_t seed) {
      const TrajectoryBatch b = simulate_paths(inst.kernel, mu, horizon, 40000, seed, 2);
      const EmpiricalLaw e = conditional_empirical(b, horizon);
      const double band = 4 * std::sqrt(static_cast<double>(n) / e.ess);
      const MeanEstimate avg = estimate_time_average_mc(b, StateFunction::Unit(n, 0), horizon);
      const double exact = time_average_exact(inst.kernel, mu, StateFunction::Unit(n, 0), horizon);
      return l1(e.law, conditional_law(inst.kernel, mu, horizon)) <= band &&
             std::abs(avg.mean - exact) <= 4 * avg.stderr_ + 1e-12;
    };
    ASSERT_TRUE(law_ok(11) || law_ok(12)) << inst.name;
  }
}
