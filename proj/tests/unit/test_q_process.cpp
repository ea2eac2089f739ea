#include "support.hpp"

#include "qsdlab/q_process.hpp"

#include <gtest/gtest.h>

using namespace qsdtest;

TEST(QProcess, TwoCycleEtaProfile) {
  const Instance inst = two_cycle();
  const EtaProfile prof = eta_profile(inst.cert, inst.kernel, inst.cyclic);
  EXPECT_NEAR(prof.at(0)[0], 1.0, 1e-15);
  EXPECT_EQ(prof.at(0)[1], 0.0);
  EXPECT_EQ(prof.at(1)[0], 0.0);
  EXPECT_NEAR(prof.at(1)[1], std::sqrt(0.5 / 0.8), 1e-12);
  EXPECT_NEAR(prof.at(1)[1], 0.7905694, 1e-7);
  EXPECT_LE(prof.periodicity_error, 1e-12);
}

TEST(QProcess, PureCycleEtaProfileShifts) {
  const Instance inst = analyse("pc", instances::pure_cycle3());
  const EtaProfile prof = eta_profile(inst.cert, inst.kernel, inst.cyclic);
  for (int k = 0; k < 3; ++k) {
    const int support = (3 - k) % 3;
    for (int x = 0; x < 3; ++x) EXPECT_NEAR(prof.at(k)[x], x == support ? 1.0 : 0.0, 1e-15);
  }
}

TEST(QProcess, TwoCycleAlternation) {
  const Instance inst = two_cycle();
  const QProcessKernel qp = build_q_process(inst.cert, inst.kernel, inst.cyclic);
  ASSERT_EQ(qp.domain.size(), 2u);
  EXPECT_NEAR(qp.matrix(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(qp.matrix(1, 0), 1.0, 1e-12);
  EXPECT_LE(qp.matrix(0, 0), 1e-12);
  EXPECT_LE(qp.matrix(1, 1), 1e-12);
  const SemigroupCheck sg = q_semigroup_check(qp, inst.cert, inst.kernel, inst.cyclic, 10);
  EXPECT_LE(sg.max_discrepancy, 1e-12);
  const ContractionReport con = contraction_report(qp, inst.cert, inst.kernel, inst.cyclic, Measure::Unit(2, 0), 10);
  for (const auto& row : con.distance) {
    for (double d : row) EXPECT_LE(d, 1e-12);
  }
}

TEST(QProcess, PureCycleIsItsOwnQProcess) {
  const Instance inst = analyse("pc", instances::pure_cycle3());
  const QProcessKernel qp = build_q_process(inst.cert, inst.kernel, inst.cyclic);
  EXPECT_TRUE(qp.matrix.isApprox(inst.kernel.matrix()));
  const InvariantReport inv = invariant_candidates(qp, inst.cert, inst.kernel, inst.cyclic);
  for (int x = 0; x < 3; ++x) {
    EXPECT_NEAR(inv.stated.measure[x], 1.0 / 3, 1e-12);
    EXPECT_NEAR(inv.corrected.measure[x], 1.0 / 3, 1e-12);
  }
}

TEST(QProcess, AperiodicDoobTransform) {
  const Instance inst = analyse("ap", instances::aperiodic_pair());
  const QProcessKernel qp = build_q_process(inst.cert, inst.kernel, inst.cyclic);
  const auto& p = inst.kernel.matrix();
  const auto& eta = inst.cert.eta;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      EXPECT_NEAR(qp.matrix(x, y), p(x, y) * eta[y] / (inst.cert.theta0 * eta[x]), 1e-12);
    }
  }
  const InvariantReport inv = invariant_candidates(qp, inst.cert, inst.kernel, inst.cyclic);
  const Measure eta_nu = inst.cert.nu.cwiseProduct(eta.transpose());
  EXPECT_LE(l1(inv.stated.measure, eta_nu), 1e-12);
  EXPECT_LE(l1(inv.corrected.measure, eta_nu), 1e-12);
}

TEST(QProcess, StatedInvariantFormulaResidual) {
  const Instance inst = two_cycle(0.5, 0.5);
  const QProcessKernel qp = build_q_process(inst.cert, inst.kernel, inst.cyclic);
  const InvariantReport inv = invariant_candidates(qp, inst.cert, inst.kernel, inst.cyclic);
  EXPECT_NEAR(inv.oracle[0], 0.5, 1e-12);
  EXPECT_NEAR(inv.corrected.measure[0], 0.5, 1e-12);
  EXPECT_NEAR(inv.stated.measure[0], 2.0 / 3, 1e-12);
  EXPECT_NEAR(inv.stated.measure[1], 1.0 / 3, 1e-12);
  EXPECT_NEAR(inv.stated.residual_tv, 1.0 / 3, 1e-12);
  EXPECT_NEAR(inv.stated.residual_l1, 2.0 / 3, 1e-12);
  EXPECT_LE(inv.corrected.residual_l1, 1e-12);
}

TEST(QProcessProperty, RandomChains) {
  for (const auto& inst : random_suite(60, 3131)) {
    const int t = inst.cyclic.period();
    const EtaProfile prof = eta_profile(inst.cert, inst.kernel, inst.cyclic);
    ASSERT_LE(prof.periodicity_error, 1e-10 * inst.cert.eta.maxCoeff());
    const QProcessKernel qp = build_q_process(inst.cert, inst.kernel, inst.cyclic);
    const Eigen::VectorXd sums = qp.matrix.rowwise().sum();
    ASSERT_LE((sums.array() - 1.0).abs().maxCoeff(), 1e-12);
    for (std::size_t a = 0; a < qp.domain.size(); ++a) {
      for (std::size_t b = 0; b < qp.domain.size(); ++b) {
        if (qp.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) > 0.0) {
          ASSERT_EQ(qp.class_of[b], inst.cyclic.wrap(qp.class_of[a] + 1));
        }
      }
    }
    ASSERT_LE(q_semigroup_check(qp, inst.cert, inst.kernel, inst.cyclic, 10).max_discrepancy, 1e-10) << inst.name;

    const InvariantReport inv = invariant_candidates(qp, inst.cert, inst.kernel, inst.cyclic);
    const Measure oracle = oracle_stationary(qp.matrix);
    ASSERT_LE(inv.corrected.residual_l1, 1e-10) << inst.name;
    ASSERT_LE(l1(inv.corrected.measure, oracle), 1e-8) << inst.name;
    for (double m : inv.class_masses) ASSERT_NEAR(m, 1.0 / t, 1e-12);

    const Measure start = Measure::Unit(static_cast<Eigen::Index>(qp.domain.size()), 0);
    const ContractionReport con = contraction_report(qp, inst.cert, inst.kernel, inst.cyclic, start, 40);
    ASSERT_TRUE(con.rate_ok) << inst.name << " rate=" << con.fitted_rate << " alpha=" << con.alpha;
    ASSERT_TRUE(con.converges);
    ASSERT_LE(con.theory_gap, 1e-8);

    const ContractionReport still =
        contraction_report(qp, inst.cert, inst.kernel, inst.cyclic, inv.corrected.measure, 10);
    for (int j = 0; j < t; ++j) {
      for (int n = 1; n <= 10; ++n) {
        ASSERT_NEAR(still.distance[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)],
                    still.distance[0][static_cast<std::size_t>(j)], 1e-10);
      }
    }
  }
}
