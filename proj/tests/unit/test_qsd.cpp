#include "support.hpp"

#include "qsdlab/errors.hpp"
#include "qsdlab/qsd.hpp"

#include <gtest/gtest.h>

using namespace qsdtest;

namespace {

const double kTheta0 = std::sqrt(0.4);
const double kRoot = std::sqrt(1.6);

Measure two_cycle_qsd() {
  Measure mu(2);
  mu << 1.0, kRoot;
  return mu / (1.0 + kRoot);
}

}  // namespace

TEST(Qsd, IsQsdExamples) {
  const AbsorbedKernel k = instances::two_cycle(0.8, 0.5);
  const QsdCheck good = is_qsd(k, two_cycle_qsd());
  EXPECT_TRUE(good.is_qsd);
  EXPECT_NEAR(good.theta, kTheta0, 1e-12);
  EXPECT_FALSE(is_qsd(k, Measure::Unit(2, 0)).is_qsd);
  const QsdCheck pc = is_qsd(instances::pure_cycle3(), Measure::Constant(3, 1.0 / 3));
  EXPECT_TRUE(pc.is_qsd);
  EXPECT_NEAR(pc.theta, 1.0, 1e-15);
  Matrix m(2, 2);
  m << 0, 0, 0.5, 0;
  try {
    is_qsd(AbsorbedKernel(m, {"a", "b"}), Measure::Unit(2, 0));
    FAIL();
  } catch (const QsdError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ThetaZero);
  }
}

TEST(Qsd, ReconstructionClosedForms) {
  const Instance inst = two_cycle();
  const Measure nu_qs = qsd_from_iterated(inst.cert.nu, inst.cert.theta0, inst.kernel, inst.cyclic);
  EXPECT_NEAR(nu_qs[1], kRoot / (1 + kRoot), 1e-10);
  EXPECT_NEAR(nu_qs[1], 0.55848156, 1e-8);
  EXPECT_NEAR(survival_probability(inst.kernel, nu_qs, 1), kTheta0, 1e-12);

  const Instance sym = two_cycle(0.6, 0.6);
  const Measure half = qsd_from_iterated(sym.cert.nu, sym.cert.theta0, sym.kernel, sym.cyclic);
  EXPECT_NEAR(half[0], 0.5, 1e-12);
  const Measure back = iterated_from_qsd(half, sym.cyclic);
  EXPECT_NEAR(back[0], 1.0, 1e-15);

  const Instance ap = analyse("ap", instances::aperiodic_pair());
  const Measure same = qsd_from_iterated(ap.cert.nu, ap.cert.theta0, ap.kernel, ap.cyclic);
  EXPECT_LE(l1(same, ap.cert.nu), 1e-12);
}

TEST(Qsd, ReconstructionRejectsNonQsd) {
  Matrix q(2, 2);
  q << 0.3, 0.3, 0.2, 0.4;
  const Instance inst = analyse("q2", AbsorbedKernel(q, {"a", "b"}));
  try {
    qsd_from_iterated(Measure::Unit(2, 0), inst.cert.theta0, inst.kernel, inst.cyclic);
    FAIL();
  } catch (const QsdError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotAQSD);
  }
  const Instance tc = two_cycle();
  try {
    iterated_from_qsd(Measure::Unit(2, 1), tc.cyclic);
    FAIL();
  } catch (const QsdError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroMassOnA0);
  }
}

TEST(Qsd, FamilyOnTwoCycle) {
  const Instance inst = two_cycle();
  const AbsorbedKernel p2 = kernel_power(inst.kernel, 2);
  const Measure first = iterated_qsd_family(inst.cert.nu, inst.kernel, inst.cyclic, {1.0, 0.0});
  EXPECT_NEAR(first[0], 1.0, 1e-15);
  EXPECT_TRUE(is_qsd(p2, first).is_qsd);
  EXPECT_FALSE(is_qsd(inst.kernel, first).is_qsd);

  const double w1 = 0.8 / kTheta0;
  const Measure matched = iterated_qsd_family(inst.cert.nu, inst.kernel, inst.cyclic, {1 / (1 + w1), w1 / (1 + w1)});
  EXPECT_TRUE(is_qsd(inst.kernel, matched).is_qsd);
  EXPECT_LE(l1(matched, two_cycle_qsd()), 1e-12);
  const auto profile = periodic_weight_profile(inst.cert.nu, inst.cert.theta0, inst.kernel, inst.cyclic);
  EXPECT_NEAR(profile[1], w1 / (1 + w1), 1e-12);

  const Measure halves = iterated_qsd_family(inst.cert.nu, inst.kernel, inst.cyclic, {0.5, 0.5});
  EXPECT_TRUE(is_qsd(p2, halves).is_qsd);
  EXPECT_FALSE(is_qsd(inst.kernel, halves).is_qsd);

  for (const std::vector<double>& bad : {std::vector<double>{0.5}, {1.5, -0.5}, {0.2, 0.2}}) {
    try {
      iterated_qsd_family(inst.cert.nu, inst.kernel, inst.cyclic, bad);
      FAIL();
    } catch (const QsdError& e) {
      EXPECT_EQ(e.kind(), ErrorKind::DegenerateWeight);
    }
  }
}

TEST(QsdProperty, AbsorptionRateAndBijection) {
  for (const auto& inst : random_suite(50, 555)) {
    const Measure nu_qs = qsd_from_iterated(inst.cert.nu, inst.cert.theta0, inst.kernel, inst.cyclic);
    // Oracle: left Perron vector of P_1 on E, normalized.
    Eigen::EigenSolver<Matrix> solver(inst.kernel.matrix().transpose(), true);
    Eigen::Index best = 0;
    for (Eigen::Index i = 0; i < inst.kernel.size(); ++i) {
      if (std::abs(solver.eigenvalues()[i] - inst.cert.theta0) < std::abs(solver.eigenvalues()[best] - inst.cert.theta0)) best = i;
    }
    Eigen::VectorXd v = solver.eigenvectors().col(best).real();
    v /= v.sum();
    ASSERT_LE(l1(nu_qs, v.transpose()), 1e-9) << inst.name;

    for (int n = 0; n <= 30; ++n) {
      ASSERT_NEAR(survival_probability(inst.kernel, nu_qs, n), std::pow(inst.cert.theta0, n), 1e-10);
    }
    const Measure back = iterated_from_qsd(nu_qs, inst.cyclic);
    ASSERT_LE(l1(back, inst.cert.nu), 1e-10);
    const Measure again = qsd_from_iterated(back, inst.cert.theta0, inst.kernel, inst.cyclic);
    ASSERT_LE(l1(again, nu_qs), 1e-10);
  }
}

TEST(QsdProperty, FamilyMembers) {
  for (const auto& inst : random_suite(50, 556)) {
    const int t = inst.cyclic.period();
    const AbsorbedKernel pt = kernel_power(inst.kernel, t);
    const auto extremes = iterated_qsd_extremes(inst.cert.nu, inst.kernel, inst.cyclic);
    ASSERT_EQ(static_cast<int>(extremes.size()), t);
    for (const auto& e : extremes) {
      ASSERT_TRUE(is_qsd(pt, e).is_qsd);
      if (t > 1) {
        ASSERT_FALSE(is_qsd(inst.kernel, e).is_qsd);
      }
    }
    const auto w = periodic_weight_profile(inst.cert.nu, inst.cert.theta0, inst.kernel, inst.cyclic);
    ASSERT_TRUE(is_qsd(inst.kernel, iterated_qsd_family(inst.cert.nu, inst.kernel, inst.cyclic, w)).is_qsd);
    if (t > 1) {
      std::vector<double> uniform(static_cast<std::size_t>(t), 1.0 / t);
      const Measure mixed = iterated_qsd_family(inst.cert.nu, inst.kernel, inst.cyclic, uniform);
      ASSERT_TRUE(is_qsd(pt, mixed).is_qsd);
    }
  }
}
