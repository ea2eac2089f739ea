#include "support.hpp"

#include "qsdlab/errors.hpp"

#include <gtest/gtest.h>

using namespace qsdtest;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const QsdError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a QsdError";
  return ErrorKind::OracleFailure;
}

}  // namespace

TEST(ChainCore, AbsorptionIsRowSumComplement) {
  Matrix m(2, 2);
  m << 0, 0.8, 0.5, 0;
  const AbsorbedKernel k = validate_kernel(m, {"a", "b"});
  EXPECT_NEAR(k.absorption()[0], 0.2, 1e-15);
  EXPECT_NEAR(k.absorption()[1], 0.5, 1e-15);
  EXPECT_EQ(k.index_of("b"), 1);
  EXPECT_EQ(k.index_of("z"), -1);
}

TEST(ChainCore, StochasticKernelHasNoAbsorption) {
  const AbsorbedKernel k = instances::pure_cycle3();
  EXPECT_EQ(k.absorption().cwiseAbs().maxCoeff(), 0.0);
}

TEST(ChainCore, ValidationErrors) {
  Matrix over(2, 2);
  over << 0.5, 0.6, 0, 0;
  EXPECT_EQ(kind_of([&] { validate_kernel(over, {"a", "b"}); }), ErrorKind::RowSumExceedsOne);
  Matrix neg(2, 2);
  neg << 0.5, -0.1, 0, 0;
  EXPECT_EQ(kind_of([&] { validate_kernel(neg, {"a", "b"}); }), ErrorKind::NegativeEntry);
  EXPECT_EQ(kind_of([&] { validate_kernel(Matrix::Zero(2, 3), {"a", "b"}); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([&] { validate_kernel(Matrix::Zero(2, 2), {"a"}); }), ErrorKind::DimensionMismatch);
}

TEST(ChainCore, TinyNegativesAreClamped) {
  Matrix m(2, 2);
  m << 0, 1, -5e-13, 0.9;
  const AbsorbedKernel k = validate_kernel(m, {"a", "b"});
  EXPECT_EQ(k(1, 0), 0.0);
}

TEST(ChainCore, PowersOfCanonicalKernels) {
  const Matrix p2 = kernel_power(instances::two_cycle(0.8, 0.5), 2).matrix();
  EXPECT_NEAR(p2(0, 0), 0.4, 1e-15);
  EXPECT_NEAR(p2(1, 1), 0.4, 1e-15);
  EXPECT_EQ(p2(0, 1), 0.0);
  const Matrix p3 = kernel_power(instances::pure_cycle3(), 3).matrix();
  EXPECT_TRUE(p3.isApprox(Matrix::Identity(3, 3)));
  const Matrix p0 = kernel_power(instances::two_cycle(0.8, 0.5), 0).matrix();
  EXPECT_TRUE(p0.isApprox(Matrix::Identity(2, 2)));
}

TEST(ChainCore, RestrictIterated) {
  const AbsorbedKernel k = instances::two_cycle(0.8, 0.5);
  const AbsorbedKernel q = restrict_iterated(k, detect_cyclic_structure(k));
  ASSERT_EQ(q.size(), 1);
  EXPECT_NEAR(q(0, 0), 0.4, 1e-15);
  const AbsorbedKernel pc = instances::pure_cycle3();
  EXPECT_NEAR(restrict_iterated(pc, detect_cyclic_structure(pc))(0, 0), 1.0, 1e-15);
  const AbsorbedKernel ap = instances::aperiodic_pair();
  EXPECT_TRUE(restrict_iterated(ap, detect_cyclic_structure(ap)).matrix().isApprox(ap.matrix()));
}

TEST(ChainCore, Actions) {
  const AbsorbedKernel k = instances::two_cycle(0.8, 0.5);
  const Measure left = act_left(Measure::Unit(2, 0), k);
  EXPECT_NEAR(left[1], 0.8, 1e-15);
  EXPECT_EQ(left[0], 0.0);
  const StateFunction right = act_right(k, StateFunction::Ones(2));
  EXPECT_NEAR(right[0], 0.8, 1e-15);
  EXPECT_NEAR(right[1], 0.5, 1e-15);
  const Measure uniform = Measure::Constant(3, 1.0 / 3.0);
  EXPECT_TRUE(act_left(uniform, instances::pure_cycle3()).isApprox(uniform));
  EXPECT_THROW(act_left(Measure::Ones(3), k), QsdError);
}

TEST(ChainCore, SurvivalProbability) {
  const AbsorbedKernel k = instances::two_cycle(0.8, 0.5);
  EXPECT_NEAR(survival_probability(k, Measure::Unit(2, 0), 2), 0.4, 1e-15);
  EXPECT_EQ(survival_probability(k, Measure::Unit(2, 1), 0), 1.0);
}

TEST(ChainCoreProperty, SemigroupLaw) {
  for (const auto& inst : random_suite(20, 77)) {
    for (int m = 0; m <= 8; ++m) {
      for (int n = 0; n <= 8; ++n) {
        const Matrix lhs = kernel_power(inst.kernel, m + n).matrix();
        const Matrix rhs = naive_power(inst.kernel.matrix(), m) * naive_power(inst.kernel.matrix(), n);
        ASSERT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12) << inst.name << " m=" << m << " n=" << n;
      }
    }
  }
}

TEST(ChainCoreProperty, MonotoneSurvivalAndPairing) {
  std::mt19937_64 rng(5);
  for (const auto& inst : random_suite(20, 78)) {
    const auto n = inst.kernel.size();
    const Measure mu = random_probability(n, rng);
    const StateFunction f = random_function(n, rng);
    double previous = 1.0;
    for (int k = 0; k <= 8; ++k) {
      const double s = survival_probability(inst.kernel, mu, k);
      ASSERT_LE(s, previous + 1e-15);
      ASSERT_GE(s, 0.0);
      previous = s;
      const AbsorbedKernel pk = kernel_power(inst.kernel, k);
      ASSERT_NEAR(act_left(mu, pk).dot(f.transpose()), mu.dot(act_right(pk, f).transpose()), 1e-12);
    }
  }
}
