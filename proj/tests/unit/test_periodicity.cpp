#include "support.hpp"

#include "qsdlab/errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace qsdtest;

TEST(Periodicity, CanonicalInstances) {
  const auto pc = detect_cyclic_structure(instances::pure_cycle3());
  EXPECT_EQ(pc.period(), 3);
  EXPECT_EQ(pc.classes(), (std::vector<int>{0, 1, 2}));
  const auto tc = detect_cyclic_structure(instances::two_cycle(0.8, 0.5));
  EXPECT_EQ(tc.period(), 2);
  EXPECT_EQ(tc.classes(), (std::vector<int>{0, 1}));
  EXPECT_EQ(detect_cyclic_structure(instances::aperiodic_pair()).period(), 1);
}

TEST(Periodicity, AnchorIsSmallestLabel) {
  Matrix m(3, 3);
  m << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  const auto cyclic = detect_cyclic_structure(AbsorbedKernel(m, {"z", "b", "m"}));
  EXPECT_EQ(cyclic.class_of(1), 0);  // "b"
  EXPECT_EQ(cyclic.class_of(2), 1);
  EXPECT_EQ(cyclic.class_of(0), 2);
}

TEST(Periodicity, Rejections) {
  Matrix reducible(3, 3);
  reducible << 0, 0.5, 0, 0.5, 0, 0, 0.9, 0, 0;
  try {
    detect_cyclic_structure(AbsorbedKernel(reducible, {"a", "b", "c"}));
    FAIL();
  } catch (const QsdError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotStronglyConnected);
  }
  try {
    detect_cyclic_structure(AbsorbedKernel(Matrix::Zero(2, 2), {"a", "b"}));
    FAIL();
  } catch (const QsdError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoSurvivingTransition);
  }
}

TEST(Periodicity, VerifyPartition) {
  const AbsorbedKernel k = instances::two_cycle(0.8, 0.5);
  EXPECT_EQ(verify_partition(k, CyclicStructure(2, {0, 1})), 0.0);
  // Swapping the two labels of a 2-cycle is again a valid labelling.
  EXPECT_EQ(verify_partition(k, CyclicStructure(2, {1, 0})), 0.0);
  // Wrong labellings of a three-state bipartite chain: worst misplaced row mass.
  Matrix m(3, 3);
  m << 0, 0.8, 0.1, 0.5, 0, 0, 1, 0, 0;
  EXPECT_EQ(verify_partition(AbsorbedKernel(m, {"a", "b", "c"}), CyclicStructure(2, {0, 1, 1})), 0.0);
  EXPECT_NEAR(verify_partition(AbsorbedKernel(m, {"a", "b", "c"}), CyclicStructure(2, {0, 1, 0})), 1.0, 1e-15);
  EXPECT_NEAR(verify_partition(AbsorbedKernel(m, {"a", "b", "c"}), CyclicStructure(2, {0, 0, 1})), 0.8, 1e-15);
  EXPECT_EQ(verify_partition(k, CyclicStructure(1, {0, 0})), 0.0);
  EXPECT_EQ(verify_partition(instances::pure_cycle3(), CyclicStructure(1, {0, 0, 0})), 0.0);
}

TEST(PeriodicityProperty, RoundTripOnRandomChains) {
  for (int s = 0; s < 60; ++s) {
    instances::RandomChainOptions opt;
    opt.period = 1 + s % 6;
    opt.n_states = opt.period * (1 + s % 7);
    const auto chain = instances::random_block_cyclic(opt, 900 + static_cast<std::uint64_t>(s));
    const auto cyclic = detect_cyclic_structure(chain.kernel);
    ASSERT_EQ(cyclic.period(), opt.period);
    ASSERT_EQ(verify_partition(chain.kernel, cyclic), 0.0);
    // Detected classes are a rotation of the generated ones.
    const int shift = cyclic.class_of(0) - chain.generated_class[0];
    for (Eigen::Index x = 0; x < chain.kernel.size(); ++x) {
      ASSERT_EQ(cyclic.class_of(x), cyclic.wrap(chain.generated_class[static_cast<std::size_t>(x)] + shift));
    }
  }
}

TEST(PeriodicityProperty, RelabelingEquivariance) {
  std::mt19937_64 rng(11);
  for (int s = 0; s < 30; ++s) {
    instances::RandomChainOptions opt;
    opt.period = 1 + s % 6;
    opt.n_states = opt.period * 3;
    const auto chain = instances::random_block_cyclic(opt, 1300 + static_cast<std::uint64_t>(s));
    const auto base = detect_cyclic_structure(chain.kernel);
    const auto n = chain.kernel.size();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix m(n, n);
    std::vector<std::string> labels(static_cast<std::size_t>(n));
    for (Eigen::Index a = 0; a < n; ++a) {
      labels[static_cast<std::size_t>(a)] = chain.kernel.labels()[static_cast<std::size_t>(perm[a])];
      for (Eigen::Index b = 0; b < n; ++b) m(a, b) = chain.kernel(perm[a], perm[b]);
    }
    const auto permuted = detect_cyclic_structure(AbsorbedKernel(m, labels));
    ASSERT_EQ(permuted.period(), base.period());
    for (Eigen::Index a = 0; a < n; ++a) ASSERT_EQ(permuted.class_of(a), base.class_of(perm[a]));
  }
}
