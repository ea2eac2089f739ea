#pragma once

#include "qsdlab/kernel.hpp"

#include <vector>

namespace qsdlab {

/// Period t and cyclic classes A_0..A_{t-1}: all surviving mass leaving a state
/// of A_i lands in A_{i+1 mod t}.
class CyclicStructure {
public:
  /// Throws InvalidPartition if a class index is out of range or a class is empty.
  CyclicStructure(int period, std::vector<int> class_of);

  int period() const noexcept { return period_; }
  std::size_t size() const noexcept { return class_of_.size(); }
  int class_of(Eigen::Index state) const { return class_of_[static_cast<std::size_t>(state)]; }
  const std::vector<int>& classes() const noexcept { return class_of_; }

  /// Ascending state indices of A_cls.
  std::vector<Eigen::Index> members(int cls) const;

  /// 1_{A_cls} as a function on E.
  StateFunction indicator(int cls) const;

  /// mu restricted to A_cls (other entries zeroed).
  Measure restrict(const Measure& mu, int cls) const;

  /// Embeds a vector on A_0 into E, zero elsewhere.
  StateFunction extend_from_a0(const StateFunction& on_a0) const;
  Measure extend_from_a0(const Measure& on_a0) const;

  /// Restriction of a function on E to A_0.
  StateFunction restrict_to_a0(const StateFunction& f) const;

  /// Index arithmetic mod t, always in [0, t).
  int wrap(int i) const noexcept { return ((i % period_) + period_) % period_; }

private:
  int period_;
  std::vector<int> class_of_;
};

/// Finds the unique period and classes of a strongly connected support graph.
/// A_0 is the class holding the lexicographically smallest label.
/// Throws NoSurvivingTransition when the kernel is identically zero and
/// NotStronglyConnected otherwise when the support graph is reducible.
CyclicStructure detect_cyclic_structure(const AbsorbedKernel& kernel);

/// Max over x in A_i of the surviving mass sent outside A_{i+1 mod t}.
double verify_partition(const AbsorbedKernel& kernel, const CyclicStructure& cyclic);

}  // namespace qsdlab
