#pragma once

#include "qsdlab/kernel.hpp"

#include <cstdint>
#include <vector>

namespace qsdlab::instances {

/// a -> b with probability p, b -> a with probability q; everything else is absorbed.
AbsorbedKernel two_cycle(double p, double q);

/// Deterministic rotation s0 -> s1 -> s2 -> s0, no absorption.
AbsorbedKernel pure_cycle3();

/// Aperiodic two-state chain with a 0.3 self-loop on a.
AbsorbedKernel aperiodic_pair();

struct RandomChainOptions {
  int n_states = 30;
  int period = 3;
  double edge_density = 0.6;
  double max_absorption = 0.3;
  /// Shuffle state order so classes interleave in label order.
  bool shuffle_states = true;
};

struct RandomChain {
  AbsorbedKernel kernel;
  int period;
  /// Class of each state as generated (a rotation of the detected labelling).
  std::vector<int> generated_class;
};

/// Draws a strongly connected block-cyclic substochastic chain whose detected
/// period is exactly `options.period`. Deterministic in `seed`.
RandomChain random_block_cyclic(const RandomChainOptions& options, std::uint64_t seed);

}  // namespace qsdlab::instances
