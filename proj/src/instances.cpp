#include "qsdlab/instances.hpp"

#include "qsdlab/errors.hpp"
#include "qsdlab/periodicity.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

namespace qsdlab::instances {

AbsorbedKernel two_cycle(double p, double q) {
  Matrix m(2, 2);
  m << 0.0, p, q, 0.0;
  return AbsorbedKernel(std::move(m), {"a", "b"});
}

AbsorbedKernel pure_cycle3() {
  Matrix m(3, 3);
  m << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  return AbsorbedKernel(std::move(m), {"s0", "s1", "s2"});
}

AbsorbedKernel aperiodic_pair() {
  Matrix m(2, 2);
  m << 0.3, 0.6, 0.5, 0.0;
  return AbsorbedKernel(std::move(m), {"a", "b"});
}

namespace {

std::vector<std::string> padded_labels(int n) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%03d", i);
    labels.emplace_back(buf);
  }
  return labels;
}

}  // namespace

RandomChain random_block_cyclic(const RandomChainOptions& options, std::uint64_t seed) {
  const int n = options.n_states;
  const int t = options.period;
  if (t < 1 || n < t) {
    throw QsdError(ErrorKind::DimensionMismatch, "need at least one state per class");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int attempt = 0; attempt < 1000; ++attempt) {
    // class sizes: one state each, the rest spread uniformly
    std::vector<int> generated(static_cast<std::size_t>(n));
    for (int i = 0; i < t; ++i) generated[static_cast<std::size_t>(i)] = i;
    std::uniform_int_distribution<int> pick_class(0, t - 1);
    for (int i = t; i < n; ++i) generated[static_cast<std::size_t>(i)] = pick_class(rng);
    if (options.shuffle_states) std::shuffle(generated.begin(), generated.end(), rng);

    Matrix m = Matrix::Zero(n, n);
    for (int x = 0; x < n; ++x) {
      const int target = (generated[static_cast<std::size_t>(x)] + 1) % t;
      std::vector<int> candidates;
      for (int y = 0; y < n; ++y) {
        if (generated[static_cast<std::size_t>(y)] == target) candidates.push_back(y);
      }
      bool any = false;
      for (int y : candidates) {
        if (unit(rng) < options.edge_density) {
          m(x, y) = 0.05 + unit(rng);
          any = true;
        }
      }
      if (!any) {
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        m(x, candidates[pick(rng)]) = 0.05 + unit(rng);
      }
      const double keep = 1.0 - options.max_absorption * unit(rng);
      m.row(x) *= keep / m.row(x).sum();
    }

    try {
      AbsorbedKernel kernel(m, padded_labels(n));
      const auto cyclic = detect_cyclic_structure(kernel);
      if (cyclic.period() != t) continue;
      return RandomChain{std::move(kernel), t, std::move(generated)};
    } catch (const QsdError&) {
      continue;
    }
  }
  throw QsdError(ErrorKind::OracleFailure, "could not draw a block-cyclic chain with the requested period");
}

}  // namespace qsdlab::instances
