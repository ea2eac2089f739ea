#pragma once

#include "qsdlab/kernel.hpp"
#include "qsdlab/q_process.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace qsdlab {

/// Path i draws from its own generator, seeded from (seed, i), so results do
/// not depend on how paths are split across threads.
std::mt19937_64 path_generator(std::uint64_t seed, std::uint64_t path);

struct TrajectoryBatch {
  std::uint64_t seed = 0;
  int horizon = 0;
  int n_states = 0;
  /// States X_0..X_{min(horizon, tau - 1)}; shorter than horizon + 1 iff absorbed.
  std::vector<std::vector<int>> paths;
  /// tau for absorbed paths, -1 for paths alive at the horizon.
  std::vector<int> absorption_time;
};

TrajectoryBatch simulate_paths(const AbsorbedKernel& kernel, const Measure& mu, int horizon, int n_paths,
                               std::uint64_t seed, int threads = 1);

struct EmpiricalLaw {
  Measure law;
  double ess = 0.0;  // survivors; every kept path has unit weight
};

/// Law of X_n among paths with n < tau. Throws NoSurvivors.
EmpiricalLaw conditional_empirical(const TrajectoryBatch& batch, int n);

/// mu' is a law on the Q-process domain; paths are in domain positions.
TrajectoryBatch simulate_q_process(const QProcessKernel& qp, const Measure& mu_prime, int horizon, int n_paths,
                                   std::uint64_t seed, int threads = 1);

struct OccupationEstimate {
  Measure mean;    // average over paths of the occupation frequencies up to the horizon
  Measure stderr_;  // across-path standard error per state
  int n_paths = 0;
};

/// Occupation frequencies of the Q-process over [0, horizon], streamed without storing paths.
OccupationEstimate q_process_occupation(const QProcessKernel& qp, const Measure& mu_prime, int horizon,
                                        int n_paths, std::uint64_t seed, int threads = 1);

/// Exact counterpart: (1/(H+1)) sum_{m<=H} mu' P~^m.
Measure q_process_occupation_exact(const QProcessKernel& qp, const Measure& mu_prime, int horizon);

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int survivors = 0;
};

/// Sample mean of (1/(N+1)) sum_{m<=N} f(X_m) over paths with N < tau. Throws NoSurvivors.
MeanEstimate estimate_time_average_mc(const TrajectoryBatch& batch, const StateFunction& f, int n);

}  // namespace qsdlab
