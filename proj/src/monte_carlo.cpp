#include "qsdlab/monte_carlo.hpp"

#include "qsdlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace qsdlab {

namespace {

using Sampler = std::discrete_distribution<int>;
using Row = Sampler::param_type;

// One outcome table per state over {0..n-1, cemetery = n}.
std::vector<Row> row_samplers(const Matrix& p, const StateFunction* absorption) {
  std::vector<Row> out;
  const auto n = p.rows();
  for (Eigen::Index x = 0; x < n; ++x) {
    std::vector<double> w(p.row(x).data(), p.row(x).data() + n);
    w.push_back(absorption ? (*absorption)[x] : 0.0);
    out.emplace_back(w.begin(), w.end());
  }
  return out;
}

Sampler initial_sampler(const Measure& mu) {
  if ((mu.array() < 0.0).any() || !(mu.sum() > 0.0)) {
    throw QsdError(ErrorKind::InvalidWeight, "initial law must be a nonnegative nonzero measure");
  }
  return Sampler(mu.data(), mu.data() + mu.size());
}

// Runs body(i) for every path, split into contiguous blocks across threads.
template <typename Body>
void for_paths(int n_paths, int threads, Body body) {
  threads = std::max(1, std::min(threads, n_paths));
  if (threads == 1) {
    for (int i = 0; i < n_paths; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const int block = (n_paths + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const int lo = w * block;
    const int hi = std::min(n_paths, lo + block);
    pool.emplace_back([=, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::mt19937_64 path_generator(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  return std::mt19937_64(seq);
}

TrajectoryBatch simulate_paths(const AbsorbedKernel& kernel, const Measure& mu, int horizon, int n_paths,
                               std::uint64_t seed, int threads) {
  if (mu.size() != kernel.size()) throw QsdError(ErrorKind::DimensionMismatch, "measure length differs from state count");
  if (n_paths < 1 || horizon < 0) throw QsdError(ErrorKind::IndexOutOfRange, "need n_paths >= 1 and horizon >= 0");
  const int n = static_cast<int>(kernel.size());
  const auto rows = row_samplers(kernel.matrix(), &kernel.absorption());
  const Sampler start = initial_sampler(mu);

  TrajectoryBatch batch;
  batch.seed = seed;
  batch.horizon = horizon;
  batch.n_states = n;
  batch.paths.resize(static_cast<std::size_t>(n_paths));
  batch.absorption_time.assign(static_cast<std::size_t>(n_paths), -1);
  for_paths(n_paths, threads, [&](int i) {
    auto gen = path_generator(seed, static_cast<std::uint64_t>(i));
    Sampler sampler;
    auto first = start;
    auto& path = batch.paths[static_cast<std::size_t>(i)];
    path.reserve(static_cast<std::size_t>(horizon) + 1);
    int x = first(gen);
    path.push_back(x);
    for (int step = 1; step <= horizon; ++step) {
      x = sampler(gen, rows[static_cast<std::size_t>(x)]);
      if (x == n) {
        batch.absorption_time[static_cast<std::size_t>(i)] = step;
        break;
      }
      path.push_back(x);
    }
  });
  return batch;
}

EmpiricalLaw conditional_empirical(const TrajectoryBatch& batch, int n) {
  if (n < 0 || n > batch.horizon) throw QsdError(ErrorKind::IndexOutOfRange, "time outside the simulated horizon");
  EmpiricalLaw out;
  out.law = Measure::Zero(batch.n_states);
  for (const auto& path : batch.paths) {
    if (static_cast<int>(path.size()) > n) {
      out.law[path[static_cast<std::size_t>(n)]] += 1.0;
      out.ess += 1.0;
    }
  }
  if (out.ess == 0.0) {
    std::ostringstream os;
    os << "no path survives to time " << n;
    throw QsdError(ErrorKind::NoSurvivors, os.str());
  }
  out.law /= out.ess;
  return out;
}

TrajectoryBatch simulate_q_process(const QProcessKernel& qp, const Measure& mu_prime, int horizon, int n_paths,
                                   std::uint64_t seed, int threads) {
  const auto m = static_cast<Eigen::Index>(qp.domain.size());
  if (mu_prime.size() != m) throw QsdError(ErrorKind::DimensionMismatch, "mu' must live on E'");
  if (n_paths < 1 || horizon < 0) throw QsdError(ErrorKind::IndexOutOfRange, "need n_paths >= 1 and horizon >= 0");
  const auto rows = row_samplers(qp.matrix, nullptr);
  const Sampler start = initial_sampler(mu_prime);

  TrajectoryBatch batch;
  batch.seed = seed;
  batch.horizon = horizon;
  batch.n_states = static_cast<int>(m);
  batch.paths.resize(static_cast<std::size_t>(n_paths));
  batch.absorption_time.assign(static_cast<std::size_t>(n_paths), -1);
  for_paths(n_paths, threads, [&](int i) {
    auto gen = path_generator(seed, static_cast<std::uint64_t>(i));
    Sampler sampler;
    auto first = start;
    auto& path = batch.paths[static_cast<std::size_t>(i)];
    path.reserve(static_cast<std::size_t>(horizon) + 1);
    int x = first(gen);
    path.push_back(x);
    for (int step = 1; step <= horizon; ++step) {
      x = sampler(gen, rows[static_cast<std::size_t>(x)]);
      path.push_back(x);
    }
  });
  return batch;
}

OccupationEstimate q_process_occupation(const QProcessKernel& qp, const Measure& mu_prime, int horizon,
                                        int n_paths, std::uint64_t seed, int threads) {
  const auto m = static_cast<Eigen::Index>(qp.domain.size());
  if (mu_prime.size() != m) throw QsdError(ErrorKind::DimensionMismatch, "mu' must live on E'");
  if (n_paths < 1 || horizon < 0) throw QsdError(ErrorKind::IndexOutOfRange, "need n_paths >= 1 and horizon >= 0");
  const auto rows = row_samplers(qp.matrix, nullptr);
  const Sampler start = initial_sampler(mu_prime);

  Matrix freq = Matrix::Zero(n_paths, m);
  for_paths(n_paths, threads, [&](int i) {
    auto gen = path_generator(seed, static_cast<std::uint64_t>(i));
    Sampler sampler;
    auto first = start;
    int x = first(gen);
    freq(i, x) += 1.0;
    for (int step = 1; step <= horizon; ++step) {
      x = sampler(gen, rows[static_cast<std::size_t>(x)]);
      freq(i, x) += 1.0;
    }
  });
  freq /= horizon + 1.0;

  OccupationEstimate out;
  out.n_paths = n_paths;
  out.mean = freq.colwise().mean();
  out.stderr_ = Measure::Zero(m);
  if (n_paths > 1) {
    const Matrix centered = freq.rowwise() - out.mean;
    const Eigen::RowVectorXd var = centered.cwiseProduct(centered).colwise().sum() / (n_paths - 1.0);
    out.stderr_ = (var / n_paths).cwiseSqrt();
  }
  return out;
}

Measure q_process_occupation_exact(const QProcessKernel& qp, const Measure& mu_prime, int horizon) {
  Measure law = mu_prime;
  Measure total = law;
  for (int step = 1; step <= horizon; ++step) {
    law = law * qp.matrix;
    total += law;
  }
  return total / (horizon + 1.0);
}

MeanEstimate estimate_time_average_mc(const TrajectoryBatch& batch, const StateFunction& f, int n) {
  if (f.size() != batch.n_states) throw QsdError(ErrorKind::DimensionMismatch, "function length differs from state count");
  if (n < 0 || n > batch.horizon) throw QsdError(ErrorKind::IndexOutOfRange, "time outside the simulated horizon");
  double sum = 0.0, sum_sq = 0.0;
  MeanEstimate out;
  for (const auto& path : batch.paths) {
    if (static_cast<int>(path.size()) <= n) continue;
    double avg = 0.0;
    for (int m = 0; m <= n; ++m) avg += f[path[static_cast<std::size_t>(m)]];
    avg /= n + 1.0;
    sum += avg;
    sum_sq += avg * avg;
    ++out.survivors;
  }
  if (out.survivors == 0) {
    std::ostringstream os;
    os << "no path survives to time " << n;
    throw QsdError(ErrorKind::NoSurvivors, os.str());
  }
  const double k = out.survivors;
  out.mean = sum / k;
  if (out.survivors > 1) {
    const double var = std::max(0.0, (sum_sq - k * out.mean * out.mean) / (k - 1.0));
    out.stderr_ = std::sqrt(var / k);
  }
  return out;
}

}  // namespace qsdlab
