#pragma once

#include "qsdlab/instances.hpp"
#include "qsdlab/kernel.hpp"
#include "qsdlab/periodicity.hpp"
#include "qsdlab/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

namespace qsdtest {

using namespace qsdlab;

struct Instance {
  std::string name;
  AbsorbedKernel kernel;
  CyclicStructure cyclic;
  SpectralCertificate cert;
};

inline Instance analyse(std::string name, AbsorbedKernel kernel) {
  CyclicStructure cyclic = detect_cyclic_structure(kernel);
  SpectralCertificate cert = certify(kernel, cyclic);
  return Instance{std::move(name), std::move(kernel), std::move(cyclic), std::move(cert)};
}

inline Instance two_cycle(double p = 0.8, double q = 0.5) {
  return analyse("TwoCycle", instances::two_cycle(p, q));
}

inline std::vector<Instance> canonical() {
  std::vector<Instance> out;
  out.push_back(analyse("TwoCycle(0.8,0.5)", instances::two_cycle(0.8, 0.5)));
  out.push_back(analyse("TwoCycle(0.5,0.5)", instances::two_cycle(0.5, 0.5)));
  out.push_back(analyse("PureCycle3", instances::pure_cycle3()));
  out.push_back(analyse("AperiodicPair", instances::aperiodic_pair()));
  return out;
}

/// Random block-cyclic chains: n <= 60, t in 1..6.
inline std::vector<Instance> random_suite(int count = 100, std::uint64_t base_seed = 20240601) {
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    instances::RandomChainOptions opt;
    opt.period = 1 + s % 6;
    opt.n_states = std::min(60, opt.period * (2 + (s * 7) % 9));
    opt.edge_density = 0.3 + 0.1 * (s % 6);
    opt.max_absorption = 0.05 + 0.05 * (s % 7);
    auto chain = instances::random_block_cyclic(opt, base_seed + static_cast<std::uint64_t>(s));
    out.push_back(analyse("random#" + std::to_string(s), std::move(chain.kernel)));
  }
  return out;
}

// ------------------------------------------------------------- oracles
// Deliberately naive routes that share no code with the library.

inline Matrix naive_power(const Matrix& m, int n) {
  Matrix out = Matrix::Identity(m.rows(), m.cols());
  for (int k = 0; k < n; ++k) out = out * m;
  return out;
}

/// Spectral radius of a nonnegative primitive matrix by power iteration.
inline double perron_power_iteration(const Matrix& q, int iterations = 200000) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(q.rows());
  double lambda = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Eigen::VectorXd w = q * v;
    const double next = w.sum() / v.sum();
    v = w / w.sum();
    if (k > 50 && std::abs(next - lambda) <= 1e-15 * next) return next;
    lambda = next;
  }
  return lambda;
}

/// Eigenvalues of a general matrix, unsorted, from Eigen's real Schur route.
inline std::vector<std::complex<double>> oracle_eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, false);
  std::vector<std::complex<double>> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(solver.eigenvalues()[i]);
  return out;
}

/// Stationary law from the eigenvector of P^T at eigenvalue 1.
inline Measure oracle_stationary(const Matrix& stochastic) {
  Eigen::EigenSolver<Matrix> solver(stochastic.transpose(), true);
  Eigen::Index best = 0;
  for (Eigen::Index i = 0; i < stochastic.rows(); ++i) {
    if (std::abs(solver.eigenvalues()[i] - 1.0) < std::abs(solver.eigenvalues()[best] - 1.0)) best = i;
  }
  Eigen::VectorXd v = solver.eigenvectors().col(best).real();
  v /= v.sum();
  return v.transpose();
}

/// Conditional time average by brute force over explicit powers of P.
inline double oracle_time_average(const Matrix& p, const Measure& mu, const StateFunction& f, int n) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p.rows());
  double num = 0.0;
  for (int m = 0; m <= n; ++m) {
    const Measure law = mu * naive_power(p, m);
    num += law * (f.cwiseProduct(naive_power(p, n - m) * ones));
  }
  return num / ((n + 1.0) * (mu * naive_power(p, n) * ones)(0));
}

inline Measure random_probability(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Measure mu(n);
  for (Eigen::Index i = 0; i < n; ++i) mu[i] = u(rng);
  return mu / mu.sum();
}

inline StateFunction random_function(Eigen::Index n, std::mt19937_64& rng, double bound = 1.0) {
  std::uniform_real_distribution<double> u(-bound, bound);
  StateFunction f(n);
  for (Eigen::Index i = 0; i < n; ++i) f[i] = u(rng);
  return f;
}

inline double l1(const Measure& a, const Measure& b) { return (a - b).lpNorm<1>(); }

}  // namespace qsdtest
