#pragma once

#include "qsdlab/kernel.hpp"
#include "qsdlab/periodicity.hpp"
#include "qsdlab/spectral.hpp"

#include <vector>

namespace qsdlab {

/// eta_k = theta0^{-k} P_k eta on E for k = 0..t; eta_k lives on A_{t-k mod t}.
struct EtaProfile {
  std::vector<StateFunction> eta_k;
  /// ||eta_t - eta_0||_inf, zero up to round-off.
  double periodicity_error = 0.0;

  /// eta_{k mod t}.
  const StateFunction& at(int k) const {
    const int t = static_cast<int>(eta_k.size()) - 1;
    return eta_k[static_cast<std::size_t>(((k % t) + t) % t)];
  }
};

EtaProfile eta_profile(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                       const CyclicStructure& cyclic);

/// Values of eta_{t-i}(x) below this are rejected as numerically unstable.
inline constexpr double kEtaUnderflow = 1e-300;

/// The chain conditioned never to be absorbed, on E' = {x in A_i : eta_{t-i}(x) > 0}.
struct QProcessKernel {
  std::vector<Eigen::Index> domain;  // indices into E, ascending
  std::vector<std::string> labels;
  std::vector<int> class_of;         // class of each domain state
  Matrix matrix;                     // stochastic on E'
  double max_row_sum_error = 0.0;
  /// Position of a state of E in `domain`, or -1.
  std::vector<Eigen::Index> position;
};

/// P~(x,y) = P(x,y) eta_{t-i-1}(y) / (theta0 eta_{t-i}(x)) for x in A_i.
/// Throws EmptyDomain and UnderflowEta.
QProcessKernel build_q_process(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                               const CyclicStructure& cyclic);

struct SemigroupCheck {
  int max_steps = 0;
  double max_discrepancy = 0.0;
  int worst_step = 0;
};

/// Compares (P~)^m with theta0^{-m} P_m(. eta_{t-i-m}) / eta_{t-i} for m <= n_max t.
SemigroupCheck q_semigroup_check(const QProcessKernel& qp, const SpectralCertificate& certificate,
                                 const AbsorbedKernel& kernel, const CyclicStructure& cyclic, int n_max = 10);

struct InvariantCandidate {
  Measure measure;        // on E'
  double mass = 0.0;
  double residual_l1 = 0.0;  // ||pi P~ - pi||_1
  double residual_tv = 0.0;  // half of the above
  double distance_to_oracle = 0.0;  // L1
};

struct InvariantReport {
  /// [(1 - theta0)/(1 - theta0^t)] sum_i nu P_i(. eta_{t-i}); 1/t replaces the prefactor at theta0 = 1.
  InvariantCandidate stated;
  /// (1/t) sum_i theta0^{-i} nu P_i(. eta_{t-i}).
  InvariantCandidate corrected;
  /// Stationary law of P~ from a dense solve.
  Measure oracle;
  double oracle_residual_l1 = 0.0;
  /// corrected(A_i) for each class.
  std::vector<double> class_masses;
};

InvariantReport invariant_candidates(const QProcessKernel& qp, const SpectralCertificate& certificate,
                                     const AbsorbedKernel& kernel, const CyclicStructure& cyclic);

struct ContractionReport {
  int n_max = 0;
  /// d(n, j) = ||mu' P~^{nt+j} - L_j||_TV at [n][j], n = 0..n_max.
  std::vector<std::vector<double>> distance;
  std::vector<Measure> oracle_limits;  // eigenprojection of P~^t per class
  std::vector<Measure> theory_limits;  // sum_i mu'(A_i) theta0^{-(i+j)} nu P_{i+j}(. eta_{t-i-j})
  std::vector<Measure> stated_limits;   // same with theta0^{t-i} in place of theta0^{-(i+j)}
  double theory_gap = 0.0;  // max_j ||theory - oracle||_1
  double stated_gap = 0.0;   // max_j ||stated - oracle||_1
  double fitted_rate = 0.0;
  int fit_points = 0;
  double alpha = 0.0;
  bool rate_ok = false;
  bool converges = false;  // d(n_max, j) below 1e-8 or the rate test passes
};

ContractionReport contraction_report(const QProcessKernel& qp, const SpectralCertificate& certificate,
                                     const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                                     const Measure& mu_prime, int n_max = 40, double rate_slack = 0.02);

/// Stationary distribution of a stochastic matrix with a unique invariant law.
Measure stationary_distribution(const Matrix& stochastic);

}  // namespace qsdlab
