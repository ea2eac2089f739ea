#pragma once

#include "qsdlab/kernel.hpp"
#include "qsdlab/periodicity.hpp"
#include "qsdlab/spectral.hpp"

#include <optional>
#include <vector>

namespace qsdlab {

/// Limit of theta0^{-(nt+j)} P_{nt+j} f(x) for x in A_k:
/// coefficient * measure(f) with coefficient theta0^{-(t+j)} P_{t-k} eta(x)
/// and measure nu P_{k+j}.
struct PointProfile {
  int k = 0;
  double coefficient = 0.0;
  Measure measure;
};

PointProfile limit_profile(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                           const CyclicStructure& cyclic, int j, Eigen::Index x);

/// Same limit for an initial measure: sum_k theta0^{-(t+j)} (mu|A_k P_{t-k} eta) nu P_{k+j}.
Measure limit_profile(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                      const CyclicStructure& cyclic, int j, const Measure& mu);

struct DecayReport {
  int n_max = 0;
  int period = 1;
  double alpha = 0.0;
  double c_q_prime = 0.0;
  /// R(n, j) for n = 1..n_max, stored at [n-1][j].
  std::vector<std::vector<double>> residual;
  /// R(n, j) / alpha^n with 0/0 := 0.
  std::vector<std::vector<double>> ratio;
  /// R(n, j) / alpha^{n-1}, the exponent the argument through the iterated kernel produces.
  std::vector<std::vector<double>> ratio_shifted;
  double sup_ratio = 0.0;
  double sup_ratio_shifted = 0.0;
  bool bound_holds = false;          // sup_ratio <= C'_Q
  bool shifted_bound_holds = false;  // sup_ratio_shifted <= C'_Q
  double fitted_rate = 0.0;
  int fit_points = 0;
  double rate_slack = 0.02;
  bool rate_ok = false;  // fitted_rate <= alpha + rate_slack
  int functions_tested = 0;
  int functions_skipped = 0;  // basis functions outside B_V
  int zero_denominator_states = 0;
  /// Max entrywise gap between the deflated route and direct powers of P, for n <= 8.
  double direct_crosscheck = 0.0;
};

/// Residual of the periodic limit estimate for one f in B_V (throws NotInBV otherwise).
DecayReport verify_main_estimate(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                                 const SpectralCertificate& certificate, const StateFunction& f,
                                 int n_max = 40, double rate_slack = 0.02);

/// Sup of the same residual over the signed basis functions +-e_y that lie in B_V.
DecayReport verify_main_estimate_basis(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                                       const SpectralCertificate& certificate, int n_max = 40,
                                       double rate_slack = 0.02);

/// mu P_n / mu P_n 1_E, renormalized at every step. Throws Extinct.
Measure conditional_law(const AbsorbedKernel& kernel, const Measure& mu, int n);

/// w_i = mu|A_i P_{t-i} eta, i = 0..t-1.
std::vector<double> eta_class_weights(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                                      const CyclicStructure& cyclic, const Measure& mu);

/// Limit of conditional_law(mu, nt+j) as n grows. Throws EtaOrthogonal.
Measure conditional_limit(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                          const CyclicStructure& cyclic, const Measure& mu, int j);

struct Phi2Options {
  std::optional<double> theta2;
  std::optional<double> epsilon;
  /// Read the return condition with P_{n0} instead of Q_{n0}.
  bool one_step_reading = false;
  int n0_limit = 100000;
};

struct LyapunovWitness {
  double theta2 = 0.0;
  double epsilon = 0.0;
  std::vector<Eigen::Index> k_set;  // indices into A_0
  double nu_of_k = 0.0;
  int n0 = 0;
  StateFunction phi2;  // on A_0
  double return_margin = 0.0;  // inf over K of theta2^{-n0 t} Q_{n0} 1_K
  double lyapunov_slack = 0.0;  // min over A_0 of Q_1 phi2 - theta2^t phi2
  double stated_constant = 0.0;
  bool stated_constant_applies = false;  // theta0 < theta2
  double stated_bound_slack = 0.0;  // min over A_0 of stated_constant * eta - phi2
  double derived_constant = 0.0;   // c / eps * sum_{k<n0} (theta0/theta2)^{kt}
  double derived_bound_slack = 0.0;
  double phi2_min_on_k = 0.0;
  bool phi2_in_unit_interval = false;
  bool lyapunov_holds = false;
  bool stated_bound_holds = false;  // vacuously true when it does not apply
  bool derived_bound_holds = false;
  bool valid = false;  // every invariant above that applies
};

LyapunovWitness build_phi2(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                           const SpectralCertificate& certificate, const Phi2Options& options = {});

/// Smallest n >= 0 with c_q_prime theta0^{-4t} alpha^n ratio <= 1/2.
int hyp_main_threshold(double c_q_prime, double theta0, int period, double alpha, double ratio);

/// Same threshold with ratio = sum_i mu|A_i P_{t-i} V / sum_i mu|A_i P_{t-i} eta. Throws EtaOrthogonal.
int hyp_main_threshold(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                       const CyclicStructure& cyclic, const Measure& mu);

struct CriterionReport {
  bool holds = false;
  /// theta0^i w_i, constant over i exactly when the conditional laws converge.
  std::vector<double> scaled_weights;
  double relative_spread = 0.0;
  /// Max pairwise L1 distance between the t conditional limits.
  double limit_spread = 0.0;
  /// Max over j of the L1 distance from the j-th limit to the QSD.
  double distance_to_qsd = 0.0;
};

CriterionReport qsd_convergence_criterion(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                                          const CyclicStructure& cyclic, const Measure& mu,
                                          double tol = 1e-9);

}  // namespace qsdlab
