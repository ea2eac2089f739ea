#pragma once

#include "qsdlab/kernel.hpp"
#include "qsdlab/periodicity.hpp"
#include "qsdlab/spectral.hpp"

#include <vector>

namespace qsdlab {

/// (theta0^{-t} / t) sum_k nu P_k(. P_{t-k} eta), a probability on E.
Measure nu_qe(const SpectralCertificate& certificate, const AbsorbedKernel& kernel, const CyclicStructure& cyclic);

/// E_mu[(1/(N+1)) sum_{m<=N} f(X_m) | N < tau] for every N = 0..n_max, by one
/// rescaled forward sweep. Throws Extinct when the survival mass vanishes.
std::vector<double> time_averages_exact(const AbsorbedKernel& kernel, const Measure& mu, const StateFunction& f,
                                        int n_max);

/// Single-horizon version of the above.
double time_average_exact(const AbsorbedKernel& kernel, const Measure& mu, const StateFunction& f, int n);

/// E_mu[((1/(N+1)) sum_{m<=N} (f(X_m) - center))^2 | N < tau] for N = 0..n_max.
std::vector<double> second_moments_exact(const AbsorbedKernel& kernel, const Measure& mu, const StateFunction& f,
                                         double center, int n_max);

/// Second moment centered at nu_QE(f).
double second_moment_exact(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                           const SpectralCertificate& certificate, const Measure& mu, const StateFunction& f, int n);

struct QedRateReport {
  int n_max = 0;
  double target = 0.0;               // nu_QE(f)
  std::vector<double> scaled_error;  // (N+1) |average(N) - target|
  double sup_scaled_error = 0.0;
  double weight_ratio = 0.0;  // sum_i mu|A_i P_{t-i} V / sum_i mu|A_i eta_{t-i}
  double constant = 0.0;      // sup_scaled_error / weight_ratio
  double first_half_max = 0.0;
  double last_half_max = 0.0;
  bool bounded = false;  // last_half_max <= 1.05 first_half_max + 1e-9
  bool f_bounded_by_one = true;
};

/// Throws EtaOrthogonal when sum_i mu|A_i(eta_{t-i}) = 0.
QedRateReport qed_rate_report(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                              const SpectralCertificate& certificate, const Measure& mu, const StateFunction& f,
                              int n_max = 1000);

}  // namespace qsdlab
