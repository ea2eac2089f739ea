#pragma once

#include "qsdlab/kernel.hpp"
#include "qsdlab/periodicity.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace qsdlab {

/// Perron triple of the iterated kernel Q on A_0: Q eta = lambda eta,
/// nu Q = lambda nu, nu a probability, nu(eta) = 1.
struct PerronData {
  double eigenvalue = 0.0;  // theta0^t
  StateFunction eta;
  Measure nu;
  int iterations = 0;  // 0 for the dense route
};

enum class PerronMethod {
  Auto,   // dense for |A_0| <= 512, power iteration beyond
  Dense,
  Power,
};

inline constexpr Eigen::Index kDensePerronLimit = 512;
inline constexpr double kPeripheralTolerance = 1e-9;

PerronData compute_perron(const AbsorbedKernel& iterated, PerronMethod method = PerronMethod::Auto);

/// Eigenvalues sorted by decreasing modulus (ties broken by decreasing real part).
std::vector<std::complex<double>> sorted_eigenvalues(const Matrix& m);

struct MixingConstants {
  double alpha = 0.0;
  /// Sup over all |f| <= V of the mixing residual, i.e. the certified constant.
  double c_q = 0.0;
  /// Same scan restricted to the signed basis functions +-V(y) e_y.
  double c_q_basis = 0.0;
  int k_max = 0;
  /// k at which the certified constant is attained.
  int k_attained = 0;
  /// alpha == 0 and the 0/0 := 0 convention was applied.
  bool alpha_zero = false;
  /// Q_1 V <= (||eta/V|| nu(V) + C_Q alpha) V holds entrywise.
  bool trivial_bound_holds = true;
  /// min over x of the right side minus the left side, divided by V(x).
  double trivial_bound_slack = 0.0;
};

/// alpha is the exact subdominant-to-Perron modulus ratio; C_Q is the max over
/// k <= k_max of sup_x sup_{|f|<=V} |lambda^{-k} Q_k f(x) - eta(x) nu(f)| / (alpha^k V(x)).
/// Residuals are taken from powers of the deflated kernel Q - lambda eta nu
/// rescaled by lambda alpha, so they stay representable for large k.
MixingConstants certify_mixing(const AbsorbedKernel& iterated, const PerronData& perron,
                               const StateFunction& v_weights, int k_max = 200);

/// Everything the periodic estimates need about the iterated kernel.
struct SpectralCertificate {
  int period = 1;
  double theta0 = 0.0;        // t-th root of the Perron eigenvalue of Q
  double theta0_pow_t = 0.0;  // Perron eigenvalue of Q
  StateFunction eta;          // on A_0
  Measure nu;                 // on A_0
  StateFunction v_weights;    // on A_0, all >= 1
  StateFunction eta_on_e;     // eta extended by 0 to E
  Measure nu_on_e;            // nu extended by 0 to E
  MixingConstants mixing;
  double eta_over_v_sup = 0.0;  // ||eta/V||_inf
  double nu_of_v = 0.0;         // nu(V)
  double c_q_prime = 0.0;       // C_Q theta0^{-2t} (||eta/V|| nu(V) + C_Q alpha)^2

  double alpha() const noexcept { return mixing.alpha; }
  double c_q() const noexcept { return mixing.c_q; }
};

struct CertifyOptions {
  /// V on A_0; defaults to 1.
  std::optional<StateFunction> v_weights;
  int k_max = 200;
  PerronMethod method = PerronMethod::Auto;
};

SpectralCertificate certify(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                            const CertifyOptions& options = {});

/// (n+1)x(n+1) stochastic matrix with the cemetery adjoined as the last state.
Matrix build_extended_kernel(const AbsorbedKernel& kernel);

/// |P_i(f 1_{A_i})| <= V on A_0 for every i < t (V given on A_0).
bool bv_membership(const StateFunction& f, const AbsorbedKernel& kernel,
                   const CyclicStructure& cyclic, const StateFunction& v_on_a0);

/// Which statement of the periodic spectral trichotomy an eigenpair instantiates.
enum class SpectralPoint {
  CemeteryCharged,  // h(cemetery) != 0
  PerronVisible,    // h(cemetery) = 0, some nu P_i h != 0
  Bulk,             // h(cemetery) = 0, all nu P_i h = 0
};

struct EigenpairRecord {
  std::complex<double> eigenvalue;
  std::complex<double> h_cemetery;
  std::vector<std::complex<double>> nu_p_i_h;  // i = 0..t-1, eigenvector scaled to unit sup-norm
  SpectralPoint point = SpectralPoint::Bulk;
  /// For PerronVisible pairs: whether the eigenvalue equals theta0.
  bool eigenvalue_is_theta0 = false;
  /// For CemeteryCharged pairs: whether the eigenfunction is constant.
  bool constant_eigenfunction = false;
};

struct RingMember {
  int k = 0;                          // omega = exp(2 pi i k / t)
  std::complex<double> expected;      // theta0 * omega
  std::complex<double> nearest;       // closest computed eigenvalue of P_1 on E
  double eigenvalue_error = 0.0;
  double eigenfunction_residual = 0.0;  // ||P_1 h - theta0 omega h|| / ||h||, h from the closed form
  double alignment_error = 0.0;         // distance of the solver eigenvector to span(h)
  ComplexFunction h;                    // closed-form eigenfunction on E
};

struct SpectrumReport {
  std::vector<std::complex<double>> restricted_eigenvalues;  // P_1 on E
  std::vector<std::complex<double>> extended_eigenvalues;    // cemetery adjoined
  std::vector<RingMember> ring;
  int ring_count = 0;  // eigenvalues of P_1 on E with modulus within tol of theta0
  double bulk_bound = 0.0;  // theta0 alpha^{1/t}
  double bulk_max_modulus = 0.0;
  bool ring_ok = false;
  bool bulk_ok = false;
  /// The bulk was recomputed in 100-digit arithmetic after the double oracle exceeded the bound.
  bool bulk_refined = false;
  bool theta0_below_one = false;
  int unit_eigenvalue_multiplicity = 0;  // in the extended kernel
  bool unit_eigenfunction_constant = false;
  std::vector<EigenpairRecord> eigenpairs;  // extended kernel
  /// PerronVisible pairs whose eigenvalue is not theta0 (nonreal ring members).
  int perron_visible_off_theta0 = 0;
  double tolerance = 1e-8;
};

SpectrumReport classify_spectrum(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                                 const SpectralCertificate& certificate, double tol = 1e-8);

/// h_omega = sum_i omega^{-i} theta0^{-i} P_i eta, eta extended by 0 off A_0.
ComplexFunction ring_eigenfunction(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                                   const SpectralCertificate& certificate, int k);

}  // namespace qsdlab
