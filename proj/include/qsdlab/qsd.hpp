#pragma once

#include "qsdlab/kernel.hpp"
#include "qsdlab/periodicity.hpp"
#include "qsdlab/spectral.hpp"

#include <vector>

namespace qsdlab {

/// L1 tolerance for the conditioning identity mu P_1 = theta mu.
inline constexpr double kQsdTolerance = 1e-9;

struct QsdCheck {
  bool is_qsd = false;
  double theta = 0.0;     // mu P_1 1_E
  double residual = 0.0;  // ||mu P_1 - theta mu||_1
};

/// Throws ThetaZero when mu P_1 1_E = 0.
QsdCheck is_qsd(const AbsorbedKernel& kernel, const Measure& mu, double tol = kQsdTolerance);

/// nu_QS proportional to sum_i theta0^{-i} nu P_i, nu a QSD of the iterated kernel
/// with rate theta0^t. Throws NotAQSD when that precondition fails.
Measure qsd_from_iterated(const Measure& nu_on_a0, double theta0, const AbsorbedKernel& kernel,
                          const CyclicStructure& cyclic, double tol = kQsdTolerance);

/// nu_QS(. n A_0) / nu_QS(A_0) as a measure on A_0. Throws ZeroMassOnA0.
Measure iterated_from_qsd(const Measure& nu_qs, const CyclicStructure& cyclic);

/// The t normalized measures nu P_i / nu P_i 1_E, i = 0..t-1, as measures on E.
std::vector<Measure> iterated_qsd_extremes(const Measure& nu_on_a0, const AbsorbedKernel& kernel,
                                           const CyclicStructure& cyclic);

/// Weights w_i proportional to theta0^{-i} nu P_i 1_E: the unique member of the
/// family below that is a QSD of P_1.
std::vector<double> periodic_weight_profile(const Measure& nu_on_a0, double theta0,
                                            const AbsorbedKernel& kernel, const CyclicStructure& cyclic);

/// sum_i w_i nu P_i / nu P_i 1_E. Throws DegenerateWeight for weights that are
/// negative, of the wrong length, not summing to 1, or when some nu P_i 1_E = 0.
Measure iterated_qsd_family(const Measure& nu_on_a0, const AbsorbedKernel& kernel,
                            const CyclicStructure& cyclic, const std::vector<double>& weights);

}  // namespace qsdlab
