#pragma once

#include "qsdlab/kernel.hpp"

#include <complex>
#include <vector>

namespace qsdlab::detail {

// Eigenvalues in 100-digit arithmetic. Defective eigenvalues of a double matrix
// are resolved to roughly 1e-100^(1/m) instead of 1e-16^(1/m) for a Jordan block of size m.
std::vector<std::complex<double>> precise_eigenvalues(const Matrix& m);

}  // namespace qsdlab::detail
