#include "precise_eigen.hpp"

#include "qsdlab/errors.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Eigenvalues>

namespace qsdlab::detail {

namespace {
using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>,
                                           boost::multiprecision::et_off>;
using RealMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
}  // namespace

std::vector<std::complex<double>> precise_eigenvalues(const Matrix& m) {
  const RealMatrix lifted = m.cast<Real>();
  Eigen::EigenSolver<RealMatrix> solver(lifted, false);
  if (solver.info() != Eigen::Success) {
    throw QsdError(ErrorKind::OracleFailure, "extended-precision eigensolver did not converge");
  }
  std::vector<std::complex<double>> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const auto& z = solver.eigenvalues()[i];
    out.emplace_back(static_cast<double>(z.real()), static_cast<double>(z.imag()));
  }
  return out;
}

}  // namespace qsdlab::detail
