#include "qsdlab/kernel.hpp"

#include "qsdlab/errors.hpp"
#include "qsdlab/periodicity.hpp"

#include <cmath>
#include <sstream>

namespace qsdlab {

AbsorbedKernel::AbsorbedKernel(Matrix raw, std::vector<std::string> labels)
    : matrix_(std::move(raw)), labels_(std::move(labels)) {
  const auto n = matrix_.rows();
  if (matrix_.cols() != n) {
    std::ostringstream os;
    os << "matrix is " << matrix_.rows() << "x" << matrix_.cols() << ", expected square";
    throw QsdError(ErrorKind::DimensionMismatch, os.str());
  }
  if (static_cast<Eigen::Index>(labels_.size()) != n) {
    std::ostringstream os;
    os << labels_.size() << " labels for " << n << " states";
    throw QsdError(ErrorKind::DimensionMismatch, os.str());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double& p = matrix_(i, j);
      if (!std::isfinite(p) || p < -kKernelTolerance) {
        std::ostringstream os;
        os << "entry (" << labels_[i] << "," << labels_[j] << ") = " << p;
        throw QsdError(ErrorKind::NegativeEntry, os.str());
      }
      if (p < 0.0) p = 0.0;
    }
  }
  absorption_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = matrix_.row(i).sum();
    if (s > 1.0 + kKernelTolerance) {
      std::ostringstream os;
      os << "row " << labels_[i] << " sums to " << s;
      throw QsdError(ErrorKind::RowSumExceedsOne, os.str());
    }
    absorption_[i] = std::max(0.0, 1.0 - s);
  }
}

Eigen::Index AbsorbedKernel::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

AbsorbedKernel validate_kernel(const Matrix& raw, std::vector<std::string> labels) {
  return AbsorbedKernel(raw, std::move(labels));
}

Matrix matrix_power(const Matrix& m, int n) {
  if (n < 0) throw QsdError(ErrorKind::IndexOutOfRange, "negative matrix power");
  Matrix result = Matrix::Identity(m.rows(), m.cols());
  Matrix base = m;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

AbsorbedKernel kernel_power(const AbsorbedKernel& kernel, int n) {
  return AbsorbedKernel(matrix_power(kernel.matrix(), n), kernel.labels());
}

AbsorbedKernel restrict_iterated(const AbsorbedKernel& kernel, const CyclicStructure& cyclic) {
  if (static_cast<Eigen::Index>(cyclic.size()) != kernel.size()) {
    throw QsdError(ErrorKind::DimensionMismatch, "cyclic structure does not match kernel");
  }
  const double residual = verify_partition(kernel, cyclic);
  if (residual > kKernelTolerance) {
    std::ostringstream os;
    os << "periodic residual " << residual;
    throw QsdError(ErrorKind::InvalidPartition, os.str());
  }
  const auto members = cyclic.members(0);
  const Matrix pt = matrix_power(kernel.matrix(), cyclic.period());
  const auto m = static_cast<Eigen::Index>(members.size());
  Matrix q(m, m);
  std::vector<std::string> labels;
  labels.reserve(members.size());
  for (Eigen::Index a = 0; a < m; ++a) {
    labels.push_back(kernel.labels()[members[a]]);
    for (Eigen::Index b = 0; b < m; ++b) q(a, b) = pt(members[a], members[b]);
  }
  return AbsorbedKernel(std::move(q), std::move(labels));
}

Measure act_left(const Measure& mu, const AbsorbedKernel& kernel_power_n) {
  if (mu.size() != kernel_power_n.size()) {
    throw QsdError(ErrorKind::DimensionMismatch, "measure length differs from state count");
  }
  return mu * kernel_power_n.matrix();
}

StateFunction act_right(const AbsorbedKernel& kernel_power_n, const StateFunction& f) {
  if (f.size() != kernel_power_n.size()) {
    throw QsdError(ErrorKind::DimensionMismatch, "function length differs from state count");
  }
  return kernel_power_n.matrix() * f;
}

double survival_probability(const AbsorbedKernel& kernel, const Measure& mu, int n) {
  if (mu.size() != kernel.size()) {
    throw QsdError(ErrorKind::DimensionMismatch, "measure length differs from state count");
  }
  Measure m = mu;
  for (int k = 0; k < n; ++k) m = m * kernel.matrix();
  return m.sum();
}

Measure normalized(const Measure& mu) {
  const double total = mu.sum();
  if (!(total > 0.0)) throw QsdError(ErrorKind::DegenerateWeight, "measure has no mass");
  return mu / total;
}

bool is_probability(const Measure& mu, double tol) {
  return (mu.array() >= 0.0).all() && std::abs(mu.sum() - 1.0) <= tol;
}

}  // namespace qsdlab
