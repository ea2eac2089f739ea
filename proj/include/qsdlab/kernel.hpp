#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace qsdlab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexMatrix = Eigen::MatrixXcd;

// Measures act from the left, functions from the right; keeping them as row and
// column vectors makes the two actions distinct at the type level.
using Measure = Eigen::RowVectorXd;
using StateFunction = Eigen::VectorXd;
using ComplexFunction = Eigen::VectorXcd;

class CyclicStructure;

/// Row-sum and clamping tolerance applied when a kernel is validated.
inline constexpr double kKernelTolerance = 1e-12;

/// Substochastic one-step transition operator on a finite labelled state space.
/// The cemetery state is implicit: row i leaks `absorption()[i]` to it.
class AbsorbedKernel {
public:
  /// Validates `raw` and takes ownership. Entries in [-1e-12, 0) are clamped
  /// to zero; anything more negative is a NegativeEntry, any row summing past
  /// 1 + 1e-12 is RowSumExceedsOne.
  AbsorbedKernel(Matrix raw, std::vector<std::string> labels);

  Eigen::Index size() const noexcept { return matrix_.rows(); }
  const Matrix& matrix() const noexcept { return matrix_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const StateFunction& absorption() const noexcept { return absorption_; }

  double operator()(Eigen::Index from, Eigen::Index to) const { return matrix_(from, to); }

  /// Index of `label`, or -1 if absent.
  Eigen::Index index_of(const std::string& label) const;

private:
  Matrix matrix_;
  std::vector<std::string> labels_;
  StateFunction absorption_;
};

AbsorbedKernel validate_kernel(const Matrix& raw, std::vector<std::string> labels);

/// P_n = P_1^n by repeated squaring; n = 0 gives the identity.
AbsorbedKernel kernel_power(const AbsorbedKernel& kernel, int n);

/// Plain matrix power used internally where labels are irrelevant.
Matrix matrix_power(const Matrix& m, int n);

/// Q_1: the t-step kernel P_t restricted to the class A_0.
AbsorbedKernel restrict_iterated(const AbsorbedKernel& kernel, const CyclicStructure& cyclic);

Measure act_left(const Measure& mu, const AbsorbedKernel& kernel_power_n);
StateFunction act_right(const AbsorbedKernel& kernel_power_n, const StateFunction& f);

/// mu P_n 1_E, evaluated by n successive left actions.
double survival_probability(const AbsorbedKernel& kernel, const Measure& mu, int n);

/// Total-mass normalization; throws DegenerateWeight on a zero measure.
Measure normalized(const Measure& mu);

bool is_probability(const Measure& mu, double tol = 1e-12);

}  // namespace qsdlab
