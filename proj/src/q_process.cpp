#include "qsdlab/q_process.hpp"

#include "qsdlab/errors.hpp"

#include "orbits.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qsdlab {

namespace {

Measure on_domain(const QProcessKernel& qp, const Measure& on_e) {
  Measure out(static_cast<Eigen::Index>(qp.domain.size()));
  for (std::size_t a = 0; a < qp.domain.size(); ++a) out[static_cast<Eigen::Index>(a)] = on_e[qp.domain[a]];
  return out;
}

}  // namespace

EtaProfile eta_profile(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                       const CyclicStructure& cyclic) {
  const int t = cyclic.period();
  EtaProfile out;
  out.eta_k = detail::right_orbit(kernel.matrix(), certificate.eta_on_e, t);
  for (int k = 0; k <= t; ++k) out.eta_k[static_cast<std::size_t>(k)] *= std::pow(certificate.theta0, -k);
  out.periodicity_error = (out.eta_k.back() - out.eta_k.front()).cwiseAbs().maxCoeff();
  return out;
}

QProcessKernel build_q_process(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                               const CyclicStructure& cyclic) {
  const int t = cyclic.period();
  const auto n = kernel.size();
  const EtaProfile profile = eta_profile(certificate, kernel, cyclic);

  QProcessKernel qp;
  qp.position.assign(static_cast<std::size_t>(n), -1);
  for (Eigen::Index x = 0; x < n; ++x) {
    const int i = cyclic.class_of(x);
    const double h = profile.at(t - i)[x];
    if (!(h > 0.0)) continue;
    if (h < kEtaUnderflow) {
      std::ostringstream os;
      os << "eta_" << cyclic.wrap(t - i) << "(" << kernel.labels()[x] << ") = " << h;
      throw QsdError(ErrorKind::UnderflowEta, os.str());
    }
    qp.position[static_cast<std::size_t>(x)] = static_cast<Eigen::Index>(qp.domain.size());
    qp.domain.push_back(x);
    qp.labels.push_back(kernel.labels()[x]);
    qp.class_of.push_back(i);
  }
  if (qp.domain.empty()) throw QsdError(ErrorKind::EmptyDomain, "no state sees eta");

  const auto m = static_cast<Eigen::Index>(qp.domain.size());
  qp.matrix = Matrix::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto x = qp.domain[static_cast<std::size_t>(a)];
    const int i = qp.class_of[static_cast<std::size_t>(a)];
    const double h = profile.at(t - i)[x];
    const StateFunction& next = profile.at(t - i - 1);
    for (Eigen::Index b = 0; b < m; ++b) {
      const auto y = qp.domain[static_cast<std::size_t>(b)];
      qp.matrix(a, b) = kernel(x, y) * next[y] / (certificate.theta0 * h);
    }
    qp.max_row_sum_error = std::max(qp.max_row_sum_error, std::abs(qp.matrix.row(a).sum() - 1.0));
  }
  return qp;
}

SemigroupCheck q_semigroup_check(const QProcessKernel& qp, const SpectralCertificate& certificate,
                                 const AbsorbedKernel& kernel, const CyclicStructure& cyclic, int n_max) {
  const int t = cyclic.period();
  const EtaProfile profile = eta_profile(certificate, kernel, cyclic);
  const auto m = static_cast<Eigen::Index>(qp.domain.size());
  const Matrix scaled = kernel.matrix() / certificate.theta0;

  SemigroupCheck out;
  out.max_steps = n_max * t;
  Matrix closed_power = Matrix::Identity(kernel.size(), kernel.size());  // (P / theta0)^s
  Matrix tilde_power = Matrix::Identity(m, m);
  for (int s = 0; s <= out.max_steps; ++s) {
    if (s > 0) {
      closed_power = closed_power * scaled;
      tilde_power = tilde_power * qp.matrix;
    }
    double worst = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      const auto x = qp.domain[static_cast<std::size_t>(a)];
      const int i = qp.class_of[static_cast<std::size_t>(a)];
      const double h = profile.at(t - i)[x];
      const StateFunction& target = profile.at(t - i - s);
      for (Eigen::Index b = 0; b < m; ++b) {
        const auto y = qp.domain[static_cast<std::size_t>(b)];
        const double closed = closed_power(x, y) * target[y] / h;
        worst = std::max(worst, std::abs(closed - tilde_power(a, b)));
      }
    }
    if (worst > out.max_discrepancy) {
      out.max_discrepancy = worst;
      out.worst_step = s;
    }
  }
  return out;
}

Measure stationary_distribution(const Matrix& stochastic) {
  const auto m = stochastic.rows();
  // pi (P - I) = 0 with one equation traded for sum(pi) = 1.
  Eigen::MatrixXd system = Eigen::MatrixXd(stochastic.transpose()) - Eigen::MatrixXd::Identity(m, m);
  system.row(m - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs[m - 1] = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw QsdError(ErrorKind::OracleFailure, "stationary law is not unique");
  Eigen::VectorXd pi = lu.solve(rhs);
  return pi.transpose();
}

InvariantReport invariant_candidates(const QProcessKernel& qp, const SpectralCertificate& certificate,
                                     const AbsorbedKernel& kernel, const CyclicStructure& cyclic) {
  const int t = cyclic.period();
  const double theta0 = certificate.theta0;
  const EtaProfile profile = eta_profile(certificate, kernel, cyclic);
  const auto nu_moved = detail::left_orbit(kernel.matrix(), certificate.nu_on_e, t);

  Measure stated_sum = Measure::Zero(kernel.size());
  Measure corrected_sum = Measure::Zero(kernel.size());
  for (int i = 0; i < t; ++i) {
    const Measure term = nu_moved[static_cast<std::size_t>(i)].cwiseProduct(profile.at(t - i).transpose());
    stated_sum += term;
    corrected_sum += std::pow(theta0, -i) * term;
  }
  const double prefactor = std::abs(1.0 - theta0) < 1e-12 ? 1.0 / t
                                                          : (1.0 - theta0) / (1.0 - std::pow(theta0, t));

  InvariantReport out;
  out.oracle = stationary_distribution(qp.matrix);
  out.oracle_residual_l1 = (out.oracle * qp.matrix - out.oracle).lpNorm<1>();
  auto fill = [&](InvariantCandidate& c, const Measure& on_e) {
    c.measure = on_domain(qp, on_e);
    c.mass = c.measure.sum();
    c.residual_l1 = (c.measure * qp.matrix - c.measure).lpNorm<1>();
    c.residual_tv = 0.5 * c.residual_l1;
    c.distance_to_oracle = (c.measure - out.oracle).lpNorm<1>();
  };
  fill(out.stated, prefactor * stated_sum);
  fill(out.corrected, corrected_sum / t);
  for (int i = 0; i < t; ++i) {
    double mass = 0.0;
    for (std::size_t a = 0; a < qp.domain.size(); ++a) {
      if (qp.class_of[a] == i) mass += out.corrected.measure[static_cast<Eigen::Index>(a)];
    }
    out.class_masses.push_back(mass);
  }
  return out;
}

ContractionReport contraction_report(const QProcessKernel& qp, const SpectralCertificate& certificate,
                                     const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                                     const Measure& mu_prime, int n_max, double rate_slack) {
  const int t = cyclic.period();
  const double theta0 = certificate.theta0;
  const auto m = static_cast<Eigen::Index>(qp.domain.size());
  if (mu_prime.size() != m) throw QsdError(ErrorKind::DimensionMismatch, "mu' must live on E'");

  ContractionReport out;
  out.n_max = n_max;
  out.alpha = certificate.alpha();

  // Oracle: P~^t preserves each class; its per-class stationary laws give the limits.
  const Matrix step_t = matrix_power(qp.matrix, t);
  Measure limit0 = Measure::Zero(m);
  for (int i = 0; i < t; ++i) {
    std::vector<Eigen::Index> members;
    double weight = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      if (qp.class_of[static_cast<std::size_t>(a)] == i) {
        members.push_back(a);
        weight += mu_prime[a];
      }
    }
    if (members.empty()) continue;
    const auto size = static_cast<Eigen::Index>(members.size());
    Matrix block(size, size);
    for (Eigen::Index r = 0; r < size; ++r) {
      for (Eigen::Index c = 0; c < size; ++c) block(r, c) = step_t(members[r], members[c]);
    }
    const Measure pi = stationary_distribution(block);
    for (Eigen::Index r = 0; r < size; ++r) limit0[members[r]] += weight * pi[r];
  }
  Measure moving_limit = limit0;
  for (int j = 0; j < t; ++j) {
    out.oracle_limits.push_back(moving_limit);
    moving_limit = moving_limit * qp.matrix;
  }

  // Closed forms through the periodic limit estimate.
  const EtaProfile profile = eta_profile(certificate, kernel, cyclic);
  const auto nu_moved = detail::left_orbit(kernel.matrix(), certificate.nu_on_e, 2 * t);
  std::vector<double> class_mass(static_cast<std::size_t>(t), 0.0);
  for (Eigen::Index a = 0; a < m; ++a) class_mass[static_cast<std::size_t>(qp.class_of[static_cast<std::size_t>(a)])] += mu_prime[a];
  for (int j = 0; j < t; ++j) {
    Measure theory = Measure::Zero(kernel.size());
    Measure stated = Measure::Zero(kernel.size());
    for (int i = 0; i < t; ++i) {
      const Measure term = nu_moved[static_cast<std::size_t>(i + j)].cwiseProduct(profile.at(2 * t - i - j).transpose());
      theory += class_mass[static_cast<std::size_t>(i)] * std::pow(theta0, -(i + j)) * term;
      stated += class_mass[static_cast<std::size_t>(i)] * std::pow(theta0, t - i) * term;
    }
    out.theory_limits.push_back(on_domain(qp, theory));
    out.stated_limits.push_back(on_domain(qp, stated));
    out.theory_gap = std::max(out.theory_gap, (out.theory_limits.back() - out.oracle_limits[static_cast<std::size_t>(j)]).lpNorm<1>());
    out.stated_gap = std::max(out.stated_gap, (out.stated_limits.back() - out.oracle_limits[static_cast<std::size_t>(j)]).lpNorm<1>());
  }

  std::vector<double> xs, logs;
  Measure law = mu_prime;
  for (int n = 0; n <= n_max; ++n) {
    std::vector<double> row;
    double worst = 0.0;
    Measure inner = law;
    for (int j = 0; j < t; ++j) {
      row.push_back(0.5 * (inner - out.oracle_limits[static_cast<std::size_t>(j)]).lpNorm<1>());
      worst = std::max(worst, row.back());
      inner = inner * qp.matrix;
    }
    law = law * step_t;
    if (n >= 1 && worst > 1e-13) {
      xs.push_back(n);
      logs.push_back(std::log(worst));
    }
    out.distance.push_back(std::move(row));
  }
  out.fit_points = static_cast<int>(xs.size());
  out.fitted_rate = xs.size() >= 2 ? detail::fit_log_rate(xs, logs) : 0.0;
  out.rate_ok = out.fitted_rate <= out.alpha + rate_slack;
  double tail = 0.0;
  for (double d : out.distance.back()) tail = std::max(tail, d);
  out.converges = tail <= 1e-8 || out.rate_ok;
  return out;
}

}  // namespace qsdlab
