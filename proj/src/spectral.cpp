#include "qsdlab/spectral.hpp"

#include "qsdlab/errors.hpp"

#include "precise_eigen.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qsdlab {

namespace {

using Complex = std::complex<double>;

Eigen::Index dominant_index(const Eigen::VectorXcd& values) {
  double top = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) top = std::max(top, std::abs(values[i]));
  Eigen::Index best = 0;
  double best_real = -1.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::abs(values[i]) >= top - kPeripheralTolerance && values[i].real() > best_real) {
      best_real = values[i].real();
      best = i;
    }
  }
  return best;
}

Eigen::Index nearest_index(const Eigen::VectorXcd& values, Complex target) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (std::abs(values[i] - target) < std::abs(values[best] - target)) best = i;
  }
  return best;
}

// Perron vectors come out of the solver with an arbitrary complex phase.
Eigen::VectorXd positive_part(const Eigen::VectorXcd& v) {
  Eigen::Index pivot = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[pivot])) pivot = i;
  }
  const Eigen::VectorXcd aligned = v / v[pivot];
  return aligned.real().cwiseMax(0.0);
}

PerronData perron_dense(const Matrix& q) {
  const Eigen::MatrixXd m = q;
  Eigen::EigenSolver<Eigen::MatrixXd> right(m, true);
  Eigen::EigenSolver<Eigen::MatrixXd> left(m.transpose(), true);
  if (right.info() != Eigen::Success || left.info() != Eigen::Success) {
    throw QsdError(ErrorKind::OracleFailure, "dense eigensolver did not converge");
  }
  const Eigen::VectorXcd values = right.eigenvalues();
  const auto idx = dominant_index(values);
  const double lambda = values[idx].real();
  if (!(lambda > 0.0)) throw QsdError(ErrorKind::ZeroKernel, "spectral radius is zero");

  int peripheral = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::abs(values[i]) >= lambda - kPeripheralTolerance) ++peripheral;
  }
  if (peripheral > 1) {
    std::ostringstream os;
    os << peripheral << " eigenvalues share the Perron modulus " << lambda;
    throw QsdError(ErrorKind::PeripheralMultiplicity, os.str());
  }

  PerronData out;
  out.eigenvalue = lambda;
  out.eta = positive_part(right.eigenvectors().col(idx));
  const auto lidx = nearest_index(left.eigenvalues(), Complex(lambda, 0.0));
  out.nu = positive_part(left.eigenvectors().col(lidx)).transpose();
  return out;
}

PerronData perron_power(const Matrix& q) {
  constexpr int kMaxIterations = 1'000'000;
  constexpr double kTolerance = 1e-13;
  const auto m = q.rows();
  PerronData out;

  StateFunction x = StateFunction::Constant(m, 1.0 / static_cast<double>(m));
  double lambda = 0.0;
  int it = 0;
  for (; it < kMaxIterations; ++it) {
    StateFunction y = q * x;
    const double s = y.sum();
    if (!(s > 0.0)) throw QsdError(ErrorKind::ZeroKernel, "power iteration collapsed to zero");
    lambda = s / x.sum();
    y /= s;
    const double change = (y - x).lpNorm<1>();
    x = std::move(y);
    if (change <= kTolerance) break;
  }
  if (it == kMaxIterations) throw QsdError(ErrorKind::OracleFailure, "right power iteration did not converge");

  Measure w = Measure::Constant(m, 1.0 / static_cast<double>(m));
  int jt = 0;
  for (; jt < kMaxIterations; ++jt) {
    Measure y = w * q;
    const double s = y.sum();
    y /= s;
    const double change = (y - w).lpNorm<1>();
    w = std::move(y);
    if (change <= kTolerance) break;
  }
  if (jt == kMaxIterations) throw QsdError(ErrorKind::OracleFailure, "left power iteration did not converge");

  out.eigenvalue = lambda;
  out.eta = x;
  out.nu = w;
  out.iterations = it + jt;
  return out;
}

}  // namespace

PerronData compute_perron(const AbsorbedKernel& iterated, PerronMethod method) {
  const Matrix& q = iterated.matrix();
  if (q.size() == 0) throw QsdError(ErrorKind::DimensionMismatch, "empty iterated kernel");
  if (!(q.array() > 0.0).any()) throw QsdError(ErrorKind::ZeroKernel, "iterated kernel is zero");

  const bool dense = method == PerronMethod::Dense ||
                     (method == PerronMethod::Auto && q.rows() <= kDensePerronLimit);
  PerronData out = dense ? perron_dense(q) : perron_power(q);

  out.nu /= out.nu.sum();
  const double pairing = out.nu.dot(out.eta.transpose());
  if (!(pairing > 0.0)) throw QsdError(ErrorKind::OracleFailure, "Perron vectors are orthogonal");
  out.eta /= pairing;
  return out;
}

std::vector<std::complex<double>> sorted_eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(m), false);
  if (solver.info() != Eigen::Success) {
    throw QsdError(ErrorKind::OracleFailure, "dense eigensolver did not converge");
  }
  std::vector<Complex> values(solver.eigenvalues().data(),
                              solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(values.begin(), values.end(), [](Complex a, Complex b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    return a.real() > b.real();
  });
  return values;
}

MixingConstants certify_mixing(const AbsorbedKernel& iterated, const PerronData& perron,
                               const StateFunction& v_weights, int k_max) {
  const Matrix& q = iterated.matrix();
  const auto m = q.rows();
  if (v_weights.size() != m) throw QsdError(ErrorKind::DimensionMismatch, "V must live on A_0");
  if ((v_weights.array() < 1.0).any()) throw QsdError(ErrorKind::InvalidWeight, "V must be >= 1");

  MixingConstants out;
  out.k_max = k_max;
  const double lambda = perron.eigenvalue;

  const auto values = sorted_eigenvalues(q);
  if (values.size() > 1) {
    const double sub = std::abs(values[1]);
    if (sub >= lambda - kPeripheralTolerance) {
      throw QsdError(ErrorKind::AlphaIsOne, "subdominant eigenvalue on the Perron circle");
    }
    out.alpha = sub <= 1e-12 * lambda ? 0.0 : sub / lambda;
  }
  out.alpha_zero = out.alpha == 0.0;

  const Matrix projector = perron.eta * perron.nu;
  const Matrix deflated = q - lambda * projector;

  // sup_{|f|<=V} |M f(x)| / V(x) = sum_y |M(x,y)| V(y) / V(x); the basis scan keeps the largest term.
  auto scan = [&](const Matrix& residual, int k) {
    const Matrix weighted = residual.cwiseAbs() * v_weights.asDiagonal();
    for (Eigen::Index x = 0; x < m; ++x) {
      const double full = weighted.row(x).sum() / v_weights[x];
      const double basis = weighted.row(x).maxCoeff() / v_weights[x];
      if (full > out.c_q) {
        out.c_q = full;
        out.k_attained = k;
      }
      out.c_q_basis = std::max(out.c_q_basis, basis);
    }
  };

  scan(Matrix::Identity(m, m) - projector, 0);
  if (out.alpha_zero) {
    // 0/0 := 0: powers of the deflated kernel must vanish up to round-off.
    Matrix power = Matrix::Identity(m, m);
    const Matrix step = deflated / lambda;
    for (int k = 1; k <= k_max; ++k) {
      power = power * step;
      if (power.cwiseAbs().maxCoeff() > 1e-12) {
        out.c_q = std::numeric_limits<double>::infinity();
        out.k_attained = k;
        break;
      }
    }
  } else {
    Matrix power = Matrix::Identity(m, m);
    const Matrix step = deflated / (lambda * out.alpha);
    for (int k = 1; k <= k_max; ++k) {
      power = power * step;
      scan(power, k);
    }
  }

  const double eta_over_v = (perron.eta.array() / v_weights.array()).maxCoeff();
  const double nu_v = perron.nu.dot(v_weights.transpose());
  const double factor = eta_over_v * nu_v + out.c_q * out.alpha;
  const StateFunction qv = q * v_weights;
  out.trivial_bound_slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index x = 0; x < m; ++x) {
    out.trivial_bound_slack = std::min(out.trivial_bound_slack, (factor * v_weights[x] - qv[x]) / v_weights[x]);
  }
  out.trivial_bound_holds = out.trivial_bound_slack >= -1e-12;
  return out;
}

SpectralCertificate certify(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                            const CertifyOptions& options) {
  const AbsorbedKernel q = restrict_iterated(kernel, cyclic);
  SpectralCertificate cert;
  cert.period = cyclic.period();
  const PerronData perron = compute_perron(q, options.method);
  cert.theta0_pow_t = perron.eigenvalue;
  cert.theta0 = std::pow(perron.eigenvalue, 1.0 / cert.period);
  cert.eta = perron.eta;
  cert.nu = perron.nu;
  cert.v_weights = options.v_weights.value_or(StateFunction::Ones(q.size()));
  cert.mixing = certify_mixing(q, perron, cert.v_weights, options.k_max);
  cert.eta_on_e = cyclic.extend_from_a0(cert.eta);
  cert.nu_on_e = cyclic.extend_from_a0(cert.nu);
  cert.eta_over_v_sup = (cert.eta.array() / cert.v_weights.array()).maxCoeff();
  cert.nu_of_v = cert.nu.dot(cert.v_weights.transpose());
  const double factor = cert.eta_over_v_sup * cert.nu_of_v + cert.c_q() * cert.alpha();
  cert.c_q_prime = cert.c_q() * std::pow(cert.theta0, -2.0 * cert.period) * factor * factor;
  return cert;
}

Matrix build_extended_kernel(const AbsorbedKernel& kernel) {
  const auto n = kernel.size();
  Matrix ext = Matrix::Zero(n + 1, n + 1);
  ext.topLeftCorner(n, n) = kernel.matrix();
  ext.topRightCorner(n, 1) = kernel.absorption();
  ext(n, n) = 1.0;
  return ext;
}

bool bv_membership(const StateFunction& f, const AbsorbedKernel& kernel,
                   const CyclicStructure& cyclic, const StateFunction& v_on_a0) {
  if (f.size() != kernel.size()) throw QsdError(ErrorKind::DimensionMismatch, "f must live on E");
  const auto a0 = cyclic.members(0);
  if (static_cast<std::size_t>(v_on_a0.size()) != a0.size()) {
    throw QsdError(ErrorKind::DimensionMismatch, "V must live on A_0");
  }
  StateFunction moved;
  for (int i = 0; i < cyclic.period(); ++i) {
    moved = f.cwiseProduct(cyclic.indicator(i));
    for (int step = 0; step < i; ++step) moved = kernel.matrix() * moved;
    for (std::size_t a = 0; a < a0.size(); ++a) {
      if (std::abs(moved[a0[a]]) > v_on_a0[static_cast<Eigen::Index>(a)] + kKernelTolerance) return false;
    }
  }
  return true;
}

ComplexFunction ring_eigenfunction(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                                   const SpectralCertificate& certificate, int k) {
  const int t = cyclic.period();
  const Complex omega = std::polar(1.0, 2.0 * std::numbers::pi * k / t);
  ComplexFunction h = ComplexFunction::Zero(kernel.size());
  StateFunction moved = certificate.eta_on_e;
  for (int i = 0; i < t; ++i) {
    h += std::pow(omega * certificate.theta0, -i) * moved.cast<Complex>();
    moved = kernel.matrix() * moved;
  }
  return h;
}

SpectrumReport classify_spectrum(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                                 const SpectralCertificate& certificate, double tol) {
  const auto n = kernel.size();
  const int t = cyclic.period();
  const double theta0 = certificate.theta0;
  SpectrumReport report;
  report.tolerance = tol;
  report.theta0_below_one = theta0 < 1.0 - tol;
  report.bulk_bound = theta0 * std::pow(certificate.alpha(), 1.0 / t);

  const Eigen::MatrixXd restricted = kernel.matrix();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(restricted, true);
  const Eigen::MatrixXd extended = build_extended_kernel(kernel);
  Eigen::EigenSolver<Eigen::MatrixXd> ext_solver(extended, true);
  if (solver.info() != Eigen::Success || ext_solver.info() != Eigen::Success) {
    throw QsdError(ErrorKind::OracleFailure, "dense eigensolver did not converge");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  report.restricted_eigenvalues.assign(values.data(), values.data() + values.size());
  const Eigen::VectorXcd ext_values = ext_solver.eigenvalues();
  report.extended_eigenvalues.assign(ext_values.data(), ext_values.data() + ext_values.size());

  // Peripheral ring theta0 * (t-th roots of unity).
  std::vector<bool> in_ring(static_cast<std::size_t>(values.size()), false);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::abs(std::abs(values[i]) - theta0) <= tol) ++report.ring_count;
  }
  report.ring_ok = report.ring_count == t;
  for (int k = 0; k < t; ++k) {
    RingMember member;
    member.k = k;
    member.expected = std::polar(theta0, 2.0 * std::numbers::pi * k / t);
    const auto idx = nearest_index(values, member.expected);
    in_ring[static_cast<std::size_t>(idx)] = true;
    member.nearest = values[idx];
    member.eigenvalue_error = std::abs(values[idx] - member.expected);

    member.h = ring_eigenfunction(kernel, cyclic, certificate, k);
    const double h_norm = member.h.cwiseAbs().maxCoeff();
    const ComplexFunction image = kernel.matrix().cast<Complex>() * member.h;
    member.eigenfunction_residual = (image - member.expected * member.h).cwiseAbs().maxCoeff() / h_norm;

    const Eigen::VectorXcd v = solver.eigenvectors().col(idx);
    const Complex scale = v.dot(member.h) / v.squaredNorm();
    member.alignment_error = (member.h - scale * v).cwiseAbs().maxCoeff() / h_norm;

    report.ring_ok = report.ring_ok && member.eigenvalue_error <= tol &&
                     member.eigenfunction_residual <= tol && member.alignment_error <= tol;
    report.ring.push_back(std::move(member));
  }

  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!in_ring[static_cast<std::size_t>(i)]) {
      report.bulk_max_modulus = std::max(report.bulk_max_modulus, std::abs(values[i]));
    }
  }
  report.bulk_ok = report.bulk_max_modulus <= report.bulk_bound + tol;
  if (!report.bulk_ok) {
    // Defective eigenvalues (typically 0 with unequal class sizes) are smeared
    // to ~eps^(1/m) by double QR; redo the bulk in extended precision.
    auto precise = detail::precise_eigenvalues(kernel.matrix());
    std::vector<bool> taken(precise.size(), false);
    for (int k = 0; k < t; ++k) {
      const Complex expected = std::polar(theta0, 2.0 * std::numbers::pi * k / t);
      std::size_t best = 0;
      for (std::size_t i = 0; i < precise.size(); ++i) {
        if (taken[best] || (!taken[i] && std::abs(precise[i] - expected) < std::abs(precise[best] - expected))) {
          best = i;
        }
      }
      taken[best] = true;
    }
    report.bulk_max_modulus = 0.0;
    for (std::size_t i = 0; i < precise.size(); ++i) {
      if (!taken[i]) report.bulk_max_modulus = std::max(report.bulk_max_modulus, std::abs(precise[i]));
    }
    report.bulk_refined = true;
    report.bulk_ok = report.bulk_max_modulus <= report.bulk_bound + tol;
  }

  // Eigenpairs of the extended kernel, classified by the trichotomy.
  std::vector<Eigen::RowVectorXcd> nu_p(static_cast<std::size_t>(t));
  Measure moved = certificate.nu_on_e;
  for (int i = 0; i < t; ++i) {
    nu_p[static_cast<std::size_t>(i)] = moved.cast<Complex>();
    moved = moved * kernel.matrix();
  }
  for (Eigen::Index i = 0; i < ext_values.size(); ++i) {
    EigenpairRecord rec;
    rec.eigenvalue = ext_values[i];
    Eigen::VectorXcd h = ext_solver.eigenvectors().col(i);
    Eigen::Index pivot = 0;
    for (Eigen::Index x = 1; x < h.size(); ++x) {
      if (std::abs(h[x]) > std::abs(h[pivot])) pivot = x;
    }
    h /= h[pivot];
    rec.h_cemetery = h[n];
    const Eigen::VectorXcd on_e = h.head(n);
    double visible = 0.0;
    for (int j = 0; j < t; ++j) {
      const Complex value = (nu_p[static_cast<std::size_t>(j)] * on_e)(0);
      rec.nu_p_i_h.push_back(value);
      visible = std::max(visible, std::abs(value));
    }
    if (std::abs(rec.h_cemetery) > tol) {
      rec.point = SpectralPoint::CemeteryCharged;
      rec.constant_eigenfunction = (on_e.array() - rec.h_cemetery).abs().maxCoeff() <= tol;
    } else if (visible > tol) {
      rec.point = SpectralPoint::PerronVisible;
      rec.eigenvalue_is_theta0 = std::abs(rec.eigenvalue - theta0) <= tol;
      if (!rec.eigenvalue_is_theta0) ++report.perron_visible_off_theta0;
    } else {
      rec.point = SpectralPoint::Bulk;
    }
    if (std::abs(rec.eigenvalue - 1.0) <= tol) ++report.unit_eigenvalue_multiplicity;
    report.eigenpairs.push_back(std::move(rec));
  }
  if (report.unit_eigenvalue_multiplicity == 1) {
    for (const auto& rec : report.eigenpairs) {
      if (std::abs(rec.eigenvalue - 1.0) <= tol) {
        report.unit_eigenfunction_constant =
            rec.point == SpectralPoint::CemeteryCharged && rec.constant_eigenfunction;
      }
    }
  }
  return report;
}

}  // namespace qsdlab
