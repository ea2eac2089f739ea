#include "qsdlab/quasi_ergodic.hpp"

#include "qsdlab/errors.hpp"
#include "qsdlab/q_process.hpp"

#include "orbits.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qsdlab {

namespace {

void check_inputs(const AbsorbedKernel& kernel, const Measure& mu, const StateFunction& f, int n_max) {
  if (mu.size() != kernel.size() || f.size() != kernel.size()) {
    throw QsdError(ErrorKind::DimensionMismatch, "measure or function length differs from state count");
  }
  if (n_max < 0) throw QsdError(ErrorKind::IndexOutOfRange, "negative horizon");
}

[[noreturn]] void extinct(int n) {
  std::ostringstream os;
  os << "no surviving mass at time " << n;
  throw QsdError(ErrorKind::Extinct, os.str());
}

}  // namespace

Measure nu_qe(const SpectralCertificate& certificate, const AbsorbedKernel& kernel, const CyclicStructure& cyclic) {
  const int t = cyclic.period();
  const auto nu_moved = detail::left_orbit(kernel.matrix(), certificate.nu_on_e, t);
  const auto eta_moved = detail::right_orbit(kernel.matrix(), certificate.eta_on_e, t);
  Measure out = Measure::Zero(kernel.size());
  for (int k = 0; k < t; ++k) {
    out += nu_moved[static_cast<std::size_t>(k)].cwiseProduct(eta_moved[static_cast<std::size_t>(t - k)].transpose());
  }
  return out / (certificate.theta0_pow_t * t);
}

// With a_N = mu P_N and u_N = sum_{m<=N} mu P_m diag(f) P_{N-m}, u_N = u_{N-1} P + a_N diag(f),
// and the conditional average is u_N(1) / ((N+1) a_N(1)). Both are divided by a_N(1)
// at each step, which keeps them O(1).
std::vector<double> time_averages_exact(const AbsorbedKernel& kernel, const Measure& mu, const StateFunction& f,
                                        int n_max) {
  check_inputs(kernel, mu, f, n_max);
  const Matrix& p = kernel.matrix();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_max) + 1);
  Measure a = mu;
  Measure u = mu.cwiseProduct(f.transpose());
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) {
      a = a * p;
      u = u * p + a.cwiseProduct(f.transpose());
    }
    const double mass = a.sum();
    if (!(mass > 0.0)) extinct(n);
    a /= mass;
    u /= mass;
    out.push_back(u.sum() / (n + 1));
  }
  return out;
}

double time_average_exact(const AbsorbedKernel& kernel, const Measure& mu, const StateFunction& f, int n) {
  return time_averages_exact(kernel, mu, f, n).back();
}

// Same idea one level up: with g = f - center,
//   d_N = d_{N-1} P + a_N diag(g^2)          (diagonal terms)
//   s_N = s_{N-1} P + (u_{N-1} P) diag(g)    (pairs m < m')
// and the moment is (d_N(1) + 2 s_N(1)) / ((N+1)^2 a_N(1)).
std::vector<double> second_moments_exact(const AbsorbedKernel& kernel, const Measure& mu, const StateFunction& f,
                                         double center, int n_max) {
  check_inputs(kernel, mu, f, n_max);
  const Matrix& p = kernel.matrix();
  const Eigen::RowVectorXd g = (f.array() - center).matrix().transpose();
  const Eigen::RowVectorXd g2 = g.cwiseProduct(g);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_max) + 1);
  Measure a = mu;
  Measure u = mu.cwiseProduct(g);
  Measure d = mu.cwiseProduct(g2);
  Measure s = Measure::Zero(kernel.size());
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) {
      const Measure u_moved = u * p;
      a = a * p;
      s = s * p + u_moved.cwiseProduct(g);
      d = d * p + a.cwiseProduct(g2);
      u = u_moved + a.cwiseProduct(g);
    }
    const double mass = a.sum();
    if (!(mass > 0.0)) extinct(n);
    a /= mass;
    u /= mass;
    d /= mass;
    s /= mass;
    const double count = n + 1.0;
    out.push_back((d.sum() + 2.0 * s.sum()) / (count * count));
  }
  return out;
}

double second_moment_exact(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                           const SpectralCertificate& certificate, const Measure& mu, const StateFunction& f, int n) {
  const double center = nu_qe(certificate, kernel, cyclic).dot(f.transpose());
  return second_moments_exact(kernel, mu, f, center, n).back();
}

QedRateReport qed_rate_report(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                              const SpectralCertificate& certificate, const Measure& mu, const StateFunction& f,
                              int n_max) {
  const int t = cyclic.period();
  const EtaProfile profile = eta_profile(certificate, kernel, cyclic);
  const auto v_moved = detail::right_orbit(kernel.matrix(), cyclic.extend_from_a0(certificate.v_weights), t);
  double eta_sum = 0.0, v_sum = 0.0;
  for (int i = 0; i < t; ++i) {
    const Measure part = cyclic.restrict(mu, i);
    eta_sum += part.dot(profile.at(t - i).transpose());
    v_sum += part.dot(v_moved[static_cast<std::size_t>(t - i)].transpose());
  }
  if (!(eta_sum > 0.0)) throw QsdError(ErrorKind::EtaOrthogonal, "initial mass is invisible to eta");

  QedRateReport out;
  out.n_max = n_max;
  out.f_bounded_by_one = f.cwiseAbs().maxCoeff() <= 1.0;
  out.target = nu_qe(certificate, kernel, cyclic).dot(f.transpose());
  out.weight_ratio = v_sum / eta_sum;
  const auto averages = time_averages_exact(kernel, mu, f, n_max);
  const int half = n_max / 2;
  for (int n = 0; n <= n_max; ++n) {
    const double e = (n + 1) * std::abs(averages[static_cast<std::size_t>(n)] - out.target);
    out.scaled_error.push_back(e);
    out.sup_scaled_error = std::max(out.sup_scaled_error, e);
    if (n <= half) {
      out.first_half_max = std::max(out.first_half_max, e);
    } else {
      out.last_half_max = std::max(out.last_half_max, e);
    }
  }
  out.constant = out.sup_scaled_error / out.weight_ratio;
  out.bounded = out.last_half_max <= 1.05 * out.first_half_max + 1e-9;
  return out;
}

}  // namespace qsdlab
