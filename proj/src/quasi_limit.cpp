#include "qsdlab/quasi_limit.hpp"

#include "qsdlab/errors.hpp"
#include "qsdlab/qsd.hpp"

#include "orbits.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <sstream>

namespace qsdlab {

namespace {

constexpr double kVanishing = 1e-12;

Matrix select(const Matrix& m, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(rows[r], cols[c]);
    }
  }
  return out;
}

Matrix select_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

// The residual of the periodic estimate at x in A_k equals
//   theta0^{-(t+j)} P_{t-k}[x, A_0] M_{n-1} P_{k+j}[A_0, .] f
// with M_0 = I - eta nu and M_m = ((Q - lambda eta nu) / lambda)^m, so it never
// forms the difference of two nearly equal large numbers.
DecayReport decay(const AbsorbedKernel& kernel, const CyclicStructure& cyclic, const SpectralCertificate& cert,
                  const Matrix& family, int n_max, double rate_slack) {
  const int t = cyclic.period();
  const double theta0 = cert.theta0;
  const double lambda = cert.theta0_pow_t;
  const double alpha = cert.alpha();
  const auto a0 = cyclic.members(0);
  const auto m0 = static_cast<Eigen::Index>(a0.size());
  const auto pw = detail::powers(kernel.matrix(), 2 * t);

  DecayReport out;
  out.n_max = n_max;
  out.period = t;
  out.alpha = alpha;
  out.c_q_prime = cert.c_q_prime;
  out.rate_slack = rate_slack;
  out.functions_tested = static_cast<int>(family.cols());

  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(t));
  std::vector<Matrix> left(static_cast<std::size_t>(t));
  std::vector<StateFunction> denom(static_cast<std::size_t>(t));
  for (int k = 0; k < t; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    members[ku] = cyclic.members(k);
    left[ku] = select(pw[static_cast<std::size_t>(t - k)], members[ku], a0);
    denom[ku] = left[ku] * cert.v_weights;
    for (Eigen::Index r = 0; r < denom[ku].size(); ++r) {
      if (!(denom[ku][r] > 0.0)) ++out.zero_denominator_states;
    }
  }
  std::vector<std::vector<Matrix>> right(static_cast<std::size_t>(t));
  for (int k = 0; k < t; ++k) {
    for (int j = 0; j < t; ++j) {
      right[static_cast<std::size_t>(k)].push_back(select_rows(pw[static_cast<std::size_t>(k + j)], a0) * family);
    }
  }

  const Matrix projector = cert.eta * cert.nu;
  const Matrix q = select(pw[static_cast<std::size_t>(t)], a0, a0);
  const Matrix identity = Matrix::Identity(m0, m0);
  const Matrix deflated = q - lambda * projector;
  const bool alpha_zero = !(alpha > 0.0);
  const Matrix step = alpha_zero ? Matrix(deflated / lambda) : Matrix(deflated / (lambda * alpha));

  // max over x, f of |theta0^{-(t+j)} L_k M G_kj| / P_{t-k} V(x)
  auto scaled_max = [&](const Matrix& m, int j) {
    double best = 0.0;
    for (int k = 0; k < t; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const Matrix block = (left[ku] * m) * right[ku][static_cast<std::size_t>(j)];
      for (Eigen::Index r = 0; r < block.rows(); ++r) {
        if (!(denom[ku][r] > 0.0)) continue;
        best = std::max(best, block.row(r).cwiseAbs().maxCoeff() / denom[ku][r]);
      }
    }
    return std::pow(theta0, -(t + j)) * best;
  };
  auto full_residual = [&](const Matrix& m, int j) {
    Matrix res = Matrix::Zero(kernel.size(), family.cols());
    for (int k = 0; k < t; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const Matrix block = (left[ku] * m) * right[ku][static_cast<std::size_t>(j)];
      for (std::size_t r = 0; r < members[ku].size(); ++r) {
        res.row(members[ku][r]) = block.row(static_cast<Eigen::Index>(r));
      }
    }
    return Matrix(std::pow(theta0, -(t + j)) * res);
  };

  // Direct route for the cross-check: theta0^{-m} P_m F minus the profile.
  std::vector<Measure> nu_moved = detail::left_orbit(kernel.matrix(), cert.nu_on_e, 2 * t);
  std::vector<StateFunction> eta_moved = detail::right_orbit(kernel.matrix(), cert.eta_on_e, t);
  Matrix direct_power = Matrix::Identity(kernel.size(), kernel.size());
  const Matrix scaled_p = kernel.matrix() / theta0;
  constexpr int kCrossCheckN = 8;

  Matrix power = identity;  // step^{n-1}
  std::vector<double> xs, logs;
  bool alpha_zero_vanishes = true;
  for (int n = 1; n <= n_max; ++n) {
    if (n >= 2) power = power * step;
    const Matrix& m = n == 1 ? Matrix(identity - projector) : power;
    std::vector<double> res_row, ratio_row, shifted_row;
    double ratio_max = 0.0;
    for (int j = 0; j < t; ++j) {
      const double value = scaled_max(m, j);
      if (alpha_zero) {
        res_row.push_back(value);
        const bool vanish = value <= kVanishing;
        if (n >= 2 && !vanish) alpha_zero_vanishes = false;
        ratio_row.push_back(vanish ? 0.0 : std::numeric_limits<double>::infinity());
        shifted_row.push_back(n == 1 ? value : (vanish ? 0.0 : std::numeric_limits<double>::infinity()));
      } else {
        // value is R / alpha^{n-1}
        res_row.push_back(value * std::pow(alpha, n - 1));
        ratio_row.push_back(value / alpha);
        shifted_row.push_back(value);
      }
      ratio_max = std::max(ratio_max, ratio_row.back());
      out.sup_ratio = std::max(out.sup_ratio, ratio_row.back());
      out.sup_ratio_shifted = std::max(out.sup_ratio_shifted, shifted_row.back());
    }
    if (!alpha_zero && ratio_max > 0.0) {
      xs.push_back(n);
      logs.push_back(std::log(ratio_max) + n * std::log(alpha));
    }

    if (n <= kCrossCheckN) {
      for (int s = 0; s < t; ++s) direct_power = direct_power * scaled_p;
      Matrix running = direct_power;
      for (int j = 0; j < t; ++j) {
        Matrix profile = Matrix::Zero(kernel.size(), family.cols());
        for (int k = 0; k < t; ++k) {
          const Eigen::RowVectorXd nu_f = nu_moved[static_cast<std::size_t>(k + j)] * family;
          for (auto x : members[static_cast<std::size_t>(k)]) {
            profile.row(x) = std::pow(theta0, -(t + j)) * eta_moved[static_cast<std::size_t>(t - k)][x] * nu_f;
          }
        }
        const Matrix direct = running * family - profile;
        const Matrix stable = alpha_zero || n == 1 ? full_residual(m, j)
                                                   : Matrix(full_residual(m, j) * std::pow(alpha, n - 1));
        out.direct_crosscheck = std::max(out.direct_crosscheck, (direct - stable).cwiseAbs().maxCoeff());
        running = running * scaled_p;
      }
    }
    out.residual.push_back(std::move(res_row));
    out.ratio.push_back(std::move(ratio_row));
    out.ratio_shifted.push_back(std::move(shifted_row));
  }

  if (alpha_zero) {
    out.fitted_rate = alpha_zero_vanishes ? 0.0 : std::numeric_limits<double>::infinity();
  } else if (xs.size() >= 2) {
    out.fitted_rate = detail::fit_log_rate(xs, logs);
  }
  out.fit_points = static_cast<int>(xs.size());
  const double slack = 1e-9 * std::max(1.0, cert.c_q_prime);
  out.bound_holds = out.sup_ratio <= cert.c_q_prime + slack;
  out.shifted_bound_holds = out.sup_ratio_shifted <= cert.c_q_prime + slack;
  out.rate_ok = out.fitted_rate <= alpha + rate_slack;
  return out;
}

}  // namespace

PointProfile limit_profile(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                           const CyclicStructure& cyclic, int j, Eigen::Index x) {
  const int t = cyclic.period();
  if (j < 0 || j >= t) throw QsdError(ErrorKind::IndexOutOfRange, "j must lie in [0, t)");
  if (x < 0 || x >= kernel.size()) throw QsdError(ErrorKind::IndexOutOfRange, "state index out of range");
  PointProfile out;
  out.k = cyclic.class_of(x);
  const auto eta_moved = detail::right_orbit(kernel.matrix(), certificate.eta_on_e, t - out.k);
  out.coefficient = std::pow(certificate.theta0, -(t + j)) * eta_moved.back()[x];
  out.measure = detail::left_orbit(kernel.matrix(), certificate.nu_on_e, out.k + j).back();
  return out;
}

Measure limit_profile(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                      const CyclicStructure& cyclic, int j, const Measure& mu) {
  const int t = cyclic.period();
  if (j < 0 || j >= t) throw QsdError(ErrorKind::IndexOutOfRange, "j must lie in [0, t)");
  const auto w = eta_class_weights(certificate, kernel, cyclic, mu);
  const auto nu_moved = detail::left_orbit(kernel.matrix(), certificate.nu_on_e, 2 * t);
  Measure out = Measure::Zero(kernel.size());
  for (int k = 0; k < t; ++k) out += w[static_cast<std::size_t>(k)] * nu_moved[static_cast<std::size_t>(k + j)];
  return std::pow(certificate.theta0, -(t + j)) * out;
}

DecayReport verify_main_estimate(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                                 const SpectralCertificate& certificate, const StateFunction& f, int n_max,
                                 double rate_slack) {
  if (!bv_membership(f, kernel, cyclic, certificate.v_weights)) {
    throw QsdError(ErrorKind::NotInBV, "|P_i(f 1_{A_i})| exceeds V on A_0");
  }
  return decay(kernel, cyclic, certificate, Matrix(f), n_max, rate_slack);
}

DecayReport verify_main_estimate_basis(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                                       const SpectralCertificate& certificate, int n_max, double rate_slack) {
  const auto n = kernel.size();
  std::vector<Eigen::Index> kept;
  for (Eigen::Index y = 0; y < n; ++y) {
    if (bv_membership(StateFunction::Unit(n, y), kernel, cyclic, certificate.v_weights)) kept.push_back(y);
  }
  Matrix family = Matrix::Zero(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) family(kept[c], static_cast<Eigen::Index>(c)) = 1.0;
  DecayReport out = decay(kernel, cyclic, certificate, family, n_max, rate_slack);
  // -e_y gives the same absolute residual as e_y.
  out.functions_tested = 2 * static_cast<int>(kept.size());
  out.functions_skipped = 2 * static_cast<int>(n - static_cast<Eigen::Index>(kept.size()));
  return out;
}

Measure conditional_law(const AbsorbedKernel& kernel, const Measure& mu, int n) {
  if (mu.size() != kernel.size()) throw QsdError(ErrorKind::DimensionMismatch, "measure length differs from state count");
  if (n < 0) throw QsdError(ErrorKind::IndexOutOfRange, "negative time");
  Measure law = mu;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) law = law * kernel.matrix();
    const double mass = law.sum();
    if (!(mass > 0.0)) {
      std::ostringstream os;
      os << "no surviving mass at time " << k;
      throw QsdError(ErrorKind::Extinct, os.str());
    }
    law /= mass;
  }
  return law;
}

std::vector<double> eta_class_weights(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                                      const CyclicStructure& cyclic, const Measure& mu) {
  if (mu.size() != kernel.size()) throw QsdError(ErrorKind::DimensionMismatch, "measure length differs from state count");
  const int t = cyclic.period();
  const auto eta_moved = detail::right_orbit(kernel.matrix(), certificate.eta_on_e, t);
  std::vector<double> w;
  for (int i = 0; i < t; ++i) {
    w.push_back(cyclic.restrict(mu, i).dot(eta_moved[static_cast<std::size_t>(t - i)].transpose()));
  }
  return w;
}

Measure conditional_limit(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                          const CyclicStructure& cyclic, const Measure& mu, int j) {
  const int t = cyclic.period();
  if (j < 0 || j >= t) throw QsdError(ErrorKind::IndexOutOfRange, "j must lie in [0, t)");
  const auto w = eta_class_weights(certificate, kernel, cyclic, mu);
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) throw QsdError(ErrorKind::EtaOrthogonal, "initial mass is invisible to eta");
  const auto nu_moved = detail::left_orbit(kernel.matrix(), certificate.nu_on_e, 2 * t);
  Measure out = Measure::Zero(kernel.size());
  for (int i = 0; i < t; ++i) out += w[static_cast<std::size_t>(i)] * nu_moved[static_cast<std::size_t>(i + j)];
  return normalized(out);
}

LyapunovWitness build_phi2(const AbsorbedKernel& kernel, const CyclicStructure& cyclic,
                           const SpectralCertificate& certificate, const Phi2Options& options) {
  const int t = cyclic.period();
  const double theta0 = certificate.theta0;
  const double alpha = certificate.alpha();
  const double lower = theta0 * std::pow(alpha, 1.0 / t);
  if (!(lower < 1.0)) throw QsdError(ErrorKind::NoValidTheta2, "theta0 alpha^{1/t} >= 1");

  LyapunovWitness w;
  if (options.theta2) {
    w.theta2 = *options.theta2;
    if (!(w.theta2 > lower && w.theta2 < 1.0)) {
      std::ostringstream os;
      os << "theta2 = " << w.theta2 << " outside (" << lower << ", 1)";
      throw QsdError(ErrorKind::NoValidTheta2, os.str());
    }
  } else {
    w.theta2 = alpha > 0.0 ? theta0 * std::pow(alpha, 1.0 / (2.0 * t)) : theta0 / 2.0;
  }

  const StateFunction& eta = certificate.eta;
  const StateFunction& v = certificate.v_weights;
  const Measure& nu = certificate.nu;
  auto k_of = [&](double eps) {
    std::vector<Eigen::Index> k;
    for (Eigen::Index x = 0; x < eta.size(); ++x) {
      if (eta[x] >= eps && v[x] <= 1.0 / eps) k.push_back(x);
    }
    return k;
  };
  auto mass_of = [&](const std::vector<Eigen::Index>& k) {
    double m = 0.0;
    for (auto x : k) m += nu[x];
    return m;
  };
  if (options.epsilon) {
    w.epsilon = *options.epsilon;
    w.k_set = k_of(w.epsilon);
    w.nu_of_k = mass_of(w.k_set);
  } else {
    for (int m = 0; m <= 1074; ++m) {
      const double eps = std::ldexp(1.0, -m);
      auto k = k_of(eps);
      const double mass = mass_of(k);
      if (mass >= 0.5) {
        w.epsilon = eps;
        w.k_set = std::move(k);
        w.nu_of_k = mass;
        break;
      }
    }
  }
  if (!(w.nu_of_k >= 0.5)) throw QsdError(ErrorKind::KTooSmall, "no epsilon gives nu(K) >= 1/2");

  const AbsorbedKernel q = restrict_iterated(kernel, cyclic);
  const auto m0 = q.size();
  StateFunction indicator = StateFunction::Zero(m0);
  for (auto x : w.k_set) indicator[x] = 1.0;
  const double step_scale = std::pow(w.theta2, -t);

  // Smallest n0 >= 1 with inf_K theta2^{-n0 t} Q_{n0} 1_K >= 1 (or the P_{n0} reading).
  auto margin_of = [&](const StateFunction& g) {
    double m = std::numeric_limits<double>::infinity();
    for (auto x : w.k_set) m = std::min(m, g[x]);
    return m;
  };
  if (!options.one_step_reading) {
    StateFunction g = indicator;
    for (int n = 1; n <= options.n0_limit; ++n) {
      g = step_scale * (q.matrix() * g);
      if (margin_of(g) >= 1.0) {
        w.n0 = n;
        w.return_margin = margin_of(g);
        break;
      }
    }
  } else {
    // X_{n0} in K from A_0 is only possible when t divides n0.
    const auto a0 = cyclic.members(0);
    StateFunction g = cyclic.extend_from_a0(indicator);
    const double one_step = std::pow(w.theta2, -t);
    for (int n = 1; n <= options.n0_limit; ++n) {
      g = kernel.matrix() * g;
      if (n % t != 0) continue;
      StateFunction on_a0 = cyclic.restrict_to_a0(g) * std::pow(one_step, n);
      if (margin_of(on_a0) >= 1.0) {
        w.n0 = n;
        w.return_margin = margin_of(on_a0);
        break;
      }
    }
  }
  if (w.n0 == 0) throw QsdError(ErrorKind::NoValidTheta2, "no n0 within the search limit; theta2 too close to theta0");

  const double c = (step_scale - 1.0) / (std::pow(w.theta2, -w.n0 * t) - 1.0);
  w.phi2 = StateFunction::Zero(m0);
  StateFunction g = indicator;
  for (int k = 0; k < w.n0; ++k) {
    w.phi2 += g;
    g = step_scale * (q.matrix() * g);
  }
  w.phi2 *= c;

  const StateFunction lyap = q.matrix() * w.phi2 - std::pow(w.theta2, t) * w.phi2;
  w.lyapunov_slack = lyap.minCoeff();
  w.lyapunov_holds = w.lyapunov_slack >= -1e-12;

  w.phi2_in_unit_interval = (w.phi2.array() >= 0.0).all() && (w.phi2.array() <= 1.0 + 1e-12).all();
  w.phi2_min_on_k = std::numeric_limits<double>::infinity();
  for (auto x : w.k_set) w.phi2_min_on_k = std::min(w.phi2_min_on_k, w.phi2[x]);

  w.stated_constant_applies = theta0 < w.theta2;
  w.stated_constant = c / (1.0 - theta0 / w.theta2);
  w.stated_bound_slack = (w.stated_constant * eta - w.phi2).minCoeff();
  w.stated_bound_holds = !w.stated_constant_applies || w.stated_bound_slack >= -1e-12;

  double series = 0.0;
  for (int k = 0; k < w.n0; ++k) series += std::pow(theta0 / w.theta2, k * t);
  w.derived_constant = c / w.epsilon * series;
  w.derived_bound_slack = (w.derived_constant * eta - w.phi2).minCoeff();
  w.derived_bound_holds = w.derived_bound_slack >= -1e-12 * std::max(1.0, w.derived_constant);

  w.valid = w.lyapunov_holds && w.phi2_in_unit_interval && w.phi2_min_on_k > 0.0 && w.nu_of_k >= 0.5 &&
            w.stated_bound_holds && w.derived_bound_holds;
  return w;
}

int hyp_main_threshold(double c_q_prime, double theta0, int period, double alpha, double ratio) {
  const double scale = c_q_prime * std::pow(theta0, -4.0 * period) * ratio;
  if (!(alpha > 0.0) || scale <= 0.5) return 0;
  if (!std::isfinite(scale)) return INT_MAX;
  auto holds = [&](int n) { return scale * std::pow(alpha, n) <= 0.5; };
  int n = std::max(0, static_cast<int>(std::ceil(std::log(2.0 * scale) / -std::log(alpha))));
  while (!holds(n)) ++n;
  while (n > 0 && holds(n - 1)) --n;
  return n;
}

int hyp_main_threshold(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                       const CyclicStructure& cyclic, const Measure& mu) {
  const int t = cyclic.period();
  const auto w = eta_class_weights(certificate, kernel, cyclic, mu);
  const auto v_moved = detail::right_orbit(kernel.matrix(), cyclic.extend_from_a0(certificate.v_weights), t);
  double eta_sum = 0.0, v_sum = 0.0;
  for (int i = 0; i < t; ++i) {
    eta_sum += w[static_cast<std::size_t>(i)];
    v_sum += cyclic.restrict(mu, i).dot(v_moved[static_cast<std::size_t>(t - i)].transpose());
  }
  if (!(eta_sum > 0.0)) throw QsdError(ErrorKind::EtaOrthogonal, "initial mass is invisible to eta");
  return hyp_main_threshold(certificate.c_q_prime, certificate.theta0, t, certificate.alpha(), v_sum / eta_sum);
}

CriterionReport qsd_convergence_criterion(const SpectralCertificate& certificate, const AbsorbedKernel& kernel,
                                          const CyclicStructure& cyclic, const Measure& mu, double tol) {
  const int t = cyclic.period();
  const auto w = eta_class_weights(certificate, kernel, cyclic, mu);
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) throw QsdError(ErrorKind::EtaOrthogonal, "initial mass is invisible to eta");

  CriterionReport out;
  double top = 0.0;
  for (int i = 0; i < t; ++i) {
    out.scaled_weights.push_back(std::pow(certificate.theta0, i) * w[static_cast<std::size_t>(i)]);
    top = std::max(top, out.scaled_weights.back());
  }
  const auto [lo, hi] = std::minmax_element(out.scaled_weights.begin(), out.scaled_weights.end());
  out.relative_spread = (*hi - *lo) / top;
  out.holds = out.relative_spread <= tol;

  const Measure qsd = qsd_from_iterated(certificate.nu, certificate.theta0, kernel, cyclic);
  std::vector<Measure> limits;
  for (int j = 0; j < t; ++j) {
    limits.push_back(conditional_limit(certificate, kernel, cyclic, mu, j));
    out.distance_to_qsd = std::max(out.distance_to_qsd, (limits.back() - qsd).lpNorm<1>());
    for (int i = 0; i < j; ++i) {
      out.limit_spread = std::max(out.limit_spread, (limits.back() - limits[static_cast<std::size_t>(i)]).lpNorm<1>());
    }
  }
  return out;
}

}  // namespace qsdlab
