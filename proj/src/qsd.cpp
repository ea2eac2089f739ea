#include "qsdlab/qsd.hpp"

#include "qsdlab/errors.hpp"

#include <cmath>
#include <sstream>

namespace qsdlab {

QsdCheck is_qsd(const AbsorbedKernel& kernel, const Measure& mu, double tol) {
  if (mu.size() != kernel.size()) throw QsdError(ErrorKind::DimensionMismatch, "measure length differs from state count");
  const Measure image = mu * kernel.matrix();
  QsdCheck out;
  out.theta = image.sum();
  if (!(out.theta > 0.0)) throw QsdError(ErrorKind::ThetaZero, "mu P_1 1_E = 0, conditioning undefined");
  out.residual = (image - out.theta * mu).lpNorm<1>();
  out.is_qsd = out.residual <= tol;
  return out;
}

Measure qsd_from_iterated(const Measure& nu_on_a0, double theta0, const AbsorbedKernel& kernel,
                          const CyclicStructure& cyclic, double tol) {
  const int t = cyclic.period();
  const AbsorbedKernel q = restrict_iterated(kernel, cyclic);
  if (nu_on_a0.size() != q.size()) throw QsdError(ErrorKind::DimensionMismatch, "nu must live on A_0");
  const QsdCheck check = is_qsd(q, nu_on_a0, tol);
  if (!check.is_qsd || std::abs(check.theta - std::pow(theta0, t)) > tol) {
    std::ostringstream os;
    os << "residual " << check.residual << ", rate " << check.theta << " vs theta0^t " << std::pow(theta0, t);
    throw QsdError(ErrorKind::NotAQSD, os.str());
  }
  Measure moved = cyclic.extend_from_a0(nu_on_a0);
  Measure total = Measure::Zero(kernel.size());
  for (int i = 0; i < t; ++i) {
    total += std::pow(theta0, -i) * moved;
    moved = moved * kernel.matrix();
  }
  return normalized(total);
}

Measure iterated_from_qsd(const Measure& nu_qs, const CyclicStructure& cyclic) {
  if (static_cast<std::size_t>(nu_qs.size()) != cyclic.size()) {
    throw QsdError(ErrorKind::DimensionMismatch, "measure length differs from state count");
  }
  const auto a0 = cyclic.members(0);
  Measure out(static_cast<Eigen::Index>(a0.size()));
  for (std::size_t a = 0; a < a0.size(); ++a) out[static_cast<Eigen::Index>(a)] = nu_qs[a0[a]];
  const double mass = out.sum();
  if (!(mass > 0.0)) throw QsdError(ErrorKind::ZeroMassOnA0, "input gives no mass to A_0");
  return out / mass;
}

std::vector<Measure> iterated_qsd_extremes(const Measure& nu_on_a0, const AbsorbedKernel& kernel,
                                           const CyclicStructure& cyclic) {
  std::vector<Measure> out;
  Measure moved = cyclic.extend_from_a0(nu_on_a0);
  for (int i = 0; i < cyclic.period(); ++i) {
    const double mass = moved.sum();
    if (!(mass > 0.0)) {
      std::ostringstream os;
      os << "nu P_" << i << " 1_E = 0";
      throw QsdError(ErrorKind::DegenerateWeight, os.str());
    }
    out.push_back(moved / mass);
    moved = moved * kernel.matrix();
  }
  return out;
}

std::vector<double> periodic_weight_profile(const Measure& nu_on_a0, double theta0,
                                            const AbsorbedKernel& kernel, const CyclicStructure& cyclic) {
  std::vector<double> w;
  Measure moved = cyclic.extend_from_a0(nu_on_a0);
  double total = 0.0;
  for (int i = 0; i < cyclic.period(); ++i) {
    w.push_back(std::pow(theta0, -i) * moved.sum());
    total += w.back();
    moved = moved * kernel.matrix();
  }
  if (!(total > 0.0)) throw QsdError(ErrorKind::DegenerateWeight, "profile has no mass");
  for (double& x : w) x /= total;
  return w;
}

Measure iterated_qsd_family(const Measure& nu_on_a0, const AbsorbedKernel& kernel,
                            const CyclicStructure& cyclic, const std::vector<double>& weights) {
  if (weights.size() != static_cast<std::size_t>(cyclic.period())) {
    throw QsdError(ErrorKind::DegenerateWeight, "need exactly t weights");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw QsdError(ErrorKind::DegenerateWeight, "weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw QsdError(ErrorKind::DegenerateWeight, "weights must sum to 1");
  const auto extremes = iterated_qsd_extremes(nu_on_a0, kernel, cyclic);
  Measure out = Measure::Zero(kernel.size());
  for (std::size_t i = 0; i < extremes.size(); ++i) out += weights[i] * extremes[i];
  return out;
}

}  // namespace qsdlab
