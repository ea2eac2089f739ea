#include "qsdlab/cli_io.hpp"

#include "qsdlab/errors.hpp"
#include "qsdlab/monte_carlo.hpp"
#include "qsdlab/periodicity.hpp"
#include "qsdlab/q_process.hpp"
#include "qsdlab/qsd.hpp"
#include "qsdlab/quasi_ergodic.hpp"
#include "qsdlab/quasi_limit.hpp"
#include "qsdlab/spectral.hpp"

#include "report_json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace qsdlab {

namespace {

using nlohmann::json;

struct Context {
  const RunOptions& options;
  ChainSpec spec;
  CyclicStructure cyclic;
  std::optional<SpectralCertificate> cert;
  std::map<std::string, double> tol;
  std::vector<std::pair<std::string, std::string>> tsv;  // file name, content
  bool all_pass = true;

  const AbsorbedKernel& kernel() const { return spec.kernel; }
  const std::vector<std::string>& labels() const { return spec.kernel.labels(); }
  int t() const { return cyclic.period(); }
  Eigen::Index first_of_a0() const { return cyclic.members(0).front(); }
};

void check(Context& ctx, json& section, const std::string& name, bool ok) {
  section["checks"][name] = ok;
  ctx.all_pass = ctx.all_pass && ok;
}

json measure_json(const std::vector<std::string>& labels, const Eigen::RowVectorXd& mu) {
  json out = json::object();
  for (Eigen::Index i = 0; i < mu.size(); ++i) out[labels[static_cast<std::size_t>(i)]] = mu[i];
  return out;
}

json function_json(const std::vector<std::string>& labels, const Eigen::VectorXd& f) {
  return measure_json(labels, f.transpose());
}

std::vector<std::string> a0_labels(const Context& ctx) {
  std::vector<std::string> out;
  for (auto x : ctx.cyclic.members(0)) out.push_back(ctx.labels()[static_cast<std::size_t>(x)]);
  return out;
}

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

std::string tsv_table(const std::vector<std::vector<double>>& rows, int first_n) {
  std::string out = "n\tj\tvalue\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < rows[r].size(); ++j) {
      out += std::to_string(first_n + static_cast<int>(r)) + "\t" + std::to_string(j) + "\t" +
             detail::format_double(rows[r][j]) + "\n";
    }
  }
  return out;
}

std::string tsv_series(const std::vector<double>& values) {
  std::vector<std::vector<double>> rows;
  for (double v : values) rows.push_back({v});
  return tsv_table(rows, 0);
}

Measure point_mass(Eigen::Index n, Eigen::Index x) { return Measure::Unit(n, x); }

// ----------------------------------------------------------------- sections

json kernel_section(Context& ctx) {
  json s;
  s["states"] = ctx.labels();
  s["n_states"] = ctx.kernel().size();
  s["absorption"] = function_json(ctx.labels(), ctx.kernel().absorption());
  s["max_row_sum"] = ctx.kernel().matrix().rowwise().sum().maxCoeff();
  if (!ctx.spec.metadata.empty()) s["metadata"] = json::parse(ctx.spec.metadata);
  return s;
}

json periodicity_section(Context& ctx) {
  json s;
  s["period"] = ctx.t();
  json classes = json::object();
  for (std::size_t x = 0; x < ctx.labels().size(); ++x) classes[ctx.labels()[x]] = ctx.cyclic.classes()[x];
  s["classes"] = classes;
  std::vector<std::size_t> sizes;
  for (int i = 0; i < ctx.t(); ++i) sizes.push_back(ctx.cyclic.members(i).size());
  s["class_sizes"] = sizes;
  const double residual = verify_partition(ctx.kernel(), ctx.cyclic);
  s["partition_residual"] = residual;
  check(ctx, s, "partition_exact", residual <= kKernelTolerance);
  return s;
}

json spectral_section(Context& ctx) {
  const auto& cert = *ctx.cert;
  const auto& kernel = ctx.kernel();
  const double tol = ctx.tol.at("spectral");
  const double eig_tol = ctx.tol.at("eigen_residual");
  const AbsorbedKernel q = restrict_iterated(kernel, ctx.cyclic);
  const auto a0 = a0_labels(ctx);

  json s;
  s["theta0"] = cert.theta0;
  s["theta0_pow_t"] = cert.theta0_pow_t;
  s["alpha"] = cert.alpha();
  s["alpha_zero"] = cert.mixing.alpha_zero;
  s["c_q"] = cert.c_q();
  s["c_q_basis"] = cert.mixing.c_q_basis;
  s["c_q_prime"] = cert.c_q_prime;
  s["k_max"] = cert.mixing.k_max;
  s["k_attained"] = cert.mixing.k_attained;
  s["eta"] = function_json(a0, cert.eta);
  s["nu"] = measure_json(a0, cert.nu);
  s["v_weights"] = function_json(a0, cert.v_weights);
  s["eta_over_v_sup"] = cert.eta_over_v_sup;
  s["nu_of_v"] = cert.nu_of_v;
  const double eta_res = (q.matrix() * cert.eta - cert.theta0_pow_t * cert.eta).cwiseAbs().maxCoeff() /
                         cert.eta.cwiseAbs().maxCoeff();
  const double nu_res = (cert.nu * q.matrix() - cert.theta0_pow_t * cert.nu).lpNorm<1>();
  const double pairing = std::abs(cert.nu.dot(cert.eta.transpose()) - 1.0);
  s["eta_residual"] = eta_res;
  s["nu_residual"] = nu_res;
  s["normalization_error"] = pairing;
  s["trivial_bound_slack"] = cert.mixing.trivial_bound_slack;
  check(ctx, s, "eta_eigenvector", eta_res <= eig_tol);
  check(ctx, s, "nu_eigenvector", nu_res <= eig_tol);
  check(ctx, s, "normalization", pairing <= 1e-12);
  check(ctx, s, "trivial_bound", cert.mixing.trivial_bound_holds);
  check(ctx, s, "c_q_finite", std::isfinite(cert.c_q()));

  const SpectrumReport rep = classify_spectrum(kernel, ctx.cyclic, cert, tol);
  json ring = json::array();
  for (const auto& m : rep.ring) {
    ring.push_back({{"k", m.k},
                    {"expected", complex_json(m.expected)},
                    {"nearest", complex_json(m.nearest)},
                    {"eigenvalue_error", m.eigenvalue_error},
                    {"eigenfunction_residual", m.eigenfunction_residual},
                    {"alignment_error", m.alignment_error}});
  }
  s["ring"] = ring;
  s["ring_count"] = rep.ring_count;
  s["bulk_bound"] = rep.bulk_bound;
  s["bulk_max_modulus"] = rep.bulk_max_modulus;
  s["bulk_refined"] = rep.bulk_refined;
  s["theta0_below_one"] = rep.theta0_below_one;
  s["unit_eigenvalue_multiplicity"] = rep.unit_eigenvalue_multiplicity;
  s["unit_eigenfunction_constant"] = rep.unit_eigenfunction_constant;
  s["perron_visible_off_theta0"] = rep.perron_visible_off_theta0;
  json pairs = json::array();
  static const char* kPoint[] = {"cemetery_charged", "perron_visible", "bulk"};
  for (const auto& p : rep.eigenpairs) {
    json nu_p = json::array();
    for (auto z : p.nu_p_i_h) nu_p.push_back(complex_json(z));
    pairs.push_back({{"eigenvalue", complex_json(p.eigenvalue)},
                     {"h_cemetery", complex_json(p.h_cemetery)},
                     {"nu_p_i_h", nu_p},
                     {"point", kPoint[static_cast<int>(p.point)]},
                     {"eigenvalue_is_theta0", p.eigenvalue_is_theta0},
                     {"constant_eigenfunction", p.constant_eigenfunction}});
  }
  s["extended_eigenpairs"] = pairs;
  check(ctx, s, "peripheral_ring", rep.ring_ok);
  check(ctx, s, "bulk_gap", rep.bulk_ok);
  if (rep.theta0_below_one) check(ctx, s, "unit_eigenvalue_constant", rep.unit_eigenfunction_constant);
  return s;
}

json qsd_section(Context& ctx) {
  const auto& cert = *ctx.cert;
  const auto& kernel = ctx.kernel();
  const int t = ctx.t();
  const double tol = ctx.tol.at("qsd");
  const double rt_tol = ctx.tol.at("roundtrip");

  json s;
  const Measure nu_qs = qsd_from_iterated(cert.nu, cert.theta0, kernel, ctx.cyclic, tol);
  const QsdCheck chk = is_qsd(kernel, nu_qs, tol);
  s["nu_qs"] = measure_json(ctx.labels(), nu_qs);
  s["theta"] = chk.theta;
  s["qsd_residual"] = chk.residual;
  check(ctx, s, "nu_qs_is_qsd", chk.is_qsd);
  check(ctx, s, "rate_is_theta0", std::abs(chk.theta - cert.theta0) <= tol);

  double survival_gap = 0.0;
  Measure law = nu_qs;
  for (int n = 0; n <= 30; ++n) {
    survival_gap = std::max(survival_gap, std::abs(law.sum() - std::pow(cert.theta0, n)));
    law = law * kernel.matrix();
  }
  s["survival_law_error"] = survival_gap;
  check(ctx, s, "survival_law", survival_gap <= rt_tol);

  const Measure back = iterated_from_qsd(nu_qs, ctx.cyclic);
  const double rt_a0 = (back - cert.nu).lpNorm<1>();
  const double rt_e = (qsd_from_iterated(back, cert.theta0, kernel, ctx.cyclic, tol) - nu_qs).lpNorm<1>();
  s["roundtrip_error_a0"] = rt_a0;
  s["roundtrip_error_e"] = rt_e;
  check(ctx, s, "roundtrip", rt_a0 <= rt_tol && rt_e <= rt_tol);

  const AbsorbedKernel pt = kernel_power(kernel, t);
  const auto extremes = iterated_qsd_extremes(cert.nu, kernel, ctx.cyclic);
  json ext = json::array();
  bool extremes_pt = true, others_fail_p1 = true;
  for (std::size_t i = 0; i < extremes.size(); ++i) {
    const QsdCheck on_pt = is_qsd(pt, extremes[i], tol);
    const QsdCheck on_p1 = is_qsd(kernel, extremes[i], tol);
    extremes_pt = extremes_pt && on_pt.is_qsd;
    if (t > 1) others_fail_p1 = others_fail_p1 && !on_p1.is_qsd;
    ext.push_back({{"i", i}, {"residual_pt", on_pt.residual}, {"residual_p1", on_p1.residual}});
  }
  const auto weights = periodic_weight_profile(cert.nu, cert.theta0, kernel, ctx.cyclic);
  const Measure member = iterated_qsd_family(cert.nu, kernel, ctx.cyclic, weights);
  const QsdCheck member_p1 = is_qsd(kernel, member, tol);
  s["family_extremes"] = ext;
  s["periodic_weights"] = weights;
  s["periodic_member_residual_p1"] = member_p1.residual;
  s["periodic_member_distance"] = (member - nu_qs).lpNorm<1>();
  check(ctx, s, "extremes_qsd_for_pt", extremes_pt);
  check(ctx, s, "periodic_member_qsd_for_p1", member_p1.is_qsd);
  check(ctx, s, "extremes_not_qsd_for_p1", others_fail_p1);
  return s;
}

json limits_section(Context& ctx) {
  const auto& cert = *ctx.cert;
  const auto& kernel = ctx.kernel();
  const int t = ctx.t();
  const auto n = kernel.size();
  json s;

  const DecayReport rep = verify_main_estimate_basis(kernel, ctx.cyclic, cert, ctx.options.n_max,
                                                     ctx.tol.at("rate_slack"));
  s["n_max"] = rep.n_max;
  s["sup_ratio"] = rep.sup_ratio;
  s["sup_ratio_shifted"] = rep.sup_ratio_shifted;
  s["c_q_prime"] = rep.c_q_prime;
  s["fitted_rate"] = rep.fitted_rate;
  s["fit_points"] = rep.fit_points;
  s["alpha"] = rep.alpha;
  s["functions_tested"] = rep.functions_tested;
  s["functions_skipped"] = rep.functions_skipped;
  s["zero_denominator_states"] = rep.zero_denominator_states;
  s["direct_crosscheck"] = rep.direct_crosscheck;
  s["shifted_bound_holds"] = rep.shifted_bound_holds;
  check(ctx, s, "main_estimate_bound", rep.bound_holds);
  check(ctx, s, "decay_rate", rep.rate_ok);
  check(ctx, s, "stable_matches_direct", rep.direct_crosscheck <= 1e-9);
  ctx.tsv.emplace_back("limits_residual.tsv", tsv_table(rep.residual, 1));

  const LyapunovWitness w = build_phi2(kernel, ctx.cyclic, cert);
  const auto a0 = a0_labels(ctx);
  json k_set = json::array();
  for (auto x : w.k_set) k_set.push_back(a0[static_cast<std::size_t>(x)]);
  s["phi2"] = {{"theta2", w.theta2},
               {"epsilon", w.epsilon},
               {"k_set", k_set},
               {"nu_of_k", w.nu_of_k},
               {"n0", w.n0},
               {"values", function_json(a0, w.phi2)},
               {"return_margin", w.return_margin},
               {"lyapunov_slack", w.lyapunov_slack},
               {"stated_constant", w.stated_constant},
               {"stated_constant_applies", w.stated_constant_applies},
               {"stated_bound_slack", w.stated_bound_slack},
               {"derived_constant", w.derived_constant},
               {"derived_bound_slack", w.derived_bound_slack},
               {"min_on_k", w.phi2_min_on_k}};
  check(ctx, s, "phi2_witness", w.valid);

  const Measure nu_qs = qsd_from_iterated(cert.nu, cert.theta0, kernel, ctx.cyclic, ctx.tol.at("qsd"));
  const Measure delta = point_mass(n, ctx.first_of_a0());
  auto criterion_json = [&](const Measure& mu, const CriterionReport& c) {
    return json{{"holds", c.holds},
                {"scaled_weights", c.scaled_weights},
                {"relative_spread", c.relative_spread},
                {"limit_spread", c.limit_spread},
                {"distance_to_qsd", c.distance_to_qsd},
                {"hyp_main_threshold", hyp_main_threshold(cert, kernel, ctx.cyclic, mu)}};
  };
  const CriterionReport from_qsd = qsd_convergence_criterion(cert, kernel, ctx.cyclic, nu_qs);
  const CriterionReport from_point = qsd_convergence_criterion(cert, kernel, ctx.cyclic, delta);
  s["criterion_nu_qs"] = criterion_json(nu_qs, from_qsd);
  s["criterion_point_mass"] = criterion_json(delta, from_point);
  s["criterion_point_mass"]["state"] = ctx.labels()[static_cast<std::size_t>(ctx.first_of_a0())];
  json limits = json::array();
  for (int j = 0; j < t; ++j) limits.push_back(measure_json(ctx.labels(), conditional_limit(cert, kernel, ctx.cyclic, delta, j)));
  s["criterion_point_mass"]["conditional_limits"] = limits;
  check(ctx, s, "qsd_limits_j_independent", from_qsd.holds && from_qsd.limit_spread <= 1e-9);
  check(ctx, s, "criterion_sound", from_point.holds == (from_point.distance_to_qsd <= 1e-8));
  return s;
}

json qprocess_section(Context& ctx, QProcessKernel& qp_out, InvariantReport& inv_out) {
  const auto& cert = *ctx.cert;
  const auto& kernel = ctx.kernel();
  const int t = ctx.t();
  json s;

  const EtaProfile profile = eta_profile(cert, kernel, ctx.cyclic);
  json etas = json::array();
  for (int k = 0; k < t; ++k) etas.push_back(function_json(ctx.labels(), profile.eta_k[static_cast<std::size_t>(k)]));
  s["eta_k"] = etas;
  s["eta_periodicity_error"] = profile.periodicity_error;
  check(ctx, s, "eta_periodic", profile.periodicity_error <= 1e-10 * std::max(1.0, cert.eta.maxCoeff()));

  qp_out = build_q_process(cert, kernel, ctx.cyclic);
  const auto& qp = qp_out;
  s["domain"] = qp.labels;
  json rows = json::object();
  for (std::size_t a = 0; a < qp.domain.size(); ++a) {
    json row = json::object();
    for (std::size_t b = 0; b < qp.domain.size(); ++b) {
      const double p = qp.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      if (p != 0.0) row[qp.labels[b]] = p;
    }
    rows[qp.labels[a]] = row;
  }
  s["kernel"] = rows;
  s["max_row_sum_error"] = qp.max_row_sum_error;
  check(ctx, s, "stochastic", qp.max_row_sum_error <= 1e-12);

  const SemigroupCheck sg = q_semigroup_check(qp, cert, kernel, ctx.cyclic, 10);
  s["semigroup"] = {{"max_steps", sg.max_steps}, {"max_discrepancy", sg.max_discrepancy}, {"worst_step", sg.worst_step}};
  check(ctx, s, "semigroup_closed_form", sg.max_discrepancy <= ctx.tol.at("semigroup"));

  inv_out = invariant_candidates(qp, cert, kernel, ctx.cyclic);
  const auto& inv = inv_out;
  auto cand = [&](const InvariantCandidate& c) {
    return json{{"measure", measure_json(qp.labels, c.measure)},
                {"mass", c.mass},
                {"residual_l1", c.residual_l1},
                {"residual_tv", c.residual_tv},
                {"distance_to_oracle", c.distance_to_oracle}};
  };
  s["invariant"] = {{"stated", cand(inv.stated)},
                    {"corrected", cand(inv.corrected)},
                    {"oracle", measure_json(qp.labels, inv.oracle)},
                    {"oracle_residual_l1", inv.oracle_residual_l1},
                    {"class_masses", inv.class_masses}};
  double mass_gap = 0.0;
  for (double m : inv.class_masses) mass_gap = std::max(mass_gap, std::abs(m - 1.0 / t));
  check(ctx, s, "corrected_invariant", inv.corrected.residual_l1 <= ctx.tol.at("invariance"));
  check(ctx, s, "corrected_matches_oracle", inv.corrected.distance_to_oracle <= ctx.tol.at("oracle"));
  check(ctx, s, "class_masses_uniform", mass_gap <= 1e-12);

  const Measure start = Measure::Unit(static_cast<Eigen::Index>(qp.domain.size()), 0);
  const ContractionReport con = contraction_report(qp, cert, kernel, ctx.cyclic, start, ctx.options.n_max,
                                                   ctx.tol.at("rate_slack"));
  s["contraction"] = {{"start", qp.labels.front()},
                      {"fitted_rate", con.fitted_rate},
                      {"fit_points", con.fit_points},
                      {"alpha", con.alpha},
                      {"theory_gap", con.theory_gap},
                      {"stated_gap", con.stated_gap}};
  check(ctx, s, "contraction_rate", con.rate_ok);
  check(ctx, s, "contraction_converges", con.converges);
  check(ctx, s, "limit_profile_matches_oracle", con.theory_gap <= ctx.tol.at("oracle"));
  ctx.tsv.emplace_back("qprocess_contraction.tsv", tsv_table(con.distance, 0));
  return s;
}

json ergodic_section(Context& ctx, const QProcessKernel& qp, const InvariantReport& inv) {
  const auto& cert = *ctx.cert;
  const auto& kernel = ctx.kernel();
  const int t = ctx.t();
  const auto n = kernel.size();
  json s;

  const Measure qe = nu_qe(cert, kernel, ctx.cyclic);
  s["nu_qe"] = measure_json(ctx.labels(), qe);
  double mass_gap = std::abs(qe.sum() - 1.0);
  std::vector<double> masses;
  for (int i = 0; i < t; ++i) {
    masses.push_back(qe.dot(ctx.cyclic.indicator(i).transpose()));
    mass_gap = std::max(mass_gap, std::abs(masses.back() - 1.0 / t));
  }
  s["class_masses"] = masses;
  check(ctx, s, "class_masses_uniform", mass_gap <= 1e-12);
  double oracle_gap = 0.0;
  for (std::size_t a = 0; a < qp.domain.size(); ++a) {
    oracle_gap += std::abs(qe[qp.domain[a]] - inv.oracle[static_cast<Eigen::Index>(a)]);
  }
  s["distance_to_qprocess_oracle"] = oracle_gap;
  check(ctx, s, "matches_qprocess_oracle", oracle_gap <= ctx.tol.at("invariance"));

  const Eigen::Index x0 = ctx.first_of_a0();
  const Measure mu = point_mass(n, x0);
  const StateFunction f = StateFunction::Unit(n, 0);
  const QedRateReport rate = qed_rate_report(kernel, ctx.cyclic, cert, mu, f, ctx.options.big_n_max);
  s["rate"] = {{"start", ctx.labels()[static_cast<std::size_t>(x0)]},
               {"f_indicator_of", ctx.labels().front()},
               {"n_max", rate.n_max},
               {"target", rate.target},
               {"sup_scaled_error", rate.sup_scaled_error},
               {"weight_ratio", rate.weight_ratio},
               {"constant", rate.constant},
               {"first_half_max", rate.first_half_max},
               {"last_half_max", rate.last_half_max}};
  check(ctx, s, "scaled_error_bounded", rate.bounded);
  ctx.tsv.emplace_back("ergodic_scaled_error.tsv", tsv_series(rate.scaled_error));

  const auto moments = second_moments_exact(kernel, mu, f, rate.target, 300);
  s["second_moment"] = {{"n50", moments[50]}, {"n200", moments[200]}, {"n300", moments[300]}};
  check(ctx, s, "second_moment_decreases", moments[200] <= moments[50] + 1e-14);
  ctx.tsv.emplace_back("ergodic_second_moment.tsv", tsv_series(moments));
  return s;
}

std::uint64_t sub_seed(std::uint64_t seed) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

json simulate_section(Context& ctx, const QProcessKernel& qp) {
  const auto& kernel = ctx.kernel();
  const auto n = kernel.size();
  const double sigmas = ctx.tol.at("mc_sigma");
  const int paths = ctx.options.paths;
  const int threads = ctx.options.threads;
  const Eigen::Index x0 = ctx.first_of_a0();
  const Measure mu = point_mass(n, x0);
  const int horizon = 5;
  json s;
  s["paths"] = paths;
  s["seed"] = ctx.options.seed;
  s["start"] = ctx.labels()[static_cast<std::size_t>(x0)];
  s["horizon"] = horizon;

  // One retry with an independent seed, as allowed for 4-sigma bands.
  auto with_retry = [&](const std::function<json(std::uint64_t)>& attempt, const std::string& name) {
    json first = attempt(ctx.options.seed);
    if (first["pass"].get<bool>()) {
      first["retried"] = false;
      return first;
    }
    json second = attempt(sub_seed(ctx.options.seed));
    second["retried"] = true;
    second["first_attempt"] = first;
    check(ctx, s, name, second["pass"].get<bool>());
    return second;
  };

  json cond = with_retry([&](std::uint64_t seed) {
    const TrajectoryBatch batch = simulate_paths(kernel, mu, horizon, paths, seed, threads);
    const EmpiricalLaw emp = conditional_empirical(batch, horizon);
    const Measure exact = conditional_law(kernel, mu, horizon);
    const double dist = (emp.law - exact).lpNorm<1>();
    const double band = sigmas * std::sqrt(static_cast<double>(n) / emp.ess);
    const MeanEstimate avg = estimate_time_average_mc(batch, StateFunction::Unit(n, 0), horizon);
    const double avg_exact = time_average_exact(kernel, mu, StateFunction::Unit(n, 0), horizon);
    const double gap = std::abs(avg.mean - avg_exact);
    const bool avg_ok = gap <= sigmas * avg.stderr_ + 1e-12;
    return json{{"seed", seed},
                {"ess", emp.ess},
                {"law_l1_distance", dist},
                {"law_band", band},
                {"time_average", avg.mean},
                {"time_average_stderr", avg.stderr_},
                {"time_average_exact", avg_exact},
                {"pass", dist <= band && avg_ok}};
  }, "conditional_law_and_average");
  s["conditional"] = cond;
  if (!s.contains("checks") || !s["checks"].contains("conditional_law_and_average")) {
    check(ctx, s, "conditional_law_and_average", true);
  }

  const int qp_horizon = 100;
  const Measure start = Measure::Unit(static_cast<Eigen::Index>(qp.domain.size()), 0);
  json occ = with_retry([&](std::uint64_t seed) {
    const OccupationEstimate est = q_process_occupation(qp, start, qp_horizon, paths, seed, threads);
    const Measure exact = q_process_occupation_exact(qp, start, qp_horizon);
    double worst_z = 0.0;
    bool ok = true;
    for (Eigen::Index a = 0; a < exact.size(); ++a) {
      // Rounding floor: deterministic rows give stderr at round-off level.
      const double gap = std::abs(est.mean[a] - exact[a]);
      if (gap <= 1e-12) continue;
      if (est.stderr_[a] > 0.0) {
        worst_z = std::max(worst_z, gap / est.stderr_[a]);
      } else {
        ok = false;
      }
    }
    return json{{"seed", seed},
                {"horizon", qp_horizon},
                {"max_z", worst_z},
                {"occupation", measure_json(qp.labels, est.mean)},
                {"exact", measure_json(qp.labels, exact)},
                {"pass", ok && worst_z <= sigmas}};
  }, "qprocess_occupation");
  s["qprocess_occupation"] = occ;
  if (!s["checks"].contains("qprocess_occupation")) check(ctx, s, "qprocess_occupation", true);
  return s;
}

// ----------------------------------------------------------------- dispatch

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OracleFailure:
    case ErrorKind::NotAQSD:
    case ErrorKind::ZeroMassOnA0:
    case ErrorKind::UnderflowEta:
    case ErrorKind::NoValidTheta2:
    case ErrorKind::KTooSmall:
    case ErrorKind::NoSurvivors:
    case ErrorKind::Extinct:
      return 2;
    default:
      return 1;
  }
}

void apply_tolerance(std::map<std::string, double>& tol, const std::string& key, double value) {
  if (!tol.count(key)) throw QsdError(ErrorKind::ParseError, "--tolerance: unknown key '" + key + "'");
  if (!std::isfinite(value) || value < 0.0) throw QsdError(ErrorKind::ParseError, "--tolerance: bad value for '" + key + "'");
  tol[key] = value;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw QsdError(ErrorKind::ParseError, path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json build_report(const RunOptions& options, int& exit_code, std::vector<std::pair<std::string, std::string>>& tsv) {
  const auto& commands = known_commands();
  if (std::find(commands.begin(), commands.end(), options.command) == commands.end()) {
    throw QsdError(ErrorKind::UnknownCommand, "'" + options.command + "'");
  }
  if (options.n_max < 1 || options.big_n_max < 300 || options.threads < 1 || options.paths < 2) {
    throw QsdError(ErrorKind::IndexOutOfRange, "need --n-max >= 1, --N-max >= 300, --threads >= 1, --paths >= 2");
  }
  ChainSpec spec = options.chain_text ? parse_chain_spec_text(*options.chain_text)
                   : options.chain_path ? load_chain_spec(*options.chain_path)
                                        : throw QsdError(ErrorKind::ParseError, "--chain is required");

  auto tol = default_tolerances();
  for (const auto& [k, v] : spec.tolerances) apply_tolerance(tol, k, v);
  for (const auto& item : options.tolerance_overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw QsdError(ErrorKind::ParseError, "--tolerance expects KEY=VAL, got '" + item + "'");
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw QsdError(ErrorKind::ParseError, "--tolerance: '" + item.substr(eq + 1) + "' is not a number");
    }
    apply_tolerance(tol, item.substr(0, eq), value);
  }
  if (options.v_weights_path) spec.v_weights = parse_v_weights(read_file(*options.v_weights_path), spec.kernel);

  CyclicStructure cyclic = detect_cyclic_structure(spec.kernel);
  Context ctx{options, std::move(spec), std::move(cyclic), std::nullopt, std::move(tol), {}, true};

  json doc;
  doc["schema"] = kReportSchema;
  doc["command"] = options.command;
  doc["tolerances"] = ctx.tol;
  doc["kernel"] = kernel_section(ctx);
  json per = periodicity_section(ctx);
  doc["period"] = per["period"];
  doc["classes"] = per["classes"];
  doc["periodicity"] = per;

  const std::string& cmd = options.command;
  if (cmd != "validate" && cmd != "period") {
    CertifyOptions copt;
    if (ctx.spec.v_weights) copt.v_weights = ctx.cyclic.restrict_to_a0(*ctx.spec.v_weights);
    ctx.cert = certify(ctx.kernel(), ctx.cyclic, copt);
    const bool all = cmd == "report";
    if (all || cmd == "spectral") doc["spectral"] = spectral_section(ctx);
    if (all || cmd == "qsd") doc["qsd"] = qsd_section(ctx);
    if (all || cmd == "limits") doc["limits"] = limits_section(ctx);
    if (all || cmd == "qprocess" || cmd == "ergodic" || cmd == "simulate") {
      QProcessKernel qp;
      InvariantReport inv;
      json qs = qprocess_section(ctx, qp, inv);
      if (all || cmd == "qprocess") {
        doc["qprocess"] = qs;
      } else {
        ctx.all_pass = true;  // only the requested section is judged
      }
      if (all || cmd == "ergodic") doc["ergodic"] = ergodic_section(ctx, qp, inv);
      if (all || cmd == "simulate") {
        doc["seed"] = options.seed;
        doc["montecarlo"] = simulate_section(ctx, qp);
      }
    }
  }
  doc["pass"] = ctx.all_pass;
  exit_code = ctx.all_pass ? 0 : 2;
  tsv = std::move(ctx.tsv);
  return doc;
}

}  // namespace

std::map<std::string, double> default_tolerances() {
  return {{"qsd", 1e-9},           {"roundtrip", 1e-10}, {"spectral", 1e-8},
          {"eigen_residual", 1e-10}, {"semigroup", 1e-10}, {"invariance", 1e-10},
          {"oracle", 1e-8},        {"rate_slack", 0.02}, {"mc_sigma", 4.0}};
}

RunResult run(const RunOptions& options) {
  RunResult result;
  std::vector<std::pair<std::string, std::string>> tsv;
  json doc;
  try {
    doc = build_report(options, result.exit_code, tsv);
  } catch (const QsdError& e) {
    result.exit_code = exit_code_for(e.kind());
    doc = {{"schema", kReportSchema},
           {"command", options.command},
           {"pass", false},
           {"error", {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}}}};
    tsv.clear();
  } catch (const std::exception& e) {
    result.exit_code = 1;
    doc = {{"schema", kReportSchema},
           {"command", options.command},
           {"pass", false},
           {"error", {{"kind", "InternalError"}, {"message", e.what()}}}};
    tsv.clear();
  }
  result.json = detail::dump_report(doc);

  try {
    if (options.tsv_dir && !tsv.empty()) {
      std::filesystem::create_directories(*options.tsv_dir);
      for (const auto& [name, content] : tsv) {
        std::ofstream out(std::filesystem::path(*options.tsv_dir) / name, std::ios::binary);
        out << content;
        if (!out) throw std::runtime_error("cannot write " + name);
      }
    }
    if (options.out_path) {
      std::ofstream out(*options.out_path, std::ios::binary);
      out << result.json;
      if (!out) throw std::runtime_error("cannot write " + *options.out_path);
    }
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.json = detail::dump_report({{"schema", kReportSchema},
                                       {"command", options.command},
                                       {"pass", false},
                                       {"error", {{"kind", "IOError"}, {"message", e.what()}}}});
  }
  return result;
}

}  // namespace qsdlab
