#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "gffforge/averaging.hpp"
#include "gffforge/errors.hpp"
#include "gffforge/excursions.hpp"
#include "gffforge/fields.hpp"
#include "gffforge/greens.hpp"
#include "gffforge/lattice.hpp"
#include "gffforge/stats.hpp"
#include "gffforge/test_function.hpp"
#include "gffforge/verify.hpp"

namespace gffforge {

inline constexpr const char *kVersion = "1.0.0";

/// Flat experiment configuration. Fields not used by an experiment are
/// ignored by it; `tolerances` overrides named thresholds.
struct ExperimentConfig {
  std::string experiment;
  int lattice_size = 64;
  std::size_t n_samples = 10000;
  std::uint64_t seed = 1;
  double alpha = 1.5;
  std::vector<double> u_grid;
  std::vector<double> t_grid;
  std::string output_dir = "out";
  std::map<std::string, double> tolerances;
  int runs = 1;
  double r = 1.0;
  double eps = 1e-3;
  double u = 4.0;
  int n_angles = 64;

  double tol(const std::string &key) const { return tolerances.at(key); }
};

struct ExperimentOutcome {
  std::string experiment;
  std::vector<TestReport> reports;
  std::vector<CharBMVerdict> verdicts;
  nlohmann::json data = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> files; // name, contents

  bool passed() const {
    return std::all_of(reports.begin(), reports.end(), [](const auto &r) { return r.passed; });
  }
  nlohmann::json report_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto &r : reports)
      j.push_back(r);
    for (const auto &v : verdicts)
      j.push_back(v);
    return j;
  }
};

namespace detail {

inline TestReport tolerance_report(std::string name, double statistic, double threshold,
                                   std::size_t n, std::string notes = {}) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = statistic;
  r.threshold = threshold;
  r.passed = std::abs(statistic) <= threshold;
  r.n_samples = n;
  r.notes = std::move(notes);
  return r;
}

inline std::string path_csv(const ProcessPath &p) {
  std::ostringstream os;
  p.write_csv(os);
  return os.str();
}

// Increments of a path whose grid starts at 0 with a zero column, or any
// path: the same definition as the battery's.
inline std::vector<TestReport> increment_normality(const ProcessPath &Y, double significance) {
  const auto inc = increments(Y);
  std::size_t live = 0;
  for (const auto &x : inc.values)
    live += !is_constant(x);
  std::vector<TestReport> out;
  for (std::size_t i = 0; i < inc.values.size(); ++i)
    if (!is_constant(inc.values[i])) {
      auto r = test_normality(inc.values[i], significance / double(live));
      r.name = "normality " + inc.labels[i];
      out.push_back(r);
    }
  return out;
}

inline double hit_angle_cdf(double t) {
  return t <= 0.0 ? 0.0 : t >= std::numbers::pi ? 1.0 : 0.5 * (1.0 - std::cos(t));
}

// Independent reference for E[Y(u) Y(s)]: a plain tensor Gauss-Legendre
// double integral of G_H against p_u x p_s (u != s keeps it smooth).
inline double sine_covariance_quadrature(double u, double s, int nodes = 400) {
  const auto rule = gauss_legendre(nodes, 0.0, std::numbers::pi);
  const double ru = 1.0 / std::sqrt(u), rs = 1.0 / std::sqrt(s);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i)
    for (std::size_t j = 0; j < rule.size(); ++j) {
      const Point x = std::polar(ru, rule.nodes[i]), y = std::polar(rs, rule.nodes[j]);
      acc += rule.weights[i] * rule.weights[j] * std::sqrt(u) * std::sin(rule.nodes[i]) *
             std::sqrt(s) * std::sin(rule.nodes[j]) *
             (std::log(std::abs(x - std::conj(y))) - std::log(std::abs(x - y)));
    }
  return acc;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Experiments

inline ExperimentOutcome run_excursion_mass(const ExperimentConfig &c) {
  ExperimentOutcome out;
  const auto res = sample_excursion_hits(c.r, c.eps, c.n_samples, c.seed);
  const double target = total_excursion_mass(c.r);
  const double rel = res.mass_estimate / target - 1.0;
  out.reports.push_back(detail::tolerance_report(
      "excursion_mass", rel, c.tol("mass_rel"), c.n_samples,
      "mass " + detail::fmt(res.mass_estimate) + " +- " + detail::fmt(res.standard_error) +
          " against 4/(pi r) = " + detail::fmt(target)));
  std::vector<double> angles;
  for (const auto &h : res.records)
    if (h.hit)
      angles.push_back(h.angle);
  if (angles.empty())
    throw NumericalError("excursion-mass: no hits");
  const auto ks = stats::ks_one_sample(angles, detail::hit_angle_cdf);
  out.reports.push_back(detail::tolerance_report(
      "hit_angle_ks", ks.statistic, c.tol("angle_ks"), angles.size(),
      "KS distance of hit angles to density sin(t)/2, p " + detail::fmt(ks.p_value)));
  out.data = {{"mass_estimate", res.mass_estimate},
              {"standard_error", res.standard_error},
              {"target", target},
              {"hits", angles.size()},
              {"weighted_hits", res.weighted_hits}};
  std::ostringstream os;
  write_hits_csv(os, res);
  out.files.emplace_back("hits.csv", os.str());
  return out;
}

inline ExperimentOutcome run_harmonic_sines(const ExperimentConfig &c) {
  ExperimentOutcome out;
  double worst_const = 0.0, worst_lin = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  for (double r : {1.0, 2.0, 4.0, 8.0}) {
    const double u = 1.0 / (r * r);
    const double a = sine_pair([](Point z) { return z.imag(); }, u);
    const double b = sine_pair([](Point z) { return z.imag() / std::norm(z); }, u);
    worst_const = std::max(worst_const, std::abs(a - std::numbers::pi / 2));
    worst_lin = std::max(worst_lin, std::abs(b - std::numbers::pi / 2 * u));
    rows.push_back({{"r", r}, {"im", a}, {"im_over_abs2", b}});
  }
  out.reports.push_back(detail::tolerance_report("sine_pair_im_constant", worst_const,
                                                 c.tol("exact"), 4,
                                                 "max |(Im z, p_u) - pi/2| over r = 1,2,4,8"));
  out.reports.push_back(detail::tolerance_report(
      "sine_pair_im_over_abs2_linear", worst_lin, c.tol("exact"), 4,
      "max |(Im z/|z|^2, p_u) - (pi/2) u| over r = 1,2,4,8"));
  out.data = {{"values", rows}};
  return out;
}

inline ExperimentOutcome run_sine_covariance(const ExperimentConfig &c) {
  ExperimentOutcome out;
  const auto &g = c.u_grid;
  ObservableFamily fam;
  fam.domain = ModelDomain::upper_half_plane();
  for (double u : g)
    fam.add(SineMeasure{u}, "Y(" + detail::fmt(u) + ")");
  const auto cov = covariance_of_observables(fam, fam.domain);
  const Eigen::MatrixXd Y = sample_gff_observables(cov, c.n_samples, c.seed);
  const std::size_t m = g.size();
  const double n = static_cast<double>(c.n_samples);
  // empirical covariance and its standard errors
  Eigen::MatrixXd C(m, m), se(m, m);
  const Eigen::MatrixXd Yc = Y.rowwise() - Y.colwise().mean();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const Eigen::ArrayXd prod = Yc.col(i).array() * Yc.col(j).array();
      C(i, j) = prod.sum() / (n - 1.0);
      se(i, j) = std::sqrt(((prod - prod.mean()).square().sum() / (n - 1.0)) / n);
    }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double k = std::min(g[i], g[j]);
      num += C(i, j) * k;
      den += k * k;
    }
  const double kappa_hat = num / den;
  // model constant from the exact covariance, and the independent oracle
  double kappa_model = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    kappa_model += cov(i, i) / g[i];
  kappa_model /= static_cast<double>(m);
  double kappa_oracle = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      kappa_oracle += detail::sine_covariance_quadrature(g[i], g[j]) / std::min(g[i], g[j]);
      ++pairs;
    }
  if (pairs == 0)
    throw ConfigError("sine-covariance: u_grid needs at least two points");
  kappa_oracle /= pairs;
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      worst = std::max(worst, std::abs(C(i, j) - kappa_hat * std::min(g[i], g[j])) /
                                  (c.tol("se_multiple") * se(i, j)));
  out.reports.push_back(detail::tolerance_report(
      "covariance_proportional_to_min", worst, 1.0, c.n_samples,
      "max |C - kappa_hat (u ^ s)| / (3 s.e.), kappa_hat " + detail::fmt(kappa_hat)));
  out.reports.push_back(detail::tolerance_report(
      "kappa_model_vs_quadrature", kappa_model / kappa_oracle - 1.0, c.tol("kappa_rel"), 0,
      "exact-backend constant " + detail::fmt(kappa_model) + " against tensor quadrature " +
          detail::fmt(kappa_oracle) + " (pi^2/2 = " +
          detail::fmt(std::numbers::pi * std::numbers::pi / 2) + ")"));
  out.data = {{"kappa_hat", kappa_hat},
              {"kappa_model", kappa_model},
              {"kappa_quadrature", kappa_oracle},
              {"kappa_hat_rel_to_quadrature", kappa_hat / kappa_oracle - 1.0}};
  std::ostringstream os;
  cov.write_csv(os);
  out.files.emplace_back("covariance.csv", os.str());
  return out;
}

inline ExperimentOutcome run_char_bm_gff_sine(const ExperimentConfig &c) {
  ExperimentOutcome out;
  ObservableFamily fam;
  fam.domain = ModelDomain::upper_half_plane();
  for (double u : c.u_grid)
    fam.add(SineMeasure{u}, "Y(" + detail::fmt(u) + ")");
  const auto cov = covariance_of_observables(fam, fam.domain);
  std::vector<int> fails(6, 0);
  std::vector<std::string> names;
  for (int k = 0; k < c.runs; ++k) {
    ProcessPath Y;
    Y.grid = c.u_grid;
    Y.replicas = sample_gff_observables(cov, c.n_samples, derive_seed(c.seed, k));
    const auto v = characterize_bm(Y);
    if (names.empty())
      for (const auto &r : v.conditions)
        names.push_back(r.name);
    for (std::size_t i = 0; i < v.conditions.size(); ++i)
      fails[i] += !v.conditions[i].passed;
    if (k == 0) {
      out.verdicts.push_back(v);
      out.files.emplace_back("path.csv", detail::path_csv(Y));
      const double sigma_model = std::sqrt(cov(0, 0) / c.u_grid[0]);
      out.reports.push_back(detail::tolerance_report(
          "sigma_hat_vs_quadrature", v.sigma_hat / sigma_model - 1.0, c.tol("sigma_rel"),
          c.n_samples,
          "sigma_hat " + detail::fmt(v.sigma_hat) + " against " + detail::fmt(sigma_model)));
      TestReport overall;
      overall.name = "verdict_consistent";
      overall.statistic = v.consistent ? 0.0 : 1.0;
      overall.threshold = 0.0;
      overall.passed = v.consistent;
      overall.n_samples = c.n_samples;
      overall.notes = v.overall();
      out.reports.push_back(overall);
    }
  }
  const int allowed = c.runs - static_cast<int>(std::ceil(c.tol("pass_fraction") * c.runs));
  for (std::size_t i = 0; i < names.size(); ++i)
    out.reports.push_back(detail::tolerance_report(
        "null_pass_rate " + names[i], fails[i], allowed, c.n_samples,
        std::to_string(c.runs - fails[i]) + "/" + std::to_string(c.runs) + " runs passed"));
  return out;
}

inline ExperimentOutcome run_char_bm_stable(const ExperimentConfig &c) {
  ExperimentOutcome out;
  LatticePathOptions opt;
  opt.disk_size = c.lattice_size;
  opt.law = Law::Stable;
  opt.alpha = c.alpha;
  const auto Y = circle_average_path({0.0, 0.0}, c.t_grid, c.n_samples, c.seed,
                                     Backend::Lattice, opt);
  const auto v = characterize_bm(Y);
  out.verdicts.push_back(v);
  const bool normality =
      std::find(v.rejected.begin(), v.rejected.end(), "normality") != v.rejected.end();
  TestReport r;
  r.name = "stable_rejected";
  r.statistic = (!v.consistent && normality) ? 0.0 : 1.0;
  r.threshold = 0.0;
  r.passed = !v.consistent && normality;
  r.n_samples = c.n_samples;
  r.notes = "expected: rejected with normality listed; got " + v.overall();
  for (const auto &x : v.rejected)
    r.notes += " " + x;
  out.reports.push_back(r);
  out.files.emplace_back("path.csv", detail::path_csv(Y));
  return out;
}

inline ExperimentOutcome run_circle_average_bm(const ExperimentConfig &c) {
  ExperimentOutcome out;
  const auto Y = circle_average_path({0.0, 0.0}, c.t_grid, c.n_samples, c.seed);
  const double s2 = sigma_hat(Y) * sigma_hat(Y);
  out.reports.push_back(detail::tolerance_report(
      "exact_variance_rate", s2 - 1.0, c.tol("rate_rel"), c.n_samples,
      "mean Var(increment)/dt = " + detail::fmt(s2)));
  out.reports.push_back(
      detail::combine("exact_normality", detail::increment_normality(Y, kSignificance)));
  out.reports.push_back(test_independent_increments(Y));
  out.files.emplace_back("path_exact.csv", detail::path_csv(Y));

  std::vector<double> tl;
  for (double t : c.t_grid)
    if (t <= c.tol("lattice_t_max"))
      tl.push_back(t);
  LatticePathOptions opt;
  opt.disk_size = c.lattice_size;
  const auto Z = circle_average_path({0.0, 0.0}, tl, c.n_samples, derive_seed(c.seed, 1),
                                     Backend::Lattice, opt);
  const double z2 = sigma_hat(Z) * sigma_hat(Z);
  out.reports.push_back(detail::tolerance_report(
      "lattice_variance_rate", z2 / s2 - 1.0, c.tol("lattice_rel"), c.n_samples,
      "lattice rate " + detail::fmt(z2) + " on disk" + std::to_string(c.lattice_size) +
          " against exact " + detail::fmt(s2)));
  out.files.emplace_back("path_lattice.csv", detail::path_csv(Z));
  out.data = {{"exact_rate", s2}, {"lattice_rate", z2}};
  return out;
}

inline ExperimentOutcome run_rotational_averaging(const ExperimentConfig &c) {
  ExperimentOutcome out;
  const auto L = LatticeDomain::disk(c.lattice_size);
  const auto w = rotational_average_weights(L, c.u, c.n_angles);
  const FunctionalSampler fs(L, {w.lhs, w.rhs});
  const Eigen::MatrixXd X = fs.sample(c.n_samples, c.seed);
  const auto lhs = stats::to_vector(X.col(0)), rhs = stats::to_vector(X.col(1));
  const double sd = std::sqrt(stats::variance(rhs));
  auto mean_gap = [&](double factor) {
    double s = 0.0;
    for (std::size_t k = 0; k < lhs.size(); ++k)
      s += std::abs(lhs[k] - factor * rhs[k]);
    return s / static_cast<double>(lhs.size()) / sd;
  };
  out.reports.push_back(detail::tolerance_report(
      "rotational_identity", mean_gap(1.0), c.tol("sd_fraction"), c.n_samples,
      "mean |lhs - rhs| / sd(rhs); exact variances lhs " + detail::fmt(fs.gaussian_variance(0)) +
          ", rhs " + detail::fmt(fs.gaussian_variance(1))));
  const double var_fix = fs.gaussian_variance(0) - 4.0 * fs.gaussian_covariance(0, 1) +
                         4.0 * fs.gaussian_variance(1);
  out.data = {{"mean_gap_over_sd", mean_gap(1.0)},
              {"mean_gap_factor_two_over_sd", mean_gap(2.0)},
              {"var_lhs", fs.gaussian_variance(0)},
              {"var_rhs", fs.gaussian_variance(1)},
              {"var_lhs_minus_2rhs", var_fix}};
  return out;
}

inline ExperimentOutcome run_stable_counterexample(const ExperimentConfig &c) {
  ExperimentOutcome out;
  LatticePathOptions opt;
  opt.disk_size = c.lattice_size;
  opt.law = Law::Stable;
  opt.alpha = c.alpha;
  const auto L = LatticeDomain::disk(c.lattice_size);
  std::vector<SiteWeights> w;
  for (double t : c.t_grid)
    w.push_back(t == 0.0 ? SiteWeights::Zero(L.n_sites())
                         : circle_average_weights(L, {0.0, 0.0}, std::exp(-t)));
  const FunctionalSampler fs(L, w);
  int rejected = 0;
  for (int k = 0; k < c.runs; ++k) {
    ProcessPath Y;
    Y.grid = c.t_grid;
    Y.replicas = fs.sample(c.n_samples, derive_seed(c.seed, k), Law::Stable, c.alpha);
    rejected += !detail::combine("normality", detail::increment_normality(Y, kSignificance)).passed;
  }
  const int needed = static_cast<int>(std::ceil(c.tol("reject_fraction") * c.runs));
  TestReport r = detail::tolerance_report(
      "stable_normality_rejection_rate", std::max(0, needed - rejected), 0.0, c.n_samples,
      std::to_string(rejected) + "/" + std::to_string(c.runs) +
          " batches rejected (needed " + std::to_string(needed) + ")");
  out.reports.push_back(r);
  const auto levy = stable_levy_path({0.5, 1.0, 2.0, 4.0},
                                     static_cast<std::size_t>(c.tol("levy_n")), c.alpha,
                                     derive_seed(c.seed, 999));
  auto sc = test_brownian_scaling(levy, 4.0);
  TestReport s = sc;
  s.name = "levy_scaling_rejected";
  s.passed = !sc.passed;
  s.p_value.reset();
  s.statistic = sc.passed ? 1.0 : 0.0;
  s.threshold = 0.0;
  s.notes = "scaling test on the stable Levy adversary: " +
            std::string(sc.passed ? "passed (not rejected)" : "rejected") + ", KS p " +
            detail::fmt(*sc.p_value);
  out.reports.push_back(s);
  out.data = {{"batches_rejected", rejected}, {"runs", c.runs}};
  return out;
}

inline ExperimentOutcome run_wick_fourth(const ExperimentConfig &c) {
  ExperimentOutcome out;
  const auto L = LatticeDomain::disk(c.lattice_size);
  const auto phi = radial_bump({0.0, 0.0}, 0.5);
  const FunctionalSampler fs(L, {pairing_weights(L, phi)});
  const auto x = stats::to_vector(fs.sample(c.n_samples, c.seed).col(0));
  auto r = test_wick_fourth(x, c.tol("wick"));
  out.reports.push_back(r);
  out.data = {{"ratio", r.statistic + 1.0}, {"exact_variance", fs.gaussian_variance(0)}};
  return out;
}

inline ExperimentOutcome run_zero_boundary(const ExperimentConfig &c) {
  ExperimentOutcome out;
  const auto L = LatticeDomain::disk(c.lattice_size);
  std::vector<SiteWeights> w;
  const int levels = 5;
  for (int n = 1; n <= levels; ++n)
    w.push_back(pairing_weights(
        L, annular_bump({0.0, 0.0}, 1.0 - std::ldexp(1.0, -n), 1.0 - std::ldexp(1.0, -n - 1),
                        -1.0)));
  const FunctionalSampler fs(L, w);
  const Eigen::MatrixXd X = fs.sample(c.n_samples, c.seed);
  std::vector<double> e_abs, e_exact;
  for (int n = 0; n < levels; ++n) {
    e_abs.push_back(X.col(n).cwiseAbs().mean());
    e_exact.push_back(std::sqrt(2.0 / std::numbers::pi * fs.gaussian_variance(n)));
  }
  double increase = 0.0;
  for (int n = 1; n < levels; ++n)
    increase = std::max(increase, e_abs[n] - e_abs[n - 1]);
  std::string list;
  for (int n = 0; n < levels; ++n)
    list += (n ? ", " : "") + detail::fmt(e_abs[n]);
  out.reports.push_back(detail::tolerance_report(
      "zero_boundary_monotone", increase, 0.0, c.n_samples,
      "E|(h,phi_n)| = " + list + "; largest increase reported"));
  out.reports.push_back(detail::tolerance_report(
      "zero_boundary_final_ratio", e_abs.back() / e_abs.front(), c.tol("final_ratio"),
      c.n_samples, "last over first"));
  out.data = {{"mean_abs", e_abs}, {"mean_abs_exact", e_exact}};
  return out;
}

inline ExperimentOutcome run_domain_markov(const ExperimentConfig &c) {
  ExperimentOutcome out;
  const auto L = LatticeDomain::disk(c.lattice_size);
  const Point cu{0.1, 0.0};
  const auto V = L.select([](Point z) { return std::abs(z) < 0.6; });
  const auto U = L.select([&](Point z) { return std::abs(z - cu) < 0.3; });
  require_connected(L, V);
  require_connected(L, U);
  const DirichletSolver SV(L, V), SU(L, U);
  const int x = L.nearest(cu);
  std::vector<double> resid(c.n_samples), harm(c.n_samples);
  std::vector<double> nest_err(c.n_samples);
  parallel_for(c.n_samples, [&](std::size_t k) {
    const auto h = sample_dgff(L, derive_seed(c.seed, k));
    const auto dv = markov_decompose(h.values, SV);
    const auto du = markov_decompose(h.values, SU);
    const auto duv = markov_decompose(dv.residual, SU);
    double err = 0.0, scale = 0.0;
    for (std::size_t q = 0; q < h.values.size(); ++q) {
      err = std::max(err, std::abs(duv.residual[q] - du.residual[q]));
      scale = std::max(scale, std::abs(h.values[q]));
    }
    nest_err[k] = err / std::max(scale, 1.0);
    resid[k] = du.residual[x];
    harm[k] = du.harmonic_part[x];
  });
  const double nest = *std::max_element(nest_err.begin(), nest_err.end());
  out.reports.push_back(detail::tolerance_report(
      "markov_nesting_identity", nest, c.tol("exact"), c.n_samples,
      "max |resid_U(resid_V h) - resid_U(h)| relative to max |h|"));
  const double rho = stats::pearson(resid, harm);
  out.reports.push_back(detail::tolerance_report(
      "markov_residual_harmonic_corr", rho, 4.0 / std::sqrt(double(c.n_samples)), c.n_samples,
      "Pearson correlation at the site nearest the centre of U"));
  Eigen::VectorXd e = Eigen::VectorXd::Zero(SU.size());
  e[SU.local(x)] = 1.0;
  const double g = kLatticeCalibration * kLatticeCalibration * SU.solve(e)[SU.local(x)];
  const double v = stats::variance(resid);
  const double se = stats::variance_standard_error(resid);
  out.reports.push_back(detail::tolerance_report(
      "markov_residual_variance", (v - g) / se, c.tol("se_multiple"), c.n_samples,
      "residual variance " + detail::fmt(v) + " against calibrated discrete Green of U " +
          detail::fmt(g) + ", in standard errors"));
  return out;
}

/// Re-derives the lattice constant: exact lattice variances of circle
/// averages about 0 (unit calibration) against the continuum value t.
inline ExperimentOutcome run_calibrate(const ExperimentConfig &c) {
  ExperimentOutcome out;
  const auto L = LatticeDomain::disk(c.lattice_size);
  std::vector<double> ts;
  std::vector<SiteWeights> w;
  for (double t : c.t_grid)
    if (t > 0.0) {
      ts.push_back(t);
      w.push_back(circle_average_weights(L, {0.0, 0.0}, std::exp(-t)));
    }
  if (ts.size() < 2)
    throw ConfigError("calibrate: t_grid needs two positive values");
  const FunctionalSampler fs(L, w, 1.0);
  // least-squares slope of lattice variance against t, with intercept
  double mt = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    mv += fs.gaussian_variance(i);
  }
  mt /= ts.size();
  mv /= ts.size();
  double sxy = 0.0, sxx = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double v = fs.gaussian_variance(i);
    sxy += (ts[i] - mt) * (v - mv);
    sxx += (ts[i] - mt) * (ts[i] - mt);
    rows.push_back({{"t", ts[i]}, {"lattice_variance", v}});
  }
  const double constant = 1.0 / std::sqrt(sxy / sxx);
  // Green's function ratio at a macroscopic pair of points
  const int x = L.nearest({0.0, 0.0}), y = L.nearest({0.5, 0.0});
  const double ratio = 2.0 * std::numbers::pi * discrete_green(L, x, y) /
                       green_disk(L.embedding(x), L.embedding(y));
  out.reports.push_back(detail::tolerance_report(
      "lattice_constant", constant / kLatticeCalibration - 1.0, c.tol("constant_rel"), 0,
      "fitted " + detail::fmt(constant) + " against sqrt(2 pi) = " +
          detail::fmt(kLatticeCalibration) + "; 2 pi L^{-1}(0,1/2)/G(0,1/2) = " +
          detail::fmt(ratio)));
  out.data = {{"constant", constant}, {"green_ratio", ratio}, {"variances", rows}};
  return out;
}

inline ExperimentOutcome run_conformal_invariance(const ExperimentConfig &c) {
  ExperimentOutcome out;
  FieldBackend b;
  b.lattice_size = c.lattice_size;
  const auto phi = radial_bump({0.3, 0.1}, 0.3);
  auto r1 = test_conformal_invariance(b, ConformalMap::rotation(std::numbers::pi / 3), phi,
                                      c.n_samples, c.seed);
  r1.name = "conformal_invariance_rotation";
  out.reports.push_back(r1);
  auto r2 = test_conformal_invariance(b, ConformalMap::scaling(2.0), phi, c.n_samples,
                                      derive_seed(c.seed, 7));
  r2.name = "conformal_invariance_scaling";
  out.reports.push_back(r2);
  return out;
}

// ---------------------------------------------------------------------------
// Registry and configuration

struct ExperimentSpec {
  std::function<ExperimentOutcome(const ExperimentConfig &)> run;
  nlohmann::json defaults;
};

inline const std::map<std::string, ExperimentSpec> &experiments() {
  using nlohmann::json;
  static const std::map<std::string, ExperimentSpec> reg = {
      {"excursion-mass",
       {run_excursion_mass,
        json{{"r", 1.0}, {"eps", 1e-3}, {"n_samples", 200000}, {"seed", 20240601},
             {"tolerances", {{"mass_rel", 0.03}, {"angle_ks", 0.02}}}}}},
      {"harmonic-sines", {run_harmonic_sines, json{{"tolerances", {{"exact", 1e-10}}}}}},
      {"sine-covariance",
       {run_sine_covariance,
        json{{"u_grid", {1.0, 2.0, 4.0}}, {"n_samples", 10000}, {"seed", 3},
             {"tolerances", {{"se_multiple", 3.0}, {"kappa_rel", 0.02}}}}}},
      {"char-bm-gff-sine",
       {run_char_bm_gff_sine,
        json{{"u_grid", {0.5, 1.0, 1.025, 1.05, 1.1, 2.0, 3.0, 4.0}},
             {"n_samples", 10000},
             {"seed", 4},
             {"runs", 50},
             {"tolerances", {{"pass_fraction", 0.94}, {"sigma_rel", 0.05}}}}}},
      {"char-bm-stable",
       {run_char_bm_stable,
        json{{"t_grid", {0.5, 1.0, 1.025, 1.05, 1.1, 2.0, 3.0, 4.0}},
             {"n_samples", 2000},
             {"lattice_size", 256},
             {"alpha", 1.5},
             {"seed", 5}}}},
      {"circle-average-bm",
       {run_circle_average_bm,
        json{{"t_grid", {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}},
             {"n_samples", 10000},
             {"lattice_size", 128},
             {"seed", 6},
             {"tolerances",
              {{"rate_rel", 0.03}, {"lattice_rel", 0.10}, {"lattice_t_max", 2.0}}}}}},
      {"rotational-averaging",
       {run_rotational_averaging,
        json{{"u", 4.0}, {"n_angles", 64}, {"n_samples", 200}, {"lattice_size", 128},
             {"seed", 7}, {"tolerances", {{"sd_fraction", 0.05}}}}}},
      {"stable-counterexample",
       {run_stable_counterexample,
        json{{"t_grid", {0.0, 0.5, 1.0, 1.5}},
             {"n_samples", 1000},
             {"lattice_size", 64},
             {"alpha", 1.5},
             {"runs", 50},
             {"seed", 8},
             {"tolerances", {{"reject_fraction", 0.95}, {"levy_n", 10000}}}}}},
      {"wick-fourth",
       {run_wick_fourth, json{{"n_samples", 10000}, {"lattice_size", 64}, {"seed", 9},
                              {"tolerances", {{"wick", 0.15}}}}}},
      {"zero-boundary",
       {run_zero_boundary, json{{"n_samples", 2000}, {"lattice_size", 256}, {"seed", 10},
                                {"tolerances", {{"final_ratio", 0.10}}}}}},
      {"domain-markov",
       {run_domain_markov, json{{"n_samples", 5000}, {"lattice_size", 64}, {"seed", 11},
                                {"tolerances", {{"exact", 1e-10}, {"se_multiple", 3.0}}}}}},
      {"calibrate",
       {run_calibrate, json{{"lattice_size", 128}, {"t_grid", {0.5, 1.0, 1.5, 2.0}},
                            {"tolerances", {{"constant_rel", 0.05}}}}}},
      {"conformal-invariance",
       {run_conformal_invariance,
        json{{"n_samples", 2000}, {"lattice_size", 64}, {"seed", 12}}}},
  };
  return reg;
}

namespace detail {

inline const std::vector<std::string> &known_keys() {
  static const std::vector<std::string> k = {
      "experiment", "lattice_size", "n_samples", "seed", "alpha", "u_grid", "t_grid",
      "output_dir", "tolerances", "runs", "r", "eps", "u", "n_angles"};
  return k;
}

inline double positive(const nlohmann::json &j, const std::string &key) {
  if (!j.is_number())
    throw ConfigError("config: '" + key + "' must be a number");
  const double v = j.get<double>();
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError("config: '" + key + "' must be positive");
  return v;
}

inline double positive_integer(const nlohmann::json &j, const std::string &key) {
  if (!j.is_number_integer())
    throw ConfigError("config: '" + key + "' must be an integer");
  return positive(j, key);
}

inline std::vector<double> grid_of(const nlohmann::json &j, const std::string &key) {
  if (!j.is_array() || j.empty())
    throw ConfigError("config: '" + key + "' must be a non-empty list of numbers");
  std::vector<double> g;
  for (const auto &x : j) {
    if (!x.is_number())
      throw ConfigError("config: '" + key + "' must contain numbers only");
    g.push_back(x.get<double>());
    if (g.back() < 0.0 || (g.size() > 1 && !(g.back() > g[g.size() - 2])))
      throw ConfigError("config: '" + key + "' must be non-negative and increasing");
  }
  return g;
}

} // namespace detail

/// Merges `user` over the experiment's defaults and validates the result.
inline ExperimentConfig make_config(const nlohmann::json &user) {
  if (!user.is_object())
    throw ConfigError("config: expected a JSON object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const auto &k = detail::known_keys();
    if (std::find(k.begin(), k.end(), it.key()) == k.end())
      throw ConfigError("config: unknown key '" + it.key() + "'");
  }
  if (!user.contains("experiment") || !user["experiment"].is_string())
    throw ConfigError("config: 'experiment' (string) is required");
  const std::string name = user["experiment"].get<std::string>();
  const auto &reg = experiments();
  const auto spec = reg.find(name);
  if (spec == reg.end())
    throw ConfigError("config: unknown experiment '" + name + "'");
  nlohmann::json j = spec->second.defaults;
  const nlohmann::json default_tol =
      j.contains("tolerances") ? j["tolerances"] : nlohmann::json::object();
  for (auto it = user.begin(); it != user.end(); ++it)
    if (it.key() != "tolerances")
      j[it.key()] = it.value();
  ExperimentConfig c;
  c.experiment = name;
  if (j.contains("lattice_size"))
    c.lattice_size = static_cast<int>(detail::positive_integer(j["lattice_size"], "lattice_size"));
  if (j.contains("n_samples"))
    c.n_samples = static_cast<std::size_t>(detail::positive_integer(j["n_samples"], "n_samples"));
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
      throw ConfigError("config: 'seed' must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("alpha"))
    c.alpha = detail::positive(j["alpha"], "alpha");
  if (j.contains("u_grid"))
    c.u_grid = detail::grid_of(j["u_grid"], "u_grid");
  if (j.contains("t_grid"))
    c.t_grid = detail::grid_of(j["t_grid"], "t_grid");
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string())
      throw ConfigError("config: 'output_dir' must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("runs"))
    c.runs = static_cast<int>(detail::positive_integer(j["runs"], "runs"));
  if (j.contains("r"))
    c.r = detail::positive(j["r"], "r");
  if (j.contains("eps"))
    c.eps = detail::positive(j["eps"], "eps");
  if (j.contains("u"))
    c.u = detail::positive(j["u"], "u");
  if (j.contains("n_angles"))
    c.n_angles = static_cast<int>(detail::positive_integer(j["n_angles"], "n_angles"));
  for (auto it = default_tol.begin(); it != default_tol.end(); ++it)
    c.tolerances[it.key()] = it.value().get<double>();
  if (user.contains("tolerances")) {
    if (!user["tolerances"].is_object())
      throw ConfigError("config: 'tolerances' must be an object");
    for (auto it = user["tolerances"].begin(); it != user["tolerances"].end(); ++it) {
      if (!c.tolerances.count(it.key()))
        throw ConfigError("config: unknown tolerance '" + it.key() + "' for " + name);
      c.tolerances[it.key()] = detail::positive(it.value(), "tolerances." + it.key());
    }
  }
  return c;
}

/// The effective configuration, restricted to the keys the experiment reads.
/// The result is accepted by make_config and reproduces `c`.
inline nlohmann::json config_json(const ExperimentConfig &c) {
  const nlohmann::json all{{"lattice_size", c.lattice_size}, {"n_samples", c.n_samples},
                           {"alpha", c.alpha},               {"u_grid", c.u_grid},
                           {"t_grid", c.t_grid},             {"runs", c.runs},
                           {"r", c.r},                       {"eps", c.eps},
                           {"u", c.u},                       {"n_angles", c.n_angles}};
  nlohmann::json j{{"experiment", c.experiment}, {"seed", c.seed},
                   {"output_dir", c.output_dir}, {"tolerances", c.tolerances}};
  for (const auto &[key, value] : experiments().at(c.experiment).defaults.items())
    if (all.contains(key))
      j[key] = all[key];
  return j;
}

inline ExperimentOutcome run_experiment(const ExperimentConfig &c) {
  auto out = experiments().at(c.experiment).run(c);
  out.experiment = c.experiment;
  return out;
}

} // namespace gffforge
