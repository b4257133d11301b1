#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "gffforge/averaging.hpp"
#include "gffforge/errors.hpp"
#include "gffforge/fields.hpp"
#include "gffforge/geometry.hpp"
#include "gffforge/lattice.hpp"
#include "gffforge/random.hpp"
#include "gffforge/stats.hpp"
#include "gffforge/test_function.hpp"

namespace gffforge {

inline constexpr double kSignificance = 0.01;
inline constexpr double kWickTolerance = 0.15;

/// Outcome of one check. When p_value is present the test passes iff
/// p_value >= significance; otherwise iff |statistic| <= threshold.
/// Composite tests report the largest gate ratio as the statistic against
/// threshold 1.
struct TestReport {
  std::string name;
  double statistic = 0.0;
  std::optional<double> p_value;
  double threshold = 0.0;
  bool passed = false;
  std::size_t n_samples = 0;
  std::string notes;
};

inline void to_json(nlohmann::json &j, const TestReport &r) {
  j = nlohmann::json{{"name", r.name},
                     {"statistic", r.statistic},
                     {"p_value", r.p_value ? nlohmann::json(*r.p_value) : nlohmann::json()},
                     {"threshold", r.threshold},
                     {"passed", r.passed},
                     {"n_samples", r.n_samples},
                     {"notes", r.notes}};
}

struct CharBMVerdict {
  // (i) continuity, (ii) moments, (iii) scaling, (iv) independent
  // increments, (v) harness, then normality of increments
  std::vector<TestReport> conditions;
  double sigma_hat = 0.0;
  bool consistent = false;
  std::vector<std::string> rejected;

  std::string overall() const { return consistent ? "consistent-with-BM" : "rejected"; }
};

inline void to_json(nlohmann::json &j, const CharBMVerdict &v) {
  j = nlohmann::json{{"conditions", v.conditions},
                     {"sigma_hat", v.sigma_hat},
                     {"overall", v.overall()},
                     {"rejected", v.rejected}};
}

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// Gate g passes when value <= limit; the report statistic is the worst
// value/limit ratio.
struct Gates {
  double worst = 0.0;
  std::string notes;
  void add(const std::string &label, double value, double limit) {
    const double ratio = limit > 0.0 ? value / limit : (value > 0.0 ? INFINITY : 0.0);
    worst = std::max(worst, ratio);
    if (!notes.empty())
      notes += "; ";
    notes += label + " " + fmt(value) + " (limit " + fmt(limit) + ")";
  }
  void note(const std::string &s) {
    if (!notes.empty())
      notes += "; ";
    notes += s;
  }
  TestReport report(std::string name, std::size_t n) const {
    TestReport r;
    r.name = std::move(name);
    r.statistic = worst;
    r.threshold = 1.0;
    r.passed = worst <= 1.0;
    r.n_samples = n;
    r.notes = notes;
    return r;
  }
};

inline TestReport p_report(std::string name, double stat, double p, double significance,
                           std::size_t n, std::string notes = {}) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = stat;
  r.p_value = p;
  r.threshold = significance;
  r.passed = p >= significance;
  r.n_samples = n;
  r.notes = std::move(notes);
  return r;
}

inline bool is_constant(const std::vector<double> &x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

inline std::vector<double> column(const ProcessPath &Y, double u) {
  if (Y.column(u) < 0)
    throw DomainError("grid does not contain " + fmt(u));
  return stats::to_vector(Y.at(u));
}

// Increments of the path, with Y(grid[0]) counted as an increment from 0
// when grid[0] > 0.
struct Increments {
  std::vector<std::vector<double>> values;
  std::vector<double> du;
  std::vector<std::string> labels;
};

inline Increments increments(const ProcessPath &Y) {
  Increments inc;
  const auto &g = Y.grid;
  if (g.front() > 0.0) {
    inc.values.push_back(stats::to_vector(Y.replicas.col(0)));
    inc.du.push_back(g.front());
    inc.labels.push_back("Y(" + fmt(g.front()) + ")");
  }
  for (std::size_t i = 1; i < g.size(); ++i) {
    inc.values.push_back(
        stats::to_vector(Y.replicas.col(static_cast<Eigen::Index>(i)) -
                         Y.replicas.col(static_cast<Eigen::Index>(i - 1))));
    inc.du.push_back(g[i] - g[i - 1]);
    inc.labels.push_back("dY(" + fmt(g[i - 1]) + "," + fmt(g[i]) + ")");
  }
  return inc;
}

struct SigmaEstimate {
  double sigma2 = 0.0;
  double se = 0.0; // standard error of sigma2
};

inline SigmaEstimate sigma_estimate(const ProcessPath &Y) {
  const auto inc = increments(Y);
  if (inc.values.empty())
    throw DomainError("sigma estimate: path has no increments");
  SigmaEstimate s;
  double var_acc = 0.0;
  for (std::size_t i = 0; i < inc.values.size(); ++i) {
    s.sigma2 += stats::variance(inc.values[i]) / inc.du[i];
    const double se = stats::variance_standard_error(inc.values[i]) / inc.du[i];
    var_acc += se * se;
  }
  const double m = static_cast<double>(inc.values.size());
  s.sigma2 /= m;
  s.se = std::sqrt(var_acc) / m;
  return s;
}

inline void require_replicas(const ProcessPath &Y, std::size_t n_min, const char *what) {
  Y.validate();
  if (Y.n_paths() < n_min)
    throw DomainError(std::string(what) + ": need at least " + std::to_string(n_min) +
                      " replicas");
}

} // namespace detail

/// sigma_hat = sqrt(mean over increments of Var(increment)/du).
inline double sigma_hat(const ProcessPath &Y) {
  return std::sqrt(std::max(0.0, detail::sigma_estimate(Y).sigma2));
}

// ---------------------------------------------------------------------------
// Generic distributional tests

inline TestReport test_normality(const std::vector<double> &samples,
                                 double significance = kSignificance) {
  if (samples.size() < 20)
    throw DomainError("test_normality: need n >= 20");
  const auto ad = stats::anderson_darling_normal(samples);
  return detail::p_report("normality", ad.statistic, ad.p_value, significance, samples.size(),
                          "Anderson-Darling A*^2 against the fitted normal");
}

/// Fourth-moment ratio m4 / (3 m2^2) of central moments. The reported
/// statistic is the ratio minus 1, compared with the tolerance.
inline TestReport test_wick_fourth(const std::vector<double> &samples,
                                   double tolerance = kWickTolerance) {
  if (samples.size() < 1000)
    throw DomainError("test_wick_fourth: need n >= 1000");
  const double m2 = stats::central_moment(samples, 2);
  if (!(m2 > 0.0))
    throw DomainError("test_wick_fourth: degenerate sample (zero variance)");
  const double ratio = stats::central_moment(samples, 4) / (3.0 * m2 * m2);
  TestReport r;
  r.name = "wick_fourth";
  r.statistic = ratio - 1.0;
  r.threshold = tolerance;
  r.passed = std::abs(ratio - 1.0) <= tolerance;
  r.n_samples = samples.size();
  r.notes = "m4/(3 m2^2) = " + detail::fmt(ratio);
  return r;
}

// ---------------------------------------------------------------------------
// Path conditions

/// Two-sample KS between Y(cu) on the first half of the replicas and
/// sqrt(c) Y(u) on the second half.
inline TestReport test_brownian_scaling(const ProcessPath &Y, double c, double u = 1.0,
                                        double significance = kSignificance) {
  detail::require_replicas(Y, 4, "test_brownian_scaling");
  if (!(c > 0.0))
    throw DomainError("test_brownian_scaling: c must be positive");
  const auto a = detail::column(Y, c * u);
  const auto b = detail::column(Y, u);
  const std::string label = "scaling(c=" + detail::fmt(c) + ")";
  if (c == 1.0)
    return detail::p_report(label, 0.0, 1.0, significance, Y.n_paths(), "c = 1 is trivial");
  if (detail::is_constant(a) && detail::is_constant(b) && a.front() == 0.0 && b.front() == 0.0)
    return detail::p_report(label, 0.0, 1.0, significance, Y.n_paths(), "degenerate zero path");
  const std::size_t h = a.size() / 2;
  std::vector<double> first(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(h));
  std::vector<double> second;
  for (std::size_t k = h; k < b.size(); ++k)
    second.push_back(std::sqrt(c) * b[k]);
  const auto ks = stats::ks_two_sample(first, second);
  return detail::p_report(label, ks.statistic, ks.p_value, significance, Y.n_paths(),
                          "two-sample KS of Y(cu) against sqrt(c) Y(u) on disjoint halves");
}

/// Pearson and distance-correlation checks on adjacent increment pairs.
/// Passes when every |rho| < 4/sqrt(n) and every dcor p-value clears the
/// Bonferroni-corrected significance.
inline TestReport test_independent_increments(const ProcessPath &Y,
                                              double significance = kSignificance,
                                              std::size_t dcor_max_n = 2000) {
  Y.validate();
  if (Y.n_paths() < 100)
    throw DomainError("test_independent_increments: need n >= 100");
  if (Y.grid.size() < 2)
    throw DomainError("test_independent_increments: need at least two grid points");
  const auto inc = detail::increments(Y);
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < inc.values.size(); ++i)
    if (!detail::is_constant(inc.values[i]))
      live.push_back(i);
  const double n = static_cast<double>(Y.n_paths());
  detail::Gates g;
  if (live.size() < 2) {
    g.note("fewer than two non-degenerate increments; nothing to test");
    return g.report("independent_increments", Y.n_paths());
  }
  const double per_test = significance / static_cast<double>(live.size() - 1);
  double max_rho = 0.0, min_p = 1.0, max_dcor = 0.0;
  for (std::size_t k = 1; k < live.size(); ++k) {
    const auto &x = inc.values[live[k - 1]], &y = inc.values[live[k]];
    max_rho = std::max(max_rho, std::abs(stats::pearson(x, y)));
    const auto d = stats::distance_correlation(x, y, dcor_max_n);
    min_p = std::min(min_p, d.p_value);
    max_dcor = std::max(max_dcor, d.dcor);
  }
  g.add("max |pearson|", max_rho, 4.0 / std::sqrt(n));
  g.add("min dcor p inverse", per_test / std::max(min_p, 1e-300), 1.0);
  g.note("max dcor " + detail::fmt(max_dcor) + ", min dcor p " + detail::fmt(min_p) +
         " over " + std::to_string(live.size() - 1) + " pairs (Bonferroni level " +
         detail::fmt(per_test) + ")");
  return g.report("independent_increments", Y.n_paths());
}

/// Bridge residual R = Y(u) - ((u-s)/(r-s)) Y(r) - ((r-u)/(r-s)) Y(s):
/// (a) independence of R from (Y(s), Y(r)); (b) Var(R) against
/// sigma^2 (u-s)(r-u)/(r-s) within 3 standard errors.
inline TestReport test_harness(const ProcessPath &Y, double s, double u, double r,
                               double significance = kSignificance,
                               std::size_t dcor_max_n = 2000) {
  detail::require_replicas(Y, 100, "test_harness");
  const std::string label =
      "harness(" + detail::fmt(s) + "," + detail::fmt(u) + "," + detail::fmt(r) + ")";
  const auto ys = detail::column(Y, s), yu = detail::column(Y, u), yr = detail::column(Y, r);
  detail::Gates g;
  if (u == s || u == r) {
    g.note("degenerate triple: residual is identically 0");
    return g.report(label, Y.n_paths());
  }
  if (!(s < u) || !(u < r))
    throw DomainError("test_harness: need s < u < r");
  const std::size_t n = ys.size();
  std::vector<double> R(n);
  for (std::size_t k = 0; k < n; ++k)
    R[k] = yu[k] - (u - s) / (r - s) * yr[k] - (r - u) / (r - s) * ys[k];
  const auto sig = detail::sigma_estimate(Y);
  const double kf = (u - s) * (r - u) / (r - s);
  if (detail::is_constant(R) && sig.sigma2 == 0.0) {
    g.note("degenerate zero path");
    return g.report(label, n);
  }
  const double lim = 4.0 / std::sqrt(static_cast<double>(n));
  if (!detail::is_constant(ys))
    g.add("|pearson(R,Y(s))|", std::abs(stats::pearson(R, ys)), lim);
  g.add("|pearson(R,Y(r))|", std::abs(stats::pearson(R, yr)), lim);
  Eigen::MatrixXd ends(n, 2);
  for (std::size_t k = 0; k < n; ++k)
    ends.row(static_cast<Eigen::Index>(k)) << ys[k], yr[k];
  const Eigen::Map<const Eigen::VectorXd> Rv(R.data(), static_cast<Eigen::Index>(n));
  const auto d = stats::distance_correlation(Eigen::MatrixXd(Rv), ends, dcor_max_n);
  g.add("dcor p inverse", significance / std::max(d.p_value, 1e-300), 1.0);
  const double vr = stats::variance(R);
  const double se = std::hypot(stats::variance_standard_error(R), kf * sig.se);
  g.add("|Var(R) - k sigma^2| / 3se", std::abs(vr - kf * sig.sigma2), 3.0 * se);
  g.note("dcor " + detail::fmt(d.dcor) + " p " + detail::fmt(d.p_value) + "; Var(R) " +
         detail::fmt(vr) + " vs " + detail::fmt(kf * sig.sigma2));
  return g.report(label, n);
}

/// Z = Y(1) - Y(2)/2: uncorrelated with Y(2), Var(Z) = sigma^2/2, and the
/// replica-wise identity Y(1)(Y(2) - Y(1)) = Y(2)^2/4 - Z^2.
inline TestReport test_moment_bootstrap(const ProcessPath &Y) {
  detail::require_replicas(Y, 4, "test_moment_bootstrap");
  const auto y1 = detail::column(Y, 1.0), y2 = detail::column(Y, 2.0);
  const std::size_t n = y1.size();
  std::vector<double> Z(n);
  double identity = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    Z[k] = y1[k] - y2[k] / 2.0;
    const double lhs = y1[k] * (y2[k] - y1[k]);
    const double rhs = y2[k] * y2[k] / 4.0 - Z[k] * Z[k];
    const double scale = 1.0 + y1[k] * y1[k] + y2[k] * y2[k];
    identity = std::max(identity, std::abs(lhs - rhs) / scale);
  }
  detail::Gates g;
  g.add("product identity residual", identity, 1e-12);
  const auto sig = detail::sigma_estimate(Y);
  if (detail::is_constant(Z) && detail::is_constant(y2) && sig.sigma2 == 0.0) {
    g.note("degenerate zero path");
    return g.report("moment_bootstrap", n);
  }
  g.add("|corr(Z,Y(2))|", std::abs(stats::pearson(Z, y2)), 4.0 / std::sqrt(double(n)));
  const double vz = stats::variance(Z);
  const double se = std::hypot(stats::variance_standard_error(Z), 0.5 * sig.se);
  g.add("|Var(Z) - sigma^2/2|", std::abs(vz - 0.5 * sig.sigma2), 3.0 * se);
  const double kurt = stats::central_moment(Z, 4) / std::pow(stats::central_moment(Z, 2), 2);
  if (kurt > 10.0)
    g.note("heavy tails (kurtosis " + detail::fmt(kurt) +
           "): variance estimates are unstable, finite variance is doubtful");
  return g.report("moment_bootstrap", n);
}

/// Mean-square continuity at u0: Var(Y(u0 + d) - Y(u0)) must not increase
/// (beyond 3 s.e.) as d decreases, and the smallest must not exceed the
/// largest. Pathwise continuity is a modification statement and is not
/// testable from finite-dimensional marginals.
inline TestReport test_stochastic_continuity(const ProcessPath &Y, double u0,
                                             std::vector<double> deltas) {
  detail::require_replicas(Y, 4, "test_stochastic_continuity");
  if (deltas.size() < 2)
    throw DomainError("test_stochastic_continuity: need at least two offsets");
  std::sort(deltas.begin(), deltas.end(), std::greater<>());
  const auto y0 = detail::column(Y, u0);
  std::vector<double> v, se;
  for (double d : deltas) {
    const auto y = detail::column(Y, u0 + d);
    std::vector<double> diff(y.size());
    for (std::size_t k = 0; k < y.size(); ++k)
      diff[k] = y[k] - y0[k];
    v.push_back(stats::variance(diff));
    se.push_back(stats::variance_standard_error(diff));
  }
  detail::Gates g;
  for (std::size_t k = 1; k < v.size(); ++k)
    g.add("Var at d=" + detail::fmt(deltas[k]) + " over previous", std::max(0.0, v[k] - v[k - 1]),
          3.0 * std::hypot(se[k], se[k - 1]));
  g.add("Var(smallest d) - Var(largest d)", std::max(0.0, v.back() - v.front()), 0.0);
  g.note("mean-square sense only");
  return g.report("stochastic_continuity", Y.n_paths());
}

namespace detail {

inline TestReport combine(std::string name, const std::vector<TestReport> &parts) {
  TestReport r;
  r.name = std::move(name);
  r.threshold = 0.0;
  std::size_t failed = 0;
  for (const auto &p : parts) {
    failed += !p.passed;
    r.n_samples = std::max(r.n_samples, p.n_samples);
    if (!r.notes.empty())
      r.notes += " | ";
    r.notes += p.name + (p.passed ? " pass" : " FAIL") + " [stat " + fmt(p.statistic) +
               (p.p_value ? ", p " + fmt(*p.p_value) : std::string()) + "]";
  }
  r.statistic = static_cast<double>(failed);
  r.passed = failed == 0;
  return r;
}

} // namespace detail

/// Runs the characterization battery: (i) mean-square continuity at 1,
/// (ii) moment bootstrap, (iii) scaling for c = 2, 4, (iv) independent
/// increments, (v) harness on the triples present among (1,2,4),
/// (0.5,1,2), (2,3,4), plus Anderson-Darling normality of the increments.
/// Multiple sub-tests within a condition share its significance level.
inline CharBMVerdict characterize_bm(const ProcessPath &Y, double significance = kSignificance) {
  Y.validate();
  if (Y.grid.size() < 4)
    throw DomainError("characterize_bm: need at least four grid points");
  for (double u : {1.0, 2.0, 4.0})
    if (Y.column(u) < 0)
      throw DomainError("characterize_bm: grid must contain 1, 2 and 4");
  CharBMVerdict v;
  v.sigma_hat = sigma_hat(Y);
  if (Y.replicas.cwiseAbs().maxCoeff() == 0.0) {
    for (const char *name : {"i_continuity", "ii_moments", "iii_scaling",
                             "iv_independent_increments", "v_harness", "normality"}) {
      TestReport r;
      r.name = name;
      r.passed = true;
      r.threshold = 0.0;
      r.n_samples = Y.n_paths();
      r.notes = "degenerate zero path (sigma = 0)";
      v.conditions.push_back(r);
    }
    v.consistent = true;
    return v;
  }

  // (i): the three smallest offsets above 1
  std::vector<double> deltas;
  for (double u : Y.grid)
    if (u > 1.0 + 1e-12)
      deltas.push_back(u - 1.0);
  deltas.resize(std::min<std::size_t>(deltas.size(), 3));
  v.conditions.push_back(
      detail::combine("i_continuity", {test_stochastic_continuity(Y, 1.0, deltas)}));
  v.conditions.push_back(detail::combine("ii_moments", {test_moment_bootstrap(Y)}));
  v.conditions.push_back(
      detail::combine("iii_scaling", {test_brownian_scaling(Y, 2.0, 1.0, significance / 2),
                                      test_brownian_scaling(Y, 4.0, 1.0, significance / 2)}));
  v.conditions.push_back(detail::combine("iv_independent_increments",
                                         {test_independent_increments(Y, significance)}));
  std::vector<std::array<double, 3>> triples;
  for (auto t : {std::array{1.0, 2.0, 4.0}, std::array{0.5, 1.0, 2.0}, std::array{2.0, 3.0, 4.0}})
    if (Y.column(t[0]) >= 0 && Y.column(t[1]) >= 0 && Y.column(t[2]) >= 0)
      triples.push_back(t);
  std::vector<TestReport> harness;
  for (const auto &t : triples)
    harness.push_back(test_harness(Y, t[0], t[1], t[2], significance / double(triples.size())));
  v.conditions.push_back(detail::combine("v_harness", harness));
  const auto inc = detail::increments(Y);
  std::vector<TestReport> normal;
  std::size_t live = 0;
  for (const auto &x : inc.values)
    live += !detail::is_constant(x);
  for (std::size_t i = 0; i < inc.values.size(); ++i)
    if (!detail::is_constant(inc.values[i])) {
      auto r = test_normality(inc.values[i], significance / double(live));
      r.name = "normality " + inc.labels[i];
      normal.push_back(r);
    }
  v.conditions.push_back(detail::combine("normality", normal));

  v.consistent = true;
  for (const auto &r : v.conditions)
    if (!r.passed) {
      v.consistent = false;
      v.rejected.push_back(r.name);
    }
  return v;
}

// ---------------------------------------------------------------------------
// Axiom test: conformal invariance

struct FieldBackend {
  Law law = Law::GFF;
  double alpha = 2.0;
  int lattice_size = 64; // the unit disk is an n x n box
  double calibration = kLatticeCalibration;
};

/// Lattice for f(unit disk) with spacing (2/n)|f'(0)|.
inline LatticeDomain image_lattice(const ConformalMap &f, int n) {
  if (f.kind() == ConformalMap::Kind::Rotation)
    return LatticeDomain::disk(n);
  const ConformalMap finv = f.inverse();
  const double a = 2.0 / n * std::abs(f.derivative({0.0, 0.0}));
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (int k = 0; k < 1024; ++k) {
    const Point w = f(std::polar(1.0, 2.0 * std::numbers::pi * k / 1024));
    if (!is_finite(w))
      throw DomainError("image_lattice: image of the disk is unbounded");
    lo_x = std::min(lo_x, w.real());
    hi_x = std::max(hi_x, w.real());
    lo_y = std::min(lo_y, w.imag());
    hi_y = std::max(hi_y, w.imag());
  }
  return LatticeDomain::from_predicate(
      a, static_cast<int>(std::floor(lo_x / a)) - 1, static_cast<int>(std::ceil(hi_x / a)) + 1,
      static_cast<int>(std::floor(lo_y / a)) - 1, static_cast<int>(std::ceil(hi_y / a)) + 1,
      [finv](Point z) {
        const Point p = finv(z);
        return is_finite(p) && std::abs(p) < 1.0 - 1e-12;
      },
      "image");
}

/// Two-sample KS between (h, phi) on the unit disk and (h', phi^f) on its
/// image under f, from independent batches.
inline TestReport test_conformal_invariance(const FieldBackend &law, const ConformalMap &f,
                                            const TestFunction &phi, std::size_t n,
                                            std::uint64_t seed,
                                            double significance = kSignificance) {
  const auto &s = phi.support();
  if (std::abs(s.center) + s.r_outer >= 1.0)
    throw DomainError("test_conformal_invariance: phi must be supported in the unit disk");
  const auto L = LatticeDomain::disk(law.lattice_size);
  const auto Lf = image_lattice(f, law.lattice_size);
  const auto phif = pullback_test_function(phi, f);
  for (const auto *lat : {&L, &Lf})
    if (lat->n_interior() < 16)
      throw ResolutionError("test_conformal_invariance: lattice too coarse");
  const auto a = FunctionalSampler(L, {pairing_weights(L, phi)}, law.calibration)
                     .sample(n, derive_seed(seed, 1), law.law, law.alpha);
  const auto b = FunctionalSampler(Lf, {pairing_weights(Lf, phif)}, law.calibration)
                     .sample(n, derive_seed(seed, 2), law.law, law.alpha);
  const auto ks = stats::ks_two_sample(stats::to_vector(a.col(0)), stats::to_vector(b.col(0)));
  std::string notes = "two-sample KS of (h,phi) on the disk against (h,phi^f) on f(disk)";
  if (f.kind() != ConformalMap::Kind::Rotation)
    notes += "; lattices matched by spacing, O(a) discretization bias remains";
  if (law.law == Law::Stable)
    notes += "; stable law: the linear construction can be conformally covariant, the "
             "discriminating axiom is Gaussianity of averages (see normality)";
  return detail::p_report("conformal_invariance", ks.statistic, ks.p_value, significance, n,
                          notes);
}

// ---------------------------------------------------------------------------
// Synthetic paths for null calibration and adversaries

namespace detail {

template <class Step>
ProcessPath synthetic_path(const std::vector<double> &grid, std::size_t n, std::uint64_t seed,
                           Step &&step) {
  require_increasing_positive(grid, true);
  ProcessPath p;
  p.grid = grid;
  p.replicas.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid.size()));
  parallel_for(n, [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    double y = 0.0, prev = 0.0, state = 0.0;
    std::size_t steps = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double du = grid[i] - prev;
      if (du > 0.0)
        y += step(rng, du, state, steps++);
      p.replicas(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = y;
      prev = grid[i];
    }
  });
  p.validate();
  return p;
}

} // namespace detail

/// sigma B sampled on the grid.
inline ProcessPath brownian_path(const std::vector<double> &grid, std::size_t n,
                                 std::uint64_t seed, double sigma = 1.0) {
  return detail::synthetic_path(grid, n, seed, [&](Rng &rng, double du, double &, std::size_t) {
    return sigma * std::sqrt(du) * rng.normal();
  });
}

/// Symmetric alpha-stable Levy process: increments scale as du^{1/alpha}.
inline ProcessPath stable_levy_path(const std::vector<double> &grid, std::size_t n,
                                    double alpha, std::uint64_t seed) {
  require_stable_index(alpha);
  return detail::synthetic_path(grid, n, seed, [&](Rng &rng, double du, double &, std::size_t) {
    return std::pow(du, 1.0 / alpha) * rng.stable(alpha);
  });
}

/// Compound Poisson process with standard normal jumps at the given rate;
/// its covariance rate * (u ^ s) matches BM with sigma^2 = rate.
inline ProcessPath compound_poisson_path(const std::vector<double> &grid, std::size_t n,
                                         double rate, std::uint64_t seed) {
  if (!(rate > 0.0))
    throw DomainError("compound_poisson_path: rate must be positive");
  return detail::synthetic_path(grid, n, seed, [&](Rng &rng, double du, double &, std::size_t) {
    double s = 0.0;
    for (double t = rng.exponential() / rate; t < du; t += rng.exponential() / rate)
      s += rng.normal();
    return s;
  });
}

/// Gaussian path whose normalized increments follow an AR(1) chain with
/// coefficient rho, so adjacent increments have correlation rho.
inline ProcessPath ar1_increment_path(const std::vector<double> &grid, std::size_t n, double rho,
                                      std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0))
    throw DomainError("ar1_increment_path: need |rho| < 1");
  return detail::synthetic_path(
      grid, n, seed, [&](Rng &rng, double du, double &e, std::size_t i) {
        e = (i == 0 ? 0.0 : rho * e) + (i == 0 ? 1.0 : std::sqrt(1.0 - rho * rho)) * rng.normal();
        return std::sqrt(du) * e;
      });
}

} // namespace gffforge
