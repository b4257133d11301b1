#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "gffforge/errors.hpp"
#include "gffforge/random.hpp"

namespace gffforge::stats {

inline double mean(const std::vector<double> &x) {
  if (x.empty())
    return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double variance(const std::vector<double> &x) {
  if (x.size() < 2)
    return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x)
    s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// k-th central moment (biased, 1/n normalization).
inline double central_moment(const std::vector<double> &x, int k) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x)
    s += std::pow(v - m, k);
  return s / static_cast<double>(x.size());
}

/// Standard error of the sample variance, (m4 - m2^2)/n under any law with
/// a finite fourth moment.
inline double variance_standard_error(const std::vector<double> &x) {
  const double m2 = central_moment(x, 2), m4 = central_moment(x, 4);
  return std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(x.size()));
}

inline std::vector<double> to_vector(const Eigen::VectorXd &v) {
  return {v.data(), v.data() + v.size()};
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// Survival function of the Kolmogorov distribution, P(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0)
    return 1.0;
  if (lambda < 1.0) {
    // theta-function form, fast for small lambda
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (int k = 1; k <= 20; ++k)
      s += std::exp(-(2 * k - 1) * (2 * k - 1) * pi2 / (8.0 * lambda * lambda));
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17)
      break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct TestStatistic {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov distance to a continuous CDF.
inline TestStatistic ks_one_sample(std::vector<double> x,
                                   const std::function<double(double)> &cdf) {
  if (x.empty())
    throw DomainError("ks: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    d = std::max({d, F - i / n, (i + 1) / n - F});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

/// Two-sample Kolmogorov-Smirnov distance.
inline TestStatistic ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw DomainError("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v)
      ++i;
    while (j < b.size() && b[j] == v)
      ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

/// Anderson-Darling normality test with estimated mean and variance; the
/// statistic is the small-sample corrected A*^2, the p-value follows the
/// D'Agostino-Stephens approximation.
inline TestStatistic anderson_darling_normal(std::vector<double> x) {
  const std::size_t n = x.size();
  if (n < 8)
    throw DomainError("anderson-darling: need at least 8 samples");
  const double m = mean(x), s = std::sqrt(variance(x));
  if (!(s > 0.0))
    throw DomainError("anderson-darling: degenerate sample (zero variance)");
  std::sort(x.begin(), x.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = std::max(normal_cdf((x[i] - m) / s), 1e-300);
    const double hi = std::max(1.0 - normal_cdf((x[n - 1 - i] - m) / s), 1e-300);
    acc += (2.0 * i + 1.0) * (std::log(lo) + std::log(hi));
  }
  const double nn = static_cast<double>(n);
  const double a2 = -nn - acc / nn;
  const double a = a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));
  double p;
  if (a >= 10.0) // the fitted quadratic turns upward far in the tail
    p = 0.0;
  else if (a >= 0.6)
    p = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
  else if (a >= 0.34)
    p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  else if (a >= 0.2)
    p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  else
    p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  return {a, std::clamp(p, 0.0, 1.0)};
}

inline double pearson(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DomainError("pearson: need two equal-length samples");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DomainError("pearson: degenerate sample (zero variance)");
  return sxy / std::sqrt(sxx * syy);
}

struct DistanceCorrelation {
  double dcor = 0.0;      // sample distance correlation in [0, 1]
  double statistic = 0.0; // n V_n^2 / S_2
  double p_value = 1.0;
  std::size_t n = 0;
};

namespace detail {

// Double-centered distance matrix of the rows of X.
inline Eigen::MatrixXd centered_distances(const Eigen::MatrixXd &X, double &mean_dist) {
  const Eigen::Index n = X.rows(), p = X.cols();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index c = 0; c < p; ++c)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double xj = X(j, c);
      for (Eigen::Index i = 0; i < n; ++i)
        D(i, j) += (X(i, c) - xj) * (X(i, c) - xj);
    }
  D = D.cwiseSqrt();
  mean_dist = D.mean();
  const Eigen::VectorXd rm = D.rowwise().mean();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      D(i, j) += mean_dist - rm[i] - rm[j];
  return D;
}

} // namespace detail

/// Distance correlation between the rows of X and Y on the first
/// min(n, max_n) observations. The p-value uses the conservative asymptotic
/// bound P(n V^2 / S_2 > chi2_1 quantile) <= alpha; with permutations > 0 a
/// permutation p-value is returned instead.
inline DistanceCorrelation distance_correlation(const Eigen::MatrixXd &X,
                                                const Eigen::MatrixXd &Y,
                                                std::size_t max_n = 1000,
                                                int permutations = 0,
                                                std::uint64_t seed = 0) {
  if (X.rows() != Y.rows() || X.rows() < 4)
    throw DomainError("distance correlation: need equal sample sizes >= 4");
  const Eigen::Index n = std::min<Eigen::Index>(X.rows(), static_cast<Eigen::Index>(max_n));
  double ma = 0.0, mb = 0.0;
  const Eigen::MatrixXd A = detail::centered_distances(X.topRows(n), ma);
  const Eigen::MatrixXd B = detail::centered_distances(Y.topRows(n), mb);
  const double v2 = (A.array() * B.array()).mean();
  const double vx = (A.array() * A.array()).mean(), vy = (B.array() * B.array()).mean();
  DistanceCorrelation out;
  out.n = static_cast<std::size_t>(n);
  if (vx <= 0.0 || vy <= 0.0)
    return out;
  out.dcor = std::sqrt(std::max(0.0, v2) / std::sqrt(vx * vy));
  out.statistic = n * v2 / (ma * mb);
  if (permutations <= 0) {
    out.p_value = std::erfc(std::sqrt(std::max(0.0, out.statistic) / 2.0));
    return out;
  }
  Rng rng(seed);
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int exceed = 0;
  for (int p = 0; p < permutations; ++p) {
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng() % static_cast<std::uint64_t>(i + 1)]);
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        s += A(i, j) * B(perm[i], perm[j]);
    exceed += s / (double(n) * n) >= v2;
  }
  out.p_value = (1.0 + exceed) / (1.0 + permutations);
  return out;
}

inline DistanceCorrelation distance_correlation(const std::vector<double> &x,
                                                const std::vector<double> &y,
                                                std::size_t max_n = 1000,
                                                int permutations = 0,
                                                std::uint64_t seed = 0) {
  const Eigen::Map<const Eigen::VectorXd> X(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::VectorXd> Y(y.data(), static_cast<Eigen::Index>(y.size()));
  return distance_correlation(Eigen::MatrixXd(X), Eigen::MatrixXd(Y), max_n, permutations,
                              seed);
}

} // namespace gffforge::stats
