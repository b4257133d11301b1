#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "gffforge/errors.hpp"

namespace gffforge {

/// n-point Gauss-Legendre rule mapped to (a, b).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double a = 0.0;
  double b = 0.0;

  std::size_t size() const { return nodes.size(); }

  template <class F> double integrate(F &&f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

namespace detail {

// Nodes/weights on [-1, 1] by Newton iteration on P_n, seeded with the
// Tricomi approximation.
inline std::pair<std::vector<double>, std::vector<double>>
legendre_reference(int n) {
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15)
        break;
    }
    // recompute derivative at the converged root
    double p1 = 1.0, p2 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
    }
    pp = n * (z * p1 - p2) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  if (n % 2 == 1)
    x[n / 2] = 0.0;
  return {std::move(x), std::move(w)};
}

inline const std::pair<std::vector<double>, std::vector<double>> &
cached_reference(int n) {
  static std::mutex mu;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, legendre_reference(n)).first;
  return it->second;
}

} // namespace detail

inline QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1)
    throw DomainError("gauss_legendre: n must be >= 1");
  if (!(a < b))
    throw DomainError("gauss_legendre: require a < b");
  const auto &[x, w] = detail::cached_reference(n);
  QuadratureRule rule;
  rule.a = a;
  rule.b = b;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * x[i];
    rule.weights[i] = half * w[i];
  }
  return rule;
}

/// Default resolution for angular integrals.
inline constexpr int kThetaNodes = 256;

/// Composite rule on (a, b) whose panels shrink geometrically toward `a`
/// (ratio 1/8 per panel), for integrands with an endpoint log singularity.
inline QuadratureRule graded_rule(double a, double b, int panels = 12,
                                  int order = 16) {
  if (!(a < b))
    throw DomainError("graded_rule: require a < b");
  QuadratureRule out;
  out.a = a;
  out.b = b;
  std::vector<double> cuts{b};
  double len = b - a;
  for (int k = 0; k < panels; ++k) {
    len /= 8.0;
    cuts.push_back(a + len);
  }
  cuts.push_back(a);
  for (std::size_t k = cuts.size() - 1; k > 0; --k) {
    const auto r = gauss_legendre(order, cuts[k], cuts[k - 1]);
    out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
    out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
  }
  return out;
}

/// Composite rule with panels graded toward an interior point `c` from both
/// sides. Used for kernels with a log singularity at c.
inline QuadratureRule graded_rule_at(double a, double b, double c,
                                     int panels = 12, int order = 16) {
  QuadratureRule out;
  out.a = a;
  out.b = b;
  auto append = [&](const QuadratureRule &r) {
    out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
    out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
  };
  if (c > a) {
    auto left = graded_rule(a, c, panels, order);
    // graded toward c: reflect
    for (auto &x : left.nodes)
      x = a + c - x;
    append(left);
  }
  if (c < b)
    append(graded_rule(c, b, panels, order));
  return out;
}

} // namespace gffforge
