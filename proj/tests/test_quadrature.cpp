#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gffforge/quadrature.hpp"

using namespace gffforge;
using std::numbers::pi;

TEST(GaussLegendre, SinglePoint) {
  const auto r = gauss_legendre(1, 0.0, 2.0);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NEAR(r.nodes[0], 1.0, 1e-15);
  EXPECT_NEAR(r.weights[0], 2.0, 1e-15);
}

TEST(GaussLegendre, TrigonometricIntegrals) {
  const auto r = gauss_legendre(64, 0.0, pi);
  EXPECT_NEAR(r.integrate([](double t) { return std::sin(t); }), 2.0, 1e-12);
  EXPECT_NEAR(r.integrate([](double t) { return std::sin(t) * std::sin(t); }), pi / 2, 1e-12);
}

TEST(GaussLegendre, ExactOnPolynomials) {
  for (int n : {2, 5, 11}) {
    const auto r = gauss_legendre(n, -1.0, 3.0);
    const int deg = 2 * n - 1;
    const double exact = (std::pow(3.0, deg + 1) - std::pow(-1.0, deg + 1)) / (deg + 1);
    EXPECT_NEAR(r.integrate([&](double x) { return std::pow(x, deg); }), exact,
                1e-11 * std::abs(exact));
  }
}

TEST(GaussLegendre, WeightsPositiveAndSumToLength) {
  for (int n : {1, 2, 7, 64, 256}) {
    const auto r = gauss_legendre(n, -0.5, 2.5);
    double sum = 0.0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 3.0, 1e-12);
    for (double x : r.nodes) {
      EXPECT_GT(x, -0.5);
      EXPECT_LT(x, 2.5);
    }
  }
}

TEST(GradedRule, ResolvesEndpointLogSingularity) {
  // int_0^1 log x dx = -1
  const auto r = graded_rule(0.0, 1.0);
  EXPECT_NEAR(r.integrate([](double x) { return std::log(x); }), -1.0, 1e-8);
}

TEST(GradedRule, ResolvesInteriorLogSingularity) {
  // int_0^2 log|x - 0.7| dx
  const double c = 0.7;
  const double exact = (2.0 - c) * std::log(2.0 - c) - (2.0 - c) + c * std::log(c) - c;
  const auto r = graded_rule_at(0.0, 2.0, c);
  EXPECT_NEAR(r.integrate([&](double x) { return std::log(std::abs(x - c)); }), exact, 1e-8);
}
