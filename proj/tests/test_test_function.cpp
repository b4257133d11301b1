#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gffforge/quadrature.hpp"
#include "gffforge/test_function.hpp"

using namespace gffforge;
using std::numbers::pi;

namespace {

// Polar integral around the support centre, panelled in radius.
double integrate(const TestFunction &f) {
  const auto &s = f.support();
  double total = 0.0;
  const int panels = 16;
  for (int p = 0; p < panels; ++p) {
    const double r0 = s.r_inner + (s.r_outer - s.r_inner) * p / panels;
    const double r1 = s.r_inner + (s.r_outer - s.r_inner) * (p + 1) / panels;
    const auto rr = gauss_legendre(24, r0, r1);
    for (std::size_t i = 0; i < rr.size(); ++i)
      for (int k = 0; k < 256; ++k) {
        const double t = 2.0 * pi * (k + 0.5) / 256;
        total += rr.weights[i] * rr.nodes[i] * (2.0 * pi / 256) *
                 f(s.center + std::polar(rr.nodes[i], t));
      }
  }
  return total;
}

} // namespace

TEST(TestFunction, ZeroOutsideSupport) {
  const auto f = radial_bump({0.2, 0.1}, 0.3);
  EXPECT_EQ(f({0.6, 0.1}), 0.0);
  EXPECT_GT(f({0.2, 0.1}), 0.0);
  EXPECT_EQ(TestFunction::zero()({0.0, 0.0}), 0.0);
}

TEST(TestFunction, LinearCombinations) {
  const auto a = radial_bump({0.0, 0.0}, 0.2);
  const auto b = radial_bump({0.1, 0.0}, 0.2);
  const auto c = a.scaled(2.0) + b;
  for (Point z : {Point{0.0, 0.0}, Point{0.05, 0.03}, Point{0.2, 0.1}})
    EXPECT_NEAR(c(z), 2.0 * a(z) + b(z), 1e-14);
}

TEST(RadialBump, MassAndPeakNormalizations) {
  EXPECT_NEAR(integrate(radial_bump({0.1, -0.2}, 0.3)), 1.0, 1e-8);
  EXPECT_NEAR(integrate(radial_bump({0.0, 0.0}, 0.5, 2.5)), 2.5, 1e-8);
  const auto peak = radial_bump({0.0, 0.0}, 0.5, -1.0);
  EXPECT_NEAR(peak({0.0, 0.0}), 1.0, 1e-15);
  EXPECT_THROW(radial_bump({0.0, 0.0}, 0.0), DomainError);
}

TEST(AnnularBump, SupportAndNormalizations) {
  const auto f = annular_bump({0.0, 0.0}, 0.2, 0.4);
  EXPECT_NEAR(integrate(f), 1.0, 1e-6);
  EXPECT_EQ(f({0.1, 0.0}), 0.0);
  EXPECT_EQ(f({0.45, 0.0}), 0.0);
  const auto g = annular_bump({0.0, 0.0}, 0.2, 0.4, -1.0);
  EXPECT_NEAR(g({0.3, 0.0}), 1.0, 1e-14);
  EXPECT_NEAR(g({0.0, -0.3}), 1.0, 1e-14);
  EXPECT_THROW(annular_bump({0.0, 0.0}, 0.4, 0.2), DomainError);
}

TEST(Mollifier, UnitMassForBothShapes) {
  for (int shape : {0, 1})
    for (double delta : {0.05, 0.2, 1.0}) {
      const auto m = mollifier(delta, shape);
      const auto r = gauss_legendre(256, 0.0, delta);
      EXPECT_NEAR(r.integrate([&](double x) { return m.eta_delta(x); }), 1.0, 1e-9);
      EXPECT_EQ(m.eta_delta(-0.01), 0.0);
      EXPECT_EQ(m.eta_delta(delta * 1.01), 0.0);
    }
}

TEST(Mollifier, AngularCutoff) {
  const double delta = 0.1;
  const auto m = mollifier(delta);
  EXPECT_EQ(m.chi(pi / 2), 1.0);
  EXPECT_EQ(m.chi(delta / 4), 0.0);
  EXPECT_EQ(m.chi(pi - delta / 4), 0.0);
  EXPECT_EQ(m.chi(delta), 1.0);
  double prev = 0.0;
  for (int k = 0; k <= 50; ++k) {
    const double t = delta / 2 + k * (delta / 2) / 50;
    const double v = m.chi(t);
    EXPECT_GE(v, prev - 1e-15);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
  EXPECT_NEAR(m.chi(0.7), m.chi(pi - 0.7), 1e-15);
  EXPECT_THROW(mollifier(0.0), DomainError);
  EXPECT_THROW(mollifier(2.0), DomainError);
  EXPECT_THROW(mollifier(0.1, 7), DomainError);
}

TEST(RadialMollifier, UnitMassNearCircle) {
  const auto f = radial_mollifier(0.1, 0.5, {0.1, 0.0});
  EXPECT_NEAR(integrate(f), 1.0, 1e-6);
  EXPECT_EQ(f({0.1, 0.0}), 0.0);
  EXPECT_GT(f({0.1 + 0.5 * 0.93, 0.0}), 0.0);
}
