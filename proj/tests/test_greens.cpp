#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gffforge/greens.hpp"

using namespace gffforge;
using std::numbers::pi;

namespace {

Point random_disk_point(std::mt19937_64 &g, double rmax = 0.9) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  return std::polar(rmax * std::sqrt(U(g)), 2.0 * pi * U(g));
}

// int_D G(x, y) dy in polar coordinates around x; each ray runs to the
// unit circle.
double disk_green_mass(Point x) {
  const auto rho_rule = gauss_legendre(64, 0.0, 1.0);
  const auto th_rule = gauss_legendre(256, 0.0, 2.0 * pi);
  double total = 0.0;
  for (std::size_t a = 0; a < th_rule.size(); ++a) {
    const Point e = std::polar(1.0, th_rule.nodes[a]);
    // |x + rho e| = 1
    const double b = (x * std::conj(e)).real();
    const double len = -b + std::sqrt(b * b + 1.0 - std::norm(x));
    double ray = 0.0;
    for (std::size_t k = 0; k < rho_rule.size(); ++k) {
      const double rho = len * rho_rule.nodes[k];
      const Point y = x + rho * e;
      ray += rho_rule.weights[k] * len * rho *
             (std::log(std::abs(1.0 - x * std::conj(y))) - std::log(rho));
    }
    total += th_rule.weights[a] * ray;
  }
  return total;
}

// Energy of a radial profile around 0 against the disk kernel, whose angular
// average is -log max(r, rho). Ordering the pair removes the kink:
// E = 8 pi^2 int f(x) x (-log x) F(x) dx with F(x) = int_a^x f(y) y dy.
double radial_energy(const std::function<double(double)> &f, double a, double b) {
  const auto outer = gauss_legendre(400, a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < outer.size(); ++i) {
    const double x = outer.nodes[i];
    const double F = gauss_legendre(64, a, x).integrate([&](double y) { return f(y) * y; });
    total += outer.weights[i] * f(x) * x * -std::log(x) * F;
  }
  return 8.0 * pi * pi * total;
}

} // namespace

TEST(GreenDisk, KnownValues) {
  EXPECT_NEAR(green_disk({0.0, 0.0}, {0.5, 0.0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(green_disk({0.0, 0.0}, {0.0, 0.25}), std::log(4.0), 1e-15);
  EXPECT_THROW(green_disk({0.1, 0.0}, {0.1, 0.0}), SingularityError);
  EXPECT_THROW(green_disk({1.5, 0.0}, {0.1, 0.0}), DomainError);
}

TEST(GreenDisk, IntegratesToExitTimeProfile) {
  // the expected exit time (1 - |x|^2)/2 equals (1/pi) int G(x, y) dy
  for (Point x : {Point{0.0, 0.0}, Point{0.3, 0.2}, Point{-0.6, 0.1}})
    EXPECT_NEAR(disk_green_mass(x), pi * (1.0 - std::norm(x)) / 2.0, 1e-6);
}

TEST(GreenDisk, SymmetricPositiveAndVanishingAtBoundary) {
  std::mt19937_64 g(11);
  for (int k = 0; k < 200; ++k) {
    const Point x = random_disk_point(g), y = random_disk_point(g);
    EXPECT_NEAR(green_disk(x, y), green_disk(y, x), 1e-13);
    EXPECT_GT(green_disk(x, y), 0.0);
  }
  const Point x{0.2, -0.1};
  double prev = 1e300;
  for (double r : {0.9, 0.99, 0.999, 0.9999}) {
    const double v = green_disk(x, std::polar(r, 1.0));
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(GreenDisk, LogarithmicSingularity) {
  const Point x{0.1, 0.3};
  for (double d : {1e-3, 1e-6, 1e-9})
    EXPECT_NEAR(green_disk(x, x + Point{d, 0.0}) + std::log(d),
                std::log(1.0 - std::norm(x)), 2.0 * d + 1e-9);
}

TEST(GreenHalfPlane, KnownValueAndCayleyTransport) {
  EXPECT_NEAR(green_halfplane({0.0, 1.0}, {0.0, 2.0}), std::log(3.0), 1e-15);
  const auto C = cayley();
  std::mt19937_64 g(12);
  std::uniform_real_distribution<double> U(-3.0, 3.0), V(0.05, 3.0);
  for (int k = 0; k < 200; ++k) {
    const Point x{U(g), V(g)}, y{U(g), V(g)};
    EXPECT_NEAR(green_halfplane(x, y), green_disk(C(x), C(y)), 1e-10);
  }
}

TEST(Green, BallMatchesRescaledDisk) {
  const auto B = ModelDomain::ball({0.3, 0.2}, 0.4);
  const Point x{0.35, 0.25}, y{0.2, 0.1};
  EXPECT_NEAR(green(B, x, y), green_disk((x - B.center) / 0.4, (y - B.center) / 0.4), 1e-12);
}

TEST(Green, SemiDiskIsDominatedByHalfPlane) {
  const auto S = ModelDomain::semi_disk(1.0);
  std::mt19937_64 g(13);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Point x = std::polar(0.95 * std::sqrt(U(g)), pi * U(g));
    const Point y = std::polar(0.95 * std::sqrt(U(g)), pi * U(g));
    if (x.imag() < 1e-3 || y.imag() < 1e-3)
      continue;
    const double v = green(S, x, y);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, green_halfplane(x, y));
    EXPECT_NEAR(v, green(S, y, x), 1e-12);
  }
  EXPECT_LT(green(S, {0.0, 0.5}, std::polar(0.99999, 1.0)), 1e-3);
  EXPECT_THROW(green(ModelDomain::halfplane_annulus(1.0, 0.25), {0.0, 1.5}, {0.1, 1.5}),
               DomainError);
}

TEST(DiscreteGreen, SingleSite) {
  const auto L = LatticeDomain::single_site();
  EXPECT_NEAR(discrete_green(L, 0, 0), 0.25, 1e-15);
}

TEST(DiscreteGreen, SymmetricAndNonNegative) {
  const auto L = LatticeDomain::disk(16);
  for (int x = 0; x < L.n_interior(); x += 7)
    for (int y = 0; y < L.n_interior(); y += 5) {
      const double a = discrete_green(L, x, y), b = discrete_green(L, y, x);
      EXPECT_NEAR(a, b, 1e-12);
      EXPECT_GT(a, 0.0);
    }
}

TEST(DiscreteGreen, ApproachesContinuumKernel) {
  // 2 pi times the inverse lattice Laplacian tends to G away from the diagonal
  double prev_err = 1e300;
  for (int n : {32, 64, 128}) {
    const auto L = LatticeDomain::disk(n);
    const int x = L.nearest({0.0, 0.0}), y = L.nearest({0.5, 0.0});
    const double ratio =
        2.0 * pi * discrete_green(L, x, y) / green_disk(L.embedding(x), L.embedding(y));
    const double err = std::abs(ratio - 1.0);
    EXPECT_LT(err, 0.05) << "n = " << n;
    EXPECT_LE(err, prev_err + 1e-3);
    prev_err = err;
  }
}

TEST(HMinus1, RadialMollifierMatchesOneDimensionalOracle) {
  const double R = std::exp(-1.0);
  const auto f = radial_mollifier(0.02, R);
  const auto &s = f.support();
  auto profile = [&](double r) { return f(Point{r, 0.0}); };
  const double exact = radial_energy(profile, s.r_inner, s.r_outer);
  const double v = h_minus1_inner(f, f, ModelDomain::unit_disk());
  EXPECT_NEAR(v, exact, 2e-3 * exact);
  // the support is a thin annulus, so extra radial panels pay off
  const double fine = h_minus1_inner(f, f, ModelDomain::unit_disk(), {8, 8, 192});
  EXPECT_NEAR(fine, exact, 5e-4 * exact);
  EXPECT_LT(std::abs(fine - exact), std::abs(v - exact));
  EXPECT_NEAR(v, 1.0, 2e-2); // circle of radius e^{-1}
}

TEST(HMinus1, BilinearAndSymmetric) {
  const auto D = ModelDomain::unit_disk();
  const auto f = radial_bump({0.1, 0.0}, 0.2);
  const auto g = radial_bump({-0.3, 0.2}, 0.25);
  const auto k = annular_bump({0.0, -0.3}, 0.1, 0.3);
  const double fg = h_minus1_inner(f, g, D), gf = h_minus1_inner(g, f, D);
  EXPECT_NEAR(fg, gf, 1e-12);
  const double combined = h_minus1_inner(f, g.scaled(2.0) + k, D);
  EXPECT_NEAR(combined, 2.0 * fg + h_minus1_inner(f, k, D), 1e-4 * std::abs(combined));
  EXPECT_GT(h_minus1_inner(f, f, D), 0.0);
}

TEST(HMinus1, RejectsSupportOutsideDomain) {
  EXPECT_THROW(h_minus1_inner(radial_bump({0.9, 0.0}, 0.2), radial_bump({0.0, 0.0}, 0.2),
                              ModelDomain::unit_disk()),
               DomainError);
}

TEST(Covariance, NestedCirclesGiveMinimum) {
  ObservableFamily fam;
  fam.add(CircleMeasure{{0.0, 0.0}, std::exp(-2.0)}, "c2");
  fam.add(CircleMeasure{{0.0, 0.0}, std::exp(-1.0)}, "c1");
  const auto C = covariance_of_observables(fam, ModelDomain::unit_disk());
  EXPECT_NEAR(C(0, 0), 2.0, 1e-6);
  EXPECT_NEAR(C(0, 1), 1.0, 1e-6);
  EXPECT_NEAR(C(1, 1), 1.0, 1e-6);
  EXPECT_EQ(C.labels()[0], "c2");
}

TEST(Covariance, SineMeasuresAreLinearInMinimum) {
  ObservableFamily fam;
  fam.domain = ModelDomain::upper_half_plane();
  fam.add(SineMeasure{1.0}, "u1");
  fam.add(SineMeasure{2.0}, "u2");
  const auto C = covariance_of_observables(fam, fam.domain);

  // off-diagonal by a plain tensor rule: the two arcs do not meet
  const auto t = gauss_legendre(200, 0.0, pi);
  double off = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j) {
      const Point x = std::polar(1.0, t.nodes[i]);
      const Point y = std::polar(1.0 / std::sqrt(2.0), t.nodes[j]);
      off += t.weights[i] * t.weights[j] * std::sin(t.nodes[i]) * std::sqrt(2.0) *
             std::sin(t.nodes[j]) * std::log(std::abs(x - std::conj(y)) / std::abs(x - y));
    }
  EXPECT_NEAR(C(0, 1), off, 1e-8 * off);
  EXPECT_NEAR(C(0, 0) / off, 1.0, 1e-4);
  EXPECT_NEAR(C(1, 1) / off, 2.0, 2e-4);
}

TEST(Covariance, RandomFamiliesArePositiveSemiDefinite) {
  std::mt19937_64 g(14);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  CovarianceOptions opt;
  opt.inner = {2, 6, 64};
  for (int trial = 0; trial < 2; ++trial) {
    ObservableFamily fam;
    for (int k = 0; k < 3; ++k) {
      const Point c = std::polar(0.5 * U(g), 2.0 * pi * U(g));
      fam.add(radial_bump(c, 0.1 + 0.3 * U(g)), "");
    }
    fam.add(CircleMeasure{std::polar(0.3 * U(g), 2.0 * pi * U(g)), 0.2}, "");
    const auto C = covariance_of_observables(fam, fam.domain, opt);
    EXPECT_GT(C.min_eigenvalue(), -1e-8 * C.entries().trace());
    EXPECT_NO_THROW(C.check());
    EXPECT_EQ(C.labels()[0], "obs0");
  }
}

TEST(Covariance, CircleTouchingBoundaryPairsToZero) {
  ObservableFamily fam;
  fam.add(CircleMeasure{{0.5, 0.0}, 0.5}, "edge");
  const auto C = covariance_of_observables(fam, ModelDomain::unit_disk());
  EXPECT_EQ(C(0, 0), 0.0);
}
