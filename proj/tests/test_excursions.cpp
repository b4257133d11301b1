#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "gffforge/excursions.hpp"
#include "gffforge/quadrature.hpp"
#include "gffforge/stats.hpp"

using namespace gffforge;
using std::numbers::pi;

TEST(HittingDensity, ClosedForm) {
  EXPECT_NEAR(hitting_density(1.0, pi / 2), 2.0 / pi, 1e-15);
  EXPECT_NEAR(hitting_density(2.0, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(hitting_density(2.0, pi), 0.0, 1e-15);
  for (double r : {0.5, 1.0, 3.0}) {
    const auto rule = gauss_legendre(64, 0.0, pi);
    EXPECT_NEAR(rule.integrate([&](double t) { return hitting_density(r, t); }), 4.0 / (pi * r),
                1e-12);
    EXPECT_NEAR(total_excursion_mass(r), 4.0 / (pi * r), 1e-15);
  }
  EXPECT_THROW(hitting_density(0.0, 1.0), DomainError);
  EXPECT_THROW(hitting_density(1.0, 4.0), DomainError);
}

TEST(ArcMass, AdditiveAndConsistentWithDensity) {
  const double r = 1.3;
  EXPECT_NEAR(arc_mass(r, 0.2, 0.9) + arc_mass(r, 0.9, 2.5), arc_mass(r, 0.2, 2.5), 1e-14);
  const auto rule = gauss_legendre(32, 0.4, 1.7);
  EXPECT_NEAR(arc_mass(r, 0.4, 1.7), rule.integrate([&](double t) { return hitting_density(r, t); }),
              1e-13);
  EXPECT_THROW(arc_mass(r, 1.0, 0.5), DomainError);
}

TEST(ExcursionSampler, RejectsBadArguments) {
  EXPECT_THROW(sample_excursion_hits(1.0, 0.1, 10, 1), DomainError);
  EXPECT_THROW(sample_excursion_hits(0.0, 0.001, 10, 1), DomainError);
  EXPECT_THROW(sample_excursion_hits(1.0, 0.001, 0, 1), DomainError);
}

TEST(ExcursionSampler, MassAndAnglesAtSmallScale) {
  const double r = 1.0, eps = 0.005;
  const auto res = sample_excursion_hits(r, eps, 20000, 61);
  EXPECT_EQ(res.records.size() >= res.hit_records(), true);
  const double target = total_excursion_mass(r);
  EXPECT_NEAR(res.mass_estimate, target, 4.0 * res.standard_error + 0.02 * target);
  // weighted angle CDF against (1 - cos t)/2
  std::vector<std::pair<double, double>> hits;
  double total = 0.0;
  for (const auto &h : res.records)
    if (h.hit) {
      hits.push_back({h.angle, h.weight});
      total += h.weight;
    }
  std::sort(hits.begin(), hits.end());
  double acc = 0.0, dmax = 0.0;
  for (const auto &[t, w] : hits) {
    const double F = 0.5 * (1.0 - std::cos(t));
    dmax = std::max(dmax, std::abs(acc / total - F));
    acc += w;
    dmax = std::max(dmax, std::abs(acc / total - F));
  }
  EXPECT_LT(dmax, 0.05);
}

TEST(ExcursionSampler, DeterministicForFixedSeed) {
  const auto a = sample_excursion_hits(1.0, 0.01, 500, 62);
  const auto b = sample_excursion_hits(1.0, 0.01, 500, 62);
  EXPECT_EQ(a.mass_estimate, b.mass_estimate);
  std::ostringstream oa, ob;
  write_hits_csv(oa, a);
  write_hits_csv(ob, b);
  EXPECT_EQ(oa.str(), ob.str());
  EXPECT_EQ(oa.str().substr(0, 21), "hit,angle,eps,weight\n");
}

TEST(ExitAngles, StrongMarkovRestartFromSemicircle) {
  // Restarting fresh motions from points of radius 1 and stopping at radius 2
  // gives the harmonic measure of the half-annulus; Im z is harmonic in H and
  // vanishes on the real line, so E[Im z_exit] = Im z_start.
  std::vector<Point> starts(20000, std::polar(1.0, pi / 2));
  const auto ang = brownian_exit_angles(starts, 2.0, 1e-6, 63);
  double sum = 0.0;
  for (double t : ang)
    if (t >= 0.0)
      sum += 2.0 * std::sin(t);
  EXPECT_NEAR(sum / starts.size(), 1.0, 0.05);
}

TEST(ExitAngles, SymmetricStartsGiveSymmetricAngles) {
  std::vector<Point> starts(4000, Point{0.0, 0.5});
  const auto ang = brownian_exit_angles(starts, 1.0, 1e-6, 64);
  std::vector<double> hit, mirrored;
  for (double t : ang)
    if (t >= 0.0) {
      hit.push_back(t);
      mirrored.push_back(pi - t);
    }
  ASSERT_GT(hit.size(), 100u);
  EXPECT_LT(stats::ks_two_sample(hit, mirrored).statistic, 0.06);
}
