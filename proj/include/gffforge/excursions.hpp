#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <vector>

#include "gffforge/errors.hpp"
#include "gffforge/geometry.hpp"
#include "gffforge/parallel.hpp"
#include "gffforge/random.hpp"

namespace gffforge {

/// Density in theta of the excursion mass leaving r D through r e^{i theta}.
inline double hitting_density(double r, double theta) {
  if (!(r > 0.0))
    throw DomainError("hitting_density: r must be positive");
  if (!(theta >= 0.0) || !(theta <= std::numbers::pi))
    throw DomainError("hitting_density: theta must lie in [0, pi]");
  return 2.0 / (std::numbers::pi * r) * std::sin(theta);
}

/// Excursion mass leaving through the arc {r e^{it} : a <= t <= b}.
inline double arc_mass(double r, double a, double b) {
  if (!(r > 0.0))
    throw DomainError("arc_mass: r must be positive");
  if (!(0.0 <= a) || !(a <= b) || !(b <= std::numbers::pi))
    throw DomainError("arc_mass: need 0 <= a <= b <= pi");
  return 2.0 / (std::numbers::pi * r) * (std::cos(a) - std::cos(b));
}

/// Total mass of excursions reaching the radius-r semicircle.
inline double total_excursion_mass(double r) { return arc_mass(r, 0.0, std::numbers::pi); }

struct ExcursionHitRecord {
  bool hit = false;
  double angle = 0.0; // meaningful iff hit
  double eps = 0.0;
  double weight = 1.0;
  Point point{};          // hit location on the semicircle
  bool outer_hit = false; // continuation reached outer_radius (when requested)
  double outer_angle = 0.0;
};

struct ExcursionOptions {
  double q = 0.01;            // dt = q * (distance to the absorbing set)^2
  double floor_factor = 1e-3; // absorption below eps * floor_factor
  bool splitting = true;      // unbiased dyadic splitting with roulette
  double outer_radius = 0.0;  // > r: continue hit paths to this radius
};

struct ExcursionResult {
  std::vector<ExcursionHitRecord> records;
  double mass_estimate = 0.0;
  double standard_error = 0.0; // of mass_estimate, from per-path totals
  double weighted_hits = 0.0;
  std::size_t n = 0;
  std::size_t hit_records() const {
    std::size_t c = 0;
    for (const auto &r : records)
      c += r.hit;
    return c;
  }
};

namespace detail {

enum class Exit { Outer, Floor };

// Runs Brownian motion in the half-disk of radius R until it leaves through
// the semicircle (Outer) or drops below the height floor (Floor). `upward`
// is called whenever |z| crosses its current threshold; it may mutate z's
// bookkeeping and return false to stop.
template <class Hook>
Exit run_half_disk(Point &z, double R, double floor, double q, Rng &rng, Hook &&hook) {
  for (;;) {
    const double m = std::abs(z);
    if (m >= R || R - m < floor)
      return Exit::Outer;
    if (z.imag() < floor)
      return Exit::Floor;
    if (!hook(z))
      return Exit::Floor;
    const double d = std::min(z.imag(), R - m);
    const double s = std::sqrt(q) * d;
    z += Point{s * rng.normal(), s * rng.normal()};
  }
}

inline double clamp_angle(Point z) {
  double t = std::arg(z);
  if (t < 0.0)
    t = t < -0.5 * std::numbers::pi ? std::numbers::pi : 0.0;
  return t;
}

} // namespace detail

/// Planar Brownian paths from i*eps, stopped on the radius-r semicircle or on
/// absorption at the real line. With splitting, a particle reaching the
/// dyadic radius r 2^{-k} is duplicated (weight halves); one falling back a
/// level is killed with probability 1/2 (weight doubles). mass_estimate is
/// the weighted hit count divided by n * eps.
inline ExcursionResult sample_excursion_hits(double r, double eps, std::size_t n,
                                             std::uint64_t seed,
                                             const ExcursionOptions &opt = {}) {
  if (!(r > 0.0))
    throw DomainError("excursions: r must be positive");
  if (!(eps > 0.0) || !(eps < r / 10.0))
    throw DomainError("excursions: need 0 < eps < r/10");
  if (n < 1)
    throw DomainError("excursions: need n >= 1");
  const double floor = eps * opt.floor_factor;
  // thresholds tau_j = r 2^{-(K+1-j)}, j = 0..K, with tau_1 >= 2 eps
  int K = 0;
  if (opt.splitting)
    K = std::max(0, static_cast<int>(std::floor(std::log2(r / (2.0 * eps)))));
  std::vector<double> tau(K + 2);
  for (int j = 0; j <= K; ++j)
    tau[j] = r * std::ldexp(1.0, -(K + 1 - j));
  tau[K + 1] = r;

  std::vector<std::vector<ExcursionHitRecord>> per_root(n);
  parallel_for(n, [&](std::size_t root) {
    Rng rng(derive_seed(seed, root));
    struct Particle {
      Point z;
      int level;
    };
    std::vector<Particle> stack{{Point{0.0, eps}, 0}};
    auto &out = per_root[root];
    while (!stack.empty()) {
      Particle p = stack.back();
      stack.pop_back();
      bool killed = false;
      const auto exit = detail::run_half_disk(p.z, r, floor, opt.q, rng, [&](Point z) {
        if (!opt.splitting)
          return true;
        const double m = std::abs(z);
        while (p.level < K && m >= tau[p.level + 1]) {
          ++p.level;
          stack.push_back({z, p.level}); // the clone
        }
        if (p.level >= 1 && m < tau[p.level - 1]) {
          if (rng.uniform() < 0.5) {
            killed = true;
            return false;
          }
          --p.level;
        }
        return true;
      });
      if (killed)
        continue;
      ExcursionHitRecord rec;
      rec.eps = eps;
      rec.weight = std::ldexp(1.0, -p.level);
      if (exit == detail::Exit::Outer) {
        rec.hit = true;
        rec.point = p.z;
        rec.angle = detail::clamp_angle(p.z);
        if (opt.outer_radius > r) {
          Point z = p.z;
          const auto e2 = detail::run_half_disk(z, opt.outer_radius, floor, opt.q, rng,
                                                [](Point) { return true; });
          rec.outer_hit = e2 == detail::Exit::Outer;
          if (rec.outer_hit)
            rec.outer_angle = detail::clamp_angle(z);
        }
      }
      if (rec.hit || !opt.splitting || p.level == 0)
        out.push_back(rec);
    }
  });

  ExcursionResult res;
  res.n = n;
  double sum_sq = 0.0;
  for (auto &v : per_root) {
    double root_total = 0.0;
    for (auto &rec : v) {
      if (rec.hit)
        root_total += rec.weight;
      res.records.push_back(rec);
    }
    res.weighted_hits += root_total;
    sum_sq += root_total * root_total;
  }
  const double nn = static_cast<double>(n);
  const double mean = res.weighted_hits / nn;
  res.mass_estimate = mean / eps;
  if (n > 1)
    res.standard_error =
        std::sqrt(std::max(0.0, sum_sq / nn - mean * mean) / (nn - 1.0)) / eps;
  return res;
}

/// Fresh Brownian motion from each start point, run to the radius-R
/// semicircle or the real line. Returns the hit angle, or -1 when absorbed.
inline std::vector<double> brownian_exit_angles(const std::vector<Point> &starts, double R,
                                                double floor, std::uint64_t seed,
                                                double q = 0.01) {
  std::vector<double> out(starts.size(), -1.0);
  parallel_for(starts.size(), [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    Point z = starts[k];
    if (detail::run_half_disk(z, R, floor, q, rng, [](Point) { return true; }) ==
        detail::Exit::Outer)
      out[k] = detail::clamp_angle(z);
  });
  return out;
}

inline void write_hits_csv(std::ostream &os, const ExcursionResult &res) {
  os << "hit,angle,eps,weight\n";
  char buf[128];
  for (const auto &r : res.records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.hit ? 1 : 0,
                  r.hit ? r.angle : 0.0, r.eps, r.weight);
    os << buf;
  }
}

} // namespace gffforge
