#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>

#include "gffforge/geometry.hpp"
#include "gffforge/quadrature.hpp"

namespace gffforge {

/// Closed annular region {z : r_inner <= |z - center| <= r_outer}; a disk
/// when r_inner == 0. Every support in the library has this shape, which keeps
/// quadrature in polar coordinates around `center` exact in its geometry.
struct Support {
  Point center{};
  double r_inner = 0.0;
  double r_outer = 0.0;

  bool contains(Point z) const {
    const double d = std::abs(z - center);
    return d >= r_inner && d <= r_outer;
  }
  double xmin() const { return center.real() - r_outer; }
  double xmax() const { return center.real() + r_outer; }
  double ymin() const { return center.imag() - r_outer; }
  double ymax() const { return center.imag() + r_outer; }
};

/// A compactly supported real function on the plane. The evaluator is wrapped
/// so that it returns exactly 0 outside `support`.
class TestFunction {
public:
  TestFunction() = default;
  TestFunction(std::function<double(Point)> f, Support support,
               std::string smoothness = "C-infinity")
      : f_(std::make_shared<std::function<double(Point)>>(std::move(f))),
        support_(support), smoothness_(std::move(smoothness)) {}

  double operator()(Point z) const {
    if (!f_ || !support_.contains(z))
      return 0.0;
    return (*f_)(z);
  }

  const Support &support() const { return support_; }
  const std::string &smoothness() const { return smoothness_; }

  TestFunction scaled(double c) const {
    auto f = f_;
    return TestFunction([f, c](Point z) { return c * (*f)(z); }, support_,
                        smoothness_);
  }

  friend TestFunction operator+(const TestFunction &a, const TestFunction &b) {
    const Support s = enclosing(a.support_, b.support_);
    return TestFunction([a, b](Point z) { return a(z) + b(z); }, s,
                        a.smoothness_);
  }

  static TestFunction zero() {
    return TestFunction([](Point) { return 0.0; }, Support{{}, 0.0, 0.0});
  }

private:
  static Support enclosing(const Support &a, const Support &b) {
    const Point c = 0.5 * (a.center + b.center);
    const double r = std::max(std::abs(a.center - c) + a.r_outer,
                              std::abs(b.center - c) + b.r_outer);
    return {c, 0.0, r};
  }

  std::shared_ptr<std::function<double(Point)>> f_;
  Support support_;
  std::string smoothness_;
};

// ---------------------------------------------------------------------------
// Bump profile exp(-1/(x(1-x))) on (0,1)

namespace detail {

inline double raw_bump(double x) {
  if (x <= 0.0 || x >= 1.0)
    return 0.0;
  return std::exp(-1.0 / (x * (1.0 - x)));
}

inline double raw_bump_mass() {
  static const double mass = [] {
    double sum = 0.0;
    for (int k = 0; k < 16; ++k) {
      const auto rule = gauss_legendre(64, k / 16.0, (k + 1) / 16.0);
      sum += rule.integrate(raw_bump);
    }
    return sum;
  }();
  return mass;
}

} // namespace detail

/// Unit-mass bump eta on [0,1].
inline double bump(double x) { return detail::raw_bump(x) / detail::raw_bump_mass(); }

namespace detail {

// Hermite table of the integrated bump on [0,1]; S' = eta is exact.
struct StepTable {
  static constexpr int kCells = 4096;
  std::vector<double> value;
  StepTable() : value(kCells + 1) {
    const auto rule = gauss_legendre(24, 0.0, 1.0);
    double acc = 0.0;
    value[0] = 0.0;
    for (int k = 0; k < kCells; ++k) {
      const double a = double(k) / kCells, h = 1.0 / kCells;
      for (std::size_t i = 0; i < rule.size(); ++i)
        acc += h * rule.weights[i] * bump(a + h * rule.nodes[i]);
      value[k + 1] = acc;
    }
    const double total = value[kCells];
    for (auto &v : value)
      v /= total;
  }
};

} // namespace detail

/// Integral of eta from 0 to t; a C-infinity step from 0 to 1.
inline double smooth_step(double t) {
  if (t <= 0.0)
    return 0.0;
  if (t >= 1.0)
    return 1.0;
  static const detail::StepTable table;
  constexpr int n = detail::StepTable::kCells;
  const double h = 1.0 / n;
  const int k = std::min(n - 1, static_cast<int>(t * n));
  const double s = (t - k * h) / h;
  const double y0 = table.value[k], y1 = table.value[k + 1];
  const double d0 = bump(k * h) * h, d1 = bump((k + 1) * h) * h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * d0 +
         (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * d1;
}

/// Radial bump exp(-1/(1-rho^2)) on the disk of radius `radius` around
/// `center`. `mass` fixes the total integral; pass a negative value for a
/// sup-normalized bump (peak value 1).
inline TestFunction radial_bump(Point center, double radius, double mass = 1.0) {
  if (!(radius > 0.0))
    throw DomainError("radial_bump: radius must be positive");
  auto profile = [](double rho) {
    return rho < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - rho * rho)) : 0.0;
  };
  double scale = 1.0;
  if (mass >= 0.0) {
    // integral over the unit disk of the profile, times radius^2
    const auto rule = gauss_legendre(128, 0.0, 1.0);
    const double unit = 2.0 * std::numbers::pi *
                        rule.integrate([&](double r) { return profile(r) * r; });
    scale = mass / (unit * radius * radius);
  }
  return TestFunction(
      [=](Point z) { return scale * profile(std::abs(z - center) / radius); },
      Support{center, 0.0, radius});
}

/// Rotationally symmetric bump supported in the annulus [r_in, r_out] around
/// `center`, with radial profile eta((rho - r_in)/(r_out - r_in)).
/// `mass` as for radial_bump (negative: peak value 1).
inline TestFunction annular_bump(Point center, double r_in, double r_out,
                                 double mass = 1.0) {
  if (!(r_in >= 0.0) || !(r_out > r_in))
    throw DomainError("annular_bump: need 0 <= r_in < r_out");
  const double w = r_out - r_in;
  const double peak = detail::raw_bump(0.5);
  double scale = 1.0 / peak;
  if (mass >= 0.0) {
    const auto rule = gauss_legendre(128, r_in, r_out);
    const double unit = 2.0 * std::numbers::pi * rule.integrate([&](double r) {
      return detail::raw_bump((r - r_in) / w) * r;
    });
    scale = mass / unit;
  }
  return TestFunction(
      [=](Point z) {
        return scale * detail::raw_bump((std::abs(z - center) - r_in) / w);
      },
      Support{center, r_in, r_out});
}

// ---------------------------------------------------------------------------
// Mollifier profile

/// Bump eta, its rescaling eta^delta(x) = eta(x/delta)/delta, and the angular
/// cutoff chi^delta (0 on [0, delta/2], 1 on [delta, pi - delta]).
struct MollifierProfile {
  double delta = 0.1;
  /// Alternative bump shape used for mollifier-independence checks:
  /// 0 is exp(-1/(x(1-x))), 1 is exp(-1/(x(1-x))^2).
  int shape = 0;

  double eta(double x) const { return shape == 0 ? bump(x) : alt_bump(x); }

  double eta_delta(double x) const { return eta(x / delta) / delta; }

  double chi(double theta) const {
    const double h = 0.5 * delta;
    if (theta <= h || theta >= std::numbers::pi - h)
      return 0.0;
    if (theta >= delta && theta <= std::numbers::pi - delta)
      return 1.0;
    const double t = theta < delta ? (theta - h) / h
                                   : (std::numbers::pi - h - theta) / h;
    return smooth_step(t);
  }

private:
  static double alt_raw(double x) {
    if (x <= 0.0 || x >= 1.0)
      return 0.0;
    const double q = x * (1.0 - x);
    return std::exp(-1.0 / (16.0 * q * q));
  }
  static double alt_bump(double x) {
    static const double mass = [] {
      double sum = 0.0;
      for (int k = 0; k < 16; ++k)
        sum += gauss_legendre(64, k / 16.0, (k + 1) / 16.0).integrate(alt_raw);
      return sum;
    }();
    return alt_raw(x) / mass;
  }
};

inline MollifierProfile mollifier(double delta, int shape = 0) {
  if (!(delta > 0.0) || !(delta < std::numbers::pi / 2))
    throw DomainError("mollifier: delta must lie in (0, pi/2)");
  if (shape != 0 && shape != 1)
    throw DomainError("mollifier: unknown bump shape");
  return MollifierProfile{delta, shape};
}

/// Radially symmetric unit-mass mollifier equal to a constant on the annulus
/// R(1 - delta) <= |z - center| <= R(1 - delta/2) and vanishing outside its
/// R delta/10 neighbourhood. Approximates uniform measure on the circle of
/// radius R as delta -> 0.
inline TestFunction radial_mollifier(double delta, double R = 1.0, Point center = {}) {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw DomainError("radial_mollifier: delta must lie in (0, 1)");
  if (!(R > 0.0))
    throw DomainError("radial_mollifier: radius must be positive");
  const double a = R * (1.0 - delta), b = R * (1.0 - 0.5 * delta), pad = 0.1 * R * delta;
  auto shape = [=](double rho) {
    if (rho < a - pad || rho > b + pad)
      return 0.0;
    if (rho < a)
      return smooth_step((rho - (a - pad)) / pad);
    if (rho > b)
      return smooth_step(((b + pad) - rho) / pad);
    return 1.0;
  };
  double mass = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double lo = k == 0 ? a - pad : (k == 1 ? a : b);
    const double hi = k == 0 ? a : (k == 1 ? b : b + pad);
    mass += gauss_legendre(64, lo, hi).integrate(
        [&](double r) { return 2.0 * std::numbers::pi * r * shape(r); });
  }
  return TestFunction([=](Point z) { return shape(std::abs(z - center)) / mass; },
                      Support{center, a - pad, b + pad});
}

// ---------------------------------------------------------------------------
// Pullback under a conformal map

/// phi^f(z) = |(f^{-1})'(z)|^2 phi(f^{-1}(z)). The returned support is a disk
/// enclosing the image of phi's support.
inline TestFunction pullback_test_function(const TestFunction &phi,
                                           const ConformalMap &f) {
  const ConformalMap finv = f.inverse();
  const Support &s = phi.support();
  auto make = [&](Support image) {
    return TestFunction(
        [phi, finv](Point z) {
          const Point pre = finv(z);
          if (!is_finite(pre))
            return 0.0;
          return std::norm(finv.derivative(z)) * phi(pre);
        },
        image, phi.smoothness());
  };
  // isometries and scalings about 0 carry annuli to annuli
  if (f.kind() == ConformalMap::Kind::Rotation || f.kind() == ConformalMap::Kind::Scaling) {
    const double c = std::abs(f.derivative({0.0, 0.0}));
    return make(Support{f(s.center), c * s.r_inner, c * s.r_outer});
  }
  // Image of the outer circle bounds the image region for the maps we use
  // (Mobius images of disks are disks; isometries and scalings are trivial).
  const int n = 512;
  Point lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (int k = 0; k < n; ++k) {
    const Point w = f(s.center + std::polar(s.r_outer, 2.0 * std::numbers::pi * k / n));
    lo = {std::min(lo.real(), w.real()), std::min(lo.imag(), w.imag())};
    hi = {std::max(hi.real(), w.real()), std::max(hi.imag(), w.imag())};
  }
  const Point c = 0.5 * (lo + hi);
  const double r = 0.5 * std::abs(hi - lo) * 1.02;
  return make(Support{c, 0.0, r});
}

} // namespace gffforge
