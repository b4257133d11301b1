#pragma once

#include <cmath>
#include <array>
#include <complex>
#include <algorithm>
#include <numbers>
#include <string>
#include <vector>

#include "gffforge/errors.hpp"

namespace gffforge {

using Point = std::complex<double>;

inline bool is_finite(Point z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline Point require_finite(Point z, const char *where) {
  if (!is_finite(z))
    throw DomainError(std::string(where) + ": non-finite point");
  return z;
}

// ---------------------------------------------------------------------------
// Model domains

struct ModelDomain {
  enum class Kind { UnitDisk, UpperHalfPlane, SemiDisk, HalfPlaneAnnulus, Ball };

  Kind kind = Kind::UnitDisk;
  double u = 0.0;       // SemiDisk: radius 1/sqrt(u)
  double r = 0.0;       // HalfPlaneAnnulus D_s \ closure(D_r), s < r
  double s = 0.0;
  Point center{};       // Ball
  double radius = 0.0;  // Ball

  static ModelDomain unit_disk() { return {}; }

  static ModelDomain upper_half_plane() {
    ModelDomain d;
    d.kind = Kind::UpperHalfPlane;
    return d;
  }

  /// D_u = (1/sqrt(u)) * (upper half of the unit disk).
  static ModelDomain semi_disk(double u) {
    if (!(u > 0.0) || !std::isfinite(u))
      throw DomainError("semi_disk: u must be positive");
    ModelDomain d;
    d.kind = Kind::SemiDisk;
    d.u = u;
    return d;
  }

  /// A_{r,s} = D_s \ closure(D_r); radii 1/sqrt(r) < 1/sqrt(s).
  static ModelDomain halfplane_annulus(double r, double s) {
    if (!(s > 0.0) || !(s < r))
      throw DomainError("halfplane_annulus: require 0 < s < r");
    ModelDomain d;
    d.kind = Kind::HalfPlaneAnnulus;
    d.r = r;
    d.s = s;
    return d;
  }

  static ModelDomain ball(Point z, double eps) {
    if (!(eps > 0.0))
      throw DomainError("ball: radius must be positive");
    ModelDomain d;
    d.kind = Kind::Ball;
    d.center = require_finite(z, "ball");
    d.radius = eps;
    return d;
  }

  bool contains(Point z) const {
    switch (kind) {
    case Kind::UnitDisk:
      return std::abs(z) < 1.0;
    case Kind::UpperHalfPlane:
      return z.imag() > 0.0;
    case Kind::SemiDisk:
      return z.imag() > 0.0 && std::abs(z) < 1.0 / std::sqrt(u);
    case Kind::HalfPlaneAnnulus: {
      const double m = std::abs(z);
      return z.imag() > 0.0 && m < 1.0 / std::sqrt(s) && m > 1.0 / std::sqrt(r);
    }
    case Kind::Ball:
      return std::abs(z - center) < radius;
    }
    return false;
  }

  /// Distance from an interior point to the boundary.
  double boundary_distance(Point z) const {
    switch (kind) {
    case Kind::UnitDisk:
      return 1.0 - std::abs(z);
    case Kind::UpperHalfPlane:
      return z.imag();
    case Kind::SemiDisk:
      return std::min(z.imag(), 1.0 / std::sqrt(u) - std::abs(z));
    case Kind::HalfPlaneAnnulus: {
      const double m = std::abs(z);
      return std::min({z.imag(), 1.0 / std::sqrt(s) - m, m - 1.0 / std::sqrt(r)});
    }
    case Kind::Ball:
      return radius - std::abs(z - center);
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind) {
    case Kind::UnitDisk:
      return "unit-disk";
    case Kind::UpperHalfPlane:
      return "upper-half-plane";
    case Kind::SemiDisk:
      return "semi-disk";
    case Kind::HalfPlaneAnnulus:
      return "half-plane-annulus";
    case Kind::Ball:
      return "ball";
    }
    return "?";
  }
};

// ---------------------------------------------------------------------------
// Conformal maps

/// Analytic bijection between model domains. Value type; Composition applies
/// its parts left to right.
class ConformalMap {
public:
  enum class Kind { Mobius, JoukowskiLike, Inversion, Rotation, Scaling, Composition };

  static ConformalMap mobius(Point a, Point b, Point c, Point d) {
    if (std::abs(a * d - b * c) == 0.0)
      throw DomainError("mobius: ad - bc must be nonzero");
    ConformalMap m(Kind::Mobius);
    m.coef_ = {a, b, c, d};
    return m;
  }

  /// z -> z + r^2 / z
  static ConformalMap joukowski(double r) {
    if (!(r > 0.0))
      throw DomainError("joukowski: r must be positive");
    ConformalMap m(Kind::JoukowskiLike);
    m.param_ = r;
    return m;
  }

  /// z -> -1/z
  static ConformalMap inversion() { return ConformalMap(Kind::Inversion); }

  static ConformalMap rotation(double alpha) {
    ConformalMap m(Kind::Rotation);
    m.param_ = alpha;
    return m;
  }

  static ConformalMap scaling(double c) {
    if (!(c > 0.0))
      throw DomainError("scaling: factor must be positive");
    ConformalMap m(Kind::Scaling);
    m.param_ = c;
    return m;
  }

  static ConformalMap compose(std::vector<ConformalMap> parts) {
    ConformalMap m(Kind::Composition);
    m.parts_ = std::move(parts);
    return m;
  }

  Kind kind() const { return kind_; }

  Point operator()(Point z) const {
    switch (kind_) {
    case Kind::Mobius:
      return (coef_[0] * z + coef_[1]) / (coef_[2] * z + coef_[3]);
    case Kind::JoukowskiLike:
      return inverted_ ? joukowski_preimage(z) : z + param_ * param_ / z;
    case Kind::Inversion:
      return -1.0 / z;
    case Kind::Rotation:
      return std::polar(1.0, param_) * z;
    case Kind::Scaling:
      return param_ * z;
    case Kind::Composition:
      for (const auto &p : parts_)
        z = p(z);
      return z;
    }
    return z;
  }

  Point derivative(Point z) const {
    switch (kind_) {
    case Kind::Mobius: {
      const Point den = coef_[2] * z + coef_[3];
      return (coef_[0] * coef_[3] - coef_[1] * coef_[2]) / (den * den);
    }
    case Kind::JoukowskiLike: {
      if (inverted_) {
        const Point pre = joukowski_preimage(z);
        return 1.0 / (1.0 - param_ * param_ / (pre * pre));
      }
      return 1.0 - param_ * param_ / (z * z);
    }
    case Kind::Inversion:
      return 1.0 / (z * z);
    case Kind::Rotation:
      return std::polar(1.0, param_);
    case Kind::Scaling:
      return {param_, 0.0};
    case Kind::Composition: {
      Point d{1.0, 0.0};
      for (const auto &p : parts_) {
        d *= p.derivative(z);
        z = p(z);
      }
      return d;
    }
    }
    return {1.0, 0.0};
  }

  ConformalMap inverse() const {
    switch (kind_) {
    case Kind::Mobius:
      return mobius(coef_[3], -coef_[1], -coef_[2], coef_[0]);
    case Kind::JoukowskiLike: {
      ConformalMap m(Kind::JoukowskiLike);
      m.param_ = param_;
      m.inverted_ = !inverted_;
      return m;
    }
    case Kind::Inversion:
      return inversion();
    case Kind::Rotation:
      return rotation(-param_);
    case Kind::Scaling:
      return scaling(1.0 / param_);
    case Kind::Composition: {
      std::vector<ConformalMap> inv;
      for (auto it = parts_.rbegin(); it != parts_.rend(); ++it)
        inv.push_back(it->inverse());
      return compose(std::move(inv));
    }
    }
    return *this;
  }

private:
  explicit ConformalMap(Kind k) : kind_(k) {}

  // Of the two roots of z^2 - w z + r^2, the one outside r*D.
  Point joukowski_preimage(Point w) const {
    const Point disc = std::sqrt(w * w - 4.0 * param_ * param_);
    const Point z1 = 0.5 * (w + disc), z2 = 0.5 * (w - disc);
    return std::abs(z1) >= std::abs(z2) ? z1 : z2;
  }

  Kind kind_;
  std::array<Point, 4> coef_{};
  double param_ = 0.0;
  bool inverted_ = false;
  std::vector<ConformalMap> parts_;
};

/// Phase-normalized disk automorphism F with F(z0) = 0 and F'(z0) > 0:
/// F(w) = (w - z0) / (1 - conj(z0) w).
inline ConformalMap mobius_to_disk(Point z0) {
  require_finite(z0, "mobius_to_disk");
  if (!(std::abs(z0) < 1.0))
    throw DomainError("mobius_to_disk: |z0| must be < 1");
  return ConformalMap::mobius({1.0, 0.0}, -z0, -std::conj(z0), {1.0, 0.0});
}

/// z -> z + r^2/z, mapping H \ (r D) onto H.
inline ConformalMap halfplane_annulus_map(double r) {
  if (!(r > 0.0))
    throw DomainError("halfplane_annulus_map: r must be positive");
  return ConformalMap::joukowski(r);
}

/// Cayley map H -> D, z -> (z - i)/(z + i).
inline ConformalMap cayley() {
  return ConformalMap::mobius({1.0, 0.0}, {0.0, -1.0}, {1.0, 0.0}, {0.0, 1.0});
}

/// r_z(eps) = sup{ r in [0,1] : F^{-1}(B_0(r)) inside B_z(eps) }, with F the
/// phase-normalized automorphism sending z to 0. Bisection on r; containment
/// is checked on `samples` points of the circle |w| = r.
inline double shrink_radius(Point z, double eps, int samples = 4096) {
  require_finite(z, "shrink_radius");
  const double dist = 1.0 - std::abs(z);
  if (!(dist > 0.0))
    throw DomainError("shrink_radius: z must lie in the unit disk");
  if (!(eps > 0.0) || !(eps < dist))
    throw DomainError("shrink_radius: need 0 < eps < d(z, boundary)");
  const auto finv = mobius_to_disk(z).inverse();
  auto inside = [&](double r) {
    for (int k = 0; k < samples; ++k) {
      const Point w = std::polar(r, 2.0 * std::numbers::pi * k / samples);
      if (std::abs(finv(w) - z) > eps)
        return false;
    }
    return true;
  };
  double lo = 0.0, hi = 1.0;
  if (inside(hi))
    return hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo;
}

} // namespace gffforge
