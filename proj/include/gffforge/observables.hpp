#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "gffforge/geometry.hpp"
#include "gffforge/test_function.hpp"

namespace gffforge {

/// Uniform probability measure on the circle of radius `radius` around `center`.
struct CircleMeasure {
  Point center{};
  double radius = 1.0;
};

/// p_u: sqrt(u) sin(theta) d(theta) on the semicircle of radius 1/sqrt(u).
struct SineMeasure {
  double u = 1.0;
  double radius() const { return 1.0 / std::sqrt(u); }
  double total_mass() const { return 2.0 * std::sqrt(u); }
};

/// Smooth fattening of p_u toward the inside (radii 1/sqrt(u(1+x))) or the
/// outside (radii 1/sqrt(u(1-x))) of its semicircle, mollified over
/// x in (0, delta) and cut off near the real axis by chi^delta.
struct FattenedSineMeasure {
  enum class Side { In, Out };
  double u = 1.0;
  double delta = 0.1;
  Side side = Side::In;
  MollifierProfile mollifier{};

  static FattenedSineMeasure make(double u, double delta, Side side, int shape = 0) {
    if (!(u > 0.0))
      throw DomainError("fattened sine measure: u must be positive");
    return FattenedSineMeasure{u, delta, side, gffforge::mollifier(delta, shape)};
  }

  double shifted_u(double x) const {
    return side == Side::In ? u * (1.0 + x) : u * (1.0 - x);
  }
};

using Observable =
    std::variant<TestFunction, CircleMeasure, SineMeasure, FattenedSineMeasure>;

/// A finite family of linear functionals of the field, all supported in one
/// model domain.
struct ObservableFamily {
  ModelDomain domain = ModelDomain::unit_disk();
  std::vector<Observable> observables;
  std::vector<std::string> labels;

  void add(Observable obs, std::string label) {
    observables.push_back(std::move(obs));
    labels.push_back(std::move(label));
  }
  std::size_t size() const { return observables.size(); }
};

// ---------------------------------------------------------------------------
// Singular measures as weighted arcs: pairing(f) = int_{t0}^{t1} f(c + r e^{it}) w(t) dt

struct WeightedArc {
  Point center{};
  double radius = 1.0;
  double t0 = 0.0, t1 = 2.0 * std::numbers::pi;
  std::function<double(double)> weight;

  Point at(double t) const { return center + std::polar(radius, t); }
  bool full_circle() const { return t1 - t0 >= 2.0 * std::numbers::pi - 1e-15; }
};

inline WeightedArc as_arc(const CircleMeasure &m) {
  return {m.center, m.radius, 0.0, 2.0 * std::numbers::pi,
          [](double) { return 1.0 / (2.0 * std::numbers::pi); }};
}

inline WeightedArc as_arc(const SineMeasure &m) {
  const double su = std::sqrt(m.u);
  return {{}, m.radius(), 0.0, std::numbers::pi,
          [su](double t) { return su * std::sin(t); }};
}

/// Arcs with `mix` weights whose sum reproduces the fattened measure.
inline std::vector<WeightedArc> as_arcs(const FattenedSineMeasure &m,
                                        int radial_nodes = 16) {
  std::vector<WeightedArc> arcs;
  const auto rule = gauss_legendre(radial_nodes, 0.0, m.delta);
  const MollifierProfile prof = m.mollifier;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double x = rule.nodes[k];
    const double v = m.shifted_u(x);
    const double mix = rule.weights[k] * prof.eta_delta(x);
    const double sv = std::sqrt(v);
    arcs.push_back({{}, 1.0 / sv, 0.0, std::numbers::pi,
                    [=](double t) { return mix * sv * std::sin(t) * prof.chi(t); }});
  }
  return arcs;
}

} // namespace gffforge
