#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gffforge/errors.hpp"
#include "gffforge/fields.hpp"
#include "gffforge/geometry.hpp"
#include "gffforge/greens.hpp"
#include "gffforge/lattice.hpp"
#include "gffforge/observables.hpp"
#include "gffforge/quadrature.hpp"

namespace gffforge {

// ---------------------------------------------------------------------------
// Process paths

struct ProcessPath {
  std::vector<double> grid;
  Eigen::MatrixXd replicas; // n_paths x grid.size()

  std::size_t n_paths() const { return static_cast<std::size_t>(replicas.rows()); }

  /// Column index of grid value x (exact match up to 1e-12), or -1.
  int column(double x) const {
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (std::abs(grid[i] - x) <= 1e-12 * std::max(1.0, std::abs(x)))
        return static_cast<int>(i);
    return -1;
  }

  Eigen::VectorXd at(double x) const {
    const int c = column(x);
    if (c < 0)
      throw DomainError("process path: grid does not contain " + std::to_string(x));
    return replicas.col(c);
  }

  void validate() const {
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1]))
        throw DomainError("process path: grid must be strictly increasing");
    if (static_cast<std::size_t>(replicas.cols()) != grid.size())
      throw DomainError("process path: replica width differs from grid");
    if (!replicas.allFinite())
      throw NumericalError("process path: non-finite entries");
  }

  void write_csv(std::ostream &os) const {
    char buf[64];
    auto row = [&](auto get, std::size_t n) {
      for (std::size_t j = 0; j < n; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", get(j));
        os << (j ? "," : "") << buf;
      }
      os << '\n';
    };
    row([&](std::size_t j) { return grid[j]; }, grid.size());
    for (Eigen::Index i = 0; i < replicas.rows(); ++i)
      row([&](std::size_t j) { return replicas(i, static_cast<Eigen::Index>(j)); },
          grid.size());
  }
};

inline void require_increasing_positive(const std::vector<double> &grid, bool allow_zero) {
  if (grid.empty())
    throw DomainError("grid must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (allow_zero ? !(grid[i] >= 0.0) : !(grid[i] > 0.0))
      throw DomainError("grid values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw DomainError("grid must be strictly increasing");
  }
}

// ---------------------------------------------------------------------------
// Sine pairings of functions

/// p_u(f) = sqrt(u) int_0^pi sin(t) f(e^{it}/sqrt(u)) dt.
inline double sine_pair(const std::function<double(Point)> &f, double u,
                        int nodes = kThetaNodes) {
  if (!(u > 0.0))
    throw DomainError("sine_pair: u must be positive");
  const double su = std::sqrt(u);
  return gauss_legendre(nodes, 0.0, std::numbers::pi).integrate([&](double t) {
    return su * std::sin(t) * f(std::polar(1.0 / su, t));
  });
}

/// Pairing of f with the fattened measure: int_0^delta (f, p^delta_{v(x)})
/// eta^delta(x) dx, with p^delta_v the chi^delta cut-off sine measure.
inline double fattened_sine_pair(const std::function<double(Point)> &f,
                                 const FattenedSineMeasure &m, int radial_nodes = 16,
                                 int theta_nodes = kThetaNodes) {
  const auto xrule = gauss_legendre(radial_nodes, 0.0, m.delta);
  const auto trule = gauss_legendre(theta_nodes, 0.0, std::numbers::pi);
  double sum = 0.0;
  for (std::size_t i = 0; i < xrule.size(); ++i) {
    const double x = xrule.nodes[i];
    const double v = m.shifted_u(x);
    const double sv = std::sqrt(v);
    const double inner = trule.integrate([&](double t) {
      const double c = m.mollifier.chi(t);
      return c == 0.0 ? 0.0 : sv * std::sin(t) * c * f(std::polar(1.0 / sv, t));
    });
    sum += xrule.weights[i] * m.mollifier.eta_delta(x) * inner;
  }
  return sum;
}

/// Fattened pairing of a lattice sample (bilinear interpolation).
inline double fattened_sine_pair(const FieldSample &s, const FattenedSineMeasure &m,
                                 int radial_nodes = 16, int theta_nodes = kThetaNodes) {
  return fattened_sine_pair(
      [&](Point z) { return s.lattice.interpolate(s.values, z); }, m, radial_nodes,
      theta_nodes);
}

// ---------------------------------------------------------------------------
// Lattice functionals

/// Sites of the lattice interior lying in a model domain.
inline std::vector<int> sites_in(const LatticeDomain &L, const ModelDomain &D) {
  return L.select([&](Point z) { return D.contains(z); });
}

/// Weights of the sine pairing with p_r rotated by `alpha`, through bilinear
/// interpolation at the theta-nodes.
inline SiteWeights sine_weights(const LatticeDomain &L, double r, double alpha = 0.0,
                                int nodes = kThetaNodes) {
  SiteWeights w = SiteWeights::Zero(L.n_sites());
  const double sr = std::sqrt(r);
  const auto rule = gauss_legendre(nodes, 0.0, std::numbers::pi);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double t = rule.nodes[i];
    const double c = rule.weights[i] * sr * std::sin(t);
    for (const auto &[k, wt] : L.bilinear(std::polar(1.0 / sr, t + alpha)))
      if (wt != 0.0)
        w[k] += c * wt;
  }
  return w;
}

/// Weights of h -> (harmonic part of h in B_z(eps))(site nearest z).
inline SiteWeights circle_average_weights(const LatticeDomain &L, Point z, double eps) {
  if (!(eps > 0.0))
    throw DomainError("circle_average: eps must be positive");
  const auto ball = L.select([&](Point x) { return std::abs(x - z) < eps; });
  if (ball.size() < 4)
    throw ResolutionError("circle_average: ball holds fewer than 4 interior sites");
  const int centre = L.nearest(z);
  if (centre < 0 || !L.is_interior(centre) || !(std::abs(L.embedding(centre) - z) < eps))
    throw ResolutionError("circle_average: centre site is not inside the ball");
  const DirichletSolver S(L, ball);
  SiteWeights e = SiteWeights::Zero(L.n_sites());
  e[centre] = 1.0;
  return through_harmonic_extension(S, e);
}

/// Circle average: harmonic part of the Markov decomposition in B_z(eps),
/// evaluated at the site nearest z.
inline double circle_average(const FieldSample &s, Point z, double eps) {
  return apply_weights(circle_average_weights(s.lattice, z, eps), s.values);
}

/// Weights of Y(u) on an H-truncation: harmonic part in the semi-disk D_u,
/// paired with p_{2u}.
inline SiteWeights sine_average_weights(const LatticeDomain &L, double u) {
  const auto sub = sites_in(L, ModelDomain::semi_disk(u));
  if (sub.size() < 16)
    throw ResolutionError("sine average: semi-disk holds too few sites");
  const DirichletSolver S(L, sub);
  return through_harmonic_extension(S, sine_weights(L, 2.0 * u));
}

// ---------------------------------------------------------------------------
// Paths

enum class Backend { Exact, Lattice };

struct LatticePathOptions {
  double spacing = 1.0 / 32.0; // H-truncation spacing
  double width_factor = 4.0;   // W = width_factor / sqrt(min u)
  int disk_size = 128;         // disk lattice n x n
  Law law = Law::GFF;
  double alpha = 2.0;
  double calibration = kLatticeCalibration;
};

inline ProcessPath sine_average_path(const std::vector<double> &u_grid, std::size_t n_paths,
                                     std::uint64_t seed, Backend backend = Backend::Exact,
                                     const LatticePathOptions &opt = {}) {
  require_increasing_positive(u_grid, false);
  ProcessPath path;
  path.grid = u_grid;
  if (backend == Backend::Exact) {
    ObservableFamily fam;
    fam.domain = ModelDomain::upper_half_plane();
    for (double u : u_grid)
      fam.add(SineMeasure{u}, "Y(" + std::to_string(u) + ")");
    path.replicas = sample_gff_observables(covariance_of_observables(fam, fam.domain),
                                           n_paths, seed);
  } else {
    const double W = opt.width_factor / std::sqrt(u_grid.front());
    const auto L = LatticeDomain::halfplane_box(W, opt.spacing);
    std::vector<SiteWeights> w;
    for (double u : u_grid)
      w.push_back(sine_average_weights(L, u));
    path.replicas =
        FunctionalSampler(L, w, opt.calibration).sample(n_paths, seed, opt.law, opt.alpha);
  }
  path.validate();
  return path;
}

/// t -> circle average of radius e^{-t} around z in the unit disk.
inline ProcessPath circle_average_path(Point z, const std::vector<double> &t_grid,
                                       std::size_t n_paths, std::uint64_t seed,
                                       Backend backend = Backend::Exact,
                                       const LatticePathOptions &opt = {}) {
  require_increasing_positive(t_grid, true);
  const double d = 1.0 - std::abs(z);
  if (!(d > 0.0))
    throw DomainError("circle_average_path: centre must lie in the unit disk");
  ProcessPath path;
  path.grid = t_grid;
  if (backend == Backend::Exact) {
    ObservableFamily fam;
    for (double t : t_grid)
      fam.add(CircleMeasure{z, std::min(d, std::exp(-t))}, "h(" + std::to_string(t) + ")");
    path.replicas = sample_gff_observables(
        covariance_of_observables(fam, ModelDomain::unit_disk()), n_paths, seed);
  } else {
    const auto L = LatticeDomain::disk(opt.disk_size);
    std::vector<SiteWeights> w;
    for (double t : t_grid) {
      const double eps = std::exp(-t);
      if (eps >= d)
        w.push_back(SiteWeights::Zero(L.n_sites()));
      else
        w.push_back(circle_average_weights(L, z, eps));
    }
    path.replicas =
        FunctionalSampler(L, w, opt.calibration).sample(n_paths, seed, opt.law, opt.alpha);
  }
  path.validate();
  return path;
}

// ---------------------------------------------------------------------------
// Rotational averaging

struct RotationalWeights {
  SiteWeights lhs;
  SiteWeights rhs;
};

/// Linear functionals of the disk field for both sides of the rotational
/// averaging identity. For each angle alpha the rotated field is decomposed
/// in the rotated upper half-disk; the zero-boundary part is sine-averaged
/// through its harmonic part in the rotated D_u (paired with p_{2u}), and the
/// harmonic part is paired with p_u directly. lhs averages over the angles;
/// rhs is sqrt(u) times the circle average of radius 1/sqrt(u) at 0.
inline RotationalWeights rotational_average_weights(const LatticeDomain &L, double u,
                                                    int n_angles) {
  if (!(u >= 1.0))
    throw DomainError("rotational average: u must be >= 1");
  if (n_angles < 1)
    throw DomainError("rotational average: need at least one angle");
  const double R = 1.0 / std::sqrt(u);
  RotationalWeights out{SiteWeights::Zero(L.n_sites()), SiteWeights::Zero(L.n_sites())};
  for (int k = 0; k < n_angles; ++k) {
    const double alpha = 2.0 * std::numbers::pi * k / n_angles;
    const Point rot = std::polar(1.0, -alpha);
    const auto half = L.select([&](Point z) { return (rot * z).imag() > 0.0; });
    const auto semi = L.select(
        [&](Point z) { return (rot * z).imag() > 0.0 && std::abs(z) < R; });
    if (semi.size() < 16)
      throw ResolutionError("rotational average: semi-disk holds too few sites");
    const DirichletSolver Sh(L, half), Su(L, semi);
    const SiteWeights a = through_harmonic_extension(Su, sine_weights(L, 2.0 * u, alpha));
    const SiteWeights pu = sine_weights(L, u, alpha);
    out.lhs += a + through_harmonic_extension(Sh, SiteWeights(pu - a));
  }
  out.lhs /= n_angles;
  out.rhs = std::sqrt(u) * circle_average_weights(L, {0.0, 0.0}, R);
  return out;
}

inline std::pair<double, double> rotational_average_check(const FieldSample &s, double u,
                                                          int n_angles) {
  const auto w = rotational_average_weights(s.lattice, u, n_angles);
  return {apply_weights(w.lhs, s.values), apply_weights(w.rhs, s.values)};
}

} // namespace gffforge
