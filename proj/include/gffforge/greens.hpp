#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gffforge/errors.hpp"
#include "gffforge/geometry.hpp"
#include "gffforge/lattice.hpp"
#include "gffforge/observables.hpp"
#include "gffforge/quadrature.hpp"
#include "gffforge/test_function.hpp"

namespace gffforge {

// ---------------------------------------------------------------------------
// Continuum Green's functions (normalized without the 1/(2 pi) factor)

inline double green_disk(Point x, Point y) {
  require_finite(x, "green_disk");
  require_finite(y, "green_disk");
  if (!(std::abs(x) < 1.0) || !(std::abs(y) < 1.0))
    throw DomainError("green_disk: points must lie in the unit disk");
  if (x == y)
    throw SingularityError("green_disk: x == y");
  return std::log(std::abs(1.0 - x * std::conj(y))) - std::log(std::abs(x - y));
}

inline double green_halfplane(Point x, Point y) {
  require_finite(x, "green_halfplane");
  require_finite(y, "green_halfplane");
  if (!(x.imag() > 0.0) || !(y.imag() > 0.0))
    throw DomainError("green_halfplane: points must lie in the upper half-plane");
  if (x == y)
    throw SingularityError("green_halfplane: x == y");
  return std::log(std::abs(x - std::conj(y))) - std::log(std::abs(x - y));
}

namespace detail {

// Semi-disk of radius R onto H: z -> -(z + R^2/z).
inline Point semi_disk_to_halfplane(Point z, double R) { return -(z + R * R / z); }
inline Point semi_disk_to_halfplane_derivative(Point z, double R) {
  return -(1.0 - R * R / (z * z));
}

inline void require_kernel_domain(const ModelDomain &D) {
  using K = ModelDomain::Kind;
  if (D.kind == K::HalfPlaneAnnulus)
    throw DomainError("green: no closed-form kernel for the half-plane annulus");
}

} // namespace detail

/// G_D(x,y) + log|x-y|, smooth on D x D including the diagonal.
inline double green_regular_part(const ModelDomain &D, Point x, Point y) {
  using K = ModelDomain::Kind;
  switch (D.kind) {
  case K::UnitDisk:
    return std::log(std::abs(1.0 - x * std::conj(y)));
  case K::UpperHalfPlane:
    return std::log(std::abs(x - std::conj(y)));
  case K::Ball: {
    const Point a = (x - D.center) / D.radius, b = (y - D.center) / D.radius;
    return std::log(std::abs(1.0 - a * std::conj(b))) + std::log(D.radius);
  }
  case K::SemiDisk: {
    const double R = 1.0 / std::sqrt(D.u);
    const Point fx = detail::semi_disk_to_halfplane(x, R);
    if (std::abs(x - y) < 1e-12 * std::max(1.0, std::abs(x)))
      return std::log(2.0 * fx.imag()) -
             std::log(std::abs(detail::semi_disk_to_halfplane_derivative(x, R)));
    const Point fy = detail::semi_disk_to_halfplane(y, R);
    return std::log(std::abs(fx - std::conj(fy))) - std::log(std::abs(fx - fy)) +
           std::log(std::abs(x - y));
  }
  case K::HalfPlaneAnnulus:
    break;
  }
  throw DomainError("green: unsupported domain kind " + D.name());
}

/// Dirichlet Green's function of a model domain.
inline double green(const ModelDomain &D, Point x, Point y) {
  detail::require_kernel_domain(D);
  if (!D.contains(x) || !D.contains(y))
    throw DomainError("green: points must lie in " + D.name());
  if (x == y)
    throw SingularityError("green: x == y");
  if (D.kind == ModelDomain::Kind::UnitDisk)
    return green_disk(x, y);
  if (D.kind == ModelDomain::Kind::UpperHalfPlane)
    return green_halfplane(x, y);
  return green_regular_part(D, x, y) - std::log(std::abs(x - y));
}

// ---------------------------------------------------------------------------
// Discrete Green's function

/// Entry (x, y) of the inverse Dirichlet Laplacian (diagonal 4).
inline double discrete_green(const LatticeDomain &L, int x, int y) {
  if (!L.is_interior(x) || !L.is_interior(y))
    throw DomainError("discrete_green: sites must be interior");
  const auto &S = L.solver();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(S.size());
  e[S.local(y)] = 1.0;
  return S.solve(e)[S.local(x)];
}

// ---------------------------------------------------------------------------
// H^{-1} inner product

/// Polar grid over an annular support: radial Gauss-Legendre panels times a
/// periodic trapezoidal rule in angle.
struct PolarGrid {
  std::vector<Point> points;
  std::vector<double> weights;

  static PolarGrid over(const Support &s, int radial_panels = 4, int radial_order = 8,
                        int angles = 192) {
    PolarGrid g;
    if (!(s.r_outer > s.r_inner))
      return g;
    const double h = (s.r_outer - s.r_inner) / radial_panels;
    const double dt = 2.0 * std::numbers::pi / angles;
    for (int p = 0; p < radial_panels; ++p) {
      const auto rule = gauss_legendre(radial_order, s.r_inner + p * h,
                                       s.r_inner + (p + 1) * h);
      for (std::size_t i = 0; i < rule.size(); ++i)
        for (int k = 0; k < angles; ++k) {
          const double rho = rule.nodes[i];
          // half-step offset keeps nodes of concentric grids off each other
          g.points.push_back(s.center + std::polar(rho, (k + 0.5) * dt));
          g.weights.push_back(rule.weights[i] * rho * dt);
        }
    }
    return g;
  }
};

struct InnerProductOptions {
  int radial_panels = 4;
  int radial_order = 8;
  int angles = 192;
};

namespace detail {

/// -int_{|y-c|<R} log|x-y| dy.
inline double disk_log_potential(Point x, Point c, double R) {
  if (R <= 0.0)
    return 0.0;
  const double rho = std::abs(x - c);
  const double pi = std::numbers::pi;
  if (rho >= R)
    return -pi * R * R * std::log(rho);
  return pi * R * R * (0.5 - std::log(R)) - 0.5 * pi * rho * rho;
}

inline double annulus_log_potential(Point x, const Support &s) {
  return disk_log_potential(x, s.center, s.r_outer) -
         disk_log_potential(x, s.center, s.r_inner);
}

inline void require_support_in(const TestFunction &f, const ModelDomain &D) {
  const Support &s = f.support();
  const double tol = 1e-12;
  for (int k = 0; k < 64; ++k) {
    const Point z = s.center + std::polar(s.r_outer * (1.0 - tol),
                                          2.0 * std::numbers::pi * k / 64);
    if (!D.contains(z) && D.boundary_distance(z) < -1e-9)
      throw DomainError("test function support leaves " + D.name());
  }
}

} // namespace detail

/// Green potential J_g(x) = int G_D(x,y) g(y) dy. The log singularity is
/// removed by subtracting g(x) and adding back the exact log potential of
/// the support.
class GreenPotential {
public:
  GreenPotential(const TestFunction &g, const ModelDomain &D,
                 const InnerProductOptions &opt = {})
      : g_(g), D_(D),
        grid_(PolarGrid::over(g.support(), opt.radial_panels, opt.radial_order,
                              opt.angles)) {
    detail::require_kernel_domain(D);
    values_.reserve(grid_.points.size());
    for (const Point y : grid_.points)
      values_.push_back(g(y));
  }

  double operator()(Point x) const {
    const double gx = g_(x);
    double sum = 0.0;
    for (std::size_t k = 0; k < grid_.points.size(); ++k) {
      const Point y = grid_.points[k];
      double term = green_regular_part(D_, x, y) * values_[k];
      const double d = std::abs(x - y);
      if (d > 0.0)
        term -= std::log(d) * (values_[k] - gx);
      sum += grid_.weights[k] * term;
    }
    if (gx != 0.0)
      sum += gx * detail::annulus_log_potential(x, g_.support());
    return sum;
  }

private:
  TestFunction g_;
  ModelDomain D_;
  PolarGrid grid_;
  std::vector<double> values_;
};

/// (f, g)_{-1} = int int G_D(x,y) f(x) g(y) dx dy, symmetrized.
inline double h_minus1_inner(const TestFunction &f, const TestFunction &g,
                             const ModelDomain &D,
                             const InnerProductOptions &opt = {}) {
  detail::require_kernel_domain(D);
  detail::require_support_in(f, D);
  detail::require_support_in(g, D);
  auto one_sided = [&](const TestFunction &a, const TestFunction &b) {
    const GreenPotential J(b, D, opt);
    const auto grid = PolarGrid::over(a.support(), opt.radial_panels,
                                      opt.radial_order, opt.angles);
    double sum = 0.0;
    for (std::size_t k = 0; k < grid.points.size(); ++k) {
      const double av = a(grid.points[k]);
      if (av != 0.0)
        sum += grid.weights[k] * av * J(grid.points[k]);
    }
    return sum;
  };
  if (&f == &g)
    return one_sided(f, f);
  return 0.5 * (one_sided(f, g) + one_sided(g, f));
}

// ---------------------------------------------------------------------------
// Covariance of observable families

class CovarianceMatrix {
public:
  CovarianceMatrix() = default;
  CovarianceMatrix(std::vector<std::string> labels, Eigen::MatrixXd entries)
      : labels_(std::move(labels)), entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() ||
        static_cast<std::size_t>(entries_.rows()) != labels_.size())
      throw DomainError("covariance: labels and matrix size disagree");
  }

  const std::vector<std::string> &labels() const { return labels_; }
  const Eigen::MatrixXd &entries() const { return entries_; }
  std::size_t size() const { return labels_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }

  double min_eigenvalue() const {
    if (size() == 0)
      return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  /// Throws NumericalError unless symmetric to 1e-10 and PSD to 1e-8 * trace.
  void check() const {
    const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
    if (size() > 0 && asym > 1e-10 * scale)
      throw NumericalError("covariance matrix is not symmetric");
    const double tr = entries_.trace();
    if (min_eigenvalue() < -1e-8 * std::max(tr, 1e-300))
      throw NumericalError("covariance matrix is not positive semi-definite");
  }

  void write_csv(std::ostream &os) const {
    for (std::size_t j = 0; j < size(); ++j)
      os << (j ? "," : "") << labels_[j];
    os << '\n';
    char buf[64];
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t j = 0; j < size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", entries_(i, j));
        os << (j ? "," : "") << buf;
      }
      os << '\n';
    }
  }

private:
  std::vector<std::string> labels_;
  Eigen::MatrixXd entries_;
};

struct CovarianceOptions {
  InnerProductOptions inner{};
  int arc_nodes = kThetaNodes;
  int fattening_nodes = 16;
};

namespace detail {

inline std::vector<WeightedArc> arcs_of(const Observable &o, const ModelDomain &D,
                                        const CovarianceOptions &opt) {
  if (const auto *c = std::get_if<CircleMeasure>(&o)) {
    if (!(c->radius > 0.0))
      throw DomainError("circle measure radius must be positive");
    // a circle reaching the Dirichlet boundary pairs to zero with the field
    if (D.boundary_distance(c->center) <= c->radius * (1.0 + 1e-14))
      return {};
    return {as_arc(*c)};
  }
  if (const auto *s = std::get_if<SineMeasure>(&o)) {
    if (D.kind != ModelDomain::Kind::UpperHalfPlane)
      throw DomainError("sine measures are supported in the upper half-plane");
    return {as_arc(*s)};
  }
  if (const auto *m = std::get_if<FattenedSineMeasure>(&o)) {
    if (D.kind != ModelDomain::Kind::UpperHalfPlane)
      throw DomainError("sine measures are supported in the upper half-plane");
    return as_arcs(*m, opt.fattening_nodes);
  }
  return {};
}

// Angle in [t0, t1] (up to 2 pi shifts) of the point of the arc nearest p.
inline double nearest_angle(const WeightedArc &arc, Point p) {
  double s = std::arg(p - arc.center);
  const double two_pi = 2.0 * std::numbers::pi;
  while (s < arc.t0)
    s += two_pi;
  while (s > arc.t0 + two_pi)
    s -= two_pi;
  if (s > arc.t1) {
    // pick the closer endpoint
    const double d1 = s - arc.t1, d0 = arc.t0 + two_pi - s;
    s = d1 < d0 ? arc.t1 : arc.t0;
  }
  return s;
}

inline double arc_arc(const WeightedArc &A, const WeightedArc &B,
                      const ModelDomain &D, int nodes) {
  const auto outer = gauss_legendre(nodes, A.t0, A.t1);
  double sum = 0.0;
  for (std::size_t i = 0; i < outer.size(); ++i) {
    const double t = outer.nodes[i];
    const double wa = A.weight(t);
    if (wa == 0.0)
      continue;
    const Point p = A.at(t);
    const double c = nearest_angle(B, p);
    QuadratureRule inner;
    if (B.full_circle())
      inner = graded_rule_at(c - std::numbers::pi, c + std::numbers::pi, c);
    else
      inner = graded_rule_at(B.t0, B.t1, c);
    double acc = 0.0;
    for (std::size_t k = 0; k < inner.size(); ++k) {
      const double s = inner.nodes[k];
      const double wb = B.weight(std::fmod(s + 4.0 * std::numbers::pi, 2.0 * std::numbers::pi));
      if (wb == 0.0)
        continue;
      const Point q = B.at(s);
      const double d = std::abs(p - q);
      if (d == 0.0)
        continue;
      acc += inner.weights[k] * wb * (green_regular_part(D, p, q) - std::log(d));
    }
    sum += outer.weights[i] * wa * acc;
  }
  return sum;
}

inline double arc_potential(const WeightedArc &A, const GreenPotential &J, int nodes) {
  const auto rule = gauss_legendre(nodes, A.t0, A.t1);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double w = A.weight(rule.nodes[i]);
    if (w != 0.0)
      sum += rule.weights[i] * w * J(A.at(rule.nodes[i]));
  }
  return sum;
}

} // namespace detail

/// Exact Gaussian covariance of a family of observables of the GFF in D.
/// Test functions pair through h_minus1_inner; circle and sine measures are
/// integrated as weighted arcs against the kernel.
inline CovarianceMatrix covariance_of_observables(const ObservableFamily &obs,
                                                  const ModelDomain &D,
                                                  const CovarianceOptions &opt = {}) {
  detail::require_kernel_domain(D);
  const std::size_t n = obs.size();
  std::vector<std::vector<WeightedArc>> arcs(n);
  std::vector<const TestFunction *> tfs(n, nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    if (const auto *f = std::get_if<TestFunction>(&obs.observables[i])) {
      detail::require_support_in(*f, D);
      tfs[i] = f;
    } else {
      arcs[i] = detail::arcs_of(obs.observables[i], D, opt);
    }
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::unique_ptr<GreenPotential> Ji;
    if (tfs[i])
      Ji = std::make_unique<GreenPotential>(*tfs[i], D, opt.inner);
    for (std::size_t j = i; j < n; ++j) {
      double v = 0.0;
      if (tfs[i] && tfs[j]) {
        v = h_minus1_inner(*tfs[i], *tfs[j], D, opt.inner);
      } else if (tfs[i] || tfs[j]) {
        const std::size_t a = tfs[i] ? j : i;
        std::unique_ptr<GreenPotential> Jj;
        const GreenPotential *J = Ji.get();
        if (!J) {
          Jj = std::make_unique<GreenPotential>(*tfs[j], D, opt.inner);
          J = Jj.get();
        }
        for (const auto &arc : arcs[a])
          v += detail::arc_potential(arc, *J, opt.arc_nodes);
      } else {
        for (const auto &A : arcs[i])
          for (const auto &B : arcs[j])
            v += detail::arc_arc(A, B, D, opt.arc_nodes);
        if (i != j) {
          // symmetrize the quadrature
          double w = 0.0;
          for (const auto &A : arcs[j])
            for (const auto &B : arcs[i])
              w += detail::arc_arc(A, B, D, opt.arc_nodes);
          v = 0.5 * (v + w);
        }
      }
      C(i, j) = C(j, i) = v;
    }
  }
  std::vector<std::string> labels = obs.labels;
  labels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i].empty())
      labels[i] = "obs" + std::to_string(i);
  CovarianceMatrix out(std::move(labels), std::move(C));
  out.check();
  return out;
}

} // namespace gffforge
