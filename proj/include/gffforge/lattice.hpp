#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "gffforge/errors.hpp"
#include "gffforge/geometry.hpp"

namespace gffforge {

using Site = std::array<int, 2>;

class DirichletSolver;

/// Finite piece of the square lattice a*Z^2. Interior sites are indexed
/// 0..n_interior-1, boundary sites (4-neighbours of the interior that are not
/// themselves interior) follow. Site fields are vectors over all sites.
class LatticeDomain {
public:
  LatticeDomain() = default;

  /// Interior = lattice sites inside the index box [imin,imax]x[jmin,jmax]
  /// for which `inside(point)` holds.
  static LatticeDomain from_predicate(double spacing, int imin, int imax,
                                      int jmin, int jmax,
                                      const std::function<bool(Point)> &inside,
                                      std::string name = "custom") {
    if (!(spacing > 0.0))
      throw DomainError("lattice spacing must be positive");
    LatticeDomain L;
    L.spacing_ = spacing;
    L.name_ = std::move(name);
    L.imin_ = imin - 1;
    L.jmin_ = jmin - 1;
    L.nx_ = imax - imin + 3;
    L.ny_ = jmax - jmin + 3;
    L.grid_.assign(static_cast<std::size_t>(L.nx_) * L.ny_, -1);
    for (int i = imin; i <= imax; ++i)
      for (int j = jmin; j <= jmax; ++j)
        if (inside(Point{i * spacing, j * spacing})) {
          L.grid_[L.cell(i, j)] = static_cast<int>(L.sites_.size());
          L.sites_.push_back({i, j});
        }
    L.n_interior_ = static_cast<int>(L.sites_.size());
    if (L.n_interior_ == 0)
      throw DomainError("lattice has no interior sites");
    for (int k = 0; k < L.n_interior_; ++k) {
      const auto [i, j] = L.sites_[k];
      for (const auto &d : kSteps) {
        const int ii = i + d[0], jj = j + d[1];
        int &slot = L.grid_[L.cell(ii, jj)];
        if (slot < 0) {
          slot = static_cast<int>(L.sites_.size());
          L.sites_.push_back({ii, jj});
        }
      }
    }
    return L;
  }

  /// Unit disk discretized by an n x n box: spacing 2/n, interior |z| < 1.
  static LatticeDomain disk(int n) {
    if (n < 2)
      throw DomainError("disk lattice needs n >= 2");
    const double a = 2.0 / n;
    const int m = n / 2 + 1;
    return from_predicate(a, -m, m, -m, m,
                          [](Point z) { return std::abs(z) < 1.0 - 1e-12; },
                          "disk" + std::to_string(n));
  }

  /// Disk of radius `radius` around 0 with the given spacing.
  static LatticeDomain disk_radius(double radius, double spacing) {
    const int m = static_cast<int>(std::ceil(radius / spacing)) + 1;
    return from_predicate(spacing, -m, m, -m, m,
                          [radius](Point z) { return std::abs(z) < radius - 1e-12; },
                          "disk-r");
  }

  /// Truncation of the upper half-plane: box [-width, width] x (0, width].
  static LatticeDomain halfplane_box(double width, double spacing) {
    const int m = static_cast<int>(std::ceil(width / spacing));
    return from_predicate(
        spacing, -m, m, 1, m,
        [width](Point z) {
          return z.imag() > 0.0 && std::abs(z.real()) < width - 1e-12 &&
                 z.imag() < width - 1e-12;
        },
        "halfplane-box");
  }

  /// Single interior site at the origin with its four boundary neighbours.
  static LatticeDomain single_site(double spacing = 1.0) {
    return from_predicate(spacing, 0, 0, 0, 0, [](Point) { return true; },
                          "single");
  }

  double spacing() const { return spacing_; }
  int n_interior() const { return n_interior_; }
  int n_sites() const { return static_cast<int>(sites_.size()); }
  bool is_interior(int k) const { return k >= 0 && k < n_interior_; }
  const Site &site(int k) const { return sites_[k]; }
  const std::string &name() const { return name_; }
  /// Index box holding every site: i in [imin, imin + nx), j in [jmin, jmin + ny).
  int imin() const { return imin_; }
  int jmin() const { return jmin_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  Point embedding(int k) const {
    return {sites_[k][0] * spacing_, sites_[k][1] * spacing_};
  }

  /// Site index at integer coordinates, or -1.
  int index(int i, int j) const {
    if (i < imin_ || j < jmin_ || i >= imin_ + nx_ || j >= jmin_ + ny_)
      return -1;
    return grid_[cell(i, j)];
  }

  /// The four neighbours of an interior site (all exist by construction).
  std::array<int, 4> neighbours(int k) const {
    const auto [i, j] = sites_[k];
    return {index(i + 1, j), index(i - 1, j), index(i, j + 1), index(i, j - 1)};
  }

  /// Site nearest to a point (any site, interior or boundary), or -1.
  int nearest(Point z) const {
    const int i = static_cast<int>(std::lround(z.real() / spacing_));
    const int j = static_cast<int>(std::lround(z.imag() / spacing_));
    return index(i, j);
  }

  /// Interior sites whose embedding satisfies `pred`.
  std::vector<int> select(const std::function<bool(Point)> &pred) const {
    std::vector<int> out;
    for (int k = 0; k < n_interior_; ++k)
      if (pred(embedding(k)))
        out.push_back(k);
    return out;
  }

  /// Bilinear interpolation weights (site, weight) at point z. Throws
  /// ResolutionError when a corner is not a lattice site.
  std::array<std::pair<int, double>, 4> bilinear(Point z) const {
    const double x = z.real() / spacing_, y = z.imag() / spacing_;
    const int i0 = static_cast<int>(std::floor(x)), j0 = static_cast<int>(std::floor(y));
    const double fx = x - i0, fy = y - j0;
    std::array<std::pair<int, double>, 4> w{
        std::pair{index(i0, j0), (1 - fx) * (1 - fy)},
        std::pair{index(i0 + 1, j0), fx * (1 - fy)},
        std::pair{index(i0, j0 + 1), (1 - fx) * fy},
        std::pair{index(i0 + 1, j0 + 1), fx * fy}};
    for (const auto &[k, wt] : w)
      if (k < 0 && wt != 0.0)
        throw ResolutionError("bilinear: point outside the lattice");
    return w;
  }

  double interpolate(std::span<const double> values, Point z) const {
    double v = 0.0;
    for (const auto &[k, wt] : bilinear(z))
      if (wt != 0.0)
        v += wt * values[k];
    return v;
  }

  /// Cached factorization of the interior Dirichlet Laplacian.
  const DirichletSolver &solver() const;

private:
  static constexpr std::array<std::array<int, 2>, 4> kSteps{
      {{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

  std::size_t cell(int i, int j) const {
    return static_cast<std::size_t>(i - imin_) * ny_ + (j - jmin_);
  }

  double spacing_ = 1.0;
  std::string name_;
  int imin_ = 0, jmin_ = 0, nx_ = 0, ny_ = 0;
  std::vector<int> grid_;
  std::vector<Site> sites_;
  int n_interior_ = 0;

  struct Cache {
    std::once_flag once;
    std::shared_ptr<const DirichletSolver> solver;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Sparse Cholesky factorization of the 4-neighbour Dirichlet Laplacian
/// restricted to a subset S of interior sites (diagonal 4, -1 per neighbour
/// in S). Sites outside S act as Dirichlet data.
class DirichletSolver {
public:
  using SparseMatrix = Eigen::SparseMatrix<double>;
  using Factor = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower,
                                      Eigen::AMDOrdering<int>>;

  DirichletSolver(const LatticeDomain &L, std::vector<int> subset)
      : subset_(std::move(subset)) {
    if (subset_.empty())
      throw NumericalError("Dirichlet solver: empty site set");
    local_.assign(L.n_sites(), -1);
    for (std::size_t q = 0; q < subset_.size(); ++q) {
      if (!L.is_interior(subset_[q]))
        throw DomainError("Dirichlet solver: subset must contain interior sites");
      local_[subset_[q]] = static_cast<int>(q);
    }
    const int n = static_cast<int>(subset_.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);
    for (int q = 0; q < n; ++q) {
      trip.emplace_back(q, q, 4.0);
      for (int nb : L.neighbours(subset_[q])) {
        const int p = local_[nb];
        if (p >= 0)
          trip.emplace_back(q, p, -1.0);
        else
          frontier_.push_back({q, nb});
      }
    }
    SparseMatrix A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    factor_.compute(A);
    if (factor_.info() != Eigen::Success)
      throw NumericalError("Dirichlet solver: factorization failed");
  }

  DirichletSolver(const LatticeDomain &L)
      : DirichletSolver(L, all_interior(L)) {}

  const std::vector<int> &subset() const { return subset_; }
  int size() const { return static_cast<int>(subset_.size()); }
  /// Local index of a site in the subset, or -1.
  int local(int site) const { return local_[site]; }

  Eigen::VectorXd solve(const Eigen::VectorXd &rhs) const {
    return factor_.solve(rhs);
  }

  /// Discretely harmonic extension into S of the data `values` given on the
  /// sites adjacent to S. Returns a full site field: equal to `values` off S.
  std::vector<double> harmonic_extension(std::span<const double> values) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size());
    for (const auto &[q, nb] : frontier_)
      rhs[q] += values[nb];
    const Eigen::VectorXd x = solve(rhs);
    std::vector<double> out(values.begin(), values.end());
    for (int q = 0; q < size(); ++q)
      out[subset_[q]] = x[q];
    return out;
  }

  /// Adjoint of harmonic extension: given weights on S, returns the weights on
  /// the frontier sites that reproduce sum_q w_q * H(values)_q.
  std::vector<std::pair<int, double>>
  extension_adjoint(const Eigen::VectorXd &weights) const {
    const Eigen::VectorXd g = solve(weights);
    std::vector<std::pair<int, double>> out;
    out.reserve(frontier_.size());
    for (const auto &[q, nb] : frontier_)
      out.emplace_back(nb, g[q]);
    return out;
  }

  /// x = L^{-T} P z: covariance of x is the inverse Laplacian.
  Eigen::VectorXd apply_inverse_sqrt(const Eigen::VectorXd &z) const {
    Eigen::VectorXd y = factor_.matrixU().solve(z);
    return factor_.permutationPinv() * y;
  }

  /// Transpose of apply_inverse_sqrt: for a weight vector w on S, the
  /// coefficients b with w . apply_inverse_sqrt(z) = b . z for every z.
  Eigen::VectorXd apply_inverse_sqrt_transpose(const Eigen::VectorXd &w) const {
    Eigen::VectorXd pw = factor_.permutationP() * w;
    return factor_.matrixL().solve(pw);
  }

private:
  static std::vector<int> all_interior(const LatticeDomain &L) {
    std::vector<int> s(L.n_interior());
    for (int k = 0; k < L.n_interior(); ++k)
      s[k] = k;
    return s;
  }

  std::vector<int> subset_;
  std::vector<int> local_;
  std::vector<std::pair<int, int>> frontier_; // (local row, outside site)
  Factor factor_;
};

inline const DirichletSolver &LatticeDomain::solver() const {
  std::call_once(cache_->once,
                 [this] { cache_->solver = std::make_shared<const DirichletSolver>(*this); });
  return *cache_->solver;
}

} // namespace gffforge
