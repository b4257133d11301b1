#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gffforge/errors.hpp"
#include "gffforge/greens.hpp"
#include "gffforge/lattice.hpp"
#include "gffforge/parallel.hpp"
#include "gffforge/random.hpp"
#include "gffforge/test_function.hpp"

namespace gffforge {

/// Multiplier taking the inverse Dirichlet Laplacian (diagonal 4, which
/// behaves like log/(2 pi)) to the continuum normalization G = log + ....
/// `calibrate` re-derives it from lattice data.
inline const double kLatticeCalibration = std::sqrt(2.0 * std::numbers::pi);

enum class Law { GFF, Stable };

inline std::string law_name(Law law) { return law == Law::GFF ? "gff" : "stable"; }

struct FieldSample {
  LatticeDomain lattice;
  std::vector<double> values; // one per site; 0 on boundary sites
  Law law = Law::GFF;
  double alpha = 2.0;
  std::uint64_t seed = 0;
  double calibration = 1.0;
};

// ---------------------------------------------------------------------------
// Exact Gaussian observables

/// Draws rows of a centered Gaussian vector with covariance `cov` through a
/// pivoted LDL^T factorization (semi-definite matrices allowed). Row k uses
/// the derived seed of index k.
class GaussianSampler {
public:
  explicit GaussianSampler(const Eigen::MatrixXd &cov) {
    const int n = static_cast<int>(cov.rows());
    if (n == 0)
      return;
    const double tr = std::max(cov.trace(), 1e-300);
    Eigen::MatrixXd A = cov;
    for (int attempt = 0; attempt < 2; ++attempt) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
      if (ldlt.info() == Eigen::Success) {
        Eigen::VectorXd d = ldlt.vectorD();
        if (d.minCoeff() >= -1e-8 * tr) {
          d = d.cwiseMax(0.0).cwiseSqrt();
          Eigen::MatrixXd Lm = ldlt.matrixL();
          factor_ = ldlt.transpositionsP().transpose() * (Lm * d.asDiagonal());
          return;
        }
      }
      A.diagonal().array() += 1e-10 * tr;
    }
    throw NumericalError("Gaussian sampler: factorization failed after jitter");
  }

  std::size_t dimension() const { return static_cast<std::size_t>(factor_.rows()); }
  const Eigen::MatrixXd &factor() const { return factor_; }

  Eigen::VectorXd draw(Rng &rng) const {
    Eigen::VectorXd z(factor_.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z[i] = rng.normal();
    return factor_ * z;
  }

private:
  Eigen::MatrixXd factor_;
};

/// n_samples x n_observables matrix of i.i.d. rows with covariance `cov`.
inline Eigen::MatrixXd sample_gff_observables(const CovarianceMatrix &cov,
                                              std::size_t n_samples,
                                              std::uint64_t seed) {
  cov.check();
  const GaussianSampler sampler(cov.entries());
  Eigen::MatrixXd out(n_samples, cov.size());
  parallel_for(n_samples, [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    out.row(k) = sampler.draw(rng).transpose();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Lattice fields

namespace detail {

inline Eigen::VectorXd noise(std::size_t n, Law law, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd z(n);
  for (std::size_t i = 0; i < n; ++i)
    z[i] = law == Law::GFF ? rng.normal() : rng.stable(alpha);
  return z;
}

inline FieldSample filtered_sample(const LatticeDomain &L, Law law, double alpha,
                                   std::uint64_t seed, double calibration) {
  const auto &S = L.solver();
  const Eigen::VectorXd x =
      S.apply_inverse_sqrt(noise(S.size(), law, alpha, seed)) * calibration;
  FieldSample s{L, std::vector<double>(L.n_sites(), 0.0), law, alpha, seed, calibration};
  for (int q = 0; q < S.size(); ++q)
    s.values[S.subset()[q]] = x[q];
  return s;
}

} // namespace detail

/// Discrete GFF: covariance calibration^2 times the inverse Dirichlet Laplacian.
inline FieldSample sample_dgff(const LatticeDomain &L, std::uint64_t seed,
                               double calibration = kLatticeCalibration) {
  return detail::filtered_sample(L, Law::GFF, 2.0, seed, calibration);
}

/// Same square-root filter applied to i.i.d. symmetric alpha-stable noise.
inline FieldSample sample_stable_field(const LatticeDomain &L, double alpha,
                                       std::uint64_t seed,
                                       double calibration = kLatticeCalibration) {
  require_stable_index(alpha);
  return detail::filtered_sample(L, Law::Stable, alpha, seed, calibration);
}

// ---------------------------------------------------------------------------
// Linear functionals of lattice fields

/// Dense weight vector w over all sites: the functional is sum_k w_k h_k.
using SiteWeights = Eigen::VectorXd;

inline double apply_weights(const SiteWeights &w, std::span<const double> values) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k)
    if (w[k] != 0.0)
      s += w[k] * values[k];
  return s;
}

/// Riemann-sum weights a^2 phi(site) of the pairing (h, phi).
inline SiteWeights pairing_weights(const LatticeDomain &L, const TestFunction &phi) {
  SiteWeights w = SiteWeights::Zero(L.n_sites());
  const double a2 = L.spacing() * L.spacing();
  for (int k = 0; k < L.n_interior(); ++k)
    w[k] = a2 * phi(L.embedding(k));
  return w;
}

/// (h, phi) := a^2 sum_x h(x) phi(x).
inline double evaluate(const FieldSample &s, const TestFunction &phi) {
  return apply_weights(pairing_weights(s.lattice, phi), s.values);
}

/// Weights of the point evaluation at z by bilinear interpolation.
inline SiteWeights interpolation_weights(const LatticeDomain &L, Point z) {
  SiteWeights w = SiteWeights::Zero(L.n_sites());
  for (const auto &[k, wt] : L.bilinear(z))
    if (wt != 0.0)
      w[k] += wt;
  return w;
}

/// Pulls a functional back through harmonic extension in the solver's set S:
/// returns v with v . h = w . H_S(h) for every field h.
inline SiteWeights through_harmonic_extension(const DirichletSolver &S,
                                              const SiteWeights &w) {
  SiteWeights v = w;
  Eigen::VectorXd inside(S.size());
  for (int q = 0; q < S.size(); ++q) {
    inside[q] = w[S.subset()[q]];
    v[S.subset()[q]] = 0.0;
  }
  for (const auto &[site, wt] : S.extension_adjoint(inside))
    v[site] += wt;
  return v;
}

/// Samples of a family of linear functionals of the lattice field, drawn
/// without materializing the field: sample k uses the same noise vector as
/// sample_dgff / sample_stable_field with seed derive_seed(seed, k), so the
/// values agree with evaluating those fields.
class FunctionalSampler {
public:
  FunctionalSampler(const LatticeDomain &L, const std::vector<SiteWeights> &functionals,
                    double calibration = kLatticeCalibration)
      : n_interior_(L.n_interior()) {
    const auto &S = L.solver();
    for (const auto &w : functionals) {
      if (w.size() != L.n_sites())
        throw DomainError("functional sampler: weight vector has wrong size");
      Eigen::VectorXd local(S.size());
      for (int q = 0; q < S.size(); ++q)
        local[q] = w[S.subset()[q]];
      coef_.push_back(S.apply_inverse_sqrt_transpose(local) * calibration);
    }
  }

  std::size_t size() const { return coef_.size(); }

  /// Exact variance of functional j under the Gaussian law.
  double gaussian_variance(std::size_t j) const { return coef_[j].squaredNorm(); }
  double gaussian_covariance(std::size_t i, std::size_t j) const {
    return coef_[i].dot(coef_[j]);
  }

  /// n x size() matrix of samples.
  Eigen::MatrixXd sample(std::size_t n, std::uint64_t seed, Law law = Law::GFF,
                         double alpha = 2.0) const {
    if (law == Law::Stable)
      require_stable_index(alpha);
    Eigen::MatrixXd out(n, coef_.size());
    parallel_for(n, [&](std::size_t k) {
      const Eigen::VectorXd z = detail::noise(n_interior_, law, alpha, derive_seed(seed, k));
      for (std::size_t j = 0; j < coef_.size(); ++j)
        out(k, j) = coef_[j].dot(z);
    });
    return out;
  }

private:
  int n_interior_;
  std::vector<Eigen::VectorXd> coef_;
};

// ---------------------------------------------------------------------------
// Domain-Markov decomposition

struct MarkovDecomposition {
  std::vector<int> subdomain_sites;
  std::vector<double> harmonic_part;
  std::vector<double> residual;
};

/// Throws DomainError unless `sub` is a non-empty connected set of interior sites.
inline void require_connected(const LatticeDomain &L, const std::vector<int> &sub) {
  if (sub.empty())
    throw DomainError("markov_decompose: empty subdomain");
  std::vector<char> in(L.n_sites(), 0), seen(L.n_sites(), 0);
  for (int k : sub) {
    if (!L.is_interior(k))
      throw DomainError("markov_decompose: subdomain must contain interior sites");
    in[k] = 1;
  }
  std::deque<int> queue{sub.front()};
  seen[sub.front()] = 1;
  std::size_t reached = 0;
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    ++reached;
    for (int nb : L.neighbours(k))
      if (nb >= 0 && in[nb] && !seen[nb]) {
        seen[nb] = 1;
        queue.push_back(nb);
      }
  }
  if (reached != sub.size())
    throw DomainError("markov_decompose: subdomain is not connected");
}

/// Decomposition with a prebuilt solver for the subdomain.
inline MarkovDecomposition markov_decompose(const std::vector<double> &values,
                                            const DirichletSolver &S) {
  MarkovDecomposition m;
  m.subdomain_sites = S.subset();
  m.harmonic_part = S.harmonic_extension(values);
  m.residual.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    m.residual[k] = values[k] - m.harmonic_part[k];
  // exact zero off the subdomain, not just to solver precision
  std::vector<char> in(values.size(), 0);
  for (int k : S.subset())
    in[k] = 1;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (!in[k]) {
      m.residual[k] = 0.0;
      m.harmonic_part[k] = values[k];
    }
  return m;
}

inline MarkovDecomposition markov_decompose(const FieldSample &s, const std::vector<int> &sub) {
  require_connected(s.lattice, sub);
  const DirichletSolver S(s.lattice, sub);
  return markov_decompose(s.values, S);
}

// ---------------------------------------------------------------------------
// Binary grid files

struct GridFile {
  double spacing = 1.0;
  int imin = 0, jmin = 0, nx = 0, ny = 0;
  Law law = Law::GFF;
  double alpha = 2.0;
  std::uint64_t seed = 0;
  std::vector<double> values; // row-major, index (i - imin) * ny + (j - jmin)
};

namespace detail {

template <class T> void put(std::ostream &os, T v) {
  static_assert(std::endian::native == std::endian::little);
  os.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template <class T> T get(std::istream &is) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof v);
  if (!is)
    throw DomainError("grid file: truncated");
  return v;
}

} // namespace detail

inline void write_grid(std::ostream &os, const FieldSample &s) {
  const auto &L = s.lattice;
  os.write("GFFS", 4);
  detail::put<std::uint32_t>(os, 1);
  detail::put<double>(os, L.spacing());
  detail::put<std::int32_t>(os, L.imin());
  detail::put<std::int32_t>(os, L.jmin());
  detail::put<std::int32_t>(os, L.nx());
  detail::put<std::int32_t>(os, L.ny());
  detail::put<std::uint32_t>(os, s.law == Law::GFF ? 0u : 1u);
  detail::put<double>(os, s.alpha);
  detail::put<std::uint64_t>(os, s.seed);
  for (int i = 0; i < L.nx(); ++i)
    for (int j = 0; j < L.ny(); ++j) {
      const int k = L.index(L.imin() + i, L.jmin() + j);
      detail::put<double>(os, k >= 0 ? s.values[k] : 0.0);
    }
}

inline GridFile read_grid(std::istream &is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GFFS", 4) != 0)
    throw DomainError("grid file: bad magic");
  if (detail::get<std::uint32_t>(is) != 1)
    throw DomainError("grid file: unsupported version");
  GridFile g;
  g.spacing = detail::get<double>(is);
  g.imin = detail::get<std::int32_t>(is);
  g.jmin = detail::get<std::int32_t>(is);
  g.nx = detail::get<std::int32_t>(is);
  g.ny = detail::get<std::int32_t>(is);
  g.law = detail::get<std::uint32_t>(is) == 0 ? Law::GFF : Law::Stable;
  g.alpha = detail::get<double>(is);
  g.seed = detail::get<std::uint64_t>(is);
  g.values.resize(static_cast<std::size_t>(g.nx) * g.ny);
  for (auto &v : g.values)
    v = detail::get<double>(is);
  return g;
}

} // namespace gffforge
