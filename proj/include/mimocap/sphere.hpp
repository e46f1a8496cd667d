#pragma once

#include <cmath>
#include <vector>

#include "mimocap/common.hpp"

namespace mimocap {

/// Point on the unit sphere, colatitude theta in [0, pi], azimuth phi in [0, 2pi).
struct Direction {
  double theta = 0.0;
  double phi = 0.0;

  Vec3 unit() const {
    const double st = std::sin(theta);
    return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
  }
};

/**
 * Quadrature rule on the unit sphere.
 *
 * The rule is a tensor product of an n-point Gauss-Legendre rule in
 * cos(theta) with a 2n-point uniform rule in azimuth, where n is the
 * `resolution`. It has Q = 2n^2 nodes, strictly positive weights summing to
 * 4pi, and integrates products of spherical harmonics exactly as long as
 * both degrees stay at or below n-1 (the polar polynomial degree stays
 * below 2n and the azimuthal wavenumber below 2n, which is the exactness
 * band of the two factor rules).
 */
struct QuadratureGrid {
  int resolution = 0;
  std::vector<Direction> nodes;
  RVec w;       // quadrature weights, one per node
  RVec sqrt_w;  // cached square roots, used by every weighted flattening

  int size() const { return static_cast<int>(nodes.size()); }

  bool same_layout(const QuadratureGrid& other) const {
    return resolution == other.resolution && size() == other.size();
  }
};

namespace detail {

/// Legendre polynomial value and derivative at x via the three-term recurrence.
inline std::pair<double, double> legendre_pair(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  double d = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, d};
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
inline void gauss_legendre(int n, RVec& x, RVec& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi-style initial guess, then Newton on P_n.
    double xi = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double p = 0.0, dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      auto [pv, dv] = legendre_pair(n, xi);
      p = pv;
      dp = dv;
      double step = p / dp;
      xi -= step;
      if (std::abs(step) < 1e-15) break;
    }
    auto [pv, dv] = legendre_pair(n, xi);
    double wi = 2.0 / ((1.0 - xi * xi) * dv * dv);
    x(i) = -xi;
    x(n - 1 - i) = xi;
    w(i) = wi;
    w(n - 1 - i) = wi;
  }
  if (n % 2 == 1) x(n / 2) = 0.0;
}

}  // namespace detail

/// Build the tensor-product quadrature grid at the given resolution (n >= 1).
inline QuadratureGrid build_grid(int resolution) {
  if (resolution < 1) throw std::invalid_argument("build_grid: resolution must be >= 1");
  const int n = resolution;
  const int n_az = 2 * n;
  RVec gx, gw;
  detail::gauss_legendre(n, gx, gw);

  QuadratureGrid grid;
  grid.resolution = n;
  grid.nodes.resize(static_cast<std::size_t>(n) * n_az);
  grid.w.resize(n * n_az);
  const double az_weight = 2.0 * kPi / n_az;
  for (int i = 0; i < n; ++i) {
    const double theta = std::acos(gx(i));
    for (int j = 0; j < n_az; ++j) {
      const int q = i * n_az + j;
      grid.nodes[q] = {theta, (2.0 * kPi * j) / n_az};
      grid.w(q) = gw(i) * az_weight;
    }
  }
  grid.sqrt_w = grid.w.cwiseSqrt();
  return grid;
}

/// Quadrature sum of sampled values against the grid weights.
inline double integrate(const QuadratureGrid& grid, const RVec& samples) {
  if (samples.size() != grid.w.size())
    throw std::invalid_argument("integrate: sample count does not match grid");
  return grid.w.dot(samples);
}

inline cplx integrate(const QuadratureGrid& grid, const Vec& samples) {
  if (samples.size() != grid.w.size())
    throw std::invalid_argument("integrate: sample count does not match grid");
  return (grid.w.cast<cplx>().asDiagonal() * samples).sum();
}

/**
 * Real orthonormal spherical harmonics sampled on a grid.
 *
 * Columns are ordered lexicographically in (l, m) with m running from -l to
 * l inside each degree, so column l^2 + l + m holds Y_{l,m}. The convention
 * is
 *
 *   Y_{l,0}      = N_{l,0} P_l(cos theta)
 *   Y_{l,m>0}   = sqrt(2) N_{l,m} P_l^m(cos theta) cos(m phi)
 *   Y_{l,m<0}   = sqrt(2) N_{l,|m|} P_l^{|m|}(cos theta) sin(|m| phi)
 *
 * with N_{l,m} the full orthonormalization factor including 1/sqrt(4pi).
 * The normalized associated Legendre values are generated by the standard
 * stable diagonal-then-upward recurrences, so the basis stays accurate far
 * beyond the degrees used here.
 *
 * `lb_eigs` holds l(l+1) per column: the basis diagonalizes the (sign
 * flipped) spherical Laplacian with those eigenvalues, which is what every
 * smoothing-power and truncation routine keys on.
 */
struct ShBasis {
  QuadratureGrid grid;
  int l_max = 0;
  RMat values;    // Q x K raw samples, K = (l_max + 1)^2
  RMat weighted;  // sqrt(w)-scaled rows; columns orthonormal in plain ell^2
  RVec lb_eigs;   // l(l+1) per column

  int dim() const { return static_cast<int>(values.cols()); }
};

inline int sh_index(int l, int m) { return l * l + l + m; }

inline ShBasis build_sh_basis(const QuadratureGrid& grid, int l_max) {
  if (l_max < 0) throw std::invalid_argument("build_sh_basis: l_max must be >= 0");
  if (l_max > grid.resolution - 1)
    throw std::invalid_argument(
        "build_sh_basis: l_max " + std::to_string(l_max) +
        " exceeds the exactness band of a resolution " +
        std::to_string(grid.resolution) + " grid (max " +
        std::to_string(grid.resolution - 1) + ")");

  const int Q = grid.size();
  const int K = (l_max + 1) * (l_max + 1);
  ShBasis sh;
  sh.grid = grid;
  sh.l_max = l_max;
  sh.values.resize(Q, K);
  sh.lb_eigs.resize(K);
  for (int l = 0; l <= l_max; ++l)
    for (int m = -l; m <= l; ++m) sh.lb_eigs(sh_index(l, m)) = double(l) * (l + 1);

  // Normalized associated Legendre table per node, then azimuthal factors.
  std::vector<double> plm(static_cast<std::size_t>(l_max + 1) * (l_max + 1));
  auto at = [l_max, &plm](int l, int m) -> double& {
    return plm[static_cast<std::size_t>(m) * (l_max + 1) + l];
  };
  for (int q = 0; q < Q; ++q) {
    const double x = std::cos(grid.nodes[q].theta);
    const double s = std::sin(grid.nodes[q].theta);
    at(0, 0) = 1.0 / std::sqrt(kFourPi);
    for (int m = 1; m <= l_max; ++m)
      at(m, m) = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * at(m - 1, m - 1);
    for (int m = 0; m < l_max; ++m)
      at(m + 1, m) = std::sqrt(2.0 * m + 3.0) * x * at(m, m);
    for (int m = 0; m <= l_max; ++m) {
      for (int l = m + 2; l <= l_max; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
        const double b =
            std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * double(l - 1) * (l - 1) - 1.0));
        at(l, m) = a * (x * at(l - 1, m) - b * at(l - 2, m));
      }
    }
    const double phi = grid.nodes[q].phi;
    for (int l = 0; l <= l_max; ++l) {
      sh.values(q, sh_index(l, 0)) = at(l, 0);
      for (int m = 1; m <= l; ++m) {
        const double base = std::sqrt(2.0) * at(l, m);
        sh.values(q, sh_index(l, m)) = base * std::cos(m * phi);
        sh.values(q, sh_index(l, -m)) = base * std::sin(m * phi);
      }
    }
  }
  sh.weighted = grid.sqrt_w.asDiagonal() * sh.values;
  return sh;
}

/**
 * Eigenvalue-counting dimensions for the spherical Laplacian.
 *
 * scalar_dim(E) counts the harmonics with l(l+1) <= E (equality included),
 * which is (L+1)^2 for the largest admissible degree L. six_dim is the same
 * count on six-component fields, exactly six times larger. The ratios
 * scalar_dim/E and six_dim/(6E) approach 1 as E grows, which the counting
 * tests pin at E = 100, 1000, 10000.
 */
struct WeylCount {
  long l_max = 0;
  long scalar_dim = 0;
  long six_dim = 0;
};

inline WeylCount weyl_count(double E) {
  if (!(E >= 0.0)) throw std::invalid_argument("weyl_count: E must be >= 0");
  long L = 0;
  while (double(L + 1) * (L + 2) <= E) ++L;
  // L is now the largest degree with L(L+1) <= E.
  WeylCount c;
  c.l_max = L;
  c.scalar_dim = (L + 1) * (L + 1);
  c.six_dim = 6 * c.scalar_dim;
  return c;
}

}  // namespace mimocap
