#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mimocap/common.hpp"
#include "mimocap/sphere.hpp"

namespace mimocap {

/**
 * Finite-rank scattering environment
 *
 *   s(Or, Ot) = sum_{j,k} c_{jk} f_j(Or) g_k(Ot)^H
 *
 * where each mode f_j, g_k is a six-component field on the sphere given by
 * harmonic coefficients (6 rows, one column per (l, m) in basis order).
 * The induced integral operator has rank at most N = dim(c).
 */
struct ScattererSet {
  Mat c;                        // N x N coupling coefficients
  std::vector<Mat> left_modes;  // N matrices, 6 x (band+1)^2
  std::vector<Mat> right_modes;
  int band = 0;  // largest harmonic degree used by the modes

  int rank() const { return static_cast<int>(c.rows()); }
};

inline void validate_scatterer_set(const ScattererSet& set) {
  const int n = set.rank();
  if (n < 1 || set.c.cols() != n)
    throw std::invalid_argument("ScattererSet: coupling matrix must be square and nonempty");
  if (static_cast<int>(set.left_modes.size()) != n ||
      static_cast<int>(set.right_modes.size()) != n)
    throw std::invalid_argument("ScattererSet: need exactly N left and N right modes");
  const int K = (set.band + 1) * (set.band + 1);
  for (const auto& m : set.left_modes)
    if (m.rows() != 6 || m.cols() != K)
      throw std::invalid_argument("ScattererSet: left mode has wrong coefficient shape");
  for (const auto& m : set.right_modes)
    if (m.rows() != 6 || m.cols() != K)
      throw std::invalid_argument("ScattererSet: right mode has wrong coefficient shape");
}

/// Seeded generator for band-limited sets with unit-norm modes. The mode
/// L2 norm equals the coefficient norm because the basis is orthonormal.
inline ScattererSet make_random_scatterer_set(int n, int band, std::uint64_t seed,
                                              double coeff_scale = 1.0) {
  if (n < 1) throw std::invalid_argument("make_random_scatterer_set: rank must be >= 1");
  if (band < 0) throw std::invalid_argument("make_random_scatterer_set: band must be >= 0");
  Rng rng(Rng::derive(seed, 0x5e7));
  const int K = (band + 1) * (band + 1);
  ScattererSet set;
  set.band = band;
  set.c.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) set.c(i, j) = coeff_scale * rng.cnormal();
  auto draw_mode = [&]() {
    Mat m(6, K);
    for (int col = 0; col < K; ++col)
      for (int row = 0; row < 6; ++row) m(row, col) = rng.cnormal();
    return Mat(m / m.norm());
  };
  for (int j = 0; j < n; ++j) set.left_modes.push_back(draw_mode());
  for (int j = 0; j < n; ++j) set.right_modes.push_back(draw_mode());
  return set;
}

/**
 * Smooth concentrated environment
 *
 *   s(Or, Ot) = A * exp(kappa * (u(Or).u(mu_r) + u(Ot).u(mu_t) - 2))
 *
 * with a 6x6 amplitude matrix A. The kernel peaks at (mu_r, mu_t) with value
 * exactly A and decays like a von Mises-Fisher bump in both angles, so its
 * harmonic coefficients fall off superpolynomially with degree.
 */
struct SmoothSpread {
  double kappa = 1.0;
  Mat6 amplitude = Mat6::Identity();
  Direction mu_r;
  Direction mu_t;

  Mat6 value(const Direction& dr, const Direction& dt) const {
    const double ex = kappa * (dr.unit().dot(mu_r.unit()) + dt.unit().dot(mu_t.unit()) - 2.0);
    return amplitude * std::exp(ex);
  }
};

/**
 * A 6x6 matrix kernel s(q, q') sampled on node pairs of one grid.
 *
 * The flattened, weighted sample matrix
 *
 *   S_w[(6q+i), (6q'+j)] = sqrt(w_q) s_{ij}(q, q') sqrt(w_{q'})
 *
 * is held as the factorization S_w = L R^H. Every kernel produced here is
 * exactly low rank (at most N for finite-rank sets, at most 6 for smooth
 * kernels), so the factors carry the kernel losslessly while staying
 * affordable at resolutions where the dense flattened matrix would not fit
 * in memory. value_at reconstructs the dense 6x6 block for any node pair.
 */
struct SpreadSamples {
  QuadratureGrid grid;
  Mat L;  // 6Q x r
  Mat R;  // 6Q x r

  int rank_bound() const { return static_cast<int>(L.cols()); }

  Mat6 value_at(int q, int qp) const {
    return (L.middleRows(6 * q, 6) * R.middleRows(6 * qp, 6).adjoint()) /
           (grid.sqrt_w(q) * grid.sqrt_w(qp));
  }
};

/// Weighted samples of one six-component mode: out[(6q+i)] = sqrt(w_q) f_i(q).
inline Vec sample_mode(const Mat& coeffs, const ShBasis& sh) {
  const int Q = sh.grid.size();
  Vec out(6 * Q);
  // weighted basis columns are orthonormal, synthesis is one product per component
  for (int i = 0; i < 6; ++i) {
    Vec comp = sh.weighted * coeffs.row(i).transpose();
    for (int q = 0; q < Q; ++q) out(6 * q + i) = comp(q);
  }
  return out;
}

inline SpreadSamples sample_finite_rank(const ScattererSet& set, const QuadratureGrid& grid) {
  validate_scatterer_set(set);
  if (set.band > grid.resolution - 1)
    throw std::invalid_argument(
        "sample_finite_rank: mode band " + std::to_string(set.band) +
        " exceeds the exactness band of a resolution " + std::to_string(grid.resolution) +
        " grid");
  const ShBasis sh = build_sh_basis(grid, set.band);
  const int n = set.rank();
  Mat F(6 * grid.size(), n), G(6 * grid.size(), n);
  for (int j = 0; j < n; ++j) {
    F.col(j) = sample_mode(set.left_modes[j], sh);
    G.col(j) = sample_mode(set.right_modes[j], sh);
  }
  SpreadSamples s;
  s.grid = grid;
  s.L.noalias() = F * set.c;
  s.R = std::move(G);
  return s;
}

inline SpreadSamples sample_smooth(const SmoothSpread& spread, const QuadratureGrid& grid) {
  if (!(spread.kappa >= 0.0))
    throw std::invalid_argument("sample_smooth: concentration must be >= 0");
  const int Q = grid.size();
  RVec gr(Q), gt(Q);
  const Vec3 ur = spread.mu_r.unit(), ut = spread.mu_t.unit();
  for (int q = 0; q < Q; ++q) {
    const Vec3 u = grid.nodes[q].unit();
    gr(q) = grid.sqrt_w(q) * std::exp(spread.kappa * (u.dot(ur) - 1.0));
    gt(q) = grid.sqrt_w(q) * std::exp(spread.kappa * (u.dot(ut) - 1.0));
  }

  Eigen::JacobiSVD<Mat6> svd(spread.amplitude, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int r = 0;
  while (r < 6 && sv(r) > sv(0) * 1e-14 && sv(r) > 0.0) ++r;

  SpreadSamples s;
  s.grid = grid;
  s.L.resize(6 * Q, r);
  s.R.resize(6 * Q, r);
  for (int a = 0; a < r; ++a) {
    const double root = std::sqrt(sv(a));
    for (int q = 0; q < Q; ++q) {
      s.L.block<6, 1>(6 * q, a) = (root * gr(q)) * svd.matrixU().col(a);
      s.R.block<6, 1>(6 * q, a) = (root * gt(q)) * svd.matrixV().col(a);
    }
  }
  return s;
}

/// Hilbert-Schmidt norm of the sampled kernel, sqrt(sum w w' |s|_F^2).
inline double hs_norm(const SpreadSamples& s) {
  if (s.L.cols() == 0) return 0.0;
  const Mat gl = s.L.adjoint() * s.L;
  const Mat gr = s.R.adjoint() * s.R;
  return std::sqrt(std::max(0.0, (gl * gr).trace().real()));
}

/// Harmonic mass of a sampled kernel per basis column of the left variable,
/// plus the mass falling outside the basis band entirely.
struct DegreeMassProfile {
  RVec per_column;      // K entries, HS mass (squared) attributed to each column
  double total_sq = 0;  // full squared HS norm
  double out_of_band_sq = 0;
};

inline DegreeMassProfile degree_mass_profile(const SpreadSamples& s, const ShBasis& sh) {
  if (!sh.grid.same_layout(s.grid))
    throw std::invalid_argument("degree_mass_profile: basis grid differs from sample grid");
  const int Q = s.grid.size();
  const int K = sh.dim();
  const int r = static_cast<int>(s.L.cols());
  const Mat gr = s.R.adjoint() * s.R;  // r x r

  DegreeMassProfile p;
  p.per_column = RVec::Zero(K);
  if (r == 0) return p;

  Mat comp(Q, r);
  for (int i = 0; i < 6; ++i) {
    for (int q = 0; q < Q; ++q) comp.row(q) = s.L.row(6 * q + i);
    const Mat coef = sh.weighted.transpose() * comp;  // K x r
    // residual against the projection, computed directly so an exactly
    // band-limited kernel measures a tail at roundoff rather than at the
    // sqrt of the subtraction cancellation
    const Mat resid = comp - sh.weighted * coef;
    p.total_sq += ((comp.adjoint() * comp) * gr).trace().real();
    p.out_of_band_sq += std::max(0.0, ((resid.adjoint() * resid) * gr).trace().real());
    for (int kcol = 0; kcol < K; ++kcol)
      p.per_column(kcol) += (coef.row(kcol) * gr * coef.row(kcol).adjoint())(0, 0).real();
  }
  return p;
}

/// Fraction of HS norm (not squared mass) outside the basis band.
inline double out_of_band_fraction(const DegreeMassProfile& p) {
  if (p.total_sq <= 0.0) return 0.0;
  return std::sqrt(p.out_of_band_sq / p.total_sq);
}

inline constexpr double kBandTailTolerance = 1e-8;

/**
 * Kernel of L_B^n applied to the left variable of the sampled kernel, where
 * L_B is the (sign flipped) spherical Laplacian with eigenvalue l(l+1) on
 * degree l. Harmonic coefficients of the left variable are scaled by
 * (l(l+1))^n and re-synthesized.
 *
 * Requires the kernel to be effectively band-limited to the basis: no more
 * than 1e-8 of its HS norm may sit above degree l_max, otherwise a
 * BandLimitError carrying the measured fraction is thrown. n = 0 returns
 * the samples unchanged.
 */
inline SpreadSamples apply_lb_power(const SpreadSamples& s, const ShBasis& sh, int n) {
  if (n < 0) throw std::invalid_argument("apply_lb_power: power must be >= 0");
  if (!sh.grid.same_layout(s.grid))
    throw std::invalid_argument("apply_lb_power: basis grid differs from sample grid");

  const DegreeMassProfile profile = degree_mass_profile(s, sh);
  const double tail = out_of_band_fraction(profile);
  if (tail > kBandTailTolerance)
    throw BandLimitError("apply_lb_power: kernel carries " + format_g17(tail) +
                             " of its norm above the basis band limit",
                         tail);
  if (n == 0) return s;

  const int Q = s.grid.size();
  const int r = static_cast<int>(s.L.cols());
  RVec scale(sh.dim());
  for (int kcol = 0; kcol < sh.dim(); ++kcol) scale(kcol) = std::pow(sh.lb_eigs(kcol), n);

  SpreadSamples out;
  out.grid = s.grid;
  out.R = s.R;
  out.L.resize(6 * Q, r);
  Mat comp(Q, r);
  for (int i = 0; i < 6; ++i) {
    for (int q = 0; q < Q; ++q) comp.row(q) = s.L.row(6 * q + i);
    Mat coef = sh.weighted.transpose() * comp;
    coef = scale.asDiagonal() * coef;
    const Mat synth = sh.weighted * coef;
    for (int q = 0; q < Q; ++q) out.L.row(6 * q + i) = synth.row(q);
  }
  return out;
}

}  // namespace mimocap
