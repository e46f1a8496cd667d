#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mimocap/common.hpp"
#include "mimocap/operators.hpp"
#include "mimocap/spread.hpp"

namespace mimocap {

enum class Route { direct, fredholm, finite_rank };

inline const char* route_name(Route r) {
  switch (r) {
    case Route::direct: return "direct";
    case Route::fredholm: return "fredholm";
    default: return "finite_rank";
  }
}

/// Nearest integer, ties rounded up: the M_R = a*M bookkeeping rule.
inline int round_ties_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

struct CapacityResult {
  double bits = 0.0;
  Route route = Route::direct;
  std::vector<double> eigenvalues_used;  // SNR-scaled: bits = sum log2(1 + s_j)
  int grid_resolution = 0;
  SnrConfig snr;
  int m_t = 0;
  int m_r = 0;
};

namespace detail {

inline double bits_from_scaled_eigs(const std::vector<double>& s) {
  double nats = 0.0;
  for (double v : s) nats += std::log1p(v);
  return nats / kLn2;
}

}  // namespace detail

/**
 * Direct route: log2 det(I + E_T/(M_T N_0) H H^H) through the singular
 * values of H, the numerically stable form of the log determinant.
 */
inline CapacityResult capacity_direct(const ChannelMatrix& h, const SnrConfig& snr, int m_t,
                                      int grid_resolution = 0) {
  validate_snr(snr);
  if (m_t != h.tx_count())
    throw std::invalid_argument("capacity_direct: M_T must equal the channel column count");
  if (!h.entries.allFinite())
    throw std::invalid_argument("capacity_direct: non-finite channel entries");
  const double scale = snr.gamma() / m_t;
  const RVec sv = singular_values(h.entries);
  CapacityResult res;
  res.route = Route::direct;
  res.snr = snr;
  res.m_t = m_t;
  res.m_r = h.rx_count();
  res.grid_resolution = grid_resolution;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double s = scale * sv(i) * sv(i);
    if (s > 0.0) res.eigenvalues_used.push_back(s);
  }
  res.bits = detail::bits_from_scaled_eigs(res.eigenvalues_used);
  return res;
}

/**
 * Fredholm route: the same capacity through the spectrum of
 * K = sqrt(A_T) S^* A_R S sqrt(A_T), whose nonzero eigenvalues coincide
 * with those of H H^H.
 */
inline CapacityResult capacity_fredholm(const BlockOperator& k, const SnrConfig& snr, int m_t,
                                        int m_r = 0) {
  validate_snr(snr);
  if (m_t < 1) throw std::invalid_argument("capacity_fredholm: M_T must be >= 1");
  if (!k.psd) throw std::invalid_argument("capacity_fredholm: operator is not tagged PSD");
  const RVec lam = eigenvalues_psd(k, "capacity_fredholm");
  const double scale = snr.gamma() / m_t;
  CapacityResult res;
  res.route = Route::fredholm;
  res.snr = snr;
  res.m_t = m_t;
  res.m_r = m_r;
  res.grid_resolution = k.grid.resolution;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double s = scale * lam(i);
    if (s > 0.0) res.eigenvalues_used.push_back(s);
  }
  res.bits = detail::bits_from_scaled_eigs(res.eigenvalues_used);
  return res;
}

/**
 * The N x N data of the finite-rank reduction:
 *
 *   d_jk  = E_T/(a N_0) < sum_i c_ij f_i, (A_R / M) sum_m c_mk f_m >
 *   phi_jk = < h_j, h_k >,  h_j = sqrt(A_T / M) g_j
 *
 * with M the transmit antenna count the ratio a refers to. Both matrices
 * are Hermitian PSD by construction.
 */
struct FiniteRankData {
  Mat d;
  Mat phi;
  RVec h_norms;
  int grid_resolution = 0;
};

inline FiniteRankData build_finite_rank_data(const ScattererSet& set, const BlockOperator& at,
                                             const BlockOperator& ar, int m, double a,
                                             const SnrConfig& snr) {
  validate_scatterer_set(set);
  validate_snr(snr);
  require_same_grid(at.grid, ar.grid, "build_finite_rank_data");
  if (m < 1) throw std::invalid_argument("build_finite_rank_data: M must be >= 1");
  if (!(a > 0.0)) throw std::invalid_argument("build_finite_rank_data: ratio a must be > 0");
  if (set.band > at.grid.resolution - 1)
    throw std::invalid_argument("build_finite_rank_data: mode band exceeds grid exactness");

  const ShBasis sh = build_sh_basis(at.grid, set.band);
  const int n = set.rank();
  Mat f(at.dim(), n), g(at.dim(), n);
  for (int j = 0; j < n; ++j) {
    f.col(j) = sample_mode(set.left_modes[j], sh);
    g.col(j) = sample_mode(set.right_modes[j], sh);
  }
  const Mat u = f * set.c;

  FiniteRankData data;
  data.grid_resolution = at.grid.resolution;
  data.d = hermitize(u.adjoint() * ar.apply_to(u)) * (snr.e_t / (a * snr.n_0 * m));
  data.phi = hermitize(g.adjoint() * at.apply_to(g)) / m;
  data.h_norms = data.phi.diagonal().real().cwiseMax(0.0).cwiseSqrt();
  return data;
}

/// Scaled eigenvalues a*M*eig(sqrt(d) phi sqrt(d)) feeding the determinant
/// formula; shared by the capacity and its growth bound.
inline RVec finite_rank_scaled_eigs(const FiniteRankData& data, double a, int m) {
  if (data.d.rows() != data.phi.rows())
    throw std::invalid_argument("finite_rank_scaled_eigs: d and phi dimensions differ");
  auto [lam, v] = eigh(data.d);
  lam = clamp_psd_eigenvalues(lam, "capacity_finite_rank: d");
  const Mat root_d = v * lam.cwiseSqrt().asDiagonal() * v.adjoint();
  const RVec s = psd_eigenvalues(hermitize(root_d * data.phi * root_d),
                                 "capacity_finite_rank: sqrt(d) phi sqrt(d)");
  return s * (a * m);
}

/**
 * Finite-rank route: C = (1/ln 2) ln det(I + a M sqrt(d) phi sqrt(d)),
 * an N x N problem independent of grid size.
 */
inline CapacityResult capacity_finite_rank(const FiniteRankData& data, double a, int m,
                                           const SnrConfig& snr = SnrConfig{}) {
  if (m < 1) throw std::invalid_argument("capacity_finite_rank: M must be >= 1");
  if (!(a > 0.0)) throw std::invalid_argument("capacity_finite_rank: ratio a must be > 0");
  const RVec s = finite_rank_scaled_eigs(data, a, m);
  CapacityResult res;
  res.route = Route::finite_rank;
  res.snr = snr;
  res.m_t = m;
  res.m_r = round_ties_up(a * m);
  res.grid_resolution = data.grid_resolution;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 0.0) res.eigenvalues_used.push_back(s(i));
  res.bits = detail::bits_from_scaled_eigs(res.eigenvalues_used);
  return res;
}

/**
 * The explicit log-growth cap for a rank-N environment:
 *
 *   bits <= (N / ln 2) (ln M + ln(1 + a lambda))
 *
 * with lambda the measured top eigenvalue of sqrt(d) phi sqrt(d).
 */
inline double finite_rank_growth_bound(const FiniteRankData& data, double a, int m) {
  const RVec s = finite_rank_scaled_eigs(data, a, m);
  const double lambda = s.size() > 0 ? s(0) / (a * m) : 0.0;
  const double n = static_cast<double>(data.d.rows());
  return n * (std::log(static_cast<double>(m)) + std::log1p(a * lambda)) / kLn2;
}

/**
 * Continuum-limit matrices d~ and phi~ built from the limit kernels, plus
 * per-M Frobenius distances of an empirical sequence to them. The ratio a
 * cancels from d~, so the limit data is computed at M = 1, a = 1.
 */
struct LimitComparison {
  Mat d_tilde;
  Mat phi_tilde;
  std::vector<int> m_values;
  std::vector<double> d_distance;
  std::vector<double> phi_distance;
};

inline LimitComparison limit_matrices(const ScattererSet& set, const BlockOperator& at_limit,
                                      const BlockOperator& ar_limit, const SnrConfig& snr,
                                      const std::vector<FiniteRankData>& sequence,
                                      const std::vector<int>& m_values) {
  if (sequence.size() != m_values.size())
    throw std::invalid_argument("limit_matrices: sequence and M list sizes differ");
  const FiniteRankData tilde = build_finite_rank_data(set, at_limit, ar_limit, 1, 1.0, snr);
  LimitComparison cmp;
  cmp.d_tilde = tilde.d;
  cmp.phi_tilde = tilde.phi;
  cmp.m_values = m_values;
  for (const auto& data : sequence) {
    cmp.d_distance.push_back((data.d - tilde.d).norm());
    cmp.phi_distance.push_back((data.phi - tilde.phi).norm());
  }
  return cmp;
}

}  // namespace mimocap
