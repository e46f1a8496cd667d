#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "mimocap/antenna.hpp"
#include "mimocap/common.hpp"
#include "mimocap/sphere.hpp"
#include "mimocap/spread.hpp"

namespace mimocap {

struct SnrConfig {
  double e_t = 1.0;  // total transmit energy
  double n_0 = 1.0;  // noise variance per receive port

  double gamma() const { return e_t / n_0; }
};

inline void validate_snr(const SnrConfig& snr) {
  if (!(snr.e_t > 0.0) || !(snr.n_0 > 0.0))
    throw std::invalid_argument("SnrConfig: E_T and N_0 must be positive");
}

/**
 * Discretized operator on six-component fields over the sphere.
 *
 * The weighted convention
 *
 *   mat[(6q+i), (6q'+j)] = sqrt(w_q) K_ij(O_q, O_q') sqrt(w_q')
 *
 * turns operator composition into matrix product and preserves
 * self-adjointness and positivity, so operator identities can be asserted
 * directly on the matrices.
 *
 * Exactly one representation is always present:
 *   - dense: mat holds the full (6Q)x(6Q) matrix;
 *   - factored: the operator equals fac_l * fac_r^H. When the operator is
 *     PSD the builders leave fac_r empty, meaning "same as fac_l", so a
 *     Gram factorization costs one thin matrix.
 * Factored storage is what keeps high-resolution pipelines affordable: all
 * kernels produced by antenna arrays and spread environments have rank far
 * below 6Q.
 */
struct BlockOperator {
  QuadratureGrid grid;
  Mat mat;    // dense representation, may be 0x0
  Mat fac_l;  // factored representation, may be 0x0
  Mat fac_r;  // empty while fac_l is set means fac_r == fac_l
  bool self_adjoint = false;
  bool psd = false;

  int dim() const { return 6 * grid.size(); }
  bool has_dense() const { return mat.size() > 0; }
  bool factored() const { return !has_dense(); }

  const Mat& right_factor() const { return fac_r.size() > 0 ? fac_r : fac_l; }

  Mat dense() const {
    if (has_dense()) return mat;
    if (fac_l.cols() == 0) return Mat::Zero(dim(), dim());
    return fac_l * right_factor().adjoint();
  }

  Mat apply_to(const Mat& x) const {
    if (has_dense()) return mat * x;
    if (fac_l.cols() == 0) return Mat::Zero(dim(), x.cols());
    return fac_l * (right_factor().adjoint() * x);
  }
};

inline void require_same_grid(const QuadratureGrid& a, const QuadratureGrid& b,
                              const std::string& who) {
  if (!a.same_layout(b)) throw std::invalid_argument(who + ": operands live on different grids");
}

inline BlockOperator zero_operator(const QuadratureGrid& grid) {
  BlockOperator op;
  op.grid = grid;
  op.fac_l.resize(6 * grid.size(), 0);
  op.self_adjoint = true;
  op.psd = true;
  return op;
}

/// Nystrom lift of a sampled antenna-limit kernel.
inline BlockOperator lift_kernel(const LimitKernel& k) {
  BlockOperator op;
  op.grid = k.grid;
  op.mat = k.wmat;
  if (k.gram) {
    op.fac_l = *k.gram;
    op.mat.resize(0, 0);
  }
  op.self_adjoint = true;
  op.psd = true;
  return op;
}

/// Nystrom lift of a sampled spread kernel (generally neither self-adjoint
/// nor PSD); carries the low-rank factors through.
inline BlockOperator lift_kernel(const SpreadSamples& s) {
  BlockOperator op;
  op.grid = s.grid;
  op.fac_l = s.L;
  op.fac_r = s.R;
  return op;
}

/// Dense lift of an arbitrary pointwise kernel fn(q, q') -> 6x6 block.
/// Meant for small grids; tags are the caller's claim and are not checked.
template <class F>
BlockOperator lift_kernel(const QuadratureGrid& grid, F&& fn, bool self_adjoint = false,
                          bool psd = false) {
  const int Q = grid.size();
  BlockOperator op;
  op.grid = grid;
  op.mat.resize(6 * Q, 6 * Q);
  for (int qp = 0; qp < Q; ++qp)
    for (int q = 0; q < Q; ++q)
      op.mat.block<6, 6>(6 * q, 6 * qp) =
          (grid.sqrt_w(q) * grid.sqrt_w(qp)) * Mat6(fn(q, qp));
  op.self_adjoint = self_adjoint;
  op.psd = psd;
  return op;
}

/// A = Phi Phi^H where Phi is the weighted pattern matrix: the unnormalized
/// array operator whose 1/M scaling is applied by callers when they need
/// the Riemann-sum normalization.
inline BlockOperator build_A(const PatternSamples& ps) {
  BlockOperator op;
  op.grid = ps.grid;
  op.fac_l = ps.wport;
  op.self_adjoint = true;
  op.psd = true;
  return op;
}

/// c * op for c >= 0, preserving tags and representation.
inline BlockOperator scale_psd(const BlockOperator& op, double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("scale_psd: scale must be >= 0");
  BlockOperator out = op;
  if (out.has_dense()) out.mat *= c;
  const double root = std::sqrt(c);
  if (out.fac_l.size() > 0) out.fac_l *= root;
  if (out.fac_r.size() > 0) out.fac_r *= root;
  return out;
}

inline double trace_psd(const BlockOperator& op) {
  if (op.has_dense()) return op.mat.trace().real();
  if (!op.psd || op.fac_r.size() > 0)
    return (op.fac_l * op.right_factor().adjoint()).trace().real();
  return op.fac_l.squaredNorm();
}

/// Eigenvalues of a small Hermitian PSD matrix: clamped per the PSD policy,
/// returned in descending order.
inline RVec psd_eigenvalues(const Mat& m, const std::string& who) {
  RVec lam = eigh_values(m);
  lam = clamp_psd_eigenvalues(lam, who);
  return lam.reverse();
}

/**
 * Eigenvalues of a PSD BlockOperator, descending, zero-padded to the full
 * block dimension 6Q. A Gram-factored operator is resolved through the
 * smaller of the two Gram matrices so the cost scales with the factor
 * width, not the grid.
 */
inline RVec eigenvalues_psd(const BlockOperator& op, const std::string& who,
                            bool force_dense = false) {
  if (!op.psd) throw std::invalid_argument(who + ": operator is not tagged PSD");
  const int n = op.dim();
  // the thin path is valid only for a Gram factorization (fac_r empty)
  if (!op.has_dense() && !force_dense && op.fac_r.size() == 0) {
    const Mat& g = op.fac_l;
    const int m = static_cast<int>(g.cols());
    if (m == 0) return RVec::Zero(n);
    if (m <= n) {
      RVec lam = psd_eigenvalues(g.adjoint() * g, who);
      RVec out = RVec::Zero(n);
      out.head(m) = lam;
      return out;
    }
  }
  return psd_eigenvalues(op.dense(), who);
}

inline double operator_norm_psd(const BlockOperator& op, const std::string& who) {
  const RVec lam = eigenvalues_psd(op, who);
  return lam.size() > 0 ? lam(0) : 0.0;
}

/// Factor F with A = F F^H for a small Hermitian PSD matrix, via
/// eigendecomposition with the clamp policy.
inline Mat psd_factor(const Mat& a, const std::string& who) {
  auto [lam, v] = eigh(a);
  lam = clamp_psd_eigenvalues(lam, who);
  return v * lam.cwiseSqrt().asDiagonal();
}

/**
 * PSD square root. Factored operators stay factored: the root of
 * G G^H is U S U^H where G = U S V^H, carried as the thin factor
 * U S^{1/2} computed from the small Gram G^H G. Dense operators go
 * through a full eigendecomposition. Eigenvalues below the PSD clamp
 * floor raise NotPsdError.
 */
inline BlockOperator psd_sqrt(const BlockOperator& op) {
  if (!op.psd) throw std::invalid_argument("psd_sqrt: operator is not tagged PSD");
  const int n = op.dim();

  if (!op.has_dense() && op.fac_r.size() == 0) {
    const Mat& g = op.fac_l;
    const int m = static_cast<int>(g.cols());
    if (m == 0) return zero_operator(op.grid);
    if (m <= n) {
      auto [lam, v] = eigh(Mat(g.adjoint() * g));
      lam = clamp_psd_eigenvalues(lam, "psd_sqrt");
      const double lmax = lam(m - 1);
      const double cutoff = lmax * 1e-28;
      int first = 0;
      while (first < m && lam(first) <= cutoff) ++first;
      const int keep = m - first;
      BlockOperator out;
      out.grid = op.grid;
      out.self_adjoint = true;
      out.psd = true;
      if (keep == 0 || lmax <= 0.0) {
        out.fac_l.resize(n, 0);
        return out;
      }
      RVec scale(keep);
      for (int i = 0; i < keep; ++i) scale(i) = std::pow(lam(first + i), -0.25);
      out.fac_l.noalias() = g * v.rightCols(keep) * scale.asDiagonal();
      return out;
    }
  }

  auto [lam, v] = eigh(op.dense());
  lam = clamp_psd_eigenvalues(lam, "psd_sqrt");
  BlockOperator out;
  out.grid = op.grid;
  out.mat.noalias() = v * lam.cwiseSqrt().asDiagonal() * v.adjoint();
  out.mat = hermitize(out.mat);
  out.self_adjoint = true;
  out.psd = true;
  return out;
}

/**
 * K = sqrt(A_T) S^* A_R S sqrt(A_T), the PSD operator sharing its nonzero
 * spectrum with H H^H. When the spread factor is available the whole
 * product collapses to one thin Gram factor W with K = W W^H, so K never
 * materializes at grid scale.
 */
inline BlockOperator build_K(const BlockOperator& at, const BlockOperator& ar,
                             const BlockOperator& s) {
  require_same_grid(at.grid, ar.grid, "build_K");
  require_same_grid(at.grid, s.grid, "build_K");
  if (!at.psd || !ar.psd)
    throw std::invalid_argument("build_K: A_T and A_R must be tagged PSD");

  const BlockOperator sq = psd_sqrt(at);

  if (!s.has_dense()) {
    const Mat& l = s.fac_l;
    const Mat& r = s.right_factor();
    const int rank = static_cast<int>(l.cols());
    BlockOperator out;
    out.grid = at.grid;
    out.self_adjoint = true;
    out.psd = true;
    if (rank == 0) {
      out.fac_l.resize(at.dim(), 0);
      return out;
    }
    Mat f;
    if (!ar.has_dense() && ar.fac_r.size() == 0) {
      const Mat f0 = l.adjoint() * ar.fac_l;  // rank x m
      f = f0.cols() > rank ? psd_factor(hermitize(f0 * f0.adjoint()), "build_K") : f0;
    } else {
      f = psd_factor(hermitize(l.adjoint() * ar.apply_to(l)), "build_K");
    }
    out.fac_l = sq.apply_to(r * f);
    return out;
  }

  const Mat sm = s.dense();
  const Mat sqm = sq.dense();
  BlockOperator out;
  out.grid = at.grid;
  out.mat = hermitize((sqm * sm.adjoint()) * ar.dense() * (sm * sqm));
  out.self_adjoint = true;
  out.psd = true;
  return out;
}

struct ChannelMatrix {
  Mat entries;  // M_R x M_T

  int rx_count() const { return static_cast<int>(entries.rows()); }
  int tx_count() const { return static_cast<int>(entries.cols()); }
};

/**
 * Channel transfer matrix: the double sphere integral of
 * rx-pattern * spread * tx-pattern, evaluated by quadrature. With the
 * weighted convention it is exactly wport_R^H S_w wport_T, and the spread
 * factorization reduces it to two thin products.
 */
inline ChannelMatrix build_H(const PatternSamples& tx, const PatternSamples& rx,
                             const SpreadSamples& s) {
  require_same_grid(tx.grid, rx.grid, "build_H");
  require_same_grid(tx.grid, s.grid, "build_H");
  ChannelMatrix h;
  if (s.L.cols() == 0) {
    h.entries = Mat::Zero(rx.count(), tx.count());
    return h;
  }
  const Mat left = rx.wport.adjoint() * s.L;   // M_R x r
  const Mat right = s.R.adjoint() * tx.wport;  // r x M_T
  h.entries.noalias() = left * right;
  if (!h.entries.allFinite()) throw NumericalCheckError("build_H: non-finite channel entries");
  return h;
}

inline Mat build_B(const ChannelMatrix& h) {
  return hermitize(h.entries * h.entries.adjoint());
}

namespace detail {

inline cplx resolvent_trace_sum(const RVec& lam, cplx z) {
  cplx sum = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) != 0.0) sum += lam(i) / (z - lam(i));
  return sum;
}

inline void require_z_clear(const RVec& lam, cplx z, double threshold) {
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (std::abs(z - cplx(lam(i), 0.0)) < threshold)
      throw IllConditionedError(
          "resolvent_trace_identity: z is within " + format_g17(threshold) +
          " of eigenvalue " + format_g17(lam(i)));
}

}  // namespace detail

/**
 * Both sides of the trace identity linking the receive-side matrix
 * B = H H^H and the field-side operator K:
 *
 *   Tr{(z - B)^-1 B}  and  Tr{(z - K)^-1 K}.
 *
 * Zero eigenvalues contribute nothing to either trace. z closer than
 * 1e-6 times the larger operator norm to either spectrum is rejected
 * as ill-conditioned.
 */
inline std::pair<cplx, cplx> resolvent_trace_identity(const Mat& b, const BlockOperator& k,
                                                      cplx z) {
  const RVec lam_b = psd_eigenvalues(hermitize(b), "resolvent_trace_identity: B");
  const RVec lam_k = eigenvalues_psd(k, "resolvent_trace_identity: K");
  const double norm_b = lam_b.size() > 0 ? lam_b(0) : 0.0;
  const double norm_k = lam_k.size() > 0 ? lam_k(0) : 0.0;
  const double threshold = 1e-6 * std::max(norm_b, norm_k);
  detail::require_z_clear(lam_b, z, threshold);
  detail::require_z_clear(lam_k, z, threshold);
  return {detail::resolvent_trace_sum(lam_b, z), detail::resolvent_trace_sum(lam_k, z)};
}

/// Same identity at many z points with the two spectra computed once.
inline std::vector<std::pair<cplx, cplx>> resolvent_trace_identity_many(
    const Mat& b, const BlockOperator& k, const std::vector<cplx>& zs) {
  const RVec lam_b = psd_eigenvalues(hermitize(b), "resolvent_trace_identity: B");
  const RVec lam_k = eigenvalues_psd(k, "resolvent_trace_identity: K");
  const double norm_b = lam_b.size() > 0 ? lam_b(0) : 0.0;
  const double norm_k = lam_k.size() > 0 ? lam_k(0) : 0.0;
  const double threshold = 1e-6 * std::max(norm_b, norm_k);
  std::vector<std::pair<cplx, cplx>> out;
  out.reserve(zs.size());
  for (cplx z : zs) {
    detail::require_z_clear(lam_b, z, threshold);
    detail::require_z_clear(lam_k, z, threshold);
    out.emplace_back(detail::resolvent_trace_sum(lam_b, z),
                     detail::resolvent_trace_sum(lam_k, z));
  }
  return out;
}

/// Full invariant check: finite entries, self-adjointness residual, PSD
/// floor. Materializes the dense matrix, so test-scale grids only.
inline void verify_block_operator(const BlockOperator& op, const std::string& who) {
  if (op.has_dense() && !op.mat.allFinite())
    throw NumericalCheckError(who + ": non-finite dense entries");
  if (op.fac_l.size() > 0 && !op.fac_l.allFinite())
    throw NumericalCheckError(who + ": non-finite factor entries");
  if (op.fac_r.size() > 0 && !op.fac_r.allFinite())
    throw NumericalCheckError(who + ": non-finite factor entries");
  if (op.self_adjoint) {
    const Mat d = op.dense();
    const double resid = (d - d.adjoint()).norm();
    if (resid > 1e-10 * std::max(1e-300, d.norm()))
      throw NumericalCheckError(who + ": self-adjoint tag violated, residual " +
                                format_g17(resid));
  }
  if (op.psd) eigenvalues_psd(op, who, true);
}

}  // namespace mimocap
