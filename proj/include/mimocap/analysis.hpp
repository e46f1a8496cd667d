#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mimocap/antenna.hpp"
#include "mimocap/capacity.hpp"
#include "mimocap/common.hpp"
#include "mimocap/operators.hpp"
#include "mimocap/sphere.hpp"
#include "mimocap/spread.hpp"

namespace mimocap {

/// Tr ln(1 + T) of a Hermitian PSD matrix through its clamped eigenvalues.
inline double trace_log1p_psd(const Mat& t, const std::string& who) {
  const RVec lam = psd_eigenvalues(t, who);
  double nats = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) nats += std::log1p(lam(i));
  return nats;
}

/**
 * Both trace inequalities for F(x) = ln(1 + x) on a PSD pair (T1, T2):
 *
 *   (1)  |Tr F(T2) - Tr F(T1)|  <=  |T2 - T1|_1
 *   (2)   Tr F(T2)              <=  Tr F(T1) + Tr{(1 + T1)^-1 (T2 - T1)}
 *
 * evaluated exactly as computed; margins are rhs - lhs and the pass flags
 * use tolerance 1e-10 * scale with scale = max(1, |lhs|, |rhs|) per line.
 */
struct TraceIneqReport {
  double tr_f1 = 0.0;
  double tr_f2 = 0.0;
  double lhs_contraction = 0.0, rhs_contraction = 0.0;
  double lhs_tangent = 0.0, rhs_tangent = 0.0;
  double margin_contraction = 0.0, margin_tangent = 0.0;
  bool pass_contraction = false, pass_tangent = false;
  double scale = 1.0;
};

inline TraceIneqReport check_trace_inequalities(const Mat& t1, const Mat& t2) {
  if (t1.rows() != t1.cols() || t2.rows() != t2.cols() || t1.rows() != t2.rows())
    throw std::invalid_argument("check_trace_inequalities: need square matrices of equal size");

  auto [lam1, v1] = eigh(t1);
  lam1 = clamp_psd_eigenvalues(lam1, "check_trace_inequalities: T1");
  const RVec lam2 = psd_eigenvalues(t2, "check_trace_inequalities: T2");

  TraceIneqReport rep;
  for (Eigen::Index i = 0; i < lam1.size(); ++i) rep.tr_f1 += std::log1p(lam1(i));
  for (Eigen::Index i = 0; i < lam2.size(); ++i) rep.tr_f2 += std::log1p(lam2(i));

  const Mat dt = hermitize(t2 - t1);
  rep.lhs_contraction = std::abs(rep.tr_f2 - rep.tr_f1);
  rep.rhs_contraction = trace_norm_hermitian(dt);

  RVec inv_diag(lam1.size());
  for (Eigen::Index i = 0; i < lam1.size(); ++i) inv_diag(i) = 1.0 / (1.0 + lam1(i));
  const Mat resolvent_at_one = v1 * inv_diag.asDiagonal() * v1.adjoint();
  rep.lhs_tangent = rep.tr_f2;
  rep.rhs_tangent = rep.tr_f1 + (resolvent_at_one * dt).trace().real();

  rep.scale = std::max({1.0, std::abs(rep.tr_f1), std::abs(rep.tr_f2), rep.rhs_contraction,
                        std::abs(rep.rhs_tangent)});
  rep.margin_contraction = rep.rhs_contraction - rep.lhs_contraction;
  rep.margin_tangent = rep.rhs_tangent - rep.lhs_tangent;
  const double tol = 1e-10 * rep.scale;
  rep.pass_contraction = rep.margin_contraction >= -tol;
  rep.pass_tangent = rep.margin_tangent >= -tol;
  return rep;
}

/**
 * Berezin-type splitting for F(x) = ln(1 + x): with Q = 1 - P,
 *
 *   Tr F(T2)  <=  Tr F(P T2 P) + Tr F(Q T2 Q).
 */
struct BerezinReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = false;
  double scale = 1.0;
};

inline BerezinReport berezin_split(const Mat& t2, const Mat& p) {
  if (p.rows() != p.cols() || p.rows() != t2.rows() || t2.rows() != t2.cols())
    throw std::invalid_argument("berezin_split: dimension mismatch");
  const double ptol = 1e-12 * std::max(1.0, p.norm());
  if ((p - p.adjoint()).norm() > ptol || (p * p - p).norm() > ptol)
    throw std::invalid_argument("berezin_split: P is not an orthogonal projection");

  const Mat q = Mat::Identity(p.rows(), p.cols()) - p;
  BerezinReport rep;
  rep.lhs = trace_log1p_psd(t2, "berezin_split: T2");
  rep.rhs = trace_log1p_psd(hermitize(p * t2 * p), "berezin_split: PT2P") +
            trace_log1p_psd(hermitize(q * t2 * q), "berezin_split: QT2Q");
  rep.scale = std::max({1.0, std::abs(rep.lhs), std::abs(rep.rhs)});
  rep.margin = rep.rhs - rep.lhs;
  rep.pass = rep.margin >= -1e-10 * rep.scale;
  return rep;
}

/**
 * Spectral truncation of a sampled spread kernel at Laplace-Beltrami cutoff
 * E with smoothness order n. P_E projects the receive variable onto
 * harmonics with l(l+1) <= E; the certified tail estimate is
 *
 *   |(1 - P_E) S|_HS  <=  E^-n |S_n|_HS,   S_n = L_B^n S.
 *
 * tail_bound stores the right-hand side; tail_bound_projected is the
 * sharper variant E^-n |(1 - P_E) S_n|_HS, which vanishes once E clears
 * the band limit of S.
 */
struct TruncationPlan {
  double cutoff = 0.0;  // E
  int order = 0;        // n
  long six_dim = 0;     // dim of the six-component truncation space
  long scalar_dim = 0;
  double tail_measured = 0.0;
  double sn_norm = 0.0;
  double tail_bound = 0.0;
  double tail_bound_projected = 0.0;
};

inline TruncationPlan plan_truncation(const SpreadSamples& s, const ShBasis& sh, double e,
                                      int n) {
  if (!(e > 0.0)) throw std::invalid_argument("plan_truncation: cutoff E must be positive");
  if (n < 0) throw std::invalid_argument("plan_truncation: order n must be >= 0");

  const DegreeMassProfile profile = degree_mass_profile(s, sh);
  const double band_tail = out_of_band_fraction(profile);
  if (band_tail > kBandTailTolerance)
    throw BandLimitError("plan_truncation: kernel carries " + std::to_string(band_tail) +
                             " of its norm above the basis band limit",
                         band_tail);

  const WeylCount wc = weyl_count(e);
  TruncationPlan plan;
  plan.cutoff = e;
  plan.order = n;
  plan.six_dim = wc.six_dim;
  plan.scalar_dim = wc.scalar_dim;

  double kept_sq = 0.0, sn_sq = 0.0, sn_tail_sq = 0.0;
  for (Eigen::Index kcol = 0; kcol < profile.per_column.size(); ++kcol) {
    const double lam = sh.lb_eigs(kcol);
    const double mass = profile.per_column(kcol);
    const double weight = std::pow(lam, 2 * n);
    sn_sq += weight * mass;
    if (lam <= e)
      kept_sq += mass;
    else
      sn_tail_sq += weight * mass;
  }
  plan.tail_measured = std::sqrt(std::max(0.0, profile.total_sq - kept_sq));
  plan.sn_norm = std::sqrt(sn_sq);
  const double shrink = std::pow(e, -n);
  plan.tail_bound = shrink * plan.sn_norm;
  plan.tail_bound_projected = shrink * std::sqrt(sn_tail_sq);

  if (plan.tail_bound < plan.tail_measured - 1e-8)
    throw NumericalCheckError("plan_truncation: tail bound " + format_g17(plan.tail_bound) +
                              " fails to cover measured tail " +
                              format_g17(plan.tail_measured));
  return plan;
}

/**
 * Certified capacity bound from the truncation plan:
 *
 *   C  <=  N ln(1 + C2 M N^2) / ln 2  +  M tail_bound C1 / ln 2
 *
 * with every constant measured from the configuration at hand. C1 collects
 * the operator norms that bound the trace-norm error of replacing S by
 * P_E S; C2 = a max|d^E| max|phi^E| caps the top eigenvalue of the rank-N
 * truncated problem through its Gram data. The function computes the
 * actual capacity alongside and fails loudly if the bound is violated.
 */
struct TruncatedBoundReport {
  double c_actual_bits = 0.0;
  double c_bound_bits = 0.0;
  double rank_term_bits = 0.0;
  double tail_term_bits = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  long n_dim = 0;
};

inline TruncatedBoundReport truncated_capacity_bound(const TruncationPlan& plan,
                                                     const SpreadSamples& s, const ShBasis& sh,
                                                     const PatternSamples& tx,
                                                     const PatternSamples& rx,
                                                     const SnrConfig& snr, int m, double a) {
  validate_snr(snr);
  require_same_grid(s.grid, sh.grid, "truncated_capacity_bound");
  require_same_grid(s.grid, tx.grid, "truncated_capacity_bound");
  require_same_grid(s.grid, rx.grid, "truncated_capacity_bound");
  if (tx.count() != m)
    throw std::invalid_argument("truncated_capacity_bound: M must match the TX array");
  if (rx.count() != round_ties_up(a * m))
    throw std::invalid_argument("truncated_capacity_bound: RX count must equal round(a M)");

  TruncatedBoundReport rep;
  rep.n_dim = plan.six_dim;

  const BlockOperator at = build_A(tx);
  const BlockOperator ar = build_A(rx);
  rep.c_actual_bits = capacity_direct(build_H(tx, rx, s), snr, m, s.grid.resolution).bits;

  const double op_t = operator_norm_psd(at, "truncated_capacity_bound: A_T") / m;
  const double op_r = operator_norm_psd(ar, "truncated_capacity_bound: A_R") / rx.count();
  const double ratio = static_cast<double>(rx.count()) / m;
  rep.c1 = 2.0 * snr.gamma() * ratio * op_t * op_r * hs_norm(s);
  rep.tail_term_bits = m * plan.tail_bound * rep.c1 / kLn2;

  std::vector<int> kept;
  for (int kcol = 0; kcol < sh.dim(); ++kcol)
    if (sh.lb_eigs(kcol) <= plan.cutoff) kept.push_back(kcol);
  const int q = s.grid.size();
  Mat psi = Mat::Zero(6 * q, 6 * static_cast<int>(kept.size()));
  for (std::size_t kk = 0; kk < kept.size(); ++kk)
    for (int i = 0; i < 6; ++i)
      for (int row = 0; row < q; ++row)
        psi(6 * row + i, 6 * kk + i) = sh.weighted(row, kept[kk]);

  double max_d = 0.0, max_phi = 0.0;
  if (psi.cols() > 0 && s.L.cols() > 0) {
    const Mat g = s.R * (s.L.adjoint() * psi);
    const Mat d_e = hermitize(psi.adjoint() * ar.apply_to(psi)) *
                    (snr.e_t / (a * snr.n_0 * m));
    const Mat phi_e = hermitize(g.adjoint() * at.apply_to(g)) / m;
    max_d = d_e.cwiseAbs().maxCoeff();
    max_phi = phi_e.cwiseAbs().maxCoeff();
  }
  rep.c2 = a * max_d * max_phi;

  const double n_dim = static_cast<double>(plan.six_dim);
  rep.rank_term_bits = n_dim * std::log1p(rep.c2 * m * n_dim * n_dim) / kLn2;
  rep.c_bound_bits = rep.rank_term_bits + rep.tail_term_bits;

  if (rep.c_actual_bits > rep.c_bound_bits + 1e-9 * (1.0 + rep.c_bound_bits))
    throw NumericalCheckError("truncated_capacity_bound: actual capacity " +
                              format_g17(rep.c_actual_bits) + " exceeds certified bound " +
                              format_g17(rep.c_bound_bits));
  return rep;
}

}  // namespace mimocap
