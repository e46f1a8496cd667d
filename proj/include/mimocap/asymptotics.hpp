#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mimocap/analysis.hpp"
#include "mimocap/antenna.hpp"
#include "mimocap/capacity.hpp"
#include "mimocap/common.hpp"
#include "mimocap/operators.hpp"
#include "mimocap/sphere.hpp"
#include "mimocap/spread.hpp"

namespace mimocap {

enum class Regime { tx_saturation, rx_log_growth, proportional_finite_rank, proportional_smooth };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::tx_saturation: return "tx_saturation";
    case Regime::rx_log_growth: return "rx_log_growth";
    case Regime::proportional_finite_rank: return "proportional_finite_rank";
    default: return "proportional_smooth";
  }
}

inline std::optional<Regime> parse_regime(const std::string& name) {
  if (name == "tx_saturation") return Regime::tx_saturation;
  if (name == "rx_log_growth") return Regime::rx_log_growth;
  if (name == "proportional_finite_rank") return Regime::proportional_finite_rank;
  if (name == "proportional_smooth") return Regime::proportional_smooth;
  return std::nullopt;
}

struct SweepSpec {
  Regime regime = Regime::proportional_finite_rank;
  std::vector<int> m_values;
  int fixed_m_r = 4;  // regime tx_saturation
  int fixed_m_t = 2;  // regime rx_log_growth
  double ratio_a = 1.0;
  Box tx_box;
  Box rx_box;
  FillScheme scheme = FillScheme::halton;
  double k = 2.0 * kPi;
  Vec6 polarization = (Vec6() << 1, 0, 0, 0, 0, 0).finished();
  SnrConfig snr;
  int resolution = 8;
  std::uint64_t seed = 1;
  std::optional<ScattererSet> scatterers;
  std::optional<SmoothSpread> smooth;
  double epsilon = 0.5;  // regime proportional_smooth target exponent
  int order_n = 2;       // smoothness order for the truncation bound
  double saturation_delta_tol = 0.02;
  double saturation_gap_tol = 0.05;
  double slope_tol = 0.05;
  double rank_ratio_tol = 0.10;
};

inline void validate_sweep_spec(const SweepSpec& spec) {
  if (spec.m_values.size() < 4)
    throw std::invalid_argument("SweepSpec: need at least 4 sweep points");
  for (std::size_t i = 0; i < spec.m_values.size(); ++i) {
    if (spec.m_values[i] < 1)
      throw std::invalid_argument("SweepSpec: sweep counts must be >= 1");
    if (i > 0 && spec.m_values[i] <= spec.m_values[i - 1])
      throw std::invalid_argument("SweepSpec: sweep counts must be strictly increasing");
  }
  if (spec.scatterers.has_value() == spec.smooth.has_value())
    throw std::invalid_argument("SweepSpec: exactly one environment must be set");
  if (spec.scatterers) validate_scatterer_set(*spec.scatterers);
  if (!(spec.ratio_a > 0.0)) throw std::invalid_argument("SweepSpec: ratio a must be > 0");
  if (spec.resolution < 1) throw std::invalid_argument("SweepSpec: resolution must be >= 1");
  if (spec.fixed_m_r < 1 || spec.fixed_m_t < 1)
    throw std::invalid_argument("SweepSpec: fixed antenna counts must be >= 1");
  if (!(spec.epsilon > 0.0 && spec.epsilon < 1.0))
    throw std::invalid_argument("SweepSpec: epsilon must lie in (0, 1)");
  if (spec.order_n < 0) throw std::invalid_argument("SweepSpec: order n must be >= 0");
  validate_box(spec.tx_box, "SweepSpec tx_box");
  validate_box(spec.rx_box, "SweepSpec rx_box");
  validate_snr(spec.snr);
  if (spec.regime == Regime::proportional_smooth) {
    for (std::size_t i = 1; i < spec.m_values.size(); ++i)
      if (spec.m_values[i] != 2 * spec.m_values[i - 1])
        throw std::invalid_argument(
            "SweepSpec: proportional_smooth needs a doubling sweep list");
  }
}

struct SweepRow {
  int m = 0;  // the swept antenna count
  int m_t = 0;
  int m_r = 0;
  double bits = 0.0;
  double stat = std::numeric_limits<double>::quiet_NaN();  // regime statistic per row
  double bound_bits = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  Regime regime = Regime::proportional_finite_rank;
  std::vector<SweepRow> rows;
  double saturation_delta = std::numeric_limits<double>::quiet_NaN();
  double limit_bits = std::numeric_limits<double>::quiet_NaN();
  double limit_gap = std::numeric_limits<double>::quiet_NaN();
  double slope = std::numeric_limits<double>::quiet_NaN();
  double slope_limit = std::numeric_limits<double>::quiet_NaN();
  int d_count = -1;
  double ratio_at_max = std::numeric_limits<double>::quiet_NaN();
  double ratio_limit = std::numeric_limits<double>::quiet_NaN();
  bool verdict = false;
  std::string verdict_detail;
};

struct GrowthFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// First index of the fit window: the top half of the rows, widened to at
/// least 3 points so the regression is never degenerate.
inline std::size_t fit_window_start(std::size_t n) {
  if (n < 3) throw std::invalid_argument("fit_window_start: need at least 3 rows");
  const std::size_t half = (n + 1) / 2;
  const std::size_t take = half < 3 ? 3 : half;
  return n - take;
}

/// Least-squares slope of bits against ln(m) over rows [first, end).
inline GrowthFit fit_growth(const std::vector<SweepRow>& rows, std::size_t first) {
  if (rows.size() < first + 3)
    throw std::invalid_argument("fit_growth: window holds fewer than 3 rows");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(rows.size() - first);
  for (std::size_t i = first; i < rows.size(); ++i) {
    const double x = std::log(static_cast<double>(rows[i].m));
    sx += x;
    sy += rows[i].bits;
    sxx += x * x;
    sxy += x * rows[i].bits;
  }
  const double det = n * sxx - sx * sx;
  if (!(std::abs(det) > 1e-12 * std::max(1.0, n * sxx)))
    throw std::invalid_argument("fit_growth: degenerate abscissas");
  GrowthFit fit;
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

/// Local dyadic exponents e = ln(bits_i / bits_{i-1}) / ln 2, stored on the
/// upper row of each doubling pair; NaN where undefined (no doubling, or a
/// zero capacity making the ratio meaningless).
inline void fill_dyadic_exponents(std::vector<SweepRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].m == 2 * rows[i - 1].m && rows[i].bits > 0.0 && rows[i - 1].bits > 0.0)
      rows[i].stat = std::log(rows[i].bits / rows[i - 1].bits) / kLn2;
  }
}

namespace detail {

inline SpreadSamples make_environment(const SweepSpec& spec, const QuadratureGrid& grid) {
  if (spec.scatterers) return sample_finite_rank(*spec.scatterers, grid);
  return sample_smooth(*spec.smooth, grid);
}

inline PatternSamples make_pattern(const SweepSpec& spec, const Box& declared, const Box& box,
                                   int count, Side side, const QuadratureGrid& grid) {
  if ((box.center - declared.center).norm() > 0.0 || (box.side - declared.side).norm() > 0.0)
    throw std::logic_error("sweep: array volume changed between sweep points");
  const AntennaArray array = make_array(box, count, spec.scheme, spec.k, spec.polarization);
  return sample_pattern(array, grid, side);
}

}  // namespace detail

/**
 * Regime: transmit saturation. M_R fixed, M_T grows inside one box; the
 * capacity approaches the limit computed from the continuum transmit
 * kernel, and the per-doubling relative change shrinks.
 */
inline SweepResult sweep_tx_saturation(const SweepSpec& spec) {
  validate_sweep_spec(spec);
  if (spec.regime != Regime::tx_saturation)
    throw std::invalid_argument("sweep_tx_saturation: wrong regime tag");

  const QuadratureGrid grid = build_grid(spec.resolution);
  const SpreadSamples s = detail::make_environment(spec, grid);
  const PatternSamples rx =
      detail::make_pattern(spec, spec.rx_box, spec.rx_box, spec.fixed_m_r, Side::rx, grid);

  SweepResult res;
  res.regime = spec.regime;
  for (int m : spec.m_values) {
    const PatternSamples tx =
        detail::make_pattern(spec, spec.tx_box, spec.tx_box, m, Side::tx, grid);
    SweepRow row;
    row.m = m;
    row.m_t = m;
    row.m_r = spec.fixed_m_r;
    row.bits = capacity_direct(build_H(tx, rx, s), spec.snr, m, spec.resolution).bits;
    res.rows.push_back(row);
  }
  for (std::size_t i = 1; i < res.rows.size(); ++i) {
    const double c = std::max(res.rows[i].bits, 1e-300);
    res.rows[i].stat = std::abs(res.rows[i].bits - res.rows[i - 1].bits) / c;
  }

  const BlockOperator at_limit =
      lift_kernel(continuum_kernel(spec.tx_box, spec.k, spec.polarization, grid));
  const BlockOperator ar = build_A(rx);
  const BlockOperator k_limit = build_K(at_limit, ar, lift_kernel(s));
  res.limit_bits = capacity_fredholm(k_limit, spec.snr, 1, spec.fixed_m_r).bits;

  const SweepRow& last = res.rows.back();
  res.saturation_delta = last.stat;
  res.limit_gap = std::abs(last.bits - res.limit_bits) / std::max(res.limit_bits, 1e-300);

  bool deltas_shrink = true;
  const std::size_t nrows = res.rows.size();
  for (std::size_t i = nrows >= 3 ? nrows - 2 : 1; i < nrows; ++i)
    if (!(res.rows[i].stat < res.rows[i - 1].stat)) deltas_shrink = false;

  res.verdict = res.saturation_delta <= spec.saturation_delta_tol &&
                res.limit_gap <= spec.saturation_gap_tol && deltas_shrink;
  res.verdict_detail = "delta=" + format_g17(res.saturation_delta) +
                       " (tol " + format_g17(spec.saturation_delta_tol) +
                       ") limit_gap=" + format_g17(res.limit_gap) + " (tol " +
                       format_g17(spec.saturation_gap_tol) +
                       ") deltas_shrinking=" + (deltas_shrink ? "yes" : "no");
  return res;
}

/**
 * Regime: receive-side log growth. M_T fixed, M_R grows; the slope of
 * capacity against ln(M_R) is capped by d / ln 2 where d counts the
 * positive eigenvalues of the operator built from the continuum receive
 * kernel, and d never exceeds M_T.
 */
inline SweepResult sweep_rx_log_growth(const SweepSpec& spec) {
  validate_sweep_spec(spec);
  if (spec.regime != Regime::rx_log_growth)
    throw std::invalid_argument("sweep_rx_log_growth: wrong regime tag");

  const QuadratureGrid grid = build_grid(spec.resolution);
  const SpreadSamples s = detail::make_environment(spec, grid);
  const PatternSamples tx =
      detail::make_pattern(spec, spec.tx_box, spec.tx_box, spec.fixed_m_t, Side::tx, grid);
  const BlockOperator at = build_A(tx);

  SweepResult res;
  res.regime = spec.regime;
  for (int m : spec.m_values) {
    const PatternSamples rx =
        detail::make_pattern(spec, spec.rx_box, spec.rx_box, m, Side::rx, grid);
    SweepRow row;
    row.m = m;
    row.m_t = spec.fixed_m_t;
    row.m_r = m;
    row.bits = capacity_direct(build_H(tx, rx, s), spec.snr, spec.fixed_m_t, spec.resolution)
                   .bits;
    res.rows.push_back(row);
  }

  res.slope = fit_growth(res.rows, fit_window_start(res.rows.size())).slope;

  const BlockOperator ar_limit =
      lift_kernel(continuum_kernel(spec.rx_box, spec.k, spec.polarization, grid));
  const BlockOperator d_op = build_K(at, ar_limit, lift_kernel(s));
  const RVec lam = eigenvalues_psd(d_op, "sweep_rx_log_growth");
  int d = 0;
  if (lam.size() > 0 && lam(0) > 0.0)
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam(i) > 1e-10 * lam(0)) ++d;
  res.d_count = d;
  res.slope_limit = d / kLn2 * (1.0 + spec.slope_tol);

  res.verdict = res.slope <= res.slope_limit && d <= spec.fixed_m_t;
  res.verdict_detail = "slope=" + format_g17(res.slope) + " limit=" +
                       format_g17(res.slope_limit) + " d=" + std::to_string(d) +
                       " m_t=" + std::to_string(spec.fixed_m_t);
  return res;
}

/**
 * Regime: proportional growth with a finite-rank environment. Capacity is
 * computed through the N x N determinant formula, so the sweep reaches
 * thousands of antennas; growth is capped by (N / ln 2) ln M and by the
 * explicit per-M bound with the measured top eigenvalue.
 */
inline SweepResult sweep_proportional_finite_rank(const SweepSpec& spec) {
  validate_sweep_spec(spec);
  if (spec.regime != Regime::proportional_finite_rank)
    throw std::invalid_argument("sweep_proportional_finite_rank: wrong regime tag");
  if (!spec.scatterers)
    throw std::invalid_argument(
        "sweep_proportional_finite_rank: needs a finite-rank environment");

  const QuadratureGrid grid = build_grid(spec.resolution);
  const ScattererSet& set = *spec.scatterers;

  SweepResult res;
  res.regime = spec.regime;
  bool bounds_hold = true;
  for (int m : spec.m_values) {
    const int m_r = round_ties_up(spec.ratio_a * m);
    const PatternSamples tx =
        detail::make_pattern(spec, spec.tx_box, spec.tx_box, m, Side::tx, grid);
    const PatternSamples rx =
        detail::make_pattern(spec, spec.rx_box, spec.rx_box, m_r, Side::rx, grid);
    const FiniteRankData data =
        build_finite_rank_data(set, build_A(tx), build_A(rx), m, spec.ratio_a, spec.snr);
    SweepRow row;
    row.m = m;
    row.m_t = m;
    row.m_r = m_r;
    row.bits = capacity_finite_rank(data, spec.ratio_a, m, spec.snr).bits;
    row.bound_bits = finite_rank_growth_bound(data, spec.ratio_a, m);
    if (row.bits > row.bound_bits + 1e-9 * (1.0 + row.bound_bits)) bounds_hold = false;
    res.rows.push_back(row);
  }

  const SweepRow& last = res.rows.back();
  res.ratio_at_max = last.bits / std::log(static_cast<double>(last.m));
  res.ratio_limit = set.rank() / kLn2 * (1.0 + spec.rank_ratio_tol);
  res.verdict = res.ratio_at_max <= res.ratio_limit && bounds_hold;
  res.verdict_detail = "capacity/ln(M)=" + format_g17(res.ratio_at_max) + " limit=" +
                       format_g17(res.ratio_limit) +
                       " per_M_bounds=" + (bounds_hold ? "hold" : "violated");
  return res;
}

/**
 * Regime: proportional growth with a smooth environment. The dyadic
 * exponent e(M) = log2(C(M)/C(M/2)) falls with M and ends below epsilon;
 * every sweep point also carries the certified truncation bound at
 * E = M^((1-eps)/n).
 */
inline SweepResult sweep_proportional_smooth(const SweepSpec& spec) {
  validate_sweep_spec(spec);
  if (spec.regime != Regime::proportional_smooth)
    throw std::invalid_argument("sweep_proportional_smooth: wrong regime tag");
  if (!spec.smooth)
    throw std::invalid_argument("sweep_proportional_smooth: needs a smooth environment");

  const QuadratureGrid grid = build_grid(spec.resolution);
  const SpreadSamples s = detail::make_environment(spec, grid);
  const ShBasis sh = build_sh_basis(grid, spec.resolution - 1);

  SweepResult res;
  res.regime = spec.regime;
  bool bounds_hold = true;
  for (int m : spec.m_values) {
    const int m_r = round_ties_up(spec.ratio_a * m);
    const PatternSamples tx =
        detail::make_pattern(spec, spec.tx_box, spec.tx_box, m, Side::tx, grid);
    const PatternSamples rx =
        detail::make_pattern(spec, spec.rx_box, spec.rx_box, m_r, Side::rx, grid);
    const double cutoff =
        std::pow(static_cast<double>(m), (1.0 - spec.epsilon) / spec.order_n);
    const TruncationPlan plan = plan_truncation(s, sh, cutoff, spec.order_n);
    const TruncatedBoundReport rep =
        truncated_capacity_bound(plan, s, sh, tx, rx, spec.snr, m, spec.ratio_a);
    SweepRow row;
    row.m = m;
    row.m_t = m;
    row.m_r = m_r;
    row.bits = rep.c_actual_bits;
    row.bound_bits = rep.c_bound_bits;
    if (row.bits > row.bound_bits + 1e-9 * (1.0 + row.bound_bits)) bounds_hold = false;
    res.rows.push_back(row);
  }
  fill_dyadic_exponents(res.rows);

  const std::size_t nrows = res.rows.size();
  bool exponents_fall = true;
  for (std::size_t i = nrows - 2; i < nrows; ++i) {
    const double prev = res.rows[i - 1].stat;
    const double cur = res.rows[i].stat;
    if (!(std::isfinite(prev) && std::isfinite(cur) && cur < prev)) exponents_fall = false;
  }
  const double final_exponent = res.rows.back().stat;

  res.verdict = exponents_fall && std::isfinite(final_exponent) &&
                final_exponent < spec.epsilon && bounds_hold;
  res.verdict_detail = "final_exponent=" + format_g17(final_exponent) + " (target < " +
                       format_g17(spec.epsilon) + ") exponents_falling=" +
                       (exponents_fall ? "yes" : "no") +
                       " certified_bounds=" + (bounds_hold ? "hold" : "violated");
  return res;
}

inline SweepResult run_sweep(const SweepSpec& spec) {
  switch (spec.regime) {
    case Regime::tx_saturation: return sweep_tx_saturation(spec);
    case Regime::rx_log_growth: return sweep_rx_log_growth(spec);
    case Regime::proportional_finite_rank: return sweep_proportional_finite_rank(spec);
    default: return sweep_proportional_smooth(spec);
  }
}

}  // namespace mimocap
