// Acceptance gate: every release-blocking property in one binary, one
// verdict line per criterion. Exits nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mimocap/mimocap.hpp"

#ifndef MIMOCAP_CLI_PATH
#error "MIMOCAP_CLI_PATH must point at the command line binary"
#endif

using namespace mimocap;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

Box cube(double side, const Vec3& center = Vec3::Zero()) {
  Box b;
  b.center = center;
  b.side = Vec3(side, side, side);
  return b;
}

Vec6 unit_pol() {
  Vec6 p = Vec6::Zero();
  p(0) = 1.0;
  return p;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

/// Smallest eigenvalue normalized by the largest, without any clamping.
double normalized_min_eig(const Mat& hermitian_psd_candidate) {
  const RVec lam = eigh_values(hermitize(hermitian_psd_candidate));
  const double top = std::max(lam(lam.size() - 1), 1e-300);
  return lam(0) / top;
}

// ---------------------------------------------------------------------------

Verdict criterion_route_equivalence() {
  const QuadratureGrid grid = build_grid(12);
  Rng rng(2026);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 4));
    const int m_t = static_cast<int>(rng.uniform_int(1, 8));
    const int m_r = static_cast<int>(rng.uniform_int(1, 8));
    const double tx_side = rng.uniform(0.25, 0.45);
    const double rx_side = rng.uniform(0.3, 0.5);
    const double scale = rng.uniform(0.5, 2.0);
    const SnrConfig snr{rng.uniform(1.0, 20.0), 1.0};
    const std::uint64_t seed = 100 + trial;

    const ScattererSet set = make_random_scatterer_set(n, 2, seed, scale);
    const SpreadSamples s = sample_finite_rank(set, grid);
    const AntennaArray tx_arr = make_array(cube(tx_side), m_t, FillScheme::halton,
                                           2.0 * kPi, unit_pol());
    const AntennaArray rx_arr = make_array(cube(rx_side), m_r, FillScheme::halton,
                                           2.0 * kPi, unit_pol());
    const PatternSamples tx = sample_pattern(tx_arr, grid, Side::tx);
    const PatternSamples rx = sample_pattern(rx_arr, grid, Side::rx);
    const BlockOperator at = build_A(tx);
    const BlockOperator ar = build_A(rx);

    const double direct = capacity_direct(build_H(tx, rx, s), snr, m_t).bits;
    const double fred = capacity_fredholm(build_K(at, ar, lift_kernel(s)), snr, m_t, m_r).bits;
    const double a = static_cast<double>(m_r) / m_t;
    const FiniteRankData data = build_finite_rank_data(set, at, ar, m_t, a, snr);
    const double fin = capacity_finite_rank(data, a, m_t, snr).bits;

    worst = std::max({worst, rel_diff(direct, fred), rel_diff(direct, fin),
                      rel_diff(fred, fin)});
  }
  Verdict v;
  v.pass = worst <= 1e-6;
  v.detail = "10 configs at resolution 12, max route disagreement " + fmt(worst) +
             " (tol 1e-06)";
  return v;
}

Verdict criterion_resolvent_identity() {
  const QuadratureGrid grid = build_grid(8);
  Rng rng(777);
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 3));
    const int m_t = static_cast<int>(rng.uniform_int(2, 6));
    const int m_r = static_cast<int>(rng.uniform_int(2, 6));
    const ScattererSet set = make_random_scatterer_set(n, 2, 500 + trial, 1.0);
    const SpreadSamples s = sample_finite_rank(set, grid);
    const PatternSamples tx = sample_pattern(
        make_array(cube(0.4), m_t, FillScheme::halton, 2.0 * kPi, unit_pol()), grid, Side::tx);
    const PatternSamples rx = sample_pattern(
        make_array(cube(0.45), m_r, FillScheme::halton, 2.0 * kPi, unit_pol()), grid,
        Side::rx);
    const Mat b = build_B(build_H(tx, rx, s));
    const BlockOperator k = build_K(build_A(tx), build_A(rx), lift_kernel(s));

    const double radius =
        2.0 * std::max({psd_eigenvalues(b, "acceptance")(0),
                        operator_norm_psd(k, "acceptance"), 1e-6});
    std::vector<cplx> zs;
    for (int j = 0; j < 8; ++j) zs.push_back(radius * std::polar(1.0, 2.0 * kPi * j / 8.0));
    for (const auto& [lhs, rhs] : resolvent_trace_identity_many(b, k, zs))
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
  }
  Verdict v;
  v.pass = worst <= 1e-6;
  v.detail = "3 configs x 8 ring points, max |lhs-rhs|/(1+|lhs|) " + fmt(worst) +
             " (tol 1e-06)";
  return v;
}

Verdict criterion_positivity() {
  const QuadratureGrid grid = build_grid(6);
  Rng rng(31415);
  double worst = 0.0;

  for (int trial = 0; trial < 200; ++trial) {
    const int m_t = static_cast<int>(rng.uniform_int(1, 8));
    const int m_r = static_cast<int>(rng.uniform_int(1, 8));
    const double tx_side = rng.uniform(0.25, 0.5);
    const double rx_side = rng.uniform(0.25, 0.5);
    const PatternSamples tx = sample_pattern(
        make_array(cube(tx_side), m_t, FillScheme::halton, 2.0 * kPi, unit_pol()), grid,
        Side::tx);
    const PatternSamples rx = sample_pattern(
        make_array(cube(rx_side), m_r, FillScheme::halton, 2.0 * kPi, unit_pol()), grid,
        Side::rx);
    const BlockOperator at = build_A(tx);
    const BlockOperator ar = build_A(rx);
    worst = std::min(worst, normalized_min_eig(at.fac_l.adjoint() * at.fac_l));
    worst = std::min(worst, normalized_min_eig(ar.fac_l.adjoint() * ar.fac_l));

    const int n = static_cast<int>(rng.uniform_int(1, 4));
    const ScattererSet set = make_random_scatterer_set(n, 2, 9000 + trial, 1.0);
    const SpreadSamples s = sample_finite_rank(set, grid);
    const BlockOperator k = build_K(at, ar, lift_kernel(s));
    worst = std::min(worst, normalized_min_eig(k.fac_l.adjoint() * k.fac_l));

    const SnrConfig snr{rng.uniform(1.0, 20.0), 1.0};
    const FiniteRankData data =
        build_finite_rank_data(set, at, ar, m_t, double(m_r) / m_t, snr);
    worst = std::min(worst, normalized_min_eig(data.d));
    worst = std::min(worst, normalized_min_eig(data.phi));
  }
  Verdict v;
  v.pass = worst >= -1e-10;
  v.detail = "200 instances each of the five operator families, min eig / max eig " +
             fmt(worst) + " (floor -1e-10)";
  return v;
}

Verdict criterion_trace_inequalities() {
  Rng rng(2718);
  int failures = 0;
  double worst_margin = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 40));
    Mat g1(n, n), g2(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        g1(i, j) = rng.cnormal();
        g2(i, j) = rng.cnormal();
      }
    const double s1 = rng.uniform(0.1, 10.0);
    const double s2 = rng.uniform(0.1, 10.0);
    const Mat t1 = hermitize(g1 * g1.adjoint()) * (s1 / n);
    Mat t2;
    if (trial % 4 == 0)
      t2 = hermitize(t1 + (0.01 * s2 / n) * hermitize(g2 * g2.adjoint()));
    else
      t2 = hermitize(g2 * g2.adjoint()) * (s2 / n);

    const TraceIneqReport rep = check_trace_inequalities(t1, t2);
    if (!rep.pass_contraction || !rep.pass_tangent) ++failures;
    worst_margin = std::min({worst_margin, rep.margin_contraction / rep.scale,
                             rep.margin_tangent / rep.scale});

    const int kdim = static_cast<int>(rng.uniform_int(1, n - 1));
    Mat gp(n, kdim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < kdim; ++j) gp(i, j) = rng.cnormal();
    Eigen::HouseholderQR<Mat> qr(gp);
    const Mat q = qr.householderQ() * Mat::Identity(n, kdim);
    const BerezinReport ber = berezin_split(t2, hermitize(q * q.adjoint()));
    if (!ber.pass) ++failures;
    worst_margin = std::min(worst_margin, ber.margin / ber.scale);
  }
  Verdict v;
  v.pass = failures == 0;
  v.detail = "200 fuzz trials (dim <= 40): " + std::to_string(failures) +
             " failures, worst normalized margin " + fmt(worst_margin);
  return v;
}

SweepSpec desk_spec() {
  SweepSpec spec;
  spec.tx_box = cube(0.35);
  spec.rx_box = cube(0.45);
  spec.snr = SnrConfig{10.0, 1.0};
  spec.resolution = 8;
  spec.seed = 7;
  return spec;
}

Verdict criterion_saturation() {
  SweepSpec spec = desk_spec();
  spec.regime = Regime::tx_saturation;
  spec.m_values = {16, 32, 64, 128};
  spec.fixed_m_r = 4;
  spec.resolution = 12;
  spec.scatterers = make_random_scatterer_set(2, 2, 7);
  spec.saturation_delta_tol = 0.02;
  spec.saturation_gap_tol = 0.05;
  const SweepResult res = run_sweep(spec);
  Verdict v;
  v.pass = res.verdict && res.saturation_delta <= 0.02 && res.limit_gap <= 0.05;
  v.detail = "M_R=4, rank 2: C(64->128) change " + fmt(res.saturation_delta) +
             " (tol 0.02), gap to continuum limit " + fmt(res.limit_gap) + " (tol 0.05)";
  return v;
}

Verdict criterion_log_growth() {
  SweepSpec spec = desk_spec();
  spec.regime = Regime::rx_log_growth;
  spec.m_values = {8, 16, 32, 64, 128, 256, 512};
  spec.fixed_m_t = 2;
  spec.slope_tol = 0.05;
  spec.scatterers = make_random_scatterer_set(3, 2, 7);
  const SweepResult res = run_sweep(spec);
  Verdict v;
  v.pass = res.verdict && res.slope <= res.slope_limit && res.d_count <= 2;
  v.detail = "M_T=2, M_R up to 512: slope " + fmt(res.slope) + " <= " +
             fmt(res.slope_limit) + " (d=" + std::to_string(res.d_count) + " <= M_T=2)";
  return v;
}

Verdict criterion_finite_rank_growth() {
  SweepSpec spec = desk_spec();
  spec.regime = Regime::proportional_finite_rank;
  spec.m_values = {16, 64, 256, 1024, 4096};
  spec.ratio_a = 1.0;
  spec.rank_ratio_tol = 0.10;
  spec.scatterers = make_random_scatterer_set(3, 2, 7);
  const SweepResult res = run_sweep(spec);

  bool bounds_hold = true;
  for (const SweepRow& row : res.rows)
    if (row.bits > row.bound_bits + 1e-9 * (1.0 + row.bound_bits)) bounds_hold = false;

  Verdict v;
  v.pass = res.verdict && bounds_hold && res.ratio_at_max <= res.ratio_limit;
  v.detail = "N=3, a=1, M=4096: C/ln(M) " + fmt(res.ratio_at_max) + " <= " +
             fmt(res.ratio_limit) + ", per-M explicit bounds " +
             (bounds_hold ? "hold" : "VIOLATED");
  return v;
}

Verdict criterion_smooth_growth() {
  SweepSpec spec = desk_spec();
  spec.regime = Regime::proportional_smooth;
  spec.resolution = 25;
  spec.m_values = {16, 32, 64, 128, 256};
  spec.ratio_a = 1.0;
  spec.epsilon = 0.5;
  spec.order_n = 2;
  SmoothSpread smooth;
  smooth.kappa = 5.0;
  smooth.amplitude = Mat6::Identity();
  smooth.mu_r = Direction{0.7, 1.1};
  smooth.mu_t = Direction{2.0, -0.4};
  spec.smooth = smooth;
  const SweepResult res = run_sweep(spec);

  const std::size_t nrows = res.rows.size();
  const bool falling = res.rows[nrows - 1].stat < res.rows[nrows - 2].stat &&
                       res.rows[nrows - 2].stat < res.rows[nrows - 3].stat;
  bool bounds_hold = true;
  for (const SweepRow& row : res.rows)
    if (row.bits > row.bound_bits + 1e-9 * (1.0 + row.bound_bits)) bounds_hold = false;

  Verdict v;
  v.pass = res.verdict && falling && res.rows.back().stat < 0.5 && bounds_hold;
  v.detail = "kappa=5, M up to 256: top exponents " + fmt(res.rows[nrows - 3].stat) + " > " +
             fmt(res.rows[nrows - 2].stat) + " > " + fmt(res.rows[nrows - 1].stat) +
             " (< 0.5), certified bounds " + (bounds_hold ? "hold" : "VIOLATED");
  return v;
}

Verdict criterion_weyl_law() {
  const WeylCount wc = weyl_count(10000.0);
  const double scalar_ratio = static_cast<double>(wc.scalar_dim) / 10000.0;
  const double six_ratio = static_cast<double>(wc.six_dim) / 10000.0;
  Verdict v;
  v.pass = scalar_ratio >= 0.99 && scalar_ratio <= 1.01 && six_ratio >= 5.94 &&
           six_ratio <= 6.06;
  v.detail = "E=10000: scalar_dim/E = " + fmt(scalar_ratio) +
             " in [0.99, 1.01], six_dim/E = " + fmt(six_ratio) + " in [5.94, 6.06]";
  return v;
}

Verdict criterion_truncation_tail() {
  const QuadratureGrid grid = build_grid(25);
  const ShBasis sh = build_sh_basis(grid, grid.resolution - 1);
  SmoothSpread smooth;
  smooth.kappa = 5.0;
  smooth.amplitude = Mat6::Identity();
  smooth.mu_r = Direction{0.7, 1.1};
  smooth.mu_t = Direction{2.0, -0.4};
  const SpreadSamples s = sample_smooth(smooth, grid);

  double worst = -1e300;
  bool all_hold = true;
  for (int n : {1, 2, 3}) {
    for (double e : {10.0, 30.0, 100.0}) {
      const TruncationPlan plan = plan_truncation(s, sh, e, n);
      if (plan.tail_measured > plan.tail_bound + 1e-12 * (1.0 + plan.tail_bound))
        all_hold = false;
      worst = std::max(worst, plan.tail_measured - plan.tail_bound);
    }
  }
  Verdict v;
  v.pass = all_hold;
  v.detail = "orders 1..3 at E in {10,30,100}: measured tail <= E^-n |S_n| everywhere "
             "(worst slack " + fmt(-worst) + ")";
  return v;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MIMOCAP_CLI_PATH + "\" " + args +
                          " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict criterion_determinism() {
  const fs::path root = fs::current_path() / "acceptance_scratch";
  fs::remove_all(root);
  fs::create_directories(root);

  const fs::path cap_cfg = root / "capacity.json";
  {
    std::ofstream out(cap_cfg);
    out << R"({"seed": 7, "resolution": 8, "environment": "finite_rank",
               "env_rank": 2, "env_band": 2, "tx_count": 3, "rx_count": 4,
               "tx_box_side_m": 0.35, "rx_box_side_m": 0.45})";
  }
  const fs::path sweep_cfg = root / "sweep.json";
  {
    std::ofstream out(sweep_cfg);
    out << R"({"seed": 7, "resolution": 8, "environment": "finite_rank",
               "env_rank": 3, "env_band": 2, "regime": "rx_log_growth",
               "m_values": [8, 16, 32, 64], "fixed_m_t": 2,
               "tx_box_side_m": 0.35, "rx_box_side_m": 0.45})";
  }

  struct Cmd {
    std::string args;
    std::vector<std::string> files;
  };
  const std::vector<Cmd> cmds = {
      {"capacity --config \"" + cap_cfg.string() + "\"", {"capacity.csv"}},
      {"sweep --config \"" + sweep_cfg.string() + "\"", {"sweep.csv", "plot.csv"}},
      {"verify --suite weyl", {"verify.csv"}},
      {"weyl", {"weyl.csv"}},
  };

  int compared = 0;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    const fs::path d1 = root / ("run_a_" + std::to_string(i));
    const fs::path d2 = root / ("run_b_" + std::to_string(i));
    fs::create_directories(d1);
    fs::create_directories(d2);
    if (run_cli(cmds[i].args + " --out \"" + d1.string() + "\"") != 0) return {};
    if (run_cli(cmds[i].args + " --out \"" + d2.string() + "\"") != 0) return {};
    for (const std::string& f : cmds[i].files) {
      const std::string a = slurp(d1 / f);
      if (a.empty() || a != slurp(d2 / f)) return {};
      ++compared;
    }
  }
  Verdict v;
  v.pass = true;
  v.detail = "4 commands rerun with fixed seeds, " + std::to_string(compared) +
             " output files byte-identical";
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_seconds;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"route equivalence", 60.0, criterion_route_equivalence},
      {"resolvent trace identity", 60.0, criterion_resolvent_identity},
      {"positivity suite", 60.0, criterion_positivity},
      {"trace inequalities and splitting", 60.0, criterion_trace_inequalities},
      {"transmit saturation", 300.0, criterion_saturation},
      {"receive log growth", 300.0, criterion_log_growth},
      {"finite-rank growth cap", 60.0, criterion_finite_rank_growth},
      {"smooth sub-polynomial growth", 600.0, criterion_smooth_growth},
      {"Weyl dimension law", 1.0, criterion_weyl_law},
      {"truncation tail bound", 60.0, criterion_truncation_tail},
      {"byte-identical reruns", 600.0, criterion_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > criteria[i].budget_seconds) {
      v.pass = false;
      v.detail += " [OVER BUDGET " + fmt(criteria[i].budget_seconds) + "s]";
    }
    if (!v.pass) ++failures;
    std::printf("[%s] criterion %zu: %s — %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
