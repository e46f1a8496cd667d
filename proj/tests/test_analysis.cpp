#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace mimocap;

TEST_CASE("trace log determinant has a closed form on diagonal input") {
  Mat t = Mat::Zero(2, 2);
  t(0, 0) = 1.0;
  t(1, 1) = 3.0;
  REQUIRE(std::abs(trace_log1p_psd(t, "test") - 3.0 * kLn2) <= 1e-14);
}

TEST_CASE("trace inequalities reduce to closed numbers on identity input") {
  const Mat t1 = Mat::Zero(4, 4);
  const Mat t2 = Mat::Identity(4, 4);
  const TraceIneqReport rep = check_trace_inequalities(t1, t2);
  REQUIRE(std::abs(rep.tr_f1) <= 1e-13);
  REQUIRE(std::abs(rep.tr_f2 - 4.0 * kLn2) <= 1e-13);
  REQUIRE(std::abs(rep.lhs_contraction - 4.0 * kLn2) <= 1e-13);
  REQUIRE(std::abs(rep.rhs_contraction - 4.0) <= 1e-13);
  REQUIRE(std::abs(rep.rhs_tangent - 4.0) <= 1e-13);
  REQUIRE(rep.pass_contraction);
  REQUIRE(rep.pass_tangent);
}

TEST_CASE("trace inequalities are tight when the operators coincide") {
  Rng rng(3);
  const Mat t = testsup::random_psd(rng, 5);
  const TraceIneqReport rep = check_trace_inequalities(t, t);
  REQUIRE(std::abs(rep.lhs_contraction) <= 1e-12 * rep.scale);
  REQUIRE(std::abs(rep.rhs_contraction) <= 1e-12 * rep.scale);
  REQUIRE(std::abs(rep.margin_tangent) <= 1e-12 * rep.scale);
  REQUIRE(rep.pass_contraction);
  REQUIRE(rep.pass_tangent);
}

TEST_CASE("trace inequalities hold on random positive pairs") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 12));
    const double s1 = rng.uniform(0.1, 10.0);
    const double s2 = rng.uniform(0.1, 10.0);
    const Mat t1 = s1 * testsup::random_psd(rng, n);
    Mat t2;
    if (trial % 3 == 0) {
      t2 = hermitize(t1 + 0.05 * testsup::random_psd(rng, n));
    } else {
      t2 = s2 * testsup::random_psd(rng, n);
    }
    const TraceIneqReport rep = check_trace_inequalities(t1, t2);
    INFO("trial " << trial << " n " << n);
    REQUIRE(rep.pass_contraction);
    REQUIRE(rep.pass_tangent);
    REQUIRE(rep.margin_contraction >= -1e-10 * rep.scale);
    REQUIRE(rep.margin_tangent >= -1e-10 * rep.scale);
  }
}

TEST_CASE("tangent bound is first-order exact") {
  Rng rng(29);
  const Mat t1 = testsup::random_psd(rng, 6);
  const Mat bump = testsup::random_psd(rng, 6);
  const TraceIneqReport rep = check_trace_inequalities(t1, hermitize(t1 + 1e-4 * bump));
  REQUIRE(rep.margin_tangent >= 0.0);
  REQUIRE(rep.margin_tangent <= 1e-5);
}

TEST_CASE("trace inequality validation") {
  REQUIRE_THROWS_AS(check_trace_inequalities(Mat::Zero(2, 3), Mat::Zero(3, 3)),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(check_trace_inequalities(Mat::Zero(2, 2), Mat::Zero(3, 3)),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(check_trace_inequalities(Mat::Zero(3, 3), -Mat::Identity(3, 3)),
                    NotPsdError);
}

TEST_CASE("splitting bound is tight for trivial projectors") {
  Rng rng(5);
  const Mat t2 = testsup::random_psd(rng, 5);
  const BerezinReport full = berezin_split(t2, Mat::Identity(5, 5));
  REQUIRE(std::abs(full.margin) <= 1e-12 * full.scale);
  REQUIRE(full.pass);
  const BerezinReport none = berezin_split(t2, Mat::Zero(5, 5));
  REQUIRE(std::abs(none.margin) <= 1e-12 * none.scale);
  REQUIRE(none.pass);
}

TEST_CASE("splitting bound is tight for a commuting projector") {
  Rng rng(9);
  const int k = 2, n = 6;
  Mat t2 = Mat::Zero(n, n);
  t2.topLeftCorner(k, k) = testsup::random_psd(rng, k);
  t2.bottomRightCorner(n - k, n - k) = testsup::random_psd(rng, n - k);
  Mat p = Mat::Zero(n, n);
  p.topLeftCorner(k, k) = Mat::Identity(k, k);
  const BerezinReport rep = berezin_split(t2, p);
  REQUIRE(std::abs(rep.margin) <= 1e-12 * rep.scale);
  REQUIRE(rep.pass);
}

TEST_CASE("splitting bound holds for random projectors") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 12));
    const int k = static_cast<int>(rng.uniform_int(1, n - 1));
    const double s = rng.uniform(0.1, 5.0);
    const Mat t2 = s * testsup::random_psd(rng, n);
    const Mat p = testsup::random_projector(rng, n, k);
    const BerezinReport rep = berezin_split(t2, p);
    INFO("trial " << trial << " n " << n << " k " << k);
    REQUIRE(rep.pass);
    REQUIRE(rep.margin >= -1e-10 * rep.scale);
  }
}

TEST_CASE("splitting bound rejects a non-projector") {
  const Mat t2 = Mat::Identity(3, 3);
  REQUIRE_THROWS_AS(berezin_split(t2, 0.5 * Mat::Identity(3, 3)), std::invalid_argument);
  Mat skew = Mat::Zero(3, 3);
  skew(0, 1) = 1.0;
  REQUIRE_THROWS_AS(berezin_split(t2, skew), std::invalid_argument);
  REQUIRE_THROWS_AS(berezin_split(t2, Mat::Identity(4, 4)), std::invalid_argument);
}

TEST_CASE("truncation plan on a band-limited kernel") {
  const testsup::Problem p = testsup::build_problem();
  const ShBasis sh = build_sh_basis(p.grid, p.grid.resolution - 1);

  SECTION("cutoff above the band keeps everything") {
    const TruncationPlan plan = plan_truncation(p.spread, sh, 10.0, 2);
    REQUIRE(plan.tail_measured <= 1e-7 * hs_norm(p.spread));
    REQUIRE(plan.tail_bound_projected <= 1e-7 * hs_norm(p.spread));
    REQUIRE(plan.tail_measured <= plan.tail_bound + 1e-12);
    REQUIRE(plan.scalar_dim == 9);
    REQUIRE(plan.six_dim == 54);
  }

  SECTION("cutoff inside the band leaves exactly the top degree") {
    const DegreeMassProfile profile = degree_mass_profile(p.spread, sh);
    double mass_l2 = 0.0;
    for (int m = -2; m <= 2; ++m) mass_l2 += profile.per_column(sh_index(2, m));
    const TruncationPlan plan = plan_truncation(p.spread, sh, 3.0, 1);
    REQUIRE(std::abs(plan.tail_measured - std::sqrt(mass_l2)) <= 1e-10);
    REQUIRE(plan.tail_measured <= plan.tail_bound + 1e-12);
    REQUIRE(plan.tail_bound_projected <= plan.tail_bound + 1e-12);
    // Only l = 2 lies above the cutoff, so the projected bound is
    // (1/E) * 6 * sqrt(mass_l2) exactly.
    REQUIRE(std::abs(plan.tail_bound_projected - 2.0 * std::sqrt(mass_l2)) <= 1e-10);
  }

  SECTION("validation") {
    REQUIRE_THROWS_AS(plan_truncation(p.spread, sh, 0.0, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(plan_truncation(p.spread, sh, 10.0, -1), std::invalid_argument);
  }
}

TEST_CASE("truncation plan refuses a kernel beyond the basis band") {
  const QuadratureGrid grid = build_grid(6);
  const ShBasis sh = build_sh_basis(grid, grid.resolution - 1);
  const SpreadSamples s = sample_smooth(testsup::default_smooth(), grid);
  REQUIRE_THROWS_AS(plan_truncation(s, sh, 10.0, 1), BandLimitError);
}

TEST_CASE("smooth kernels satisfy the order-n tail estimate") {
  const QuadratureGrid grid = build_grid(25);
  const ShBasis sh = build_sh_basis(grid, grid.resolution - 1);
  const SpreadSamples s = sample_smooth(testsup::default_smooth(), grid);
  for (int n : {1, 2, 3}) {
    for (double e : {10.0, 30.0, 100.0}) {
      const TruncationPlan plan = plan_truncation(s, sh, e, n);
      INFO("order " << n << " cutoff " << e);
      REQUIRE(plan.tail_measured <= plan.tail_bound + 1e-12);
      REQUIRE(plan.tail_bound_projected <= plan.tail_bound + 1e-12);
    }
  }
}

TEST_CASE("certified capacity bound covers the actual capacity") {
  const testsup::Problem p = testsup::build_problem();
  const ShBasis sh = build_sh_basis(p.grid, p.grid.resolution - 1);
  const SnrConfig snr{10.0, 1.0};
  const double a = 4.0 / 3.0;
  const TruncationPlan plan = plan_truncation(p.spread, sh, 10.0, 1);
  const TruncatedBoundReport rep =
      truncated_capacity_bound(plan, p.spread, sh, p.tx, p.rx, snr, 3, a);
  REQUIRE(rep.c_actual_bits <= rep.c_bound_bits + 1e-9 * (1.0 + rep.c_bound_bits));
  REQUIRE(rep.rank_term_bits >= 0.0);
  REQUIRE(rep.tail_term_bits >= 0.0);
  REQUIRE(std::abs(rep.c_bound_bits - rep.rank_term_bits - rep.tail_term_bits) <= 1e-12);

  const double direct = capacity_direct(build_H(p.tx, p.rx, p.spread), snr, 3).bits;
  REQUIRE(std::abs(rep.c_actual_bits - direct) <= 1e-12 * std::max(1.0, direct));

  REQUIRE_THROWS_AS(truncated_capacity_bound(plan, p.spread, sh, p.tx, p.rx, snr, 4, a),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(truncated_capacity_bound(plan, p.spread, sh, p.tx, p.rx, snr, 3, 1.0),
                    std::invalid_argument);
}
