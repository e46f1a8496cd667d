#pragma once

// Shared builders for the test suite: deterministic random matrices and a
// small end-to-end problem (grid, arrays, spread) sized for fast tests.

#include <optional>

#include "mimocap/mimocap.hpp"

namespace testsup {

using namespace mimocap;

inline Box make_box(double side, const Vec3& center = Vec3::Zero()) {
  Box b;
  b.center = center;
  b.side = Vec3(side, side, side);
  return b;
}

inline Vec6 default_pol() {
  Vec6 p = Vec6::Zero();
  p(0) = 1.0;
  return p;
}

inline Mat random_matrix(Rng& rng, int rows, int cols) {
  Mat g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = rng.cnormal();
  return g;
}

inline Mat random_psd(Rng& rng, int n) {
  const Mat g = random_matrix(rng, n, n);
  return hermitize(g * g.adjoint() / double(n));
}

/// Haar-ish unitary via QR with the R-diagonal phase fix.
inline Mat haar_unitary(Rng& rng, int n) {
  const Mat g = random_matrix(rng, n, n);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const cplx d = r(j, j);
    const double a = std::abs(d);
    q.col(j) *= (a > 0.0) ? d / a : cplx(1.0, 0.0);
  }
  return q;
}

/// Same operator forced into the dense representation, tags preserved.
inline BlockOperator dense_copy(const BlockOperator& op) {
  BlockOperator out;
  out.grid = op.grid;
  out.mat = op.dense();
  out.self_adjoint = op.self_adjoint;
  out.psd = op.psd;
  return out;
}

inline Mat random_projector(Rng& rng, int n, int k) {
  const Mat g = random_matrix(rng, n, k);
  Eigen::HouseholderQR<Mat> qr(g);
  const Mat q = qr.householderQ() * Mat::Identity(n, k);
  return hermitize(q * q.adjoint());
}

struct ProblemSpec {
  int resolution = 6;
  int tx_count = 3;
  int rx_count = 4;
  double tx_side = 0.4;
  double rx_side = 0.45;
  double k = 2.0 * kPi;
  FillScheme scheme = FillScheme::halton;
  int env_rank = 3;
  int env_band = 2;
  double coeff_scale = 1.0;
  std::uint64_t seed = 7;
};

struct Problem {
  QuadratureGrid grid;
  PatternSamples tx;
  PatternSamples rx;
  ScattererSet set;
  SpreadSamples spread;
};

inline Problem build_problem(const ProblemSpec& ps = ProblemSpec{}) {
  Problem p;
  p.grid = build_grid(ps.resolution);
  const AntennaArray tx =
      make_array(make_box(ps.tx_side), ps.tx_count, ps.scheme, ps.k, default_pol());
  const AntennaArray rx =
      make_array(make_box(ps.rx_side), ps.rx_count, ps.scheme, ps.k, default_pol());
  p.tx = sample_pattern(tx, p.grid, Side::tx);
  p.rx = sample_pattern(rx, p.grid, Side::rx);
  p.set = make_random_scatterer_set(ps.env_rank, ps.env_band, ps.seed, ps.coeff_scale);
  p.spread = sample_finite_rank(p.set, p.grid);
  return p;
}

inline SmoothSpread default_smooth(double kappa = 5.0, double amplitude = 1.0) {
  SmoothSpread s;
  s.kappa = kappa;
  s.amplitude = amplitude * Mat6::Identity();
  s.mu_r = Direction{0.7, 1.1};
  s.mu_t = Direction{2.0, -0.4};
  return s;
}

}  // namespace testsup
