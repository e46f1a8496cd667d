#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mimocap/common.hpp"
#include "mimocap/sphere.hpp"

namespace mimocap {

/// Axis-aligned box in meters.
struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 side = Vec3::Ones();

  double volume() const { return side.prod(); }

  bool contains(const Vec3& x, double slack = 1e-12) const {
    for (int d = 0; d < 3; ++d) {
      if (std::abs(x(d) - center(d)) > 0.5 * side(d) + slack) return false;
    }
    return true;
  }
};

inline void validate_box(const Box& box, const char* who) {
  for (int d = 0; d < 3; ++d) {
    if (!(box.side(d) > 0.0))
      throw std::invalid_argument(std::string(who) + ": box sides must be positive");
  }
}

enum class FillScheme { lattice, halton };

namespace detail {

/// Near-cubic factorization n1 <= n2 <= n3 with n1*n2*n3 >= count.
/// Excess cells and elongation are both penalized so that powers of two and
/// perfect cubes factor exactly while prime counts still come out blocky
/// rather than as a line of cells.
inline std::array<int, 3> lattice_factors(int count) {
  std::array<int, 3> best{1, 1, count};
  double best_cost = 1e300;
  const int top = static_cast<int>(std::ceil(std::cbrt(double(count)))) + 1;
  for (int n1 = 1; n1 <= top; ++n1) {
    const int top2 = static_cast<int>(std::ceil(std::sqrt(double(count) / n1))) + 1;
    for (int n2 = n1; n2 <= top2; ++n2) {
      int n3 = static_cast<int>(std::ceil(double(count) / (double(n1) * n2)));
      n3 = std::max(n3, n2);
      const double excess = double(n1) * n2 * n3 - count;
      const double aspect = double(n3) / double(n1);
      const double cost = excess + aspect;
      if (cost < best_cost - 1e-12) {
        best_cost = cost;
        best = {n1, n2, n3};
      }
    }
  }
  return best;
}

inline double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * double(index % base);
    index /= base;
  }
  return r;
}

}  // namespace detail

/**
 * Deterministic positions filling a box.
 *
 * lattice: a near-cubic regular lattice of cell centers, truncated to the
 * requested count. The factor with the most cells goes to the longest box
 * side. halton: the (2,3,5) Halton sequence scaled into the box. Both
 * schemes place every point strictly inside the box and depend only on
 * (box, count, scheme).
 */
inline Eigen::Matrix3Xd fill_volume(const Box& box, int count, FillScheme scheme) {
  validate_box(box, "fill_volume");
  if (count < 1) throw std::invalid_argument("fill_volume: count must be >= 1");

  Eigen::Matrix3Xd pos(3, count);
  if (scheme == FillScheme::halton) {
    const int bases[3] = {2, 3, 5};
    for (int m = 0; m < count; ++m)
      for (int d = 0; d < 3; ++d)
        pos(d, m) = box.center(d) + (detail::halton(m + 1, bases[d]) - 0.5) * box.side(d);
    return pos;
  }

  const auto n = detail::lattice_factors(count);
  // Longest side takes the largest factor; ties resolve by axis order.
  std::array<int, 3> axes{0, 1, 2};
  std::sort(axes.begin(), axes.end(), [&](int a, int b) {
    if (box.side(a) != box.side(b)) return box.side(a) > box.side(b);
    return a < b;
  });
  std::array<int, 3> cells{};  // cells per axis x,y,z
  cells[axes[0]] = n[2];
  cells[axes[1]] = n[1];
  cells[axes[2]] = n[0];

  int m = 0;
  for (int iz = 0; iz < cells[2] && m < count; ++iz)
    for (int iy = 0; iy < cells[1] && m < count; ++iy)
      for (int ix = 0; ix < cells[0] && m < count; ++ix) {
        if (m >= count) break;
        const int idx[3] = {ix, iy, iz};
        for (int d = 0; d < 3; ++d)
          pos(d, m) = box.center(d) + box.side(d) * ((idx[d] + 0.5) / cells[d] - 0.5);
        ++m;
      }
  return pos;
}

/**
 * An array of isotropic point elements inside a box.
 *
 * Element m sits at positions.col(m) and carries a fixed six-component
 * polarization vector of norm in (0, 1]. The wavenumber k is shared by the
 * whole array.
 */
struct AntennaArray {
  Box box;
  double k = 2.0 * kPi;
  Eigen::Matrix3Xd positions;                 // 3 x M
  Eigen::Matrix<cplx, 6, Eigen::Dynamic> pol; // 6 x M

  int count() const { return static_cast<int>(positions.cols()); }
};

inline AntennaArray make_array(const Box& box, int count, FillScheme scheme, double k,
                               const Vec6& polarization) {
  if (!(k > 0.0)) throw std::invalid_argument("make_array: wavenumber must be positive");
  const double pn = polarization.norm();
  if (!(pn > 0.0) || pn > 1.0 + 1e-12)
    throw std::invalid_argument("make_array: polarization norm must lie in (0, 1]");
  AntennaArray a;
  a.box = box;
  a.k = k;
  a.positions = fill_volume(box, count, scheme);
  a.pol = polarization.replicate(1, count);
  return a;
}

/// Same validation, but with caller-provided positions (used for nested
/// sub-array studies where one fill is shared across several counts).
inline AntennaArray make_array_at(const Box& box, const Eigen::Matrix3Xd& positions, double k,
                                  const Vec6& polarization) {
  validate_box(box, "make_array_at");
  if (!(k > 0.0)) throw std::invalid_argument("make_array_at: wavenumber must be positive");
  if (positions.cols() < 1) throw std::invalid_argument("make_array_at: need at least one element");
  const double pn = polarization.norm();
  if (!(pn > 0.0) || pn > 1.0 + 1e-12)
    throw std::invalid_argument("make_array_at: polarization norm must lie in (0, 1]");
  for (int m = 0; m < positions.cols(); ++m) {
    if (!box.contains(positions.col(m), 1e-9))
      throw std::invalid_argument("make_array_at: element outside the box");
  }
  AntennaArray a;
  a.box = box;
  a.k = k;
  a.positions = positions;
  a.pol = polarization.replicate(1, static_cast<int>(positions.cols()));
  return a;
}

enum class Side { tx, rx };

/**
 * Radiation pattern of an array sampled on a quadrature grid.
 *
 * Storage is the weighted port matrix: wport[(6q+i), m] =
 * sqrt(w_q) * p_m[i] * exp(i k x_m . u(q)). On the transmit side the raw
 * entry is the pattern value itself; on the receive side the pattern entry
 * (m, j) at node q is its complex conjugate. Keeping only the weighted form
 * means Gram matrices, channel assembly and quadratic forms are plain
 * matrix products with no further weight bookkeeping.
 */
struct PatternSamples {
  Side side = Side::tx;
  QuadratureGrid grid;
  Mat wport;  // 6Q x M

  int count() const { return static_cast<int>(wport.cols()); }

  /// 6 x M transmit-pattern block at node q (unweighted).
  Mat tx_value(int q) const {
    return wport.middleRows(6 * q, 6) / grid.sqrt_w(q);
  }

  /// M x 6 receive-pattern block at node q (unweighted).
  Mat rx_value(int q) const {
    return (wport.middleRows(6 * q, 6) / grid.sqrt_w(q)).adjoint();
  }
};

inline PatternSamples sample_pattern(const AntennaArray& array, const QuadratureGrid& grid,
                                     Side side) {
  const int Q = grid.size();
  const int M = array.count();
  PatternSamples ps;
  ps.side = side;
  ps.grid = grid;
  ps.wport.resize(6 * Q, M);
  for (int q = 0; q < Q; ++q) {
    const Vec3 u = grid.nodes[q].unit();
    const double sw = grid.sqrt_w(q);
    for (int m = 0; m < M; ++m) {
      const cplx phase = std::polar(sw, array.k * array.positions.col(m).dot(u));
      ps.wport.block<6, 1>(6 * q, m) = phase * array.pol.col(m);
    }
  }
  return ps;
}

/**
 * A 6x6 matrix kernel on node pairs of one grid, stored in weighted form:
 * wmat[(6q+i),(6q'+j)] = sqrt(w_q) A_{ij}(q, q') sqrt(w_q'). When the kernel
 * arises as an explicit Gram sum the factor G with wmat = G G^H is kept, so
 * downstream spectral work can stay in the thin factor.
 */
struct LimitKernel {
  QuadratureGrid grid;
  Mat wmat;
  std::optional<Mat> gram;

  Mat6 value_at(int q, int qp) const {
    return wmat.block<6, 6>(6 * q, 6 * qp) / (grid.sqrt_w(q) * grid.sqrt_w(qp));
  }
};

/// Element-averaged pattern Gram kernel (1/M) sum_m a^{im}(q) conj(a^{jm}(q')).
inline LimitKernel empirical_kernel(const PatternSamples& ps) {
  LimitKernel k;
  k.grid = ps.grid;
  k.gram = ps.wport / std::sqrt(double(ps.count()));
  k.wmat.noalias() = (*k.gram) * k.gram->adjoint();
  return k;
}

/**
 * Continuum limit of the element-averaged kernel for a uniformly filled box:
 *
 *   A_{ij}(q, q') = p_i conj(p_j) exp(i k c . du) prod_d sinc(k L_d du_d / 2)
 *
 * with du = u(q) - u(q'), box center c and sides L. This is the exact volume
 * average (1/|V|) int_V exp(i k x . du) dx of the phase profile.
 */
inline LimitKernel continuum_kernel(const Box& box, double k, const Vec6& polarization,
                                    const QuadratureGrid& grid) {
  validate_box(box, "continuum_kernel");
  if (!(k > 0.0)) throw std::invalid_argument("continuum_kernel: wavenumber must be positive");
  const double pn = polarization.norm();
  if (!(pn > 0.0) || pn > 1.0 + 1e-12)
    throw std::invalid_argument("continuum_kernel: polarization norm must lie in (0, 1]");

  const int Q = grid.size();
  std::vector<Vec3> u(Q);
  for (int q = 0; q < Q; ++q) u[q] = grid.nodes[q].unit();

  const Mat6 pp = polarization * polarization.adjoint();
  LimitKernel out;
  out.grid = grid;
  out.wmat.resize(6 * Q, 6 * Q);
  for (int qp = 0; qp < Q; ++qp) {
    for (int q = 0; q < Q; ++q) {
      const Vec3 du = u[q] - u[qp];
      double profile = 1.0;
      for (int d = 0; d < 3; ++d) profile *= sinc(0.5 * k * box.side(d) * du(d));
      const cplx phase = std::polar(grid.sqrt_w(q) * grid.sqrt_w(qp) * profile,
                                    k * box.center.dot(du));
      out.wmat.block<6, 6>(6 * q, 6 * qp) = phase * pp;
    }
  }
  return out;
}

/// Largest entrywise deviation between two kernels over all node pairs,
/// measured on unweighted values. Used to track empirical-to-continuum
/// convergence as a box fills up.
inline double kernel_sup_distance(const LimitKernel& a, const LimitKernel& b) {
  if (!a.grid.same_layout(b.grid))
    throw std::invalid_argument("kernel_sup_distance: grids differ");
  const RVec inv = a.grid.sqrt_w.cwiseInverse();
  double sup = 0.0;
  const int Q = a.grid.size();
  for (int qp = 0; qp < Q; ++qp)
    for (int q = 0; q < Q; ++q) {
      const double scale = inv(q) * inv(qp);
      const double dv =
          ((a.wmat.block<6, 6>(6 * q, 6 * qp) - b.wmat.block<6, 6>(6 * q, 6 * qp)) * scale)
              .cwiseAbs()
              .maxCoeff();
      sup = std::max(sup, dv);
    }
  return sup;
}

}  // namespace mimocap
