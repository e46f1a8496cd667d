#pragma once

#include <complex>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#ifdef MIMOCAP_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace mimocap {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat6 = Eigen::Matrix<cplx, 6, 6>;
using Vec6 = Eigen::Matrix<cplx, 6, 1>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kFourPi = 4.0 * kPi;
inline constexpr double kLn2 = 0.693147180559945309417232121458176568;

/// Relative floor below the top eigenvalue under which a negative
/// eigenvalue of a nominally non-negative matrix is clamped to zero.
inline constexpr double kPsdSlack = 1e-10;

/// Thrown when a matrix that must be positive semidefinite has an
/// eigenvalue below the tolerated negative floor.
struct NotPsdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a resolvent or solve is requested too close to the spectrum.
struct IllConditionedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when sampled data carries more out-of-band mass than an
/// operation that assumes band-limited input can tolerate.
struct BandLimitError : std::runtime_error {
  double tail_fraction;
  BandLimitError(const std::string& msg, double tail)
      : std::runtime_error(msg), tail_fraction(tail) {}
};

/// Thrown when an internal mathematical identity fails beyond its slack,
/// which indicates a numerical breakdown rather than bad user input.
struct NumericalCheckError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

inline double relative_gap(double a, double b) {
  double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

/**
 * Deterministic random source.
 *
 * All randomness in the project flows through this type. Doubles are derived
 * from the raw 64-bit stream with fixed arithmetic, so a given seed yields
 * the same sequence on every platform and every run, which is what makes
 * seeded CSV output byte-identical.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix(seed)) {}

  std::uint64_t bits() {
    // xorshift* keeps the generator self-contained and reproducible.
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  long uniform_int(long lo, long hi) {
    return lo + static_cast<long>(uniform() * static_cast<double>(hi - lo + 1));
  }

  /// Standard normal via Box-Muller on the deterministic uniform stream.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Complex standard normal, unit total variance.
  cplx cnormal() {
    double re = normal();
    double im = normal();
    return cplx(re, im) * std::sqrt(0.5);
  }

  /// Derive an independent stream for a sub-task without disturbing this one.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return splitmix(splitmix(seed) + 0x9E3779B97F4A7C15ULL * (stream + 1));
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline Mat hermitize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

namespace detail {

#ifdef MIMOCAP_HAVE_LAPACKE
inline void zheevd_inplace(Mat& a, RVec& w, bool vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  w.resize(n);
  lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'L', n,
      reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data());
  if (info != 0) {
    throw NumericalCheckError("zheevd failed to converge, info=" + std::to_string(info));
  }
}
#endif

}  // namespace detail

/**
 * Eigendecomposition of a Hermitian matrix.
 *
 * The input is symmetrized as (m + m^H)/2 before factoring, so callers may
 * pass matrices that are Hermitian only up to roundoff. Eigenvalues are
 * returned in ascending order.
 */
inline std::pair<RVec, Mat> eigh(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigh: matrix must be square");
  Mat h = hermitize(m);
#ifdef MIMOCAP_HAVE_LAPACKE
  RVec w;
  detail::zheevd_inplace(h, w, true);
  return {std::move(w), std::move(h)};
#else
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  return {es.eigenvalues(), es.eigenvectors()};
#endif
}

/// Eigenvalues only, ascending.
inline RVec eigh_values(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigh_values: matrix must be square");
  Mat h = hermitize(m);
#ifdef MIMOCAP_HAVE_LAPACKE
  RVec w;
  detail::zheevd_inplace(h, w, false);
  return w;
#else
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
#endif
}

/// Singular values, descending.
inline RVec singular_values(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues();
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
inline double trace_norm_hermitian(const Mat& m) {
  return eigh_values(m).cwiseAbs().sum();
}

/**
 * Clamp the spectrum of a nominally non-negative matrix.
 *
 * Eigenvalues in [-tol*max, 0) are set to zero; anything below that floor
 * throws NotPsdError. Returns the clamped eigenvalues in ascending order.
 */
inline RVec clamp_psd_eigenvalues(RVec lam, const std::string& who,
                                  double rel_tol = kPsdSlack) {
  const double top = lam.size() ? std::max(0.0, lam(lam.size() - 1)) : 0.0;
  const double floor = -rel_tol * std::max(top, 1.0);
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < floor) {
      throw NotPsdError(who + ": eigenvalue " + std::to_string(lam(i)) +
                        " below tolerated floor " + std::to_string(floor));
    }
    if (lam(i) < 0.0) lam(i) = 0.0;
  }
  return lam;
}

/// Shortest-round-trip decimal form used for every number written to CSV.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace mimocap
