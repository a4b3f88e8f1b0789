#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

#include "indexbundle/errors.hpp"
#include "indexbundle/rng.hpp"
#include "indexbundle/tolerances.hpp"

namespace indexbundle {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using cxd = std::complex<double>;

template <class Scalar>
inline constexpr bool is_complex_v = std::is_same_v<Scalar, cxd>;

enum class ScalarKind { real, complex };

template <class Scalar>
constexpr ScalarKind scalar_kind() {
  return is_complex_v<Scalar> ? ScalarKind::complex : ScalarKind::real;
}

inline const char* to_string(ScalarKind kind) {
  return kind == ScalarKind::real ? "real" : "complex";
}

template <class Scalar>
inline double spectral_norm(const Mat<Scalar>& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Mat<Scalar>> svd(m);
  return svd.singularValues()(0);
}

template <class Scalar>
inline Eigen::VectorXd singular_values(const Mat<Scalar>& m) {
  if (m.rows() == 0 || m.cols() == 0) return Eigen::VectorXd();
  Eigen::JacobiSVD<Mat<Scalar>> svd(m);
  return svd.singularValues();
}

inline int rank_from_singular_values(const Eigen::VectorXd& sv,
                                     const ToleranceConfig& cfg, int max_dim) {
  if (sv.size() == 0) return 0;
  const double tol = cfg.rank_tolerance(sv(0), max_dim);
  int rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  return rank;
}

template <class Scalar>
inline int numerical_rank(const Mat<Scalar>& m, const ToleranceConfig& cfg) {
  const auto sv = singular_values(m);
  return rank_from_singular_values(sv, cfg,
                                   static_cast<int>(std::max(m.rows(), m.cols())));
}

/// Rank with an external scale floor: a matrix whose entries are pure noise
/// relative to `scale` counts as zero. Used wherever the matrix at hand is a
/// residual of a larger computation (kernel maps, projector differences).
template <class Scalar>
inline int numerical_rank_scaled(const Mat<Scalar>& m, const ToleranceConfig& cfg,
                                 double scale) {
  const auto sv = singular_values(m);
  if (sv.size() == 0) return 0;
  const double tol = cfg.rank_tolerance(
      std::max(sv(0), scale), static_cast<int>(std::max(m.rows(), m.cols())));
  int rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  return rank;
}

/// Rank of a Hermitian idempotent: its spectrum clusters at 0 and 1, so the
/// count of singular values above 1/2 is the honest dimension of its range.
template <class Scalar>
inline int projector_rank(const Mat<Scalar>& p) {
  const auto sv = singular_values(p);
  int rank = 0;
  while (rank < sv.size() && sv(rank) > 0.5) ++rank;
  return rank;
}

/// k-th largest singular value (1-based); zero when the matrix has fewer.
template <class Scalar>
inline double kth_singular_value(const Mat<Scalar>& m, int k) {
  if (k <= 0) return 0.0;
  const auto sv = singular_values(m);
  if (sv.size() < k) return 0.0;
  return sv(k - 1);
}

template <class Scalar>
inline double smallest_singular_value(const Mat<Scalar>& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  const auto sv = singular_values(m);
  return sv(sv.size() - 1);
}

/// Orthonormal basis of the column span, rank decided by the shared rank rule.
/// Returns an N x r matrix with orthonormal columns. A positive `scale` acts
/// as a floor for the cutoff as in numerical_rank_scaled.
template <class Scalar>
inline Mat<Scalar> image_basis(const Mat<Scalar>& m, const ToleranceConfig& cfg,
                               double scale = 0.0) {
  if (m.rows() == 0 || m.cols() == 0) return Mat<Scalar>(m.rows(), 0);
  Eigen::JacobiSVD<Mat<Scalar>> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double tol = cfg.rank_tolerance(
      std::max(sv(0), scale), static_cast<int>(std::max(m.rows(), m.cols())));
  int rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  return svd.matrixU().leftCols(rank);
}

/// Orthonormal basis of the range of a Hermitian idempotent (cutoff at 1/2).
template <class Scalar>
inline Mat<Scalar> fibre_basis(const Mat<Scalar>& p) {
  if (p.rows() == 0) return Mat<Scalar>(0, 0);
  Eigen::JacobiSVD<Mat<Scalar>> svd(p, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  while (rank < sv.size() && sv(rank) > 0.5) ++rank;
  return svd.matrixU().leftCols(rank);
}

/// Orthonormal basis of the (right) kernel as columns, with optional scale
/// floor for the rank cutoff.
template <class Scalar>
inline Mat<Scalar> kernel_basis(const Mat<Scalar>& m, const ToleranceConfig& cfg,
                                double scale = 0.0) {
  if (m.cols() == 0) return Mat<Scalar>(0, 0);
  if (m.rows() == 0) return Mat<Scalar>::Identity(m.cols(), m.cols());
  Eigen::JacobiSVD<Mat<Scalar>> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = cfg.rank_tolerance(
      std::max(sv(0), scale), static_cast<int>(std::max(m.rows(), m.cols())));
  int rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

/// Orthonormal basis of the left null space (cokernel directions) as columns.
template <class Scalar>
inline Mat<Scalar> cokernel_basis(const Mat<Scalar>& m, const ToleranceConfig& cfg) {
  if (m.rows() == 0) return Mat<Scalar>(0, 0);
  if (m.cols() == 0) return Mat<Scalar>::Identity(m.rows(), m.rows());
  Eigen::JacobiSVD<Mat<Scalar>> svd(m, Eigen::ComputeFullU);
  const int rank = rank_from_singular_values(
      svd.singularValues(), cfg, static_cast<int>(std::max(m.rows(), m.cols())));
  return svd.matrixU().rightCols(m.rows() - rank);
}

template <class Scalar>
inline Mat<Scalar> projector_onto(const Mat<Scalar>& orthonormal_columns) {
  return orthonormal_columns * orthonormal_columns.adjoint();
}

/// Unitary (orthogonal) polar factor U V* of m.
template <class Scalar>
inline Mat<Scalar> polar_factor(const Mat<Scalar>& m) {
  if (m.rows() == 0 || m.cols() == 0) return Mat<Scalar>(m.rows(), m.cols());
  Eigen::JacobiSVD<Mat<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

template <class Scalar>
inline Scalar determinant(const Mat<Scalar>& m) {
  if (m.rows() == 0) return Scalar(1);  // empty product
  return m.determinant();
}

/// Fractional power W^t of a unitary (orthogonal) matrix, consistent across t
/// in the sense W^a W^b = W^{a+b}. The complex case uses the spectrum; the
/// real case goes through the real Schur form, where -1 eigenvalues are
/// paired into rotation-by-pi planes (an orthogonal matrix in SO(n) always
/// has an even number of them).
template <class Scalar>
inline Mat<Scalar> unitary_fractional_power(const Mat<Scalar>& w, double t) {
  const int n = static_cast<int>(w.rows());
  if (n == 0) return Mat<Scalar>(0, 0);
  if constexpr (is_complex_v<Scalar>) {
    Eigen::ComplexEigenSolver<Mat<cxd>> eig(w);
    Mat<cxd> d = Mat<cxd>::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      d(i, i) = std::exp(cxd(0.0, t * std::arg(eig.eigenvalues()(i))));
    }
    return eig.eigenvectors() * d * eig.eigenvectors().inverse();
  } else {
    Eigen::RealSchur<Mat<double>> schur(w);
    const Mat<double>& form = schur.matrixT();
    Mat<double> power = Mat<double>::Zero(n, n);
    std::vector<int> reflections;  // unpaired -1 diagonal entries
    int i = 0;
    while (i < n) {
      const bool pair_block = (i + 1 < n) && std::abs(form(i + 1, i)) > 1e-8;
      if (pair_block) {
        const double angle = std::atan2(form(i + 1, i), (form(i, i) + form(i + 1, i + 1)) / 2.0);
        power(i, i) = std::cos(t * angle);
        power(i + 1, i + 1) = std::cos(t * angle);
        power(i, i + 1) = -std::sin(t * angle);
        power(i + 1, i) = std::sin(t * angle);
        i += 2;
      } else {
        if (form(i, i) >= 0.0) {
          power(i, i) = 1.0;
        } else {
          reflections.push_back(i);
        }
        i += 1;
      }
    }
    for (std::size_t k = 0; k + 1 < reflections.size(); k += 2) {
      const int a = reflections[k];
      const int b = reflections[k + 1];
      power(a, a) = std::cos(t * M_PI);
      power(b, b) = std::cos(t * M_PI);
      power(a, b) = -std::sin(t * M_PI);
      power(b, a) = std::sin(t * M_PI);
    }
    if (reflections.size() % 2 == 1) {
      // determinant is negative; no continuous interpolation exists, fall
      // back to flipping the odd direction at t = 1 only
      const int a = reflections.back();
      power(a, a) = (t >= 0.5) ? -1.0 : 1.0;
    }
    return schur.matrixU() * power * schur.matrixU().transpose();
  }
}

template <class Scalar>
inline Mat<Scalar> random_gaussian_matrix(int rows, int cols, Rng& rng) {
  Mat<Scalar> m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = detail::random_scalar<Scalar>(rng);
  }
  return m;
}

/// Random skew-hermitian matrix with spectral norm about `magnitude`.
template <class Scalar>
inline Mat<Scalar> random_skew(int n, double magnitude, Rng& rng) {
  Mat<Scalar> g = random_gaussian_matrix<Scalar>(n, n, rng);
  Mat<Scalar> a = (g - g.adjoint()) / 2.0;
  const double norm = spectral_norm(a);
  if (norm > 0.0) a *= magnitude / norm;
  return a;
}

/// Run fn(v) for v in [0, n), optionally across several threads. The first
/// exception thrown wins and is rethrown on the caller.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::min(std::max(threads, 1), n > 0 ? n : 1);
  if (threads <= 1) {
    for (int v = 0; v < n; ++v) fn(v);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int v = next.fetch_add(1);
        if (v >= n) return;
        try {
          fn(v);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace indexbundle
