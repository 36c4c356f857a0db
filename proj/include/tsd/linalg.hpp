#pragma once

// Dense kernels for the orthogonal group and Stiefel manifolds: skew-symmetric
// matrices, their exponentials and logarithms, Givens rotations, and seeded
// random generation. Everything here is templated on the scalar type.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tsd/errors.hpp"

namespace tsd {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Rng = std::mt19937_64;

/// Real skew-symmetric matrix. The stored entries satisfy S + S^T = 0 exactly.
template <typename Scalar>
class SkewMatrix {
 public:
  SkewMatrix() = default;

  /// Checked construction: rejects inputs whose symmetric part exceeds `tol`
  /// (relative to max(1, ||M||_F)), then stores the exact skew part.
  explicit SkewMatrix(const Mat<Scalar>& m, Scalar tol = Scalar(1e-10)) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("SkewMatrix: matrix must be square");
    }
    const Scalar asym = (m + m.transpose()).norm();
    if (asym > tol * std::max(Scalar(1), m.norm())) {
      throw std::invalid_argument("SkewMatrix: input is not skew-symmetric");
    }
    m_ = skew_part(m);
  }

  static SkewMatrix zero(Eigen::Index n) {
    SkewMatrix s;
    s.m_ = Mat<Scalar>::Zero(n, n);
    return s;
  }

  /// (M - M^T) / 2. Antisymmetric bit-for-bit because a - b == -(b - a) in IEEE.
  static SkewMatrix project(const Mat<Scalar>& m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("SkewMatrix::project: matrix must be square");
    }
    SkewMatrix s;
    s.m_ = skew_part(m);
    return s;
  }

  /// Mirrors the strict upper triangle of `m`; the lower triangle is ignored.
  static SkewMatrix from_upper(const Mat<Scalar>& m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("SkewMatrix::from_upper: matrix must be square");
    }
    SkewMatrix s = zero(m.rows());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) {
        s.m_(i, j) = m(i, j);
        s.m_(j, i) = -m(i, j);
      }
    }
    return s;
  }

  /// H_ij = e_i e_j^T - e_j e_i^T (zero-based, i != j).
  static SkewMatrix basis(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
    if (i == j || i < 0 || j < 0 || i >= n || j >= n) {
      throw std::invalid_argument("SkewMatrix::basis: need distinct indices in range");
    }
    SkewMatrix s = zero(n);
    s.m_(i, j) = Scalar(1);
    s.m_(j, i) = Scalar(-1);
    return s;
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Mat<Scalar>& matrix() const { return m_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  Scalar norm() const { return m_.norm(); }

  SkewMatrix operator+(const SkewMatrix& o) const { return raw(m_ + o.m_); }
  SkewMatrix operator-(const SkewMatrix& o) const { return raw(m_ - o.m_); }
  SkewMatrix operator-() const { return raw(-m_); }
  SkewMatrix operator*(Scalar a) const { return raw(a * m_); }
  friend SkewMatrix operator*(Scalar a, const SkewMatrix& s) { return s * a; }

 private:
  static Mat<Scalar> skew_part(const Mat<Scalar>& m) {
    return Scalar(0.5) * (m - m.transpose());
  }
  // Elementwise linear maps of an exactly skew matrix stay exactly skew.
  static SkewMatrix raw(Mat<Scalar> m) {
    SkewMatrix s;
    s.m_ = std::move(m);
    return s;
  }

  Mat<Scalar> m_;
};

/// One planar rotation angle `angle` acting on coordinates (i, j), i < j.
template <typename Scalar>
struct GivensPair {
  Eigen::Index i;
  Eigen::Index j;
  Scalar angle;
};

/// Coefficients a_ij of sum a_ij H_ij with pairwise disjoint index pairs.
template <typename Scalar>
struct GivensCoefficients {
  std::vector<GivensPair<Scalar>> pairs;
};

/// Throws unless every pair has 0 <= i < j < n and no index is reused.
template <typename Scalar>
void check_disjoint(const GivensCoefficients<Scalar>& g, Eigen::Index n) {
  std::vector<bool> used(static_cast<std::size_t>(std::max<Eigen::Index>(n, 0)), false);
  for (const auto& p : g.pairs) {
    if (p.i < 0 || p.j >= n || p.i >= p.j) {
      throw std::invalid_argument("GivensCoefficients: pair indices must satisfy 0 <= i < j < n");
    }
    for (Eigen::Index idx : {p.i, p.j}) {
      if (used[static_cast<std::size_t>(idx)]) {
        throw std::invalid_argument("GivensCoefficients: index " + std::to_string(idx) +
                                    " appears in more than one pair");
      }
      used[static_cast<std::size_t>(idx)] = true;
    }
  }
}

template <typename Scalar>
SkewMatrix<Scalar> to_skew(const GivensCoefficients<Scalar>& g, Eigen::Index n) {
  Mat<Scalar> m = Mat<Scalar>::Zero(n, n);
  for (const auto& p : g.pairs) {
    m(p.i, p.j) += p.angle;
    m(p.j, p.i) -= p.angle;
  }
  return SkewMatrix<Scalar>::project(m);
}

/// Matrix exponential of a skew matrix (scaling and squaring with a Pade
/// approximant). The result is special orthogonal up to roundoff.
template <typename Scalar>
Mat<Scalar> expm_skew(const SkewMatrix<Scalar>& c) {
  if (c.dim() == 0) return Mat<Scalar>(0, 0);
  return c.matrix().exp();
}

/// Exponential of sum a_ij H_ij for disjoint pairs: identity except for the
/// 2x2 blocks [[cos a, sin a], [-sin a, cos a]] on rows/columns (i, j).
template <typename Scalar>
Mat<Scalar> expm_givens(const GivensCoefficients<Scalar>& g, Eigen::Index n) {
  check_disjoint(g, n);
  Mat<Scalar> q = Mat<Scalar>::Identity(n, n);
  for (const auto& p : g.pairs) {
    const Scalar c = std::cos(p.angle);
    const Scalar s = std::sin(p.angle);
    q(p.i, p.i) = c;
    q(p.i, p.j) = s;
    q(p.j, p.i) = -s;
    q(p.j, p.j) = c;
  }
  return q;
}

/// In place Y <- Y * G where G is the Givens block [[c, s], [-s, c]] on (i, j).
/// Only columns i and j of `y` are read or written.
template <typename Derived>
void apply_givens_right(Eigen::MatrixBase<Derived>& y, Eigen::Index i, Eigen::Index j,
                        typename Derived::Scalar c, typename Derived::Scalar s) {
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const auto yi = y(r, i);
    const auto yj = y(r, j);
    y(r, i) = c * yi - s * yj;
    y(r, j) = s * yi + c * yj;
  }
}

/// ||U^T U - I||_F.
template <typename Derived>
typename Derived::Scalar orthonormality_residual(const Eigen::MatrixBase<Derived>& u) {
  using S = typename Derived::Scalar;
  return (u.transpose() * u - Mat<S>::Identity(u.cols(), u.cols())).norm();
}

/// Nearest matrix with orthonormal columns (polar factor U V^T of the SVD).
template <typename Scalar>
Mat<Scalar> polar_orthonormalize(const Mat<Scalar>& y) {
  Eigen::JacobiSVD<Mat<Scalar>> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Principal logarithm of an orthogonal matrix via the real Schur form: each
/// 2x2 rotation block contributes its atan2 angle, which must lie strictly
/// inside (-pi, pi). Throws CutLocusError when an eigenvalue is (numerically) -1.
template <typename Scalar>
SkewMatrix<Scalar> logm_orthogonal(const Mat<Scalar>& q, Scalar ortho_tol = Scalar(1e-10),
                                   Scalar angle_tol = Scalar(1e-6)) {
  if (q.rows() != q.cols()) {
    throw DimensionMismatch("logm_orthogonal: matrix must be square");
  }
  const Eigen::Index n = q.rows();
  if (n == 0) return SkewMatrix<Scalar>::zero(0);
  if (orthonormality_residual(q) > ortho_tol) {
    throw std::invalid_argument("logm_orthogonal: input is not orthogonal");
  }
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Eigen::RealSchur<Mat<Scalar>> schur(q);
  const Mat<Scalar>& t = schur.matrixT();
  Mat<Scalar> log_t = Mat<Scalar>::Zero(n, n);
  for (Eigen::Index k = 0; k < n;) {
    if (k + 1 < n && t(k + 1, k) != Scalar(0)) {
      const Scalar cos_part = Scalar(0.5) * (t(k, k) + t(k + 1, k + 1));
      const Scalar sin_part = Scalar(0.5) * (t(k, k + 1) - t(k + 1, k));
      const Scalar theta = std::atan2(sin_part, cos_part);
      if (pi - std::abs(theta) < angle_tol) {
        throw CutLocusError("logm_orthogonal: rotation angle at pi (eigenvalue -1)");
      }
      log_t(k, k + 1) = theta;
      log_t(k + 1, k) = -theta;
      k += 2;
    } else {
      if (t(k, k) < Scalar(0)) {
        throw CutLocusError("logm_orthogonal: real eigenvalue -1");
      }
      k += 1;
    }
  }
  const Mat<Scalar>& z = schur.matrixU();
  return SkewMatrix<Scalar>::project(z * log_t * z.transpose());
}

template <typename Scalar>
Mat<Scalar> gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                            Scalar stddev = Scalar(1)) {
  std::normal_distribution<Scalar> normal(Scalar(0), stddev);
  Mat<Scalar> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

template <typename Scalar>
SkewMatrix<Scalar> random_skew(Eigen::Index n, Rng& rng) {
  return SkewMatrix<Scalar>::from_upper(gaussian_matrix<Scalar>(n, n, rng));
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of diag(R) folded into Q.
template <typename Scalar>
Mat<Scalar> random_orthogonal(Eigen::Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("random_orthogonal: n must be >= 1");
  const Mat<Scalar> g = gaussian_matrix<Scalar>(n, n, rng);
  Eigen::HouseholderQR<Mat<Scalar>> qr(g);
  Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(n, n);
  const Mat<Scalar>& r = qr.matrixQR();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r(i, i) < Scalar(0)) q.col(i) *= Scalar(-1);
  }
  return q;
}

template <typename Scalar>
Mat<Scalar> random_orthogonal(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  return random_orthogonal<Scalar>(n, rng);
}

/// Random point of St(p, n): the first p columns of a Haar orthogonal matrix.
template <typename Scalar>
Mat<Scalar> random_stiefel(Eigen::Index n, Eigen::Index p, Rng& rng) {
  if (p > n) throw std::invalid_argument("random_stiefel: need p <= n");
  return random_orthogonal<Scalar>(n, rng).leftCols(p);
}

/// Orthonormal basis U_perp of the orthogonal complement of range(U), so that
/// U U^T + U_perp U_perp^T = I.
template <typename Scalar>
Mat<Scalar> orth_complement_basis(const Mat<Scalar>& u, Scalar ortho_tol = Scalar(1e-10)) {
  const Eigen::Index n = u.rows();
  const Eigen::Index p = u.cols();
  if (p >= n) throw std::invalid_argument("orth_complement_basis: need p < n");
  if (orthonormality_residual(u) > ortho_tol) {
    throw std::invalid_argument("orth_complement_basis: columns are not orthonormal");
  }
  Eigen::HouseholderQR<Mat<Scalar>> qr(u);
  Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(n, n);
  return q.rightCols(n - p);
}

}  // namespace tsd
