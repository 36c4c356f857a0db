#pragma once

// Points, tangent vectors and the Riemannian toolbox (metric, exponential map,
// inverse exponential map, parallel transport, distance, Riemannian gradient)
// for Euclidean space, the orthogonal group O(n), Stiefel manifolds St(p, n)
// with the canonical metric, and finite products of these.

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "tsd/linalg.hpp"

namespace tsd {

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Skew = SkewMatrix<double>;

/// Residual allowed on ||Y^T Y - I||_F before a point is considered off-manifold.
inline constexpr double kManifoldTol = 1e-8;
/// Residual allowed on ||U^T V + V^T U|| for Stiefel tangent membership.
inline constexpr double kTangentTol = 1e-10;

struct ManifoldPoint;

struct EuclideanPoint {
  Vector x;
};
struct OrthogonalPoint {
  Matrix y;
};
struct StiefelPoint {
  Matrix u;  // n x p, orthonormal columns
};
struct ProductPoint {
  std::vector<ManifoldPoint> slots;
};

struct ManifoldPoint {
  std::variant<EuclideanPoint, OrthogonalPoint, StiefelPoint, ProductPoint> value;

  static ManifoldPoint euclidean(Vector x);
  /// Throws unless `y` is square with ||Y^T Y - I||_F <= kManifoldTol.
  static ManifoldPoint orthogonal(Matrix y);
  /// Throws unless `u` is n x p (p <= n) with orthonormal columns.
  static ManifoldPoint stiefel(Matrix u);
  static ManifoldPoint product(std::vector<ManifoldPoint> slots);

  bool is_euclidean() const { return std::holds_alternative<EuclideanPoint>(value); }
  bool is_orthogonal() const { return std::holds_alternative<OrthogonalPoint>(value); }
  bool is_stiefel() const { return std::holds_alternative<StiefelPoint>(value); }
  bool is_product() const { return std::holds_alternative<ProductPoint>(value); }

  const Vector& vec() const;
  const Matrix& orth() const;
  const Matrix& frame() const;
  const std::vector<ManifoldPoint>& slots() const;
};

struct TangentVector;

struct EuclideanTangent {
  Vector v;
};
/// Represents Y * A for A skew-symmetric.
struct OrthogonalTangent {
  Skew a;
};
/// Ambient n x p representative V with U^T V skew-symmetric.
struct StiefelTangent {
  Matrix v;
};
struct ProductTangent {
  std::vector<TangentVector> slots;
};

struct TangentVector {
  std::variant<EuclideanTangent, OrthogonalTangent, StiefelTangent, ProductTangent> value;

  static TangentVector euclidean(Vector v) { return {EuclideanTangent{std::move(v)}}; }
  static TangentVector orthogonal(Skew a) { return {OrthogonalTangent{std::move(a)}}; }
  static TangentVector stiefel(Matrix v) { return {StiefelTangent{std::move(v)}}; }
  static TangentVector product(std::vector<TangentVector> s) {
    return {ProductTangent{std::move(s)}};
  }

  const Vector& vec() const;
  const Skew& skew() const;
  const Matrix& ambient() const;
  const std::vector<TangentVector>& slots() const;
};

TangentVector operator+(const TangentVector& a, const TangentVector& b);
TangentVector operator-(const TangentVector& a, const TangentVector& b);
TangentVector operator*(double s, const TangentVector& a);
TangentVector operator-(const TangentVector& a);

/// Euclidean (ambient) gradient of an objective: a vector for Euclidean slots,
/// a matrix for O(n) and Stiefel slots, a list for products.
struct AmbientArray {
  std::variant<Vector, Matrix, std::vector<AmbientArray>> value;
};

struct Objective {
  std::function<double(const ManifoldPoint&)> value;
  std::function<AmbientArray(const ManifoldPoint&)> euclidean_gradient;
  /// L_f, when known.
  std::optional<double> smoothness;
  /// Per-block constants L_1..L_m, when known.
  std::vector<double> block_constants;
  /// D for objectives of the form Tr(D^T Y) on O(n); enables exact Givens line search.
  std::optional<Matrix> linear_coefficient;
};

/// f(Y) = Tr(D^T Y) on O(n), with smoothness estimate ||D||_F.
Objective linear_trace_objective(Matrix d);

// ---- geometry -------------------------------------------------------------

/// Throws DimensionMismatch unless `v` has the shape of a tangent vector at `x`
/// (and, for Stiefel, lies in the tangent space within kTangentTol).
void check_tangent(const ManifoldPoint& x, const TangentVector& v);

TangentVector zero_tangent(const ManifoldPoint& x);
int tangent_dimension(const ManifoldPoint& x);

double metric(const ManifoldPoint& x, const TangentVector& u, const TangentVector& v);
double norm(const ManifoldPoint& x, const TangentVector& v);

ManifoldPoint exp_map(const ManifoldPoint& x, const TangentVector& v);
/// Minimal-norm preimage of `y` under exp_map at `x`. Throws CutLocusError on
/// O(n) when Y0^T Y1 has an eigenvalue at -1, UnsupportedGeometry on Stiefel.
TangentVector inv_exp(const ManifoldPoint& x, const ManifoldPoint& y);
/// Parallel transport of `w` along t -> exp_map(x, t * dir) to t = 1.
TangentVector transport(const ManifoldPoint& x, const TangentVector& dir, const TangentVector& w);
double distance(const ManifoldPoint& x, const ManifoldPoint& y);

TangentVector riemannian_gradient(const ManifoldPoint& x, const AmbientArray& egrad);
TangentVector rgrad(const Objective& obj, const ManifoldPoint& x);

/// Orthonormal basis of T_x M, in the order used by tangent_coords.
std::vector<TangentVector> tangent_basis(const ManifoldPoint& x);
/// Coordinates of `v` in tangent_basis(x).
Vector tangent_coords(const ManifoldPoint& x, const TangentVector& v);
TangentVector from_coords(const ManifoldPoint& x, const Vector& coords);

/// Largest orthonormality residual over matrix-valued slots (0 for Euclidean).
double manifold_residual(const ManifoldPoint& x);
/// Polar re-orthonormalization of every matrix slot whose residual exceeds `threshold`.
ManifoldPoint renormalize(const ManifoldPoint& x, double threshold = kManifoldTol);

}  // namespace tsd
