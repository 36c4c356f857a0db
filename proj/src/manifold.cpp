#include "tsd/manifold.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace tsd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void mismatch(const std::string& what) { throw DimensionMismatch(what); }

template <typename T, typename V>
const T& get_or_throw(const V& v, const char* what) {
  if (const auto* p = std::get_if<T>(&v)) return *p;
  mismatch(what);
}

std::size_t slot_count(const ManifoldPoint& x, const TangentVector& v) {
  const auto& xs = x.slots();
  const auto& vs = v.slots();
  if (xs.size() != vs.size()) mismatch("product tangent has wrong number of slots");
  return xs.size();
}

int pair_count(Eigen::Index n) { return static_cast<int>(n * (n - 1) / 2); }

// Complement basis used for Stiefel coordinates and the exponential map.
Matrix stiefel_complement(const Matrix& u) { return orth_complement_basis<double>(u, 1e-6); }

}  // namespace

// ---- construction / access -------------------------------------------------

ManifoldPoint ManifoldPoint::euclidean(Vector x) { return {EuclideanPoint{std::move(x)}}; }

ManifoldPoint ManifoldPoint::orthogonal(Matrix y) {
  if (y.rows() != y.cols()) mismatch("orthogonal point must be square");
  if (orthonormality_residual(y) > kManifoldTol) {
    throw std::invalid_argument("orthogonal point: ||Y^T Y - I||_F exceeds tolerance");
  }
  return {OrthogonalPoint{std::move(y)}};
}

ManifoldPoint ManifoldPoint::stiefel(Matrix u) {
  if (u.cols() > u.rows()) mismatch("Stiefel point must have p <= n");
  if (orthonormality_residual(u) > kManifoldTol) {
    throw std::invalid_argument("Stiefel point: ||U^T U - I||_F exceeds tolerance");
  }
  return {StiefelPoint{std::move(u)}};
}

ManifoldPoint ManifoldPoint::product(std::vector<ManifoldPoint> slots) {
  return {ProductPoint{std::move(slots)}};
}

const Vector& ManifoldPoint::vec() const {
  return get_or_throw<EuclideanPoint>(value, "expected a Euclidean point").x;
}
const Matrix& ManifoldPoint::orth() const {
  return get_or_throw<OrthogonalPoint>(value, "expected an orthogonal point").y;
}
const Matrix& ManifoldPoint::frame() const {
  return get_or_throw<StiefelPoint>(value, "expected a Stiefel point").u;
}
const std::vector<ManifoldPoint>& ManifoldPoint::slots() const {
  return get_or_throw<ProductPoint>(value, "expected a product point").slots;
}

const Vector& TangentVector::vec() const {
  return get_or_throw<EuclideanTangent>(value, "expected a Euclidean tangent").v;
}
const Skew& TangentVector::skew() const {
  return get_or_throw<OrthogonalTangent>(value, "expected an orthogonal tangent").a;
}
const Matrix& TangentVector::ambient() const {
  return get_or_throw<StiefelTangent>(value, "expected a Stiefel tangent").v;
}
const std::vector<TangentVector>& TangentVector::slots() const {
  return get_or_throw<ProductTangent>(value, "expected a product tangent").slots;
}

// ---- tangent arithmetic ------------------------------------------------------

namespace {

// Skew has no eval(); Eigen expressions need one before they go into a tangent.
template <typename T>
auto materialize(const T& x) {
  if constexpr (requires { x.eval(); }) {
    return x.eval();
  } else {
    return x;
  }
}

template <typename Op>
TangentVector combine(const TangentVector& a, const TangentVector& b, Op op) {
  return std::visit(
      Overloaded{
          [&](const EuclideanTangent& x) -> TangentVector {
            const Vector& y = b.vec();
            if (x.v.size() != y.size()) mismatch("tangent sizes differ");
            return TangentVector::euclidean(op(x.v, y));
          },
          [&](const OrthogonalTangent& x) -> TangentVector {
            const Skew& y = b.skew();
            if (x.a.dim() != y.dim()) mismatch("tangent sizes differ");
            return TangentVector::orthogonal(op(x.a, y));
          },
          [&](const StiefelTangent& x) -> TangentVector {
            const Matrix& y = b.ambient();
            if (x.v.rows() != y.rows() || x.v.cols() != y.cols()) mismatch("tangent sizes differ");
            return TangentVector::stiefel(op(x.v, y));
          },
          [&](const ProductTangent& x) -> TangentVector {
            const auto& ys = b.slots();
            if (x.slots.size() != ys.size()) mismatch("product tangent slot counts differ");
            std::vector<TangentVector> out;
            out.reserve(ys.size());
            for (std::size_t k = 0; k < ys.size(); ++k) out.push_back(combine(x.slots[k], ys[k], op));
            return TangentVector::product(std::move(out));
          }},
      a.value);
}

}  // namespace

TangentVector operator+(const TangentVector& a, const TangentVector& b) {
  return combine(a, b, [](const auto& x, const auto& y) { return materialize(x + y); });
}

TangentVector operator-(const TangentVector& a, const TangentVector& b) {
  return combine(a, b, [](const auto& x, const auto& y) { return materialize(x - y); });
}

TangentVector operator*(double s, const TangentVector& a) {
  return std::visit(
      Overloaded{[&](const EuclideanTangent& x) { return TangentVector::euclidean(s * x.v); },
                 [&](const OrthogonalTangent& x) { return TangentVector::orthogonal(s * x.a); },
                 [&](const StiefelTangent& x) { return TangentVector::stiefel(s * x.v); },
                 [&](const ProductTangent& x) {
                   std::vector<TangentVector> out;
                   out.reserve(x.slots.size());
                   for (const auto& t : x.slots) out.push_back(s * t);
                   return TangentVector::product(std::move(out));
                 }},
      a.value);
}

TangentVector operator-(const TangentVector& a) { return -1.0 * a; }

// ---- objectives --------------------------------------------------------------

Objective linear_trace_objective(Matrix d) {
  Objective obj;
  const Matrix dd = d;
  obj.value = [dd](const ManifoldPoint& x) { return (dd.array() * x.orth().array()).sum(); };
  obj.euclidean_gradient = [dd](const ManifoldPoint&) { return AmbientArray{dd}; };
  obj.smoothness = d.norm();
  obj.linear_coefficient = std::move(d);
  return obj;
}

// ---- geometry --------------------------------------------------------------

void check_tangent(const ManifoldPoint& x, const TangentVector& v) {
  std::visit(
      Overloaded{
          [&](const EuclideanPoint& p) {
            if (v.vec().size() != p.x.size()) mismatch("Euclidean tangent has wrong size");
          },
          [&](const OrthogonalPoint& p) {
            if (v.skew().dim() != p.y.rows()) mismatch("orthogonal tangent has wrong size");
          },
          [&](const StiefelPoint& p) {
            const Matrix& w = v.ambient();
            if (w.rows() != p.u.rows() || w.cols() != p.u.cols()) {
              mismatch("Stiefel tangent has wrong shape");
            }
            const Matrix utv = p.u.transpose() * w;
            if ((utv + utv.transpose()).norm() > kTangentTol * std::max(1.0, w.norm())) {
              mismatch("Stiefel tangent: U^T V is not skew-symmetric");
            }
          },
          [&](const ProductPoint& p) {
            const std::size_t m = slot_count(x, v);
            for (std::size_t k = 0; k < m; ++k) check_tangent(p.slots[k], v.slots()[k]);
          }},
      x.value);
}

TangentVector zero_tangent(const ManifoldPoint& x) {
  return std::visit(
      Overloaded{
          [](const EuclideanPoint& p) { return TangentVector::euclidean(Vector::Zero(p.x.size())); },
          [](const OrthogonalPoint& p) { return TangentVector::orthogonal(Skew::zero(p.y.rows())); },
          [](const StiefelPoint& p) {
            return TangentVector::stiefel(Matrix::Zero(p.u.rows(), p.u.cols()));
          },
          [](const ProductPoint& p) {
            std::vector<TangentVector> out;
            for (const auto& s : p.slots) out.push_back(zero_tangent(s));
            return TangentVector::product(std::move(out));
          }},
      x.value);
}

int tangent_dimension(const ManifoldPoint& x) {
  return std::visit(Overloaded{[](const EuclideanPoint& p) { return static_cast<int>(p.x.size()); },
                               [](const OrthogonalPoint& p) { return pair_count(p.y.rows()); },
                               [](const StiefelPoint& p) {
                                 const auto n = p.u.rows(), k = p.u.cols();
                                 return pair_count(k) + static_cast<int>((n - k) * k);
                               },
                               [](const ProductPoint& p) {
                                 int d = 0;
                                 for (const auto& s : p.slots) d += tangent_dimension(s);
                                 return d;
                               }},
                    x.value);
}

double metric(const ManifoldPoint& x, const TangentVector& u, const TangentVector& v) {
  return std::visit(
      Overloaded{
          [&](const EuclideanPoint& p) {
            const Vector& a = u.vec();
            const Vector& b = v.vec();
            if (a.size() != p.x.size() || b.size() != p.x.size()) mismatch("metric: size mismatch");
            return a.dot(b);
          },
          [&](const OrthogonalPoint& p) {
            const Skew& a = u.skew();
            const Skew& b = v.skew();
            if (a.dim() != p.y.rows() || b.dim() != p.y.rows()) mismatch("metric: size mismatch");
            return (a.matrix().array() * b.matrix().array()).sum();
          },
          [&](const StiefelPoint& p) {
            const Matrix& a = u.ambient();
            const Matrix& b = v.ambient();
            if (a.rows() != p.u.rows() || b.rows() != p.u.rows() || a.cols() != p.u.cols() ||
                b.cols() != p.u.cols()) {
              mismatch("metric: size mismatch");
            }
            // Tr(A^T (I - U U^T / 2) B)
            const Matrix utb = p.u.transpose() * b;
            const Matrix uta = p.u.transpose() * a;
            return (a.array() * b.array()).sum() - 0.5 * (uta.array() * utb.array()).sum();
          },
          [&](const ProductPoint& p) {
            const std::size_t m = slot_count(x, u);
            if (v.slots().size() != m) mismatch("metric: slot count mismatch");
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += metric(p.slots[k], u.slots()[k], v.slots()[k]);
            return s;
          }},
      x.value);
}

double norm(const ManifoldPoint& x, const TangentVector& v) {
  return std::sqrt(std::max(0.0, metric(x, v, v)));
}

namespace {

Matrix stiefel_exp(const Matrix& u, const Matrix& v) {
  const Eigen::Index n = u.rows(), p = u.cols();
  const Skew a = Skew::project(u.transpose() * v);
  if (p == n) return u * expm_skew(a);
  const Matrix uperp = stiefel_complement(u);
  const Matrix b = uperp.transpose() * v;
  Matrix k = Matrix::Zero(n, n);
  k.topLeftCorner(p, p) = a.matrix();
  k.bottomLeftCorner(n - p, p) = b;
  k.topRightCorner(p, n - p) = -b.transpose();
  Matrix basis(n, n);
  basis << u, uperp;
  return basis * expm_skew(Skew::project(k)).leftCols(p);
}

}  // namespace

ManifoldPoint exp_map(const ManifoldPoint& x, const TangentVector& v) {
  return std::visit(
      Overloaded{[&](const EuclideanPoint& p) {
                   const Vector& d = v.vec();
                   if (d.size() != p.x.size()) mismatch("exp: size mismatch");
                   return ManifoldPoint{EuclideanPoint{p.x + d}};
                 },
                 [&](const OrthogonalPoint& p) {
                   const Skew& a = v.skew();
                   if (a.dim() != p.y.rows()) mismatch("exp: size mismatch");
                   return ManifoldPoint{OrthogonalPoint{p.y * expm_skew(a)}};
                 },
                 [&](const StiefelPoint& p) {
                   const Matrix& d = v.ambient();
                   if (d.rows() != p.u.rows() || d.cols() != p.u.cols()) mismatch("exp: size mismatch");
                   return ManifoldPoint{StiefelPoint{stiefel_exp(p.u, d)}};
                 },
                 [&](const ProductPoint& p) {
                   const std::size_t m = slot_count(x, v);
                   std::vector<ManifoldPoint> out;
                   out.reserve(m);
                   for (std::size_t k = 0; k < m; ++k) out.push_back(exp_map(p.slots[k], v.slots()[k]));
                   return ManifoldPoint::product(std::move(out));
                 }},
      x.value);
}

TangentVector inv_exp(const ManifoldPoint& x, const ManifoldPoint& y) {
  return std::visit(
      Overloaded{[&](const EuclideanPoint& p) {
                   const Vector& q = y.vec();
                   if (q.size() != p.x.size()) mismatch("inv_exp: size mismatch");
                   return TangentVector::euclidean(q - p.x);
                 },
                 [&](const OrthogonalPoint& p) {
                   const Matrix& q = y.orth();
                   if (q.rows() != p.y.rows()) mismatch("inv_exp: size mismatch");
                   return TangentVector::orthogonal(
                       logm_orthogonal<double>(p.y.transpose() * q, kManifoldTol));
                 },
                 [&](const StiefelPoint&) -> TangentVector {
                   throw UnsupportedGeometry("inv_exp is not available on Stiefel manifolds");
                 },
                 [&](const ProductPoint& p) {
                   const auto& ys = y.slots();
                   if (ys.size() != p.slots.size()) mismatch("inv_exp: slot count mismatch");
                   std::vector<TangentVector> out;
                   for (std::size_t k = 0; k < ys.size(); ++k) out.push_back(inv_exp(p.slots[k], ys[k]));
                   return TangentVector::product(std::move(out));
                 }},
      x.value);
}

TangentVector transport(const ManifoldPoint& x, const TangentVector& dir, const TangentVector& w) {
  return std::visit(
      Overloaded{[&](const EuclideanPoint& p) {
                   if (dir.vec().size() != p.x.size() || w.vec().size() != p.x.size()) {
                     mismatch("transport: size mismatch");
                   }
                   return w;
                 },
                 [&](const OrthogonalPoint& p) {
                   const Skew& c = dir.skew();
                   const Skew& a = w.skew();
                   if (c.dim() != p.y.rows() || a.dim() != p.y.rows()) mismatch("transport: size mismatch");
                   const Matrix half = expm_skew(0.5 * c);
                   return TangentVector::orthogonal(
                       Skew::project(half.transpose() * a.matrix() * half));
                 },
                 [&](const StiefelPoint&) -> TangentVector {
                   throw UnsupportedGeometry("parallel transport has no closed form on Stiefel manifolds");
                 },
                 [&](const ProductPoint& p) {
                   const std::size_t m = slot_count(x, dir);
                   if (w.slots().size() != m) mismatch("transport: slot count mismatch");
                   std::vector<TangentVector> out;
                   for (std::size_t k = 0; k < m; ++k) {
                     out.push_back(transport(p.slots[k], dir.slots()[k], w.slots()[k]));
                   }
                   return TangentVector::product(std::move(out));
                 }},
      x.value);
}

double distance(const ManifoldPoint& x, const ManifoldPoint& y) { return norm(x, inv_exp(x, y)); }

TangentVector riemannian_gradient(const ManifoldPoint& x, const AmbientArray& egrad) {
  return std::visit(
      Overloaded{
          [&](const EuclideanPoint& p) {
            const Vector& g = get_or_throw<Vector>(egrad.value, "rgrad: expected vector gradient");
            if (g.size() != p.x.size()) mismatch("rgrad: gradient size mismatch");
            return TangentVector::euclidean(g);
          },
          [&](const OrthogonalPoint& p) {
            const Matrix& g = get_or_throw<Matrix>(egrad.value, "rgrad: expected matrix gradient");
            if (g.rows() != p.y.rows() || g.cols() != p.y.cols()) mismatch("rgrad: gradient shape mismatch");
            // (Y^T G - G^T Y) / 2
            return TangentVector::orthogonal(Skew::project(p.y.transpose() * g));
          },
          [&](const StiefelPoint& p) {
            const Matrix& g = get_or_throw<Matrix>(egrad.value, "rgrad: expected matrix gradient");
            if (g.rows() != p.u.rows() || g.cols() != p.u.cols()) mismatch("rgrad: gradient shape mismatch");
            // Gradient under the canonical metric.
            return TangentVector::stiefel(g - p.u * g.transpose() * p.u);
          },
          [&](const ProductPoint& p) {
            const auto& gs = get_or_throw<std::vector<AmbientArray>>(egrad.value,
                                                                     "rgrad: expected list gradient");
            if (gs.size() != p.slots.size()) mismatch("rgrad: slot count mismatch");
            std::vector<TangentVector> out;
            for (std::size_t k = 0; k < gs.size(); ++k) out.push_back(riemannian_gradient(p.slots[k], gs[k]));
            return TangentVector::product(std::move(out));
          }},
      x.value);
}

TangentVector rgrad(const Objective& obj, const ManifoldPoint& x) {
  return riemannian_gradient(x, obj.euclidean_gradient(x));
}

std::vector<TangentVector> tangent_basis(const ManifoldPoint& x) {
  const int dim = tangent_dimension(x);
  std::vector<TangentVector> out;
  out.reserve(static_cast<std::size_t>(dim));
  for (int b = 0; b < dim; ++b) {
    Vector e = Vector::Zero(dim);
    e(b) = 1.0;
    out.push_back(from_coords(x, e));
  }
  return out;
}

Vector tangent_coords(const ManifoldPoint& x, const TangentVector& v) {
  return std::visit(
      Overloaded{[&](const EuclideanPoint&) -> Vector { return v.vec(); },
                 [&](const OrthogonalPoint& p) -> Vector {
                   const Eigen::Index n = p.y.rows();
                   const Skew& a = v.skew();
                   Vector c(pair_count(n));
                   int idx = 0;
                   for (Eigen::Index i = 0; i < n; ++i) {
                     for (Eigen::Index j = i + 1; j < n; ++j) c(idx++) = std::numbers::sqrt2 * a(i, j);
                   }
                   return c;
                 },
                 [&](const StiefelPoint& p) -> Vector {
                   const Eigen::Index n = p.u.rows(), k = p.u.cols();
                   const Matrix& w = v.ambient();
                   const Matrix a = p.u.transpose() * w;
                   Vector c(tangent_dimension(x));
                   int idx = 0;
                   for (Eigen::Index i = 0; i < k; ++i) {
                     for (Eigen::Index j = i + 1; j < k; ++j) c(idx++) = 0.5 * (a(i, j) - a(j, i));
                   }
                   if (k < n) {
                     const Matrix b = stiefel_complement(p.u).transpose() * w;
                     for (Eigen::Index l = 0; l < k; ++l) {
                       for (Eigen::Index r = 0; r < n - k; ++r) c(idx++) = b(r, l);
                     }
                   }
                   return c;
                 },
                 [&](const ProductPoint& p) -> Vector {
                   const std::size_t m = slot_count(x, v);
                   Vector c(tangent_dimension(x));
                   Eigen::Index off = 0;
                   for (std::size_t s = 0; s < m; ++s) {
                     const Vector part = tangent_coords(p.slots[s], v.slots()[s]);
                     c.segment(off, part.size()) = part;
                     off += part.size();
                   }
                   return c;
                 }},
      x.value);
}

TangentVector from_coords(const ManifoldPoint& x, const Vector& coords) {
  if (coords.size() != tangent_dimension(x)) mismatch("from_coords: wrong coordinate count");
  return std::visit(
      Overloaded{[&](const EuclideanPoint&) { return TangentVector::euclidean(coords); },
                 [&](const OrthogonalPoint& p) {
                   const Eigen::Index n = p.y.rows();
                   Matrix a = Matrix::Zero(n, n);
                   int idx = 0;
                   for (Eigen::Index i = 0; i < n; ++i) {
                     for (Eigen::Index j = i + 1; j < n; ++j) a(i, j) = coords(idx++) / std::numbers::sqrt2;
                   }
                   return TangentVector::orthogonal(Skew::from_upper(a));
                 },
                 [&](const StiefelPoint& p) {
                   const Eigen::Index n = p.u.rows(), k = p.u.cols();
                   Matrix a = Matrix::Zero(k, k);
                   int idx = 0;
                   for (Eigen::Index i = 0; i < k; ++i) {
                     for (Eigen::Index j = i + 1; j < k; ++j) a(i, j) = coords(idx++);
                   }
                   Matrix v = p.u * Skew::from_upper(a).matrix();
                   if (k < n) {
                     Matrix b(n - k, k);
                     for (Eigen::Index l = 0; l < k; ++l) {
                       for (Eigen::Index r = 0; r < n - k; ++r) b(r, l) = coords(idx++);
                     }
                     v += stiefel_complement(p.u) * b;
                   }
                   return TangentVector::stiefel(std::move(v));
                 },
                 [&](const ProductPoint& p) {
                   std::vector<TangentVector> out;
                   Eigen::Index off = 0;
                   for (const auto& s : p.slots) {
                     const int d = tangent_dimension(s);
                     out.push_back(from_coords(s, coords.segment(off, d)));
                     off += d;
                   }
                   return TangentVector::product(std::move(out));
                 }},
      x.value);
}

double manifold_residual(const ManifoldPoint& x) {
  return std::visit(Overloaded{[](const EuclideanPoint&) { return 0.0; },
                               [](const OrthogonalPoint& p) { return orthonormality_residual(p.y); },
                               [](const StiefelPoint& p) { return orthonormality_residual(p.u); },
                               [](const ProductPoint& p) {
                                 double r = 0.0;
                                 for (const auto& s : p.slots) r = std::max(r, manifold_residual(s));
                                 return r;
                               }},
                    x.value);
}

ManifoldPoint renormalize(const ManifoldPoint& x, double threshold) {
  return std::visit(
      Overloaded{[&](const EuclideanPoint&) { return x; },
                 [&](const OrthogonalPoint& p) {
                   if (orthonormality_residual(p.y) <= threshold) return x;
                   return ManifoldPoint{OrthogonalPoint{polar_orthonormalize(p.y)}};
                 },
                 [&](const StiefelPoint& p) {
                   if (orthonormality_residual(p.u) <= threshold) return x;
                   return ManifoldPoint{StiefelPoint{polar_orthonormalize(p.u)}};
                 },
                 [&](const ProductPoint& p) {
                   std::vector<ManifoldPoint> out;
                   for (const auto& s : p.slots) out.push_back(renormalize(s, threshold));
                   return ManifoldPoint::product(std::move(out));
                 }},
      x.value);
}

}  // namespace tsd
