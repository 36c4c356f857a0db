#include "tsd/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace tsd {

TangentVector SubspaceProjection::operator()(const TangentVector& v) const {
  check_tangent(base_, v);
  return apply_(v);
}

std::vector<IndexPair> lexicographic_pairs(int n) {
  std::vector<IndexPair> out;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  }
  return out;
}

SubspaceProjection identity_projection(const ManifoldPoint& x) {
  return {x, [](const TangentVector& v) { return v; }, tangent_dimension(x), ProjectionDescriptor::of("identity")};
}

SubspaceProjection givens_projection(const ManifoldPoint& x, std::vector<IndexPair> pairs) {
  const auto n = static_cast<int>(x.orth().rows());
  std::set<IndexPair> seen;
  for (auto& [i, j] : pairs) {
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= n || i == j) throw std::invalid_argument("givens_projection: pair out of range");
    if (!seen.insert({i, j}).second) throw std::invalid_argument("givens_projection: repeated pair");
  }
  ProjectionDescriptor desc = ProjectionDescriptor::of("givens");
  desc.pairs = pairs;
  const int rank = static_cast<int>(pairs.size());
  auto apply = [pairs = std::move(pairs), n](const TangentVector& v) {
    const Skew& a = v.skew();
    Matrix up = Matrix::Zero(n, n);
    for (const auto& [i, j] : pairs) up(i, j) = a(i, j);
    return TangentVector::orthogonal(Skew::from_upper(up));
  };
  return {x, std::move(apply), rank, std::move(desc)};
}

SubspaceProjection span_projection(const ManifoldPoint& x, const std::vector<TangentVector>& vectors) {
  // Modified Gram-Schmidt in the metric at x.
  std::vector<TangentVector> basis;
  for (const auto& v : vectors) {
    check_tangent(x, v);
    TangentVector w = v;
    for (const auto& e : basis) w = w - metric(x, e, w) * e;
    const double nw = norm(x, w);
    if (nw > 1e-12 * std::max(1.0, norm(x, v))) basis.push_back((1.0 / nw) * w);
  }
  const int rank = static_cast<int>(basis.size());
  auto apply = [x, basis](const TangentVector& v) {
    TangentVector out = zero_tangent(x);
    for (const auto& e : basis) out = out + metric(x, e, v) * e;
    return out;
  };
  return {x, std::move(apply), rank, ProjectionDescriptor::of("span")};
}

SubspaceProjection product_projection(const ManifoldPoint& x, int k) {
  const auto& slots = x.slots();
  if (k < 0 || k >= static_cast<int>(slots.size())) {
    throw std::out_of_range("product_projection: slot index out of range");
  }
  ProjectionDescriptor desc = ProjectionDescriptor::of("slot");
  desc.block = k;
  auto apply = [x, k](const TangentVector& v) {
    std::vector<TangentVector> out;
    const auto& vs = v.slots();
    for (int s = 0; s < static_cast<int>(vs.size()); ++s) {
      out.push_back(s == k ? vs[s] : zero_tangent(x.slots()[s]));
    }
    return TangentVector::product(std::move(out));
  };
  return {x, std::move(apply), tangent_dimension(slots[k]), std::move(desc)};
}

LinearIsometry transport_isometry(const ManifoldPoint& x, const TangentVector& dir) {
  check_tangent(x, dir);
  ManifoldPoint y = exp_map(x, dir);
  // Velocity at the end point, reversed, leads back to x.
  const TangentVector back = -transport(x, dir, dir);
  return {x, y, [x, dir](const TangentVector& w) { return transport(x, dir, w); },
          [y, back](const TangentVector& w) { return transport(y, back, w); }};
}

SubspaceProjection conjugated_projection(const LinearIsometry& iso, const SubspaceProjection& p,
                                         double tol) {
  const auto frame = tangent_basis(iso.from);
  std::vector<TangentVector> images;
  images.reserve(frame.size());
  for (const auto& e : frame) images.push_back(iso.forward(e));
  for (std::size_t a = 0; a < images.size(); ++a) {
    for (std::size_t b = a; b < images.size(); ++b) {
      const double want = a == b ? 1.0 : 0.0;
      if (std::abs(metric(iso.to, images[a], images[b]) - want) > tol) {
        throw std::invalid_argument("conjugated_projection: map is not an isometry");
      }
    }
  }
  ProjectionDescriptor desc = p.descriptor();
  desc.kind = "conjugated";
  auto apply = [iso, p](const TangentVector& v) { return iso.forward(p(iso.inverse(v))); };
  return {iso.to, std::move(apply), p.rank(), std::move(desc)};
}

// ---- partitions ------------------------------------------------------------

GivensPartition GivensPartition::singleton(int n) {
  GivensPartition g;
  g.n = n;
  for (const auto& pr : lexicographic_pairs(n)) g.blocks.push_back({pr});
  return g;
}

GivensPartition GivensPartition::matching(int n) {
  GivensPartition g;
  g.n = n;
  if (n < 2) return g;
  // Circle method; an odd n gets a dummy vertex whose partner sits out.
  const int v = n % 2 == 0 ? n : n + 1;
  std::vector<int> ring(v);
  std::iota(ring.begin(), ring.end(), 0);
  for (int round = 0; round < v - 1; ++round) {
    std::vector<IndexPair> block;
    for (int s = 0; s < v / 2; ++s) {
      int a = ring[s], b = ring[v - 1 - s];
      if (a >= n || b >= n) continue;
      if (a > b) std::swap(a, b);
      block.emplace_back(a, b);
    }
    std::sort(block.begin(), block.end());
    g.blocks.push_back(std::move(block));
    std::rotate(ring.begin() + 1, ring.end() - 1, ring.end());
  }
  return g;
}

void GivensPartition::validate() const {
  std::set<IndexPair> seen;
  for (const auto& block : blocks) {
    if (block.empty()) throw std::invalid_argument("GivensPartition: empty block");
    for (const auto& [i, j] : block) {
      if (i < 0 || j >= n || i >= j) throw std::invalid_argument("GivensPartition: bad pair");
      if (!seen.insert({i, j}).second) throw std::invalid_argument("GivensPartition: pair repeated");
    }
  }
  if (static_cast<int>(seen.size()) != n * (n - 1) / 2) {
    throw std::invalid_argument("GivensPartition: blocks do not cover every pair");
  }
}

bool GivensPartition::blocks_index_disjoint() const {
  for (const auto& block : blocks) {
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (const auto& [i, j] : block) {
      if (used[i] || used[j]) return false;
      used[i] = used[j] = true;
    }
  }
  return true;
}

// ---- rules -----------------------------------------------------------------

std::vector<double> uniform_probabilities(int count) {
  if (count < 1) throw std::invalid_argument("uniform_probabilities: count must be >= 1");
  return std::vector<double>(static_cast<std::size_t>(count), 1.0 / count);
}

void check_probabilities(const std::vector<double>& probs) {
  if (probs.empty()) throw std::invalid_argument("probabilities: empty vector");
  double total = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) throw std::invalid_argument("probabilities: entries must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("probabilities: must sum to 1");
}

GivensRule::GivensRule(GivensPartition partition) : partition_(std::move(partition)) {
  partition_.validate();
}

SubspaceProjection GivensRule::select(const SelectionContext& ctx) {
  if (ctx.k < 0 || ctx.k >= block_count()) throw std::out_of_range("GivensRule: block index");
  auto p = givens_projection(ctx.y_prev, partition_.blocks[ctx.k]);
  p.descriptor().block = ctx.k;
  return p;
}

RulePtr givens_rule(GivensPartition partition) {
  return std::make_shared<GivensRule>(std::move(partition));
}

namespace {

bool same_point(const ManifoldPoint& a, const ManifoldPoint& b) {
  if (a.value.index() != b.value.index()) return false;
  if (a.is_euclidean()) return a.vec() == b.vec();
  if (a.is_orthogonal()) return a.orth() == b.orth();
  if (a.is_stiefel()) return a.frame() == b.frame();
  const auto& sa = a.slots();
  const auto& sb = b.slots();
  if (sa.size() != sb.size()) return false;
  for (std::size_t k = 0; k < sa.size(); ++k) {
    if (!same_point(sa[k], sb[k])) return false;
  }
  return true;
}

class ParallelTransportRule : public SelectionRule {
 public:
  ParallelTransportRule(DecompositionFactory decomp, int m) : decomp_(std::move(decomp)), m_(m) {}

  SubspaceProjection select(const SelectionContext& ctx) override {
    if (ctx.k < 0 || ctx.k >= m_) throw std::out_of_range("ParallelTransportRule: block index");
    const Decomposition parts = decomp_(ctx.y0);
    if (static_cast<int>(parts.size()) != m_) {
      throw std::invalid_argument("ParallelTransportRule: decomposition has wrong block count");
    }
    SubspaceProjection ref = parts[ctx.k];
    ref.descriptor().block = ctx.k;
    if (same_point(ctx.y0, ctx.y_prev)) return ref;
    const TangentVector dir = inv_exp(ctx.y0, ctx.y_prev);
    auto out = conjugated_projection(transport_isometry(ctx.y0, dir), ref, 1e-9);
    return out;
  }
  int block_count() const override { return m_; }
  RuleKind kind() const override { return RuleKind::Deterministic; }

 private:
  DecompositionFactory decomp_;
  int m_;
};

class ProductRule : public SelectionRule {
 public:
  explicit ProductRule(int m) : m_(m) {
    if (m < 1) throw std::invalid_argument("product_rule: need at least one slot");
  }
  SubspaceProjection select(const SelectionContext& ctx) override {
    if (static_cast<int>(ctx.y_prev.slots().size()) != m_) {
      throw DimensionMismatch("product_rule: slot count differs from the point");
    }
    return product_projection(ctx.y_prev, ctx.k);
  }
  int block_count() const override { return m_; }
  RuleKind kind() const override { return RuleKind::Deterministic; }

 private:
  int m_;
};

class RandomizedRule : public SelectionRule {
 public:
  RandomizedRule(std::vector<double> probs, std::uint64_t seed)
      : probs_(std::move(probs)), seed_(seed), rng_(seed) {
    check_probabilities(probs_);
    dist_ = std::discrete_distribution<int>(probs_.begin(), probs_.end());
  }
  int block_count() const override { return 1; }
  RuleKind kind() const override { return RuleKind::Randomized; }
  std::vector<double> probabilities() const override { return probs_; }

 protected:
  int draw() { return dist_(rng_); }

  std::vector<double> probs_;
  std::uint64_t seed_;
  Rng rng_;

 private:
  std::discrete_distribution<int> dist_;
};

class RandomizedFiniteRule : public RandomizedRule {
 public:
  RandomizedFiniteRule(DecompositionFactory decomp, std::vector<double> probs, std::uint64_t seed)
      : RandomizedRule(std::move(probs), seed), decomp_(std::move(decomp)) {}

  SubspaceProjection select(const SelectionContext& ctx) override {
    Decomposition parts = decomp_(ctx.y_prev);
    if (parts.size() != probs_.size()) {
      throw std::invalid_argument("randomized_finite_rule: decomposition size differs from probabilities");
    }
    const int k = draw();
    parts[k].descriptor().block = k;
    return parts[k];
  }

 private:
  DecompositionFactory decomp_;
};

class RandomizedOrthogonalRule : public RandomizedRule {
 public:
  RandomizedOrthogonalRule(int n, std::vector<double> probs, std::uint64_t seed)
      : RandomizedRule(std::move(probs), seed), pairs_(lexicographic_pairs(n)), n_(n) {
    if (probs_.size() != pairs_.size()) {
      throw std::invalid_argument("randomized_orthogonal_rule: need n(n-1)/2 probabilities");
    }
  }

  SubspaceProjection select(const SelectionContext& ctx) override {
    if (ctx.y_prev.orth().rows() != n_) throw DimensionMismatch("randomized_orthogonal_rule: wrong n");
    const int k = draw();
    auto p = givens_projection(ctx.y_prev, {pairs_[k]});
    p.descriptor().block = k;
    return p;
  }

 private:
  std::vector<IndexPair> pairs_;
  int n_;
};

class RandomizedStiefelRule : public RandomizedRule {
 public:
  RandomizedStiefelRule(int n, int p, std::vector<double> pair_probs, std::vector<double> column_probs,
                        std::uint64_t seed)
      : RandomizedRule(concat(pair_probs, column_probs), seed), pairs_(lexicographic_pairs(p)), n_(n), p_(p) {
    if (p >= n) throw std::invalid_argument("randomized_stiefel_rule: need p < n");
    if (pair_probs.size() != pairs_.size() || column_probs.size() != static_cast<std::size_t>(p)) {
      throw std::invalid_argument("randomized_stiefel_rule: probability vector sizes");
    }
  }

  SubspaceProjection select(const SelectionContext& ctx) override {
    const Matrix& u = ctx.y_prev.frame();
    if (u.rows() != n_ || u.cols() != p_) throw DimensionMismatch("randomized_stiefel_rule: wrong shape");
    const int k = draw();
    const int npairs = static_cast<int>(pairs_.size());
    if (k < npairs) {
      const auto [i, j] = pairs_[k];
      const Matrix dir = u * Skew::basis(p_, i, j).matrix();
      auto proj = span_projection(ctx.y_prev, {TangentVector::stiefel(dir)});
      proj.descriptor().pairs = {pairs_[k]};
      proj.descriptor().block = k;
      return proj;
    }
    const int col = k - npairs;
    const Vector v = kernel_direction(u);
    Matrix dir = Matrix::Zero(n_, p_);
    dir.col(col) = v;
    auto proj = span_projection(ctx.y_prev, {TangentVector::stiefel(dir)});
    proj.descriptor().column = col;
    proj.descriptor().direction = v;
    proj.descriptor().block = k;
    return proj;
  }

 private:
  static std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a);
    out.insert(out.end(), b.begin(), b.end());
    return out;
  }

  // Uniform on the unit sphere of Ker(U^T): project a Gaussian sample.
  Vector kernel_direction(const Matrix& u) {
    Vector z = gaussian_matrix<double>(n_, 1, rng_);
    for (int retry = 1;; ++retry) {
      Vector w = z - u * (u.transpose() * z);
      const double nw = w.norm();
      if (nw >= 1e-12) return w / nw;
      if (retry > 100) throw NumericalFailure("randomized_stiefel_rule: kernel sample keeps degenerating");
      Rng fresh(seed_ ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(++retries_)));
      z = gaussian_matrix<double>(n_, 1, fresh);
    }
  }

  std::vector<IndexPair> pairs_;
  int n_, p_;
  std::uint64_t retries_ = 0;
};

}  // namespace

RulePtr parallel_transport_rule(DecompositionFactory decomp, int block_count) {
  return std::make_shared<ParallelTransportRule>(std::move(decomp), block_count);
}

RulePtr product_rule(int m) { return std::make_shared<ProductRule>(m); }

RulePtr randomized_finite_rule(DecompositionFactory decomp, std::vector<double> probs, std::uint64_t seed) {
  return std::make_shared<RandomizedFiniteRule>(std::move(decomp), std::move(probs), seed);
}

RulePtr randomized_orthogonal_rule(int n, std::vector<double> probs, std::uint64_t seed) {
  return std::make_shared<RandomizedOrthogonalRule>(n, std::move(probs), seed);
}

RulePtr randomized_stiefel_rule(int n, int p, std::vector<double> pair_probs,
                                std::vector<double> column_probs, std::uint64_t seed) {
  return std::make_shared<RandomizedStiefelRule>(n, p, std::move(pair_probs), std::move(column_probs),
                                                 seed);
}

}  // namespace tsd
