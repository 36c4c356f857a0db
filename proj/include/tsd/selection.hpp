#pragma once

// Subspace projections and the rules that choose them.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsd/manifold.hpp"

namespace tsd {

using IndexPair = std::pair<int, int>;

struct ProjectionDescriptor {
  std::string kind;             // "identity", "givens", "span", "slot", "conjugated"
  int block = -1;               // block index k, when the projection came from a rule
  std::vector<IndexPair> pairs;  // Givens pairs (i, j), i < j
  int column = -1;              // Stiefel column selected by a kernel draw
  std::optional<Vector> direction;

  static ProjectionDescriptor of(std::string kind) {
    ProjectionDescriptor d;
    d.kind = std::move(kind);
    return d;
  }
};

/// Metric-orthogonal projection of T_x M onto a subspace.
class SubspaceProjection {
 public:
  using ApplyFn = std::function<TangentVector(const TangentVector&)>;

  SubspaceProjection(ManifoldPoint base, ApplyFn apply, int rank, ProjectionDescriptor desc)
      : base_(std::move(base)), apply_(std::move(apply)), rank_(rank), desc_(std::move(desc)) {}

  /// Throws DimensionMismatch if `v` is not a tangent vector at base().
  TangentVector operator()(const TangentVector& v) const;

  const ManifoldPoint& base() const { return base_; }
  int rank() const { return rank_; }
  const ProjectionDescriptor& descriptor() const { return desc_; }
  ProjectionDescriptor& descriptor() { return desc_; }

 private:
  ManifoldPoint base_;
  ApplyFn apply_;
  int rank_;
  ProjectionDescriptor desc_;
};

using Decomposition = std::vector<SubspaceProjection>;

SubspaceProjection identity_projection(const ManifoldPoint& x);
/// On O(n): Y A -> Y B(A), keeping only the coefficients a_ij of the listed pairs.
SubspaceProjection givens_projection(const ManifoldPoint& x, std::vector<IndexPair> pairs);
/// Orthogonal projection onto span(vectors); linearly dependent inputs are dropped.
SubspaceProjection span_projection(const ManifoldPoint& x, const std::vector<TangentVector>& vectors);
/// On a product: zero every slot except slot k.
SubspaceProjection product_projection(const ManifoldPoint& x, int k);

/// Linear map T_x M -> T_y M together with its inverse.
struct LinearIsometry {
  ManifoldPoint from;
  ManifoldPoint to;
  std::function<TangentVector(const TangentVector&)> forward;
  std::function<TangentVector(const TangentVector&)> inverse;
};

/// Parallel transport along t -> exp_map(x, t dir), t in [0, 1].
LinearIsometry transport_isometry(const ManifoldPoint& x, const TangentVector& dir);

/// U P U^{-1}. Throws std::invalid_argument if U distorts the metric by more
/// than `tol` on an orthonormal frame of T_x M.
SubspaceProjection conjugated_projection(const LinearIsometry& iso, const SubspaceProjection& p,
                                         double tol = 1e-10);

// ---- partitions ------------------------------------------------------------

struct GivensPartition {
  int n = 0;
  std::vector<std::vector<IndexPair>> blocks;

  /// One block per pair, lexicographic order.
  static GivensPartition singleton(int n);
  /// Round-robin perfect matchings: n - 1 blocks for even n, n blocks for odd n.
  static GivensPartition matching(int n);

  int block_count() const { return static_cast<int>(blocks.size()); }
  /// Throws unless the blocks partition {(i, j) : 0 <= i < j < n}.
  void validate() const;
  /// True if no row/column index repeats inside any block.
  bool blocks_index_disjoint() const;
};

// ---- rules -----------------------------------------------------------------

enum class RuleKind { Deterministic, Randomized };

struct SelectionContext {
  const ManifoldPoint& y0;      // start of the outer iteration
  const ManifoldPoint& y_prev;  // current inner iterate
  int k;                        // block index, zero-based
  int t;                        // outer iteration, one-based
};

class SelectionRule {
 public:
  virtual ~SelectionRule() = default;
  virtual SubspaceProjection select(const SelectionContext& ctx) = 0;
  /// Inner steps per outer iteration (1 for randomized rules).
  virtual int block_count() const = 0;
  virtual RuleKind kind() const = 0;
  /// Sampling probabilities; empty for deterministic rules.
  virtual std::vector<double> probabilities() const { return {}; }
};

using RulePtr = std::shared_ptr<SelectionRule>;
using DecompositionFactory = std::function<Decomposition(const ManifoldPoint&)>;

class GivensRule : public SelectionRule {
 public:
  explicit GivensRule(GivensPartition partition);
  SubspaceProjection select(const SelectionContext& ctx) override;
  int block_count() const override { return partition_.block_count(); }
  RuleKind kind() const override { return RuleKind::Deterministic; }
  const GivensPartition& partition() const { return partition_; }

 private:
  GivensPartition partition_;
};

RulePtr givens_rule(GivensPartition partition);

/// Pulls the decomposition at y0 along the geodesic to the current iterate.
RulePtr parallel_transport_rule(DecompositionFactory decomp, int block_count);

/// Slot selector on a product manifold with m slots; on a product of Euclidean
/// blocks this is cyclic block coordinate descent.
RulePtr product_rule(int m);

RulePtr randomized_finite_rule(DecompositionFactory decomp, std::vector<double> probs,
                               std::uint64_t seed);
/// `probs` indexed by pairs in lexicographic order; size n(n-1)/2.
RulePtr randomized_orthogonal_rule(int n, std::vector<double> probs, std::uint64_t seed);
/// `pair_probs` for U H_ij (lexicographic, size p(p-1)/2), `column_probs` for
/// kernel directions v e_l^T (size p). All entries positive, total 1.
RulePtr randomized_stiefel_rule(int n, int p, std::vector<double> pair_probs,
                                std::vector<double> column_probs, std::uint64_t seed);

std::vector<double> uniform_probabilities(int count);
/// Throws std::invalid_argument unless all entries are > 0 and sum to 1 within 1e-12.
void check_probabilities(const std::vector<double>& probs);

std::vector<IndexPair> lexicographic_pairs(int n);

}  // namespace tsd
