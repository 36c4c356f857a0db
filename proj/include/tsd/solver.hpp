#pragma once

// Tangent subspace descent and a Riemannian gradient descent baseline.

#include <limits>
#include <string>
#include <vector>

#include "tsd/manifold.hpp"
#include "tsd/selection.hpp"

namespace tsd {

struct StepsizePolicy {
  enum class Kind { FixedInverseL, Backtracking, ExactGivens };

  Kind kind = Kind::Backtracking;
  double c = 1e-4;
  double shrink = 0.5;
  double eta0 = 1.0;
  int max_halvings = 60;

  static StepsizePolicy fixed_inverse_l() { return {Kind::FixedInverseL}; }
  static StepsizePolicy backtracking(double c = 1e-4, double shrink = 0.5, double eta0 = 1.0) {
    return {Kind::Backtracking, c, shrink, eta0};
  }
  static StepsizePolicy exact_givens() { return {Kind::ExactGivens}; }

  void validate() const;
};

struct SolverConfig {
  int max_outer_iterations = 1000;
  double gradient_tolerance = 1e-6;
  RulePtr rule;
  StepsizePolicy policy;
  bool record_trace = true;
  /// Keep one InnerRecord per inner step and assert the block decrease bound.
  bool monitor_decrease = false;
  double renormalize_threshold = kManifoldTol;

  void validate() const;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct InnerRecord {
  int t = 0;
  int k = 0;
  double f_before = 0;
  double f_after = 0;
  double block_grad_norm = 0;  // ||P_k grad f(y^{k-1})||
  double step = 0;             // eta_{t,k}
  double lipschitz = kNaN;     // L_k used by the monitor, NaN if unknown
  double residual = kNaN;      // f_before - f_after - ||P grad||^2 / (2 L_k)
  double step_length = 0;      // d(y^{k-1}, y^k) = eta ||P grad||
};

struct OuterRecord {
  int t = 0;
  double f = 0;
  double grad_norm = 0;
  long cycles = 0;
  double flops = 0;
};

struct IterationTrace {
  std::vector<OuterRecord> outer;  // outer[0] is the starting point
  std::vector<InnerRecord> inner;
  bool converged = false;
  std::string status;  // "converged", "max-iterations", "line-search-stalled"
  RuleKind rule_kind = RuleKind::Deterministic;
  int blocks_per_cycle = 1;
  long inner_steps = 0;
};

struct SolverResult {
  ManifoldPoint x;
  IterationTrace trace;
};

struct StepResult {
  ManifoldPoint point;
  double eta = 0;
  int trials = 0;
  double f = 0;
};

/// y -> exp_map(y, -(1 / L) P grad f(y)).
ManifoldPoint step_fixed(const Objective& obj, const ManifoldPoint& y, const SubspaceProjection& p,
                         double lipschitz);

/// Armijo backtracking on eta in {eta0 * shrink^j}. Throws NumericalFailure
/// when max_halvings shrinks are exhausted.
StepResult step_backtracking(const Objective& obj, const ManifoldPoint& y, const SubspaceProjection& p,
                             const StepsizePolicy& policy);

struct GivensLineSearch {
  double eta = 0;    // Y <- Y expm(-eta H_ij)
  double value = 0;  // optimal Tr(G R)
  double cos = 1;    // rotation block [[cos, sin], [-sin, cos]] on (i, j)
  double sin = 0;
};

/// Exact minimizer of eta -> Tr(D^T Y expm(-eta H_ij)) given G = D^T Y.
/// Returns eta in [0, 2 pi); eta = 0 when the objective is flat along the pair.
GivensLineSearch givens_exact_linesearch(const Matrix& g, int i, int j);

SolverResult tsd_run(const Objective& obj, const ManifoldPoint& x0, const SolverConfig& config);
SolverResult rgd_run(const Objective& obj, const ManifoldPoint& x0, const SolverConfig& config);

}  // namespace tsd
