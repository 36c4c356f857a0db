#pragma once

// Numerical checks: seminorms and norm equivalence, the slice-based
// counterexamples, gap and adversarial constructions on O(n), Monte Carlo
// estimates for randomized rules, and decrease audits over solver traces.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tsd/manifold.hpp"
#include "tsd/selection.hpp"
#include "tsd/solver.hpp"

namespace tsd {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// sqrt(sum_k w_k ||P_k v||^2); weights default to 1.
double seminorm(const TangentVector& v, const std::vector<SubspaceProjection>& projections,
                const std::vector<double>& weights = {});

/// Smallest singular value of the stacked operator [sqrt(w_k) P_k] in an
/// orthonormal frame of the common tangent space.
double stacked_sigma_min(const std::vector<SubspaceProjection>& projections,
                         const std::vector<double>& weights = {});

/// sup_v ||v|| / ||v||_P, or kInfinity when sigma_min < 1e-12.
double norm_equiv_ratio(const std::vector<SubspaceProjection>& projections,
                        const std::vector<double>& weights = {});

struct NormEquivalenceEntry {
  int t = 0;
  double ratio = 0;
  double sigma_min = 0;
  bool spanning = false;
};

struct CounterexampleResult {
  std::vector<double> f;                     // f(x^t), t = 0..T
  std::vector<std::vector<double>> f_inner;  // f(y^{t,k}), k = 1..m (deterministic only)
  std::vector<NormEquivalenceEntry> report;  // t = 1..T
  double epsilon = 0;
  Vector x_final;
};

/// Randomized construction for f(x) = ||x||^2 / 2 with epsilon = f(x0) / 2.
CounterexampleResult counterexample_randomized(const Vector& x0, int T, std::uint64_t seed);
/// Deterministic construction with m = n inner steps per outer iteration.
CounterexampleResult counterexample_deterministic(const Vector& x0, int T);

/// The n candidate unit vectors on the slice <v, x> = s used by the randomized
/// construction.
std::vector<Vector> slice_directions(const Vector& x, double s);

struct GapReport {
  double beta = 0;
  double radius = 0;
  double gamma = 0;                   // max_k |B_k| sqrt(1 - beta^2)
  std::vector<double> block_min;      // per block: min_A Tr(A^T E^T A E)
  std::vector<double> block_distance; // per block: ||P_k - P'_k||_2 in coefficient space
  std::vector<bool> within_radius;    // ||C_k||_F <= radius
  double minimum = 1;
  bool projection_bound_ok = true;
  bool pass = false;
};

double gap_radius(double beta);

/// One displacement per block; E_k = expm(C_k / 2).
GapReport check_gap_orthogonal(const GivensPartition& partition, const std::vector<Skew>& displacements,
                               double beta);

/// C = pi (H_{i i'} + H_{j j'}) for pairwise distinct indices, so that
/// expm(C/2)^T H_{i'j'} expm(C/2) = H_ij.
Skew adversarial_displacement(int n, IndexPair ij, IndexPair ij_prime);

/// Singleton decomposition at Y0 pulled back with per-block displacements:
/// block (a, b) projects onto span(E^T H_ab E), E = expm(C_ab / 2).
std::vector<SubspaceProjection> pulled_back_singletons(const ManifoldPoint& y0,
                                                       const std::vector<Skew>& displacements);

struct RandomizedConstantEstimate {
  double c2_hat = 0;  // min over probes of the mean
  double se = 0;      // standard error at the minimizing probe
  std::vector<double> means;
  std::vector<double> ses;
  std::vector<TangentVector> probes;
};

/// Monte Carlo E||P v||^2 for random unit probes. Throws for deterministic rules.
RandomizedConstantEstimate estimate_randomized_constant(SelectionRule& rule, const ManifoldPoint& x,
                                                        int samples, int probes, std::uint64_t seed);

struct AuditConstants {
  std::vector<double> block_lipschitz;  // L_k
  double smoothness = 0;                // L_f
  double gamma = 0;
  double radius = 0;
};

struct AuditEntry {
  int t = 0;
  double decrease = 0;  // f(y^{t,0}) - f(y^{t,m})
  double bound = 0;     // sum_k ||P_k grad||^2 / (2 L_k)
  bool decrease_ok = false;
  bool small_step = false;
  double branch_bound = kNaN;  // eta ||grad f(y^{t,0})||^2 or eta'
  bool branch_ok = true;
};

struct AuditReport {
  bool pass = true;
  bool branches_vacuous = false;  // sqrt(m) gamma >= 1
  double eta = kNaN;
  double eta_prime = kNaN;
  std::vector<AuditEntry> entries;
  std::vector<std::string> failures;
};

/// Checks the per-outer-iteration decrease bound on a monitored trace and
/// classifies iterations into the small-step / large-step branches.
AuditReport decrease_audit(const IterationTrace& trace, const AuditConstants& constants,
                           double tol = 1e-9);

/// Random pairs of d-dimensional subspaces with matched orthonormal bases:
/// returns the worst value of ||P - P'||_2 - d sqrt(1 - beta^2).
double projection_norm_worst_slack(int trials, int max_d, int ambient, std::uint64_t seed);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The verification battery behind the CLI `verify` subcommand.
std::vector<CheckResult> run_suite(std::uint64_t seed = 2024);

}  // namespace tsd
