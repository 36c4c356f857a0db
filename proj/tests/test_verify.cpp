#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "tsd/procrustes.hpp"
#include "tsd/solver.hpp"
#include "tsd/verify.hpp"

using namespace tsd;

namespace {

std::vector<SubspaceProjection> singletons(const ManifoldPoint& x) {
  std::vector<SubspaceProjection> out;
  for (const auto& pr : lexicographic_pairs(static_cast<int>(x.orth().rows()))) out.push_back(givens_projection(x, {pr}));
  return out;
}

Skew scaled_to(const Skew& c, double target) { return (target / c.norm()) * c; }

}  // namespace

TEST(Seminorm, ParsevalOnOrthogonalDecomposition) {
  Rng rng(51);
  const auto x = ManifoldPoint::orthogonal(random_orthogonal<double>(3, rng));
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = TangentVector::orthogonal(random_skew<double>(3, rng));
    EXPECT_NEAR(seminorm(v, singletons(x)), norm(x, v), 1e-12);
  }
}

TEST(Seminorm, VanishesOffTheImage) {
  const auto x = ManifoldPoint::euclidean(Vector::Zero(2));
  const auto p = span_projection(x, {TangentVector::euclidean((Vector(2) << 1, 0).finished())});
  EXPECT_EQ(seminorm(TangentVector::euclidean((Vector(2) << 0, 3).finished()), {p}), 0.0);
  EXPECT_THROW(seminorm(TangentVector::euclidean(Vector::Zero(3)), {p}), DimensionMismatch);
}

TEST(NormEquivRatio, OneForOrthogonalDecomposition) {
  const auto x = ManifoldPoint::orthogonal(random_orthogonal<double>(5, std::uint64_t{52}));
  EXPECT_NEAR(norm_equiv_ratio(singletons(x)), 1.0, 1e-10);
}

TEST(NormEquivRatio, InfiniteWhenSpanDeficient) {
  const auto x = ManifoldPoint::euclidean(Vector::Zero(2));
  const auto p = span_projection(x, {TangentVector::euclidean((Vector(2) << 1, 1).finished())});
  EXPECT_EQ(norm_equiv_ratio({p, p}), kInfinity);
}

TEST(NormEquivRatio, BoundedInsideGapRadius) {
  Rng rng(53);
  const double beta = 0.95;
  const double gamma = std::sqrt(1 - beta * beta);
  const double bound = 1.0 / (1.0 - std::sqrt(6.0) * gamma);
  const auto y0 = ManifoldPoint::orthogonal(random_orthogonal<double>(4, rng));
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Skew> cs;
    for (int k = 0; k < 6; ++k) {
      const double r = gap_radius(beta) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      cs.push_back(scaled_to(random_skew<double>(4, rng), r));
    }
    EXPECT_LE(norm_equiv_ratio(pulled_back_singletons(y0, cs)), bound + 1e-8);
  }
}

TEST(Counterexample, RandomizedTrace) {
  Rng rng(54);
  for (int n : {3, 5, 10}) {
    const Vector x0 = gaussian_matrix<double>(n, 1, rng);
    const auto res = counterexample_randomized(x0, 40, 55);
    EXPECT_DOUBLE_EQ(res.epsilon, 0.25 * x0.squaredNorm());
    EXPECT_NEAR(res.f[0], 2 * res.epsilon, 1e-12);
    for (int t = 0; t <= 40; ++t) EXPECT_NEAR(res.f[t], res.epsilon * (1 + std::ldexp(1.0, -t)), 1e-9);
    EXPECT_GE(res.report[39].ratio, 10 * res.report[4].ratio);
  }
  EXPECT_THROW(counterexample_randomized(Vector::Ones(3), 51, 1), std::invalid_argument);
  EXPECT_THROW(counterexample_randomized(Vector::Zero(3), 5, 1), std::invalid_argument);
}

TEST(Counterexample, DeterministicInnerIdentity) {
  Rng rng(56);
  for (int n : {3, 5, 10}) {
    const Vector x0 = gaussian_matrix<double>(n, 1, rng);
    const auto res = counterexample_deterministic(x0, 40);
    const double eps = res.epsilon;
    for (int t = 1; t <= 40; ++t) {
      const double prev = res.f[t - 1];
      ASSERT_EQ(static_cast<int>(res.f_inner[t - 1].size()), n);
      for (int k = 1; k <= n; ++k) {
        EXPECT_NEAR(res.f_inner[t - 1][k - 1], ((2.0 * n - k) * prev + k * eps) / (2.0 * n), 1e-9);
      }
      EXPECT_NEAR(res.f[t], 0.5 * (prev + eps), 1e-9);
      EXPECT_NEAR(res.f[t], eps * (1 + std::ldexp(1.0, -t)), 1e-9);
      EXPECT_TRUE(res.report[t - 1].spanning);
    }
    EXPECT_GE(res.report[39].ratio, 10 * res.report[4].ratio);
  }
}

TEST(Counterexample, SliceDirectionsSpanAndLieOnSlice) {
  Rng rng(57);
  const Vector x = gaussian_matrix<double>(6, 1, rng);
  const double s = 0.3 * x.norm();
  const auto dirs = slice_directions(x, s);
  ASSERT_EQ(dirs.size(), 6u);
  Matrix stack(6, 6);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(dirs[i].norm(), 1.0, 1e-14);
    EXPECT_NEAR(dirs[i].dot(x), s, 1e-12);
    stack.col(i) = dirs[i];
  }
  EXPECT_GT(Eigen::JacobiSVD<Matrix>(stack).singularValues().minCoeff(), 1e-6);
}

TEST(GapCheck, ZeroDisplacementsGiveMinimumOne) {
  const auto part = GivensPartition::matching(6);
  const auto rep = check_gap_orthogonal(part, std::vector<Skew>(part.block_count(), Skew::zero(6)), 0.99);
  EXPECT_NEAR(rep.minimum, 1.0, 1e-15);
  EXPECT_TRUE(rep.pass);
}

TEST(GapCheck, PassesAtRadiusBoundary) {
  Rng rng(58);
  const auto part = GivensPartition::matching(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Skew> cs;
    for (int k = 0; k < part.block_count(); ++k) cs.push_back(scaled_to(random_skew<double>(6, rng), gap_radius(0.9)));
    const auto rep = check_gap_orthogonal(part, cs, 0.9);
    EXPECT_TRUE(rep.pass) << rep.minimum;
    EXPECT_TRUE(rep.projection_bound_ok);
  }
}

TEST(GapCheck, RadiusFormula) {
  EXPECT_NEAR(gap_radius(0.75), 2 * std::log(1.5), 1e-15);
  EXPECT_EQ(gap_radius(1.0), 0.0);
}

TEST(GapCheck, AdversarialDisplacementFails) {
  const auto part = GivensPartition::singleton(4);
  std::vector<Skew> cs(part.block_count(), Skew::zero(4));
  cs[0] = adversarial_displacement(4, {0, 1}, {2, 3});
  const auto rep = check_gap_orthogonal(part, cs, 0.5);
  EXPECT_FALSE(rep.within_radius[0]);
  EXPECT_FALSE(rep.pass);
  EXPECT_LT(rep.block_min[0], 0.5);
}

TEST(Adversarial, ConstructionAndEntries) {
  const Skew c = adversarial_displacement(4, {0, 1}, {2, 3});
  const Matrix want = std::numbers::pi * (oracle::h(4, 0, 2) + oracle::h(4, 1, 3));
  EXPECT_LE((c.matrix() - want).norm(), 1e-15);
  const Matrix e = oracle::taylor_expm(0.5 * want);
  Matrix entries = Matrix::Zero(4, 4);
  entries(0, 2) = entries(1, 3) = 1.0;
  entries(2, 0) = entries(3, 1) = -1.0;
  EXPECT_LE((e - entries).norm(), 1e-12);
  EXPECT_LE((e.transpose() * oracle::h(4, 2, 3) * e - oracle::h(4, 0, 1)).norm(), 1e-12);
  EXPECT_THROW(adversarial_displacement(4, {0, 1}, {1, 3}), std::invalid_argument);
  EXPECT_THROW(adversarial_displacement(4, {0, 1}, {2, 4}), std::invalid_argument);
}

TEST(Adversarial, SpanCollapse) {
  for (int n : {4, 6, 10}) {
    const auto y0 = ManifoldPoint::orthogonal(random_orthogonal<double>(n, std::uint64_t(n)));
    const auto pairs = lexicographic_pairs(n);
    std::vector<Skew> cs(pairs.size(), Skew::zero(n));
    // Pull block (2, 3) onto the image of block (0, 1).
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (pairs[k] == IndexPair{2, 3}) cs[k] = adversarial_displacement(n, {0, 1}, {2, 3});
    }
    const auto ps = pulled_back_singletons(y0, cs);
    EXPECT_LT(stacked_sigma_min(ps), 1e-10) << "n=" << n;
    EXPECT_EQ(norm_equiv_ratio(ps), kInfinity);
  }
}

TEST(RandomizedConstant, UniformFiniteRule) {
  const auto x = ManifoldPoint::orthogonal(random_orthogonal<double>(4, std::uint64_t{59}));
  auto decomp = [](const ManifoldPoint& y) {
    Decomposition out;
    for (const auto& pr : lexicographic_pairs(4)) out.push_back(givens_projection(y, {pr}));
    return out;
  };
  auto rule = randomized_finite_rule(decomp, uniform_probabilities(6), 60);
  const auto est = estimate_randomized_constant(*rule, x, 20000, 5, 61);
  for (std::size_t i = 0; i < est.means.size(); ++i) EXPECT_LE(std::abs(est.means[i] - 1.0 / 6), 3 * est.ses[i]);
}

TEST(RandomizedConstant, StiefelLowerBound) {
  Rng rng(62);
  const auto x = ManifoldPoint::stiefel(random_stiefel<double>(8, 3, rng));
  const auto probs = uniform_probabilities(6);
  auto rule = randomized_stiefel_rule(8, 3, {probs.begin(), probs.begin() + 3}, {probs.begin() + 3, probs.end()}, 63);
  const auto est = estimate_randomized_constant(*rule, x, 20000, 10, 64);
  EXPECT_GE(est.c2_hat, std::min(1.0 / 6, 1.0 / 6 / 5) - 3 * est.se);
}

TEST(RandomizedConstant, DeterministicRuleRejected) {
  const auto x = ManifoldPoint::orthogonal(Matrix::Identity(3, 3));
  GivensRule rule(GivensPartition::singleton(3));
  EXPECT_THROW(estimate_randomized_constant(rule, x, 10, 1, 1), std::invalid_argument);
}

TEST(Audit, StationaryTraceIsVacuous) {
  const auto x0 = ManifoldPoint::orthogonal(Matrix::Identity(3, 3));
  SolverConfig cfg;
  cfg.rule = givens_rule(GivensPartition::singleton(3));
  cfg.policy = StepsizePolicy::fixed_inverse_l();
  cfg.monitor_decrease = true;
  const auto res = tsd_run(linear_trace_objective(Matrix::Identity(3, 3)), x0, cfg);
  EXPECT_TRUE(decrease_audit(res.trace, {}).pass);
}

TEST(Audit, ProcrustesFixedStepPassesAndCorruptionIsCaught) {
  const auto inst = gen_instance(20, 65);
  auto obj = linear_trace_objective(inst.d);
  SolverConfig cfg;
  cfg.rule = givens_rule(GivensPartition::matching(20));
  cfg.policy = StepsizePolicy::fixed_inverse_l();
  cfg.monitor_decrease = true;
  cfg.max_outer_iterations = 30;
  const auto res = tsd_run(obj, ManifoldPoint::orthogonal(Matrix::Identity(20, 20)), cfg);
  AuditConstants c;
  c.smoothness = inst.d.norm();
  const auto rep = decrease_audit(res.trace, c);
  EXPECT_TRUE(rep.pass) << (rep.failures.empty() ? "" : rep.failures.front());
  EXPECT_EQ(static_cast<int>(rep.entries.size()), 30);

  auto bad = res.trace;
  bad.inner[25].f_after += 1.0;
  EXPECT_FALSE(decrease_audit(bad, c).pass);

  auto missing = res.trace;
  missing.inner.clear();
  EXPECT_THROW(decrease_audit(missing, c), std::invalid_argument);
}

TEST(ProjectionNorm, BoundHolds) { EXPECT_LE(projection_norm_worst_slack(300, 5, 12, 66), 1e-10); }

TEST(Suite, AllChecksPass) {
  for (const auto& r : run_suite()) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}
