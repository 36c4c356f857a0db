#include "tsd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "tsd/procrustes.hpp"

namespace tsd {

namespace {

void check_common_base(const std::vector<SubspaceProjection>& ps) {
  if (ps.empty()) throw std::invalid_argument("need at least one projection");
  const ManifoldPoint& b0 = ps.front().base();
  const int d = tangent_dimension(b0);
  for (const auto& p : ps) {
    const ManifoldPoint& b = p.base();
    if (b.value.index() != b0.value.index() || tangent_dimension(b) != d) {
      throw DimensionMismatch("projections live on different tangent spaces");
    }
    if (b.is_orthogonal() && (b.orth() - b0.orth()).norm() > 1e-12) {
      throw DimensionMismatch("projections are anchored at different points");
    }
    if (b.is_stiefel() && (b.frame() - b0.frame()).norm() > 1e-12) {
      throw DimensionMismatch("projections are anchored at different points");
    }
  }
}

std::vector<double> resolve_weights(const std::vector<double>& w, std::size_t count) {
  if (w.empty()) return std::vector<double>(count, 1.0);
  if (w.size() != count) throw std::invalid_argument("one weight per projection required");
  return w;
}

double half_sq_norm(const Vector& x) { return 0.5 * x.squaredNorm(); }

Matrix as_column(const Vector& v) { return Matrix(v); }

// Orthonormal basis of the complement of the unit vector u.
Matrix complement_of(const Vector& u) { return orth_complement_basis<double>(as_column(u), 1e-9); }

int pair_index(int n, int i, int j) { return i * n - i * (i + 1) / 2 + (j - i - 1); }

// Coefficients of a skew matrix in the orthonormal basis H_ij / sqrt(2).
Vector skew_coords(const Matrix& a) {
  const auto n = static_cast<int>(a.rows());
  Vector c(n * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) c(pair_index(n, i, j)) = std::numbers::sqrt2 * 0.5 * (a(i, j) - a(j, i));
  }
  return c;
}

double sym_spectral_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double seminorm(const TangentVector& v, const std::vector<SubspaceProjection>& projections,
                const std::vector<double>& weights) {
  check_common_base(projections);
  const auto w = resolve_weights(weights, projections.size());
  const ManifoldPoint& x = projections.front().base();
  double s = 0.0;
  for (std::size_t k = 0; k < projections.size(); ++k) {
    const TangentVector pv = projections[k](v);
    s += w[k] * metric(x, pv, pv);
  }
  return std::sqrt(s);
}

double stacked_sigma_min(const std::vector<SubspaceProjection>& projections, const std::vector<double>& weights) {
  check_common_base(projections);
  const auto w = resolve_weights(weights, projections.size());
  const ManifoldPoint& x = projections.front().base();
  const auto frame = tangent_basis(x);
  const auto d = static_cast<Eigen::Index>(frame.size());
  const auto count = static_cast<Eigen::Index>(projections.size());
  Matrix stacked(count * d, d);
  for (Eigen::Index k = 0; k < count; ++k) {
    const double sw = std::sqrt(w[k]);
    for (Eigen::Index b = 0; b < d; ++b) {
      stacked.block(k * d, b, d, 1) = sw * tangent_coords(x, projections[k](frame[b]));
    }
  }
  Eigen::JacobiSVD<Matrix> svd(stacked);
  return svd.singularValues().minCoeff();
}

double norm_equiv_ratio(const std::vector<SubspaceProjection>& projections, const std::vector<double>& weights) {
  const double s = stacked_sigma_min(projections, weights);
  return s < 1e-12 ? kInfinity : 1.0 / s;
}

std::vector<Vector> slice_directions(const Vector& x, double s) {
  const auto n = x.size();
  if (n < 2) throw std::invalid_argument("slice_directions: need n >= 2");
  const double nx = x.norm();
  if (nx == 0.0) throw std::invalid_argument("slice_directions: x must be nonzero");
  const double alpha = s / nx;
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("slice_directions: slice misses the sphere");
  const Vector xhat = x / nx;
  const double beta = std::sqrt(1.0 - alpha * alpha);
  const Matrix u = complement_of(xhat);
  std::vector<Vector> out;
  for (Eigen::Index i = 0; i + 1 < n; ++i) out.push_back(alpha * xhat + beta * u.col(i));
  out.push_back(alpha * xhat - beta * u.col(0));
  return out;
}

namespace {

void check_counterexample_args(const Vector& x0, int T) {
  if (T < 0 || T > 50) throw std::invalid_argument("counterexample: T must lie in [0, 50]");
  if (x0.size() < 2) throw std::invalid_argument("counterexample: need n >= 2");
  if (x0.norm() == 0.0) throw std::invalid_argument("counterexample: x0 must be nonzero");
}

NormEquivalenceEntry rank_one_report(int t, const Vector& base, const std::vector<Vector>& dirs,
                                     const std::vector<double>& weights) {
  const ManifoldPoint x = ManifoldPoint::euclidean(base);
  std::vector<SubspaceProjection> ps;
  for (const auto& v : dirs) ps.push_back(span_projection(x, {TangentVector::euclidean(v)}));
  NormEquivalenceEntry e;
  e.t = t;
  e.sigma_min = stacked_sigma_min(ps, weights);
  e.spanning = e.sigma_min >= 1e-12;
  e.ratio = e.spanning ? 1.0 / e.sigma_min : kInfinity;
  return e;
}

}  // namespace

CounterexampleResult counterexample_randomized(const Vector& x0, int T, std::uint64_t seed) {
  check_counterexample_args(x0, T);
  const auto n = static_cast<int>(x0.size());
  CounterexampleResult res;
  res.epsilon = half_sq_norm(x0) / 2.0;
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  Vector x = x0;
  res.f.push_back(half_sq_norm(x));
  const std::vector<double> weights(static_cast<std::size_t>(n), 1.0 / n);
  for (int t = 1; t <= T; ++t) {
    const double s = std::sqrt(std::max(0.0, half_sq_norm(x) - res.epsilon));
    const auto dirs = slice_directions(x, s);
    res.report.push_back(rank_one_report(t, x, dirs, weights));
    const Vector& v = dirs[static_cast<std::size_t>(pick(rng))];
    x -= v.dot(x) * v;  // unit step on f = |x|^2 / 2 restricted to span(v)
    res.f.push_back(half_sq_norm(x));
  }
  res.x_final = x;
  return res;
}

CounterexampleResult counterexample_deterministic(const Vector& x0, int T) {
  check_counterexample_args(x0, T);
  const auto n = static_cast<int>(x0.size());
  const int m = n;
  CounterexampleResult res;
  res.epsilon = half_sq_norm(x0) / 2.0;
  Vector x = x0;
  res.f.push_back(half_sq_norm(x));
  for (int t = 1; t <= T; ++t) {
    const double s = std::sqrt(std::max(0.0, (half_sq_norm(x) - res.epsilon) / m));
    Vector y = x;
    std::vector<Vector> picks;
    Matrix q(n, 0);  // orthonormal basis of span(picks)
    std::vector<double> inner;
    for (int k = 1; k <= m; ++k) {
      const double ny = y.norm();
      const Vector yhat = y / ny;
      const double alpha = s / ny;
      const double beta = std::sqrt(1.0 - alpha * alpha);
      const Matrix u = complement_of(yhat);
      Vector best;
      double best_res = -1.0;
      for (Eigen::Index i = 0; i < u.cols(); ++i) {
        for (double sign : {1.0, -1.0}) {
          const Vector c = alpha * yhat + sign * beta * u.col(i);
          const double r = (c - q * (q.transpose() * c)).norm();
          if (r > best_res + 1e-12) {
            best_res = r;
            best = c;
          }
        }
      }
      picks.push_back(best);
      if (best_res > 1e-12 && q.cols() < n) {
        Vector w = best - q * (q.transpose() * best);
        q.conservativeResize(Eigen::NoChange, q.cols() + 1);
        q.col(q.cols() - 1) = w / w.norm();
      }
      y -= best.dot(y) * best;
      inner.push_back(half_sq_norm(y));
    }
    res.report.push_back(rank_one_report(t, x, picks, {}));
    res.f_inner.push_back(std::move(inner));
    x = y;
    res.f.push_back(half_sq_norm(x));
  }
  res.x_final = x;
  return res;
}

double gap_radius(double beta) { return 2.0 * std::log(1.0 + std::sqrt(1.0 - beta)); }

GapReport check_gap_orthogonal(const GivensPartition& partition, const std::vector<Skew>& displacements,
                               double beta) {
  partition.validate();
  const int n = partition.n;
  const int m = partition.block_count();
  if (static_cast<int>(displacements.size()) != m) {
    throw DimensionMismatch("check_gap_orthogonal: one displacement per block required");
  }
  GapReport rep;
  rep.beta = beta;
  rep.radius = gap_radius(beta);
  std::size_t widest = 0;
  for (const auto& b : partition.blocks) widest = std::max(widest, b.size());
  rep.gamma = static_cast<double>(widest) * std::sqrt(std::max(0.0, 1.0 - beta * beta));
  const int dim = n * (n - 1) / 2;
  for (int k = 0; k < m; ++k) {
    const Skew& c = displacements[k];
    if (c.dim() != n) throw DimensionMismatch("check_gap_orthogonal: displacement size");
    rep.within_radius.push_back(c.norm() <= rep.radius + 1e-12);
    const Matrix e = expm_skew(0.5 * c);
    double mn = kInfinity;
    Matrix p_ref = Matrix::Zero(dim, dim);
    Matrix p_new = Matrix::Zero(dim, dim);
    for (const auto& [i, j] : partition.blocks[k]) {
      const Matrix a = Skew::basis(n, i, j).matrix() / std::numbers::sqrt2;
      const Matrix rotated = e.transpose() * a * e;
      mn = std::min(mn, (a.transpose() * rotated).trace());
      const Vector ca = skew_coords(a);
      const Vector cb = skew_coords(rotated);
      p_ref += ca * ca.transpose();
      p_new += cb * cb.transpose();
    }
    rep.block_min.push_back(mn);
    rep.block_distance.push_back(sym_spectral_norm(p_new - p_ref));
    rep.minimum = std::min(rep.minimum, mn);
  }
  rep.pass = rep.minimum >= beta - 1e-10;
  if (rep.pass) {
    for (double dist : rep.block_distance) {
      if (dist > rep.gamma + 1e-8) rep.projection_bound_ok = false;
    }
  } else {
    rep.projection_bound_ok = false;
  }
  rep.pass = rep.pass && rep.projection_bound_ok;
  return rep;
}

Skew adversarial_displacement(int n, IndexPair ij, IndexPair ij_prime) {
  const auto [i, j] = ij;
  const auto [ip, jp] = ij_prime;
  const int idx[] = {i, j, ip, jp};
  for (int a = 0; a < 4; ++a) {
    if (idx[a] < 0 || idx[a] >= n) throw std::invalid_argument("adversarial_displacement: index out of range");
    for (int b = a + 1; b < 4; ++b) {
      if (idx[a] == idx[b]) throw std::invalid_argument("adversarial_displacement: indices must be distinct");
    }
  }
  const Skew c = std::numbers::pi * (Skew::basis(n, i, ip) + Skew::basis(n, j, jp));
  const Matrix e = expm_skew(0.5 * c);
  const Matrix lhs = e.transpose() * Skew::basis(n, ip, jp).matrix() * e;
  if ((lhs - Skew::basis(n, i, j).matrix()).norm() > 1e-12) {
    throw NumericalFailure("adversarial_displacement: conjugation identity failed");
  }
  return c;
}

std::vector<SubspaceProjection> pulled_back_singletons(const ManifoldPoint& y0,
                                                       const std::vector<Skew>& displacements) {
  const auto n = static_cast<int>(y0.orth().rows());
  const auto pairs = lexicographic_pairs(n);
  if (displacements.size() != pairs.size()) {
    throw DimensionMismatch("pulled_back_singletons: one displacement per pair required");
  }
  std::vector<SubspaceProjection> out;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Matrix e = expm_skew(0.5 * displacements[k]);
    const Matrix b = e.transpose() * Skew::basis(n, pairs[k].first, pairs[k].second).matrix() * e;
    auto p = span_projection(y0, {TangentVector::orthogonal(Skew::project(b))});
    p.descriptor().block = static_cast<int>(k);
    p.descriptor().pairs = {pairs[k]};
    out.push_back(std::move(p));
  }
  return out;
}

RandomizedConstantEstimate estimate_randomized_constant(SelectionRule& rule, const ManifoldPoint& x, int samples,
                                                        int probes, std::uint64_t seed) {
  if (rule.kind() != RuleKind::Randomized) {
    throw std::invalid_argument("estimate_randomized_constant: rule must be randomized");
  }
  if (samples < 2 || probes < 1) throw std::invalid_argument("estimate_randomized_constant: need samples >= 2");
  Rng rng(seed);
  const int dim = tangent_dimension(x);
  RandomizedConstantEstimate est;
  while (static_cast<int>(est.probes.size()) < probes) {
    const Vector c = gaussian_matrix<double>(dim, 1, rng);
    const double nc = c.norm();
    if (nc < 1e-12) continue;
    est.probes.push_back(from_coords(x, c / nc));
  }
  std::vector<double> sum(probes, 0.0), sum_sq(probes, 0.0);
  for (int s = 0; s < samples; ++s) {
    const SubspaceProjection p = rule.select({x, x, 0, 1});
    for (int q = 0; q < probes; ++q) {
      const TangentVector pv = p(est.probes[q]);
      const double val = metric(x, pv, pv);
      sum[q] += val;
      sum_sq[q] += val * val;
    }
  }
  est.c2_hat = kInfinity;
  for (int q = 0; q < probes; ++q) {
    const double mean = sum[q] / samples;
    const double var = std::max(0.0, (sum_sq[q] - samples * mean * mean) / (samples - 1));
    est.means.push_back(mean);
    est.ses.push_back(std::sqrt(var / samples));
    if (mean < est.c2_hat) {
      est.c2_hat = mean;
      est.se = est.ses.back();
    }
  }
  return est;
}

AuditReport decrease_audit(const IterationTrace& trace, const AuditConstants& constants, double tol) {
  AuditReport rep;
  if (trace.inner.empty()) {
    if (trace.inner_steps > 0) throw std::invalid_argument("decrease_audit: trace has no monitor data");
    return rep;
  }
  const int m = trace.blocks_per_cycle;
  auto lk = [&](const InnerRecord& r) {
    if (static_cast<int>(constants.block_lipschitz.size()) == m) return constants.block_lipschitz[r.k];
    if (!std::isnan(r.lipschitz)) return r.lipschitz;
    return constants.smoothness;
  };
  double l_min = kInfinity, l_max = 0.0;
  for (const auto& r : trace.inner) {
    l_min = std::min(l_min, lk(r));
    l_max = std::max(l_max, lk(r));
  }
  const double lf = constants.smoothness > 0.0 ? constants.smoothness : l_max;
  const double root_m_gamma = std::sqrt(static_cast<double>(m)) * constants.gamma;
  rep.branches_vacuous = !(root_m_gamma < 1.0) || !(constants.radius > 0.0) || !(l_min > 0.0);
  if (!rep.branches_vacuous) {
    rep.eta = l_min * l_min * (1.0 - root_m_gamma) * (1.0 - root_m_gamma) /
              (4.0 * l_max * (l_min * l_min + lf * lf * (m - 1.0) * m));
    rep.eta_prime = l_min * constants.radius * constants.radius / (2.0 * m);
  }

  std::map<int, const OuterRecord*> outer_by_t;
  for (const auto& o : trace.outer) outer_by_t[o.t] = &o;

  auto fail = [&](const std::string& why) {
    rep.pass = false;
    rep.failures.push_back(why);
  };

  std::size_t idx = 0;
  while (idx < trace.inner.size()) {
    const int t = trace.inner[idx].t;
    AuditEntry e;
    e.t = t;
    const double f_start = trace.inner[idx].f_before;
    double f_end = f_start, bound = 0.0, travel = 0.0, prev_after = f_start;
    for (; idx < trace.inner.size() && trace.inner[idx].t == t; ++idx) {
      const auto& r = trace.inner[idx];
      const double scale = std::max(1.0, std::abs(r.f_before));
      if (std::abs(r.f_before - prev_after) > tol * scale) {
        fail("t=" + std::to_string(t) + ": inner objective chain broken at k=" + std::to_string(r.k));
      }
      const double l = lk(r);
      bound += r.block_grad_norm * r.block_grad_norm / (2.0 * l);
      travel += r.block_grad_norm / l;
      prev_after = r.f_after;
      f_end = r.f_after;
    }
    e.decrease = f_start - f_end;
    e.bound = bound;
    e.decrease_ok = e.decrease >= bound - tol;
    if (!e.decrease_ok) fail("t=" + std::to_string(t) + ": decrease below sum of block bounds");
    const auto before = outer_by_t.find(t - 1);
    const auto after = outer_by_t.find(t);
    if (before != outer_by_t.end() && std::abs(before->second->f - f_start) > tol * std::max(1.0, std::abs(f_start))) {
      fail("t=" + std::to_string(t) + ": outer objective disagrees with inner start");
    }
    if (after != outer_by_t.end() && std::abs(after->second->f - f_end) > tol * std::max(1.0, std::abs(f_end))) {
      fail("t=" + std::to_string(t) + ": outer objective disagrees with inner end");
    }
    if (!rep.branches_vacuous) {
      e.small_step = travel <= constants.radius;
      if (e.small_step) {
        if (before != outer_by_t.end()) {
          const double gn = before->second->grad_norm;
          e.branch_bound = rep.eta * gn * gn;
        }
      } else {
        e.branch_bound = rep.eta_prime;
      }
      if (!std::isnan(e.branch_bound)) {
        e.branch_ok = e.decrease >= e.branch_bound - tol;
        if (!e.branch_ok) fail("t=" + std::to_string(t) + (e.small_step ? ": small-step" : ": large-step") +
                               " bound violated");
      }
    }
    rep.entries.push_back(e);
  }
  return rep;
}

double projection_norm_worst_slack(int trials, int max_d, int ambient, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 0.5);
  double worst = -kInfinity;
  for (int trial = 0; trial < trials; ++trial) {
    const int d = 1 + trial % max_d;
    const Matrix a = random_orthogonal<double>(ambient, rng).leftCols(d);
    const Matrix noisy = a + unif(rng) * gaussian_matrix<double>(ambient, d, rng);
    Eigen::HouseholderQR<Matrix> qr(noisy);
    Matrix b = qr.householderQ() * Matrix::Identity(ambient, d);
    double beta = 1.0;
    for (int i = 0; i < d; ++i) {
      if (a.col(i).dot(b.col(i)) < 0.0) b.col(i) *= -1.0;
      beta = std::min(beta, a.col(i).dot(b.col(i)));
    }
    const double dist = sym_spectral_norm(a * a.transpose() - b * b.transpose());
    worst = std::max(worst, dist - d * std::sqrt(std::max(0.0, 1.0 - beta * beta)));
  }
  return worst;
}

// ---- suite -------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

CheckResult check_givens_kernel(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 19;
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    GivensCoefficients<double> g;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k + 1 < n; k += 2) {
      g.pairs.push_back({std::min(perm[k], perm[k + 1]), std::max(perm[k], perm[k + 1]), normal(rng)});
    }
    worst = std::max(worst, (expm_givens(g, n) - expm_skew(to_skew(g, n))).norm());
  }
  return {"givens-kernel", worst <= 1e-12, "max |expm_givens - expm_skew|_F = " + fmt(worst)};
}

CheckResult check_transport(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 19;
    const auto x = ManifoldPoint::orthogonal(random_orthogonal<double>(n, rng));
    const auto c = TangentVector::orthogonal(random_skew<double>(n, rng));
    const auto u = TangentVector::orthogonal(random_skew<double>(n, rng));
    const auto v = TangentVector::orthogonal(random_skew<double>(n, rng));
    const auto y = exp_map(x, c);
    const double before = metric(x, u, v);
    const double after = metric(y, transport(x, c, u), transport(x, c, v));
    worst = std::max(worst, std::abs(after - before) / std::max(1.0, std::abs(before)));
  }
  return {"transport-isometry", worst <= 1e-10, "max metric distortion = " + fmt(worst)};
}

CheckResult check_counterexamples(Rng& rng) {
  double worst = 0.0;
  bool diverges = true;
  for (int n : {3, 5, 10}) {
    const Vector x0 = gaussian_matrix<double>(n, 1, rng);
    const auto r = counterexample_randomized(x0, 40, rng());
    const auto d = counterexample_deterministic(x0, 40);
    for (const auto* res : {&r, &d}) {
      for (int t = 0; t <= 40; ++t) {
        worst = std::max(worst, std::abs(res->f[t] - res->epsilon * (1.0 + std::ldexp(1.0, -t))));
      }
      diverges = diverges && res->report[39].ratio >= 10.0 * res->report[4].ratio;
    }
  }
  return {"counterexamples", worst <= 1e-9 && diverges,
          "max |f - eps(1 + 2^-t)| = " + fmt(worst) + (diverges ? ", ratio diverges" : ", ratio did not diverge")};
}

CheckResult check_gap(Rng& rng) {
  double worst = kInfinity;
  bool ok = true;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (double beta : {0.5, 0.9, 0.99}) {
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 4 + trial % 4;
      const auto part = trial % 2 == 0 ? GivensPartition::matching(n) : GivensPartition::singleton(n);
      std::vector<Skew> cs;
      for (int k = 0; k < part.block_count(); ++k) {
        const Skew c = random_skew<double>(n, rng);
        const double scale = (trial % 3 == 0 ? 1.0 : unif(rng)) * gap_radius(beta) / c.norm();
        cs.push_back(scale * c);
      }
      const auto rep = check_gap_orthogonal(part, cs, beta);
      worst = std::min(worst, rep.minimum - beta);
      ok = ok && rep.minimum >= beta - 1e-10;
    }
  }
  return {"gap-ensuring", ok, "min over trials of (min trace - beta) = " + fmt(worst)};
}

CheckResult check_adversarial() {
  bool ok = true;
  std::string detail;
  for (int n : {4, 6, 10}) {
    const IndexPair ij{0, 1}, ijp{2, 3};
    const Skew c = adversarial_displacement(n, ij, ijp);
    const auto pairs = lexicographic_pairs(n);
    std::vector<Skew> cs(pairs.size(), Skew::zero(n));
    cs[std::find(pairs.begin(), pairs.end(), ijp) - pairs.begin()] = c;
    const auto y0 = ManifoldPoint::orthogonal(Matrix::Identity(n, n));
    const double s = stacked_sigma_min(pulled_back_singletons(y0, cs));
    ok = ok && s < 1e-10;
    detail += "n=" + std::to_string(n) + " sigma_min=" + fmt(s) + " ";
  }
  return {"adversarial-collapse", ok, detail};
}

CheckResult check_linesearch(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 9;
    const Matrix g = gaussian_matrix<double>(n, n, rng);
    std::uniform_int_distribution<int> pick(0, n - 1);
    int i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    if (i > j) std::swap(i, j);
    const auto ls = givens_exact_linesearch(g, i, j);
    double best = kInfinity;
    const int grid = 20000;
    for (int s = 0; s < grid; ++s) {
      const double eta = 2.0 * std::numbers::pi * s / grid;
      GivensCoefficients<double> rot{{{i, j, -eta}}};
      best = std::min(best, (g * expm_givens(rot, n)).trace());
    }
    worst = std::max(worst, std::abs(best - ls.value));
  }
  return {"exact-line-search", worst <= 1e-6, "max |grid - formula| = " + fmt(worst)};
}

CheckResult check_stiefel_rule(Rng& rng) {
  const int n = 8, p = 3;
  const auto x = ManifoldPoint::stiefel(random_stiefel<double>(n, p, rng));
  const auto pair_probs = std::vector<double>(3, 1.0 / 6.0);
  const auto col_probs = std::vector<double>(3, 1.0 / 6.0);
  auto rule = randomized_stiefel_rule(n, p, pair_probs, col_probs, rng());
  const auto est = estimate_randomized_constant(*rule, x, 20000, 5, rng());
  const double c2 = std::min(1.0 / 6.0, (1.0 / 6.0) / (n - p));
  const bool ok = est.c2_hat >= c2 - 3.0 * est.se;
  return {"stiefel-randomized-constant", ok, "C2_hat=" + fmt(est.c2_hat) + " theory=" + fmt(c2)};
}

CheckResult check_projection_norm() {
  const double slack = projection_norm_worst_slack(500, 5, 12, 99);
  return {"projection-norm", slack <= 1e-10, "worst slack = " + fmt(slack)};
}

CheckResult check_audit() {
  const auto inst = gen_instance(10, 11);
  Objective obj = linear_trace_objective(inst.d);
  const double lf = *obj.smoothness;
  const int n = 10, m = n * (n - 1) / 2;
  obj.block_constants.assign(m, lf);
  SolverConfig cfg;
  cfg.max_outer_iterations = 30;
  cfg.rule = givens_rule(GivensPartition::singleton(n));
  cfg.policy = StepsizePolicy::fixed_inverse_l();
  cfg.monitor_decrease = true;
  const auto res = tsd_run(obj, ManifoldPoint::orthogonal(Matrix::Identity(n, n)), cfg);
  const double beta = 0.9999;
  AuditConstants k{obj.block_constants, lf, std::sqrt(1.0 - beta * beta), gap_radius(beta)};
  const auto rep = decrease_audit(res.trace, k);
  return {"decrease-audit", rep.pass,
          std::to_string(rep.entries.size()) + " iterations audited" +
              (rep.failures.empty() ? "" : ", first failure: " + rep.failures.front())};
}

CheckResult check_rgrad(Rng& rng) {
  double worst = 0.0;
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 5;
    const Matrix d = gaussian_matrix<double>(n, n, rng);
    Objective obj;
    const bool stiefel = trial % 2 == 1;
    const int p = stiefel ? n - 1 : n;
    const Matrix dd = d.leftCols(p);
    obj.value = [dd](const ManifoldPoint& x) {
      const Matrix& y = x.is_orthogonal() ? x.orth() : x.frame();
      return (dd.array() * y.array()).sum() + 0.25 * (y.transpose() * y * dd.transpose() * y).trace();
    };
    obj.euclidean_gradient = [dd](const ManifoldPoint& x) {
      const Matrix& y = x.is_orthogonal() ? x.orth() : x.frame();
      // d/dY of Tr(Y^T Y D^T Y) / 4
      const Matrix g = dd + 0.25 * (y * (dd.transpose() * y + y.transpose() * dd) + dd * y.transpose() * y);
      return AmbientArray{g};
    };
    const ManifoldPoint x = stiefel ? ManifoldPoint::stiefel(random_stiefel<double>(n, p, rng))
                                    : ManifoldPoint::orthogonal(random_orthogonal<double>(n, rng));
    const Vector coords = gaussian_matrix<double>(tangent_dimension(x), 1, rng);
    const TangentVector v = from_coords(x, coords / coords.norm());
    const double fd = (obj.value(exp_map(x, h * v)) - obj.value(exp_map(x, -h * v))) / (2.0 * h);
    const double an = metric(x, rgrad(obj, x), v);
    worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
  }
  return {"rgrad-finite-difference", worst <= 1e-4, "max relative error = " + fmt(worst)};
}

}  // namespace

std::vector<CheckResult> run_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  out.push_back(check_givens_kernel(rng));
  out.push_back(check_transport(rng));
  out.push_back(check_counterexamples(rng));
  out.push_back(check_gap(rng));
  out.push_back(check_adversarial());
  out.push_back(check_linesearch(rng));
  out.push_back(check_stiefel_rule(rng));
  out.push_back(check_projection_norm());
  out.push_back(check_audit());
  out.push_back(check_rgrad(rng));
  return out;
}

}  // namespace tsd
