#include "tsd/solver.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tsd {

void StepsizePolicy::validate() const {
  if (kind != Kind::Backtracking) return;
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("backtracking: need 0 < c < 1");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("backtracking: need 0 < shrink < 1");
  if (!(eta0 > 0.0)) throw std::invalid_argument("backtracking: need eta0 > 0");
  if (max_halvings < 0) throw std::invalid_argument("backtracking: max_halvings must be >= 0");
}

void SolverConfig::validate() const {
  if (max_outer_iterations < 1) throw std::invalid_argument("solver: max_outer_iterations must be >= 1");
  if (!(gradient_tolerance > 0.0)) throw std::invalid_argument("solver: tolerance must be > 0");
  policy.validate();
}

namespace {

constexpr double kMonitorSlack = 1e-10;

void require_finite(double f, double gn) {
  if (!std::isfinite(f) || !std::isfinite(gn)) {
    throw NumericalFailure("solver: objective or gradient is not finite");
  }
}

double exp_flops(const ManifoldPoint& x) {
  if (x.is_euclidean()) return static_cast<double>(x.vec().size());
  if (x.is_orthogonal()) return 2.0 * std::pow(static_cast<double>(x.orth().rows()), 3);
  if (x.is_stiefel()) return 2.0 * std::pow(static_cast<double>(x.frame().rows()), 3);
  double s = 0.0;
  for (const auto& slot : x.slots()) s += exp_flops(slot);
  return s;
}

double block_lipschitz(const Objective& obj, int k, int m) {
  if (static_cast<int>(obj.block_constants.size()) == m) return obj.block_constants[k];
  if (obj.smoothness) return *obj.smoothness;
  return kNaN;
}

// Rotates columns (i, j) of y and g by the exact line-search angle; returns the angle.
double exact_pair_update(Matrix& y, Matrix& g, int i, int j) {
  const GivensLineSearch ls = givens_exact_linesearch(g, i, j);
  if (ls.eta == 0.0) return 0.0;
  apply_givens_right(y, i, j, ls.cos, ls.sin);
  apply_givens_right(g, i, j, ls.cos, ls.sin);
  return ls.eta;
}

double wrapped(double angle) {
  // Distance contribution of a rotation by `angle`: the shortest equivalent angle.
  const double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(std::abs(angle), two_pi);
  return std::min(a, two_pi - a);
}

void push_outer(IterationTrace& tr, const SolverConfig& cfg, int t, double f, double gn, long cycles,
                double flops) {
  if (cfg.record_trace || tr.outer.empty()) tr.outer.push_back({t, f, gn, cycles, flops});
  else tr.outer.back() = {t, f, gn, cycles, flops};
}

void check_monitor(const SolverConfig& cfg, const InnerRecord& r) {
  if (!cfg.monitor_decrease || std::isnan(r.residual)) return;
  if (cfg.policy.kind == StepsizePolicy::Kind::Backtracking) return;
  if (r.residual < -kMonitorSlack) {
    throw NumericalFailure("solver: block decrease bound violated at t=" + std::to_string(r.t) +
                           ", k=" + std::to_string(r.k) + " (residual " + std::to_string(r.residual) + ")");
  }
}

// Column-rotation path for Tr(D^T Y) on O(n) with a Givens partition. Keeps
// G = D^T Y current so every pair costs O(n).
SolverResult tsd_givens_fast(const Objective& obj, const ManifoldPoint& x0, const SolverConfig& cfg,
                             const GivensPartition& part) {
  const Matrix& d = *obj.linear_coefficient;
  Matrix y = x0.orth();
  const auto n = static_cast<int>(y.rows());
  if (d.rows() != n || d.cols() != n || part.n != n) throw DimensionMismatch("tsd: partition/D size differs from Y");
  const bool exact = cfg.policy.kind == StepsizePolicy::Kind::ExactGivens;
  const int m = part.block_count();
  Matrix g = d.transpose() * y;

  IterationTrace tr;
  tr.blocks_per_cycle = m;
  double f = g.trace();
  double gn = (0.5 * (g.transpose() - g)).norm();
  require_finite(f, gn);
  long cycles = 0;
  double flops = 0.0;
  push_outer(tr, cfg, 0, f, gn, 0, 0.0);

  std::vector<double> lk(m);
  for (int k = 0; k < m; ++k) {
    lk[k] = block_lipschitz(obj, k, m);
    if (!exact && !(lk[k] > 0.0)) throw std::invalid_argument("tsd: FixedInverseL needs positive L_k");
  }

  tr.status = "max-iterations";
  for (int t = 1; t <= cfg.max_outer_iterations; ++t) {
    if (gn <= cfg.gradient_tolerance) {
      tr.converged = true;
      tr.status = "converged";
      break;
    }
    for (int k = 0; k < m; ++k) {
      InnerRecord rec{t, k};
      rec.f_before = f;
      double sq = 0.0, len2 = 0.0;
      for (const auto& [i, j] : part.blocks[k]) {
        const double a = 0.5 * (g(j, i) - g(i, j));
        sq += 2.0 * a * a;
        const double old_diag = g(i, i) + g(j, j);
        double theta;
        if (exact) {
          theta = -exact_pair_update(y, g, i, j);
        } else {
          theta = -a / lk[k];
          if (theta != 0.0) {
            apply_givens_right(y, i, j, std::cos(theta), std::sin(theta));
            apply_givens_right(g, i, j, std::cos(theta), std::sin(theta));
          }
        }
        f += (g(i, i) + g(j, j)) - old_diag;
        len2 += 2.0 * wrapped(theta) * wrapped(theta);
        flops += 4.0 * n;
      }
      ++tr.inner_steps;
      if (cfg.monitor_decrease) {
        rec.f_after = f;
        rec.block_grad_norm = std::sqrt(sq);
        rec.step = exact ? kNaN : 1.0 / lk[k];
        rec.lipschitz = lk[k];
        rec.step_length = std::sqrt(len2);
        if (!std::isnan(lk[k])) rec.residual = rec.f_before - rec.f_after - sq / (2.0 * lk[k]);
        check_monitor(cfg, rec);
        tr.inner.push_back(rec);
      }
    }
    if (orthonormality_residual(y) > cfg.renormalize_threshold) {
      y = polar_orthonormalize(y);
      g = d.transpose() * y;
    }
    f = g.trace();
    gn = (0.5 * (g.transpose() - g)).norm();
    require_finite(f, gn);
    ++cycles;
    push_outer(tr, cfg, t, f, gn, cycles, flops);
  }
  if (!tr.converged && gn <= cfg.gradient_tolerance) {
    tr.converged = true;
    tr.status = "converged";
  }
  return {ManifoldPoint{OrthogonalPoint{std::move(y)}}, std::move(tr)};
}

ManifoldPoint exact_givens_step(const Objective& obj, const ManifoldPoint& y, const SubspaceProjection& p,
                                double& len, double& flops) {
  if (!y.is_orthogonal() || !obj.linear_coefficient || p.descriptor().pairs.empty()) {
    throw std::invalid_argument("tsd: ExactGivens needs Tr(D^T Y) on O(n) and a Givens projection");
  }
  Matrix yy = y.orth();
  Matrix g = obj.linear_coefficient->transpose() * yy;
  GivensCoefficients<double> check;
  for (const auto& [i, j] : p.descriptor().pairs) check.pairs.push_back({i, j, 0.0});
  check_disjoint(check, yy.rows());
  double len2 = 0.0;
  for (const auto& [i, j] : p.descriptor().pairs) {
    const double w = wrapped(exact_pair_update(yy, g, i, j));
    len2 += 2.0 * w * w;
    flops += 4.0 * static_cast<double>(yy.rows());
  }
  len = std::sqrt(len2);
  return ManifoldPoint{OrthogonalPoint{std::move(yy)}};
}

}  // namespace

ManifoldPoint step_fixed(const Objective& obj, const ManifoldPoint& y, const SubspaceProjection& p,
                         double lipschitz) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("step_fixed: L_k must be positive");
  const TangentVector pg = p(rgrad(obj, y));
  return exp_map(y, (-1.0 / lipschitz) * pg);
}

StepResult step_backtracking(const Objective& obj, const ManifoldPoint& y, const SubspaceProjection& p,
                             const StepsizePolicy& policy) {
  policy.validate();
  const double f0 = obj.value(y);
  const TangentVector pg = p(rgrad(obj, y));
  const double sq = metric(y, pg, pg);
  if (sq == 0.0) return {y, 0.0, 0, f0};
  double eta = policy.eta0;
  for (int j = 0; j <= policy.max_halvings; ++j) {
    ManifoldPoint cand = exp_map(y, (-eta) * pg);
    const double fc = obj.value(cand);
    // Strict decrease too: once eta * sq drops below an ulp of f0 the Armijo
    // bound rounds to f0 and would accept a step that changed nothing.
    if (fc < f0 && fc <= f0 - policy.c * eta * sq) return {std::move(cand), eta, j + 1, fc};
    eta *= policy.shrink;
  }
  throw NumericalFailure("step_backtracking: no acceptable step after " +
                         std::to_string(policy.max_halvings) + " shrinks; gradient may be inconsistent");
}

GivensLineSearch givens_exact_linesearch(const Matrix& g, int i, int j) {
  if (g.rows() != g.cols()) throw DimensionMismatch("givens_exact_linesearch: G must be square");
  if (i < 0 || i >= j || j >= g.rows()) throw std::invalid_argument("givens_exact_linesearch: need 0 <= i < j < n");
  // Along Y expm(theta H_ij): Tr(G R) = rest + alpha cos(theta) + beta sin(theta).
  const double alpha = g(i, i) + g(j, j);
  const double beta = g(j, i) - g(i, j);
  const double rest = g.trace() - alpha;
  const double rho = std::hypot(alpha, beta);
  GivensLineSearch out;
  if (rho == 0.0) {
    out.value = rest;
    return out;
  }
  out.cos = -alpha / rho;
  out.sin = -beta / rho;
  out.value = rest - rho;
  const double theta = std::atan2(out.sin, out.cos);
  double eta = -theta;
  if (eta < 0.0) eta += 2.0 * std::numbers::pi;
  if (eta >= 2.0 * std::numbers::pi || eta == 0.0) eta = 0.0;
  out.eta = eta;
  if (eta == 0.0) {
    out.cos = 1.0;
    out.sin = 0.0;
  }
  return out;
}

SolverResult tsd_run(const Objective& obj, const ManifoldPoint& x0, const SolverConfig& cfg) {
  cfg.validate();
  if (!cfg.rule) throw std::invalid_argument("tsd: no selection rule configured");
  SelectionRule& rule = *cfg.rule;
  const bool randomized = rule.kind() == RuleKind::Randomized;

  const auto* givens = dynamic_cast<const GivensRule*>(cfg.rule.get());
  if (givens && x0.is_orthogonal() && obj.linear_coefficient &&
      cfg.policy.kind != StepsizePolicy::Kind::Backtracking && givens->partition().blocks_index_disjoint()) {
    return tsd_givens_fast(obj, x0, cfg, givens->partition());
  }

  const int m = randomized ? 1 : rule.block_count();
  IterationTrace tr;
  tr.rule_kind = rule.kind();
  tr.blocks_per_cycle = m;

  ManifoldPoint x = x0;
  double f = obj.value(x);
  TangentVector g = rgrad(obj, x);
  double gn = norm(x, g);
  require_finite(f, gn);
  long cycles = 0;
  double flops = 0.0;
  push_outer(tr, cfg, 0, f, gn, 0, 0.0);

  tr.status = "max-iterations";
  for (int t = 1; t <= cfg.max_outer_iterations; ++t) {
    if (gn <= cfg.gradient_tolerance) {
      tr.converged = true;
      tr.status = "converged";
      break;
    }
    const ManifoldPoint y0 = x;
    ManifoldPoint y = x;
    double fy = f;
    TangentVector gy = g;
    bool stalled = false;
    for (int k = 0; k < m; ++k) {
      if (k > 0) gy = rgrad(obj, y);
      const SubspaceProjection p = rule.select({y0, y, k, t});
      const TangentVector pg = p(gy);
      const double pn = norm(y, pg);
      const double lk = randomized ? (obj.smoothness ? *obj.smoothness : kNaN)
                                   : block_lipschitz(obj, k, rule.block_count());
      InnerRecord rec{t, k};
      rec.f_before = fy;
      rec.block_grad_norm = pn;
      rec.lipschitz = lk;
      if (pn > 0.0) {
        switch (cfg.policy.kind) {
          case StepsizePolicy::Kind::FixedInverseL: {
            if (!(lk > 0.0)) throw std::invalid_argument("tsd: FixedInverseL needs positive L_k");
            rec.step = 1.0 / lk;
            y = exp_map(y, (-rec.step) * pg);
            rec.step_length = rec.step * pn;
            flops += exp_flops(y);
            break;
          }
          case StepsizePolicy::Kind::Backtracking: {
            try {
              StepResult s = step_backtracking(obj, y, p, cfg.policy);
              y = std::move(s.point);
              rec.step = s.eta;
              rec.step_length = s.eta * pn;
              flops += s.trials * exp_flops(y);
            } catch (const NumericalFailure&) {
              stalled = true;
            }
            break;
          }
          case StepsizePolicy::Kind::ExactGivens: {
            rec.step = kNaN;
            y = exact_givens_step(obj, y, p, rec.step_length, flops);
            break;
          }
        }
        if (stalled) break;
        y = renormalize(y, cfg.renormalize_threshold);
        fy = obj.value(y);
      }
      rec.f_after = fy;
      if (!std::isnan(lk)) rec.residual = rec.f_before - rec.f_after - pn * pn / (2.0 * lk);
      ++tr.inner_steps;
      if (cfg.monitor_decrease) {
        check_monitor(cfg, rec);
        tr.inner.push_back(rec);
      }
    }
    x = y;
    f = fy;
    g = rgrad(obj, x);
    gn = norm(x, g);
    require_finite(f, gn);
    ++cycles;
    push_outer(tr, cfg, t, f, gn, cycles, flops);
    if (stalled) {
      tr.status = "line-search-stalled";
      break;
    }
  }
  if (!tr.converged && gn <= cfg.gradient_tolerance) {
    tr.converged = true;
    tr.status = "converged";
  }
  return {std::move(x), std::move(tr)};
}

SolverResult rgd_run(const Objective& obj, const ManifoldPoint& x0, const SolverConfig& cfg) {
  cfg.validate();
  const bool fixed = cfg.policy.kind == StepsizePolicy::Kind::FixedInverseL;
  if (!fixed && cfg.policy.kind != StepsizePolicy::Kind::Backtracking) {
    throw std::invalid_argument("rgd: policy must be Backtracking or FixedInverseL");
  }
  IterationTrace tr;
  ManifoldPoint x = x0;
  double f = obj.value(x);
  TangentVector g = rgrad(obj, x);
  double gn = norm(x, g);
  require_finite(f, gn);
  long cycles = 0;
  double flops = 0.0;
  push_outer(tr, cfg, 0, f, gn, 0, 0.0);

  tr.status = "max-iterations";
  for (int t = 1; t <= cfg.max_outer_iterations; ++t) {
    if (gn <= cfg.gradient_tolerance) {
      tr.converged = true;
      tr.status = "converged";
      break;
    }
    InnerRecord rec{t, 0};
    rec.f_before = f;
    rec.block_grad_norm = gn;
    rec.lipschitz = obj.smoothness ? *obj.smoothness : kNaN;
    if (fixed) {
      if (!(rec.lipschitz > 0.0)) throw std::invalid_argument("rgd: FixedInverseL needs L_f");
      rec.step = 1.0 / rec.lipschitz;
      x = exp_map(x, (-rec.step) * g);
      flops += exp_flops(x);
    } else {
      try {
        StepResult s = step_backtracking(obj, x, identity_projection(x), cfg.policy);
        x = std::move(s.point);
        rec.step = s.eta;
        flops += s.trials * exp_flops(x);
      } catch (const NumericalFailure&) {
        tr.status = "line-search-stalled";
        break;
      }
    }
    rec.step_length = rec.step * gn;
    x = renormalize(x, cfg.renormalize_threshold);
    f = obj.value(x);
    rec.f_after = f;
    if (!std::isnan(rec.lipschitz)) rec.residual = rec.f_before - f - gn * gn / (2.0 * rec.lipschitz);
    ++tr.inner_steps;
    if (cfg.monitor_decrease) tr.inner.push_back(rec);
    g = rgrad(obj, x);
    gn = norm(x, g);
    require_finite(f, gn);
    ++cycles;
    push_outer(tr, cfg, t, f, gn, cycles, flops);
  }
  if (!tr.converged && gn <= cfg.gradient_tolerance) {
    tr.converged = true;
    tr.status = "converged";
  }
  return {std::move(x), std::move(tr)};
}

}  // namespace tsd
