// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tsd/procrustes.hpp"
#include "tsd/solver.hpp"
#include "tsd/verify.hpp"

using namespace tsd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

Outcome counterexamples() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0, worst_growth = kInfinity;
  for (int n : {3, 5, 10}) {
    const Vector x0 = gaussian_matrix<double>(n, 1, rng);
    for (const auto& res : {counterexample_randomized(x0, 40, 102 + n), counterexample_deterministic(x0, 40)}) {
      for (int t = 0; t <= 40; ++t) worst = std::max(worst, std::abs(res.f[t] - res.epsilon * (1 + std::ldexp(1.0, -t))));
      worst_growth = std::min(worst_growth, res.report[39].ratio / res.report[4].ratio);
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && worst_growth >= 10.0 && secs < 1.0,
          fmt("max |f - eps(1+2^-t)| = %.2e, min ratio(40)/ratio(5) = %.3g, %.3f s", worst, worst_growth, secs)};
}

Outcome givens_kernel() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(201);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + trial % 19;
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    const int npairs = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n / 2));
    GivensCoefficients<double> g;
    Matrix c = Matrix::Zero(n, n);
    std::normal_distribution<double> angle(0.0, 1.5);
    for (int q = 0; q < npairs; ++q) {
      const int i = std::min(perm[2 * q], perm[2 * q + 1]);
      const int j = std::max(perm[2 * q], perm[2 * q + 1]);
      const double a = angle(rng);
      g.pairs.push_back({i, j, a});
      c += a * oracle::h(n, i, j);
    }
    worst = std::max(worst, (expm_givens(g, n) - oracle::taylor_expm(c)).norm());
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 5.0, fmt("max Frobenius error %.2e over 1000 inputs, %.2f s", worst, secs)};
}

Outcome transport_isometry_check() {
  Rng rng(301);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + trial % 19;
    const auto x = ManifoldPoint::orthogonal(random_orthogonal<double>(n, rng));
    const auto dir = TangentVector::orthogonal(random_skew<double>(n, rng));
    const auto u = TangentVector::orthogonal(random_skew<double>(n, rng));
    const auto v = TangentVector::orthogonal(random_skew<double>(n, rng));
    const auto y = exp_map(x, dir);
    worst = std::max(worst, std::abs(metric(y, transport(x, dir, u), transport(x, dir, v)) - metric(x, u, v)));
  }
  return {worst <= 1e-10, fmt("max |<Gu,Gv> - <u,v>| = %.2e over 1000 triples", worst)};
}

Outcome gap_bound() {
  Rng rng(401);
  std::string detail;
  bool ok = true;
  for (double beta : {0.5, 0.9, 0.99}) {
    const double radius = gap_radius(beta);
    double lib_min = kInfinity, oracle_min = kInfinity;
    int used = 0;
    while (used < 1000) {
      const int n = 3 + used % 6;
      const auto part = GivensPartition::singleton(n);
      std::vector<Skew> cs;
      for (int k = 0; k < part.block_count(); ++k) {
        const Skew c = random_skew<double>(n, rng);
        const double r = radius * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        cs.push_back((r / c.norm()) * c);
      }
      const auto rep = check_gap_orthogonal(part, cs, beta);
      lib_min = std::min(lib_min, rep.minimum);
      for (int k = 0; k < part.block_count(); ++k) {
        const auto [i, j] = part.blocks[k].front();
        const Matrix a = oracle::h(n, i, j) / std::numbers::sqrt2;
        const Matrix e = oracle::taylor_expm(0.5 * cs[k].matrix());
        oracle_min = std::min(oracle_min, (a.transpose() * e.transpose() * a * e).trace());
      }
      used += part.block_count();
    }
    ok = ok && lib_min >= beta - 1e-10 && oracle_min >= beta - 1e-10 && std::abs(lib_min - oracle_min) <= 1e-12;
    detail += fmt("beta=%.2f min=%.4f; ", beta, oracle_min);
  }
  return {ok, detail + "1000 displacements per beta"};
}

Outcome adversarial() {
  double worst_identity = 0.0, worst_sigma = 0.0;
  for (int n : {4, 6, 10}) {
    const Skew c = adversarial_displacement(n, {0, 1}, {2, 3});
    const Matrix e = oracle::taylor_expm(0.5 * c.matrix());
    worst_identity = std::max(worst_identity, (e.transpose() * oracle::h(n, 2, 3) * e - oracle::h(n, 0, 1)).norm());
    const auto pairs = lexicographic_pairs(n);
    std::vector<Skew> cs(pairs.size(), Skew::zero(n));
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (pairs[k] == IndexPair{2, 3}) cs[k] = c;
    const auto y0 = ManifoldPoint::orthogonal(random_orthogonal<double>(n, std::uint64_t(500 + n)));
    worst_sigma = std::max(worst_sigma, stacked_sigma_min(pulled_back_singletons(y0, cs)));
  }
  return {worst_identity <= 1e-12 && worst_sigma < 1e-10,
          fmt("conjugation error %.2e, max sigma_min %.2e", worst_identity, worst_sigma)};
}

Outcome stiefel_rule() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 8, p = 3;
  Rng rng(601);
  const Matrix u = random_stiefel<double>(n, p, rng);
  const auto x = ManifoldPoint::stiefel(u);
  const auto probs = uniform_probabilities(6);
  auto rule = randomized_stiefel_rule(n, p, {probs.begin(), probs.begin() + 3}, {probs.begin() + 3, probs.end()}, 602);
  const auto est = estimate_randomized_constant(*rule, x, 100000, 20, 603);
  int matched = 0;
  double worst_z = 0.0;
  for (std::size_t q = 0; q < est.probes.size(); ++q) {
    const Matrix& w = est.probes[q].ambient();
    const Matrix a = u.transpose() * w;
    const Matrix b = w - u * a;
    double want = 0.0;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) want += probs[0] * a(i, j) * a(i, j);
    for (int l = 0; l < p; ++l) want += probs[3] * b.col(l).squaredNorm() / (n - p);
    const double z = std::abs(est.means[q] - want) / est.ses[q];
    worst_z = std::max(worst_z, z);
    if (z <= 3.0) ++matched;
  }
  const double c2_theory = std::min(probs[0], probs[3] / (n - p));
  const double secs = seconds_since(t0);
  const bool ok = matched == static_cast<int>(est.probes.size()) && est.c2_hat >= c2_theory - 3 * est.se && secs < 30.0;
  return {ok, fmt("%.0f/20 probes within 3 SE (worst %.2f SE), C2_hat=%.4f vs theory %.4f", matched, worst_z,
                  est.c2_hat, c2_theory) +
                  fmt(", %.1f s", secs)};
}

Outcome line_search() {
  Rng rng(701);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 9;
    const Matrix g = gaussian_matrix<double>(n, n, rng);
    const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
    const int j = i + 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1 - i));
    worst = std::max(worst, std::abs(givens_exact_linesearch(g, i, j).value - oracle::grid_min_trace(g, i, j, 100000)));
  }
  return {worst <= 1e-6, fmt("max |formula - grid| = %.2e over 100 inputs", worst)};
}

Outcome bcd_recovery() {
  Rng rng(801);
  const std::vector<int> sizes{5, 5, 5, 5};
  const Matrix m = gaussian_matrix<double>(20, 20, rng);
  const Matrix q = m.transpose() * m / 20.0 + 0.1 * Matrix::Identity(20, 20);
  const Vector b = gaussian_matrix<double>(20, 1, rng);
  const Vector x0 = gaussian_matrix<double>(20, 1, rng);
  std::vector<double> lip;
  for (int k = 0; k < 4; ++k) lip.push_back(oracle::block_max_eig(q.block(5 * k, 5 * k, 5, 5)));

  auto flat = [](const ManifoldPoint& x) {
    Vector v(20);
    for (int k = 0; k < 4; ++k) v.segment(5 * k, 5) = x.slots()[k].vec();
    return v;
  };
  Objective obj;
  obj.value = [q, b, flat](const ManifoldPoint& x) {
    const Vector v = flat(x);
    return 0.5 * v.dot(q * v) - b.dot(v);
  };
  obj.euclidean_gradient = [q, b, flat](const ManifoldPoint& x) {
    const Vector g = q * flat(x) - b;
    std::vector<AmbientArray> parts;
    for (int k = 0; k < 4; ++k) parts.push_back(AmbientArray{Vector(g.segment(5 * k, 5))});
    return AmbientArray{parts};
  };
  obj.block_constants = lip;
  std::vector<ManifoldPoint> slots;
  for (int k = 0; k < 4; ++k) slots.push_back(ManifoldPoint::euclidean(x0.segment(5 * k, 5)));
  const auto start = ManifoldPoint::product(slots);

  const auto want = oracle::cyclic_bcd(q, b, x0, sizes, lip, 100);
  double worst = 0.0;
  SolverConfig cfg;
  cfg.rule = product_rule(4);
  cfg.policy = StepsizePolicy::fixed_inverse_l();
  cfg.gradient_tolerance = 1e-300;
  for (int t = 1; t <= 100; ++t) {
    cfg.max_outer_iterations = t;
    worst = std::max(worst, (flat(tsd_run(obj, start, cfg).x) - want[t]).norm());
  }
  return {worst <= 1e-14, fmt("max iterate difference %.2e over 100 outer iterations", worst)};
}

Outcome decrease_audit_check() {
  const auto inst = gen_instance(20, instance_seed(7, 20, 1));
  const auto obj = linear_trace_objective(inst.d);
  const auto x0 = ManifoldPoint::orthogonal(Matrix::Identity(20, 20));
  SolverConfig cfg;
  cfg.rule = givens_rule(GivensPartition::singleton(20));
  cfg.policy = StepsizePolicy::fixed_inverse_l();
  cfg.monitor_decrease = true;
  cfg.max_outer_iterations = 100;
  const auto tsd = tsd_run(obj, x0, cfg);
  AuditConstants c;
  c.smoothness = *obj.smoothness;
  const auto rep = decrease_audit(tsd.trace, c);
  double worst_inner = kInfinity;
  for (const auto& r : tsd.trace.inner) worst_inner = std::min(worst_inner, r.residual);

  SolverConfig gd;
  gd.policy = StepsizePolicy::backtracking();
  gd.max_outer_iterations = 300;
  const auto rgd = rgd_run(obj, x0, gd);
  int increases = 0;
  for (std::size_t t = 1; t < rgd.trace.outer.size(); ++t)
    if (!(rgd.trace.outer[t].f < rgd.trace.outer[t - 1].f)) ++increases;
  const bool ok = rep.pass && worst_inner >= -1e-9 && increases == 0 && rgd.trace.outer.size() > 1;
  return {ok, fmt("%.0f TSD inner steps, min block residual %.2e; %.0f RGD steps, %.0f non-decreasing",
                  static_cast<double>(tsd.trace.inner.size()), worst_inner,
                  static_cast<double>(rgd.trace.outer.size() - 1), increases)};
}

Outcome sparse_update() {
  // Column touch check on one exact Givens step.
  class OnePair : public SelectionRule {
   public:
    SubspaceProjection select(const SelectionContext& ctx) override { return givens_projection(ctx.y_prev, {{3, 11}}); }
    int block_count() const override { return 1; }
    RuleKind kind() const override { return RuleKind::Deterministic; }
  };
  const auto inst = gen_instance(20, 1001);
  const Matrix y0 = random_orthogonal<double>(20, std::uint64_t{1002});
  SolverConfig one;
  one.rule = std::make_shared<OnePair>();
  one.policy = StepsizePolicy::exact_givens();
  one.max_outer_iterations = 1;
  one.gradient_tolerance = 1e-300;
  const Matrix y1 = tsd_run(linear_trace_objective(inst.d), ManifoldPoint::orthogonal(y0), one).x.orth();
  int changed = 0;
  bool others_identical = true;
  for (int c = 0; c < 20; ++c) {
    const bool same = (y1.col(c).array() == y0.col(c).array()).all();
    if (!same) ++changed;
    if (c != 3 && c != 11 && !same) others_identical = false;
  }

  std::vector<double> per_unit;
  for (int n : {20, 40, 80}) {
    const auto pi = gen_instance(n, 1003);
    SolverConfig cfg;
    cfg.rule = givens_rule(GivensPartition::singleton(n));
    cfg.policy = StepsizePolicy::exact_givens();
    cfg.max_outer_iterations = 1;
    cfg.gradient_tolerance = 1e-300;
    const auto res = tsd_run(linear_trace_objective(pi.d), ManifoldPoint::orthogonal(Matrix::Identity(n, n)), cfg);
    per_unit.push_back(res.trace.outer.back().flops / (n * n * (n - 1) / 2.0));
  }
  const double spread = *std::max_element(per_unit.begin(), per_unit.end()) /
                        *std::min_element(per_unit.begin(), per_unit.end());
  return {changed == 2 && others_identical && spread <= 2.0,
          fmt("%.0f columns changed, flops per n*n(n-1)/2: %.2f %.2f %.2f", changed, per_unit[0], per_unit[1],
              per_unit[2])};
}

Outcome gap_closed_comparison() {
  const auto t0 = std::chrono::steady_clock::now();
  BenchConfig cfg;
  std::vector<double> tsd10, gd10;
  int faster = 0;
  for (int i = 1; i <= 10; ++i) {
    const auto run = run_instance(50, i, cfg);
    tsd10.push_back(gap_at_percent(run, true, 10.0));
    gd10.push_back(gap_at_percent(run, false, 10.0));
    long ct = cycles_to_gap(run.tsd_f, run.f_best, 99.0);
    long cg = cycles_to_gap(run.gd_f, run.f_best, 99.0);
    if (ct >= 0 && (cg < 0 || ct <= cg)) ++faster;
  }
  const double secs = seconds_since(t0);
  const double mt = median(tsd10), mg = median(gd10);
  return {mt >= mg && faster >= 8 && secs < 300.0,
          fmt("median gap at 10%% cycles: TSD %.2f vs GD %.2f; TSD first to 99%% on %.0f/10; %.0f s", mt, mg, faster,
              secs)};
}

Outcome convergence() {
  const auto inst = gen_instance(20, instance_seed(7, 20, 1), 0.0);
  const auto obj = linear_trace_objective(inst.d);
  SolverConfig cfg;
  cfg.rule = givens_rule(GivensPartition::singleton(20));
  cfg.policy = StepsizePolicy::exact_givens();
  cfg.max_outer_iterations = 500;
  cfg.gradient_tolerance = 1e-12;
  const auto res = tsd_run(obj, ManifoldPoint::orthogonal(Matrix::Identity(20, 20)), cfg);
  // The start has det +1 and rotations never leave that component.
  const auto opt = procrustes_optimum_in_component(inst.d, 1);
  const double rel = (res.trace.outer.back().f - opt.value) / std::abs(opt.value);
  const double global = procrustes_optimum(inst.d).value;
  return {rel <= 1e-6, fmt("relative gap %.2e after %.0f cycles (component optimum %.6f, global %.6f)", rel,
                           static_cast<double>(res.trace.outer.size() - 1), opt.value, global)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "tsd_acceptance_determinism";
  fs::remove_all(root);
  BenchConfig cfg;
  cfg.sizes = {12};
  cfg.instances = 3;
  cfg.max_cycles = 200;
  std::vector<std::string> outs;
  for (const char* leaf : {"a", "b"}) {
    cfg.out_dir = (root / leaf).string();
    run_benchmark(cfg);
    outs.push_back(slurp(fs::path(cfg.out_dir) / "procrustes_n12.csv") +
                   slurp(fs::path(cfg.out_dir) / "procrustes_n12_records.csv"));
  }
  bool ok = outs[0] == outs[1] && !outs[0].empty();
  std::string detail = fmt("library reruns identical: %.0f (%.0f bytes)", ok, static_cast<double>(outs[0].size()));
#ifdef TSD_BENCH_PATH
  std::vector<std::string> cli;
  for (const char* leaf : {"cli_a", "cli_b"}) {
    const std::string cmd = std::string("\"") + TSD_BENCH_PATH + "\" bench --n 12 --instances 3 --seeds 7 --max-cycles 200 --out \"" +
                            (root / leaf).string() + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) ok = false;
    cli.push_back(slurp(root / leaf / "procrustes_n12.csv"));
  }
  const bool cli_ok = cli[0] == cli[1] && !cli[0].empty();
  ok = ok && cli_ok;
  detail += fmt("; CLI reruns identical: %.0f", cli_ok);
#endif
  fs::remove_all(root);
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"counterexample fidelity", counterexamples},
      {"givens kernel", givens_kernel},
      {"transport isometry", transport_isometry_check},
      {"gap bound", gap_bound},
      {"adversarial construction", adversarial},
      {"stiefel randomized rule", stiefel_rule},
      {"exact line search", line_search},
      {"bcd recovery", bcd_recovery},
      {"sufficient decrease audit", decrease_audit_check},
      {"sparse update", sparse_update},
      {"gap-closed comparison n=50", gap_closed_comparison},
      {"convergence to optimum", convergence},
      {"bench determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
