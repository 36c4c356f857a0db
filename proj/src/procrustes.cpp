#include "tsd/procrustes.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "tsd/selection.hpp"
#include "tsd/solver.hpp"

namespace tsd {

ProcrustesInstance gen_instance(int n, std::uint64_t seed, double noise_stddev) {
  if (n < 2) throw std::invalid_argument("gen_instance: need n >= 2");
  Rng rng(seed);
  ProcrustesInstance inst;
  inst.n = n;
  inst.seed = seed;
  inst.a = gaussian_matrix<double>(n, n, rng, 2.0);
  inst.x_true = random_orthogonal<double>(n, rng);
  inst.b = inst.a * inst.x_true;
  const Matrix noise = gaussian_matrix<double>(n, n, rng);
  if (noise_stddev != 0.0) inst.b += noise_stddev * noise;
  inst.d = -inst.a.transpose() * inst.b;
  return inst;
}

ProcrustesOptimum procrustes_optimum(const Matrix& d) {
  Eigen::JacobiSVD<Matrix> svd(d, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix y = -svd.matrixU() * svd.matrixV().transpose();
  return {y, -svd.singularValues().sum()};
}

ProcrustesOptimum procrustes_optimum_in_component(const Matrix& d, int det_sign) {
  if (det_sign != 1 && det_sign != -1) throw std::invalid_argument("procrustes: det_sign must be +1 or -1");
  Eigen::JacobiSVD<Matrix> svd(d, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  const Vector& s = svd.singularValues();
  const double det = (-u * v.transpose()).determinant();
  double value = -s.sum();
  if ((det > 0) != (det_sign > 0)) {
    // Give up the smallest singular value to land in the other component.
    u.col(u.cols() - 1) *= -1.0;
    value += 2.0 * s(s.size() - 1);
  }
  return {-u * v.transpose(), value};
}

std::uint64_t instance_seed(std::uint64_t base, int n, int index) {
  return base * 1000003ULL + static_cast<std::uint64_t>(n) * 1009ULL + static_cast<std::uint64_t>(index);
}

double gap_closed(double f0, double f, double f_best) {
  const double span = f0 - f_best;
  if (!(span > 0.0)) return 100.0;
  return std::clamp(100.0 * (f0 - f) / span, 0.0, 100.0);
}

long cycles_to_gap(const std::vector<double>& f, double f_best, double level) {
  for (std::size_t c = 0; c < f.size(); ++c) {
    if (gap_closed(f.front(), f[c], f_best) >= level) return static_cast<long>(c);
  }
  return -1;
}

namespace {

std::vector<double> per_cycle_objective(const IterationTrace& tr, long stride) {
  std::vector<double> out;
  for (std::size_t i = 0; i < tr.outer.size(); ++i) {
    if (static_cast<long>(i) % stride == 0) out.push_back(tr.outer[i].f);
  }
  if ((tr.outer.size() - 1) % stride != 0) out.push_back(tr.outer.back().f);
  return out;
}

std::vector<double> per_cycle_flops(const IterationTrace& tr, long stride) {
  std::vector<double> out;
  for (std::size_t i = 0; i < tr.outer.size(); ++i) {
    if (static_cast<long>(i) % stride == 0) out.push_back(tr.outer[i].flops);
  }
  if ((tr.outer.size() - 1) % stride != 0) out.push_back(tr.outer.back().flops);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

InstanceRun run_instance(int n, int index, const BenchConfig& cfg) {
  InstanceRun run;
  run.n = n;
  run.index = index;
  run.seed = instance_seed(cfg.seed, n, index);
  const ProcrustesInstance inst = gen_instance(n, run.seed);
  const Objective obj = linear_trace_objective(inst.d);
  const ManifoldPoint x0 = ManifoldPoint::orthogonal(Matrix::Identity(n, n));

  SolverConfig tsd_cfg;
  tsd_cfg.gradient_tolerance = cfg.tol;
  tsd_cfg.policy = StepsizePolicy::exact_givens();
  long stride = 1;
  if (cfg.rule == "givens") {
    tsd_cfg.rule = givens_rule(cfg.partition == "matching" ? GivensPartition::matching(n)
                                                           : GivensPartition::singleton(n));
    tsd_cfg.max_outer_iterations = cfg.max_cycles;
  } else if (cfg.rule == "random-onb") {
    // One cycle is as many random pair steps as a full sweep has pairs.
    stride = static_cast<long>(n) * (n - 1) / 2;
    tsd_cfg.rule = randomized_orthogonal_rule(n, uniform_probabilities(static_cast<int>(stride)), run.seed);
    tsd_cfg.max_outer_iterations = static_cast<int>(cfg.max_cycles * stride);
  } else {
    throw std::invalid_argument("benchmark: rule must be givens or random-onb on O(n)");
  }

  auto start = std::chrono::steady_clock::now();
  const SolverResult tsd = tsd_run(obj, x0, tsd_cfg);
  run.wall_tsd = seconds_since(start);
  run.tsd_f = per_cycle_objective(tsd.trace, stride);
  run.tsd_flops = per_cycle_flops(tsd.trace, stride);
  run.tsd_status = tsd.trace.status;

  SolverConfig gd_cfg;
  gd_cfg.gradient_tolerance = cfg.tol;
  gd_cfg.max_outer_iterations = cfg.max_cycles;
  gd_cfg.policy = StepsizePolicy::backtracking();
  start = std::chrono::steady_clock::now();
  const SolverResult gd = rgd_run(obj, x0, gd_cfg);
  run.wall_gd = seconds_since(start);
  run.gd_f = per_cycle_objective(gd.trace, 1);
  run.gd_flops = per_cycle_flops(gd.trace, 1);
  run.gd_status = gd.trace.status;

  run.f_best = std::min(*std::min_element(run.tsd_f.begin(), run.tsd_f.end()),
                        *std::min_element(run.gd_f.begin(), run.gd_f.end()));
  return run;
}

namespace {

long total_cycles(const InstanceRun& run) {
  return static_cast<long>(std::max(run.tsd_f.size(), run.gd_f.size())) - 1;
}

double value_at_cycle(const std::vector<double>& f, long c) {
  return f[static_cast<std::size_t>(std::min<long>(c, static_cast<long>(f.size()) - 1))];
}

}  // namespace

double gap_at_percent(const InstanceRun& run, bool tsd, double percent) {
  const long total = total_cycles(run);
  const long c = std::lround(std::floor(percent / 100.0 * static_cast<double>(total) + 1e-9));
  const auto& f = tsd ? run.tsd_f : run.gd_f;
  return gap_closed(f.front(), value_at_cycle(f, c), run.f_best);
}

GapTable gap_table(const std::vector<InstanceRun>& runs, int checkpoints) {
  GapTable table;
  if (runs.empty()) return table;
  long total = 0;
  for (const auto& r : runs) total = std::max(total, total_cycles(r));
  if (total < 1) total = 1;
  // Log-spaced percent checkpoints from 0.1% to 100%, snapped to whole cycles.
  std::set<long> cycles;
  const int count = std::max(checkpoints, 2);
  for (int q = 0; q < count; ++q) {
    const double pct = std::pow(10.0, -1.0 + 3.0 * q / (count - 1));
    const long c = std::lround(pct / 100.0 * static_cast<double>(total));
    if (c >= 1) cycles.insert(std::min(c, total));
  }
  for (long c : cycles) {
    table.cycle.push_back(c);
    table.percent.push_back(100.0 * static_cast<double>(c) / static_cast<double>(total));
  }
  for (const auto& r : runs) {
    std::vector<double> tsd, gd;
    for (long c : table.cycle) {
      tsd.push_back(gap_closed(r.tsd_f.front(), value_at_cycle(r.tsd_f, c), r.f_best));
      gd.push_back(gap_closed(r.gd_f.front(), value_at_cycle(r.gd_f, c), r.f_best));
    }
    table.columns.push_back(std::move(tsd));
    table.columns.push_back(std::move(gd));
  }
  return table;
}

namespace {

std::string num(double v, const char* format = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

void write_gap_csv(std::ostream& os, const GapTable& table) {
  os << "percent";
  for (std::size_t i = 0; i < table.columns.size() / 2; ++i) os << ",TSDcycle" << i + 1 << ",GDcycle" << i + 1;
  os << '\n';
  for (std::size_t row = 0; row < table.percent.size(); ++row) {
    os << num(table.percent[row], "%.6f");
    for (const auto& col : table.columns) os << ',' << num(col[row], "%.8f");
    os << '\n';
  }
}

void write_records_csv(std::ostream& os, const std::vector<InstanceRun>& runs) {
  os << "algorithm,instance,n,cycle,percent_cycles,gap_closed,objective,flops\n";
  for (const auto& r : runs) {
    const double total = static_cast<double>(std::max<long>(1, total_cycles(r)));
    for (int pass = 0; pass < 2; ++pass) {
      const bool tsd = pass == 0;
      const auto& f = tsd ? r.tsd_f : r.gd_f;
      const auto& fl = tsd ? r.tsd_flops : r.gd_flops;
      for (std::size_t c = 0; c < f.size(); ++c) {
        os << (tsd ? "TSD" : "GD") << ',' << r.index << ',' << r.n << ',' << c << ','
           << num(100.0 * static_cast<double>(c) / total, "%.6f") << ','
           << num(gap_closed(f.front(), f[c], r.f_best), "%.8f") << ',' << num(f[c], "%.15g") << ','
           << num(fl[c], "%.0f") << '\n';
      }
    }
  }
}

std::vector<InstanceRun> run_benchmark(const BenchConfig& cfg) {
  if (cfg.instances < 1) throw std::invalid_argument("benchmark: need at least one instance");
  if (cfg.max_cycles < 1) throw std::invalid_argument("benchmark: max_cycles must be >= 1");
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::vector<InstanceRun> all;
  for (int n : cfg.sizes) {
    std::vector<InstanceRun> runs;
    for (int i = 1; i <= cfg.instances; ++i) runs.push_back(run_instance(n, i, cfg));

    const fs::path stem = fs::path(cfg.out_dir) / ("procrustes_n" + std::to_string(n));
    std::ofstream csv(stem.string() + ".csv");
    std::ofstream rec(stem.string() + "_records.csv");
    std::ofstream log(stem.string() + ".log");
    if (!csv || !rec || !log) throw std::runtime_error("benchmark: cannot write to " + cfg.out_dir);
    write_gap_csv(csv, gap_table(runs, cfg.checkpoints));
    write_records_csv(rec, runs);
    for (const auto& r : runs) {
      log << "n=" << n << " instance=" << r.index << " seed=" << r.seed << " tsd_cycles=" << r.tsd_f.size() - 1
          << " tsd_status=" << r.tsd_status << " tsd_seconds=" << r.wall_tsd << " gd_cycles=" << r.gd_f.size() - 1
          << " gd_status=" << r.gd_status << " gd_seconds=" << r.wall_gd << " f_best=" << num(r.f_best) << '\n';
      if (r.tsd_status != "converged") log << "  warning: TSD did not reach the gradient tolerance\n";
      if (r.gd_status != "converged") log << "  warning: GD did not reach the gradient tolerance\n";
    }
    all.insert(all.end(), runs.begin(), runs.end());
  }
  return all;
}

}  // namespace tsd
