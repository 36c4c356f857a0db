#pragma once

// Orthogonal Procrustes instances min_Y Tr(D^T Y) over O(n), their SVD
// optimum, and the TSD-versus-gradient-descent benchmark harness.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsd/manifold.hpp"

namespace tsd {

struct ProcrustesInstance {
  int n = 0;
  std::uint64_t seed = 0;
  Matrix a;       // entries N(0, 4)
  Matrix x_true;  // Haar on O(n)
  Matrix b;       // A X_true + noise
  Matrix d;       // -A^T B
};

ProcrustesInstance gen_instance(int n, std::uint64_t seed, double noise_stddev = 1.0);

struct ProcrustesOptimum {
  Matrix y;
  double value = 0;
};

/// Global minimizer of Tr(D^T Y) over O(n): Y = -U V^T for D = U S V^T.
ProcrustesOptimum procrustes_optimum(const Matrix& d);
/// Minimizer over the connected component {det Y = sign}; sign is +1 or -1.
ProcrustesOptimum procrustes_optimum_in_component(const Matrix& d, int det_sign);

struct BenchConfig {
  std::vector<int> sizes{20, 50};
  int instances = 10;
  std::uint64_t seed = 7;
  std::string out_dir = "bench_out";
  int max_cycles = 2000;
  double tol = 1e-6;
  std::string rule = "givens";         // givens | random-onb
  std::string partition = "singleton"; // singleton | matching
  int checkpoints = 200;
};

struct InstanceRun {
  int n = 0;
  int index = 0;  // one-based
  std::uint64_t seed = 0;
  std::vector<double> tsd_f;  // objective after each cycle, [0] = start
  std::vector<double> gd_f;
  std::vector<double> tsd_flops;
  std::vector<double> gd_flops;
  std::string tsd_status;
  std::string gd_status;
  double f_best = 0;
  double wall_tsd = 0;  // seconds, log only
  double wall_gd = 0;
};

std::uint64_t instance_seed(std::uint64_t base, int n, int index);

/// Percent of the initial gap to f_best closed at objective f, clamped to [0, 100].
double gap_closed(double f0, double f, double f_best);
/// First cycle at which the gap closed reaches `level` percent, or -1.
long cycles_to_gap(const std::vector<double>& f, double f_best, double level);

/// Runs TSD and gradient descent on one generated instance.
InstanceRun run_instance(int n, int index, const BenchConfig& cfg);

struct GapTable {
  std::vector<double> percent;
  std::vector<long> cycle;
  std::vector<std::vector<double>> columns;  // TSD1, GD1, TSD2, GD2, ...
};

/// Gap-closed curves on log-spaced percent checkpoints shared by all runs of one size.
GapTable gap_table(const std::vector<InstanceRun>& runs, int checkpoints);
/// Gap closed for one run at a percent of max(TSD cycles, GD cycles).
double gap_at_percent(const InstanceRun& run, bool tsd, double percent);

void write_gap_csv(std::ostream& os, const GapTable& table);
void write_records_csv(std::ostream& os, const std::vector<InstanceRun>& runs);

/// Writes <out_dir>/procrustes_n<N>.csv, _records.csv and .log per size and
/// returns every run.
std::vector<InstanceRun> run_benchmark(const BenchConfig& cfg);

}  // namespace tsd
