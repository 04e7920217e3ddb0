// Simulation harness: the VAR(1) error-correction DGP
//
//   Delta X_t = alpha beta' X_{t-1} + eps_t,  eps_t ~ i.i.d. N(0, I_p),
//   beta = (I_{p-s}, 0)',  alpha = -a beta,   X_0 = 0,
//
// plus grid drivers that replicate trend-count estimators over many seeds
// and aggregate selection frequencies and mean absolute errors into tables.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "trendcca/limit_law.hpp"
#include "trendcca/panel.hpp"
#include "trendcca/trend_count.hpp"

namespace trendcca {

struct DgpConfig {
  Eigen::Index p = 1;
  Eigen::Index s = 0;   // number of stochastic trends, 0..p
  double a = 1.0;       // adjustment speed, (0, 1]
  Eigen::Index T = 2;
  std::uint64_t seed = 0;
};

TimeSeriesPanel simulate_dgp(const DgpConfig& cfg);

struct GridPoint {
  DgpConfig cfg;
  CountMethod method = CountMethod::MaxGap;
};

struct ExperimentResult {
  Eigen::Index p = 0, s = 0;
  double a = 1.0;
  Eigen::Index T = 0, K = 0;
  CountMethod method = CountMethod::MaxGap;
  double freq_correct = 0;  // fraction of replications with s_hat = s
  double mae = 0;           // mean |s_hat - s|
  double mc_se = 0;         // sqrt(f (1-f) / N)
  std::int64_t n_reps = 0;
  std::int64_t failures = 0;  // replications aborted by numerical errors
};

struct RunGridOptions {
  std::int64_t n_reps = 1000;
  std::uint64_t seed = 0;
  // Default basis size is ceil(T^{3/4}); a fixed override is available.
  std::optional<Eigen::Index> fixed_K;
  // Required for the sequential methods; must cover s = 1..p at this eta.
  const LimitLawStore* tables = nullptr;
  double eta = 0.05;
  bool include_zero = false;  // admissible-set extension for f2/f3
  unsigned threads = 0;
  // Invoked after each finished grid point, in grid order.
  std::function<void(const ExperimentResult&)> on_cell;
};

// Runs every grid point with per-replication substream seeds derived from
// (seed, grid index, replication index).  Numerical failures inside a
// replication are counted and skipped unless they exceed 1% of n_reps.
std::vector<ExperimentResult> run_grid(const std::vector<GridPoint>& grid,
                                       const RunGridOptions& opts);

// Merges duplicate (p, s, a, T, K, method) cells by pooling replications.
std::vector<ExperimentResult> pool_duplicates(const std::vector<ExperimentResult>& results);

// Writes freq.csv / mae.csv (wide: one row per (p, T/p), one column per
// (method, s, a)), results.csv (long form) and results.json under out_dir.
void emit_tables(const std::vector<ExperimentResult>& results,
                 const std::filesystem::path& out_dir);

}  // namespace trendcca
