// End-to-end analysis pipeline: preprocess -> basis -> CCA -> trend counts
// -> identification -> loadings with Wald p-values -> misspecification
// diagnostic, assembled into a schema-versioned report with enough
// provenance (seed, K, table hash) to rerun a result exactly.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trendcca/limit_law.hpp"
#include "trendcca/loadings.hpp"
#include "trendcca/mc.hpp"
#include "trendcca/panel.hpp"
#include "trendcca/trend_count.hpp"

namespace trendcca {

struct AnalyzeOptions {
  // preprocessing
  bool log_transform = false;
  bool normalize_start = false;
  InitMode init_mode = InitMode::Levels;
  std::optional<std::vector<Eigen::Index>> select;             // 0-based columns
  std::vector<std::vector<Eigen::Index>> aggregate;            // 0-based groups

  // basis
  std::optional<Eigen::Index> K;  // default ceil(T^{3/4})
  int grid_j = 1;
  int grid_m = 3;  // shrunk automatically so that K_m <= T

  // counting
  std::vector<CountMethod> methods = {CountMethod::MaxGap, CountMethod::SeqFinf,
                                      CountMethod::SeqF1, CountMethod::F1,
                                      CountMethod::F2, CountMethod::F3};
  double eta = 0.05;
  Norm norm = Norm::Infinity;
  StripeCenter stripe_center = StripeCenter::Mean;
  bool include_zero = false;

  // identification / loadings
  std::optional<std::vector<Eigen::Index>> b_cols;  // 0-based
  std::optional<std::vector<Eigen::Index>> c_cols;
  std::optional<Eigen::Index> s_override;
  double icc_tol = 1e-10;
  int icc_max_iter = 50;
  bool run_loadings = true;
  bool run_misspec = true;

  // limit-law tables
  std::optional<std::filesystem::path> table_path;  // also settable via env
  bool allow_simulate = true;   // false = fail with a table error when absent
  std::int64_t auto_steps = 2000;   // sizes used when tables are auto-built
  std::int64_t auto_reps = 20000;

  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct CoefficientTest {
  Eigen::Index row = 0, col = 0;  // position in psi_* (0-based)
  double estimate = 0;
  double q = 0;
  double p_value = 1;
};

struct AnalysisReport {
  int schema_version = 0;
  std::string tool_version;
  std::uint64_t seed = 0;

  // input
  Eigen::Index T = 0, p = 0;
  std::vector<std::string> labels;
  std::vector<std::string> provenance;

  Eigen::Index K = 0;
  KGrid grid;
  std::vector<double> eigenvalues;

  std::vector<TrendCountEstimate> counts;  // one per requested method
  Eigen::Index s_selected = 0;             // override or first method's count

  // identification
  std::vector<Eigen::Index> b_cols;  // empty when a non-coordinate b was used
  bool identification_searched = false;
  bool identification_accepted = true;
  IdentificationDecision identification;

  std::optional<LoadingEstimate> loadings;
  std::optional<LrvEstimate> lrv;
  std::vector<CoefficientTest> coefficient_tests;  // per psi_* entry, m = 1

  std::optional<MisspecDiagnostic> misspec;

  std::string table_hash;  // empty when no tables were needed
  std::int64_t table_steps = 0, table_reps = 0;
  std::uint64_t table_seed = 0;
};

// Resolves the table store for the pipeline: --tables flag, else the
// TRENDCCA_TABLES environment variable, else (when simulation is allowed)
// an in-memory build.  Requires tables covering s = 1..s_needed.
LimitLawStore resolve_tables(const AnalyzeOptions& opts, Eigen::Index s_needed);

AnalysisReport analyze(const TimeSeriesPanel& raw, const AnalyzeOptions& opts);

std::string report_to_json(const AnalysisReport& report, int indent = 2);

// Plot-data exports:
//   spectrum.csv  index,eigenvalue
//   gaps.csv      i,gap
//   misspec.csv   logK,logStat,stripeLow,stripeHigh
// The stripe columns translate the componentwise log stripe into the norm
// scale, giving a slope -1 band; they are empty when no diagnostic ran.
void write_plot_csvs(const AnalysisReport& report, const std::filesystem::path& out_dir);

}  // namespace trendcca
