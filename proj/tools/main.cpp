// trendcca command line interface.
//
// Subcommands: analyze, count, loadings, wald, misspec, critval, mc, simulate.
// Exit codes: 0 success, 2 input error, 3 numerical/conditioning error,
// 4 missing or incompatible critical-value tables.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trendcca/errors.hpp"
#include "trendcca/limit_law.hpp"
#include "trendcca/loadings.hpp"
#include "trendcca/mc.hpp"
#include "trendcca/panel.hpp"
#include "trendcca/report.hpp"
#include "trendcca/trend_count.hpp"
#include "trendcca/version.hpp"

namespace {

using trendcca::CountMethod;
using trendcca::Norm;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitTables = 4;

// "1-11,14" (1-based, inclusive ranges) -> 0-based indices.
std::vector<Eigen::Index> parse_index_list(const std::string& text) {
  std::vector<Eigen::Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-', 1);  // allow no negative indices anyway
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoll(item) - 1);
      } else {
        const long long lo = std::stoll(item.substr(0, dash));
        const long long hi = std::stoll(item.substr(dash + 1));
        if (hi < lo) throw trendcca::ParseError("descending range '" + item + "'");
        for (long long v = lo; v <= hi; ++v) out.push_back(v - 1);
      }
    } catch (const std::logic_error&) {
      throw trendcca::ParseError("cannot parse index list entry '" + item + "'");
    }
  }
  if (out.empty()) throw trendcca::ParseError("empty index list '" + text + "'");
  for (Eigen::Index i : out)
    if (i < 0) throw trendcca::ParseError("indices are 1-based; got entry " + std::to_string(i + 1));
  return out;
}

std::vector<std::vector<Eigen::Index>> parse_groups(const std::string& text) {
  std::vector<std::vector<Eigen::Index>> groups;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';'))
    if (!item.empty()) groups.push_back(parse_index_list(item));
  if (groups.empty()) throw trendcca::ParseError("empty aggregation spec '" + text + "'");
  return groups;
}

// Numeric CSV without header, used for restriction matrices.
Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw trendcca::IoError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::logic_error&) {
        throw trendcca::ParseError(path + ": non-numeric cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw trendcca::ParseError(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw trendcca::ParseError(path + ": empty matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_text(const std::optional<std::string>& out_path, const std::string& text) {
  if (!out_path) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(*out_path);
  if (!out) throw trendcca::IoError("cannot write '" + *out_path + "'");
  out << text << "\n";
}

struct InputFlags {
  std::string input;
  std::optional<std::string> time_column;
  bool log_transform = false;
  bool normalize_start = false;
  std::string init_mode = "levels";

  void attach(CLI::App* cmd) {
    cmd->add_option("-i,--input", input, "input CSV (header row, comma separated)")
        ->required();
    cmd->add_option("--time-column", time_column, "name of a timestamp column to drop");
    cmd->add_flag("--log", log_transform, "natural log transform");
    cmd->add_flag("--normalize-start", normalize_start, "subtract the first row");
    cmd->add_option("--init-mode", init_mode, "levels | difference-from-start")
        ->check(CLI::IsMember({"levels", "difference-from-start"}));
  }

  trendcca::TimeSeriesPanel load() const {
    trendcca::CsvSchema schema;
    schema.time_column = time_column;
    trendcca::TimeSeriesPanel raw = trendcca::ingest_csv(input, schema);
    return trendcca::preprocess(raw, log_transform, normalize_start, mode());
  }

  trendcca::InitMode mode() const {
    return init_mode == "levels" ? trendcca::InitMode::Levels
                                 : trendcca::InitMode::DifferenceFromStart;
  }
};

std::optional<std::string> table_path_or_env(const std::optional<std::string>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv("TRENDCCA_TABLES")) return std::string(env);
  return std::nullopt;
}

trendcca::LimitLawStore load_or_build_tables(const std::optional<std::string>& path,
                                             bool allow_simulate, Eigen::Index s_needed,
                                             std::int64_t steps, std::int64_t reps,
                                             std::uint64_t seed, unsigned threads) {
  trendcca::AnalyzeOptions opts;
  if (path) opts.table_path = *path;
  opts.allow_simulate = allow_simulate;
  opts.auto_steps = steps;
  opts.auto_reps = reps;
  opts.seed = seed;
  opts.threads = threads;
  return trendcca::resolve_tables(opts, s_needed);
}

nlohmann::json count_estimate_json(const trendcca::TrendCountEstimate& est) {
  nlohmann::json j;
  j["method"] = trendcca::count_method_name(est.method);
  j["s_hat"] = est.s_hat;
  j["r_hat"] = est.r_hat;
  j["tie_set"] = est.tie_set;
  j["index"] = est.diag_index;
  j["criterion"] = est.diagnostics;
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"semiparametric stochastic-trend analysis via canonical correlations "
               "against a discretized sine basis"};
  app.set_version_flag("--version", std::string("trendcca ") + trendcca::kVersion);
  app.require_subcommand(1);

  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware)")->capture_default_str();

  // ---------------------------------------------------------------- analyze
  auto* cmd_analyze = app.add_subcommand("analyze", "full pipeline: counts, loadings, "
                                                    "Wald p-values, misspecification");
  InputFlags an_in;
  an_in.attach(cmd_analyze);
  trendcca::AnalyzeOptions an;
  std::optional<std::string> an_select, an_aggregate, an_b, an_c, an_tables, an_out,
      an_plots;
  long long an_K = -1, an_s = -1;
  std::vector<int> an_grid;
  bool an_no_simulate = false, an_no_loadings = false, an_no_misspec = false;
  std::string an_norm = "infinity";
  cmd_analyze->add_option("--K", an_K, "basis size (default ceil(T^(3/4)))");
  cmd_analyze->add_option("--k-grid", an_grid, "j m for the K_i = K(1+ij) grid")
      ->expected(2);
  cmd_analyze->add_option("--select", an_select, "1-based series to keep, e.g. 1-11");
  cmd_analyze->add_option("--aggregate", an_aggregate,
                          "';'-separated groups to average, e.g. 1-4;5-8");
  cmd_analyze->add_option("--eta", an.eta, "test level")->capture_default_str();
  cmd_analyze->add_option("--norm", an_norm, "one | infinity (misspec norm)")
      ->check(CLI::IsMember({"one", "infinity"}));
  std::string an_center = "mean";
  cmd_analyze->add_option("--stripe-center", an_center, "mean | median stripe location")
      ->check(CLI::IsMember({"mean", "median"}));
  cmd_analyze->add_flag("--include-zero", an.include_zero, "extend f2/f3 to i = 0");
  cmd_analyze->add_option("--s", an_s, "override the trend count for loadings/misspec");
  cmd_analyze->add_option("--b", an_b, "1-based loading normalization coordinates");
  cmd_analyze->add_option("--c", an_c, "1-based cointegration normalization coordinates");
  cmd_analyze->add_option("--tol", an.icc_tol, "ICC convergence tolerance")
      ->capture_default_str();
  cmd_analyze->add_option("--max-iter", an.icc_max_iter, "ICC iteration cap")
      ->capture_default_str();
  cmd_analyze->add_option("--tables", an_tables, "critical-value table file");
  cmd_analyze->add_flag("--no-simulate", an_no_simulate,
                        "fail instead of simulating missing tables");
  cmd_analyze->add_flag("--no-loadings", an_no_loadings, "skip loading estimation");
  cmd_analyze->add_flag("--no-misspec", an_no_misspec, "skip the misspecification check");
  cmd_analyze->add_option("--seed", an.seed, "seed for auto-built tables")
      ->capture_default_str();
  cmd_analyze->add_option("--steps", an.auto_steps, "path steps for auto-built tables")
      ->capture_default_str();
  cmd_analyze->add_option("--reps", an.auto_reps, "replications for auto-built tables")
      ->capture_default_str();
  cmd_analyze->add_option("-o,--out", an_out, "report path (default stdout)");
  cmd_analyze->add_option("--emit-plots", an_plots, "directory for plot-data CSVs");

  cmd_analyze->callback([&] {
    an.log_transform = an_in.log_transform;
    an.normalize_start = an_in.normalize_start;
    an.init_mode = an_in.mode();
    if (an_select) an.select = parse_index_list(*an_select);
    if (an_aggregate) an.aggregate = parse_groups(*an_aggregate);
    if (an_K >= 0) an.K = an_K;
    if (an_s >= 0) an.s_override = an_s;
    if (!an_grid.empty()) {
      an.grid_j = an_grid[0];
      an.grid_m = an_grid[1];
    }
    if (an_b) an.b_cols = parse_index_list(*an_b);
    if (an_c) an.c_cols = parse_index_list(*an_c);
    an.norm = an_norm == "one" ? Norm::One : Norm::Infinity;
    an.stripe_center = an_center == "mean" ? trendcca::StripeCenter::Mean
                                           : trendcca::StripeCenter::Median;
    if (auto t = table_path_or_env(an_tables)) an.table_path = *t;
    an.allow_simulate = !an_no_simulate;
    an.run_loadings = !an_no_loadings;
    an.run_misspec = !an_no_misspec;
    an.threads = threads;

    trendcca::CsvSchema schema;
    schema.time_column = an_in.time_column;
    const trendcca::TimeSeriesPanel raw = trendcca::ingest_csv(an_in.input, schema);
    const trendcca::AnalysisReport report = trendcca::analyze(raw, an);
    write_text(an_out, trendcca::report_to_json(report));
    if (an_plots) trendcca::write_plot_csvs(report, *an_plots);
  });

  // ------------------------------------------------------------------ count
  auto* cmd_count = app.add_subcommand("count", "estimate the number of stochastic trends");
  InputFlags ct_in;
  ct_in.attach(cmd_count);
  std::string ct_method = "maxgap";
  double ct_eta = 0.05;
  bool ct_include_zero = false, ct_no_simulate = false;
  long long ct_K = -1;
  std::vector<int> ct_grid;
  std::optional<std::string> ct_tables, ct_out;
  std::uint64_t ct_seed = 0;
  cmd_count->add_option("--method", ct_method, "maxgap|f1|f2|f3|seq-f1|seq-finf")
      ->check(CLI::IsMember({"maxgap", "f1", "f2", "f3", "seq-f1", "seq-finf"}));
  cmd_count->add_option("--K", ct_K, "basis size (default ceil(T^(3/4)))");
  cmd_count->add_option("--k-grid", ct_grid,
                        "j m: use the max over K_i = K(1+ij) for the sequential tests")
      ->expected(2);
  cmd_count->add_option("--eta", ct_eta, "test level")->capture_default_str();
  cmd_count->add_flag("--include-zero", ct_include_zero, "extend f2/f3 to i = 0");
  cmd_count->add_option("--tables", ct_tables, "critical-value table file");
  cmd_count->add_flag("--no-simulate", ct_no_simulate,
                      "fail instead of simulating missing tables");
  cmd_count->add_option("--seed", ct_seed, "seed for auto-built tables");
  cmd_count->add_option("-o,--out", ct_out, "output path (default stdout)");

  cmd_count->callback([&] {
    const trendcca::TimeSeriesPanel panel = ct_in.load();
    const Eigen::Index K = ct_K >= 0 ? ct_K : trendcca::default_K(panel.T());
    const auto method = trendcca::parse_count_method(ct_method);
    trendcca::TrendCountEstimate est;
    const bool sequential =
        *method == CountMethod::SeqF1 || *method == CountMethod::SeqFinf;

    if (sequential && !ct_grid.empty()) {
      // max-over-grid variant: one spectrum per K_i
      const trendcca::KGrid grid = trendcca::k_grid(K, ct_grid[0], ct_grid[1]);
      std::vector<std::pair<double, Eigen::VectorXd>> spectra;
      for (Eigen::Index Ki : grid.values) {
        const trendcca::DesignOperator design(trendcca::build_design(Ki, panel.T()));
        spectra.emplace_back(static_cast<double>(Ki),
                             trendcca::cca(panel.values(), design).eigenvalues);
      }
      const Norm norm = *method == CountMethod::SeqF1 ? Norm::One : Norm::Infinity;
      const trendcca::LimitLawStore store = load_or_build_tables(
          table_path_or_env(ct_tables), !ct_no_simulate, panel.p(), 2000, 20000, ct_seed,
          threads);
      est.method = *method;
      Eigen::Index selected = 0;
      for (Eigen::Index j = panel.p(); j >= 1; --j) {
        const double stat = trendcca::f_statistic_grid(spectra, j, norm);
        est.diag_index.push_back(j);
        est.diagnostics.push_back(stat);
        if (stat <= store.table(j).quantile(norm, ct_eta)) {
          selected = j;
          break;
        }
      }
      est.s_hat = selected;
      est.r_hat = panel.p() - selected;
      est.tie_set = {selected};
    } else {
      const trendcca::DesignOperator design(trendcca::build_design(K, panel.T()));
      const trendcca::CcaResult res = trendcca::cca(panel.values(), design);
      switch (*method) {
        case CountMethod::MaxGap:
          est = trendcca::max_gap(res.eigenvalues);
          break;
        case CountMethod::F1:
        case CountMethod::F2:
        case CountMethod::F3:
          est = trendcca::argmax_criteria(res.eigenvalues, static_cast<double>(panel.T()),
                                          static_cast<double>(K), *method, ct_include_zero);
          break;
        default: {
          const trendcca::LimitLawStore store = load_or_build_tables(
              table_path_or_env(ct_tables), !ct_no_simulate, panel.p(), 2000, 20000,
              ct_seed, threads);
          est = trendcca::sequential_select(
              res.eigenvalues, static_cast<double>(K), store,
              *method == CountMethod::SeqF1 ? Norm::One : Norm::Infinity, ct_eta);
        }
      }
    }
    nlohmann::json j = count_estimate_json(est);
    j["K"] = K;
    j["T"] = panel.T();
    j["p"] = panel.p();
    write_text(ct_out, j.dump(2));
  });

  // --------------------------------------------------------------- loadings
  auto* cmd_loadings = app.add_subcommand("loadings", "one-step and ICC estimation of the "
                                                      "loading/cointegration matrices");
  InputFlags ld_in;
  ld_in.attach(cmd_loadings);
  long long ld_s = -1, ld_K = -1;
  std::optional<std::string> ld_b, ld_c, ld_out;
  double ld_tol = 1e-10;
  int ld_max_iter = 50;
  cmd_loadings->add_option("--s", ld_s, "number of stochastic trends (default max-gap)");
  cmd_loadings->add_option("--K", ld_K, "basis size (default ceil(T^(3/4)))");
  cmd_loadings->add_option("--b", ld_b, "1-based loading normalization coordinates");
  cmd_loadings->add_option("--c", ld_c, "1-based cointegration normalization coordinates");
  cmd_loadings->add_option("--tol", ld_tol, "ICC convergence tolerance")->capture_default_str();
  cmd_loadings->add_option("--max-iter", ld_max_iter, "ICC iteration cap")->capture_default_str();
  cmd_loadings->add_option("-o,--out", ld_out, "output path (default stdout)");

  auto loadings_core = [&](const trendcca::TimeSeriesPanel& panel, Eigen::Index K,
                           long long s_flag, const std::optional<std::string>& b_flag,
                           const std::optional<std::string>& c_flag, double tol,
                           int max_iter, trendcca::LoadingEstimate& est,
                           trendcca::LrvEstimate& lrv_est,
                           trendcca::IdentificationPair& id) {
    const trendcca::DesignOperator design(trendcca::build_design(K, panel.T()));
    const trendcca::CcaResult res = trendcca::cca(panel.values(), design);
    const Eigen::Index s =
        s_flag >= 0 ? s_flag : trendcca::max_gap(res.eigenvalues).s_hat;
    if (b_flag) {
      id = trendcca::IdentificationPair::coordinates(panel.p(), parse_index_list(*b_flag));
    } else if (c_flag) {
      const auto c_cols = parse_index_list(*c_flag);
      std::vector<bool> is_c(static_cast<std::size_t>(panel.p()), false);
      for (Eigen::Index i : c_cols) is_c.at(static_cast<std::size_t>(i)) = true;
      std::vector<Eigen::Index> b_cols;
      for (Eigen::Index i = 0; i < panel.p(); ++i)
        if (!is_c[static_cast<std::size_t>(i)]) b_cols.push_back(i);
      id = trendcca::IdentificationPair::coordinates(panel.p(), b_cols);
    } else {
      const auto found = trendcca::choose_identification(panel, design, s);
      id = trendcca::IdentificationPair::coordinates(panel.p(), found.b_cols);
    }
    est = trendcca::icc(panel, design, s, id, tol, max_iter);
    lrv_est = trendcca::lrv(panel, design, est.psi_hat, est.beta_hat);
  };

  auto matrix_json = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index jj = 0; jj < m.cols(); ++jj) row.push_back(m(i, jj));
      rows.push_back(std::move(row));
    }
    return rows;
  };

  cmd_loadings->callback([&] {
    const trendcca::TimeSeriesPanel panel = ld_in.load();
    const Eigen::Index K = ld_K >= 0 ? ld_K : trendcca::default_K(panel.T());
    trendcca::LoadingEstimate est;
    trendcca::LrvEstimate lrv_est;
    trendcca::IdentificationPair id;
    loadings_core(panel, K, ld_s, ld_b, ld_c, ld_tol, ld_max_iter, est, lrv_est, id);
    nlohmann::json j;
    j["s"] = est.psi_hat.cols();
    j["K"] = K;
    j["psi_hat"] = matrix_json(est.psi_hat);
    j["beta_hat"] = matrix_json(est.beta_hat);
    j["psi_star"] = matrix_json(est.psi_star);
    j["beta_star"] = matrix_json(est.beta_star);
    j["iterations"] = est.iterations;
    j["converged"] = est.converged;
    j["step_norms"] = est.step_norms;
    j["omega"] = matrix_json(lrv_est.omega);
    j["omega221"] = matrix_json(lrv_est.omega221);
    write_text(ld_out, j.dump(2));
  });

  // ------------------------------------------------------------------- wald
  auto* cmd_wald = app.add_subcommand("wald", "Wald test of R'vec(psi_*) = h");
  cmd_wald->set_help_flag("--help", "print help");  // frees -h/--h for the null vector
  InputFlags wd_in;
  wd_in.attach(cmd_wald);
  long long wd_s = -1, wd_K = -1;
  std::optional<std::string> wd_b, wd_c, wd_out;
  std::string wd_R, wd_h;
  double wd_tol = 1e-10;
  int wd_max_iter = 50;
  cmd_wald->add_option("--s", wd_s, "number of stochastic trends (default max-gap)");
  cmd_wald->add_option("--K", wd_K, "basis size (default ceil(T^(3/4)))");
  cmd_wald->add_option("--b", wd_b, "1-based loading normalization coordinates");
  cmd_wald->add_option("--c", wd_c, "1-based cointegration normalization coordinates");
  cmd_wald->add_option("--R", wd_R, "CSV with the (s r) x m restriction matrix")->required();
  cmd_wald->add_option("--h", wd_h, "CSV with the m-vector of null values")->required();
  cmd_wald->add_option("--tol", wd_tol, "ICC convergence tolerance")->capture_default_str();
  cmd_wald->add_option("--max-iter", wd_max_iter, "ICC iteration cap")->capture_default_str();
  cmd_wald->add_option("-o,--out", wd_out, "output path (default stdout)");

  cmd_wald->callback([&] {
    const trendcca::TimeSeriesPanel panel = wd_in.load();
    const Eigen::Index K = wd_K >= 0 ? wd_K : trendcca::default_K(panel.T());
    trendcca::LoadingEstimate est;
    trendcca::LrvEstimate lrv_est;
    trendcca::IdentificationPair id;
    loadings_core(panel, K, wd_s, wd_b, wd_c, wd_tol, wd_max_iter, est, lrv_est, id);
    const Eigen::MatrixXd R = read_matrix_csv(wd_R);
    const Eigen::MatrixXd h_mat = read_matrix_csv(wd_h);
    if (h_mat.cols() != 1) throw trendcca::ParseError("--h must be a single column");
    const trendcca::WaldResult w =
        trendcca::wald(est, lrv_est, panel, R, h_mat.col(0));
    nlohmann::json j;
    j["Q"] = w.Q;
    j["dof"] = w.dof;
    j["p_value"] = w.p_value;
    j["dual_gap"] = w.dual_gap;
    j["iterations"] = est.iterations;
    j["converged"] = est.converged;
    write_text(wd_out, j.dump(2));
  });

  // ---------------------------------------------------------------- misspec
  auto* cmd_misspec = app.add_subcommand("misspec", "log-log misspecification diagnostic "
                                                    "and confidence stripe");
  InputFlags ms_in;
  ms_in.attach(cmd_misspec);
  long long ms_s = -1, ms_K = -1;
  std::vector<int> ms_grid{1, 3};
  std::string ms_norm = "infinity";
  double ms_eta = 0.05;
  bool ms_no_simulate = false;
  std::optional<std::string> ms_tables, ms_out;
  std::uint64_t ms_seed = 0;
  cmd_misspec->add_option("--s", ms_s, "number of stochastic trends (default max-gap)");
  cmd_misspec->add_option("--K", ms_K, "base K (default ceil(T^(3/4)))");
  cmd_misspec->add_option("--k-grid", ms_grid, "j m for K_i = K(1+ij)")->expected(2);
  cmd_misspec->add_option("--norm", ms_norm, "one | infinity")
      ->check(CLI::IsMember({"one", "infinity"}));
  cmd_misspec->add_option("--eta", ms_eta, "stripe level")->capture_default_str();
  std::string ms_center = "mean";
  cmd_misspec->add_option("--stripe-center", ms_center, "mean | median stripe location")
      ->check(CLI::IsMember({"mean", "median"}));
  cmd_misspec->add_option("--tables", ms_tables, "critical-value table file");
  cmd_misspec->add_flag("--no-simulate", ms_no_simulate,
                        "fail instead of simulating missing tables");
  cmd_misspec->add_option("--seed", ms_seed, "seed for auto-built tables");
  cmd_misspec->add_option("-o,--out", ms_out, "CSV output path (default stdout)");

  cmd_misspec->callback([&] {
    const trendcca::TimeSeriesPanel panel = ms_in.load();
    const Eigen::Index K = ms_K >= 0 ? ms_K : trendcca::default_K(panel.T());
    Eigen::Index s = ms_s;
    if (s < 0) {
      const trendcca::DesignOperator design(trendcca::build_design(K, panel.T()));
      s = trendcca::max_gap(trendcca::cca(panel.values(), design).eigenvalues).s_hat;
    }
    const trendcca::KGrid grid = trendcca::k_grid(K, ms_grid.at(0), ms_grid.at(1));
    const Norm norm = ms_norm == "one" ? Norm::One : Norm::Infinity;
    const trendcca::LimitLawStore store =
        load_or_build_tables(table_path_or_env(ms_tables), !ms_no_simulate, s, 2000, 20000,
                             ms_seed, threads);
    const trendcca::MisspecDiagnostic diag = trendcca::misspec_diagnostic(
        panel, s, grid, norm, store.table(s), ms_eta,
        ms_center == "mean" ? trendcca::StripeCenter::Mean
                            : trendcca::StripeCenter::Median);

    std::ostringstream csv;
    csv << "logK,logStat,stripeLow,stripeHigh\n";
    const auto& c = diag.stripe_center;
    const double center_norm = norm == Norm::One
                                   ? std::log(c.array().exp().sum())
                                   : c.maxCoeff();
    for (const auto& pt : diag.log_points)
      csv << pt[0] << "," << pt[1] << "," << center_norm - diag.stripe_delta - pt[0] << ","
          << center_norm + diag.stripe_delta - pt[0] << "\n";
    csv << "# fitted_slope=" << diag.fitted_slope
        << " inside_stripe=" << (diag.inside_stripe ? "true" : "false")
        << " s=" << s << " K=" << K;
    write_text(ms_out, csv.str());
  });

  // ---------------------------------------------------------------- critval
  auto* cmd_critval = app.add_subcommand("critval", "simulate limit-law quantile tables");
  long long cv_s_max = 10;
  std::vector<double> cv_etas{0.01, 0.05, 0.10};
  std::int64_t cv_reps = 100000, cv_steps = 10000;
  std::uint64_t cv_seed = 0;
  std::optional<std::string> cv_out;
  bool cv_list = false;
  cmd_critval->add_option("--s-max", cv_s_max, "largest dimension to tabulate")
      ->capture_default_str();
  cmd_critval->add_option("--eta", cv_etas, "significance levels")->capture_default_str();
  cmd_critval->add_option("--reps", cv_reps, "Monte Carlo replications")->capture_default_str();
  cmd_critval->add_option("--steps", cv_steps, "Brownian path steps")->capture_default_str();
  cmd_critval->add_option("--seed", cv_seed, "base seed")->capture_default_str();
  cmd_critval->add_option("-o,--out,--table", cv_out,
                          "table file (default $TRENDCCA_TABLES)");
  cmd_critval->add_flag("--list", cv_list, "list the cached tables and exit");

  cmd_critval->callback([&] {
    const auto path = table_path_or_env(cv_out);
    if (cv_list) {
      if (!path || !std::filesystem::exists(*path)) {
        std::cout << "no tables cached\n";
        return;
      }
      const trendcca::LimitLawStore store = trendcca::LimitLawStore::load(*path);
      std::cout << "tables in " << *path << " (steps=" << store.n_steps()
                << ", reps=" << store.n_reps() << ", seed=" << store.seed() << ")\n";
      for (Eigen::Index s : store.available()) {
        const auto& t = store.table(s);
        std::cout << "  s=" << s;
        for (std::size_t i = 0; i < t.etas.size(); ++i)
          std::cout << "  q" << 1 - t.etas[i] << "(trace)=" << t.quantiles_trace[i]
                    << " q" << 1 - t.etas[i] << "(max)=" << t.quantiles_max[i];
        std::cout << "\n";
      }
      return;
    }
    const trendcca::LimitLawStore store = trendcca::LimitLawStore::build(
        cv_s_max, cv_etas, cv_steps, cv_reps, cv_seed, threads);
    if (path) {
      store.save(*path);
      std::cerr << "wrote tables for s=1.." << cv_s_max << " to " << *path << "\n";
    } else {
      std::cout << "s,eta,quantile_trace,quantile_max,stripe_delta\n";
      for (Eigen::Index s : store.available()) {
        const auto& t = store.table(s);
        for (std::size_t i = 0; i < t.etas.size(); ++i)
          std::cout << s << "," << t.etas[i] << "," << t.quantiles_trace[i] << ","
                    << t.quantiles_max[i] << "," << t.stripe_deltas[i] << "\n";
      }
    }
  });

  // --------------------------------------------------------------------- mc
  auto* cmd_mc = app.add_subcommand("mc", "Monte Carlo study of the trend-count methods");
  std::string mc_grid_file, mc_out_dir = "mc-out";
  std::int64_t mc_reps = 1000;
  std::uint64_t mc_seed = 0;
  long long mc_K = -1;
  double mc_eta = 0.05;
  std::optional<std::string> mc_tables;
  cmd_mc->add_option("--grid", mc_grid_file,
                     "JSON grid: [{p,s,a,T,methods:[...]}, ...]")->required();
  cmd_mc->add_option("--reps", mc_reps, "replications per cell")->capture_default_str();
  cmd_mc->add_option("--seed", mc_seed, "base seed")->capture_default_str();
  cmd_mc->add_option("--K", mc_K, "fixed basis size (default ceil(T^(3/4)) per cell)");
  cmd_mc->add_option("--eta", mc_eta, "level for the sequential tests")->capture_default_str();
  cmd_mc->add_option("--tables", mc_tables, "critical-value table file");
  cmd_mc->add_option("-o,--out", mc_out_dir, "output directory")->capture_default_str();

  cmd_mc->callback([&] {
    std::ifstream in(mc_grid_file);
    if (!in) throw trendcca::IoError("cannot open grid file '" + mc_grid_file + "'");
    nlohmann::json jgrid;
    try {
      in >> jgrid;
    } catch (const nlohmann::json::exception& e) {
      throw trendcca::ParseError(mc_grid_file + ": " + e.what());
    }
    std::vector<trendcca::GridPoint> grid;
    Eigen::Index max_p = 0;
    bool any_sequential = false;
    for (const auto& cell : jgrid) {
      trendcca::DgpConfig cfg;
      cfg.p = cell.at("p").get<Eigen::Index>();
      cfg.s = cell.at("s").get<Eigen::Index>();
      cfg.a = cell.at("a").get<double>();
      cfg.T = cell.at("T").get<Eigen::Index>();
      max_p = std::max(max_p, cfg.p);
      for (const auto& name : cell.at("methods")) {
        const auto method = trendcca::parse_count_method(name.get<std::string>());
        if (!method)
          throw trendcca::ParseError("unknown method '" + name.get<std::string>() + "'");
        any_sequential = any_sequential || *method == CountMethod::SeqF1 ||
                         *method == CountMethod::SeqFinf;
        grid.push_back({cfg, *method});
      }
    }

    std::optional<trendcca::LimitLawStore> store;
    if (any_sequential)
      store = load_or_build_tables(table_path_or_env(mc_tables), true, max_p, 2000, 20000,
                                   mc_seed, threads);

    trendcca::RunGridOptions opts;
    opts.n_reps = mc_reps;
    opts.seed = mc_seed;
    if (mc_K >= 0) opts.fixed_K = mc_K;
    opts.eta = mc_eta;
    opts.threads = threads;
    if (store) opts.tables = &*store;

    std::filesystem::create_directories(mc_out_dir);
    std::ofstream stream_out(std::filesystem::path(mc_out_dir) / "cells.jsonl");
    std::size_t done = 0;
    opts.on_cell = [&](const trendcca::ExperimentResult& r) {
      ++done;
      std::cerr << "[" << done << "/" << grid.size() << "] p=" << r.p << " s=" << r.s
                << " a=" << r.a << " T=" << r.T << " " << trendcca::count_method_name(r.method)
                << " freq=" << r.freq_correct << " mae=" << r.mae << "\n";
      nlohmann::json row{{"p", r.p},      {"s", r.s},
                         {"a", r.a},      {"T", r.T},
                         {"K", r.K},      {"method", trendcca::count_method_name(r.method)},
                         {"freq_correct", r.freq_correct},
                         {"mae", r.mae},  {"mc_se", r.mc_se},
                         {"n_reps", r.n_reps}, {"failures", r.failures}};
      stream_out << row.dump() << "\n" << std::flush;
    };

    const auto results = trendcca::run_grid(grid, opts);
    trendcca::emit_tables(results, mc_out_dir);
    std::cerr << "wrote tables to " << mc_out_dir << "\n";
  });

  // --------------------------------------------------------------- simulate
  auto* cmd_sim = app.add_subcommand("simulate", "draw one panel from the VAR(1) "
                                                 "error-correction process");
  trendcca::DgpConfig sim_cfg;
  std::optional<std::string> sim_out;
  cmd_sim->add_option("--p", sim_cfg.p, "dimension")->required();
  cmd_sim->add_option("--s", sim_cfg.s, "number of stochastic trends")->required();
  cmd_sim->add_option("--a", sim_cfg.a, "adjustment speed")->capture_default_str();
  cmd_sim->add_option("--T", sim_cfg.T, "sample size")->required();
  cmd_sim->add_option("--seed", sim_cfg.seed, "seed")->capture_default_str();
  cmd_sim->add_option("-o,--out", sim_out, "CSV path (default stdout)");

  cmd_sim->callback([&] {
    const trendcca::TimeSeriesPanel panel = trendcca::simulate_dgp(sim_cfg);
    std::ostringstream csv;
    for (std::size_t j = 0; j < panel.labels().size(); ++j)
      csv << (j ? "," : "") << panel.labels()[j];
    csv << "\n";
    csv.precision(17);
    for (Eigen::Index t = 0; t < panel.T(); ++t) {
      for (Eigen::Index j = 0; j < panel.p(); ++j) csv << (j ? "," : "") << panel.values()(t, j);
      csv << "\n";
    }
    std::string text = csv.str();
    text.pop_back();  // write_text appends the final newline
    write_text(sim_out, text);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const trendcca::TableError& e) {
    std::cerr << "error (tables): " << e.what() << "\n";
    return kExitTables;
  } catch (const trendcca::ConditioningError& e) {
    std::cerr << "error (numerical): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const trendcca::IdentificationError& e) {
    std::cerr << "error (numerical): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const trendcca::Error& e) {
    std::cerr << "error (input): " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
