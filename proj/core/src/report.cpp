#include "trendcca/report.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "trendcca/errors.hpp"
#include "trendcca/version.hpp"

namespace trendcca {
namespace {

bool needs_tables(const AnalyzeOptions& opts) {
  if (opts.run_misspec) return true;
  for (CountMethod m : opts.methods)
    if (m == CountMethod::SeqF1 || m == CountMethod::SeqFinf) return true;
  return false;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json count_json(const TrendCountEstimate& est) {
  nlohmann::json j;
  j["method"] = count_method_name(est.method);
  j["s_hat"] = est.s_hat;
  j["r_hat"] = est.r_hat;
  j["tie_set"] = est.tie_set;
  j["index"] = est.diag_index;
  j["criterion"] = est.diagnostics;
  return j;
}

}  // namespace

LimitLawStore resolve_tables(const AnalyzeOptions& opts, Eigen::Index s_needed) {
  std::optional<std::filesystem::path> path = opts.table_path;
  if (!path) {
    if (const char* env = std::getenv("TRENDCCA_TABLES")) path = std::filesystem::path(env);
  }

  // A failing cache write degrades to an in-memory table with a warning;
  // the analysis itself still runs.
  const auto save_best_effort = [&](const LimitLawStore& store) {
    if (!path) return;
    try {
      store.save(*path);
    } catch (const IoError& e) {
      std::cerr << "warning: keeping tables in memory, cache write failed: " << e.what()
                << "\n";
    }
  };

  if (path && std::filesystem::exists(*path)) {
    LimitLawStore store = LimitLawStore::load(*path);
    bool complete = true;
    for (Eigen::Index s = 1; s <= s_needed; ++s) complete = complete && store.has(s);
    if (!complete) {
      if (!opts.allow_simulate)
        throw TableError("table file '" + path->string() + "' does not cover s = 1.." +
                         std::to_string(s_needed) + " and simulation is disabled");
      store.extend_to(s_needed, opts.threads);
      save_best_effort(store);
    }
    return store;
  }

  if (!opts.allow_simulate)
    throw TableError(path ? "table file '" + path->string() + "' does not exist"
                          : "no table file given (flag or TRENDCCA_TABLES) and simulation "
                            "is disabled");

  LimitLawStore store = LimitLawStore::build(s_needed, {0.01, 0.05, 0.10}, opts.auto_steps,
                                             opts.auto_reps, opts.seed, opts.threads);
  save_best_effort(store);
  return store;
}

AnalysisReport analyze(const TimeSeriesPanel& raw, const AnalyzeOptions& opts) {
  AnalysisReport report;
  report.schema_version = kReportSchemaVersion;
  report.tool_version = kVersion;
  report.seed = opts.seed;

  // 1. preprocessing + optional selection
  TimeSeriesPanel panel =
      preprocess(raw, opts.log_transform, opts.normalize_start, opts.init_mode);
  if (opts.select && !opts.aggregate.empty())
    throw DimensionError("analyze: choose either selection or aggregation, not both");
  if (opts.select)
    panel = apply_selection(panel, SelectionMatrix::subset(panel.p(), *opts.select));
  else if (!opts.aggregate.empty())
    panel = apply_selection(panel, SelectionMatrix::aggregate(panel.p(), opts.aggregate));

  report.T = panel.T();
  report.p = panel.p();
  report.labels = panel.labels();
  report.provenance = panel.provenance();

  // 2. basis + CCA
  const Eigen::Index K = opts.K.value_or(default_K(panel.T()));
  if (K < panel.p())
    throw DimensionError("analyze: K = " + std::to_string(K) + " is below p = " +
                         std::to_string(panel.p()));
  report.K = K;
  int m = opts.grid_m;
  while (m > 0 && K * (1 + static_cast<Eigen::Index>(m) * opts.grid_j) > panel.T()) --m;
  report.grid = k_grid(K, opts.grid_j, m);

  const DesignOperator design(build_design(K, panel.T()));
  const CcaResult base_cca = cca(panel.values(), design);
  report.eigenvalues.assign(base_cca.eigenvalues.begin(), base_cca.eigenvalues.end());

  // 3. tables (lazily: only when a sequential method or the diagnostic runs)
  std::optional<LimitLawStore> store;
  if (needs_tables(opts)) {
    store = resolve_tables(opts, panel.p());
    report.table_hash = store->content_hash();
    report.table_steps = store->n_steps();
    report.table_reps = store->n_reps();
    report.table_seed = store->seed();
  }

  // 4. trend counts
  for (CountMethod m_req : opts.methods) {
    switch (m_req) {
      case CountMethod::MaxGap:
        report.counts.push_back(max_gap(base_cca.eigenvalues));
        break;
      case CountMethod::F1:
      case CountMethod::F2:
      case CountMethod::F3:
        try {
          report.counts.push_back(argmax_criteria(base_cca.eigenvalues,
                                                  static_cast<double>(panel.T()),
                                                  static_cast<double>(K), m_req,
                                                  opts.include_zero));
        } catch (const DimensionError&) {
          // f2/f3 are undefined for very small p; skip quietly.
        }
        break;
      case CountMethod::SeqF1:
        report.counts.push_back(sequential_select(base_cca.eigenvalues,
                                                  static_cast<double>(K), *store,
                                                  Norm::One, opts.eta));
        break;
      case CountMethod::SeqFinf:
        report.counts.push_back(sequential_select(base_cca.eigenvalues,
                                                  static_cast<double>(K), *store,
                                                  Norm::Infinity, opts.eta));
        break;
    }
  }
  if (report.counts.empty()) throw DimensionError("analyze: no counting method applied");
  report.s_selected = opts.s_override.value_or(report.counts.front().s_hat);

  const Eigen::Index s = report.s_selected;

  // 5. identification + loadings
  if (opts.run_loadings) {
    IdentificationPair id;
    if (opts.b_cols) {
      id = IdentificationPair::coordinates(panel.p(), *opts.b_cols);
      report.b_cols = *opts.b_cols;
    } else if (opts.c_cols) {
      std::vector<Eigen::Index> b_cols;
      std::vector<bool> is_c(static_cast<std::size_t>(panel.p()), false);
      for (Eigen::Index i : *opts.c_cols) {
        if (i < 0 || i >= panel.p()) throw DimensionError("analyze: c column out of range");
        is_c[static_cast<std::size_t>(i)] = true;
      }
      for (Eigen::Index i = 0; i < panel.p(); ++i)
        if (!is_c[static_cast<std::size_t>(i)]) b_cols.push_back(i);
      id = IdentificationPair::coordinates(panel.p(), b_cols);
      report.b_cols = b_cols;
    } else {
      const IdentificationSearchResult found = choose_identification(panel, design, s);
      report.identification_searched = true;
      report.identification_accepted = found.accepted;
      report.b_cols = found.b_cols;
      id = IdentificationPair::coordinates(panel.p(), found.b_cols);
    }
    if (static_cast<Eigen::Index>(report.b_cols.size()) != s)
      throw DimensionError("analyze: identification must supply s = " + std::to_string(s) +
                           " loading restrictions");

    if (s > 0 && s < panel.p())
      report.identification = identification_check(panel, id.b, design);
    else
      report.identification = IdentificationDecision{false, s, s};

    report.loadings = icc(panel, design, s, id, opts.icc_tol, opts.icc_max_iter);
    report.lrv = lrv(panel, design, report.loadings->psi_hat, report.loadings->beta_hat);

    // per-coefficient Wald tests on psi_*, one restriction each
    const Eigen::Index r = panel.p() - s;
    if (s > 0 && r > 0) {
      for (Eigen::Index col = 0; col < s; ++col) {
        for (Eigen::Index row = 0; row < r; ++row) {
          Eigen::MatrixXd R = Eigen::MatrixXd::Zero(s * r, 1);
          R(col * r + row, 0) = 1.0;
          const WaldResult w =
              wald(*report.loadings, *report.lrv, panel, R, Eigen::VectorXd::Zero(1));
          report.coefficient_tests.push_back(CoefficientTest{
              row, col, report.loadings->psi_star(row, col), w.Q, w.p_value});
        }
      }
    }
  }

  // 6. misspecification diagnostic
  if (opts.run_misspec && s > 0) {
    report.misspec = misspec_diagnostic(panel, s, report.grid, opts.norm, store->table(s),
                                        opts.eta, opts.stripe_center);
  }

  return report;
}

std::string report_to_json(const AnalysisReport& report, int indent) {
  nlohmann::json j;
  j["schema_version"] = report.schema_version;
  j["tool_version"] = report.tool_version;
  j["seed"] = report.seed;

  j["input"] = {{"T", report.T},
                {"p", report.p},
                {"labels", report.labels},
                {"provenance", report.provenance}};

  j["K"] = report.K;
  j["k_grid"] = {{"base_K", report.grid.base_K}, {"j", report.grid.j}, {"m", report.grid.m},
                 {"values", report.grid.values}};
  j["eigenvalues"] = report.eigenvalues;

  nlohmann::json counts = nlohmann::json::array();
  for (const auto& est : report.counts) counts.push_back(count_json(est));
  j["counts"] = std::move(counts);
  j["s_selected"] = report.s_selected;

  nlohmann::json ident;
  ident["b_cols"] = report.b_cols;
  ident["searched"] = report.identification_searched;
  ident["accepted"] = report.identification_accepted;
  ident["decision"] = report.identification.reject ? "reject" : "accept";
  ident["s_full"] = report.identification.s_full;
  ident["s_sub"] = report.identification.s_sub;
  j["identification"] = std::move(ident);

  if (report.loadings) {
    nlohmann::json l;
    l["psi_hat"] = matrix_json(report.loadings->psi_hat);
    l["beta_hat"] = matrix_json(report.loadings->beta_hat);
    l["psi_star"] = matrix_json(report.loadings->psi_star);
    l["beta_star"] = matrix_json(report.loadings->beta_star);
    l["iterations"] = report.loadings->iterations;
    l["converged"] = report.loadings->converged;
    l["step_norms"] = report.loadings->step_norms;
    j["loadings"] = std::move(l);
  }
  if (report.lrv) {
    nlohmann::json o;
    o["omega"] = matrix_json(report.lrv->omega);
    o["omega11"] = matrix_json(report.lrv->omega11);
    o["omega22"] = matrix_json(report.lrv->omega22);
    o["omega221"] = matrix_json(report.lrv->omega221);
    j["lrv"] = std::move(o);
  }
  if (!report.coefficient_tests.empty()) {
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& t : report.coefficient_tests)
      tests.push_back({{"row", t.row},
                       {"col", t.col},
                       {"estimate", t.estimate},
                       {"Q", t.q},
                       {"p_value", t.p_value}});
    j["coefficient_tests"] = std::move(tests);
  }

  if (report.misspec) {
    nlohmann::json m;
    m["norm"] = report.misspec->norm == Norm::One ? "one" : "infinity";
    m["stripe_location"] =
        report.misspec->center == StripeCenter::Mean ? "mean" : "median";
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& pt : report.misspec->log_points) pts.push_back({pt[0], pt[1]});
    m["log_points"] = std::move(pts);
    m["fitted_slope"] = report.misspec->fitted_slope;
    m["stripe_center"] = std::vector<double>(report.misspec->stripe_center.begin(),
                                             report.misspec->stripe_center.end());
    m["stripe_delta"] = report.misspec->stripe_delta;
    m["inside_stripe"] = report.misspec->inside_stripe;
    j["misspec"] = std::move(m);
  }

  if (!report.table_hash.empty()) {
    j["tables"] = {{"hash", report.table_hash},
                   {"n_steps", report.table_steps},
                   {"n_reps", report.table_reps},
                   {"seed", report.table_seed}};
  }
  return j.dump(indent);
}

void write_plot_csvs(const AnalysisReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "spectrum.csv");
    if (!out) throw IoError("cannot write spectrum.csv");
    out << "index,eigenvalue\n";
    for (std::size_t i = 0; i < report.eigenvalues.size(); ++i)
      out << i + 1 << "," << report.eigenvalues[i] << "\n";
  }
  {
    std::ofstream out(out_dir / "gaps.csv");
    if (!out) throw IoError("cannot write gaps.csv");
    out << "i,gap\n";
    const auto& lam = report.eigenvalues;
    for (std::size_t i = 0; i <= lam.size(); ++i) {
      const double hi = i == 0 ? 1.0 : lam[i - 1];
      const double lo = i == lam.size() ? 0.0 : lam[i];
      out << i << "," << hi - lo << "\n";
    }
  }
  {
    std::ofstream out(out_dir / "misspec.csv");
    if (!out) throw IoError("cannot write misspec.csv");
    out << "logK,logStat,stripeLow,stripeHigh\n";
    if (report.misspec) {
      // Norm of the stripe center, so the band has slope -1 in (logK, logStat).
      const auto& c = report.misspec->stripe_center;
      double center_norm = 0;
      if (report.misspec->norm == Norm::One)
        center_norm = std::log(c.array().exp().sum());
      else
        center_norm = c.maxCoeff();
      const double delta = report.misspec->stripe_delta;
      for (const auto& pt : report.misspec->log_points)
        out << pt[0] << "," << pt[1] << "," << center_norm - delta - pt[0] << ","
            << center_norm + delta - pt[0] << "\n";
    }
  }
}

}  // namespace trendcca
