#include "trendcca/mc.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trendcca/errors.hpp"
#include "trendcca/parallel.hpp"
#include "trendcca/rng.hpp"

namespace trendcca {

TimeSeriesPanel simulate_dgp(const DgpConfig& cfg) {
  if (cfg.p < 1) throw DimensionError("simulate_dgp: p must be positive");
  if (cfg.s < 0 || cfg.s > cfg.p) throw DimensionError("simulate_dgp: s outside [0, p]");
  if (!(cfg.a > 0)) throw DomainError("simulate_dgp: a must be positive");
  if (cfg.T < 2) throw DimensionError("simulate_dgp: T must be at least 2");

  const Eigen::Index r = cfg.p - cfg.s;
  auto rng = make_substream(cfg.seed, 0x646770ULL);  // "dgp"
  std::normal_distribution<double> normal;

  Eigen::MatrixXd x(cfg.T, cfg.p);
  Eigen::RowVectorXd prev = Eigen::RowVectorXd::Zero(cfg.p);
  for (Eigen::Index t = 0; t < cfg.T; ++t) {
    Eigen::RowVectorXd cur(cfg.p);
    // alpha beta' X = -a * (X_1..X_r, 0); the first r coordinates mean-revert
    // with speed a, the last s coordinates are pure random walks.
    for (Eigen::Index i = 0; i < r; ++i) cur(i) = (1.0 - cfg.a) * prev(i) + normal(rng);
    for (Eigen::Index i = r; i < cfg.p; ++i) cur(i) = prev(i) + normal(rng);
    x.row(t) = cur;
    prev = cur;
  }

  std::vector<std::string> labels(static_cast<std::size_t>(cfg.p));
  for (Eigen::Index j = 0; j < cfg.p; ++j)
    labels[static_cast<std::size_t>(j)] = "x" + std::to_string(j + 1);
  std::ostringstream prov;
  prov << "simulated:vecm(p=" << cfg.p << ",s=" << cfg.s << ",a=" << cfg.a << ",T=" << cfg.T
       << ",seed=" << cfg.seed << ")";
  return TimeSeriesPanel(std::move(x), std::move(labels),
                         Eigen::RowVectorXd::Zero(cfg.p), {prov.str()});
}

namespace {

Eigen::Index count_once(const Eigen::MatrixXd& values, const DesignOperator& design,
                        CountMethod method, const RunGridOptions& opts) {
  const CcaResult res = cca(values, design);
  switch (method) {
    case CountMethod::MaxGap:
      return max_gap(res.eigenvalues).s_hat;
    case CountMethod::F1:
    case CountMethod::F2:
    case CountMethod::F3:
      return argmax_criteria(res.eigenvalues, static_cast<double>(values.rows()),
                             static_cast<double>(design.K()), method, opts.include_zero)
          .s_hat;
    case CountMethod::SeqF1:
      return sequential_select(res.eigenvalues, static_cast<double>(design.K()),
                               *opts.tables, Norm::One, opts.eta)
          .s_hat;
    case CountMethod::SeqFinf:
      return sequential_select(res.eigenvalues, static_cast<double>(design.K()),
                               *opts.tables, Norm::Infinity, opts.eta)
          .s_hat;
  }
  throw DomainError("count_once: unknown method");
}

}  // namespace

std::vector<ExperimentResult> run_grid(const std::vector<GridPoint>& grid,
                                       const RunGridOptions& opts) {
  if (grid.empty()) throw DimensionError("run_grid: empty grid");
  if (opts.n_reps < 1) throw DimensionError("run_grid: n_reps must be positive");
  for (const auto& pt : grid)
    if ((pt.method == CountMethod::SeqF1 || pt.method == CountMethod::SeqFinf) &&
        opts.tables == nullptr)
      throw TableError("run_grid: sequential methods need a limit-law table");

  // Design operators depend only on (T, K); share them across grid points.
  std::map<std::pair<Eigen::Index, Eigen::Index>, DesignOperator> designs;
  auto design_for = [&](Eigen::Index T, Eigen::Index K) -> const DesignOperator& {
    auto key = std::make_pair(T, K);
    auto it = designs.find(key);
    if (it == designs.end())
      it = designs.emplace(key, DesignOperator(build_design(K, T))).first;
    return it->second;
  };

  std::vector<ExperimentResult> results;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const GridPoint& pt = grid[gi];
    const Eigen::Index K = opts.fixed_K.value_or(default_K(pt.cfg.T));
    const DesignOperator& design = design_for(pt.cfg.T, K);

    const std::size_t n = static_cast<std::size_t>(opts.n_reps);
    std::vector<std::int8_t> failed(n, 0);
    std::vector<Eigen::Index> s_hats(n, 0);
    parallel_for(
        n,
        [&](std::size_t begin, std::size_t end) {
          for (std::size_t rep = begin; rep < end; ++rep) {
            DgpConfig cfg = pt.cfg;
            cfg.seed = mix_seed(opts.seed, gi, rep);
            try {
              const TimeSeriesPanel panel = simulate_dgp(cfg);
              s_hats[rep] = count_once(panel.values(), design, pt.method, opts);
            } catch (const Error&) {
              failed[rep] = 1;
            }
          }
        },
        opts.threads);

    ExperimentResult cell;
    cell.p = pt.cfg.p;
    cell.s = pt.cfg.s;
    cell.a = pt.cfg.a;
    cell.T = pt.cfg.T;
    cell.K = K;
    cell.method = pt.method;

    std::int64_t ok = 0, correct = 0, abs_err = 0, failures = 0;
    for (std::size_t rep = 0; rep < n; ++rep) {
      if (failed[rep]) {
        ++failures;
        continue;
      }
      ++ok;
      if (s_hats[rep] == pt.cfg.s) ++correct;
      abs_err += std::abs(static_cast<std::int64_t>(s_hats[rep] - pt.cfg.s));
    }
    if (failures > opts.n_reps / 100)
      throw ConditioningError("run_grid: " + std::to_string(failures) + " of " +
                              std::to_string(opts.n_reps) +
                              " replications failed numerically at grid point " +
                              std::to_string(gi));
    cell.n_reps = ok;
    cell.failures = failures;
    cell.freq_correct = ok > 0 ? static_cast<double>(correct) / static_cast<double>(ok) : 0.0;
    cell.mae = ok > 0 ? static_cast<double>(abs_err) / static_cast<double>(ok) : 0.0;
    cell.mc_se = ok > 0 ? std::sqrt(cell.freq_correct * (1.0 - cell.freq_correct) /
                                    static_cast<double>(ok))
                        : 0.0;
    if (opts.on_cell) opts.on_cell(cell);
    results.push_back(cell);
  }
  return results;
}

std::vector<ExperimentResult> pool_duplicates(const std::vector<ExperimentResult>& results) {
  using Key = std::tuple<Eigen::Index, Eigen::Index, double, Eigen::Index, Eigen::Index, int>;
  std::map<Key, ExperimentResult> pooled;
  std::vector<Key> order;
  for (const auto& r : results) {
    Key key{r.p, r.s, r.a, r.T, r.K, static_cast<int>(r.method)};
    auto it = pooled.find(key);
    if (it == pooled.end()) {
      pooled.emplace(key, r);
      order.push_back(key);
      continue;
    }
    ExperimentResult& acc = it->second;
    const double n1 = static_cast<double>(acc.n_reps), n2 = static_cast<double>(r.n_reps);
    const double n = n1 + n2;
    acc.freq_correct = (acc.freq_correct * n1 + r.freq_correct * n2) / n;
    acc.mae = (acc.mae * n1 + r.mae * n2) / n;
    acc.n_reps += r.n_reps;
    acc.failures += r.failures;
    acc.mc_se = std::sqrt(acc.freq_correct * (1.0 - acc.freq_correct) / n);
  }
  std::vector<ExperimentResult> out;
  for (const auto& key : order) out.push_back(pooled.at(key));
  return out;
}

namespace {

std::string cell_column_name(const ExperimentResult& r) {
  std::ostringstream os;
  os << count_method_name(r.method) << "|s=" << r.s << "|a=" << r.a;
  return os.str();
}

void write_wide_csv(const std::vector<ExperimentResult>& results,
                    const std::filesystem::path& path, bool freq) {
  std::set<std::pair<Eigen::Index, Eigen::Index>> rows;   // (p, T/p)
  std::set<std::string> cols;
  std::map<std::pair<std::pair<Eigen::Index, Eigen::Index>, std::string>, double> cells;
  for (const auto& r : results) {
    const auto row = std::make_pair(r.p, r.T / r.p);
    const auto col = cell_column_name(r);
    rows.insert(row);
    cols.insert(col);
    cells[{row, col}] = freq ? r.freq_correct : r.mae;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "p,T_over_p";
  for (const auto& c : cols) out << "," << c;
  out << "\n";
  for (const auto& row : rows) {
    out << row.first << "," << row.second;
    for (const auto& c : cols) {
      auto it = cells.find({row, c});
      out << ",";
      if (it != cells.end()) out << it->second;
    }
    out << "\n";
  }
}

}  // namespace

void emit_tables(const std::vector<ExperimentResult>& results,
                 const std::filesystem::path& out_dir) {
  if (results.empty()) throw DimensionError("emit_tables: empty result set");
  std::filesystem::create_directories(out_dir);
  const std::vector<ExperimentResult> pooled = pool_duplicates(results);

  write_wide_csv(pooled, out_dir / "freq.csv", true);
  write_wide_csv(pooled, out_dir / "mae.csv", false);

  {
    std::ofstream out(out_dir / "results.csv");
    if (!out) throw IoError("cannot write results.csv");
    out << "p,s,a,T,T_over_p,K,method,freq_correct,mae,mc_se,n_reps,failures\n";
    for (const auto& r : pooled)
      out << r.p << "," << r.s << "," << r.a << "," << r.T << "," << r.T / r.p << "," << r.K
          << "," << count_method_name(r.method) << "," << r.freq_correct << "," << r.mae << ","
          << r.mc_se << "," << r.n_reps << "," << r.failures << "\n";
  }
  {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : pooled) {
      j.push_back({{"p", r.p},
                   {"s", r.s},
                   {"a", r.a},
                   {"T", r.T},
                   {"K", r.K},
                   {"method", count_method_name(r.method)},
                   {"freq_correct", r.freq_correct},
                   {"mae", r.mae},
                   {"mc_se", r.mc_se},
                   {"n_reps", r.n_reps},
                   {"failures", r.failures}});
    }
    std::ofstream out(out_dir / "results.json");
    if (!out) throw IoError("cannot write results.json");
    out << j.dump(2) << "\n";
  }
}

}  // namespace trendcca
