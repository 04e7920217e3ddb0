#include "trendcca/limit_law.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trendcca/errors.hpp"
#include "trendcca/parallel.hpp"
#include "trendcca/rng.hpp"
#include "trendcca/stats.hpp"
#include "trendcca/version.hpp"

namespace trendcca {
namespace {

constexpr double kSingularFloor = 1e-12;
constexpr int kMaxRedraws = 64;

// One replication: ordered eigenvalues of the inverse Riemann-sum Gram
// matrix of the Brownian path.  Returns false for a numerically singular
// draw, which the caller redraws under a perturbed substream.
bool zeta_draw(Eigen::Index s, std::int64_t n_steps, std::mt19937_64& rng,
               const Eigen::MatrixXd* rotation, Eigen::VectorXd& out) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd cum = Eigen::VectorXd::Zero(s);
  Eigen::VectorXd step(s);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(s, s);
  for (std::int64_t t = 0; t < n_steps; ++t) {
    for (Eigen::Index i = 0; i < s; ++i) step(i) = normal(rng);
    if (rotation) {
      cum.noalias() += (*rotation) * step;
    } else {
      cum += step;
    }
    gram.selfadjointView<Eigen::Lower>().rankUpdate(cum, 1.0);
  }
  // B(t/n) = n^{-1/2} * cumsum, and the Riemann sum carries another 1/n.
  const double scale = 1.0 / (static_cast<double>(n_steps) * static_cast<double>(n_steps));
  const Eigen::MatrixXd integral = scale * Eigen::MatrixXd(gram.selfadjointView<Eigen::Lower>());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(integral, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return false;
  const Eigen::VectorXd mu = es.eigenvalues();  // ascending
  if (!(mu(0) > kSingularFloor)) return false;
  // zeta_i = 1/mu_{s+1-i}: inverting flips the order, so this is descending.
  for (Eigen::Index i = 0; i < s; ++i) out(i) = 1.0 / mu(i);
  return true;
}

}  // namespace

ZetaSample simulate_zeta(Eigen::Index s, const ZetaOptions& opts) {
  if (s < 1) throw DimensionError("simulate_zeta: s must be at least 1");
  if (opts.n_steps < 1) throw DimensionError("simulate_zeta: n_steps must be positive");
  if (opts.n_reps < 1) throw DimensionError("simulate_zeta: n_reps must be positive");
  if (opts.innovation_rotation &&
      (opts.innovation_rotation->rows() != s || opts.innovation_rotation->cols() != s))
    throw DimensionError("simulate_zeta: rotation must be s x s");

  ZetaSample sample;
  sample.values.resize(opts.n_reps, s);

  const std::size_t n = static_cast<std::size_t>(opts.n_reps);
  std::atomic<std::int64_t> redraws{0};
  parallel_for(
      n,
      [&](std::size_t begin, std::size_t end) {
        Eigen::VectorXd draw(s);
        std::int64_t local_redraws = 0;
        for (std::size_t r = begin; r < end; ++r) {
          bool ok = false;
          for (int attempt = 0; attempt < kMaxRedraws && !ok; ++attempt) {
            auto rng = make_substream(opts.seed, mix_seed(0x7a65746173696dULL, s),
                                      mix_seed(r, static_cast<std::uint64_t>(attempt)));
            ok = zeta_draw(s, opts.n_steps, rng, opts.innovation_rotation, draw);
            if (!ok) ++local_redraws;
          }
          if (!ok)
            throw ConditioningError("simulate_zeta: persistent singular draws at replication " +
                                    std::to_string(r));
          sample.values.row(static_cast<Eigen::Index>(r)) = draw;
        }
        redraws += local_redraws;
      },
      opts.threads);
  sample.redraws = redraws.load();
  return sample;
}

ZetaSample simulate_zeta(Eigen::Index s, std::int64_t n_steps, std::int64_t n_reps,
                         std::uint64_t seed) {
  ZetaOptions opts;
  opts.n_steps = n_steps;
  opts.n_reps = n_reps;
  opts.seed = seed;
  return simulate_zeta(s, opts);
}

namespace {

std::size_t eta_index(const std::vector<double>& etas, double eta) {
  for (std::size_t i = 0; i < etas.size(); ++i)
    if (std::abs(etas[i] - eta) < 1e-12) return i;
  throw TableError("limit-law table does not cover eta = " + std::to_string(eta));
}

}  // namespace

double LimitLawTable::quantile(Norm norm, double eta) const {
  const std::size_t i = eta_index(etas, eta);
  return norm == Norm::One ? quantiles_trace[i] : quantiles_max[i];
}

double LimitLawTable::stripe_delta(double eta, StripeCenter center) const {
  const std::size_t i = eta_index(etas, eta);
  return center == StripeCenter::Mean ? stripe_deltas[i] : stripe_deltas_median[i];
}

LimitLawTable make_table(Eigen::Index s, const ZetaSample& sample,
                         const std::vector<double>& etas) {
  if (sample.values.cols() != s) throw DimensionError("make_table: sample width mismatch");
  for (double eta : etas)
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("make_table: eta outside (0,1)");

  LimitLawTable table;
  table.s = s;
  table.etas = etas;
  std::sort(table.etas.begin(), table.etas.end());
  table.redraws = sample.redraws;

  const Eigen::Index n = sample.values.rows();
  std::vector<double> trace(n), maxeig(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    trace[r] = sample.values.row(r).sum();
    maxeig[r] = sample.values(r, 0);
  }
  std::sort(trace.begin(), trace.end());
  std::sort(maxeig.begin(), maxeig.end());

  const Eigen::MatrixXd logs = sample.values.array().log();
  table.mean_log = logs.colwise().mean();
  table.median_log.resize(s);
  for (Eigen::Index j = 0; j < s; ++j) {
    std::vector<double> col(logs.col(j).begin(), logs.col(j).end());
    std::sort(col.begin(), col.end());
    table.median_log(j) = quantile_sorted(col, 0.5);
  }

  std::vector<double> dev(n), dev_med(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    dev[r] = (logs.row(r).transpose() - table.mean_log).cwiseAbs().maxCoeff();
    dev_med[r] = (logs.row(r).transpose() - table.median_log).cwiseAbs().maxCoeff();
  }
  std::sort(dev.begin(), dev.end());
  std::sort(dev_med.begin(), dev_med.end());

  for (double eta : table.etas) {
    table.quantiles_trace.push_back(quantile_sorted(trace, 1.0 - eta));
    table.quantiles_max.push_back(quantile_sorted(maxeig, 1.0 - eta));
    table.stripe_deltas.push_back(quantile_sorted(dev, 1.0 - eta));
    table.stripe_deltas_median.push_back(quantile_sorted(dev_med, 1.0 - eta));
  }
  return table;
}

LimitLawStore LimitLawStore::build(Eigen::Index s_max, std::vector<double> etas,
                                   std::int64_t n_steps, std::int64_t n_reps,
                                   std::uint64_t seed, unsigned threads) {
  if (s_max < 1) throw DimensionError("LimitLawStore::build: s_max must be at least 1");
  if (etas.empty()) throw DimensionError("LimitLawStore::build: need at least one eta");
  std::sort(etas.begin(), etas.end());
  LimitLawStore store;
  store.n_steps_ = n_steps;
  store.n_reps_ = n_reps;
  store.seed_ = seed;
  store.etas_ = std::move(etas);
  store.extend_to(s_max, threads);
  return store;
}

bool LimitLawStore::has(Eigen::Index s) const {
  for (const auto& t : tables_)
    if (t.s == s) return true;
  return false;
}

const LimitLawTable& LimitLawStore::table(Eigen::Index s) const {
  for (const auto& t : tables_)
    if (t.s == s) return t;
  throw TableError("no limit-law table for s = " + std::to_string(s) +
                   " (available s: " + std::to_string(tables_.size()) + " entries)");
}

std::vector<Eigen::Index> LimitLawStore::available() const {
  std::vector<Eigen::Index> out;
  for (const auto& t : tables_) out.push_back(t.s);
  return out;
}

void LimitLawStore::extend_to(Eigen::Index s_max, unsigned threads) {
  for (Eigen::Index s = 1; s <= s_max; ++s) {
    if (has(s)) continue;
    ZetaOptions opts;
    opts.n_steps = n_steps_;
    opts.n_reps = n_reps_;
    opts.seed = seed_;
    opts.threads = threads;
    tables_.push_back(make_table(s, simulate_zeta(s, opts), etas_));
  }
  std::sort(tables_.begin(), tables_.end(),
            [](const LimitLawTable& a, const LimitLawTable& b) { return a.s < b.s; });
}

std::string store_to_json(const LimitLawStore& store) {
  nlohmann::json j;
  j["format_version"] = kTableFormatVersion;
  j["tool_version"] = kVersion;
  j["n_steps"] = store.n_steps_;
  j["n_reps"] = store.n_reps_;
  j["seed"] = store.seed_;
  j["etas"] = store.etas_;
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : store.tables_) {
    nlohmann::json jt;
    jt["s"] = t.s;
    jt["quantiles_trace"] = t.quantiles_trace;
    jt["quantiles_max"] = t.quantiles_max;
    jt["mean_log"] = std::vector<double>(t.mean_log.begin(), t.mean_log.end());
    jt["median_log"] = std::vector<double>(t.median_log.begin(), t.median_log.end());
    jt["stripe_deltas"] = t.stripe_deltas;
    jt["stripe_deltas_median"] = t.stripe_deltas_median;
    jt["redraws"] = t.redraws;
    tables.push_back(std::move(jt));
  }
  j["tables"] = std::move(tables);
  return j.dump(2);
}

LimitLawStore store_from_json(const std::string& text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw TableError(source + ": not a valid table file: " + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kTableFormatVersion)
      throw TableError(source + ": table format version " + std::to_string(version) +
                       " does not match expected " + std::to_string(kTableFormatVersion));
    LimitLawStore store;
    store.n_steps_ = j.at("n_steps").get<std::int64_t>();
    store.n_reps_ = j.at("n_reps").get<std::int64_t>();
    store.seed_ = j.at("seed").get<std::uint64_t>();
    store.etas_ = j.at("etas").get<std::vector<double>>();
    for (const auto& jt : j.at("tables")) {
      LimitLawTable t;
      t.s = jt.at("s").get<Eigen::Index>();
      t.etas = store.etas_;
      t.quantiles_trace = jt.at("quantiles_trace").get<std::vector<double>>();
      t.quantiles_max = jt.at("quantiles_max").get<std::vector<double>>();
      const auto ml = jt.at("mean_log").get<std::vector<double>>();
      t.mean_log = Eigen::Map<const Eigen::VectorXd>(ml.data(),
                                                     static_cast<Eigen::Index>(ml.size()));
      const auto mdl = jt.at("median_log").get<std::vector<double>>();
      t.median_log = Eigen::Map<const Eigen::VectorXd>(mdl.data(),
                                                       static_cast<Eigen::Index>(mdl.size()));
      t.stripe_deltas = jt.at("stripe_deltas").get<std::vector<double>>();
      t.stripe_deltas_median = jt.at("stripe_deltas_median").get<std::vector<double>>();
      t.redraws = jt.at("redraws").get<std::int64_t>();
      if (t.quantiles_trace.size() != store.etas_.size() ||
          t.quantiles_max.size() != store.etas_.size() ||
          t.stripe_deltas.size() != store.etas_.size() ||
          t.stripe_deltas_median.size() != store.etas_.size() ||
          t.mean_log.size() != t.s || t.median_log.size() != t.s)
        throw TableError(source + ": inconsistent table entry for s = " + std::to_string(t.s));
      store.tables_.push_back(std::move(t));
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw TableError(source + ": malformed table file: " + e.what());
  }
}

void LimitLawStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write table file '" + path.string() + "'");
  out << store_to_json(*this) << "\n";
  if (!out) throw IoError("failed writing table file '" + path.string() + "'");
}

LimitLawStore LimitLawStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TableError("cannot open table file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return store_from_json(ss.str(), path.string());
}

std::string LimitLawStore::content_hash() const {
  const std::string text = store_to_json(*this);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

std::pair<Eigen::VectorXd, double> stripe_params(const LimitLawTable& table, double eta,
                                                 StripeCenter center) {
  if (center == StripeCenter::Median)
    return {table.median_log, table.stripe_delta(eta, StripeCenter::Median)};
  return {table.mean_log, table.stripe_delta(eta)};
}

}  // namespace trendcca
