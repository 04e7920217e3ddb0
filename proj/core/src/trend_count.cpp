#include "trendcca/trend_count.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "trendcca/errors.hpp"
#include "trendcca/stats.hpp"

namespace trendcca {
namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
constexpr double kF1Floor = 1e-300;

void check_sorted_unit(const Eigen::VectorXd& lambda) {
  if (lambda.size() < 1) throw DimensionError("empty eigenvalue vector");
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (!(lambda(i) >= 0.0 && lambda(i) <= 1.0))
      throw DomainError("eigenvalue outside [0,1] at position " + std::to_string(i + 1));
    if (i > 0 && lambda(i) > lambda(i - 1) + 1e-14)
      throw DomainError("eigenvalues not sorted non-increasing");
  }
}

// argmax with smallest-index tie breaking over (index, value) pairs;
// ties recorded exactly.
TrendCountEstimate make_argmax_estimate(CountMethod method, Eigen::Index p,
                                        std::vector<Eigen::Index> idx,
                                        std::vector<double> val) {
  TrendCountEstimate est;
  est.method = method;
  double best = -std::numeric_limits<double>::infinity();
  for (double v : val) best = std::max(best, v);
  for (std::size_t i = 0; i < idx.size(); ++i)
    if (val[i] == best) est.tie_set.push_back(idx[i]);
  est.s_hat = est.tie_set.front();
  est.r_hat = p - est.s_hat;
  est.diag_index = std::move(idx);
  est.diagnostics = std::move(val);
  return est;
}

}  // namespace

const char* count_method_name(CountMethod m) {
  switch (m) {
    case CountMethod::MaxGap: return "maxgap";
    case CountMethod::F1: return "f1";
    case CountMethod::F2: return "f2";
    case CountMethod::F3: return "f3";
    case CountMethod::SeqF1: return "seq-f1";
    case CountMethod::SeqFinf: return "seq-finf";
  }
  return "?";
}

std::optional<CountMethod> parse_count_method(const std::string& name) {
  if (name == "maxgap") return CountMethod::MaxGap;
  if (name == "f1") return CountMethod::F1;
  if (name == "f2") return CountMethod::F2;
  if (name == "f3") return CountMethod::F3;
  if (name == "seq-f1") return CountMethod::SeqF1;
  if (name == "seq-finf") return CountMethod::SeqFinf;
  return std::nullopt;
}

TrendCountEstimate max_gap(const Eigen::VectorXd& lambda) {
  check_sorted_unit(lambda);
  const Eigen::Index p = lambda.size();
  std::vector<Eigen::Index> idx;
  std::vector<double> gaps;
  for (Eigen::Index i = 0; i <= p; ++i) {
    const double hi = i == 0 ? 1.0 : lambda(i - 1);
    const double lo = i == p ? 0.0 : lambda(i);
    idx.push_back(i);
    gaps.push_back(hi - lo);
  }
  return make_argmax_estimate(CountMethod::MaxGap, p, std::move(idx), std::move(gaps));
}

TrendCountEstimate argmax_criteria(const Eigen::VectorXd& lambda, double T, double K,
                                   CountMethod which, bool include_zero) {
  check_sorted_unit(lambda);
  const Eigen::Index p = lambda.size();
  auto lam = [&](Eigen::Index i) { return i == 0 ? 1.0 : lambda(i - 1); };

  std::vector<Eigen::Index> idx;
  std::vector<double> val;

  switch (which) {
    case CountMethod::F1: {
      if (!(T > 0) || !(K > 0)) throw DomainError("f1 needs positive T and K");
      // log-space evaluation; the T/K-weighted tail terms are floored at
      // 1e-300 so that zero eigenvalues cannot overflow the ratio.
      const double log_rate = std::log(T / K);
      std::vector<double> logs(p);
      for (Eigen::Index h = 0; h < p; ++h)
        logs[h] = std::log(std::max((T / K) * lambda(h), kF1Floor)) - log_rate;
      double head = 0.0;  // sum of log lambda_h, h <= i
      double tail = 0.0;  // sum of log((T/K) lambda_h), h > i
      for (Eigen::Index h = 0; h < p; ++h) tail += logs[h] + log_rate;
      for (Eigen::Index i = 0; i <= p; ++i) {
        if (i > 0) {
          head += logs[i - 1];
          tail -= logs[i - 1] + log_rate;
        }
        idx.push_back(i);
        val.push_back(head - tail);
      }
      // A zero eigenvalue in the head makes the criterion exactly zero.
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (Eigen::Index h = 1; h <= idx[i]; ++h)
          if (lambda(h - 1) == 0.0) val[i] = -std::numeric_limits<double>::infinity();
      return make_argmax_estimate(CountMethod::F1, p, std::move(idx), std::move(val));
    }
    case CountMethod::F2: {
      const Eigen::Index lo = include_zero ? 0 : 1;
      if (p - 1 < lo)
        throw DimensionError("f2 needs p >= 2 (admissible set {" +
                             std::to_string(lo) + ",...,p-1} is empty)");
      for (Eigen::Index i = lo; i <= p - 1; ++i) {
        const double denom = lambda(i);
        idx.push_back(i);
        val.push_back(denom > 0.0 ? lam(i) / denom : std::numeric_limits<double>::infinity());
      }
      return make_argmax_estimate(CountMethod::F2, p, std::move(idx), std::move(val));
    }
    case CountMethod::F3: {
      const Eigen::Index lo = include_zero ? 0 : 1;
      if (p - 2 < lo)
        throw DimensionError("f3 needs p >= " + std::to_string(include_zero ? 2 : 3) +
                             " (admissible set {" + std::to_string(lo) +
                             ",...,p-2} is empty)");
      std::vector<double> tail_sum(p + 2, 0.0);  // sum_{h > i} lambda_h
      for (Eigen::Index i = p - 1; i >= 0; --i) tail_sum[i] = tail_sum[i + 1] + lambda(i);
      auto growth = [&](Eigen::Index i) {
        // log(1 + lambda_i / sum_{h>i} lambda_h), empty sums = 0.
        const double tail = tail_sum[i];
        if (tail <= 0.0)
          return lam(i) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        return std::log1p(lam(i) / tail);
      };
      for (Eigen::Index i = lo; i <= p - 2; ++i) {
        const double num = growth(i);
        const double den = growth(i + 1);
        idx.push_back(i);
        val.push_back(den > 0.0 ? num / den : std::numeric_limits<double>::infinity());
      }
      return make_argmax_estimate(CountMethod::F3, p, std::move(idx), std::move(val));
    }
    default:
      throw DomainError("argmax_criteria: method must be f1, f2 or f3");
  }
}

double f_statistic(const Eigen::VectorXd& lambda, Eigen::Index j, Norm norm, double K) {
  check_sorted_unit(lambda);
  if (j < 1 || j > lambda.size())
    throw DimensionError("f_statistic: j = " + std::to_string(j) + " outside [1, p]");
  if (!(K > 0)) throw DomainError("f_statistic: K must be positive");
  if (norm == Norm::Infinity) return K * kPi2 * (1.0 - lambda(j - 1));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < j; ++i) sum += 1.0 - lambda(i);
  return K * kPi2 * sum;
}

double f_statistic_grid(const std::vector<std::pair<double, Eigen::VectorXd>>& spectra,
                        Eigen::Index j, Norm norm) {
  if (spectra.empty()) throw DimensionError("f_statistic_grid: empty grid");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [K, lambda] : spectra)
    best = std::max(best, f_statistic(lambda, j, norm, K));
  return best;
}

TrendCountEstimate sequential_select(const Eigen::VectorXd& lambda, double K,
                                     const LimitLawStore& store, Norm norm, double eta) {
  check_sorted_unit(lambda);
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("sequential_select: eta outside (0,1)");
  const Eigen::Index p = lambda.size();
  TrendCountEstimate est;
  est.method = norm == Norm::One ? CountMethod::SeqF1 : CountMethod::SeqFinf;

  Eigen::Index selected = 0;
  for (Eigen::Index j = p; j >= 1; --j) {
    const double stat = f_statistic(lambda, j, norm, K);
    const double crit = store.table(j).quantile(norm, eta);
    est.diag_index.push_back(j);
    est.diagnostics.push_back(stat);
    if (stat <= crit) {
      selected = j;
      break;
    }
  }
  est.s_hat = selected;
  est.r_hat = p - selected;
  est.tie_set = {selected};
  return est;
}

IdentificationDecision identification_check(const TimeSeriesPanel& panel,
                                            const Eigen::MatrixXd& b,
                                            const DesignOperator& design,
                                            CountMethod method) {
  if (b.rows() != panel.p())
    throw DimensionError("identification_check: b has " + std::to_string(b.rows()) +
                         " rows, panel has " + std::to_string(panel.p()) + " series");
  SelectionMatrix sel = SelectionMatrix::custom(b);
  sel.validate();  // full column rank

  auto count = [&](const Eigen::MatrixXd& values) -> Eigen::Index {
    const CcaResult res = cca(values, design);
    switch (method) {
      case CountMethod::MaxGap:
        return max_gap(res.eigenvalues).s_hat;
      case CountMethod::F1:
      case CountMethod::F2:
      case CountMethod::F3:
        return argmax_criteria(res.eigenvalues, static_cast<double>(panel.T()),
                               static_cast<double>(design.K()), method)
            .s_hat;
      default:
        throw DomainError("identification_check: sequential methods need a table; "
                          "use max-gap or an argmax criterion");
    }
  };

  IdentificationDecision dec;
  dec.s_full = count(panel.values());
  dec.s_sub = count(panel.values() * b);
  dec.reject = dec.s_sub < dec.s_full;
  return dec;
}

MisspecDiagnostic misspec_diagnostic(const TimeSeriesPanel& panel, Eigen::Index s,
                                     const KGrid& grid, Norm norm,
                                     const LimitLawTable& table, double eta,
                                     StripeCenter center) {
  if (s < 0 || s > panel.p())
    throw DimensionError("misspec_diagnostic: s outside [1, p]");
  for (Eigen::Index K : grid.values)
    if (K > panel.T())
      throw DimensionError("misspec_diagnostic: grid point K = " + std::to_string(K) +
                           " exceeds T = " + std::to_string(panel.T()));
  std::vector<Eigen::VectorXd> spectra;
  if (s > 0) {
    for (Eigen::Index K : grid.values)
      spectra.push_back(cca(panel.values(), DesignOperator(build_design(K, panel.T())))
                            .eigenvalues);
  }
  return misspec_from_spectra(spectra, s, grid, norm, table, eta, center);
}

MisspecDiagnostic misspec_from_spectra(const std::vector<Eigen::VectorXd>& spectra,
                                       Eigen::Index s, const KGrid& grid, Norm norm,
                                       const LimitLawTable& table, double eta,
                                       StripeCenter center) {
  if (s <= 0)
    throw DimensionError("misspec diagnostic: undefined for s = 0 (tau is empty)");
  if (table.s != s)
    throw TableError("misspec diagnostic: table is for s = " + std::to_string(table.s) +
                     ", requested s = " + std::to_string(s));
  if (spectra.size() != grid.values.size())
    throw DimensionError("misspec diagnostic: one spectrum per grid point required");

  MisspecDiagnostic diag;
  diag.grid = grid;
  diag.norm = norm;
  diag.center = center;

  for (std::size_t i = 0; i < spectra.size(); ++i) {
    const Eigen::VectorXd& lambda = spectra[i];
    if (lambda.size() < s)
      throw DimensionError("misspec diagnostic: spectrum shorter than s");
    const double K = static_cast<double>(grid.values[i]);
    Eigen::VectorXd tau(s);
    for (Eigen::Index k = 0; k < s; ++k) tau(k) = 1.0 - lambda(s - 1 - k);
    const double stat =
        norm == Norm::One ? kPi2 * tau.sum() : kPi2 * tau.maxCoeff();
    diag.log_points.push_back({std::log(K), std::log(stat)});
    diag.tau.push_back(std::move(tau));
  }

  if (diag.log_points.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& pt : diag.log_points) {
      xs.push_back(pt[0]);
      ys.push_back(pt[1]);
    }
    diag.fitted_slope = ls_slope(xs, ys);
  } else {
    diag.fitted_slope = std::numeric_limits<double>::quiet_NaN();
  }

  auto [location, delta] = stripe_params(table, eta, center);
  diag.stripe_center = location;
  diag.stripe_delta = delta;
  const double base_K = static_cast<double>(grid.values.front());
  const Eigen::VectorXd log_stat =
      (base_K * kPi2 * diag.tau.front().array()).log();
  diag.inside_stripe = ((log_stat - location).cwiseAbs().maxCoeff() < delta);
  return diag;
}

}  // namespace trendcca
