// Estimators and tests for the number of stochastic trends s (and the
// cointegration rank r = p - s) from the squared canonical correlations.
//
//  * max-gap: argmax over i of lambda_i - lambda_{i+1} with lambda_0 = 1,
//    lambda_{p+1} = 0;
//  * argmax criteria f1 (rate-weighted product ratio), f2 (eigenvalue
//    ratio), f3 (growth ratio), each over its admissible index set;
//  * pivotal statistics F_{j,1} = K pi^2 sum_{i<=j}(1 - lambda_i) and
//    F_{j,inf} = K pi^2 (1 - lambda_j), with top-down sequential testing
//    against simulated limit-law quantiles;
//  * the identification decision rule comparing counts before and after a
//    full-rank linear transform;
//  * the log-log misspecification diagnostic and confidence stripe.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "trendcca/basis.hpp"
#include "trendcca/cca.hpp"
#include "trendcca/limit_law.hpp"
#include "trendcca/panel.hpp"

namespace trendcca {

enum class CountMethod { MaxGap, F1, F2, F3, SeqF1, SeqFinf };

const char* count_method_name(CountMethod m);
std::optional<CountMethod> parse_count_method(const std::string& name);

struct TrendCountEstimate {
  Eigen::Index s_hat = 0;
  Eigen::Index r_hat = 0;
  CountMethod method = CountMethod::MaxGap;
  // All argmax indices under exact ties (resolved to the smallest), or the
  // tested j values for the sequential methods.
  std::vector<Eigen::Index> tie_set;
  // Criterion values aligned with diag_index, or the test trajectory
  // (statistic values) for the sequential methods.
  std::vector<Eigen::Index> diag_index;
  std::vector<double> diagnostics;
};

// lambda must be sorted non-increasing with entries in [0,1].
TrendCountEstimate max_gap(const Eigen::VectorXd& lambda);

// which must be F1, F2 or F3.  T and K enter only through f1's rate T/K.
// include_zero extends f2/f3 to i = 0 via lambda_0 := 1.
TrendCountEstimate argmax_criteria(const Eigen::VectorXd& lambda, double T, double K,
                                   CountMethod which, bool include_zero = false);

// F_{j,n} for a single K; 1 <= j <= p.  Pivotal only for the KL basis.
double f_statistic(const Eigen::VectorXd& lambda, Eigen::Index j, Norm norm, double K);

// max over the grid of F statistics computed from per-K_i spectra.
double f_statistic_grid(const std::vector<std::pair<double, Eigen::VectorXd>>& spectra,
                        Eigen::Index j, Norm norm);

// Tests H0: s = j for j = p..1 at level eta, returning the first
// non-rejected j (0 when every j is rejected).  The store must cover the
// (1-eta) quantiles for s = 1..p.
TrendCountEstimate sequential_select(const Eigen::VectorXd& lambda, double K,
                                     const LimitLawStore& store, Norm norm, double eta);

struct IdentificationDecision {
  bool reject = false;      // reject H0: rank(b' psi) = s
  Eigen::Index s_full = 0;  // count on the original panel
  Eigen::Index s_sub = 0;   // count on the transformed panel b' x
};

// Counts trends on x and on b' x with the same estimator and rejects when
// the transformed panel shows fewer.  b must be p x s of full column rank.
IdentificationDecision identification_check(const TimeSeriesPanel& panel,
                                            const Eigen::MatrixXd& b,
                                            const DesignOperator& design,
                                            CountMethod method = CountMethod::MaxGap);

struct MisspecDiagnostic {
  KGrid grid;
  Norm norm = Norm::Infinity;
  std::vector<Eigen::VectorXd> tau;              // per K_i, length s, non-increasing
  std::vector<std::array<double, 2>> log_points; // (log K_i, log ||pi^2 tau||_n)
  double fitted_slope = 0;                       // NaN when the grid has one point
  Eigen::VectorXd stripe_center;                 // location of log zeta^(s)
  double stripe_delta = 0;
  bool inside_stripe = false;
  StripeCenter center = StripeCenter::Mean;
};

// Recomputes the CCA for every K_i in the grid.  The stripe check uses the
// base K only.  s = 0 is rejected (tau is empty).  Grid values must not
// exceed T.
MisspecDiagnostic misspec_diagnostic(const TimeSeriesPanel& panel, Eigen::Index s,
                                     const KGrid& grid, Norm norm,
                                     const LimitLawTable& table, double eta,
                                     StripeCenter center = StripeCenter::Mean);

// Same diagnostic from precomputed spectra (one eigenvalue vector per grid
// point, aligned with grid.values); lets callers share design operators
// across replications.
MisspecDiagnostic misspec_from_spectra(const std::vector<Eigen::VectorXd>& spectra,
                                       Eigen::Index s, const KGrid& grid, Norm norm,
                                       const LimitLawTable& table, double eta,
                                       StripeCenter center = StripeCenter::Mean);

}  // namespace trendcca
