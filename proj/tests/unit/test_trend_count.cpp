#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "trendcca/errors.hpp"
#include "trendcca/mc.hpp"
#include "trendcca/rng.hpp"
#include "trendcca/trend_count.hpp"

using namespace trendcca;

namespace {

Eigen::VectorXd lam(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// small shared store for the sequential tests; coarse but adequate here
const LimitLawStore& tiny_store() {
  static const LimitLawStore store =
      LimitLawStore::build(4, {0.01, 0.05, 0.10}, 400, 4000, 99);
  return store;
}

}  // namespace

TEST_CASE("max-gap picks the largest spectral gap") {
  SUBCASE("interior gap") {
    const TrendCountEstimate est = max_gap(lam({0.99, 0.95, 0.30, 0.05}));
    CHECK(est.s_hat == 2);
    CHECK(est.r_hat == 2);
    CHECK(est.diagnostics[2] == doctest::Approx(0.65));
  }
  SUBCASE("random-walk-like spectrum selects s = p") {
    CHECK(max_gap(lam({0.999, 0.998})).s_hat == 2);
  }
  SUBCASE("stationary-like spectrum selects s = 0") {
    CHECK(max_gap(lam({0.02, 0.01})).s_hat == 0);
  }
  SUBCASE("ties resolve to the smallest index and are reported") {
    const TrendCountEstimate est = max_gap(lam({0.75, 0.5, 0.25}));
    CHECK(est.s_hat == 0);
    CHECK(est.tie_set == std::vector<Eigen::Index>{0, 1, 2, 3});
  }
  SUBCASE("unsorted input is rejected") {
    CHECK_THROWS_AS(max_gap(lam({0.5, 0.9})), DomainError);
    CHECK_THROWS_AS(max_gap(lam({1.5, 0.9})), DomainError);
  }
}

TEST_CASE("max-gap selects p whenever the smallest eigenvalue dominates every gap") {
  // lambda_p exceeding every adjacent gap (including the 1 - lambda_1
  // boundary gap) forces the argmax to i = p
  auto rng = make_substream(17, 17);
  std::uniform_real_distribution<double> unif(0.7, 1.0);
  int asserted = 0;
  for (int inst = 0; inst < 200; ++inst) {
    Eigen::VectorXd lambda(4);
    for (int i = 0; i < 4; ++i) lambda(i) = unif(rng);
    std::sort(lambda.data(), lambda.data() + 4, std::greater<double>());
    bool dominates = true;
    for (int i = 0; i < 4; ++i) {
      const double hi = i == 0 ? 1.0 : lambda(i - 1);
      if (!(lambda(3) > hi - lambda(i))) dominates = false;
    }
    if (dominates) {
      CHECK(max_gap(lambda).s_hat == 4);
      ++asserted;
    }
  }
  CHECK(asserted > 0);  // the sampler does hit the regime
}

TEST_CASE("argmax criteria evaluate the published formulas") {
  SUBCASE("f1") {
    const TrendCountEstimate est = argmax_criteria(lam({0.9, 0.1}), 100, 10, CountMethod::F1);
    CHECK(est.s_hat == 1);
    REQUIRE(est.diagnostics.size() == 3);
    CHECK(std::exp(est.diagnostics[0]) == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK(std::exp(est.diagnostics[1]) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(std::exp(est.diagnostics[2]) == doctest::Approx(0.09).epsilon(1e-12));
  }
  SUBCASE("f2") {
    const TrendCountEstimate est =
        argmax_criteria(lam({0.9, 0.6, 0.1}), 100, 10, CountMethod::F2);
    CHECK(est.s_hat == 2);
    CHECK(est.diagnostics[0] == doctest::Approx(1.5));
    CHECK(est.diagnostics[1] == doctest::Approx(6.0));
  }
  SUBCASE("f3") {
    const TrendCountEstimate est =
        argmax_criteria(lam({0.9, 0.5, 0.4, 0.2}), 100, 10, CountMethod::F3);
    CHECK(est.s_hat == 1);
    CHECK(est.diagnostics[0] == doctest::Approx(0.9863).epsilon(1e-3));
    CHECK(est.diagnostics[1] == doctest::Approx(0.5517).epsilon(1e-3));
  }
  SUBCASE("include_zero extends the admissible set") {
    const TrendCountEstimate est =
        argmax_criteria(lam({0.1, 0.05, 0.02}), 100, 10, CountMethod::F2, true);
    CHECK(est.diag_index.front() == 0);
    CHECK(est.s_hat == 0);  // 1/0.1 = 10 beats the interior ratios
  }
  SUBCASE("p too small for f3") {
    CHECK_THROWS_AS(argmax_criteria(lam({0.9, 0.5}), 100, 10, CountMethod::F3),
                    DimensionError);
    CHECK_NOTHROW(argmax_criteria(lam({0.9, 0.5}), 100, 10, CountMethod::F3, true));
  }
}

TEST_CASE("f1 at K = T reduces to the unscaled product criterion") {
  const Eigen::VectorXd lambda = lam({0.95, 0.7, 0.3, 0.1});
  const TrendCountEstimate est = argmax_criteria(lambda, 50, 50, CountMethod::F1);
  for (std::size_t i = 0; i < est.diagnostics.size(); ++i) {
    double head = 1.0, tail = 1.0;
    for (Eigen::Index h = 0; h < lambda.size(); ++h)
      (h < static_cast<Eigen::Index>(i) ? head : tail) *= lambda(h);
    CHECK(std::exp(est.diagnostics[i]) == doctest::Approx(head / tail).epsilon(1e-12));
  }
}

TEST_CASE("f1 survives zero eigenvalues via the log-space floor") {
  const TrendCountEstimate est = argmax_criteria(lam({0.9, 0.0}), 300, 30, CountMethod::F1);
  CHECK(est.s_hat >= 1);  // anything with the zero in the numerator loses
  CHECK(std::isinf(est.diagnostics[2]));
}

TEST_CASE("pivotal statistics") {
  SUBCASE("closed form") {
    const double stat = f_statistic(lam({0.9995, 0.999}), 2, Norm::Infinity, 100);
    CHECK(stat == doctest::Approx(100 * std::numbers::pi * std::numbers::pi * 0.001)
                      .epsilon(1e-12));
  }
  SUBCASE("j = 1 makes both norms coincide") {
    const Eigen::VectorXd lambda = lam({0.98, 0.9, 0.5});
    CHECK(f_statistic(lambda, 1, Norm::One, 64) ==
          doctest::Approx(f_statistic(lambda, 1, Norm::Infinity, 64)).epsilon(1e-15));
  }
  SUBCASE("lambda_j = 1 gives a zero statistic") {
    CHECK(f_statistic(lam({1.0, 0.5}), 1, Norm::Infinity, 64) == 0.0);
  }
  SUBCASE("j out of range") {
    CHECK_THROWS_AS(f_statistic(lam({0.9}), 2, Norm::One, 64), DimensionError);
    CHECK_THROWS_AS(f_statistic(lam({0.9}), 0, Norm::One, 64), DimensionError);
  }
  SUBCASE("grid variant takes the max") {
    std::vector<std::pair<double, Eigen::VectorXd>> spectra{{50.0, lam({0.99, 0.9})},
                                                            {100.0, lam({0.997, 0.95})}};
    const double expect = std::max(f_statistic(spectra[0].second, 1, Norm::Infinity, 50),
                                   f_statistic(spectra[1].second, 1, Norm::Infinity, 100));
    CHECK(f_statistic_grid(spectra, 1, Norm::Infinity) == doctest::Approx(expect));
  }
}

TEST_CASE("sequential selection walks down from j = p") {
  SUBCASE("all statistics below the critical values stop at p") {
    // lambda so close to one that K pi^2 (1 - lambda) is tiny
    const TrendCountEstimate est =
        sequential_select(lam({0.99999, 0.99998, 0.99997}), 100, tiny_store(),
                          Norm::Infinity, 0.05);
    CHECK(est.s_hat == 3);
    CHECK(est.diag_index == std::vector<Eigen::Index>{3});
  }
  SUBCASE("all statistics above the critical values descend to 0") {
    const TrendCountEstimate est =
        sequential_select(lam({0.5, 0.4, 0.3}), 100, tiny_store(), Norm::One, 0.05);
    CHECK(est.s_hat == 0);
    CHECK(est.diag_index.size() == 3);
  }
  SUBCASE("missing table entry raises") {
    CHECK_THROWS_AS(sequential_select(lam({0.5, 0.4, 0.3, 0.2, 0.1}), 100, tiny_store(),
                                      Norm::One, 0.05),
                    TableError);  // store only covers s <= 4
  }
}

TEST_CASE("sequential selection is monotone in the critical values") {
  // lowering eta raises every quantile, so s_hat can only move up
  auto rng = make_substream(7, 7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int inst = 0; inst < 50; ++inst) {
    Eigen::VectorXd lambda(4);
    for (int i = 0; i < 4; ++i) lambda(i) = unif(rng);
    std::sort(lambda.data(), lambda.data() + 4, std::greater<double>());
    const Eigen::Index loose = sequential_select(lambda, 80, tiny_store(), Norm::One, 0.10).s_hat;
    const Eigen::Index tight = sequential_select(lambda, 80, tiny_store(), Norm::One, 0.01).s_hat;
    CHECK(tight >= loose);
  }
}

TEST_CASE("counting methods are invariant to diagonal rescaling of the panel") {
  const DgpConfig cfg{4, 2, 1.0, 240, 77};
  const TimeSeriesPanel panel = simulate_dgp(cfg);
  Eigen::VectorXd scale(4);
  scale << 3.0, 0.04, -7.0, 1.5;
  const TimeSeriesPanel scaled(panel.values() * scale.asDiagonal(), panel.labels());

  const DesignOperator design(build_design(default_K(cfg.T), cfg.T));
  const Eigen::VectorXd l1 = cca(panel.values(), design).eigenvalues;
  const Eigen::VectorXd l2 = cca(scaled.values(), design).eigenvalues;

  CHECK(max_gap(l1).s_hat == max_gap(l2).s_hat);
  for (CountMethod m : {CountMethod::F1, CountMethod::F2, CountMethod::F3})
    CHECK(argmax_criteria(l1, cfg.T, design.K(), m).s_hat ==
          argmax_criteria(l2, cfg.T, design.K(), m).s_hat);
}

TEST_CASE("identification check accepts the identity transform") {
  const TimeSeriesPanel panel = simulate_dgp({3, 3, 1.0, 200, 5});
  const DesignOperator design(build_design(default_K(200), 200));
  const IdentificationDecision dec =
      identification_check(panel, Eigen::MatrixXd::Identity(3, 3), design);
  CHECK_FALSE(dec.reject);
  CHECK(dec.s_full == dec.s_sub);
  CHECK_THROWS_AS(
      identification_check(panel, Eigen::MatrixXd::Ones(3, 2), design),
      DimensionError);  // rank-deficient b
}

TEST_CASE("misspec diagnostic rejects s = 0 and oversized grids") {
  const TimeSeriesPanel panel = simulate_dgp({3, 2, 1.0, 150, 6});
  const LimitLawTable& table = tiny_store().table(2);
  CHECK_THROWS_AS(
      misspec_diagnostic(panel, 0, k_grid(30, 1, 1), Norm::Infinity, table, 0.05),
      DimensionError);
  CHECK_THROWS_AS(
      misspec_diagnostic(panel, 2, k_grid(100, 1, 3), Norm::Infinity, table, 0.05),
      DimensionError);  // 400 > T
  CHECK_THROWS_AS(
      misspec_diagnostic(panel, 3, k_grid(30, 1, 1), Norm::Infinity, table, 0.05),
      TableError);  // table is for s = 2
}

TEST_CASE("misspec diagnostic emits one log point per grid entry") {
  const TimeSeriesPanel panel = simulate_dgp({3, 2, 1.0, 300, 8});
  const KGrid grid = k_grid(40, 1, 2);
  const MisspecDiagnostic diag =
      misspec_diagnostic(panel, 2, grid, Norm::One, tiny_store().table(2), 0.05);
  CHECK(diag.log_points.size() == 3);
  CHECK(diag.tau.size() == 3);
  for (const auto& tau : diag.tau) {
    CHECK(tau.size() == 2);
    CHECK(tau(0) >= tau(1));
    CHECK(tau(1) >= 0.0);
  }
  CHECK(std::isfinite(diag.fitted_slope));
  CHECK(diag.stripe_center.size() == 2);
  CHECK(diag.stripe_delta > 0.0);
}
