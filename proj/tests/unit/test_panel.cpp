#include <doctest.h>

#include <cmath>
#include <sstream>

#include "trendcca/errors.hpp"
#include "trendcca/panel.hpp"

using namespace trendcca;

namespace {

TimeSeriesPanel panel_from(std::initializer_list<std::initializer_list<double>> rows) {
  const Eigen::Index T = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(rows.begin()->size());
  Eigen::MatrixXd values(T, p);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) values(i, j++) = v;
    ++i;
  }
  std::vector<std::string> labels;
  for (Eigen::Index j = 0; j < p; ++j) labels.push_back("x" + std::to_string(j + 1));
  return TimeSeriesPanel(values, labels);
}

}  // namespace

TEST_CASE("csv ingestion parses a small panel") {
  std::istringstream in("a,b\n1,2\n3,4\n5,6\n");
  const TimeSeriesPanel panel = parse_csv(in);
  CHECK(panel.T() == 3);
  CHECK(panel.p() == 2);
  CHECK(panel.labels() == std::vector<std::string>{"a", "b"});
  CHECK(panel.values()(0, 0) == 1.0);
  CHECK(panel.values()(2, 1) == 6.0);
  CHECK(panel.provenance().empty());
  CHECK(!panel.t0_row().has_value());
}

TEST_CASE("csv ingestion rejects gaps, garbage and short files") {
  SUBCASE("empty cell names the location") {
    std::istringstream in("a,b\n1,2\n3,\n5,6\n");
    CHECK_THROWS_WITH_AS(parse_csv(in), doctest::Contains("column 'b'"), ParseError);
  }
  SUBCASE("non-numeric cell") {
    std::istringstream in("a,b\n1,2\nx,4\n");
    CHECK_THROWS_AS(parse_csv(in), ParseError);
  }
  SUBCASE("fewer than two rows") {
    std::istringstream in("a,b\n1,2\n");
    CHECK_THROWS_AS(parse_csv(in), DimensionError);
  }
  SUBCASE("ragged row") {
    std::istringstream in("a,b\n1,2\n1,2,3\n");
    CHECK_THROWS_AS(parse_csv(in), ParseError);
  }
}

TEST_CASE("csv ingestion at the empirical panel scale") {
  std::ostringstream file;
  for (int j = 0; j < 20; ++j) file << (j ? "," : "") << "s" << j + 1;
  file << "\n";
  for (int t = 0; t < 667; ++t) {
    for (int j = 0; j < 20; ++j) file << (j ? "," : "") << 0.01 * t + 0.001 * j + 1.0;
    file << "\n";
  }
  std::istringstream in(file.str());
  const TimeSeriesPanel panel = parse_csv(in);
  CHECK(panel.T() == 667);
  CHECK(panel.p() == 20);
}

TEST_CASE("csv ingestion drops a declared time column") {
  std::istringstream in("date,a,b\n2020-01-01,1,2\n2020-01-02,3,4\n");
  CsvSchema schema;
  schema.time_column = "date";
  const TimeSeriesPanel panel = parse_csv(in, schema);
  CHECK(panel.p() == 2);
  CHECK(panel.labels() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("preprocess applies exact logs") {
  const double e = std::exp(1.0);
  const TimeSeriesPanel panel = panel_from({{1.0}, {e}, {e * e}});
  const TimeSeriesPanel out = preprocess(panel, true, false, InitMode::Levels);
  CHECK(out.values()(0, 0) == doctest::Approx(0.0));
  CHECK(out.values()(1, 0) == doctest::Approx(1.0));
  CHECK(out.values()(2, 0) == doctest::Approx(2.0));
}

TEST_CASE("preprocess normalize_start subtracts the first row") {
  const TimeSeriesPanel out =
      preprocess(panel_from({{5.0}, {7.0}, {9.0}}), false, true, InitMode::Levels);
  CHECK(out.values()(0, 0) == 0.0);
  CHECK(out.values()(1, 0) == 2.0);
  CHECK(out.values()(2, 0) == 4.0);
}

TEST_CASE("preprocess levels mode is the identity on values") {
  const TimeSeriesPanel panel = panel_from({{5.0, 1.0}, {7.0, 2.0}, {9.0, 4.0}});
  const TimeSeriesPanel out = preprocess(panel, false, false, InitMode::Levels);
  CHECK(out.values() == panel.values());
  // levels mode records the first data row as x_0
  REQUIRE(out.t0_row().has_value());
  CHECK((*out.t0_row())(1) == 1.0);
}

TEST_CASE("preprocess difference-from-start zeroes the first analysis row") {
  const TimeSeriesPanel out = preprocess(panel_from({{5.0, 1.0}, {7.0, 2.0}, {9.0, 4.0}}),
                                         false, false, InitMode::DifferenceFromStart);
  CHECK(out.values().row(0).isZero(0.0));
  CHECK(out.values()(1, 0) == 2.0);
  CHECK(out.values()(2, 1) == 3.0);
  REQUIRE(out.t0_row().has_value());
  CHECK(out.t0_row()->isZero(0.0));
}

TEST_CASE("preprocess rejects logs of non-positive data") {
  CHECK_THROWS_AS(preprocess(panel_from({{1.0}, {-2.0}}), true, false, InitMode::Levels),
                  DomainError);
}

TEST_CASE("differences use the stored initial row") {
  TimeSeriesPanel panel = preprocess(panel_from({{5.0}, {7.0}, {9.0}}), false, false,
                                     InitMode::Levels);
  const Eigen::MatrixXd dx = panel.differences();
  CHECK(dx(0, 0) == 0.0);  // x_1 - x_0 with x_0 = first data row
  CHECK(dx(1, 0) == 2.0);
  CHECK(dx(2, 0) == 2.0);
}

TEST_CASE("selection: subset keeps columns and names") {
  const TimeSeriesPanel panel = panel_from({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  const TimeSeriesPanel out = apply_selection(panel, SelectionMatrix::subset(3, {0, 1}));
  CHECK(out.p() == 2);
  CHECK(out.values().col(0) == panel.values().col(0));
  CHECK(out.values().col(1) == panel.values().col(1));
  CHECK(out.labels() == std::vector<std::string>{"x1", "x2"});
}

TEST_CASE("selection: equal-weight aggregation is the cross-sectional mean") {
  const TimeSeriesPanel panel = panel_from({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  const TimeSeriesPanel out = apply_selection(panel, SelectionMatrix::aggregate(3, {{0, 1, 2}}));
  CHECK(out.p() == 1);
  CHECK(out.values()(0, 0) == doctest::Approx(2.0));
  CHECK(out.values()(2, 0) == doctest::Approx(8.0));
  CHECK(out.labels()[0] == "avg(x1+x2+x3)");
}

TEST_CASE("selection: identity H leaves values unchanged") {
  const TimeSeriesPanel panel = panel_from({{1, 2}, {3, 4}, {5, 6}});
  const TimeSeriesPanel out =
      apply_selection(panel, SelectionMatrix::custom(Eigen::MatrixXd::Identity(2, 2)));
  CHECK(out.values() == panel.values());
}

TEST_CASE("selection: rank-deficient and mismatched H are rejected") {
  const TimeSeriesPanel panel = panel_from({{1, 2}, {3, 4}, {5, 6}});
  Eigen::MatrixXd h(2, 2);
  h << 1, 2, 2, 4;
  CHECK_THROWS_AS(apply_selection(panel, SelectionMatrix::custom(h)), DimensionError);
  CHECK_THROWS_AS(apply_selection(panel, SelectionMatrix::custom(Eigen::MatrixXd::Ones(3, 1))),
                  DimensionError);
}

TEST_CASE("selection composes: (x H1) H2 equals x (H1 H2)") {
  const TimeSeriesPanel panel =
      panel_from({{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 1, 2, 3}, {4, 6, 5, 2}});
  Eigen::MatrixXd h1(4, 3), h2(3, 2);
  h1 << 1, 0, 0, 0, 1, 0, 0, 0, 1, 0.5, 0.5, 0.5;
  h2 << 1, 0.2, 0, 1, 1, -0.4;
  const TimeSeriesPanel two_steps = apply_selection(
      apply_selection(panel, SelectionMatrix::custom(h1)), SelectionMatrix::custom(h2));
  const TimeSeriesPanel one_step_sel =
      apply_selection(panel, SelectionMatrix::custom(h1 * h2));
  CHECK((two_steps.values() - one_step_sel.values()).cwiseAbs().maxCoeff() < 1e-12);
}
