#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "trendcca/errors.hpp"
#include "trendcca/mc.hpp"

using namespace trendcca;

TEST_CASE("dgp algebra: s = 0 with a = 1 yields pure innovations") {
  // with a = 1 the mean-reverting block is X_t = eps_t, so it must equal the
  // first difference of the pure random walk drawn from the same seed
  const DgpConfig iid{3, 0, 1.0, 100, 77};
  DgpConfig walk = iid;
  walk.s = 3;
  const TimeSeriesPanel noise = simulate_dgp(iid);
  const TimeSeriesPanel rw = simulate_dgp(walk);
  const Eigen::MatrixXd diffs = rw.differences();
  CHECK((noise.values() - diffs).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(rw.t0_row().has_value());
  CHECK(rw.t0_row()->isZero(0.0));
}

TEST_CASE("dgp is deterministic in the seed") {
  const DgpConfig cfg{4, 2, 0.75, 150, 5};
  const TimeSeriesPanel a = simulate_dgp(cfg);
  const TimeSeriesPanel b = simulate_dgp(cfg);
  CHECK(a.values() == b.values());
  DgpConfig other = cfg;
  other.seed = 6;
  CHECK(simulate_dgp(other).values() != a.values());
}

TEST_CASE("dgp validates its configuration") {
  CHECK_THROWS_AS(simulate_dgp({0, 0, 1.0, 50, 1}), DimensionError);
  CHECK_THROWS_AS(simulate_dgp({3, 4, 1.0, 50, 1}), DimensionError);
  CHECK_THROWS_AS(simulate_dgp({3, 1, 0.0, 50, 1}), DomainError);
  CHECK_THROWS_AS(simulate_dgp({3, 1, 1.0, 1, 1}), DimensionError);
}

TEST_CASE("run_grid counts correct selections and is reproducible") {
  std::vector<GridPoint> grid{{{3, 3, 1.0, 90, 0}, CountMethod::MaxGap},
                              {{3, 0, 1.0, 90, 0}, CountMethod::MaxGap}};
  RunGridOptions opts;
  opts.n_reps = 60;
  opts.seed = 2024;

  int cells_seen = 0;
  opts.on_cell = [&](const ExperimentResult&) { ++cells_seen; };
  const auto results = run_grid(grid, opts);
  CHECK(cells_seen == 2);
  REQUIRE(results.size() == 2);
  CHECK(results[0].K == default_K(90));
  CHECK(results[0].n_reps == 60);
  // random walks at T/p = 30 are detected essentially always
  CHECK(results[0].freq_correct > 0.9);
  CHECK(results[0].mae < 0.2);
  CHECK(results[0].mc_se ==
        doctest::Approx(std::sqrt(results[0].freq_correct * (1 - results[0].freq_correct) /
                                  static_cast<double>(results[0].n_reps))));

  opts.on_cell = nullptr;
  const auto again = run_grid(grid, opts);
  CHECK(again[0].freq_correct == results[0].freq_correct);
  CHECK(again[1].mae == results[1].mae);
}

TEST_CASE("run_grid honors a fixed K override") {
  std::vector<GridPoint> grid{{{2, 2, 1.0, 80, 0}, CountMethod::MaxGap}};
  RunGridOptions opts;
  opts.n_reps = 10;
  opts.fixed_K = 17;
  CHECK(run_grid(grid, opts)[0].K == 17);
}

TEST_CASE("sequential methods require tables") {
  std::vector<GridPoint> grid{{{2, 1, 1.0, 80, 0}, CountMethod::SeqF1}};
  RunGridOptions opts;
  opts.n_reps = 5;
  CHECK_THROWS_AS(run_grid(grid, opts), TableError);
}

TEST_CASE("run_grid drives the sequential tests against a table store") {
  const LimitLawStore store = LimitLawStore::build(3, {0.05}, 300, 3000, 404);
  std::vector<GridPoint> grid{{{3, 3, 1.0, 90, 0}, CountMethod::SeqFinf}};
  RunGridOptions opts;
  opts.n_reps = 40;
  opts.seed = 11;
  opts.tables = &store;
  const auto results = run_grid(grid, opts);
  // pure random walks at T/p = 30: the top test is almost never rejected
  CHECK(results[0].freq_correct > 0.8);
}

TEST_CASE("pooling merges duplicate cells with combined weight") {
  ExperimentResult a;
  a.p = 10;
  a.s = 5;
  a.a = 1.0;
  a.T = 100;
  a.K = 32;
  a.method = CountMethod::MaxGap;
  a.freq_correct = 1.0;
  a.mae = 0.0;
  a.n_reps = 100;
  ExperimentResult b = a;
  b.freq_correct = 0.5;
  b.mae = 1.0;
  b.n_reps = 300;

  const auto pooled = pool_duplicates({a, b});
  REQUIRE(pooled.size() == 1);
  CHECK(pooled[0].n_reps == 400);
  CHECK(pooled[0].freq_correct == doctest::Approx(0.625));
  CHECK(pooled[0].mae == doctest::Approx(0.75));

  ExperimentResult c = a;
  c.T = 200;  // different cell stays separate
  CHECK(pool_duplicates({a, b, c}).size() == 2);
}

TEST_CASE("emit_tables writes the table files") {
  ExperimentResult r;
  r.p = 10;
  r.s = 5;
  r.a = 1.0;
  r.T = 100;
  r.K = 32;
  r.method = CountMethod::MaxGap;
  r.freq_correct = 0.97;
  r.mae = 0.05;
  r.mc_se = 0.005;
  r.n_reps = 500;

  const auto dir = std::filesystem::temp_directory_path() / "trendcca_test_tables";
  std::filesystem::remove_all(dir);
  emit_tables({r}, dir);
  for (const char* name : {"freq.csv", "mae.csv", "results.csv", "results.json"})
    CHECK(std::filesystem::exists(dir / name));

  std::ifstream in(dir / "freq.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "p,T_over_p,maxgap|s=5|a=1");
  CHECK(row.substr(0, 5) == "10,10");

  CHECK_THROWS_AS(emit_tables({}, dir), DimensionError);
  std::filesystem::remove_all(dir);
}
