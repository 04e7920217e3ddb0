#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "trendcca/errors.hpp"
#include "trendcca/limit_law.hpp"
#include "trendcca/rng.hpp"
#include "trendcca/stats.hpp"

using namespace trendcca;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("trendcca_test_" + name);
}

double quantile_se(const std::vector<double>& sorted, double q) {
  // density estimated by a central quantile difference
  const double eps = 0.01;
  const double dq = quantile_sorted(sorted, std::min(1.0, q + eps)) -
                    quantile_sorted(sorted, std::max(0.0, q - eps));
  const double density = 2.0 * eps / dq;
  return std::sqrt(q * (1.0 - q) / static_cast<double>(sorted.size())) / density;
}

std::vector<double> trace_norms(const ZetaSample& sample) {
  std::vector<double> out(static_cast<std::size_t>(sample.values.rows()));
  for (Eigen::Index r = 0; r < sample.values.rows(); ++r)
    out[static_cast<std::size_t>(r)] = sample.values.row(r).sum();
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("scalar limit spectrum: mean of 1/zeta matches the analytic moment") {
  // E int_0^1 B(u)^2 du = 1/2; loose n_reps here, the tight version is in
  // the acceptance suite
  const ZetaSample sample = simulate_zeta(1, 2000, 20000, 42);
  double mean_inv = 0;
  for (Eigen::Index r = 0; r < sample.values.rows(); ++r)
    mean_inv += 1.0 / sample.values(r, 0);
  mean_inv /= static_cast<double>(sample.values.rows());
  CHECK(mean_inv == doctest::Approx(0.5).epsilon(0.04));
  // Jensen: E zeta = E[1/X] > 1/E[X] = 2
  CHECK(sample.values.col(0).mean() > 2.0);
}

TEST_CASE("zeta draws are positive and ordered") {
  const ZetaSample sample = simulate_zeta(3, 500, 500, 7);
  for (Eigen::Index r = 0; r < sample.values.rows(); ++r) {
    CHECK(sample.values(r, 2) > 0.0);
    CHECK(sample.values(r, 0) >= sample.values(r, 1));
    CHECK(sample.values(r, 1) >= sample.values(r, 2));
  }
  CHECK(sample.redraws == 0);
}

TEST_CASE("zeta simulation is reproducible and seed-sensitive") {
  const ZetaSample a = simulate_zeta(2, 300, 200, 11);
  const ZetaSample b = simulate_zeta(2, 300, 200, 11);
  const ZetaSample c = simulate_zeta(2, 300, 200, 12);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
}

TEST_CASE("results do not depend on the thread count") {
  ZetaOptions serial;
  serial.n_steps = 300;
  serial.n_reps = 500;
  serial.seed = 13;
  serial.threads = 1;
  ZetaOptions parallel = serial;
  parallel.threads = 4;
  CHECK(simulate_zeta(3, serial).values == simulate_zeta(3, parallel).values);
}

TEST_CASE("zeta law is invariant to a fixed rotation of the innovations") {
  // same seed, innovations rotated by a fixed orthogonal matrix: the law is
  // unchanged, so the trace quantiles agree within Monte Carlo error
  Eigen::MatrixXd rot(2, 2);
  const double c = std::cos(0.73), s = std::sin(0.73);
  rot << c, -s, s, c;

  ZetaOptions opts;
  opts.n_steps = 500;
  opts.n_reps = 10000;
  opts.seed = 21;
  const ZetaSample plain = simulate_zeta(2, opts);
  opts.innovation_rotation = &rot;
  const ZetaSample rotated = simulate_zeta(2, opts);

  const std::vector<double> t1 = trace_norms(plain);
  const std::vector<double> t2 = trace_norms(rotated);
  const double q1 = quantile_sorted(t1, 0.95);
  const double q2 = quantile_sorted(t2, 0.95);
  const double se = std::hypot(quantile_se(t1, 0.95), quantile_se(t2, 0.95));
  CHECK(std::abs(q1 - q2) < 3.0 * se);
}

TEST_CASE("doubling n_reps shrinks the bootstrap quantile error accordingly") {
  auto bootstrap_se = [](const std::vector<double>& sorted, std::uint64_t seed) {
    auto rng = make_substream(seed, 1);
    std::uniform_int_distribution<std::size_t> pick(0, sorted.size() - 1);
    std::vector<double> qs;
    std::vector<double> resample(sorted.size());
    for (int b = 0; b < 400; ++b) {
      for (auto& v : resample) v = sorted[pick(rng)];
      qs.push_back(quantile(resample, 0.95));
    }
    double m = 0;
    for (double q : qs) m += q;
    m /= static_cast<double>(qs.size());
    double var = 0;
    for (double q : qs) var += (q - m) * (q - m);
    return std::sqrt(var / static_cast<double>(qs.size() - 1));
  };

  const std::vector<double> small = trace_norms(simulate_zeta(1, 300, 5000, 31));
  const std::vector<double> big = trace_norms(simulate_zeta(1, 300, 10000, 32));
  const double ratio = bootstrap_se(big, 1) / bootstrap_se(small, 2);
  // ideal ratio 1/sqrt(2) ~ 0.707; within factor 1.5 of halving
  CHECK(ratio < 0.75);
  CHECK(ratio > 1.0 / 3.0);
}

TEST_CASE("tables cover every requested level with monotone quantiles") {
  const LimitLawStore store = LimitLawStore::build(3, {0.10, 0.05, 0.01}, 400, 3000, 5);
  for (Eigen::Index s = 1; s <= 3; ++s) {
    REQUIRE(store.has(s));
    const LimitLawTable& t = store.table(s);
    // smaller eta = larger quantile
    CHECK(t.quantile(Norm::One, 0.10) <= t.quantile(Norm::One, 0.05));
    CHECK(t.quantile(Norm::One, 0.05) <= t.quantile(Norm::One, 0.01));
    CHECK(t.quantile(Norm::Infinity, 0.10) <= t.quantile(Norm::Infinity, 0.05));
    CHECK(t.stripe_delta(0.10) <= t.stripe_delta(0.05));
    // mean_log ordered like zeta itself
    for (Eigen::Index i = 1; i < s; ++i) CHECK(t.mean_log(i) <= t.mean_log(i - 1));
    // trace dominates the max componentwise
    CHECK(t.quantile(Norm::One, 0.05) >= t.quantile(Norm::Infinity, 0.05) - 1e-12);
  }
  CHECK_THROWS_AS(store.table(4), TableError);
  CHECK_THROWS_AS(store.table(1).quantile(Norm::One, 0.025), TableError);
}

TEST_CASE("stripe parameters") {
  const LimitLawStore store = LimitLawStore::build(2, {0.05, 0.10}, 400, 3000, 6);
  const auto [center, delta] = stripe_params(store.table(2), 0.05);
  CHECK(center.size() == 2);
  CHECK(delta > 0.0);
  const auto [center1, delta1] = stripe_params(store.table(1), 0.05);
  CHECK(center1.size() == 1);  // the stripe reduces to an interval
  CHECK_THROWS_AS(stripe_params(store.table(2), 0.5), TableError);

  SUBCASE("median location option") {
    const auto [med, med_delta] = stripe_params(store.table(2), 0.05, StripeCenter::Median);
    CHECK(med == store.table(2).median_log);
    CHECK(med_delta > 0.0);
    CHECK(med(1) <= med(0));  // ordered like zeta
    CHECK(med != center);     // distinct location indicator
  }
}

TEST_CASE("store cache round-trips and refuses version mismatches") {
  const auto path = temp_file("tables.json");
  const LimitLawStore store = LimitLawStore::build(2, {0.05}, 300, 1000, 17);
  store.save(path);

  const LimitLawStore loaded = LimitLawStore::load(path);
  CHECK(loaded.n_steps() == 300);
  CHECK(loaded.n_reps() == 1000);
  CHECK(loaded.seed() == 17);
  CHECK(loaded.table(2).quantile(Norm::One, 0.05) ==
        doctest::Approx(store.table(2).quantile(Norm::One, 0.05)).epsilon(1e-15));
  CHECK(loaded.content_hash() == store.content_hash());

  // tamper with the version field
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  const auto pos = text.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("\"format_version\": 1").size(), "\"format_version\": 999");
  std::ofstream out(path);
  out << text;
  out.close();
  CHECK_THROWS_WITH_AS(LimitLawStore::load(path), doctest::Contains("version"), TableError);
  std::filesystem::remove(path);
}

TEST_CASE("extend_to adds missing dimensions with the same provenance") {
  LimitLawStore store = LimitLawStore::build(1, {0.05}, 300, 800, 23);
  CHECK_FALSE(store.has(2));
  store.extend_to(2);
  CHECK(store.has(2));
  CHECK(store.available() == std::vector<Eigen::Index>{1, 2});
  // deterministic: rebuilding from scratch gives the same table
  const LimitLawStore direct = LimitLawStore::build(2, {0.05}, 300, 800, 23);
  CHECK(store.table(2).quantile(Norm::One, 0.05) ==
        doctest::Approx(direct.table(2).quantile(Norm::One, 0.05)).epsilon(1e-15));
}

TEST_CASE("invalid simulation arguments are rejected") {
  CHECK_THROWS_AS(simulate_zeta(0, 100, 100, 1), DimensionError);
  CHECK_THROWS_AS(simulate_zeta(1, 0, 100, 1), DimensionError);
  CHECK_THROWS_AS(LimitLawStore::build(2, {}, 100, 100, 1), DimensionError);
  CHECK_THROWS_AS(LimitLawStore::build(2, {1.5}, 100, 100, 1), DomainError);
}
