#include <doctest.h>

#include <cmath>
#include <numbers>

#include "trendcca/basis.hpp"
#include "trendcca/errors.hpp"

using namespace trendcca;

TEST_CASE("sine-basis frequencies") {
  const Eigen::VectorXd nu = kl_frequencies(10);
  CHECK(nu(0) == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-12));
  CHECK(nu(1) == doctest::Approx(2.0 / (3.0 * std::numbers::pi)).epsilon(1e-12));
  for (Eigen::Index k = 1; k < 10; ++k) CHECK(nu(k) < nu(k - 1));
  // nu_k (k - 1/2) pi = 1 identically
  for (Eigen::Index k = 1; k <= 10; ++k)
    CHECK(std::abs(nu(k - 1) * (k - 0.5) * std::numbers::pi - 1.0) < 1e-14);
  CHECK_THROWS_AS(kl_frequencies(0), DimensionError);
}

TEST_CASE("design matrix evaluates the basis on the t/T grid") {
  const BasisMatrix d = build_design(3, 4);
  // phi_1(1) = sqrt(2) sin(pi/2) = sqrt(2)
  CHECK(d.values()(3, 0) == doctest::Approx(std::numbers::sqrt2).epsilon(1e-14));
  // phi_2(1/2) = sqrt(2) sin(3 pi / 4) = 1
  CHECK(d.values()(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  // every entry matches the closed form
  for (Eigen::Index t = 1; t <= 4; ++t)
    for (Eigen::Index k = 1; k <= 3; ++k)
      CHECK(d.values()(t - 1, k - 1) ==
            doctest::Approx(std::numbers::sqrt2 *
                            std::sin((double(t) / 4.0) * (k - 0.5) * std::numbers::pi))
                .epsilon(1e-15));
  CHECK(d.values().cwiseAbs().maxCoeff() <= std::numbers::sqrt2 + 1e-15);
}

TEST_CASE("design Gram matrix is close to the identity at K = T = 500") {
  const BasisMatrix d = build_design(500, 500);
  const Eigen::MatrixXd gram = d.values().transpose() * d.values() / 500.0;
  for (Eigen::Index k = 0; k < 500; ++k) CHECK(std::abs(gram(k, k) - 1.0) < 0.02);
}

TEST_CASE("design Gram deviation shrinks as T grows for fixed K") {
  double prev = 1e9;
  for (Eigen::Index T : {500, 2000, 8000}) {
    const double gap = gram_identity_gap(build_design(10, T));
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("custom basis callback is evaluated on the grid") {
  const BasisMatrix d = build_design(2, 5, [](Eigen::Index k, double u) {
    return static_cast<double>(k) * u;
  });
  CHECK(d.kind() == BasisKind::Custom);
  CHECK(d.values()(4, 1) == doctest::Approx(2.0));
  CHECK(d.values()(0, 0) == doctest::Approx(0.2));
}

TEST_CASE("default_K is the exact ceiling of T^(3/4)") {
  CHECK(default_K(667) == 132);
  CHECK(default_K(16) == 8);
  CHECK(default_K(100) == 32);
  CHECK(default_K(81) == 27);     // 81^(3/4) = 27 exactly
  CHECK(default_K(256) == 64);    // 256^(3/4) = 64 exactly
  CHECK(default_K(10000) == 1000);
  CHECK_THROWS_AS(default_K(1), DimensionError);
}

TEST_CASE("k_grid arithmetic") {
  SUBCASE("paper-style grid") {
    const KGrid g = k_grid(132, 1, 2);
    CHECK(g.values == std::vector<Eigen::Index>{132, 264, 396});
  }
  SUBCASE("degenerate j = 0") {
    const KGrid g = k_grid(7, 0, 3);
    CHECK(g.values == std::vector<Eigen::Index>{7, 7, 7, 7});
  }
  SUBCASE("wider spacing") {
    const KGrid g = k_grid(10, 2, 3);
    CHECK(g.values == std::vector<Eigen::Index>{10, 30, 50, 70});
  }
  CHECK_THROWS_AS(k_grid(0, 1, 1), DimensionError);
}
