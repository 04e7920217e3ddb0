#include "trendcca/basis.hpp"

#include <cmath>
#include <numbers>

#include "trendcca/errors.hpp"

namespace trendcca {

BasisMatrix::BasisMatrix(Eigen::MatrixXd values, BasisKind kind)
    : values_(std::move(values)), kind_(kind) {
  if (values_.rows() < 1 || values_.cols() < 1)
    throw DimensionError("basis matrix must be non-empty");
}

Eigen::VectorXd kl_frequencies(Eigen::Index K) {
  if (K < 1) throw DimensionError("kl_frequencies: K must be positive");
  Eigen::VectorXd nu(K);
  for (Eigen::Index k = 1; k <= K; ++k)
    nu(k - 1) = 1.0 / ((static_cast<double>(k) - 0.5) * std::numbers::pi);
  return nu;
}

BasisMatrix build_design(Eigen::Index K, Eigen::Index T) {
  if (K < 1) throw DimensionError("build_design: K must be positive");
  if (T < 1) throw DimensionError("build_design: T must be positive");
  const double sqrt2 = std::numbers::sqrt2;
  Eigen::MatrixXd d(T, K);
  for (Eigen::Index t = 1; t <= T; ++t) {
    const double u = static_cast<double>(t) / static_cast<double>(T);
    for (Eigen::Index k = 1; k <= K; ++k)
      d(t - 1, k - 1) = sqrt2 * std::sin(u * (static_cast<double>(k) - 0.5) * std::numbers::pi);
  }
  return BasisMatrix(std::move(d), BasisKind::KL);
}

BasisMatrix build_design(Eigen::Index K, Eigen::Index T,
                         const std::function<double(Eigen::Index, double)>& phi) {
  if (K < 1) throw DimensionError("build_design: K must be positive");
  if (T < 1) throw DimensionError("build_design: T must be positive");
  Eigen::MatrixXd d(T, K);
  for (Eigen::Index t = 1; t <= T; ++t) {
    const double u = static_cast<double>(t) / static_cast<double>(T);
    for (Eigen::Index k = 1; k <= K; ++k) d(t - 1, k - 1) = phi(k, u);
  }
  if (!d.allFinite()) throw DomainError("custom basis produced non-finite values");
  return BasisMatrix(std::move(d), BasisKind::Custom);
}

Eigen::Index default_K(Eigen::Index T) {
  if (T < 2) throw DimensionError("default_K: T must be at least 2");
  // Smallest K with K^4 >= T^3; the float estimate is refined to avoid
  // ceil(pow(...)) misrounding at exact powers.
  auto pow4 = [](Eigen::Index k) {
    const unsigned __int128 kk = static_cast<unsigned __int128>(k);
    return kk * kk * kk * kk;
  };
  const unsigned __int128 t3 = static_cast<unsigned __int128>(T) *
                               static_cast<unsigned __int128>(T) *
                               static_cast<unsigned __int128>(T);
  Eigen::Index k = static_cast<Eigen::Index>(
      std::llround(std::pow(static_cast<double>(T), 0.75)));
  while (k > 1 && pow4(k - 1) >= t3) --k;
  while (pow4(k) < t3) ++k;
  return k;
}

KGrid k_grid(Eigen::Index base_K, int j, int m) {
  if (base_K < 1) throw DimensionError("k_grid: base_K must be positive");
  if (j < 0 || m < 0) throw DimensionError("k_grid: j and m must be non-negative");
  KGrid grid{base_K, j, m, {}};
  grid.values.reserve(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i)
    grid.values.push_back(base_K * (1 + static_cast<Eigen::Index>(i) * j));
  return grid;
}

double gram_identity_gap(const BasisMatrix& basis) {
  const Eigen::MatrixXd gram =
      basis.values().transpose() * basis.values() / static_cast<double>(basis.T());
  return (gram - Eigen::MatrixXd::Identity(basis.K(), basis.K())).cwiseAbs().maxCoeff();
}

}  // namespace trendcca
