// Discretized orthonormal L2[0,1] bases evaluated on the equispaced grid
// t/T, t = 1..T.  The default basis is the sine family
//
//   phi_k(u) = sqrt(2) sin(u / nu_k),  nu_k = 1 / ((k - 1/2) pi),
//
// which diagonalizes the Brownian covariance kernel; a custom callback basis
// is accepted for experimentation (orthonormality is then the caller's
// responsibility, see gram_identity_gap).
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace trendcca {

enum class BasisKind { KL, Custom };

class BasisMatrix {
 public:
  BasisMatrix(Eigen::MatrixXd values, BasisKind kind);

  Eigen::Index T() const { return values_.rows(); }
  Eigen::Index K() const { return values_.cols(); }
  const Eigen::MatrixXd& values() const { return values_; }
  BasisKind kind() const { return kind_; }
  // True when T < K: the grid cannot resolve all requested basis elements.
  bool undersampled() const { return T() < K(); }

 private:
  Eigen::MatrixXd values_;
  BasisKind kind_;
};

// nu_k = 1/((k - 1/2) pi) for k = 1..K, strictly decreasing.
Eigen::VectorXd kl_frequencies(Eigen::Index K);

// T x K design with row t-1 equal to (phi_1(t/T), ..., phi_K(t/T)).
BasisMatrix build_design(Eigen::Index K, Eigen::Index T);
// Custom basis: phi(k, u) with 1-based k.
BasisMatrix build_design(Eigen::Index K, Eigen::Index T,
                         const std::function<double(Eigen::Index, double)>& phi);

// ceil(T^{3/4}), computed exactly in integer arithmetic.
Eigen::Index default_K(Eigen::Index T);

struct KGrid {
  Eigen::Index base_K = 0;
  int j = 0;
  int m = 0;
  std::vector<Eigen::Index> values;  // K_i = K (1 + i j), i = 0..m
};

KGrid k_grid(Eigen::Index base_K, int j, int m);

// max-norm distance of the sample Gram matrix T^{-1} sum_t d_t d_t' from the
// identity; a diagnostic for custom bases.
double gram_identity_gap(const BasisMatrix& basis);

}  // namespace trendcca
