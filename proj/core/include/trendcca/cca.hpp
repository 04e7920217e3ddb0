// Sample canonical correlation analysis of a T x p block against the T x K
// basis design.  The squared canonical correlations are the p roots of
//
//   | lambda M_ff - M_fd M_dd^{-1} M_df | = 0,   M_ij = T^{-1} sum_t i_t j_t',
//
// solved by whitening with a Cholesky factor of M_ff and handing the
// resulting symmetric matrix to a symmetric eigensolver; a nonsymmetric
// solver is never used.  Eigenvectors are normalized as V' M_ff V = I_p.
#pragma once

#include <Eigen/Dense>

#include "trendcca/basis.hpp"

namespace trendcca {

struct ConditionReport {
  double mff_min_eig = 0, mff_max_eig = 0;
  double mdd_min_eig = 0, mdd_max_eig = 0;
  // Largest eigenvalue clamp applied to force lambda into [0,1]; values above
  // 1e-8 indicate an ill-conditioned problem and set clamp_warning.
  double max_clamp = 0;
  bool clamp_warning = false;
};

struct CcaResult {
  Eigen::VectorXd eigenvalues;       // descending, clamped to [0,1]
  Eigen::MatrixXd eigenvectors;      // p x p, V' M_ff V = I_p
  Eigen::MatrixXd mff_eigenvectors;  // M_ff V, formed as L U (cancellation free)
  ConditionReport condition;
};

// T^{-1} a' b for equal-row-count blocks.
Eigen::MatrixXd moment(const Eigen::Ref<const Eigen::MatrixXd>& a,
                       const Eigen::Ref<const Eigen::MatrixXd>& b);

// Precomputed M_dd factorization for one basis design.  Building this once
// and reusing it across replications or iterations amortizes the only
// K-sized costs of the analysis.
class DesignOperator {
 public:
  explicit DesignOperator(BasisMatrix basis);

  const BasisMatrix& basis() const { return basis_; }
  Eigen::Index T() const { return basis_.T(); }
  Eigen::Index K() const { return basis_.K(); }

  double mdd_min_eig() const { return mdd_min_eig_; }
  double mdd_max_eig() const { return mdd_max_eig_; }

  // M_dd^{-1} rhs via the cached Cholesky factorization.
  Eigen::MatrixXd solve_mdd(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const;
  // L^{-1} rhs with M_dd = L L'; turns J M_dd^{-1} J' into an exact Gram form.
  Eigen::MatrixXd whiten(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const;
  // T^{-1} f' d  (n x K) for a T x n block f.
  Eigen::MatrixXd cross_moment(const Eigen::Ref<const Eigen::MatrixXd>& f) const;

 private:
  BasisMatrix basis_;
  Eigen::LLT<Eigen::MatrixXd> mdd_llt_;
  double mdd_min_eig_ = 0, mdd_max_eig_ = 0;
};

CcaResult cca(const Eigen::Ref<const Eigen::MatrixXd>& f, const DesignOperator& design);
// Convenience overload; builds the design operator on the fly.
CcaResult cca(const Eigen::Ref<const Eigen::MatrixXd>& f, const BasisMatrix& basis);

struct CcaPartition {
  Eigen::VectorXd lambda1, lambda0;  // s largest / p-s smallest
  Eigen::MatrixXd v1, v0;            // matching eigenvector blocks
};

// Splits at s; s = 0 and s = p yield empty blocks.
CcaPartition partition(const CcaResult& result, Eigen::Index s);

}  // namespace trendcca
