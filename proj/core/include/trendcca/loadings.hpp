// One-step and iterated canonical-correlation estimators of the trend
// loading matrix psi (p x s) and the cointegrating matrix beta (p x r),
// r = p - s, under the just-identifying normalization
//
//   b' psi = I_s,   c' beta = I_r,   c a basis of col(b)^perp,
//
// with residualization against basis-projected differences, long-run
// variance estimation from basis-projected moments, and chi-square Wald
// tests on the unrestricted blocks psi_* = cbar' psi and beta_* = bbar' beta
// (which satisfy the exact duality psi_* = -beta_*').
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "trendcca/cca.hpp"
#include "trendcca/panel.hpp"

namespace trendcca {

// Orthonormal basis of the orthogonal complement of col(b); p x (p - cols).
Eigen::MatrixXd complement(const Eigen::MatrixXd& b);

struct IdentificationPair {
  Eigen::MatrixXd b;  // p x s
  Eigen::MatrixXd c;  // p x r, c'b = 0

  static IdentificationPair from_b(Eigen::MatrixXd b);
  static IdentificationPair from_c(Eigen::Index p, Eigen::MatrixXd c);
  // b = unit vectors at the given 0-based coordinates, c = the remaining ones.
  static IdentificationPair coordinates(Eigen::Index p, const std::vector<Eigen::Index>& b_cols);

  void validate() const;  // ranks and orthogonality
};

struct LoadingEstimate {
  Eigen::MatrixXd psi_hat;    // p x s, b' psi_hat = I_s
  Eigen::MatrixXd beta_hat;   // p x r, c' beta_hat = I_r
  Eigen::MatrixXd psi_star;   // r x s, cbar' psi_hat
  Eigen::MatrixXd beta_star;  // s x r, bbar' beta_hat
  int iterations = 1;         // 1 = one-step
  bool converged = false;
  std::vector<double> step_norms;  // ||psi^(j) - psi^(j-1)||_F per iteration
};

// One-step estimator from an existing CCA of (x, d):
//   psi = M_xx V1 (b' M_xx V1)^{-1},  beta = V0 (c' V0)^{-1}.
LoadingEstimate one_step(const TimeSeriesPanel& panel, const CcaResult& cca_result,
                         Eigen::Index s, const IdentificationPair& id);

// Residuals of x_t on the fitted values of psi' dx_t regressed on d_t:
//   e_t = x_t - M_xg M_gg^{-1} g_t,  g_t = psi' M_{dx d} M_dd^{-1} d_t.
// An empty psi returns the panel values unchanged.
Eigen::MatrixXd residualize(const TimeSeriesPanel& panel, const DesignOperator& design,
                            const Eigen::MatrixXd& psi);

// One ICC refinement step from psi_prev (only its column span matters).
LoadingEstimate icc_iterate(const TimeSeriesPanel& panel, const DesignOperator& design,
                            Eigen::Index s, const IdentificationPair& id,
                            const Eigen::MatrixXd& psi_prev);

// Full ICC: one-step start, then refinement until the Frobenius step norm
// drops below tol or max_iter is reached (converged = false in that case).
LoadingEstimate icc(const TimeSeriesPanel& panel, const DesignOperator& design,
                    Eigen::Index s, const IdentificationPair& id, double tol = 1e-10,
                    int max_iter = 50);

struct LrvEstimate {
  Eigen::MatrixXd omega;     // (s+r) x (s+r), symmetric PSD
  Eigen::MatrixXd omega11;   // s x s
  Eigen::MatrixXd omega12;   // s x r
  Eigen::MatrixXd omega21;   // r x s
  Eigen::MatrixXd omega22;   // r x r
  Eigen::MatrixXd omega221;  // r x r, omega22 - omega21 omega11^{-1} omega12
};

// Omega = (T/K) [abar' M_{dx d}; beta' M_{x d}] M_dd^{-1} [.]' with
// abar = psi (psi'psi)^{-1}; computed in Gram form, exactly symmetric PSD.
LrvEstimate lrv(const TimeSeriesPanel& panel, const DesignOperator& design,
                const Eigen::MatrixXd& psi_hat, const Eigen::MatrixXd& beta_hat);

struct WaldResult {
  double Q = 0;
  int dof = 0;
  double p_value = 1;
  Eigen::MatrixXd R;
  Eigen::VectorXd h;
  // |Q - Q_dual| where Q_dual evaluates the equivalent hypothesis
  // R' vec(beta_*') = -h on the cointegration side.
  double dual_gap = 0;
};

// Q = T^2 (R'vec(psi_*) - h)' (R' U R)^{-1} (R'vec(psi_*) - h) with
// U = (T^{-1} abar' M_xx abar)^{-1} kron Omega_22.1, chi-square with
// dof = cols(R) under the null.
WaldResult wald(const LoadingEstimate& est, const LrvEstimate& lrv_est,
                const TimeSeriesPanel& panel, const Eigen::MatrixXd& R,
                const Eigen::VectorXd& h);

struct IdentificationSearchResult {
  std::vector<Eigen::Index> b_cols;  // accepted coordinate set (0-based)
  bool accepted = false;
  std::vector<std::vector<Eigen::Index>> alternatives;  // other accepted sets seen
  int combinations_tried = 0;
};

// Greedy search for coordinate identification: tries 0-based s-subsets of
// {0..p-1} in lexicographic order and returns the first one the decision
// rule accepts.  Capped; when nothing is accepted the first subset is
// returned with accepted = false.
IdentificationSearchResult choose_identification(const TimeSeriesPanel& panel,
                                                 const DesignOperator& design,
                                                 Eigen::Index s, int max_combinations = 2000);

}  // namespace trendcca
