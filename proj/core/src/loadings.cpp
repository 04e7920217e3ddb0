#include "trendcca/loadings.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "trendcca/errors.hpp"
#include "trendcca/trend_count.hpp"

namespace trendcca {
namespace {

constexpr double kRankTol = 1e-10;

void check_full_column_rank(const Eigen::MatrixXd& m, const char* name) {
  if (m.cols() == 0) return;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > kRankTol * smax))
    throw IdentificationError(std::string(name) + " is numerically rank deficient");
}

// inv(a) for a small square normalization block, with a scale-free
// singularity check.
Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() != a.cols()) throw DimensionError("checked_inverse: non-square block");
  if (a.rows() == 0) return a;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > 1e-12 * smax))
    throw IdentificationError(std::string(what) +
                              " is numerically singular (sigma_min/sigma_max = " +
                              std::to_string(smax > 0 ? smin / smax : 0.0) +
                              "); check the identification with identification_check");
  return a.partialPivLu().inverse();
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Shared core of one_step and icc_iterate: estimators from the eigenvector
// blocks of a CCA of (f, d), f = x or f = e.
LoadingEstimate estimate_from_cca(const CcaResult& res, Eigen::Index s,
                                  const IdentificationPair& id) {
  const Eigen::Index p = res.eigenvalues.size();
  const Eigen::Index r = p - s;
  if (s < 0 || s > p) throw DimensionError("loading estimation: s outside [0, p]");
  if (id.b.rows() != p || id.b.cols() != s)
    throw DimensionError("identification b must be p x s");
  if (id.c.rows() != p || id.c.cols() != r)
    throw DimensionError("identification c must be p x (p - s)");

  LoadingEstimate est;
  // psi = (M_ff V1) (b' M_ff V1)^{-1}; M_ff V1 is taken from the CCA result
  // where it is formed without cancellation.
  const Eigen::MatrixXd w1 = res.mff_eigenvectors.leftCols(s);
  est.psi_hat = w1 * checked_inverse(id.b.transpose() * w1, "b' M_ff V1");
  const Eigen::MatrixXd v0 = res.eigenvectors.rightCols(r);
  est.beta_hat = v0 * checked_inverse(id.c.transpose() * v0, "c' V0");

  // Unrestricted blocks: psi_* = (c'c)^{-1} c' psi, beta_* = (b'b)^{-1} b' beta.
  est.psi_star = r > 0 && s > 0
                     ? Eigen::MatrixXd((id.c.transpose() * id.c)
                                           .llt()
                                           .solve(id.c.transpose() * est.psi_hat))
                     : Eigen::MatrixXd(r, s);
  est.beta_star = r > 0 && s > 0
                      ? Eigen::MatrixXd((id.b.transpose() * id.b)
                                            .llt()
                                            .solve(id.b.transpose() * est.beta_hat))
                      : Eigen::MatrixXd(s, r);
  return est;
}

}  // namespace

Eigen::MatrixXd complement(const Eigen::MatrixXd& b) {
  const Eigen::Index p = b.rows();
  const Eigen::Index s = b.cols();
  if (p < 1) throw DimensionError("complement: empty matrix");
  if (s > p) throw DimensionError("complement: more columns than rows");
  if (s == 0) return Eigen::MatrixXd::Identity(p, p);
  check_full_column_rank(b, "b");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(p - s);
}

IdentificationPair IdentificationPair::from_b(Eigen::MatrixXd b) {
  IdentificationPair id;
  id.c = complement(b);
  id.b = std::move(b);
  return id;
}

IdentificationPair IdentificationPair::from_c(Eigen::Index p, Eigen::MatrixXd c) {
  if (c.rows() != p) throw DimensionError("from_c: c must have p rows");
  IdentificationPair id;
  id.b = complement(c);
  id.c = std::move(c);
  return id;
}

IdentificationPair IdentificationPair::coordinates(Eigen::Index p,
                                                   const std::vector<Eigen::Index>& b_cols) {
  std::vector<bool> used(static_cast<std::size_t>(p), false);
  for (Eigen::Index i : b_cols) {
    if (i < 0 || i >= p)
      throw DimensionError("coordinate identification index out of range: " + std::to_string(i));
    if (used[static_cast<std::size_t>(i)])
      throw DimensionError("duplicate coordinate identification index: " + std::to_string(i));
    used[static_cast<std::size_t>(i)] = true;
  }
  IdentificationPair id;
  id.b = Eigen::MatrixXd::Zero(p, static_cast<Eigen::Index>(b_cols.size()));
  for (std::size_t j = 0; j < b_cols.size(); ++j) id.b(b_cols[j], static_cast<Eigen::Index>(j)) = 1.0;
  id.c = Eigen::MatrixXd::Zero(p, p - static_cast<Eigen::Index>(b_cols.size()));
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    if (!used[static_cast<std::size_t>(i)]) id.c(i, j++) = 1.0;
  return id;
}

void IdentificationPair::validate() const {
  if (b.rows() != c.rows()) throw DimensionError("identification: b and c row mismatch");
  if (b.cols() + c.cols() != b.rows())
    throw DimensionError("identification: cols(b) + cols(c) must equal p");
  check_full_column_rank(b, "b");
  check_full_column_rank(c, "c");
  if (b.cols() > 0 && c.cols() > 0) {
    const double gap = (c.transpose() * b).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff() * c.cwiseAbs().maxCoeff());
    if (gap > 1e-10 * scale)
      throw IdentificationError("identification: c is not orthogonal to b (max |c'b| = " +
                                std::to_string(gap) + ")");
  }
}

LoadingEstimate one_step(const TimeSeriesPanel& panel, const CcaResult& cca_result,
                         Eigen::Index s, const IdentificationPair& id) {
  if (cca_result.eigenvalues.size() != panel.p())
    throw DimensionError("one_step: CCA width does not match the panel");
  id.validate();
  LoadingEstimate est = estimate_from_cca(cca_result, s, id);
  est.iterations = 1;
  est.converged = false;
  return est;
}

Eigen::MatrixXd residualize(const TimeSeriesPanel& panel, const DesignOperator& design,
                            const Eigen::MatrixXd& psi) {
  if (psi.cols() == 0) return panel.values();
  if (psi.rows() != panel.p())
    throw DimensionError("residualize: psi must have p rows");

  const Eigen::MatrixXd m_dxd = design.cross_moment(panel.differences());  // p x K
  const Eigen::MatrixXd proj = psi.transpose() * m_dxd;                    // s x K
  if (proj.cwiseAbs().maxCoeff() == 0.0) return panel.values();  // zero fitted values

  const Eigen::MatrixXd w = design.solve_mdd(proj.transpose());  // K x s
  const Eigen::MatrixXd g = design.basis().values() * w;         // T x s
  const Eigen::MatrixXd m_gg = moment(g, g);
  Eigen::LLT<Eigen::MatrixXd> llt(m_gg);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("residualize: M_gg is numerically singular");
  const Eigen::MatrixXd coef = llt.solve(moment(g, panel.values()));  // s x p
  return panel.values() - g * coef;
}

LoadingEstimate icc_iterate(const TimeSeriesPanel& panel, const DesignOperator& design,
                            Eigen::Index s, const IdentificationPair& id,
                            const Eigen::MatrixXd& psi_prev) {
  const Eigen::MatrixXd e = residualize(panel, design, psi_prev);
  return estimate_from_cca(cca(e, design), s, id);
}

LoadingEstimate icc(const TimeSeriesPanel& panel, const DesignOperator& design,
                    Eigen::Index s, const IdentificationPair& id, double tol,
                    int max_iter) {
  if (!(tol > 0)) throw DomainError("icc: tol must be positive");
  if (max_iter < 2) throw DomainError("icc: max_iter must be at least 2");
  id.validate();

  LoadingEstimate est = estimate_from_cca(cca(panel.values(), design), s, id);
  est.iterations = 1;

  for (int j = 2; j <= max_iter; ++j) {
    LoadingEstimate next = icc_iterate(panel, design, s, id, est.psi_hat);
    const double step = (next.psi_hat - est.psi_hat).norm();
    next.iterations = j;
    next.step_norms = std::move(est.step_norms);
    next.step_norms.push_back(step);
    est = std::move(next);
    if (step < tol) {
      est.converged = true;
      break;
    }
  }
  return est;
}

LrvEstimate lrv(const TimeSeriesPanel& panel, const DesignOperator& design,
                const Eigen::MatrixXd& psi_hat, const Eigen::MatrixXd& beta_hat) {
  const Eigen::Index p = panel.p();
  const Eigen::Index s = psi_hat.cols();
  const Eigen::Index r = beta_hat.cols();
  if ((s > 0 && psi_hat.rows() != p) || (r > 0 && beta_hat.rows() != p))
    throw DimensionError("lrv: estimator blocks must have p rows");
  if (s + r != p) throw DimensionError("lrv: cols(psi) + cols(beta) must equal p");

  Eigen::MatrixXd j_block(s + r, design.K());
  if (s > 0) {
    // abar' = (psi'psi)^{-1} psi'
    Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(psi_hat.transpose() * psi_hat));
    if (llt.info() != Eigen::Success)
      throw ConditioningError("lrv: psi'psi is numerically singular");
    const Eigen::MatrixXd abar_t = llt.solve(psi_hat.transpose());  // s x p
    j_block.topRows(s) = abar_t * design.cross_moment(panel.differences());
  }
  if (r > 0)
    j_block.bottomRows(r) = beta_hat.transpose() * design.cross_moment(panel.values());

  // Gram form: (T/K) (L^{-1} J')' (L^{-1} J') is symmetric PSD by construction.
  const Eigen::MatrixXd white = design.whiten(j_block.transpose());  // K x (s+r)
  const double scale = static_cast<double>(design.T()) / static_cast<double>(design.K());

  LrvEstimate out;
  out.omega = scale * (white.transpose() * white);
  out.omega = 0.5 * (out.omega + out.omega.transpose()).eval();
  out.omega11 = out.omega.topLeftCorner(s, s);
  out.omega12 = out.omega.topRightCorner(s, r);
  out.omega21 = out.omega.bottomLeftCorner(r, s);
  out.omega22 = out.omega.bottomRightCorner(r, r);
  if (s > 0 && r > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(out.omega11);
    if (llt.info() != Eigen::Success)
      throw ConditioningError("lrv: Omega_11 is numerically singular");
    out.omega221 = out.omega22 - out.omega21 * llt.solve(out.omega12);
  } else {
    out.omega221 = out.omega22;
  }
  return out;
}

WaldResult wald(const LoadingEstimate& est, const LrvEstimate& lrv_est,
                const TimeSeriesPanel& panel, const Eigen::MatrixXd& R,
                const Eigen::VectorXd& h) {
  const Eigen::Index s = est.psi_hat.cols();
  const Eigen::Index r = est.beta_hat.cols();
  const Eigen::Index sr = s * r;
  if (sr == 0)
    throw DimensionError("wald: no unrestricted coefficients (s or r is zero)");
  if (R.rows() != sr)
    throw DimensionError("wald: R must have s*r = " + std::to_string(sr) + " rows");
  const Eigen::Index m = R.cols();
  if (m < 1 || m > sr) throw DimensionError("wald: invalid number of restrictions");
  if (h.size() != m) throw DimensionError("wald: h must have one entry per restriction");
  check_full_column_rank(R, "R");

  const double T = static_cast<double>(panel.T());
  Eigen::LLT<Eigen::MatrixXd> psllt(Eigen::MatrixXd(est.psi_hat.transpose() * est.psi_hat));
  if (psllt.info() != Eigen::Success)
    throw ConditioningError("wald: psi'psi is numerically singular");
  const Eigen::MatrixXd abar = psllt.solve(est.psi_hat.transpose()).transpose();  // p x s
  const Eigen::MatrixXd denom =
      (abar.transpose() * moment(panel.values(), panel.values()) * abar) / T;
  const Eigen::MatrixXd u_hat = kron(checked_inverse(denom, "abar' M_xx abar"),
                                     lrv_est.omega221);

  const Eigen::MatrixXd rur = R.transpose() * u_hat * R;
  Eigen::LLT<Eigen::MatrixXd> llt(rur);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("wald: R' U R is numerically singular");

  const Eigen::Map<const Eigen::VectorXd> vec_psi_star(est.psi_star.data(), sr);
  const Eigen::MatrixXd beta_star_t = est.beta_star.transpose();  // r x s
  const Eigen::Map<const Eigen::VectorXd> vec_beta_star_t(beta_star_t.data(), sr);

  const Eigen::VectorXd resid = R.transpose() * vec_psi_star - h;
  const Eigen::VectorXd resid_dual = R.transpose() * vec_beta_star_t + h;

  WaldResult out;
  out.R = R;
  out.h = h;
  out.dof = static_cast<int>(m);
  out.Q = T * T * resid.dot(llt.solve(resid));
  const double q_dual = T * T * resid_dual.dot(llt.solve(resid_dual));
  out.dual_gap = std::abs(out.Q - q_dual);
  const boost::math::chi_squared chi2(static_cast<double>(m));
  out.p_value = boost::math::cdf(boost::math::complement(chi2, std::max(0.0, out.Q)));
  return out;
}

IdentificationSearchResult choose_identification(const TimeSeriesPanel& panel,
                                                 const DesignOperator& design,
                                                 Eigen::Index s, int max_combinations) {
  const Eigen::Index p = panel.p();
  if (s < 0 || s > p) throw DimensionError("choose_identification: s outside [0, p]");

  IdentificationSearchResult result;
  if (s == 0) {
    result.accepted = true;
    return result;
  }

  const Eigen::Index s_full = max_gap(cca(panel.values(), design).eigenvalues).s_hat;

  std::vector<Eigen::Index> combo(static_cast<std::size_t>(s));
  for (Eigen::Index i = 0; i < s; ++i) combo[static_cast<std::size_t>(i)] = i;

  auto advance = [&]() -> bool {  // next lexicographic s-subset of {0..p-1}
    Eigen::Index i = s - 1;
    while (i >= 0 && combo[static_cast<std::size_t>(i)] == p - s + i) --i;
    if (i < 0) return false;
    ++combo[static_cast<std::size_t>(i)];
    for (Eigen::Index k = i + 1; k < s; ++k)
      combo[static_cast<std::size_t>(k)] = combo[static_cast<std::size_t>(k - 1)] + 1;
    return true;
  };

  bool more = true;
  while (more && result.combinations_tried < max_combinations) {
    ++result.combinations_tried;
    Eigen::MatrixXd sub(panel.T(), s);
    for (Eigen::Index j = 0; j < s; ++j)
      sub.col(j) = panel.values().col(combo[static_cast<std::size_t>(j)]);
    const Eigen::Index s_sub = max_gap(cca(sub, design).eigenvalues).s_hat;
    if (s_sub >= s_full) {
      if (!result.accepted) {
        result.b_cols = combo;
        result.accepted = true;
      } else {
        result.alternatives.push_back(combo);
        if (result.alternatives.size() >= 8) break;
      }
    }
    more = advance();
  }
  if (!result.accepted) {
    // nothing passed: fall back to the leading coordinates
    result.b_cols.resize(static_cast<std::size_t>(s));
    for (Eigen::Index i = 0; i < s; ++i) result.b_cols[static_cast<std::size_t>(i)] = i;
  }
  return result;
}

}  // namespace trendcca
