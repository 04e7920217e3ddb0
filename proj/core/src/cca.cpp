#include "trendcca/cca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trendcca/errors.hpp"

namespace trendcca {
namespace {

constexpr double kRelativeEigFloor = 1e-12;
constexpr double kClampWarnLevel = 1e-8;

[[noreturn]] void throw_singular(const char* name, double min_eig, double max_eig) {
  throw ConditioningError(std::string(name) + " is numerically singular: smallest eigenvalue " +
                          std::to_string(min_eig) + ", largest " + std::to_string(max_eig));
}

}  // namespace

Eigen::MatrixXd moment(const Eigen::Ref<const Eigen::MatrixXd>& a,
                       const Eigen::Ref<const Eigen::MatrixXd>& b) {
  if (a.rows() != b.rows())
    throw DimensionError("moment: row mismatch (" + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()) + ")");
  if (a.rows() == 0) throw DimensionError("moment: empty blocks");
  return a.transpose() * b / static_cast<double>(a.rows());
}

DesignOperator::DesignOperator(BasisMatrix basis) : basis_(std::move(basis)) {
  const Eigen::Index K = basis_.K();
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(K, K);
  lower.selfadjointView<Eigen::Lower>().rankUpdate(basis_.values().transpose(),
                                                   1.0 / static_cast<double>(basis_.T()));
  const Eigen::MatrixXd mdd = lower.selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mdd, Eigen::EigenvaluesOnly);
  mdd_min_eig_ = es.eigenvalues()(0);
  mdd_max_eig_ = es.eigenvalues()(K - 1);
  if (!(mdd_min_eig_ > kRelativeEigFloor * mdd_max_eig_))
    throw_singular("M_dd", mdd_min_eig_, mdd_max_eig_);

  mdd_llt_.compute(mdd);
  if (mdd_llt_.info() != Eigen::Success)
    throw_singular("M_dd", mdd_min_eig_, mdd_max_eig_);
}

Eigen::MatrixXd DesignOperator::solve_mdd(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const {
  return mdd_llt_.solve(rhs);
}

Eigen::MatrixXd DesignOperator::whiten(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const {
  return mdd_llt_.matrixL().solve(rhs);
}

Eigen::MatrixXd DesignOperator::cross_moment(const Eigen::Ref<const Eigen::MatrixXd>& f) const {
  if (f.rows() != basis_.T())
    throw DimensionError("cross_moment: block has " + std::to_string(f.rows()) +
                         " rows, design has " + std::to_string(basis_.T()));
  return f.transpose() * basis_.values() / static_cast<double>(basis_.T());
}

CcaResult cca(const Eigen::Ref<const Eigen::MatrixXd>& f, const DesignOperator& design) {
  const Eigen::Index T = f.rows();
  const Eigen::Index p = f.cols();
  if (T != design.T())
    throw DimensionError("cca: block has " + std::to_string(T) + " rows, design has " +
                         std::to_string(design.T()));
  if (p < 1) throw DimensionError("cca: empty block");
  if (design.K() < p)
    throw DimensionError("cca: needs K >= p (K = " + std::to_string(design.K()) +
                         ", p = " + std::to_string(p) + ")");

  CcaResult out;
  out.condition.mdd_min_eig = design.mdd_min_eig();
  out.condition.mdd_max_eig = design.mdd_max_eig();

  const Eigen::MatrixXd mff = moment(f, f);
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mff, Eigen::EigenvaluesOnly);
    out.condition.mff_min_eig = es.eigenvalues()(0);
    out.condition.mff_max_eig = es.eigenvalues()(p - 1);
    if (!(out.condition.mff_min_eig > kRelativeEigFloor * out.condition.mff_max_eig))
      throw_singular("M_ff", out.condition.mff_min_eig, out.condition.mff_max_eig);
  }

  const Eigen::MatrixXd mfd = design.cross_moment(f);                  // p x K
  const Eigen::MatrixXd z = design.solve_mdd(mfd.transpose());         // M_dd^{-1} M_df
  Eigen::MatrixXd a = mfd * z;                                         // p x p
  a = 0.5 * (a + a.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(mff);
  if (llt.info() != Eigen::Success)
    throw_singular("M_ff", out.condition.mff_min_eig, out.condition.mff_max_eig);
  const Eigen::MatrixXd l = llt.matrixL();

  // Whitened problem: S = L^{-1} A L^{-T}, symmetric with the same eigenvalues.
  Eigen::MatrixXd s = l.triangularView<Eigen::Lower>().solve(a);
  const Eigen::MatrixXd st = s.transpose();
  s = l.triangularView<Eigen::Lower>().solve(st).transpose();
  s = 0.5 * (s + s.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success)
    throw ConditioningError("cca: symmetric eigensolver failed");

  // Ascending from the solver; flip to descending.
  Eigen::VectorXd lambda = es.eigenvalues().reverse();
  Eigen::MatrixXd u = es.eigenvectors().rowwise().reverse();

  double max_clamp = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    const double raw = lambda(i);
    const double clamped = std::clamp(raw, 0.0, 1.0);
    max_clamp = std::max(max_clamp, std::abs(raw - clamped));
    lambda(i) = clamped;
  }
  out.condition.max_clamp = max_clamp;
  out.condition.clamp_warning = max_clamp > kClampWarnLevel;

  out.eigenvalues = std::move(lambda);
  // V = L^{-T} U gives V' M_ff V = I; M_ff V = L U is formed directly so that
  // V_0' (M_ff V_1) = U_0' U_1 stays at roundoff even for ill-conditioned M_ff.
  out.eigenvectors = l.transpose().triangularView<Eigen::Upper>().solve(u);
  out.mff_eigenvectors = l.triangularView<Eigen::Lower>() * u;
  return out;
}

CcaResult cca(const Eigen::Ref<const Eigen::MatrixXd>& f, const BasisMatrix& basis) {
  return cca(f, DesignOperator(basis));
}

CcaPartition partition(const CcaResult& result, Eigen::Index s) {
  const Eigen::Index p = result.eigenvalues.size();
  if (s < 0 || s > p)
    throw DimensionError("partition: s = " + std::to_string(s) + " outside [0, " +
                         std::to_string(p) + "]");
  CcaPartition part;
  part.lambda1 = result.eigenvalues.head(s);
  part.lambda0 = result.eigenvalues.tail(p - s);
  part.v1 = result.eigenvectors.leftCols(s);
  part.v0 = result.eigenvectors.rightCols(p - s);
  return part;
}

}  // namespace trendcca
