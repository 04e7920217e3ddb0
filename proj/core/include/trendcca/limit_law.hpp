// Monte Carlo tables for the pivotal limit spectrum zeta^(s): the ordered
// eigenvalues of the inverse of int_0^1 B(u) B(u)' du for an s-dimensional
// standard Brownian motion B.  Each replication builds B as scaled partial
// sums of i.i.d. standard normals on an n-step grid, accumulates the
// right-endpoint Riemann sum of B B', inverts and sorts the spectrum.
//
// Tables store upper quantiles of the 1-norm (trace) and sup-norm (largest
// eigenvalue), the componentwise mean of log zeta, and the half-width delta
// of the confidence stripe P(max_i |log zeta_i - E log zeta_i| < delta).
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace trendcca {

enum class Norm { One, Infinity };

// Location indicator for the misspecification stripe.  The mean is the
// default; the median is offered as a robust alternative.
enum class StripeCenter { Mean, Median };

struct ZetaOptions {
  std::int64_t n_steps = 10000;
  std::int64_t n_reps = 100000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  // Optional fixed s x s matrix applied to every innovation vector; used to
  // exercise rotation invariance of the law.
  const Eigen::MatrixXd* innovation_rotation = nullptr;
};

struct ZetaSample {
  Eigen::MatrixXd values;  // n_reps x s, each row sorted descending, positive
  std::int64_t redraws = 0;
};

ZetaSample simulate_zeta(Eigen::Index s, const ZetaOptions& opts);
ZetaSample simulate_zeta(Eigen::Index s, std::int64_t n_steps, std::int64_t n_reps,
                         std::uint64_t seed);

struct LimitLawTable {
  Eigen::Index s = 0;
  std::vector<double> etas;              // ascending significance levels
  std::vector<double> quantiles_trace;   // (1-eta) quantiles of ||zeta||_1
  std::vector<double> quantiles_max;     // (1-eta) quantiles of ||zeta||_inf
  Eigen::VectorXd mean_log;              // E[log zeta_i], non-increasing in i
  Eigen::VectorXd median_log;            // componentwise median of log zeta
  std::vector<double> stripe_deltas;         // about the mean, aligned with etas
  std::vector<double> stripe_deltas_median;  // about the median
  std::int64_t redraws = 0;

  double quantile(Norm norm, double eta) const;  // TableError when eta absent
  double stripe_delta(double eta, StripeCenter center = StripeCenter::Mean) const;
};

// Builds one table from a simulated sample.
LimitLawTable make_table(Eigen::Index s, const ZetaSample& sample,
                         const std::vector<double>& etas);

// A set of tables for s = 1..s_max sharing one simulation provenance,
// persistable as a versioned JSON cache.
class LimitLawStore {
 public:
  LimitLawStore() = default;

  static LimitLawStore build(Eigen::Index s_max, std::vector<double> etas,
                             std::int64_t n_steps, std::int64_t n_reps,
                             std::uint64_t seed, unsigned threads = 0);

  bool has(Eigen::Index s) const;
  const LimitLawTable& table(Eigen::Index s) const;  // TableError when absent
  std::vector<Eigen::Index> available() const;

  // Simulates any missing tables up to s_max with this store's provenance.
  void extend_to(Eigen::Index s_max, unsigned threads = 0);

  void save(const std::filesystem::path& path) const;
  static LimitLawStore load(const std::filesystem::path& path);

  std::int64_t n_steps() const { return n_steps_; }
  std::int64_t n_reps() const { return n_reps_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<double>& etas() const { return etas_; }

  // FNV-1a hash of the serialized store; embedded in reports so a run can be
  // reproduced against the exact same tables.
  std::string content_hash() const;

 private:
  std::int64_t n_steps_ = 10000;
  std::int64_t n_reps_ = 100000;
  std::uint64_t seed_ = 0;
  std::vector<double> etas_;
  std::vector<LimitLawTable> tables_;  // sorted by s
  friend std::string store_to_json(const LimitLawStore&);
  friend LimitLawStore store_from_json(const std::string&, const std::string&);
};

// (stripe center, delta) for the misspecification stripe at level eta.
std::pair<Eigen::VectorXd, double> stripe_params(const LimitLawTable& table, double eta,
                                                 StripeCenter center = StripeCenter::Mean);

}  // namespace trendcca
