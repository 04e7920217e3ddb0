// Multivariate time-series panels: CSV ingestion, preprocessing and linear
// selection/aggregation transforms.
//
// A panel holds the T x p analysis matrix (row t-1 holds the observation for
// sample index t = 1..T) together with an optional initial row used when
// first differences are formed, and a provenance trail of the transforms
// applied since ingestion.  Panels are immutable; every operation returns a
// new panel.
#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace trendcca {

enum class InitMode { Levels, DifferenceFromStart };

struct CsvSchema {
  bool has_header = true;
  // Name of a timestamp column to drop; the analysis is index based.
  std::optional<std::string> time_column;
};

class TimeSeriesPanel {
 public:
  TimeSeriesPanel(Eigen::MatrixXd values, std::vector<std::string> labels,
                  std::optional<Eigen::RowVectorXd> t0_row = std::nullopt,
                  std::vector<std::string> provenance = {});

  Eigen::Index T() const { return values_.rows(); }
  Eigen::Index p() const { return values_.cols(); }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::optional<Eigen::RowVectorXd>& t0_row() const { return t0_row_; }
  const std::vector<std::string>& provenance() const { return provenance_; }

  // The x_0 row used when differencing: the stored initial row when present,
  // otherwise zero.
  Eigen::RowVectorXd initial_row() const;

  // First differences, T x p, with the first row differenced against
  // initial_row().
  Eigen::MatrixXd differences() const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> labels_;
  std::optional<Eigen::RowVectorXd> t0_row_;
  std::vector<std::string> provenance_;
};

struct SelectionMatrix {
  enum class Kind { Subset, Aggregate, Custom };

  Eigen::MatrixXd H;  // p x m, full column rank
  Kind kind = Kind::Custom;

  // H picking the given 0-based columns, in order.
  static SelectionMatrix subset(Eigen::Index p, const std::vector<Eigen::Index>& cols);
  // One output column per group, averaging the group's series.
  static SelectionMatrix aggregate(Eigen::Index p, const std::vector<std::vector<Eigen::Index>>& groups);
  static SelectionMatrix custom(Eigen::MatrixXd H);

  // Throws DimensionError if H is numerically rank deficient (smallest
  // singular value <= 1e-10 times the largest).
  void validate() const;
};

TimeSeriesPanel ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
TimeSeriesPanel parse_csv(std::istream& in, const CsvSchema& schema = {},
                          const std::string& source_name = "<stream>");

// Applies, in order: elementwise natural log, subtraction of the first row,
// and the initial-condition mode.  Levels mode keeps values unchanged and
// records the first row as x_0; difference-from-start subtracts the first
// row (making it exactly zero) and records a zero x_0.
TimeSeriesPanel preprocess(const TimeSeriesPanel& panel, bool log_transform,
                           bool normalize_start, InitMode init_mode);

TimeSeriesPanel apply_selection(const TimeSeriesPanel& panel, const SelectionMatrix& selection);

}  // namespace trendcca
