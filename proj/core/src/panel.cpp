#include "trendcca/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "trendcca/errors.hpp"

namespace trendcca {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& col,
                  const std::string& source) {
  const std::string s = trim(raw);
  if (s.empty())
    throw ParseError(source + ": missing value at data row " + std::to_string(row) +
                     ", column '" + col + "'");
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ParseError(source + ": non-numeric cell '" + s + "' at data row " +
                     std::to_string(row) + ", column '" + col + "'");
  return v;
}

}  // namespace

TimeSeriesPanel::TimeSeriesPanel(Eigen::MatrixXd values, std::vector<std::string> labels,
                                 std::optional<Eigen::RowVectorXd> t0_row,
                                 std::vector<std::string> provenance)
    : values_(std::move(values)),
      labels_(std::move(labels)),
      t0_row_(std::move(t0_row)),
      provenance_(std::move(provenance)) {
  if (values_.rows() < 2) throw DimensionError("panel needs at least 2 rows");
  if (values_.cols() < 1) throw DimensionError("panel needs at least 1 series");
  if (static_cast<Eigen::Index>(labels_.size()) != values_.cols())
    throw DimensionError("label count does not match series count");
  if (t0_row_ && t0_row_->cols() != values_.cols())
    throw DimensionError("initial row width does not match series count");
  if (!values_.allFinite()) throw DomainError("panel contains non-finite values");
}

Eigen::RowVectorXd TimeSeriesPanel::initial_row() const {
  if (t0_row_) return *t0_row_;
  return Eigen::RowVectorXd::Zero(p());
}

Eigen::MatrixXd TimeSeriesPanel::differences() const {
  Eigen::MatrixXd dx(T(), p());
  dx.row(0) = values_.row(0) - initial_row();
  dx.bottomRows(T() - 1) = values_.bottomRows(T() - 1) - values_.topRows(T() - 1);
  return dx;
}

SelectionMatrix SelectionMatrix::subset(Eigen::Index p, const std::vector<Eigen::Index>& cols) {
  if (cols.empty()) throw DimensionError("subset selection needs at least one column");
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= p)
      throw DimensionError("subset column index out of range: " + std::to_string(cols[j]));
    H(cols[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return SelectionMatrix{std::move(H), Kind::Subset};
}

SelectionMatrix SelectionMatrix::aggregate(Eigen::Index p,
                                           const std::vector<std::vector<Eigen::Index>>& groups) {
  if (groups.empty()) throw DimensionError("aggregation needs at least one group");
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p, static_cast<Eigen::Index>(groups.size()));
  for (std::size_t j = 0; j < groups.size(); ++j) {
    if (groups[j].empty()) throw DimensionError("empty aggregation group");
    for (Eigen::Index i : groups[j]) {
      if (i < 0 || i >= p)
        throw DimensionError("aggregation index out of range: " + std::to_string(i));
      H(i, static_cast<Eigen::Index>(j)) = 1.0 / static_cast<double>(groups[j].size());
    }
  }
  return SelectionMatrix{std::move(H), Kind::Aggregate};
}

SelectionMatrix SelectionMatrix::custom(Eigen::MatrixXd H) {
  return SelectionMatrix{std::move(H), Kind::Custom};
}

void SelectionMatrix::validate() const {
  if (H.rows() < 1 || H.cols() < 1) throw DimensionError("empty selection matrix");
  if (H.cols() > H.rows())
    throw DimensionError("selection matrix has more columns than rows");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(H);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  // Scale-free numerical rank test.
  if (!(smin > 1e-10 * smax))
    throw DimensionError("selection matrix is numerically rank deficient (sigma_min/sigma_max = " +
                         std::to_string(smax > 0 ? smin / smax : 0.0) + ")");
}

TimeSeriesPanel ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_csv(in, schema, path.string());
}

TimeSeriesPanel parse_csv(std::istream& in, const CsvSchema& schema,
                          const std::string& source_name) {
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;

  if (schema.has_header) {
    if (!std::getline(in, line))
      throw ParseError(source_name + ": empty file");
    ++line_no;
    for (auto& h : split_csv_line(line)) header.push_back(trim(h));
  }

  std::vector<std::vector<double>> rows;
  std::size_t width = schema.has_header ? header.size() : 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (width == 0) {
      width = cells.size();
      for (std::size_t j = 0; j < width; ++j) header.push_back("x" + std::to_string(j + 1));
    }
    if (cells.size() != width)
      throw ParseError(source_name + ": row " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(width));
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j)
      row[j] = schema.time_column && header[j] == *schema.time_column
                   ? 0.0
                   : parse_cell(cells[j], rows.size() + 1, header[j], source_name);
    rows.push_back(std::move(row));
  }

  if (rows.size() < 2)
    throw DimensionError(source_name + ": fewer than 2 data rows");

  // Drop the timestamp column, if any.
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < width; ++j)
    if (!schema.time_column || header[j] != *schema.time_column) keep.push_back(j);
  if (keep.empty()) throw DimensionError(source_name + ": no data columns");
  if (schema.time_column && keep.size() == width)
    throw ParseError(source_name + ": time column '" + *schema.time_column + "' not found");

  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(keep.size()));
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < keep.size(); ++j) labels.push_back(header[keep[j]]);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < keep.size(); ++j)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][keep[j]];

  return TimeSeriesPanel(std::move(values), std::move(labels));
}

TimeSeriesPanel preprocess(const TimeSeriesPanel& panel, bool log_transform,
                           bool normalize_start, InitMode init_mode) {
  Eigen::MatrixXd values = panel.values();
  std::optional<Eigen::RowVectorXd> t0 = panel.t0_row();
  std::vector<std::string> prov = panel.provenance();

  if (log_transform) {
    if ((values.array() <= 0.0).any())
      throw DomainError("log transform requires strictly positive values");
    values = values.array().log();
    if (t0) {
      if ((t0->array() <= 0.0).any())
        throw DomainError("log transform requires a strictly positive initial row");
      *t0 = t0->array().log();
    }
    prov.push_back("log");
  }

  if (normalize_start) {
    const Eigen::RowVectorXd first = values.row(0);
    values.rowwise() -= first;
    if (t0) *t0 -= first;
    prov.push_back("normalize_start");
  }

  switch (init_mode) {
    case InitMode::DifferenceFromStart: {
      const Eigen::RowVectorXd first = values.row(0);
      values.rowwise() -= first;
      t0 = Eigen::RowVectorXd::Zero(panel.p());
      prov.push_back("init:difference-from-start");
      break;
    }
    case InitMode::Levels: {
      if (!t0) t0 = values.row(0);
      prov.push_back("init:levels");
      break;
    }
  }

  return TimeSeriesPanel(std::move(values), panel.labels(), std::move(t0), std::move(prov));
}

TimeSeriesPanel apply_selection(const TimeSeriesPanel& panel, const SelectionMatrix& selection) {
  if (selection.H.rows() != panel.p())
    throw DimensionError("selection matrix has " + std::to_string(selection.H.rows()) +
                         " rows, panel has " + std::to_string(panel.p()) + " series");
  selection.validate();

  const Eigen::Index m = selection.H.cols();
  Eigen::MatrixXd values = panel.values() * selection.H;
  std::optional<Eigen::RowVectorXd> t0;
  if (panel.t0_row()) t0 = *panel.t0_row() * selection.H;

  std::vector<std::string> labels(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    std::string name;
    for (Eigen::Index i = 0; i < panel.p(); ++i) {
      if (selection.H(i, j) == 0.0) continue;
      if (!name.empty()) name += "+";
      name += panel.labels()[static_cast<std::size_t>(i)];
    }
    if (name.empty()) name = "h" + std::to_string(j + 1);
    if (selection.kind == SelectionMatrix::Kind::Aggregate) name = "avg(" + name + ")";
    labels[static_cast<std::size_t>(j)] = name;
  }

  std::vector<std::string> prov = panel.provenance();
  const char* kind_name = selection.kind == SelectionMatrix::Kind::Subset     ? "subset"
                          : selection.kind == SelectionMatrix::Kind::Aggregate ? "aggregate"
                                                                               : "custom";
  prov.push_back(std::string("select:") + kind_name + "(" + std::to_string(panel.p()) + "->" +
                 std::to_string(m) + ")");

  return TimeSeriesPanel(std::move(values), std::move(labels), std::move(t0), std::move(prov));
}

}  // namespace trendcca
