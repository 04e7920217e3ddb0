// Small statistical helpers: empirical quantiles and least squares on pairs.
#pragma once

#include <vector>

namespace trendcca {

// Linear-interpolation empirical quantile (the common "type 7" definition)
// of an already ascending-sorted sample.  q in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double q);

// Sorts a copy, then quantile_sorted.
double quantile(std::vector<double> sample, double q);

// Slope of the least-squares line through (x_i, y_i).
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace trendcca
