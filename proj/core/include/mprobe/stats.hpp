#pragma once

// Small numeric utilities: type-7 quantiles, IQR, and the log-log
// least-squares slope used by the uncertainty-scaling analysis.

#include <span>
#include <utility>
#include <vector>

namespace mprobe {

// q-quantile with linear interpolation between order statistics
// (type-7 convention: h = (N-1)q). Throws on empty input.
double quantile(std::span<const double> values, double q);

// Same, for data already sorted ascending.
double quantile_sorted(std::span<const double> sorted, double q);

// quantile(values, 0.75) - quantile(values, 0.25); always >= 0.
double iqr(std::span<const double> values);

double mean(std::span<const double> values);

// Sample standard deviation (n-1 denominator); 0 for fewer than 2 values.
double sample_stddev(std::span<const double> values);

// Ordinary least-squares slope of log(y) against log(n). Requires at
// least two points, strictly positive coordinates, and distinct n values.
double loglog_slope(std::span<const std::pair<double, double>> points);

}  // namespace mprobe
