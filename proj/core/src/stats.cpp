#include "mprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mprobe {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("empty sample");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile level must lie in [0,1]");
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = static_cast<double>(n - 1) * q;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, q);
}

double iqr(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("loglog_slope requires at least 2 points");
  std::vector<double> lx, ly;
  lx.reserve(points.size());
  ly.reserve(points.size());
  for (const auto& [n, y] : points) {
    if (!(n > 0.0) || !(y > 0.0))
      throw std::invalid_argument("loglog_slope requires strictly positive coordinates");
    lx.push_back(std::log(n));
    ly.push_back(std::log(y));
  }
  std::vector<double> sorted_x(lx);
  std::sort(sorted_x.begin(), sorted_x.end());
  if (std::adjacent_find(sorted_x.begin(), sorted_x.end()) != sorted_x.end())
    throw std::invalid_argument("loglog_slope requires distinct n values");
  const double mx = mean(lx);
  const double my = mean(ly);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace mprobe
