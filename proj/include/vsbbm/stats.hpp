#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace vsbbm {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

// Sample mean and standard error of the mean; both sums compensated so the
// result depends only on the multiset of inputs up to rounding in the last
// step, and exactly on their order.
Estimate mean_and_se(std::span<const double> xs);

// Sample covariance with its standard error computed from the spread of the
// centred products.
Estimate covariance_and_se(std::span<const double> xs, std::span<const double> ys);

double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

// Two-sided Kolmogorov-Smirnov statistic sup |F_n - F| against a continuous CDF.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// Pearson chi-square goodness of fit. Adjacent cells are pooled from the right
// until every expected count is at least `min_expected`.
ChiSquareResult chi_square_gof(std::span<const double> observed,
                               std::span<const double> expected,
                               double min_expected = 5.0);

// Upper Gaussian tail P(Z > x), accurate far into the tail.
double normal_sf(double x);
double normal_cdf(double x);
// log P(Z > x) without underflow for large x.
double log_normal_sf(double x);

}  // namespace vsbbm
