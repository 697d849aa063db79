#include "vsbbm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "vsbbm/error.hpp"

namespace vsbbm {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

Estimate mean_and_se(std::span<const double> xs) {
  Estimate e;
  e.count = xs.size();
  if (xs.empty()) return e;
  CompensatedSum s;
  for (double x : xs) s.add(x);
  const double n = static_cast<double>(xs.size());
  e.mean = s.value() / n;
  if (xs.size() < 2) return e;
  CompensatedSum ss;
  for (double x : xs) ss.add((x - e.mean) * (x - e.mean));
  e.std_error = std::sqrt(ss.value() / (n - 1.0) / n);
  return e;
}

Estimate covariance_and_se(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("covariance: length mismatch");
  const double mx = mean_and_se(xs).mean;
  const double my = mean_and_se(ys).mean;
  std::vector<double> prod(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) prod[i] = (xs[i] - mx) * (ys[i] - my);
  Estimate e = mean_and_se(prod);
  const double n = static_cast<double>(xs.size());
  if (n > 1) e.mean *= n / (n - 1.0);
  return e;
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw ValidationError("correlation: need two equal-length samples of size >= 2");
  const double mx = mean_and_se(xs).mean;
  const double my = mean_and_se(ys).mean;
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  return sxy.value() / std::sqrt(sxx.value() * syy.value());
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ValidationError("ks_distance: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const double di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - f, f - di / n});
  }
  return d;
}

ChiSquareResult chi_square_gof(std::span<const double> observed,
                               std::span<const double> expected, double min_expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw ValidationError("chi_square_gof: cell count mismatch");
  std::vector<double> o, e;
  double acc_o = 0.0, acc_e = 0.0;
  for (std::size_t i = observed.size(); i-- > 0;) {
    acc_o += observed[i];
    acc_e += expected[i];
    if (acc_e >= min_expected) {
      o.push_back(acc_o);
      e.push_back(acc_e);
      acc_o = acc_e = 0.0;
    }
  }
  if (acc_e > 0.0) {
    if (e.empty()) {
      o.push_back(acc_o);
      e.push_back(acc_e);
    } else {
      o.back() += acc_o;
      e.back() += acc_e;
    }
  }
  ChiSquareResult r;
  for (std::size_t i = 0; i < o.size(); ++i) r.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  r.dof = static_cast<int>(o.size()) - 1;
  if (r.dof < 1) return r;
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_normal_sf(double x) {
  if (x < 20.0) return std::log(normal_sf(x));
  // Mills-ratio asymptotic series; relative error < 1e-12 for x >= 20.
  const double x2 = x * x;
  double series = 1.0, term = 1.0;
  for (int k = 1; k < 8; ++k) {
    term *= -(2.0 * k - 1.0) / x2;
    series += term;
  }
  return -0.5 * x2 - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

}  // namespace vsbbm
