#include "vsbbm/speed.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vsbbm/error.hpp"

namespace vsbbm {

namespace {

constexpr double kEndpointTol = 1e-12;
constexpr double kSlopeStep = 1e-6;
constexpr double kSlopeMismatch = 1e-3;
constexpr double kFlatTol = 1e-9;

double forward_slope(const std::function<double(double)>& a) {
  return (a(kSlopeStep) - a(0.0)) / kSlopeStep;
}
double backward_slope(const std::function<double(double)>& a) {
  return (a(1.0) - a(1.0 - kSlopeStep)) / kSlopeStep;
}

void validate_knots(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw ValidationError("profile: need at least two (x, A(x)) points of equal count");
  if (std::fabs(xs.front()) > kEndpointTol || std::fabs(xs.back() - 1.0) > kEndpointTol)
    throw ValidationError("profile: breakpoints must span [0, 1]");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw ValidationError("profile: x values must be strictly increasing");
    if (ys[i] < ys[i - 1]) {
      std::ostringstream msg;
      msg << "profile: A must be non-decreasing (A(" << xs[i] << ") < A(" << xs[i - 1] << "))";
      throw ValidationError(msg.str());
    }
  }
  if (std::fabs(ys.front()) > kEndpointTol || std::fabs(ys.back() - 1.0) > kEndpointTol)
    throw ValidationError("profile: need A(0) = 0 and A(1) = 1");
}

std::size_t segment_of(const std::vector<double>& xs, double x) {
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - xs.begin(), 1));
  return std::min(idx, xs.size() - 1) - 1;
}

// Fritsch-Carlson derivatives for monotone cubic Hermite interpolation.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    delta[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::fabs(s) > std::fabs(3.0 * d0)) return 3.0 * d0;
    return s;
  };
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

}  // namespace

SpeedProfile SpeedProfile::identity() {
  SpeedProfile p;
  p.eval_ = std::make_shared<const std::function<double(double)>>([](double x) { return x; });
  p.kind_ = ProfileKind::identity;
  p.name_ = "identity";
  p.bx_ = {0.0, 1.0};
  p.by_ = {0.0, 1.0};
  return p;
}

SpeedProfile SpeedProfile::two_speed(double sigma1_sq, double sigma2_sq, double b) {
  if (!(b > 0.0 && b < 1.0)) throw ValidationError("two_speed: need 0 < b < 1");
  if (sigma1_sq < 0.0 || sigma2_sq < 0.0)
    throw ValidationError("two_speed: speeds must be non-negative");
  const double norm = sigma1_sq * b + sigma2_sq * (1.0 - b);
  if (std::fabs(norm - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg << "two_speed: sigma1^2 b + sigma2^2 (1-b) = " << norm << ", expected 1";
    throw ValidationError(msg.str());
  }
  SpeedProfile p = piecewise_linear({0.0, b, 1.0}, {0.0, sigma1_sq * b, 1.0});
  p.kind_ = ProfileKind::two_speed;
  p.slope0_ = sigma1_sq;
  p.slope1_ = sigma2_sq;
  std::ostringstream name;
  name << "two_speed(" << sigma1_sq << "," << sigma2_sq << "," << b << ")";
  p.name_ = name.str();
  return p;
}

SpeedProfile SpeedProfile::piecewise_linear(std::vector<double> xs, std::vector<double> ys) {
  validate_knots(xs, ys);
  xs.front() = 0.0;
  xs.back() = 1.0;
  ys.front() = 0.0;
  ys.back() = 1.0;
  SpeedProfile p;
  p.kind_ = ProfileKind::piecewise;
  p.name_ = "piecewise";
  p.bx_ = xs;
  p.by_ = ys;
  p.slope0_ = (ys[1] - ys[0]) / (xs[1] - xs[0]);
  const std::size_t n = xs.size();
  p.slope1_ = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
  p.eval_ = std::make_shared<const std::function<double(double)>>(
      [xs = std::move(xs), ys = std::move(ys)](double x) {
        const std::size_t i = segment_of(xs, x);
        const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] + w * (ys[i + 1] - ys[i]);
      });
  return p;
}

SpeedProfile SpeedProfile::two_piece(double initial_slope, double final_slope, double kink,
                                     std::string name) {
  SpeedProfile p;
  if (kink >= 1.0) {
    p = piecewise_linear({0.0, 1.0}, {0.0, 1.0});
  } else {
    const double yk = std::clamp(initial_slope * kink, 0.0, 1.0);
    p = piecewise_linear({0.0, kink, 1.0}, {0.0, yk, 1.0});
  }
  p.slope0_ = initial_slope;
  p.slope1_ = final_slope;
  p.name_ = std::move(name);
  return p;
}

SpeedProfile SpeedProfile::table(std::vector<double> xs, std::vector<double> ys) {
  validate_knots(xs, ys);
  xs.front() = 0.0;
  xs.back() = 1.0;
  ys.front() = 0.0;
  ys.back() = 1.0;
  std::vector<double> d = pchip_slopes(xs, ys);
  SpeedProfile p;
  p.kind_ = ProfileKind::table;
  p.name_ = "table";
  p.slope0_ = d.front();
  p.slope1_ = d.back();
  p.eval_ = std::make_shared<const std::function<double(double)>>(
      [xs = std::move(xs), ys = std::move(ys), d = std::move(d)](double x) {
        const std::size_t i = segment_of(xs, x);
        const double h = xs[i + 1] - xs[i];
        const double s = (x - xs[i]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        return h00 * ys[i] + h10 * h * d[i] + h01 * ys[i + 1] + h11 * h * d[i + 1];
      });
  return p;
}

SpeedProfile SpeedProfile::power(double exponent) {
  if (!(exponent >= 1.0) || !std::isfinite(exponent))
    throw ValidationError("power profile: exponent must be >= 1");
  SpeedProfile p;
  p.kind_ = ProfileKind::power;
  std::ostringstream name;
  name << "power(" << exponent << ")";
  p.name_ = name.str();
  p.slope0_ = exponent == 1.0 ? 1.0 : 0.0;
  p.slope1_ = exponent;
  if (exponent == 2.0) {
    p.eval_ = std::make_shared<const std::function<double(double)>>([](double x) { return x * x; });
  } else {
    p.eval_ = std::make_shared<const std::function<double(double)>>(
        [exponent](double x) { return std::pow(x, exponent); });
  }
  // Exact second-derivative bounds (taylor order 2); for 1 < p < 2, A'' is
  // unbounded at 0 and the constants are left to the caller.
  if (exponent >= 2.0) {
    const double curv = exponent * (exponent - 1.0);
    EnvelopeConstants c;
    c.k1_upper = c.k1_lower = curv * std::pow(c.delta_b, exponent - 2.0);
    c.k2_upper = c.k2_lower = curv;
    p.constants_ = c;
  }
  return p;
}

SpeedProfile SpeedProfile::custom(std::function<double(double)> a, std::string name,
                                  double slope_at_0, double slope_at_1) {
  if (!a) throw ValidationError("custom profile: empty evaluator");
  SpeedProfile p;
  p.kind_ = ProfileKind::custom;
  p.name_ = std::move(name);
  p.slope0_ = std::isnan(slope_at_0) ? forward_slope(a) : slope_at_0;
  p.slope1_ = std::isnan(slope_at_1) ? backward_slope(a) : slope_at_1;
  p.eval_ = std::make_shared<const std::function<double(double)>>(std::move(a));
  return p;
}

double SpeedProfile::operator()(double x) const {
  if (!(x >= -kEndpointTol && x <= 1.0 + kEndpointTol)) {
    std::ostringstream msg;
    msg << "speed profile evaluated at " << x << " outside [0, 1]";
    throw RangeError(msg.str());
  }
  return (*eval_)(std::clamp(x, 0.0, 1.0));
}

SpeedProfile SpeedProfile::with_constants(EnvelopeConstants c) const {
  if (c.taylor_order < 2) throw ValidationError("envelope constants: taylor order must be >= 2");
  if (c.k1_upper < 0 || c.k1_lower < 0 || c.k2_upper < 0 || c.k2_lower < 0)
    throw ValidationError("envelope constants: bounds must be non-negative");
  if (!(c.delta_b > 0 && c.delta_b <= 1 && c.delta_e > 0 && c.delta_e <= 1))
    throw ValidationError("envelope constants: neighbourhoods must lie in (0, 1]");
  SpeedProfile p = *this;
  p.constants_ = c;
  return p;
}

double sigma2(const SpeedProfile& profile, double s, double t) {
  if (!(s >= 0.0 && s <= t)) {
    std::ostringstream msg;
    msg << "sigma2: s = " << s << " outside [0, " << t << "]";
    throw RangeError(msg.str());
  }
  if (s == t) return t;
  return t * profile(s / t);
}

void check_monotone(const SpeedProfile& profile, int grid_points) {
  double prev = profile(0.0);
  for (int i = 1; i <= grid_points; ++i) {
    const double x = static_cast<double>(i) / grid_points;
    const double v = profile(x);
    if (v < prev) {
      std::ostringstream msg;
      msg << "profile " << profile.name() << " is not non-decreasing near x = " << x;
      throw ValidationError(msg.str());
    }
    prev = v;
  }
}

void check_assumptions(const SpeedProfile& profile, int grid_points) {
  if (std::fabs(profile(0.0)) > kEndpointTol || std::fabs(profile(1.0) - 1.0) > kEndpointTol)
    throw ValidationError("assumption (A1) violated: need A(0) = 0 and A(1) = 1");
  check_monotone(profile, grid_points);
  for (int i = 1; i < grid_points; ++i) {
    const double x = static_cast<double>(i) / grid_points;
    if (!(profile(x) < x)) {
      std::ostringstream msg;
      msg << "assumption (A1) violated: A(" << x << ") = " << profile(x) << " is not < x";
      throw ValidationError(msg.str());
    }
  }
  auto eval = [&profile](double x) { return profile(x); };
  const double fd0 = forward_slope(eval);
  if (std::fabs(fd0 - profile.slope_at_0()) > kSlopeMismatch) {
    std::ostringstream msg;
    msg << "assumption (A2) violated: declared A'(0) = " << profile.slope_at_0()
        << " but finite difference gives " << fd0;
    throw ValidationError(msg.str());
  }
  const double fd1 = backward_slope(eval);
  if (std::isinf(profile.slope_at_1())) {
    if (fd1 < 1.0 / std::sqrt(kSlopeStep) / 10.0) {
      std::ostringstream msg;
      msg << "assumption (A3) violated: declared A'(1) = inf but finite difference gives " << fd1;
      throw ValidationError(msg.str());
    }
  } else if (std::fabs(fd1 - profile.slope_at_1()) > kSlopeMismatch) {
    std::ostringstream msg;
    msg << "assumption (A3) violated: declared A'(1) = " << profile.slope_at_1()
        << " but finite difference gives " << fd1;
    throw ValidationError(msg.str());
  }
}

DeltaThresholds delta_thresholds(const SpeedProfile& profile, double t) {
  if (!(t > 1.0)) throw RangeError("delta_thresholds: need t > 1");
  const double tau = std::pow(t, -2.0 / 3.0);
  DeltaThresholds d;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > kBisectionTol) {
    const double mid = 0.5 * (lo + hi);
    if (profile(mid) <= tau)
      lo = mid;
    else
      hi = mid;
  }
  d.delta_less = 0.5 * (lo + hi);
  lo = 0.0;
  hi = 1.0;
  while (hi - lo > kBisectionTol) {
    const double mid = 0.5 * (lo + hi);
    if (profile(mid) >= 1.0 - tau)
      hi = mid;
    else
      lo = mid;
  }
  d.delta_greater = 1.0 - 0.5 * (lo + hi);
  return d;
}

double flat_initial_length(const SpeedProfile& profile) {
  double lo = 0.0, hi = 1.0;
  while (hi - lo > kBisectionTol) {
    const double mid = 0.5 * (lo + hi);
    if (profile(mid) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

void check_kink(double b, const char* which) {
  if (!(b > 0.0 && b <= 1.0) || !std::isfinite(b)) {
    std::ostringstream msg;
    msg << "envelope: " << which << " kink " << b
        << " outside (0, 1]; the correction constants are too large for this t";
    throw ValidationError(msg.str());
  }
}

TwoPieceProfile make_two_piece(double initial_slope, double final_slope, double kink,
                               const char* name) {
  TwoPieceProfile out;
  out.initial_slope = initial_slope;
  out.final_slope = final_slope;
  out.kink = kink;
  out.profile = SpeedProfile::two_piece(initial_slope, final_slope, kink, name);
  return out;
}

}  // namespace

EnvelopePair build_envelopes(const SpeedProfile& profile, double t) {
  check_assumptions(profile);
  if (std::isinf(profile.slope_at_1()))
    throw ValidationError("build_envelopes: A'(1) is infinite; use build_envelopes_rho");
  const EnvelopeConstants& c = profile.constants();
  const double sb2 = profile.slope_at_0();
  const double se2 = profile.slope_at_1();
  EnvelopePair pair;
  pair.t = t;
  pair.deltas = delta_thresholds(profile, t);
  pair.flat_start = sb2 == 0.0 && flat_initial_length(profile) > kFlatTol;

  const double n_fact = factorial(c.taylor_order);
  const double dl_pow = std::pow(pair.deltas.delta_less, c.taylor_order - 1);
  const double up_final = se2 - 0.5 * c.k2_upper * pair.deltas.delta_greater;
  const double low_final = se2 + 0.5 * c.k2_lower * pair.deltas.delta_greater;

  double up_initial = pair.flat_start ? 0.0 : sb2 + c.k1_upper / n_fact * dl_pow;
  const double b_up = (1.0 - up_final) / (up_initial - up_final);
  check_kink(b_up, "upper");
  pair.upper = make_two_piece(up_initial, up_final, b_up, "upper_envelope");

  // A negative initial slope is clamped at 0; the kink is then placed where
  // the final piece reaches 0 so that the profile stays continuous.
  double low_initial = sb2 - c.k1_lower / n_fact * dl_pow;
  if (low_initial < 0.0 || pair.flat_start) low_initial = 0.0;
  const double b_low = (1.0 - low_final) / (low_initial - low_final);
  check_kink(b_low, "lower");
  pair.lower = make_two_piece(low_initial, low_final, b_low, "lower_envelope");
  return pair;
}

TwoPieceProfile build_envelopes_rho(const SpeedProfile& profile, double rho, double t) {
  if (!(rho > 1.0)) throw ValidationError("build_envelopes_rho: need rho > 1");
  if (!std::isinf(profile.slope_at_1()))
    throw ValidationError("build_envelopes_rho: profile must have A'(1) = inf");
  const EnvelopeConstants& c = profile.constants();
  const DeltaThresholds d = delta_thresholds(profile, t);
  const bool flat = profile.slope_at_0() == 0.0 && flat_initial_length(profile) > kFlatTol;
  const double initial =
      flat ? 0.0
           : profile.slope_at_0() +
                 c.k1_upper / factorial(c.taylor_order) * std::pow(d.delta_less, c.taylor_order - 1);
  const double b = (1.0 - rho) / (initial - rho);
  check_kink(b, "upper");
  return make_two_piece(initial, rho, b, "upper_envelope_rho");
}

SandwichWindows sandwich_windows(const SpeedProfile& profile, double t) {
  const DeltaThresholds d = delta_thresholds(profile, t);
  return {d.delta_less, 1.0 - d.delta_greater};
}

EnvelopeConstants estimate_envelope_constants(const SpeedProfile& profile, int taylor_order,
                                              double delta_b, double delta_e) {
  EnvelopeConstants c;
  c.taylor_order = taylor_order;
  c.delta_b = delta_b;
  c.delta_e = delta_e;
  constexpr int kSteps = 200;
  const double h = delta_b / kSteps;
  // binomial coefficients for the n-th forward difference
  std::vector<double> binom(taylor_order + 1, 1.0);
  for (int k = 1; k <= taylor_order; ++k) binom[k] = binom[k - 1] * (taylor_order - k + 1) / k;
  double k1 = 0.0;
  for (int i = 0; i + taylor_order <= kSteps; ++i) {
    double diff = 0.0;
    for (int k = 0; k <= taylor_order; ++k) {
      const double sign = ((taylor_order - k) % 2 == 0) ? 1.0 : -1.0;
      diff += sign * binom[k] * profile((i + k) * h);
    }
    k1 = std::max(k1, std::fabs(diff) / std::pow(h, taylor_order));
  }
  const double he = delta_e / kSteps;
  double k2 = 0.0;
  for (int i = 0; i + 2 <= kSteps; ++i) {
    const double x = 1.0 - delta_e + i * he;
    k2 = std::max(k2, std::fabs(profile(x + 2 * he) - 2 * profile(x + he) + profile(x)) / (he * he));
  }
  c.k1_upper = c.k1_lower = k1;
  c.k2_upper = c.k2_lower = k2;
  return c;
}

}  // namespace vsbbm
