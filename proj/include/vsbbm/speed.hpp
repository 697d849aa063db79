#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace vsbbm {

inline constexpr double kInfiniteSlope = std::numeric_limits<double>::infinity();

// Bounds on the comparison functions around 0 and 1: |B^(n)| <= K1 on
// [0, delta_b] and |C''| <= K2 on [1 - delta_e, 1]. Supplied by the user;
// `estimate_envelope_constants` gives a finite-difference guess.
struct EnvelopeConstants {
  double k1_upper = 0.0;
  double k1_lower = 0.0;
  double k2_upper = 0.0;
  double k2_lower = 0.0;
  int taylor_order = 2;
  double delta_b = 0.1;
  double delta_e = 0.1;
};

enum class ProfileKind { identity, two_speed, piecewise, table, power, custom };

// A non-decreasing speed function A : [0,1] -> [0,1] with A(0)=0, A(1)=1.
// Immutable; copies share the evaluator.
class SpeedProfile {
 public:
  static SpeedProfile identity();
  // A(x) = sigma1_sq x up to b, then slope sigma2_sq. Requires
  // sigma1_sq b + sigma2_sq (1-b) = 1.
  static SpeedProfile two_speed(double sigma1_sq, double sigma2_sq, double b);
  // Linear interpolation through (x_i, y_i); x must start at 0 and end at 1.
  static SpeedProfile piecewise_linear(std::vector<double> xs, std::vector<double> ys);
  // Slope `initial_slope` on [0, kink], then 1 + final_slope (x - 1).
  // Continuity at the kink is the caller's responsibility.
  static SpeedProfile two_piece(double initial_slope, double final_slope, double kink,
                                std::string name);
  // Monotone cubic (Fritsch-Carlson) interpolation of a dense table.
  static SpeedProfile table(std::vector<double> xs, std::vector<double> ys);
  // A(x) = x^p, p >= 1.
  static SpeedProfile power(double exponent);
  // Arbitrary closed form. Slopes that are NaN are estimated by one-sided
  // finite differences with step 1e-6.
  static SpeedProfile custom(std::function<double(double)> a, std::string name,
                             double slope_at_0 = std::numeric_limits<double>::quiet_NaN(),
                             double slope_at_1 = std::numeric_limits<double>::quiet_NaN());

  double operator()(double x) const;
  double slope_at_0() const noexcept { return slope0_; }
  double slope_at_1() const noexcept { return slope1_; }
  ProfileKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  // Breakpoints for piecewise / two-speed / identity profiles, empty otherwise.
  const std::vector<double>& breakpoints_x() const noexcept { return bx_; }
  const std::vector<double>& breakpoints_y() const noexcept { return by_; }

  const EnvelopeConstants& constants() const noexcept { return constants_; }
  SpeedProfile with_constants(EnvelopeConstants c) const;

 private:
  SpeedProfile() = default;
  std::shared_ptr<const std::function<double(double)>> eval_;
  double slope0_ = 1.0;
  double slope1_ = 1.0;
  ProfileKind kind_ = ProfileKind::identity;
  std::string name_;
  std::vector<double> bx_, by_;
  EnvelopeConstants constants_;
};

// Sigma^2(s) = t A(s/t) for 0 <= s <= t.
double sigma2(const SpeedProfile& profile, double s, double t);

// Checks A(0)=0, A(1)=1, monotonicity, A(x) < x on the interior, and the
// declared end slopes against finite differences. Throws ValidationError
// naming the failed assumption.
void check_assumptions(const SpeedProfile& profile, int grid_points = 10'000);
void check_monotone(const SpeedProfile& profile, int grid_points = 10'000);

struct DeltaThresholds {
  double delta_less = 0.0;     // sup{x : A(x) <= t^{-2/3}}
  double delta_greater = 0.0;  // 1 - inf{x : A(x) >= 1 - t^{-2/3}}
};
inline constexpr double kBisectionTol = 1e-10;
DeltaThresholds delta_thresholds(const SpeedProfile& profile, double t);

// Length of the initial piece on which A vanishes identically (0 when A > 0
// immediately to the right of 0), to bisection tolerance.
double flat_initial_length(const SpeedProfile& profile);

// One-kink piecewise-linear profile: slope `initial_slope` (clamped at 0) on
// [0, kink], then 1 + final_slope (x - 1).
struct TwoPieceProfile {
  SpeedProfile profile = SpeedProfile::identity();
  double initial_slope = 0.0;
  double final_slope = 0.0;
  double kink = 1.0;
};

struct EnvelopePair {
  TwoPieceProfile upper;
  TwoPieceProfile lower;
  double t = 0.0;
  DeltaThresholds deltas;
  bool flat_start = false;
};

EnvelopePair build_envelopes(const SpeedProfile& profile, double t);
// Upper envelope for profiles with infinite final slope: final slope rho.
TwoPieceProfile build_envelopes_rho(const SpeedProfile& profile, double rho, double t);

// The s-ranges on which the envelope ordering holds: s/t in [0, delta_less]
// and [1 - delta_greater, 1].
struct SandwichWindows {
  double initial_end = 0.0;  // as a fraction of t
  double final_start = 1.0;
};
SandwichWindows sandwich_windows(const SpeedProfile& profile, double t);

// Approximate: max |A^(n)| on [0, delta_b] and max |A''| on [1-delta_e, 1]
// from finite differences of A itself.
EnvelopeConstants estimate_envelope_constants(const SpeedProfile& profile, int taylor_order = 2,
                                              double delta_b = 0.1, double delta_e = 0.1);

}  // namespace vsbbm
