#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vsbbm/speed.hpp"

namespace vsbbm {

enum class ExperimentKind { simulate, fkpp, compare, cluster, tube, martingale };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

struct ProfileSpec {
  std::string kind = "identity";  // identity | two_speed | power | piecewise | table
  double sigma1_sq = 0.5;
  double sigma2_sq = 2.0;
  double b = 2.0 / 3.0;
  double exponent = 2.0;
  std::vector<double> xs, ys;
  std::string breakpoints;  // CSV file with columns x,y (relative to the config file)
  std::optional<EnvelopeConstants> constants;
};

SpeedProfile build_profile(const ProfileSpec& spec);

// Reads "x,y" rows (header optional) into xs, ys.
void read_breakpoints_csv(const std::filesystem::path& path, std::vector<double>& xs,
                          std::vector<double>& ys);

// Sections and keys:
//   [experiment] kind t replicates seed workers out
//   [profile]    kind sigma1_sq sigma2_sq b exponent xs ys breakpoints
//                k1_upper k1_lower k2_upper k2_lower taylor_order delta_b delta_e
//   [offspring]  p                      (p_1, p_2, ...)
//   [grid]       u c
//   [martingale] sigma_b
//   [fkpp]       dx dt scheme log_tail track_every sigma_e
//   [tube]       r gamma step
//   [cluster]    sigma_e R overshoot max_attempts gamma
// Lists are comma separated. Unknown sections or keys are errors.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::simulate;
  bool kind_given = false;  // [experiment] kind present in the parsed file
  ProfileSpec profile;
  std::vector<double> offspring{0.0, 1.0};
  double t = 5.0;
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out = "vsbbm_out";

  std::vector<double> u_grid{-1.0, 0.0, 1.0};
  std::vector<double> c_values{0.5, 1.0};

  std::vector<double> sigma_b{0.0, 0.3, 0.6};

  double dx = 0.05;
  double dt = 0.0;
  std::string scheme = "explicit";  // explicit | crank_nicolson
  bool log_tail = true;
  double track_every = 1.0;
  std::vector<double> tail_sigma_e;

  double tube_r = 10.0;
  double tube_gamma = 0.75;
  double tube_step = 0.01;

  std::vector<double> cluster_sigma_e{1.2, 1.5, 2.0};
  double cluster_r = 2.0;
  std::string overshoot = "zero";  // zero | exponential
  long max_attempts = 100000;
  double bound_gamma = 0.75;

  // Checks every field; throws ValidationError.
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in,
                              const std::filesystem::path& base_dir = std::filesystem::path("."));
ExperimentConfig load_config(const std::filesystem::path& path);

// Fixed-order key=value rendering of every field that affects results
// (worker count and output directory excluded).
std::string canonical_config(const ExperimentConfig& config);
// 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace vsbbm
