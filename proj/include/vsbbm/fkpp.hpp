#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vsbbm/genealogy.hpp"

namespace vsbbm {

enum class FkppScheme { explicit_euler, crank_nicolson };

struct FkppGrid {
  double x_min = -50.0;
  double x_max = 100.0;
  double dx = 0.05;

  std::size_t size() const;
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx; }
};

struct FkppOptions {
  double dx = 0.05;
  double dt = 0.0;  // 0 selects dx^2 / 4
  FkppScheme scheme = FkppScheme::explicit_euler;
  // Far ahead of the front (front + offset), nodes are evolved as log u.
  bool log_tail = true;
  double log_tail_offset = 10.0;
  // Minimal distance between the front and x_max.
  double buffer = 20.0;
  // Interval between recorded front positions; 0 records none.
  double track_every = 1.0;
  // Value of Heaviside data at a node sitting exactly on the jump. 1 samples
  // 1{x <= 0} pointwise; 1/2 is the cell average and removes the O(dx)
  // shift of the step, which matters for tail evaluations.
  double jump_value = 1.0;

  double time_step() const { return dt > 0.0 ? dt : dx * dx / 4.0; }
};

struct FrontSample {
  double t = 0.0;
  double front = 0.0;
};

// u(t, .) on a uniform grid with Dirichlet data u(x_min) = 1, u(x_max) = 0.
class FkppState {
 public:
  FkppState(FkppGrid grid, std::vector<double> initial, OffspringDistribution offspring,
            FkppOptions options = {});
  static FkppState heaviside(FkppGrid grid, OffspringDistribution offspring,
                             FkppOptions options = {});

  double time() const noexcept { return time_; }
  const FkppGrid& grid() const noexcept { return grid_; }
  const FkppOptions& options() const noexcept { return options_; }
  const OffspringDistribution& offspring() const noexcept { return offspring_; }
  std::size_t size() const noexcept { return u_.size(); }

  // u may underflow to 0 in the log-space tail; log_u does not.
  std::span<const double> values() const noexcept { return u_; }
  double log_u(std::size_t i) const;
  // Linear interpolation of log u at x.
  double log_u_at(double x) const;
  bool in_log_mode(std::size_t i) const { return mode_.at(i) != 0; }

  // Level-1/2 crossing, linear interpolation between the bracketing nodes.
  double front() const;
  const std::vector<FrontSample>& front_history() const noexcept { return history_; }

  // One step of size dt (<= dx^2/2 in explicit mode).
  void advance(double dt);
  // Steps until `t_end` with the configured dt, recording the front.
  void advance_to(double t_end);

  void write_csv(std::ostream& os) const;
  void write_front_csv(std::ostream& os) const;

 private:
  void step_explicit(double dt);
  void step_crank_nicolson(double dt);
  void update_modes();
  void check_buffer() const;

  FkppGrid grid_;
  OffspringDistribution offspring_;
  FkppOptions options_;
  double time_ = 0.0;
  double next_track_ = 0.0;
  std::vector<double> u_;
  std::vector<double> w_;
  std::vector<std::uint8_t> mode_;
  std::vector<double> scratch_u_, scratch_w_;
  std::vector<FrontSample> history_;
};

// Functional form of a single step.
FkppState step(const FkppState& state, double dt);

// Default grid [-50, sqrt2 t_end + 40 sigma_e] widened to cover `eval_point`.
FkppGrid default_grid(double t_end, double dx, double sigma_e = 1.0,
                      std::optional<double> eval_point = std::nullopt);

FkppState solve_heaviside(const OffspringDistribution& offspring, double t_end,
                          const FkppOptions& options = {},
                          std::optional<FkppGrid> grid = std::nullopt);

struct TailConstantEstimate {
  double sigma_e = 0.0;
  double t = 0.0;
  double value = 0.0;         // at t
  double value_half = 0.0;    // same functional at t/2
  double extrapolated = 0.0;  // 2 value - value_half, assuming O(1/t) error
};

// sigma_e e^{sqrt2 x} e^{x^2/2t} t^{1/2} u(t, x + sqrt2 t) at x = sqrt2 (sigma_e - 1) t,
// from Heaviside data with the jump node set to 1/2.
TailConstantEstimate tail_constant(const OffspringDistribution& offspring, double sigma_e,
                                   double t, const FkppOptions& options = {});

// The large-sigma_e limit 1/sqrt(4 pi).
double tail_constant_limit();

}  // namespace vsbbm
