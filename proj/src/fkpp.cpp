#include "vsbbm/fkpp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "vsbbm/error.hpp"

namespace vsbbm {

namespace {

constexpr double kRangeSlack = 1e-9;
// Nodes enter the log tail only once representable and with moderate slope,
// which keeps the explicit w-update (advection speed |w_x|) stable.
constexpr double kLogTailMinU = 1e-200;
constexpr double kLogTailMaxSlope = 12.0;
constexpr double kLogFloorU = 1e-300;

void validate_options(const FkppOptions& o) {
  if (!(o.dx > 0.0) || !std::isfinite(o.dx)) throw ValidationError("fkpp: dx must be positive");
  if (o.dt < 0.0 || !std::isfinite(o.dt)) throw ValidationError("fkpp: dt must be >= 0");
  if (o.buffer < 0.0) throw ValidationError("fkpp: buffer must be >= 0");
  if (o.track_every < 0.0) throw ValidationError("fkpp: track_every must be >= 0");
  if (!(o.jump_value >= 0.0 && o.jump_value <= 1.0))
    throw ValidationError("fkpp: jump_value must lie in [0, 1]");
  if (o.log_tail && o.scheme == FkppScheme::crank_nicolson)
    throw ValidationError("fkpp: the log-space tail is only available with the explicit scheme");
}

}  // namespace

std::size_t FkppGrid::size() const {
  if (!(dx > 0.0) || !(x_max > x_min)) throw ValidationError("fkpp: empty grid");
  return static_cast<std::size_t>(std::llround((x_max - x_min) / dx)) + 1;
}

FkppState::FkppState(FkppGrid grid, std::vector<double> initial, OffspringDistribution offspring,
                     FkppOptions options)
    : grid_(grid), offspring_(std::move(offspring)), options_(options) {
  validate_options(options_);
  if (std::abs(grid_.dx - options_.dx) > 1e-15)
    throw ValidationError("fkpp: grid dx differs from options dx");
  if (initial.size() != grid_.size()) throw ValidationError("fkpp: initial data size mismatch");
  if (initial.size() < 4) throw ValidationError("fkpp: grid needs at least 4 nodes");
  for (double v : initial)
    if (!(v >= -kRangeSlack && v <= 1.0 + kRangeSlack))
      throw ValidationError("fkpp: initial data outside [0, 1]");
  u_ = std::move(initial);
  for (double& v : u_) v = std::clamp(v, 0.0, 1.0);
  u_.front() = 1.0;
  u_.back() = 0.0;
  w_.assign(u_.size(), 0.0);
  mode_.assign(u_.size(), 0);
  if (options_.log_tail) update_modes();
  if (options_.track_every > 0.0) {
    history_.push_back({0.0, front()});
    next_track_ = options_.track_every;
  }
}

FkppState FkppState::heaviside(FkppGrid grid, OffspringDistribution offspring,
                               FkppOptions options) {
  std::vector<double> u(grid.size());
  const double eps = 1e-9 * grid.dx;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = grid.x(i);
    u[i] = x < -eps ? 1.0 : (x <= eps ? options.jump_value : 0.0);
  }
  return FkppState(grid, std::move(u), std::move(offspring), options);
}

double FkppState::log_u(std::size_t i) const {
  if (mode_.at(i)) return w_[i];
  return u_[i] > 0.0 ? std::log(u_[i]) : -std::numeric_limits<double>::infinity();
}

double FkppState::log_u_at(double x) const {
  if (x < grid_.x_min || x > grid_.x_max)
    throw RangeError("fkpp: evaluation point outside the grid");
  double pos = (x - grid_.x_min) / grid_.dx;
  auto i = static_cast<std::size_t>(std::floor(pos));
  if (i >= size() - 1) return log_u(size() - 1);
  double frac = pos - static_cast<double>(i);
  double a = log_u(i), b = log_u(i + 1);
  if (frac == 0.0) return a;
  return a + frac * (b - a);
}

double FkppState::front() const {
  for (std::size_t i = 1; i < u_.size(); ++i) {
    if (u_[i] < 0.5) {
      double a = u_[i - 1], b = u_[i];
      if (a <= 0.5) return grid_.x(i - 1);
      return grid_.x(i - 1) + (a - 0.5) / (a - b) * grid_.dx;
    }
  }
  return grid_.x_max;
}

void FkppState::check_buffer() const {
  double f = front();
  if (grid_.x_max - f < options_.buffer) {
    std::ostringstream msg;
    msg << "fkpp: front " << f << " entered the right buffer zone at t=" << time_
        << "; widen the grid (x_max=" << grid_.x_max << ")";
    throw RangeError(msg.str());
  }
}

void FkppState::update_modes() {
  const std::size_t n = u_.size();
  double f = front();
  std::size_t first = n;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (grid_.x(i) > f + options_.log_tail_offset) {
      first = i;
      break;
    }
  }
  std::size_t end = first;
  if (first < n && u_[first - 1] > 0.0) {
    double prev = std::log(u_[first - 1]);
    for (std::size_t i = first; i + 1 < n; ++i) {
      double lv;
      if (mode_[i]) {
        lv = w_[i];
      } else if (u_[i] >= kLogTailMinU) {
        lv = std::log(u_[i]);
      } else {
        break;
      }
      if (std::abs(lv - prev) / grid_.dx > kLogTailMaxSlope) break;
      prev = lv;
      end = i + 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    bool want = i >= first && i < end;
    if (want && !mode_[i]) {
      w_[i] = std::log(u_[i]);
      mode_[i] = 1;
    } else if (!want && mode_[i]) {
      u_[i] = std::exp(w_[i]);
      mode_[i] = 0;
    }
  }
}

void FkppState::step_explicit(double dt) {
  const std::size_t n = u_.size();
  const double dx = grid_.dx, inv_dx2 = 1.0 / (dx * dx), inv_2dx = 0.5 / dx;
  scratch_u_ = u_;
  scratch_w_ = w_;
  const auto& ou = scratch_u_;
  const auto& ow = scratch_w_;
  auto log_old = [&](std::size_t j) { return mode_[j] ? ow[j] : std::log(ou[j]); };

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!mode_[i]) {
      double u = ou[i];
      double next = u + dt * (0.5 * (ou[i - 1] - 2.0 * u + ou[i + 1]) * inv_dx2 +
                              offspring_.reaction(u));
      if (next < -kRangeSlack || next > 1.0 + kRangeSlack) {
        std::ostringstream msg;
        msg << "fkpp: u=" << next << " left [0, 1] at x=" << grid_.x(i) << ", t=" << time_ + dt;
        throw StabilityError(msg.str());
      }
      u_[i] = std::clamp(next, 0.0, 1.0);
    } else {
      double w = ow[i];
      double wl = log_old(i - 1);
      double wr;
      if (mode_[i + 1])
        wr = ow[i + 1];
      else if (ou[i + 1] > kLogFloorU)
        wr = std::log(ou[i + 1]);
      else
        wr = 2.0 * w - wl;
      double grad = (wr - wl) * inv_2dx;
      double next = w + dt * (0.5 * ((wl - 2.0 * w + wr) * inv_dx2 + grad * grad) +
                              offspring_.reaction_over_u(std::exp(w)));
      if (next > kRangeSlack || std::isnan(next)) {
        std::ostringstream msg;
        msg << "fkpp: log u=" << next << " invalid at x=" << grid_.x(i) << ", t=" << time_ + dt;
        throw StabilityError(msg.str());
      }
      w_[i] = std::min(next, 0.0);
      u_[i] = std::exp(w_[i]);
    }
  }
  u_.front() = 1.0;
  u_.back() = 0.0;
}

void FkppState::step_crank_nicolson(double dt) {
  // (I - dt/2 L) u' = (I + dt/2 L) u + dt F(u), Dirichlet ends, Thomas solve.
  const std::size_t n = u_.size();
  const double r = 0.25 * dt / (grid_.dx * grid_.dx);
  const std::size_t m = n - 2;
  std::vector<double> rhs(m), c(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t i = k + 1;
    rhs[k] = u_[i] + r * (u_[i - 1] - 2.0 * u_[i] + u_[i + 1]) + dt * offspring_.reaction(u_[i]);
  }
  rhs[0] += r * 1.0;  // left boundary at the new level
  const double a = -r, b = 1.0 + 2.0 * r;
  c[0] = a / b;
  rhs[0] /= b;
  for (std::size_t k = 1; k < m; ++k) {
    double denom = b - a * c[k - 1];
    c[k] = a / denom;
    rhs[k] = (rhs[k] - a * rhs[k - 1]) / denom;
  }
  for (std::size_t k = m - 1; k-- > 0;) rhs[k] -= c[k] * rhs[k + 1];
  for (std::size_t k = 0; k < m; ++k) {
    double v = rhs[k];
    if (v < -kRangeSlack || v > 1.0 + kRangeSlack) {
      std::ostringstream msg;
      msg << "fkpp: u=" << v << " left [0, 1] at x=" << grid_.x(k + 1) << ", t=" << time_ + dt;
      throw StabilityError(msg.str());
    }
    u_[k + 1] = std::clamp(v, 0.0, 1.0);
  }
  u_.front() = 1.0;
  u_.back() = 0.0;
}

void FkppState::advance(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("fkpp: dt must be positive");
  if (options_.scheme == FkppScheme::explicit_euler) {
    if (dt > 0.5 * grid_.dx * grid_.dx * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "fkpp: dt=" << dt << " exceeds the explicit stability limit dx^2/2="
          << 0.5 * grid_.dx * grid_.dx;
      throw StabilityError(msg.str());
    }
    step_explicit(dt);
  } else {
    step_crank_nicolson(dt);
  }
  time_ += dt;
  if (options_.log_tail) update_modes();
}

void FkppState::advance_to(double t_end) {
  if (t_end < time_) throw ValidationError("fkpp: cannot step backwards in time");
  const double dt = options_.time_step();
  if (options_.scheme == FkppScheme::explicit_euler && dt > 0.5 * grid_.dx * grid_.dx * (1.0 + 1e-12))
    throw StabilityError("fkpp: dt exceeds the explicit stability limit dx^2/2");
  auto steps = static_cast<long long>(std::ceil((t_end - time_) / dt - 1e-9));
  const double start = time_;
  for (long long k = 1; k <= steps; ++k) {
    double target = k == steps ? t_end : start + static_cast<double>(k) * dt;
    advance(target - time_);
    time_ = target;
    if (options_.track_every > 0.0 && time_ >= next_track_ - 1e-9) {
      history_.push_back({time_, front()});
      next_track_ += options_.track_every;
    }
    if ((k & 63) == 0 || k == steps) check_buffer();
  }
  if (options_.track_every > 0.0 && (history_.empty() || history_.back().t < time_ - 1e-12))
    history_.push_back({time_, front()});
}

void FkppState::write_csv(std::ostream& os) const {
  os.precision(17);
  os << "x,u,log_u\n";
  for (std::size_t i = 0; i < size(); ++i) os << grid_.x(i) << ',' << u_[i] << ',' << log_u(i) << '\n';
}

void FkppState::write_front_csv(std::ostream& os) const {
  os.precision(17);
  os << "t,front\n";
  for (const auto& s : history_) os << s.t << ',' << s.front << '\n';
}

FkppState step(const FkppState& state, double dt) {
  FkppState next = state;
  next.advance(dt);
  return next;
}

FkppGrid default_grid(double t_end, double dx, double sigma_e, std::optional<double> eval_point) {
  if (t_end < 0.0) throw ValidationError("fkpp: t_end must be >= 0");
  double hi = std::numbers::sqrt2 * t_end + 40.0 * sigma_e;
  if (eval_point) hi = std::max(hi, *eval_point + 40.0);
  FkppGrid g;
  g.x_min = -50.0;
  g.dx = dx;
  g.x_max = g.x_min + std::ceil((hi - g.x_min) / dx) * dx;
  return g;
}

FkppState solve_heaviside(const OffspringDistribution& offspring, double t_end,
                          const FkppOptions& options, std::optional<FkppGrid> grid) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ValidationError("fkpp: t_end must be >= 0");
  FkppGrid g = grid ? *grid : default_grid(t_end, options.dx);
  FkppState state = FkppState::heaviside(g, offspring, options);
  state.advance_to(t_end);
  return state;
}

namespace {

double tail_functional(const FkppState& s, double sigma_e, double t) {
  const double x = std::numbers::sqrt2 * (sigma_e - 1.0) * t;
  const double lu = s.log_u_at(x + std::numbers::sqrt2 * t);
  return sigma_e * std::exp(std::numbers::sqrt2 * x + x * x / (2.0 * t) + 0.5 * std::log(t) + lu);
}

}  // namespace

TailConstantEstimate tail_constant(const OffspringDistribution& offspring, double sigma_e, double t,
                                   const FkppOptions& options) {
  if (!(sigma_e > 1.0)) throw ValidationError("tail_constant: sigma_e must exceed 1");
  if (!(t > 0.0)) throw ValidationError("tail_constant: t must be positive");
  const double eval = std::numbers::sqrt2 * sigma_e * t;
  FkppGrid g = default_grid(t, options.dx, sigma_e, eval);
  if (eval > g.x_max - options.buffer) throw RangeError("tail_constant: evaluation point outside grid");
  FkppOptions opts = options;
  opts.jump_value = 0.5;
  FkppState s = FkppState::heaviside(g, offspring, opts);
  TailConstantEstimate est;
  est.sigma_e = sigma_e;
  est.t = t;
  s.advance_to(0.5 * t);
  est.value_half = tail_functional(s, sigma_e, 0.5 * t);
  s.advance_to(t);
  est.value = tail_functional(s, sigma_e, t);
  est.extrapolated = 2.0 * est.value - est.value_half;
  return est;
}

double tail_constant_limit() { return 1.0 / std::sqrt(4.0 * std::numbers::pi); }

}  // namespace vsbbm
