#include "vsbbm/tube.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "vsbbm/error.hpp"
#include "vsbbm/extremal.hpp"
#include "vsbbm/rng.hpp"

namespace vsbbm {

void TubeSpec::validate() const {
  if (!(gamma > 0.5 && gamma < 1.0)) throw ValidationError("tube: gamma must lie in (1/2, 1)");
  if (!(r >= 0.0)) throw ValidationError("tube: r must be non-negative");
  if (!(t > 0.0)) throw ValidationError("tube: horizon must be positive");
}

double TubeSpec::radius(double v) const { return std::pow(std::min(v, t - v), gamma); }

bool in_tube(std::span<const PathPoint> path, const TubeSpec& spec, const SpeedProfile& profile) {
  spec.validate();
  if (path.size() < 2) throw ValidationError("in_tube: path needs at least two points");
  const double max_gap = spec.t / kMinTubeDivisions;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i].s - path[i - 1].s > max_gap * (1.0 + 1e-9)) {
      std::ostringstream msg;
      msg << "in_tube: path resolution " << path[i].s - path[i - 1].s << " coarser than t/"
          << kMinTubeDivisions;
      throw ValidationError(msg.str());
    }
  }
  const double x_end = path.back().x;
  for (const PathPoint& p : path) {
    const double v = sigma2(profile, p.s, spec.t);
    if (v < spec.r || v > spec.t - spec.r) continue;
    if (!(std::fabs(p.x - v / spec.t * x_end) < spec.radius(v))) return false;
  }
  return true;
}

bool in_tube(const ParticleConfiguration& config, std::size_t leaf, const TubeSpec& spec) {
  if (!config.skeleton())
    throw ValidationError("in_tube: configuration has no skeleton; sample in skeleton mode");
  const auto path = config.lineage_path(leaf);
  return in_tube(path, spec, config.profile());
}

namespace {

double bound_term(double k, double gamma) {
  return std::pow(k, 0.5 - gamma) * std::exp(-0.5 * std::pow(k, 2.0 * gamma - 1.0));
}

// Integral of the summand over [k0, inf) via the upper incomplete gamma
// function, plus the first two Euler-Maclaurin corrections.
double series_tail(double k0, double gamma) {
  const double alpha = 2.0 * gamma - 1.0;
  const double q = (2.5 - 3.0 * gamma) / alpha;
  const double w0 = 0.5 * std::pow(k0, alpha);
  double integral;
  try {
    integral = 2.0 / alpha * std::pow(2.0, q) * boost::math::tgamma(q + 1.0, w0);
  } catch (const std::overflow_error&) {
    return std::numeric_limits<double>::infinity();
  }
  const double f = bound_term(k0, gamma);
  const double df = f * ((0.5 - gamma) / k0 - 0.5 * alpha * std::pow(k0, alpha - 1.0));
  return integral + 0.5 * f - df / 12.0;
}

}  // namespace

double bridge_violation_bound(double r, double gamma) {
  if (!(gamma > 0.5)) throw ValidationError("bridge_violation_bound: series diverges for gamma <= 1/2");
  if (!(r >= 1.0)) throw RangeError("bridge_violation_bound: need r >= 1");
  constexpr long kDirectTerms = 5'000'000;
  const double k_start = std::floor(r);
  CompensatedSum sum;
  for (long i = 0; i < kDirectTerms; ++i) {
    const double term = bound_term(k_start + static_cast<double>(i), gamma);
    sum.add(term);
    if (term < 1e-16 * sum.value()) return 8.0 * sum.value();
  }
  // Slowly decaying series (gamma close to 1/2): close with the tail integral.
  return 8.0 * (sum.value() + series_tail(k_start + static_cast<double>(kDirectTerms), gamma));
}

BridgeDraw sample_bridge(double t, double step, std::uint64_t seed) {
  if (!(t > 0.0) || !(step > 0.0) || step > t)
    throw ValidationError("sample_bridge: need 0 < step <= t");
  const auto n = static_cast<std::size_t>(std::ceil(t / step - 1e-9));
  const double h = t / static_cast<double>(n);
  CounterRng rng(seed);
  BridgeDraw d;
  d.times.resize(n + 1);
  std::vector<double> b(n + 1, 0.0);
  const double sd = std::sqrt(h);
  for (std::size_t k = 1; k <= n; ++k) {
    b[k] = b[k - 1] + sd * rng.normal();
    d.times[k] = static_cast<double>(k) * h;
  }
  d.times[n] = t;
  d.endpoint = b[n];
  d.bridge.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) d.bridge[k] = b[k] - d.times[k] / t * b[n];
  return d;
}

BridgeViolationResult empirical_bridge_violation(double t, double r, double gamma, double step,
                                                 std::size_t replicates, std::uint64_t seed,
                                                 bool negate) {
  if (!(gamma > 0.5)) throw ValidationError("empirical_bridge_violation: need gamma > 1/2");
  if (replicates == 0) throw ValidationError("empirical_bridge_violation: no replicates");
  BridgeViolationResult out;
  out.replicates.resize(replicates);
  std::vector<double> flags(replicates, 0.0);
  if (r >= t / 2.0) {
    out.rate = mean_and_se(flags);
    return out;
  }
  // t = 3r itself is admitted (the window [r, 2r] is still non-trivial).
  if (t < 3.0 * r) {
    std::ostringstream msg;
    msg << "empirical_bridge_violation: need t >= 3r (t = " << t << ", r = " << r << ")";
    throw RangeError(msg.str());
  }
  for (std::size_t rep = 0; rep < replicates; ++rep) {
    const BridgeDraw d = sample_bridge(t, step, derive_key(seed, rep));
    for (std::size_t k = 0; k < d.times.size(); ++k) {
      const double s = d.times[k];
      if (s < r || s > t - r) continue;
      const double xi = negate ? -d.bridge[k] : d.bridge[k];
      if (std::fabs(xi) > std::pow(std::min(s, t - s), gamma)) {
        out.replicates[rep] = {true, s};
        flags[rep] = 1.0;
        break;
      }
    }
  }
  out.rate = mean_and_se(flags);
  return out;
}

void write_violation_csv(std::ostream& os, std::span<const BridgeViolationReplicate> reps) {
  os.precision(17);
  os << "replicate,violated,first_violation_time\n";
  for (std::size_t i = 0; i < reps.size(); ++i) {
    os << i << ',' << (reps[i].violated ? 1 : 0) << ',';
    if (reps[i].violated) os << reps[i].first_violation;
    os << '\n';
  }
}

bool has_extreme_tube_violation(const ParticleConfiguration& config, double d,
                                const TubeSpec& spec) {
  if (std::fabs(config.horizon() - spec.t) > 1e-12 * std::max(1.0, spec.t))
    throw ValidationError("localization: configuration horizon does not match the tube");
  const double level = centering(config.horizon(), Centering::tilde) + d;
  const auto xs = config.leaf_positions();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > level && !in_tube(config, i, spec)) return true;
  }
  return false;
}

double extreme_particle_localization(std::span<const ParticleConfiguration> configs, double d,
                                     const TubeSpec& spec) {
  if (configs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const ParticleConfiguration& c : configs)
    if (has_extreme_tube_violation(c, d, spec)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(configs.size());
}

}  // namespace vsbbm
