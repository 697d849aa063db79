#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "vsbbm/sampler.hpp"
#include "vsbbm/speed.hpp"
#include "vsbbm/stats.hpp"

namespace vsbbm {

// Tube |X(s) - Sigma^2(s)/t X(t)| < (Sigma^2(s) ^ (t - Sigma^2(s)))^gamma for
// every s with Sigma^2(s) in [r, t - r].
struct TubeSpec {
  double gamma = 0.75;
  double r = 0.0;
  double t = 0.0;

  void validate() const;
  double radius(double variance_clock) const;
};

// Minimal grid resolution accepted by in_tube.
inline constexpr int kMinTubeDivisions = 256;

bool in_tube(std::span<const PathPoint> path, const TubeSpec& spec, const SpeedProfile& profile);
bool in_tube(const ParticleConfiguration& config, std::size_t leaf, const TubeSpec& spec);

// 8 sum_{k >= floor(r)} k^{1/2 - gamma} exp(-k^{2 gamma - 1} / 2).
double bridge_violation_bound(double r, double gamma);

struct BridgeViolationReplicate {
  bool violated = false;
  double first_violation = -1.0;  // -1 when not violated
};

struct BridgeViolationResult {
  Estimate rate;
  std::vector<BridgeViolationReplicate> replicates;
};

// Standard Brownian path on the grid {k step} in [0, t] together with its
// endpoint; the bridge is xi(s) = B(s) - (s/t) B(t).
struct BridgeDraw {
  std::vector<double> times;
  std::vector<double> bridge;
  double endpoint = 0.0;
};
BridgeDraw sample_bridge(double t, double step, std::uint64_t seed);

// Monte Carlo rate of {exists s in [r, t-r] : |xi(s)| > (s ^ (t-s))^gamma} for
// a 0 -> 0 Brownian bridge of length t, checked on the grid. `negate` flips
// the bridge sign (used for the reflection-symmetry check).
BridgeViolationResult empirical_bridge_violation(double t, double r, double gamma, double step,
                                                 std::size_t replicates, std::uint64_t seed,
                                                 bool negate = false);

void write_violation_csv(std::ostream& os, std::span<const BridgeViolationReplicate> reps);

// Fraction of configurations that contain a leaf above m~(t) + d whose
// ancestral path leaves the tube.
double extreme_particle_localization(std::span<const ParticleConfiguration> configs, double d,
                                     const TubeSpec& spec);
bool has_extreme_tube_violation(const ParticleConfiguration& config, double d,
                                const TubeSpec& spec);

}  // namespace vsbbm
