#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vsbbm/genealogy.hpp"
#include "vsbbm/sampler.hpp"

namespace vsbbm {

// Level sqrt2 sigma_e t that the maximum is conditioned to exceed.
double conditioning_level(double sigma_e, double t);

// First-moment bound e^t P(N(0,t) > sqrt2 sigma_e t) <= e^{(1-sigma_e^2) t} / (2 sigma_e sqrt(pi t)),
// used as the acceptance estimate of the rejection sampler.
double acceptance_estimate(double sigma_e, double t);

inline constexpr double kMinAcceptance = 1e-6;

struct ConditionedSample {
  ParticleConfiguration config;
  long attempts = 0;
  double acceptance_estimate = 0.0;
};

// Standard BBM conditioned on max > sqrt2 sigma_e t, by rejection. Attempt k
// uses the sub-streams derived from (seed, k). Throws RejectionExhausted.
ConditionedSample conditioned_sample(const OffspringDistribution& offspring, double sigma_e,
                                     double t, std::uint64_t seed, long max_attempts,
                                     std::size_t node_cap = kDefaultNodeCap);

// Leaf positions minus sqrt2 sigma_e t, descending.
std::vector<double> decoration_atoms(const ParticleConfiguration& config, double sigma_e, double t);

// Number of atoms >= -r (atoms sorted descending).
std::size_t atoms_at_least(std::span<const double> atoms, double r);

struct SpineSubtree {
  double root_time = 0.0;
  double root_position = 0.0;
  ParticleConfiguration config;  // relative to the root, horizon t - root_time
};

struct SpineRealization {
  double sigma_e = 0.0;
  double y = 0.0;
  double t = 0.0;
  double endpoint = 0.0;  // sqrt2 sigma_e t + y
  std::vector<PathPoint> spine;  // bridge values at grid and branch times, (0,0) and (t, endpoint)
  std::vector<double> branch_times;
  std::vector<double> branch_positions;
  std::vector<int> offspring_counts;  // extra children at each branch point
  std::vector<SpineSubtree> subtrees;  // grouped by branch point, in time order

  // Spine endpoint plus every subtree leaf, absolute positions, descending.
  std::vector<double> particles() const;
  std::size_t particle_count() const;
};

inline constexpr int kSpineGridDivisions = 256;

// Brownian bridge 0 -> sqrt2 sigma_e t + y, branch points from a rate-2 Poisson
// process, size-biased extra children, each starting an independent standard
// BBM for the remaining time.
SpineRealization spine_sample(const OffspringDistribution& offspring, double sigma_e, double y,
                              double t, std::uint64_t seed,
                              std::size_t node_cap = kDefaultNodeCap,
                              int grid_divisions = kSpineGridDivisions);

enum class OvershootMode { zero, exponential };

struct CollapseRow {
  double sigma_e = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double analytic_bound = 0.0;
};

inline constexpr double kDefaultBoundGamma = 0.75;

// 2K sigma_e^{-1/2} + 2K int_{sigma_e^{-1/2}}^inf e^{(1-sigma_e^2) s + sqrt2 sigma_e (R + (sigma_e s)^gamma)} ds.
double collapse_bound(double sigma_e, double r, double K, double gamma = kDefaultBoundGamma);

// Per sigma_e: fraction of spine realizations with more than one particle in
// [endpoint - R, inf). y = 0, or y ~ Exp(sqrt2 sigma_e) (experimental).
std::vector<CollapseRow> decoration_collapse_study(const OffspringDistribution& offspring,
                                                   std::span<const double> sigma_e, double r,
                                                   double t, std::size_t replicates,
                                                   std::uint64_t master_seed,
                                                   OvershootMode mode = OvershootMode::zero,
                                                   double gamma = kDefaultBoundGamma,
                                                   unsigned workers = 1);

void write_atoms_csv(std::ostream& os, std::span<const double> atoms);
void write_collapse_csv(std::ostream& os, std::span<const CollapseRow> rows);

}  // namespace vsbbm
