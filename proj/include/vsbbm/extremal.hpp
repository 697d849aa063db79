#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vsbbm/sampler.hpp"
#include "vsbbm/stats.hpp"

namespace vsbbm {

enum class Centering { standard, tilde };

// standard: sqrt2 t - 3/(2 sqrt2) log t;  tilde: sqrt2 t - 1/(2 sqrt2) log t.
double centering(double t, Centering kind);

// N_u(t) = #{i : x_i(t) - m(t) > u} for every u of an ascending grid.
std::vector<long> count_exceedances(std::span<const double> positions, double shift,
                                    std::span<const double> u_grid);
std::vector<long> count_exceedances(const ParticleConfiguration& config,
                                    std::span<const double> u_grid,
                                    Centering kind = Centering::tilde);

// Centred positions x_i(t) - m(t), descending.
std::vector<double> extremal_atoms(const ParticleConfiguration& config,
                                   Centering kind = Centering::tilde);

struct ReplicateSummary {
  double max_centered = 0.0;
  std::vector<long> exceedance_counts;
  std::optional<double> mckean_value;
  bool tube_violation = false;
  long n_leaves = 0;
};

ReplicateSummary summarize(const ParticleConfiguration& config, std::span<const double> u_grid,
                           Centering kind = Centering::tilde);

// Index of each requested level within the summary's u-grid.
struct LaplaceTerm {
  std::size_t u_index = 0;
  double c = 0.0;
};

// Mean and standard error of exp(-sum_l c_l N_{u_l}) over replicates.
Estimate empirical_laplace(std::span<const ReplicateSummary> summaries,
                           std::span<const LaplaceTerm> terms);
// Same, with levels given by value; each must appear exactly in `u_grid`.
Estimate empirical_laplace(std::span<const ReplicateSummary> summaries,
                           std::span<const double> u_grid, std::span<const double> u_levels,
                           std::span<const double> c);

struct McKeanValue {
  double value = 0.0;
  bool uniformly_integrable = true;  // false for sigma_b >= 1
};

// Y(s) = sum_i exp(-s (1 + sigma_b^2) + sqrt2 sigma_b x_i(s)) for standard BBM
// at horizon s, accumulated in log space.
McKeanValue mckean_martingale(std::span<const double> positions, double s, double sigma_b);
McKeanValue mckean_martingale(const ParticleConfiguration& config, double sigma_b);

// First-moment constant M(d) = sup_{s >= t} s e^{-sqrt2 d} / (sqrt(2 pi)(m~(s) + d)).
// Requires m~(s) + d > 0 on [t, inf).
double first_moment_constant(double d, double t);
// e^t P(B_t > m~(t) + d), the exact first moment of N_d(t).
double expected_exceedances(double d, double t);

void write_summaries_csv(std::ostream& os, std::span<const ReplicateSummary> summaries,
                         std::span<const double> u_grid);

}  // namespace vsbbm
