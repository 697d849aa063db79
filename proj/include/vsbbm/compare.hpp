#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "vsbbm/extremal.hpp"
#include "vsbbm/sampler.hpp"
#include "vsbbm/speed.hpp"

namespace vsbbm {

// Three conditionally independent Gaussian fields on one genealogy: the
// profile under study and its upper and lower envelopes.
struct CoupledTriple {
  std::shared_ptr<const GenealogyTree> tree;
  ParticleConfiguration base;
  ParticleConfiguration upper;
  ParticleConfiguration lower;
  double t = 0.0;
};

CoupledTriple coupled_sample(std::shared_ptr<const GenealogyTree> tree,
                             std::shared_ptr<const SpeedProfile> profile,
                             const EnvelopePair& envelopes, double t, std::uint64_t seed);

// Leafwise sqrt(h) x + sqrt(1-h) y_upper. The result carries the speed
// function h A + (1-h) A_upper.
ParticleConfiguration interpolate(const CoupledTriple& triple, double h);

// h A + (1-h) B as a profile.
SpeedProfile mix_profiles(const SpeedProfile& a, const SpeedProfile& b, double h);

// Number of internal branch times d of the tree whose scaled value d/t lies in
// one of the sandwich windows but breaks lower(d/t) <= A(d/t) <= upper(d/t).
std::size_t envelope_order_violations(const GenealogyTree& tree, const SpeedProfile& profile,
                                      const EnvelopePair& envelopes);

struct SandwichCell {
  double u = 0.0;
  double c = 0.0;
  Estimate base, upper, lower;
  double se_upper_combined = 0.0;
  double se_lower_combined = 0.0;
  bool pass_upper = false;  // L_A <= L_up + 3 SE
  bool pass_lower = false;  // L_A >= L_low - 3 SE
  bool pass() const noexcept { return pass_upper && pass_lower; }
};

struct SandwichReport {
  std::vector<SandwichCell> cells;  // u-major
  std::size_t replicates = 0;
  std::size_t passed() const noexcept;
};

inline constexpr double kSandwichSigmas = 3.0;

// One cell per (u, c) with u from `u_grid` (the grid the summaries were
// computed on) and c from `c_values`; L = E exp(-c N_u).
SandwichReport sandwich_report(std::span<const ReplicateSummary> base,
                               std::span<const ReplicateSummary> upper,
                               std::span<const ReplicateSummary> lower,
                               std::span<const double> u_grid, std::span<const double> c_values);

void write_sandwich_json(std::ostream& os, const SandwichReport& report);

struct ComparisonRun {
  EnvelopePair envelopes;
  std::vector<ReplicateSummary> base, upper, lower;
  SandwichReport report;
  std::size_t order_violations = 0;
};

// Full experiment: per replicate a fresh tree (stream "tree") shared by the
// three fields (stream "gauss").
ComparisonRun run_comparison(const OffspringDistribution& offspring,
                             std::shared_ptr<const SpeedProfile> profile, double t,
                             std::size_t replicates, std::uint64_t master_seed,
                             std::span<const double> u_grid, std::span<const double> c_values,
                             unsigned workers = 1);

}  // namespace vsbbm
