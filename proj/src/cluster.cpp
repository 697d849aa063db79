#include "vsbbm/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "vsbbm/error.hpp"
#include "vsbbm/parallel.hpp"
#include "vsbbm/rng.hpp"
#include "vsbbm/stats.hpp"

namespace vsbbm {

namespace {

void check_sigma_t(double sigma_e, double t, const char* where) {
  if (!(sigma_e > 1.0) || !std::isfinite(sigma_e))
    throw ValidationError(std::string(where) + ": sigma_e must exceed 1");
  if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError(std::string(where) + ": t must be positive");
}

std::shared_ptr<const SpeedProfile> standard_profile() {
  static const auto p = std::make_shared<const SpeedProfile>(SpeedProfile::identity());
  return p;
}

}  // namespace

double conditioning_level(double sigma_e, double t) { return std::numbers::sqrt2 * sigma_e * t; }

double acceptance_estimate(double sigma_e, double t) {
  check_sigma_t(sigma_e, t, "acceptance_estimate");
  return std::exp((1.0 - sigma_e * sigma_e) * t) /
         (2.0 * sigma_e * std::sqrt(std::numbers::pi * t));
}

ConditionedSample conditioned_sample(const OffspringDistribution& offspring, double sigma_e,
                                     double t, std::uint64_t seed, long max_attempts,
                                     std::size_t node_cap) {
  check_sigma_t(sigma_e, t, "conditioned_sample");
  if (max_attempts < 1) throw ValidationError("conditioned_sample: max_attempts must be >= 1");
  const double est = acceptance_estimate(sigma_e, t);
  if (est < kMinAcceptance) {
    std::ostringstream msg;
    msg << "conditioned_sample: estimated acceptance " << est << " below " << kMinAcceptance
        << "; use spine_sample for this (sigma_e, t)";
    throw ValidationError(msg.str());
  }
  const double level = conditioning_level(sigma_e, t);
  for (long k = 0; k < max_attempts; ++k) {
    const std::uint64_t key = derive_key(seed, static_cast<std::uint64_t>(k));
    auto tree = std::make_shared<const GenealogyTree>(
        sample_tree(offspring, t, derive_key(key, hash_label("tree")), node_cap));
    ParticleConfiguration config =
        sample_bbm(tree, standard_profile(), t, derive_key(key, hash_label("gauss")));
    if (config.max_position() > level) return {std::move(config), k + 1, est};
  }
  std::ostringstream msg;
  msg << "conditioned_sample: no acceptance in " << max_attempts
      << " attempts (estimated acceptance " << est << ")";
  throw RejectionExhausted(msg.str(), max_attempts, est);
}

std::vector<double> decoration_atoms(const ParticleConfiguration& config, double sigma_e,
                                     double t) {
  const double level = conditioning_level(sigma_e, t);
  std::vector<double> atoms;
  atoms.reserve(config.size());
  for (double x : config.leaf_positions()) atoms.push_back(x - level);
  std::sort(atoms.begin(), atoms.end(), std::greater<>());
  return atoms;
}

std::size_t atoms_at_least(std::span<const double> atoms, double r) {
  auto it = std::partition_point(atoms.begin(), atoms.end(), [r](double a) { return a >= -r; });
  return static_cast<std::size_t>(it - atoms.begin());
}

std::vector<double> SpineRealization::particles() const {
  std::vector<double> out;
  out.push_back(endpoint);
  for (const auto& sub : subtrees)
    for (double x : sub.config.leaf_positions()) out.push_back(sub.root_position + x);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::size_t SpineRealization::particle_count() const {
  std::size_t n = 1;
  for (const auto& sub : subtrees) n += sub.config.size();
  return n;
}

SpineRealization spine_sample(const OffspringDistribution& offspring, double sigma_e, double y,
                              double t, std::uint64_t seed, std::size_t node_cap,
                              int grid_divisions) {
  check_sigma_t(sigma_e, t, "spine_sample");
  if (!(y >= 0.0) || !std::isfinite(y)) throw ValidationError("spine_sample: y must be >= 0");
  if (grid_divisions < 1) throw ValidationError("spine_sample: grid_divisions must be >= 1");

  SpineRealization sr;
  sr.sigma_e = sigma_e;
  sr.y = y;
  sr.t = t;
  sr.endpoint = conditioning_level(sigma_e, t) + y;

  CounterRng ppp(derive_key(seed, hash_label("branch")));
  for (double p = ppp.exponential(2.0); p < t; p += ppp.exponential(2.0)) sr.branch_times.push_back(p);

  // Bridge values at the union of grid and branch times, sequentially.
  std::vector<double> times;
  for (int k = 1; k < grid_divisions; ++k) times.push_back(t * k / grid_divisions);
  times.insert(times.end(), sr.branch_times.begin(), sr.branch_times.end());
  std::sort(times.begin(), times.end());
  CounterRng bridge(derive_key(seed, hash_label("bridge")));
  sr.spine.push_back({0.0, 0.0});
  double s_prev = 0.0, x_prev = 0.0;
  for (double s : times) {
    const double rest = t - s_prev;
    const double mean = x_prev + (s - s_prev) / rest * (sr.endpoint - x_prev);
    const double var = (s - s_prev) * (t - s) / rest;
    const double x = mean + std::sqrt(std::max(var, 0.0)) * bridge.normal();
    sr.spine.push_back({s, x});
    s_prev = s;
    x_prev = x;
  }
  sr.spine.push_back({t, sr.endpoint});

  const std::uint64_t nu_key = derive_key(seed, hash_label("nu"));
  const std::uint64_t sub_key = derive_key(seed, hash_label("subtree"));
  std::size_t nodes = 0;
  for (std::size_t j = 0; j < sr.branch_times.size(); ++j) {
    const double p = sr.branch_times[j];
    auto at = std::lower_bound(sr.spine.begin(), sr.spine.end(), p,
                               [](const PathPoint& a, double s) { return a.s < s; });
    const double xp = at->x;
    sr.branch_positions.push_back(xp);
    CounterRng nu_rng(derive_key(nu_key, j));
    const int nu = offspring.sample_size_biased(nu_rng);
    sr.offspring_counts.push_back(nu);
    for (int i = 0; i < nu; ++i) {
      const std::uint64_t key = derive_key(derive_key(sub_key, j), static_cast<std::uint64_t>(i));
      const std::size_t remaining = node_cap > nodes ? node_cap - nodes : 0;
      if (remaining == 0) throw OverflowError("spine_sample: population cap reached");
      auto tree = std::make_shared<const GenealogyTree>(
          sample_tree(offspring, t - p, derive_key(key, hash_label("tree")), remaining));
      nodes += tree->node_count();
      sr.subtrees.push_back(
          {p, xp, sample_bbm(tree, standard_profile(), t - p, derive_key(key, hash_label("gauss")))});
    }
  }
  return sr;
}

double collapse_bound(double sigma_e, double r, double K, double gamma) {
  if (!(sigma_e > 1.0)) throw ValidationError("collapse_bound: sigma_e must exceed 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("collapse_bound: gamma must lie in (0, 1)");
  if (!(K >= 0.0)) throw ValidationError("collapse_bound: K must be >= 0");
  const double a = 1.0 / std::sqrt(sigma_e);
  const double drift = 1.0 - sigma_e * sigma_e;
  const double lift = std::numbers::sqrt2 * sigma_e;
  auto f = [=](double s) {
    return std::exp(drift * s + lift * (r + std::pow(sigma_e * s, gamma)));
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  const double integral = integrator.integrate(
      [&](double u) { return f(a + u); }, 0.0, std::numeric_limits<double>::infinity());
  if (!std::isfinite(integral)) return std::numeric_limits<double>::infinity();
  return 2.0 * K * a + 2.0 * K * integral;
}

std::vector<CollapseRow> decoration_collapse_study(const OffspringDistribution& offspring,
                                                   std::span<const double> sigma_e, double r,
                                                   double t, std::size_t replicates,
                                                   std::uint64_t master_seed, OvershootMode mode,
                                                   double gamma, unsigned workers) {
  if (!std::is_sorted(sigma_e.begin(), sigma_e.end()))
    throw ValidationError("decoration_collapse_study: sigma_e list must be ascending");
  if (replicates < 2) throw ValidationError("decoration_collapse_study: need >= 2 replicates");
  if (!(r >= 0.0)) throw ValidationError("decoration_collapse_study: R must be >= 0");
  std::vector<CollapseRow> rows;
  for (std::size_t i = 0; i < sigma_e.size(); ++i) {
    const double se = sigma_e[i];
    auto hits = parallel_map(replicates, workers, [&](std::size_t rep) {
      const std::uint64_t key = derive_key(seed_stream(master_seed, rep, "collapse"), i);
      double y = 0.0;
      if (mode == OvershootMode::exponential) {
        CounterRng rng(derive_key(key, hash_label("overshoot")));
        y = rng.exponential(std::numbers::sqrt2 * se);
      }
      const SpineRealization sr = spine_sample(offspring, se, y, t, key);
      const double floor = sr.endpoint - r;
      std::size_t inside = 1;
      for (const auto& sub : sr.subtrees)
        for (double x : sub.config.leaf_positions())
          if (sub.root_position + x >= floor) ++inside;
      return inside > 1 ? 1.0 : 0.0;
    });
    const Estimate e = mean_and_se(hits);
    rows.push_back({se, e.mean, e.std_error,
                    collapse_bound(se, r, offspring.second_factorial_moment(), gamma)});
  }
  return rows;
}

void write_atoms_csv(std::ostream& os, std::span<const double> atoms) {
  os.precision(17);
  os << "rank,atom\n";
  for (std::size_t i = 0; i < atoms.size(); ++i) os << i << ',' << atoms[i] << '\n';
}

void write_collapse_csv(std::ostream& os, std::span<const CollapseRow> rows) {
  os.precision(17);
  os << "sigma_e,estimate,SE,analytic_bound\n";
  for (const auto& r : rows)
    os << r.sigma_e << ',' << r.estimate << ',' << r.std_error << ',' << r.analytic_bound << '\n';
}

}  // namespace vsbbm
