#include "vsbbm/extremal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "vsbbm/error.hpp"

namespace vsbbm {

double centering(double t, Centering kind) {
  if (!(t > 1.0)) throw RangeError("centering: need t > 1 so that log t > 0");
  const double coeff = kind == Centering::standard ? 3.0 : 1.0;
  return std::numbers::sqrt2 * t - coeff / (2.0 * std::numbers::sqrt2) * std::log(t);
}

std::vector<long> count_exceedances(std::span<const double> positions, double shift,
                                    std::span<const double> u_grid) {
  if (!std::is_sorted(u_grid.begin(), u_grid.end()))
    throw ValidationError("count_exceedances: u grid must be sorted ascending");
  const std::size_t m = u_grid.size();
  std::vector<long> hist(m + 1, 0);
  for (double x : positions) {
    const double c = x - shift;
    const auto idx = std::lower_bound(u_grid.begin(), u_grid.end(), c) - u_grid.begin();
    ++hist[static_cast<std::size_t>(idx)];
  }
  std::vector<long> counts(m, 0);
  long running = 0;
  for (std::size_t j = m; j-- > 0;) {
    running += hist[j + 1];
    counts[j] = running;
  }
  return counts;
}

std::vector<long> count_exceedances(const ParticleConfiguration& config,
                                    std::span<const double> u_grid, Centering kind) {
  return count_exceedances(config.leaf_positions(), centering(config.horizon(), kind), u_grid);
}

std::vector<double> extremal_atoms(const ParticleConfiguration& config, Centering kind) {
  const double m = centering(config.horizon(), kind);
  std::vector<double> atoms(config.leaf_positions().begin(), config.leaf_positions().end());
  for (double& a : atoms) a -= m;
  std::sort(atoms.begin(), atoms.end(), std::greater<>());
  return atoms;
}

ReplicateSummary summarize(const ParticleConfiguration& config, std::span<const double> u_grid,
                           Centering kind) {
  ReplicateSummary s;
  const double m = centering(config.horizon(), kind);
  s.max_centered = config.max_position() - m;
  s.exceedance_counts = count_exceedances(config.leaf_positions(), m, u_grid);
  s.n_leaves = static_cast<long>(config.size());
  return s;
}

Estimate empirical_laplace(std::span<const ReplicateSummary> summaries,
                           std::span<const LaplaceTerm> terms) {
  if (summaries.empty()) throw ValidationError("empirical_laplace: no replicates");
  for (const LaplaceTerm& term : terms) {
    if (!(term.c >= 0.0)) throw ValidationError("empirical_laplace: c must be non-negative");
  }
  std::vector<double> values;
  values.reserve(summaries.size());
  for (const ReplicateSummary& s : summaries) {
    double exponent = 0.0;
    for (const LaplaceTerm& term : terms) {
      if (term.u_index >= s.exceedance_counts.size())
        throw ValidationError("empirical_laplace: level index outside the summary grid");
      exponent += term.c * static_cast<double>(s.exceedance_counts[term.u_index]);
    }
    values.push_back(std::exp(-exponent));
  }
  return mean_and_se(values);
}

Estimate empirical_laplace(std::span<const ReplicateSummary> summaries,
                           std::span<const double> u_grid, std::span<const double> u_levels,
                           std::span<const double> c) {
  if (u_levels.size() != c.size())
    throw ValidationError("empirical_laplace: u and c must have the same length");
  std::vector<LaplaceTerm> terms;
  for (std::size_t l = 0; l < u_levels.size(); ++l) {
    const auto it = std::find(u_grid.begin(), u_grid.end(), u_levels[l]);
    if (it == u_grid.end()) {
      std::ostringstream msg;
      msg << "empirical_laplace: level " << u_levels[l] << " is not on the summary grid";
      throw ValidationError(msg.str());
    }
    terms.push_back({static_cast<std::size_t>(it - u_grid.begin()), c[l]});
  }
  return empirical_laplace(summaries, terms);
}

McKeanValue mckean_martingale(std::span<const double> positions, double s, double sigma_b) {
  if (positions.empty()) throw ValidationError("mckean_martingale: empty configuration");
  if (sigma_b < 0.0) throw ValidationError("mckean_martingale: sigma_b must be >= 0");
  const double drift = -s * (1.0 + sigma_b * sigma_b);
  const double slope = std::numbers::sqrt2 * sigma_b;
  double top = -std::numeric_limits<double>::infinity();
  for (double x : positions) top = std::max(top, slope * x);
  CompensatedSum acc;
  for (double x : positions) acc.add(std::exp(slope * x - top));
  McKeanValue out;
  out.value = std::exp(drift + top + std::log(acc.value()));
  out.uniformly_integrable = sigma_b < 1.0;
  return out;
}

McKeanValue mckean_martingale(const ParticleConfiguration& config, double sigma_b) {
  return mckean_martingale(config.leaf_positions(), config.horizon(), sigma_b);
}

double first_moment_constant(double d, double t) {
  auto f = [d](double s) {
    const double level = centering(s, Centering::tilde) + d;
    if (!(level > 0.0)) {
      std::ostringstream msg;
      msg << "first_moment_constant: m~(" << s << ") + d is not positive";
      throw RangeError(msg.str());
    }
    return s * std::exp(-std::numbers::sqrt2 * d) / (std::sqrt(2.0 * std::numbers::pi) * level);
  };
  // coarse scan in log s, then Brent refinement around the best grid point
  constexpr int kScan = 4000;
  constexpr double kDecades = 6.0;
  auto at = [&](double z) { return f(t * std::pow(10.0, z)); };
  int arg = 0;
  double best = at(0.0);
  for (int i = 1; i <= kScan; ++i) {
    const double v = at(i * kDecades / kScan);
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  if (arg > 0 && arg < kScan) {
    const auto r = boost::math::tools::brent_find_minima(
        [&](double z) { return -at(z); }, (arg - 1) * kDecades / kScan, (arg + 1) * kDecades / kScan,
        std::numeric_limits<double>::digits);
    best = std::max(best, -r.second);
  }
  best = std::max(best, std::exp(-std::numbers::sqrt2 * d) /
                            (std::numbers::sqrt2 * std::sqrt(2.0 * std::numbers::pi)));
  return best;
}

double expected_exceedances(double d, double t) {
  const double level = centering(t, Centering::tilde) + d;
  return std::exp(t + log_normal_sf(level / std::sqrt(t)));
}

void write_summaries_csv(std::ostream& os, std::span<const ReplicateSummary> summaries,
                         std::span<const double> u_grid) {
  os.precision(17);
  os << "replicate,n_leaves,max_centered,mckean,tube_violation";
  for (double u : u_grid) os << ",N_" << u;
  os << '\n';
  for (std::size_t r = 0; r < summaries.size(); ++r) {
    const ReplicateSummary& s = summaries[r];
    os << r << ',' << s.n_leaves << ',' << s.max_centered << ',';
    if (s.mckean_value) os << *s.mckean_value;
    os << ',' << (s.tube_violation ? 1 : 0);
    for (long n : s.exceedance_counts) os << ',' << n;
    os << '\n';
  }
}

}  // namespace vsbbm
