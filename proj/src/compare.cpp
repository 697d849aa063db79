#include "vsbbm/compare.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

#include "vsbbm/error.hpp"
#include "vsbbm/parallel.hpp"
#include "vsbbm/rng.hpp"

namespace vsbbm {

CoupledTriple coupled_sample(std::shared_ptr<const GenealogyTree> tree,
                             std::shared_ptr<const SpeedProfile> profile,
                             const EnvelopePair& envelopes, double t, std::uint64_t seed) {
  if (!tree || !profile) throw ValidationError("coupled_sample: null tree or profile");
  if (std::abs(envelopes.t - t) > 1e-12 * std::max(1.0, t))
    throw ValidationError("coupled_sample: envelopes were built for a different t");
  auto up = std::make_shared<const SpeedProfile>(envelopes.upper.profile);
  auto low = std::make_shared<const SpeedProfile>(envelopes.lower.profile);
  return CoupledTriple{
      tree,
      sample_bbm(tree, std::move(profile), t, derive_key(seed, hash_label("base"))),
      sample_bbm(tree, std::move(up), t, derive_key(seed, hash_label("upper"))),
      sample_bbm(tree, std::move(low), t, derive_key(seed, hash_label("lower"))),
      t,
  };
}

SpeedProfile mix_profiles(const SpeedProfile& a, const SpeedProfile& b, double h) {
  if (!(h >= 0.0 && h <= 1.0)) throw RangeError("mix_profiles: h outside [0, 1]");
  auto f = [a, b, h](double x) { return h * a(x) + (1.0 - h) * b(x); };
  return SpeedProfile::custom(f, "mix(" + a.name() + "," + b.name() + ")",
                              h * a.slope_at_0() + (1.0 - h) * b.slope_at_0(),
                              h * a.slope_at_1() + (1.0 - h) * b.slope_at_1());
}

ParticleConfiguration interpolate(const CoupledTriple& triple, double h) {
  if (!(h >= 0.0 && h <= 1.0)) throw RangeError("interpolate: h outside [0, 1]");
  const double wx = std::sqrt(h), wy = std::sqrt(1.0 - h);
  auto profile = std::make_shared<const SpeedProfile>(
      mix_profiles(triple.base.profile(), triple.upper.profile(), h));
  const auto& tree = triple.tree;
  if (triple.base.has_node_positions() && triple.upper.has_node_positions()) {
    std::vector<double> ends(tree->node_count());
    for (NodeId n = 0; n < ends.size(); ++n)
      ends[n] = wx * triple.base.position_at_death(n) + wy * triple.upper.position_at_death(n);
    return ParticleConfiguration(tree, std::move(profile), triple.t, std::move(ends));
  }
  auto x = triple.base.leaf_positions();
  auto y = triple.upper.leaf_positions();
  std::vector<double> leaves(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) leaves[i] = wx * x[i] + wy * y[i];
  return ParticleConfiguration::from_leaf_positions(tree, std::move(profile), triple.t,
                                                    std::move(leaves));
}

std::size_t envelope_order_violations(const GenealogyTree& tree, const SpeedProfile& profile,
                                      const EnvelopePair& envelopes) {
  const double t = tree.horizon();
  const double lo_end = envelopes.deltas.delta_less;
  const double hi_start = 1.0 - envelopes.deltas.delta_greater;
  constexpr double kTol = 1e-12;
  std::size_t bad = 0;
  for (NodeId n = 0; n < tree.node_count(); ++n) {
    if (tree.is_leaf(n)) continue;
    const double x = tree.death(n) / t;
    if (x > lo_end && x < hi_start) continue;
    const double a = profile(x);
    if (envelopes.upper.profile(x) < a - kTol || envelopes.lower.profile(x) > a + kTol) ++bad;
  }
  return bad;
}

std::size_t SandwichReport::passed() const noexcept {
  std::size_t k = 0;
  for (const auto& c : cells) k += c.pass() ? 1 : 0;
  return k;
}

namespace {

void check_grid(std::span<const ReplicateSummary> s, std::size_t n, const char* which) {
  for (const auto& r : s)
    if (r.exceedance_counts.size() != n)
      throw ValidationError(std::string("sandwich_report: ") + which +
                            " summaries were computed on a different u-grid");
}

}  // namespace

SandwichReport sandwich_report(std::span<const ReplicateSummary> base,
                               std::span<const ReplicateSummary> upper,
                               std::span<const ReplicateSummary> lower,
                               std::span<const double> u_grid, std::span<const double> c_values) {
  if (base.empty() || upper.empty() || lower.empty())
    throw ValidationError("sandwich_report: empty summary set");
  check_grid(base, u_grid.size(), "base");
  check_grid(upper, u_grid.size(), "upper");
  check_grid(lower, u_grid.size(), "lower");
  SandwichReport report;
  report.replicates = base.size();
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    for (double c : c_values) {
      const LaplaceTerm term{i, c};
      SandwichCell cell;
      cell.u = u_grid[i];
      cell.c = c;
      cell.base = empirical_laplace(base, std::span(&term, 1));
      cell.upper = empirical_laplace(upper, std::span(&term, 1));
      cell.lower = empirical_laplace(lower, std::span(&term, 1));
      cell.se_upper_combined = std::hypot(cell.base.std_error, cell.upper.std_error);
      cell.se_lower_combined = std::hypot(cell.base.std_error, cell.lower.std_error);
      cell.pass_upper = cell.base.mean <= cell.upper.mean + kSandwichSigmas * cell.se_upper_combined;
      cell.pass_lower = cell.base.mean >= cell.lower.mean - kSandwichSigmas * cell.se_lower_combined;
      report.cells.push_back(cell);
    }
  }
  return report;
}

void write_sandwich_json(std::ostream& os, const SandwichReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"u", c.u},
                     {"c", c.c},
                     {"L_A", c.base.mean},
                     {"L_up", c.upper.mean},
                     {"L_low", c.lower.mean},
                     {"se_A", c.base.std_error},
                     {"se_up", c.upper.std_error},
                     {"se_low", c.lower.std_error},
                     {"se_up_combined", c.se_upper_combined},
                     {"se_low_combined", c.se_lower_combined},
                     {"gap_up", c.base.mean - c.upper.mean},
                     {"gap_low", c.lower.mean - c.base.mean},
                     {"pass_upper", c.pass_upper},
                     {"pass_lower", c.pass_lower}});
  }
  nlohmann::json j = {{"replicates", report.replicates},
                      {"cells", cells},
                      {"passed", report.passed()},
                      {"total", report.cells.size()}};
  os << j.dump(2) << '\n';
}

ComparisonRun run_comparison(const OffspringDistribution& offspring,
                             std::shared_ptr<const SpeedProfile> profile, double t,
                             std::size_t replicates, std::uint64_t master_seed,
                             std::span<const double> u_grid, std::span<const double> c_values,
                             unsigned workers) {
  if (replicates == 0) throw ValidationError("run_comparison: need at least one replicate");
  ComparisonRun run{build_envelopes(*profile, t), {}, {}, {}, {}, 0};
  struct Rep {
    ReplicateSummary base, upper, lower;
    std::size_t violations;
  };
  const EnvelopePair& env = run.envelopes;
  auto reps = parallel_map(replicates, workers, [&](std::size_t r) {
    auto tree = std::make_shared<const GenealogyTree>(
        sample_tree(offspring, t, seed_stream(master_seed, r, "tree")));
    CoupledTriple triple = coupled_sample(tree, profile, env, t, seed_stream(master_seed, r, "gauss"));
    return Rep{summarize(triple.base, u_grid), summarize(triple.upper, u_grid),
               summarize(triple.lower, u_grid), envelope_order_violations(*tree, *profile, env)};
  });
  for (auto& r : reps) {
    run.base.push_back(std::move(r.base));
    run.upper.push_back(std::move(r.upper));
    run.lower.push_back(std::move(r.lower));
    run.order_violations += r.violations;
  }
  run.report = sandwich_report(run.base, run.upper, run.lower, u_grid, c_values);
  return run;
}

}  // namespace vsbbm
