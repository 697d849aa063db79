#include "vsbbm/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "vsbbm/cluster.hpp"
#include "vsbbm/compare.hpp"
#include "vsbbm/error.hpp"
#include "vsbbm/extremal.hpp"
#include "vsbbm/fkpp.hpp"
#include "vsbbm/genealogy.hpp"
#include "vsbbm/parallel.hpp"
#include "vsbbm/rng.hpp"
#include "vsbbm/sampler.hpp"
#include "vsbbm/stats.hpp"
#include "vsbbm/tube.hpp"

namespace vsbbm {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("output: cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ValidationError("output: write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError("output: cannot rename " + tmp.string() + ": " + ec.message());
  }
}

const std::vector<std::pair<std::string, std::string>>& module_versions() {
  static const std::vector<std::pair<std::string, std::string>> v = {
      {"genealogy", "1.0.0"}, {"speed", "1.0.0"},   {"sampler", "1.0.0"},
      {"extremal_stats", "1.0.0"}, {"tube", "1.0.0"}, {"fkpp", "1.1.0"},
      {"compare", "1.0.0"},   {"cluster", "1.0.0"}, {"cli", "1.0.0"},
  };
  return v;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class ArtifactWriter {
 public:
  ArtifactWriter(const ExperimentConfig& cfg, std::string hash)
      : dir_(cfg.out), seed_(cfg.seed), hash_(std::move(hash)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ValidationError("output: cannot create " + dir_.string() + ": " + ec.message());
  }

  // CSV artifacts start with a provenance comment line.
  std::ostringstream csv() const {
    std::ostringstream os;
    os << "# config_hash=" << hash_ << " master_seed=" << seed_ << '\n';
    return os;
  }
  json stamp(json body) const {
    body["config_hash"] = hash_;
    body["master_seed"] = seed_;
    return body;
  }
  void put(const std::string& name, const std::string& content) {
    write_file_atomic(dir_ / name, content);
    artifacts_.push_back({name, content.size(), hex64(hash_label(content))});
  }
  void put_json(const std::string& name, const json& body) { put(name, stamp(body).dump(2) + "\n"); }
  std::vector<Artifact>& artifacts() { return artifacts_; }

 private:
  fs::path dir_;
  std::uint64_t seed_;
  std::string hash_;
  std::vector<Artifact> artifacts_;
};

json estimate_json(const Estimate& e) {
  return {{"mean", e.mean}, {"se", e.std_error}, {"n", e.count}};
}

std::shared_ptr<const SpeedProfile> shared_profile(const ExperimentConfig& cfg) {
  return std::make_shared<const SpeedProfile>(build_profile(cfg.profile));
}

void run_simulate(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const OffspringDistribution off(cfg.offspring);
  auto profile = shared_profile(cfg);
  check_monotone(*profile);
  auto summaries = parallel_map(cfg.replicates, cfg.workers, [&](std::size_t r) {
    auto tree = std::make_shared<const GenealogyTree>(
        sample_tree(off, cfg.t, seed_stream(cfg.seed, r, "tree")));
    return summarize(sample_bbm(tree, profile, cfg.t, seed_stream(cfg.seed, r, "gauss")), cfg.u_grid);
  });
  auto os = w.csv();
  write_summaries_csv(os, summaries, cfg.u_grid);
  w.put("simulate_replicates.csv", os.str());

  std::vector<double> sizes, maxima;
  for (const auto& s : summaries) {
    sizes.push_back(static_cast<double>(s.n_leaves));
    maxima.push_back(s.max_centered);
  }
  json cells = json::array();
  for (std::size_t i = 0; i < cfg.u_grid.size(); ++i)
    for (double c : cfg.c_values) {
      const LaplaceTerm term{i, c};
      const Estimate e = empirical_laplace(summaries, std::span(&term, 1));
      cells.push_back({{"u", cfg.u_grid[i]}, {"c", c}, {"L", e.mean}, {"se", e.std_error}});
    }
  w.put_json("simulate_report.json",
             {{"experiment", "simulate"},
              {"t", cfg.t},
              {"profile", profile->name()},
              {"population", estimate_json(mean_and_se(sizes))},
              {"expected_population", std::exp(cfg.t)},
              {"max_centered", estimate_json(mean_and_se(maxima))},
              {"laplace", cells}});
}

void run_martingale(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const OffspringDistribution off(cfg.offspring);
  auto identity = std::make_shared<const SpeedProfile>(SpeedProfile::identity());
  auto values = parallel_map(cfg.replicates, cfg.workers, [&](std::size_t r) {
    auto tree = std::make_shared<const GenealogyTree>(
        sample_tree(off, cfg.t, seed_stream(cfg.seed, r, "tree")));
    const auto config = sample_bbm(tree, identity, cfg.t, seed_stream(cfg.seed, r, "gauss"));
    std::vector<double> ys;
    for (double sb : cfg.sigma_b) ys.push_back(mckean_martingale(config, sb).value);
    return ys;
  });
  auto rep = w.csv();
  rep.precision(17);
  rep << "replicate";
  for (double sb : cfg.sigma_b) rep << ",Y_sigma_b_" << sb;
  rep << '\n';
  for (std::size_t r = 0; r < values.size(); ++r) {
    rep << r;
    for (double y : values[r]) rep << ',' << y;
    rep << '\n';
  }
  w.put("martingale_replicates.csv", rep.str());

  auto report = w.csv();
  report.precision(17);
  report << "s,sigma_b,mean,SE,replicates,within_3se\n";
  for (std::size_t k = 0; k < cfg.sigma_b.size(); ++k) {
    std::vector<double> col;
    for (const auto& v : values) col.push_back(v[k]);
    const Estimate e = mean_and_se(col);
    const bool ok = std::abs(e.mean - 1.0) <= 3.0 * e.std_error;
    report << cfg.t << ',' << cfg.sigma_b[k] << ',' << e.mean << ',' << e.std_error << ','
           << e.count << ',' << (ok ? "true" : "false") << '\n';
  }
  w.put("martingale_report.csv", report.str());
}

FkppOptions fkpp_options(const ExperimentConfig& cfg) {
  FkppOptions o;
  o.dx = cfg.dx;
  o.dt = cfg.dt;
  o.scheme = cfg.scheme == "crank_nicolson" ? FkppScheme::crank_nicolson : FkppScheme::explicit_euler;
  o.log_tail = cfg.log_tail;
  o.track_every = cfg.track_every;
  return o;
}

void run_fkpp(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const OffspringDistribution off(cfg.offspring);
  const FkppOptions opts = fkpp_options(cfg);
  const FkppState state = solve_heaviside(off, cfg.t, opts);
  auto front = w.csv();
  state.write_front_csv(front);
  w.put("fkpp_front.csv", front.str());
  auto snap = w.csv();
  state.write_csv(snap);
  w.put("fkpp_snapshot.csv", snap.str());

  if (!cfg.tail_sigma_e.empty()) {
    FkppOptions tail_opts = opts;
    tail_opts.track_every = 0.0;
    auto est = parallel_map(cfg.tail_sigma_e.size(), cfg.workers, [&](std::size_t i) {
      return tail_constant(off, cfg.tail_sigma_e[i], cfg.t, tail_opts);
    });
    auto os = w.csv();
    os.precision(17);
    os << "sigma_e,t,value,value_half,extrapolated,limit\n";
    for (const auto& e : est)
      os << e.sigma_e << ',' << e.t << ',' << e.value << ',' << e.value_half << ','
         << e.extrapolated << ',' << tail_constant_limit() << '\n';
    w.put("fkpp_tail.csv", os.str());
  }
}

void run_compare(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const OffspringDistribution off(cfg.offspring);
  auto profile = shared_profile(cfg);
  const ComparisonRun run =
      run_comparison(off, profile, cfg.t, cfg.replicates, cfg.seed, cfg.u_grid, cfg.c_values, cfg.workers);
  std::ostringstream os;
  write_sandwich_json(os, run.report);
  json body = json::parse(os.str());
  body["experiment"] = "compare";
  body["t"] = cfg.t;
  body["profile"] = profile->name();
  const auto& e = run.envelopes;
  body["envelopes"] = {
      {"upper", {{"initial_slope", e.upper.initial_slope}, {"final_slope", e.upper.final_slope}, {"kink", e.upper.kink}}},
      {"lower", {{"initial_slope", e.lower.initial_slope}, {"final_slope", e.lower.final_slope}, {"kink", e.lower.kink}}},
      {"delta_less", e.deltas.delta_less},
      {"delta_greater", e.deltas.delta_greater}};
  body["order_violations"] = run.order_violations;
  w.put_json("compare_sandwich.json", body);
}

void run_cluster(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const OffspringDistribution off(cfg.offspring);
  const OvershootMode mode = cfg.overshoot == "exponential" ? OvershootMode::exponential : OvershootMode::zero;
  const auto rows = decoration_collapse_study(off, cfg.cluster_sigma_e, cfg.cluster_r, cfg.t,
                                              cfg.replicates, cfg.seed, mode, cfg.bound_gamma,
                                              cfg.workers);
  auto os = w.csv();
  write_collapse_csv(os, rows);
  w.put("cluster_collapse.csv", os.str());

  // One rejection-sampled decoration for the smallest sigma_e, when feasible.
  const double se = cfg.cluster_sigma_e.front();
  if (acceptance_estimate(se, cfg.t) >= kMinAcceptance) {
    const auto sample = conditioned_sample(off, se, cfg.t, seed_stream(cfg.seed, 0, "conditioned"),
                                           cfg.max_attempts);
    auto atoms = w.csv();
    write_atoms_csv(atoms, decoration_atoms(sample.config, se, cfg.t));
    w.put("cluster_atoms.csv", atoms.str());
  }
}

void run_tube(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const auto res = empirical_bridge_violation(cfg.t, cfg.tube_r, cfg.tube_gamma, cfg.tube_step,
                                              cfg.replicates, seed_stream(cfg.seed, 0, "bridge"));
  auto os = w.csv();
  write_violation_csv(os, res.replicates);
  w.put("tube_violations.csv", os.str());
  const double bound = bridge_violation_bound(cfg.tube_r, cfg.tube_gamma);
  w.put_json("tube_report.json", {{"experiment", "tube"},
                                  {"t", cfg.t},
                                  {"r", cfg.tube_r},
                                  {"gamma", cfg.tube_gamma},
                                  {"step", cfg.tube_step},
                                  {"rate", estimate_json(res.rate)},
                                  {"bound", bound},
                                  {"within_bound", res.rate.mean <= bound + 3.0 * res.rate.std_error}});
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  RunResult result;
  result.config_hash = config_hash(config);
  ArtifactWriter w(config, result.config_hash);
  switch (config.kind) {
    case ExperimentKind::simulate: run_simulate(config, w); break;
    case ExperimentKind::martingale: run_martingale(config, w); break;
    case ExperimentKind::fkpp: run_fkpp(config, w); break;
    case ExperimentKind::compare: run_compare(config, w); break;
    case ExperimentKind::cluster: run_cluster(config, w); break;
    case ExperimentKind::tube: run_tube(config, w); break;
  }
  json files = json::array();
  for (const auto& a : w.artifacts())
    files.push_back({{"path", a.name}, {"bytes", a.bytes}, {"fnv1a", a.fnv1a}});
  json versions = json::object();
  for (const auto& [m, v] : module_versions()) versions[m] = v;
  w.put_json("manifest.json", {{"experiment", std::string(to_string(config.kind))},
                               {"files", files},
                               {"module_versions", versions},
                               {"config", canonical_config(config)}});
  result.artifacts = w.artifacts();
  return result;
}

std::string error_json(const std::exception& e) {
  json j;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    j["error"] = err->kind();
    if (const auto* rej = dynamic_cast<const RejectionExhausted*>(&e)) {
      j["attempts"] = rej->attempts;
      j["acceptance_estimate"] = rej->acceptance_estimate;
    }
  } else {
    j["error"] = "internal";
  }
  j["message"] = e.what();
  return j.dump();
}

}  // namespace vsbbm
