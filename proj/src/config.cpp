#include "vsbbm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "vsbbm/error.hpp"
#include "vsbbm/genealogy.hpp"
#include "vsbbm/rng.hpp"

namespace vsbbm {

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKinds[] = {
    {ExperimentKind::simulate, "simulate"}, {ExperimentKind::fkpp, "fkpp"},
    {ExperimentKind::compare, "compare"},   {ExperimentKind::cluster, "cluster"},
    {ExperimentKind::tube, "tube"},         {ExperimentKind::martingale, "martingale"},
};

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"experiment", {"kind", "t", "replicates", "seed", "workers", "out"}},
      {"profile",
       {"kind", "sigma1_sq", "sigma2_sq", "b", "exponent", "xs", "ys", "breakpoints", "k1_upper",
        "k1_lower", "k2_upper", "k2_lower", "taylor_order", "delta_b", "delta_e"}},
      {"offspring", {"p"}},
      {"grid", {"u", "c"}},
      {"martingale", {"sigma_b"}},
      {"fkpp", {"dx", "dt", "scheme", "log_tail", "track_every", "sigma_e"}},
      {"tube", {"r", "gamma", "step"}},
      {"cluster", {"sigma_e", "R", "overshoot", "max_attempts", "gamma"}},
  };
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ValidationError("config: " + key + " = '" + value + "' is not " + what);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty() || !std::isfinite(out))
    bad_value(key, raw, "a finite number");
  return out;
}

template <class Int>
Int to_integer(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  Int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, raw, "an integer");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) bad_value(key, raw, "a non-empty list");
  return out;
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, raw, "a boolean");
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError("config: " + msg);
}

void require_sorted(const std::vector<double>& v, const std::string& name) {
  for (std::size_t i = 1; i < v.size(); ++i)
    require(v[i] > v[i - 1], name + " must be strictly ascending");
}

std::string render(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string render(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (auto [k, name] : kKinds)
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto [k, n] : kKinds)
    if (n == name) return k;
  throw ValidationError("config: unknown experiment kind '" + std::string(name) + "'");
}

void read_breakpoints_csv(const std::filesystem::path& path, std::vector<double>& xs,
                          std::vector<double>& ys) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open breakpoint file " + path.string());
  xs.clear();
  ys.clear();
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("config: breakpoint row without comma: " + line);
    if (first && (line[0] == 'x' || line[0] == 'X')) {
      first = false;
      continue;
    }
    first = false;
    xs.push_back(to_double("breakpoints", line.substr(0, comma)));
    ys.push_back(to_double("breakpoints", line.substr(comma + 1)));
  }
}

SpeedProfile build_profile(const ProfileSpec& spec) {
  SpeedProfile p = [&] {
    if (spec.kind == "identity") return SpeedProfile::identity();
    if (spec.kind == "two_speed") return SpeedProfile::two_speed(spec.sigma1_sq, spec.sigma2_sq, spec.b);
    if (spec.kind == "power") return SpeedProfile::power(spec.exponent);
    if (spec.kind == "piecewise") return SpeedProfile::piecewise_linear(spec.xs, spec.ys);
    if (spec.kind == "table") return SpeedProfile::table(spec.xs, spec.ys);
    throw ValidationError("config: unknown profile kind '" + spec.kind + "'");
  }();
  if (spec.constants) p = p.with_constants(*spec.constants);
  return p;
}

void ExperimentConfig::validate() const {
  require(t > 0.0, "t must be positive");
  require(replicates >= 1, "replicates must be >= 1");
  require(workers >= 1, "workers must be >= 1");
  require(!out.empty(), "out must be non-empty");
  (void)OffspringDistribution(offspring);
  (void)build_profile(profile);
  require(!u_grid.empty() && !c_values.empty(), "u and c grids must be non-empty");
  require_sorted(u_grid, "grid.u");
  for (double c : c_values) require(c >= 0.0, "grid.c entries must be >= 0");
  for (double s : sigma_b) require(s >= 0.0, "martingale.sigma_b entries must be >= 0");
  require(dx > 0.0, "fkpp.dx must be positive");
  require(dt >= 0.0, "fkpp.dt must be >= 0");
  require(scheme == "explicit" || scheme == "crank_nicolson",
          "fkpp.scheme must be explicit or crank_nicolson");
  require(!(log_tail && scheme == "crank_nicolson"), "fkpp.log_tail requires the explicit scheme");
  require(track_every > 0.0, "fkpp.track_every must be positive");
  for (double s : tail_sigma_e) require(s > 1.0, "fkpp.sigma_e entries must exceed 1");
  require(tube_gamma > 0.5 && tube_gamma < 1.0, "tube.gamma must lie in (1/2, 1)");
  require(tube_r >= 1.0, "tube.r must be >= 1");
  require(tube_step > 0.0 && tube_step <= t, "tube.step must lie in (0, t]");
  require(!cluster_sigma_e.empty(), "cluster.sigma_e must be non-empty");
  require_sorted(cluster_sigma_e, "cluster.sigma_e");
  for (double s : cluster_sigma_e) require(s > 1.0, "cluster.sigma_e entries must exceed 1");
  require(cluster_r >= 0.0, "cluster.R must be >= 0");
  require(overshoot == "zero" || overshoot == "exponential",
          "cluster.overshoot must be zero or exponential");
  require(max_attempts >= 1, "cluster.max_attempts must be >= 1");
  require(bound_gamma > 0.0 && bound_gamma < 1.0, "cluster.gamma must lie in (0, 1)");
  if (kind == ExperimentKind::compare || kind == ExperimentKind::simulate ||
      kind == ExperimentKind::martingale || kind == ExperimentKind::cluster)
    require(replicates >= 2, "replicates must be >= 2 for standard errors");
  if (kind == ExperimentKind::compare) require(t > 1.0, "compare needs t > 1");
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  EnvelopeConstants constants;
  bool have_constants = false;

  for (const auto& [section, body] : tree) {
    auto known = schema().find(section);
    if (known == schema().end()) throw ValidationError("config: unknown section [" + section + "]");
    if (!body.data().empty() && body.empty())
      throw ValidationError("config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      if (!known->second.contains(key))
        throw ValidationError("config: unknown key '" + key + "' in [" + section + "]");
      const std::string v = trim(node.data());
      const std::string name = section + "." + key;
      if (section == "experiment") {
        if (key == "kind") {
          cfg.kind = parse_experiment_kind(v);
          cfg.kind_given = true;
        }
        else if (key == "t") cfg.t = to_double(name, v);
        else if (key == "replicates") cfg.replicates = to_integer<std::size_t>(name, v);
        else if (key == "seed") cfg.seed = to_integer<std::uint64_t>(name, v);
        else if (key == "workers") cfg.workers = to_integer<unsigned>(name, v);
        else if (key == "out") cfg.out = v;
      } else if (section == "profile") {
        auto& p = cfg.profile;
        if (key == "kind") p.kind = v;
        else if (key == "sigma1_sq") p.sigma1_sq = to_double(name, v);
        else if (key == "sigma2_sq") p.sigma2_sq = to_double(name, v);
        else if (key == "b") p.b = to_double(name, v);
        else if (key == "exponent") p.exponent = to_double(name, v);
        else if (key == "xs") p.xs = to_list(name, v);
        else if (key == "ys") p.ys = to_list(name, v);
        else if (key == "breakpoints") p.breakpoints = v;
        else {
          have_constants = true;
          if (key == "k1_upper") constants.k1_upper = to_double(name, v);
          else if (key == "k1_lower") constants.k1_lower = to_double(name, v);
          else if (key == "k2_upper") constants.k2_upper = to_double(name, v);
          else if (key == "k2_lower") constants.k2_lower = to_double(name, v);
          else if (key == "taylor_order") constants.taylor_order = to_integer<int>(name, v);
          else if (key == "delta_b") constants.delta_b = to_double(name, v);
          else if (key == "delta_e") constants.delta_e = to_double(name, v);
        }
      } else if (section == "offspring") {
        cfg.offspring = to_list(name, v);
      } else if (section == "grid") {
        if (key == "u") cfg.u_grid = to_list(name, v);
        else cfg.c_values = to_list(name, v);
      } else if (section == "martingale") {
        cfg.sigma_b = to_list(name, v);
      } else if (section == "fkpp") {
        if (key == "dx") cfg.dx = to_double(name, v);
        else if (key == "dt") cfg.dt = to_double(name, v);
        else if (key == "scheme") cfg.scheme = v;
        else if (key == "log_tail") cfg.log_tail = to_bool(name, v);
        else if (key == "track_every") cfg.track_every = to_double(name, v);
        else if (key == "sigma_e") cfg.tail_sigma_e = to_list(name, v);
      } else if (section == "tube") {
        if (key == "r") cfg.tube_r = to_double(name, v);
        else if (key == "gamma") cfg.tube_gamma = to_double(name, v);
        else if (key == "step") cfg.tube_step = to_double(name, v);
      } else if (section == "cluster") {
        if (key == "sigma_e") cfg.cluster_sigma_e = to_list(name, v);
        else if (key == "R") cfg.cluster_r = to_double(name, v);
        else if (key == "overshoot") cfg.overshoot = v;
        else if (key == "max_attempts") cfg.max_attempts = to_integer<long>(name, v);
        else if (key == "gamma") cfg.bound_gamma = to_double(name, v);
      }
    }
  }
  if (have_constants) cfg.profile.constants = constants;
  if (!cfg.profile.breakpoints.empty()) {
    if (!cfg.profile.xs.empty() || !cfg.profile.ys.empty())
      throw ValidationError("config: give either profile.breakpoints or profile.xs/ys, not both");
    std::filesystem::path p(cfg.profile.breakpoints);
    if (p.is_relative()) p = base_dir / p;
    read_breakpoints_csv(p, cfg.profile.xs, cfg.profile.ys);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path.string());
  return parse_config(in, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "kind=" << to_string(c.kind) << '\n'
     << "t=" << render(c.t) << '\n'
     << "replicates=" << c.replicates << '\n'
     << "seed=" << c.seed << '\n'
     << "profile.kind=" << c.profile.kind << '\n'
     << "profile.sigma1_sq=" << render(c.profile.sigma1_sq) << '\n'
     << "profile.sigma2_sq=" << render(c.profile.sigma2_sq) << '\n'
     << "profile.b=" << render(c.profile.b) << '\n'
     << "profile.exponent=" << render(c.profile.exponent) << '\n'
     << "profile.xs=" << render(c.profile.xs) << '\n'
     << "profile.ys=" << render(c.profile.ys) << '\n';
  if (c.profile.constants) {
    const auto& k = *c.profile.constants;
    os << "profile.constants=" << render({k.k1_upper, k.k1_lower, k.k2_upper, k.k2_lower}) << ','
       << k.taylor_order << ',' << render({k.delta_b, k.delta_e}) << '\n';
  }
  os << "offspring.p=" << render(c.offspring) << '\n'
     << "grid.u=" << render(c.u_grid) << '\n'
     << "grid.c=" << render(c.c_values) << '\n'
     << "martingale.sigma_b=" << render(c.sigma_b) << '\n'
     << "fkpp.dx=" << render(c.dx) << '\n'
     << "fkpp.dt=" << render(c.dt) << '\n'
     << "fkpp.scheme=" << c.scheme << '\n'
     << "fkpp.log_tail=" << (c.log_tail ? "true" : "false") << '\n'
     << "fkpp.track_every=" << render(c.track_every) << '\n'
     << "fkpp.sigma_e=" << render(c.tail_sigma_e) << '\n'
     << "tube.r=" << render(c.tube_r) << '\n'
     << "tube.gamma=" << render(c.tube_gamma) << '\n'
     << "tube.step=" << render(c.tube_step) << '\n'
     << "cluster.sigma_e=" << render(c.cluster_sigma_e) << '\n'
     << "cluster.R=" << render(c.cluster_r) << '\n'
     << "cluster.overshoot=" << c.overshoot << '\n'
     << "cluster.max_attempts=" << c.max_attempts << '\n'
     << "cluster.gamma=" << render(c.bound_gamma) << '\n';
  return os.str();
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash_label(canonical_config(config))));
  return buf;
}

}  // namespace vsbbm
