#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vsbbm/config.hpp"
#include "vsbbm/error.hpp"
#include "vsbbm/experiment.hpp"

using namespace vsbbm;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vsbbm_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("parse a full config") {
    const auto cfg = parse(R"(
[experiment]
kind = compare
t = 10
replicates = 500
seed = 42
workers = 4

[profile]
kind = two_speed
sigma1_sq = 0.5
sigma2_sq = 2
b = 0.6666666666666666
k1_upper = 0.1

[offspring]
p = 0.2, 0.6, 0.2

[grid]
u = -2, -1, 0
c = 0.1, 1
)");
    CHECK(cfg.kind == ExperimentKind::compare);
    CHECK(cfg.kind_given);
    CHECK(cfg.t == 10.0);
    CHECK(cfg.replicates == 500);
    CHECK(cfg.seed == 42);
    CHECK(cfg.workers == 4);
    CHECK(cfg.profile.kind == "two_speed");
    REQUIRE(cfg.profile.constants);
    CHECK(cfg.profile.constants->k1_upper == 0.1);
    CHECK(cfg.offspring == std::vector<double>{0.2, 0.6, 0.2});
    CHECK(cfg.u_grid == std::vector<double>{-2.0, -1.0, 0.0});
    const auto p = build_profile(cfg.profile);
    CHECK(p(2.0 / 3.0) == doctest::Approx(1.0 / 3.0));
    CHECK(p.constants().k1_upper == 0.1);
  }

  TEST_CASE("defaults when sections are absent") {
    const auto cfg = parse("");
    CHECK_FALSE(cfg.kind_given);
    CHECK(cfg.t == 5.0);
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("unknown sections, keys and bad values are rejected") {
    CHECK_THROWS_AS(parse("[nonsense]\nx = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse("[experiment]\nhorizon = 3\n"), ValidationError);
    CHECK_THROWS_AS(parse("[experiment]\nt = abc\n"), ValidationError);
    CHECK_THROWS_AS(parse("[experiment]\nreplicates = 1.5\n"), ValidationError);
    CHECK_THROWS_AS(parse("[experiment]\nkind = teleport\n"), ValidationError);
    CHECK_THROWS_AS(parse("[fkpp]\nlog_tail = maybe\n"), ValidationError);
    CHECK_THROWS_AS(parse("[grid]\nu = 1, 0\n").validate(), ValidationError);
    CHECK_THROWS_AS(parse("[experiment]\nt = -1\n").validate(), ValidationError);
    CHECK_THROWS_AS(parse("[fkpp]\nscheme = crank_nicolson\n").validate(), ValidationError);
    CHECK_NOTHROW(parse("[fkpp]\nscheme = crank_nicolson\nlog_tail = false\n").validate());
    CHECK_THROWS_AS(parse("[cluster]\nsigma_e = 0.9, 1.5\n").validate(), ValidationError);
  }

  TEST_CASE("breakpoint files") {
    const auto dir = scratch_dir("bp");
    std::ofstream(dir / "a.csv") << "x,y\n0,0\n0.5,0.1\n1,1\n";
    std::ofstream(dir / "exp.ini") << "[profile]\nkind = piecewise\nbreakpoints = a.csv\n";
    const auto cfg = load_config(dir / "exp.ini");
    CHECK(cfg.profile.xs == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(cfg.profile.ys == std::vector<double>{0.0, 0.1, 1.0});
    CHECK(build_profile(cfg.profile)(0.25) == doctest::Approx(0.05));
    CHECK_THROWS_AS(load_config(dir / "missing.ini"), ValidationError);
  }

  TEST_CASE("config hash") {
    auto a = parse("[experiment]\nseed = 1\nworkers = 1\nout = x\n");
    auto b = parse("[experiment]\nseed = 1\nworkers = 8\nout = y\n");
    auto c = parse("[experiment]\nseed = 2\n");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash(a).size() == 16);
    CHECK(canonical_config(a).find("workers") == std::string::npos);
  }

  TEST_CASE("atomic writes") {
    const auto dir = scratch_dir("atomic");
    write_file_atomic(dir / "f.txt", "hello\n");
    CHECK(slurp(dir / "f.txt") == "hello\n");
    CHECK_FALSE(fs::exists(dir / "f.txt.tmp"));
    write_file_atomic(dir / "f.txt", "bye\n");
    CHECK(slurp(dir / "f.txt") == "bye\n");
  }

  TEST_CASE("experiment runs are reproducible and worker-independent") {
    const auto dir = scratch_dir("run");
    auto cfg = parse("[experiment]\nkind = simulate\nt = 3\nreplicates = 50\nseed = 9\n");
    cfg.out = (dir / "a").string();
    const auto ra = run_experiment(cfg);
    cfg.out = (dir / "b").string();
    cfg.workers = 4;
    const auto rb = run_experiment(cfg);
    CHECK(ra.config_hash == rb.config_hash);
    REQUIRE(ra.artifacts.size() == rb.artifacts.size());
    for (const auto& art : ra.artifacts)
      CHECK(slurp(dir / "a" / art.name) == slurp(dir / "b" / art.name));
    CHECK(ra.artifacts.back().name == "manifest.json");
    const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
    CHECK(manifest["config_hash"] == ra.config_hash);
    CHECK(manifest["master_seed"] == 9);
    CHECK(manifest["files"].size() == ra.artifacts.size() - 1);
    CHECK(manifest["module_versions"].contains("fkpp"));
    const std::string csv = slurp(dir / "a" / "simulate_replicates.csv");
    CHECK(csv.rfind("# config_hash=" + ra.config_hash, 0) == 0);
  }

  TEST_CASE("every experiment kind runs on a small config") {
    const auto dir = scratch_dir("kinds");
    const char* texts[] = {
        "[experiment]\nkind = martingale\nt = 2\nreplicates = 20\n",
        "[experiment]\nkind = fkpp\nt = 2\n[fkpp]\ndx = 0.1\nsigma_e = 1.5\n",
        "[experiment]\nkind = compare\nt = 4\nreplicates = 20\n[profile]\nkind = power\n",
        "[experiment]\nkind = cluster\nt = 2\nreplicates = 20\n",
        "[experiment]\nkind = tube\nt = 31\nreplicates = 20\n[tube]\nstep = 0.05\n",
    };
    int i = 0;
    for (const char* text : texts) {
      auto cfg = parse(text);
      cfg.out = (dir / std::to_string(i++)).string();
      const auto r = run_experiment(cfg);
      CHECK(r.artifacts.size() >= 2);
      for (const auto& a : r.artifacts) CHECK(fs::exists(fs::path(cfg.out) / a.name));
    }
  }

  TEST_CASE("error json") {
    const std::string j = error_json(RejectionExhausted("no luck", 5, 0.01));
    const auto parsed = nlohmann::json::parse(j);
    CHECK(parsed["error"] == "rejection_exhausted");
    CHECK(parsed["attempts"] == 5);
    CHECK(nlohmann::json::parse(error_json(std::runtime_error("x")))["error"] == "internal");
  }
}
