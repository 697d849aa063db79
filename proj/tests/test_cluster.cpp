#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "vsbbm/cluster.hpp"
#include "vsbbm/error.hpp"
#include "vsbbm/rng.hpp"
#include "vsbbm/stats.hpp"

using namespace vsbbm;

TEST_SUITE("cluster") {
  TEST_CASE("conditioning level and acceptance estimate") {
    CHECK(conditioning_level(1.5, 4.0) == doctest::Approx(std::numbers::sqrt2 * 6.0));
    CHECK(acceptance_estimate(1.1, 3.0) == doctest::Approx(0.078856270239657589).epsilon(1e-13));
    CHECK(acceptance_estimate(1.5, 3.0) == doctest::Approx(0.002553517711009008).epsilon(1e-13));
    CHECK(acceptance_estimate(3.0, 3.0) == doctest::Approx(2.0494891345625023e-12).epsilon(1e-13));
  }

  TEST_CASE("rejection sampler") {
    const auto off = OffspringDistribution::binary();
    const auto a = conditioned_sample(off, 1.1, 3.0, 7, 100'000);
    const auto b = conditioned_sample(off, 1.1, 3.0, 7, 100'000);
    CHECK(a.config.max_position() > conditioning_level(1.1, 3.0));
    CHECK(a.attempts >= 1);
    CHECK(a.attempts == b.attempts);
    CHECK(a.config.max_position() == b.config.max_position());
    const auto atoms = decoration_atoms(a.config, 1.1, 3.0);
    CHECK(atoms.front() > 0.0);
    CHECK(std::is_sorted(atoms.rbegin(), atoms.rend()));
    CHECK(atoms_at_least(atoms, 1e9) == atoms.size());
    CHECK_THROWS_AS(conditioned_sample(off, 3.0, 3.0, 7, 10), ValidationError);
    CHECK_THROWS_AS(conditioned_sample(off, 1.1, 3.0, 7, 0), ValidationError);
  }

  TEST_CASE("rejection sampler reports exhaustion") {
    const auto off = OffspringDistribution::binary();
    int exhausted = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      try {
        (void)conditioned_sample(off, 1.1, 3.0, seed, 1);
      } catch (const RejectionExhausted& e) {
        CHECK(e.attempts == 1);
        CHECK(e.acceptance_estimate == doctest::Approx(acceptance_estimate(1.1, 3.0)));
        ++exhausted;
      }
    }
    CHECK(exhausted > 0);
  }

  TEST_CASE("atom counting") {
    const std::vector<double> atoms{0.5, 0.0, -1.0, -2.0, -2.5};
    CHECK(atoms_at_least(atoms, 0.0) == 2);
    CHECK(atoms_at_least(atoms, 2.0) == 4);
    CHECK(atoms_at_least(atoms, 10.0) == 5);
  }

  TEST_CASE("spine realization structure") {
    const auto off = OffspringDistribution::binary();
    const auto s = spine_sample(off, 1.5, 0.25, 3.0, 99);
    CHECK(s.endpoint == doctest::Approx(std::numbers::sqrt2 * 4.5 + 0.25));
    CHECK(s.spine.front().s == 0.0);
    CHECK(s.spine.front().x == 0.0);
    CHECK(s.spine.back().s == 3.0);
    CHECK(s.spine.back().x == s.endpoint);
    CHECK(std::is_sorted(s.branch_times.begin(), s.branch_times.end()));
    for (double b : s.branch_times) {
      CHECK(b > 0.0);
      CHECK(b < 3.0);
    }
    REQUIRE(s.offspring_counts.size() == s.branch_times.size());
    for (int k : s.offspring_counts) CHECK(k == 1);
    CHECK(s.subtrees.size() == s.branch_times.size());
    std::size_t n = 1;
    for (const auto& sub : s.subtrees) n += sub.config.size();
    CHECK(s.particle_count() == n);
    const auto p = s.particles();
    CHECK(p.size() == n);
    CHECK(std::is_sorted(p.rbegin(), p.rend()));
    CHECK(std::find(p.begin(), p.end(), s.endpoint) != p.end());
    const auto again = spine_sample(off, 1.5, 0.25, 3.0, 99);
    CHECK(again.particles() == p);
  }

  TEST_CASE("spine branch points and bridge marginal") {
    const auto off = OffspringDistribution::binary();
    std::vector<double> counts, mids;
    for (std::uint64_t r = 0; r < 3000; ++r) {
      const auto s = spine_sample(off, 1.2, 0.0, 2.0, seed_stream(1, r, "spine"));
      counts.push_back(static_cast<double>(s.branch_times.size()));
      for (const auto& pt : s.spine)
        if (pt.s == 1.0) mids.push_back(pt.x - s.endpoint / 2.0);
    }
    const Estimate c = mean_and_se(counts);
    CHECK(std::fabs(c.mean - 4.0) < 4.0 * c.std_error);
    REQUIRE(mids.size() == 3000);
    const Estimate m = mean_and_se(mids);
    CHECK(std::fabs(m.mean) < 4.0 * m.std_error);
    std::vector<double> sq;
    for (double x : mids) sq.push_back(x * x);
    const Estimate v = mean_and_se(sq);
    CHECK(std::fabs(v.mean - 0.5) < 4.0 * v.std_error);  // bridge variance s(t-s)/t
  }

  TEST_CASE("collapse bound") {
    CHECK(collapse_bound(1.2, 2.0, 2.0) == doctest::Approx(503369837179.3809).epsilon(1e-8));
    CHECK(collapse_bound(1.5, 2.0, 2.0) == doctest::Approx(146551.49048705281).epsilon(1e-8));
    CHECK(collapse_bound(2.0, 2.0, 2.0) == doctest::Approx(31429.129484102108).epsilon(1e-8));
    CHECK(collapse_bound(3.0, 2.0, 2.0) == doctest::Approx(120317.89115921247).epsilon(1e-8));
    CHECK_THROWS_AS(collapse_bound(1.0, 2.0, 2.0), ValidationError);
    CHECK_THROWS_AS(collapse_bound(2.0, 2.0, 2.0, 1.0), ValidationError);
  }

  TEST_CASE("collapse study") {
    const auto off = OffspringDistribution::binary();
    const std::vector<double> sig{1.2, 1.5, 2.0};
    const auto a = decoration_collapse_study(off, sig, 2.0, 3.0, 1500, 11, OvershootMode::zero, 0.75, 1);
    const auto b = decoration_collapse_study(off, sig, 2.0, 3.0, 1500, 11, OvershootMode::zero, 0.75, 3);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a[i].estimate == b[i].estimate);
      CHECK(a[i].estimate >= 0.0);
      CHECK(a[i].estimate <= 1.0);
      if (i > 0) CHECK(a[i].analytic_bound < a[i - 1].analytic_bound);
    }
    CHECK(a[2].estimate < a[0].estimate);
    const std::vector<double> desc{2.0, 1.5};
    CHECK_THROWS_AS(decoration_collapse_study(off, desc, 2.0, 3.0, 10, 1), ValidationError);
    const auto e = decoration_collapse_study(off, sig, 2.0, 2.0, 200, 3, OvershootMode::exponential);
    CHECK(e.size() == 3);
    std::ostringstream os;
    write_collapse_csv(os, a);
    CHECK(os.str().rfind("sigma_e,estimate,SE,analytic_bound\n", 0) == 0);
    std::ostringstream at;
    const std::vector<double> atoms{0.5, -1.0};
    write_atoms_csv(at, atoms);
    CHECK(at.str() == "rank,atom\n0,0.5\n1,-1\n");
  }

  TEST_CASE("size-biased offspring counts at spine branch points") {
    const OffspringDistribution off({0.3, 0.4, 0.3});
    std::vector<double> observed(3, 0.0);
    double draws = 0.0;
    for (std::uint64_t r = 0; r < 3000; ++r) {
      const auto s = spine_sample(off, 1.2, 0.0, 2.0, seed_stream(8, r, "spine"));
      for (int k : s.offspring_counts) {
        observed.at(static_cast<std::size_t>(k)) += 1.0;
        draws += 1.0;
      }
    }
    REQUIRE(draws >= 10'000);
    const auto law = off.size_biased();
    std::vector<double> expected;
    for (double q : law) expected.push_back(q * draws);
    CHECK(chi_square_gof(observed, expected).p_value > 0.01);
  }

  TEST_CASE("plain BBM first moment in a window") {
    const auto off = OffspringDistribution::binary();
    const auto p = std::make_shared<const SpeedProfile>(SpeedProfile::identity());
    const double t = 3.0, a = 1.0, b = 3.0;
    std::vector<double> counts;
    for (std::uint64_t r = 0; r < 20'000; ++r) {
      auto tree = std::make_shared<const GenealogyTree>(sample_tree(off, t, seed_stream(12, r, "tree")));
      const auto c = sample_bbm(tree, p, t, seed_stream(12, r, "gauss"));
      double n = 0;
      for (double x : c.leaf_positions()) n += (x >= a && x <= b);
      counts.push_back(n);
    }
    const Estimate e = mean_and_se(counts);
    const double oracle = std::exp(t) * (normal_cdf(b / std::sqrt(t)) - normal_cdf(a / std::sqrt(t)));
    CHECK(std::fabs(e.mean - oracle) < 3.0 * e.std_error);
  }

  TEST_CASE("rejection sampler matches plain sampling restricted to acceptance") {
    const auto off = OffspringDistribution::binary();
    const auto p = std::make_shared<const SpeedProfile>(SpeedProfile::identity());
    const double se = 1.1, t = 2.0;
    const double level = conditioning_level(se, t);
    std::vector<double> plain;
    for (std::uint64_t r = 0; r < 100'000; ++r) {
      auto tree = std::make_shared<const GenealogyTree>(sample_tree(off, t, seed_stream(30, r, "tree")));
      const auto c = sample_bbm(tree, p, t, seed_stream(30, r, "gauss"));
      if (c.max_position() > level) plain.push_back(static_cast<double>(c.size()));
    }
    std::vector<double> rejected;
    for (std::uint64_t r = 0; r < 3000; ++r)
      rejected.push_back(static_cast<double>(conditioned_sample(off, se, t, seed_stream(31, r, "rej"), 10'000).config.size()));
    const Estimate a = mean_and_se(plain), b = mean_and_se(rejected);
    CHECK(std::fabs(a.mean - b.mean) < 3.0 * std::hypot(a.std_error, b.std_error));
  }
}
