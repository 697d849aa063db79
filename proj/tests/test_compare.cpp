#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "vsbbm/compare.hpp"
#include "vsbbm/error.hpp"
#include "vsbbm/rng.hpp"
#include "vsbbm/stats.hpp"

using namespace vsbbm;

namespace {

std::shared_ptr<const SpeedProfile> square() {
  return std::make_shared<const SpeedProfile>(SpeedProfile::power(2.0));
}

ReplicateSummary summary(std::vector<long> counts) {
  ReplicateSummary s;
  s.exceedance_counts = std::move(counts);
  return s;
}

}  // namespace

TEST_SUITE("compare") {
  TEST_CASE("mixed profiles") {
    const auto a = SpeedProfile::power(2.0);
    const auto b = SpeedProfile::identity();
    const auto m = mix_profiles(a, b, 0.25);
    for (double x : {0.0, 0.3, 0.8, 1.0}) CHECK(m(x) == doctest::Approx(0.25 * x * x + 0.75 * x));
    CHECK_THROWS_AS(mix_profiles(a, b, 1.5), RangeError);
  }

  TEST_CASE("coupled triple shares the genealogy") {
    const auto tree = std::make_shared<const GenealogyTree>(
        sample_tree(OffspringDistribution::binary(), 6.0, 31));
    const auto env = build_envelopes(*square(), 6.0);
    const auto a = coupled_sample(tree, square(), env, 6.0, 5);
    const auto b = coupled_sample(tree, square(), env, 6.0, 5);
    CHECK(&a.base.tree() == tree.get());
    CHECK(&a.upper.tree() == tree.get());
    CHECK(&a.lower.tree() == tree.get());
    CHECK(a.base.size() == tree->leaf_count());
    for (std::size_t i = 0; i < a.base.size(); ++i) {
      CHECK(a.base.leaf_positions()[i] == b.base.leaf_positions()[i]);
      CHECK(a.lower.leaf_positions()[i] == b.lower.leaf_positions()[i]);
    }
    CHECK(a.base.leaf_positions()[0] != a.upper.leaf_positions()[0]);
    CHECK_THROWS_AS(coupled_sample(tree, square(), env, 7.0, 5), ValidationError);
  }

  TEST_CASE("interpolation endpoints") {
    const auto tree = std::make_shared<const GenealogyTree>(
        sample_tree(OffspringDistribution::binary(), 5.0, 2));
    const auto env = build_envelopes(*square(), 5.0);
    const auto triple = coupled_sample(tree, square(), env, 5.0, 8);
    const auto one = interpolate(triple, 1.0);
    const auto zero = interpolate(triple, 0.0);
    const auto half = interpolate(triple, 0.5);
    for (std::size_t i = 0; i < one.size(); ++i) {
      CHECK(one.leaf_positions()[i] == triple.base.leaf_positions()[i]);
      CHECK(zero.leaf_positions()[i] == triple.upper.leaf_positions()[i]);
      CHECK(half.leaf_positions()[i] ==
            doctest::Approx(std::sqrt(0.5) * (triple.base.leaf_positions()[i] +
                                              triple.upper.leaf_positions()[i])));
    }
    CHECK(half.profile()(0.5) ==
          doctest::Approx(0.5 * 0.25 + 0.5 * env.upper.profile(0.5)));
    CHECK_THROWS_AS(interpolate(triple, -0.1), RangeError);
    CHECK_THROWS_AS(interpolate(triple, 1.1), RangeError);
  }

  TEST_CASE("envelope ordering holds at the sampled branch times") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto tree = sample_tree(OffspringDistribution::binary(), 8.0, seed);
      CHECK(envelope_order_violations(tree, *square(), build_envelopes(*square(), 8.0)) == 0);
    }
  }

  TEST_CASE("sandwich cells") {
    const std::vector<double> u{0.0};
    const std::vector<double> c{1.0};
    // identical samples pass both sides
    const std::vector<ReplicateSummary> same{summary({1}), summary({0})};
    auto r = sandwich_report(same, same, same, u, c);
    REQUIRE(r.cells.size() == 1);
    CHECK(r.cells[0].pass());
    CHECK(r.passed() == 1);
    // base far below the lower envelope (more exceedances) fails the lower side
    const std::vector<ReplicateSummary> many(200, summary({5}));
    const std::vector<ReplicateSummary> none(200, summary({0}));
    r = sandwich_report(many, none, none, u, c);
    CHECK(r.cells[0].pass_upper);
    CHECK_FALSE(r.cells[0].pass_lower);
    r = sandwich_report(none, many, many, u, c);
    CHECK_FALSE(r.cells[0].pass_upper);
    CHECK(r.cells[0].pass_lower);
    const std::vector<double> u2{0.0, 1.0};
    CHECK_THROWS_AS(sandwich_report(same, same, same, u2, c), ValidationError);
  }

  TEST_CASE("sandwich report layout and json") {
    const std::vector<double> u{-1.0, 0.0};
    const std::vector<double> c{0.5, 1.0, 2.0};
    const std::vector<ReplicateSummary> s{summary({2, 1}), summary({1, 0})};
    const auto r = sandwich_report(s, s, s, u, c);
    REQUIRE(r.cells.size() == 6);
    CHECK(r.cells[1].u == -1.0);
    CHECK(r.cells[1].c == 1.0);
    CHECK(r.cells[3].u == 0.0);
    std::ostringstream os;
    write_sandwich_json(os, r);
    const auto j = nlohmann::json::parse(os.str());
    CHECK(j["total"] == 6);
    CHECK(j["passed"] == 6);
    CHECK(j["cells"][0].contains("L_A"));
    CHECK(j["cells"][0].contains("L_up"));
    CHECK(j["cells"][0].contains("L_low"));
  }

  TEST_CASE("comparison run is independent of the worker count") {
    const std::vector<double> u{-2.0, -1.0};
    const std::vector<double> c{0.5};
    const auto a = run_comparison(OffspringDistribution::binary(), square(), 5.0, 60, 4, u, c, 1);
    const auto b = run_comparison(OffspringDistribution::binary(), square(), 5.0, 60, 4, u, c, 4);
    REQUIRE(a.report.cells.size() == b.report.cells.size());
    for (std::size_t i = 0; i < a.report.cells.size(); ++i) {
      CHECK(a.report.cells[i].base.mean == b.report.cells[i].base.mean);
      CHECK(a.report.cells[i].upper.mean == b.report.cells[i].upper.mean);
    }
    CHECK(a.order_violations == 0);
  }

  TEST_CASE("interpolated configurations carry the mixed covariance") {
    const auto tree = std::make_shared<const GenealogyTree>(GenealogyTree::from_parents(
        6.0, {0.0, 1.5, 1.5, 4.0, 4.0}, {1.5, 4.0, 6.0, 6.0, 6.0}, {kNoParent, 0, 0, 1, 1}));
    const auto env = build_envelopes(*square(), 6.0);
    const double h = 0.4;
    constexpr std::size_t kDraws = 20'000;
    std::vector<double> x0(kDraws), x1(kDraws), x2(kDraws);
    for (std::size_t r = 0; r < kDraws; ++r) {
      const auto triple = coupled_sample(tree, square(), env, 6.0, seed_stream(2, r, "gauss"));
      const auto c = interpolate(triple, h);
      x0[r] = c.leaf_positions()[0];
      x1[r] = c.leaf_positions()[1];
      x2[r] = c.leaf_positions()[2];
    }
    auto oracle = [&](double d) { return h * 6.0 * square()->operator()(d / 6.0) + (1 - h) * 6.0 * env.upper.profile(d / 6.0); };
    const Estimate c01 = covariance_and_se(x0, x1);
    const Estimate c12 = covariance_and_se(x1, x2);
    const Estimate c22 = covariance_and_se(x2, x2);
    CHECK(std::fabs(c01.mean - oracle(1.5)) < 3.0 * c01.std_error);
    CHECK(std::fabs(c12.mean - oracle(4.0)) < 3.0 * c12.std_error);
    CHECK(std::fabs(c22.mean - 6.0) < 3.0 * c22.std_error);
  }
}
