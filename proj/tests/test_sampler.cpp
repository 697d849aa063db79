#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "vsbbm/error.hpp"
#include "vsbbm/rng.hpp"
#include "vsbbm/sampler.hpp"
#include "vsbbm/stats.hpp"

using namespace vsbbm;

namespace {

std::shared_ptr<const GenealogyTree> fixture() {
  return std::make_shared<const GenealogyTree>(GenealogyTree::from_parents(
      4.0, {0.0, 1.0, 1.0, 2.5, 2.5}, {1.0, 2.5, 4.0, 4.0, 4.0}, {kNoParent, 0, 0, 1, 1}));
}

std::shared_ptr<const SpeedProfile> share(SpeedProfile p) {
  return std::make_shared<const SpeedProfile>(std::move(p));
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("covariance oracle on the fixture tree") {
    const auto tree = fixture();
    const auto id = SpeedProfile::identity();
    const auto sq = SpeedProfile::power(2.0);
    // leaves: node 2 (split at 1), nodes 3 and 4 (split at 2.5)
    CHECK(tree->leaf_node(0) == 2);
    CHECK(covariance_oracle(*tree, id, 0, 1, 4.0) == doctest::Approx(1.0));
    CHECK(covariance_oracle(*tree, id, 1, 2, 4.0) == doctest::Approx(2.5));
    CHECK(covariance_oracle(*tree, id, 1, 1, 4.0) == 4.0);
    CHECK(covariance_oracle(*tree, sq, 1, 2, 4.0) == doctest::Approx(4.0 * 0.625 * 0.625));
    CHECK(covariance_oracle(*tree, sq, 0, 2, 4.0) == doctest::Approx(0.25));
  }

  TEST_CASE("edge variances telescope to the horizon") {
    const auto tree = std::make_shared<const GenealogyTree>(
        sample_tree(OffspringDistribution::binary(), 3.0, 17));
    const auto ts = SpeedProfile::two_speed(0.5, 2.0, 2.0 / 3.0);
    const EdgeSampler es(*tree, ts, 3.0);
    for (std::size_t k = 0; k < tree->leaf_count(); ++k) {
      double var = 0.0;
      for (NodeId n : tree->lineage(k)) var += es.edge_sd()[n] * es.edge_sd()[n];
      CHECK(var == doctest::Approx(3.0).epsilon(1e-12));
    }
  }

  TEST_CASE("empirical covariance matches the oracle on a fixed tree") {
    const auto tree = fixture();
    const auto ts = SpeedProfile::two_speed(0.5, 2.0, 2.0 / 3.0);
    const EdgeSampler es(*tree, ts, 4.0);
    constexpr std::size_t kDraws = 40'000;
    std::vector<double> x0(kDraws), x1(kDraws), x2(kDraws);
    std::vector<double> leaves(3);
    for (std::size_t r = 0; r < kDraws; ++r) {
      es.draw_leaves(seed_stream(99, r, "gauss"), leaves);
      x0[r] = leaves[0];
      x1[r] = leaves[1];
      x2[r] = leaves[2];
    }
    const std::pair<std::vector<double>*, std::vector<double>*> pairs[] = {
        {&x0, &x1}, {&x1, &x2}, {&x0, &x0}, {&x2, &x2}};
    const std::pair<std::size_t, std::size_t> ids[] = {{0, 1}, {1, 2}, {0, 0}, {2, 2}};
    for (int i = 0; i < 4; ++i) {
      const Estimate c = covariance_and_se(*pairs[i].first, *pairs[i].second);
      const double oracle = covariance_oracle(*tree, ts, ids[i].first, ids[i].second, 4.0);
      CHECK(std::fabs(c.mean - oracle) < 4.0 * c.std_error);
    }
  }

  TEST_CASE("sampling is deterministic in the seed") {
    const auto tree = std::make_shared<const GenealogyTree>(
        sample_tree(OffspringDistribution::binary(), 4.0, 5));
    const auto p = share(SpeedProfile::power(2.0));
    const auto a = sample_bbm(tree, p, 4.0, 123);
    const auto b = sample_bbm(tree, p, 4.0, 123);
    const auto c = sample_bbm(tree, p, 4.0, 124);
    REQUIRE(a.size() == tree->leaf_count());
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.leaf_positions()[i] == b.leaf_positions()[i]);
      any_diff = any_diff || a.leaf_positions()[i] != c.leaf_positions()[i];
    }
    CHECK(any_diff);
  }

  TEST_CASE("skeleton mode leaves the endpoints unchanged") {
    const auto tree = std::make_shared<const GenealogyTree>(
        sample_tree(OffspringDistribution::binary(), 4.0, 8));
    const auto p = share(SpeedProfile::two_speed(0.5, 2.0, 2.0 / 3.0));
    const auto plain = sample_bbm(tree, p, 4.0, 77);
    const auto skel = sample_bbm(tree, p, 4.0, 77, 4.0 / 512);
    for (std::size_t i = 0; i < plain.size(); ++i)
      CHECK(plain.leaf_positions()[i] == skel.leaf_positions()[i]);
    for (std::size_t i = 0; i < skel.size(); ++i) {
      const auto path = skel.lineage_path(i);
      CHECK(path.front().s == 0.0);
      CHECK(path.front().x == 0.0);
      CHECK(path.back().s == 4.0);
      CHECK(path.back().x == skel.leaf_positions()[i]);
      for (std::size_t k = 1; k < path.size(); ++k) CHECK(path[k].s >= path[k - 1].s);
    }
  }

  TEST_CASE("skeleton marginal variance follows Sigma^2") {
    const auto tree = std::make_shared<const GenealogyTree>(
        GenealogyTree::from_parents(4.0, {0.0}, {4.0}, {kNoParent}));
    const auto p = share(SpeedProfile::power(2.0));
    constexpr std::size_t kDraws = 20'000;
    std::vector<double> mid(kDraws);
    for (std::size_t r = 0; r < kDraws; ++r) {
      const auto c = sample_bbm(tree, p, 4.0, seed_stream(3, r, "skel"), 0.5);
      const auto path = c.lineage_path(0);
      for (const PathPoint& pt : path)
        if (pt.s == 2.0) mid[r] = pt.x;
    }
    std::vector<double> sq(kDraws);
    for (std::size_t r = 0; r < kDraws; ++r) sq[r] = mid[r] * mid[r];
    const Estimate v = mean_and_se(sq);
    CHECK(std::fabs(v.mean - sigma2(*p, 2.0, 4.0)) < 4.0 * v.std_error);
  }

  TEST_CASE("errors") {
    const auto tree = fixture();
    const auto p = share(SpeedProfile::identity());
    CHECK_THROWS_AS(sample_bbm(tree, p, 5.0, 1), ValidationError);
    CHECK_THROWS_AS(sample_bbm(tree, p, 4.0, 1, 0.0), ValidationError);
    const auto c = sample_bbm(tree, p, 4.0, 1);
    CHECK_THROWS_AS(c.lineage_path(0), ValidationError);
    const auto leaf_only = ParticleConfiguration::from_leaf_positions(tree, p, 4.0, {1.0, 2.0, 3.0});
    CHECK(leaf_only.max_position() == 3.0);
    CHECK_THROWS_AS(leaf_only.position_at_death(0), LookupError);
    CHECK_THROWS_AS(ParticleConfiguration::from_leaf_positions(tree, p, 4.0, {1.0}), ValidationError);
  }

  TEST_CASE("csv output") {
    const auto tree = fixture();
    const auto c = ParticleConfiguration::from_leaf_positions(
        tree, share(SpeedProfile::identity()), 4.0, {0.5, -1.25, 2.0});
    std::ostringstream os;
    c.write_csv(os);
    CHECK(os.str() == "leaf,position\n0,0.5\n1,-1.25\n2,2\n");
  }

  TEST_CASE("leaf labels are exchangeable") {
    // first and last leaf of a random tree have the same second moment t
    const auto p = share(SpeedProfile::two_speed(0.5, 2.0, 2.0 / 3.0));
    std::vector<double> first, last;
    for (std::uint64_t r = 0; r < 20'000; ++r) {
      const auto tree = std::make_shared<const GenealogyTree>(
          sample_tree(OffspringDistribution::binary(), 3.0, seed_stream(6, r, "tree")));
      const auto c = sample_bbm(tree, p, 3.0, seed_stream(6, r, "gauss"));
      first.push_back(c.leaf_positions().front() * c.leaf_positions().front());
      last.push_back(c.leaf_positions().back() * c.leaf_positions().back());
    }
    const Estimate a = mean_and_se(first), b = mean_and_se(last);
    CHECK(std::fabs(a.mean - b.mean) < 3.0 * std::hypot(a.std_error, b.std_error));
    CHECK(std::fabs(a.mean - 3.0) < 3.0 * a.std_error);
  }

  TEST_CASE("single immortal line has leaf variance t") {
    const OffspringDistribution chain({1.0});
    const auto p = share(SpeedProfile::identity());
    std::vector<double> sq;
    for (std::uint64_t r = 0; r < 100'000; ++r) {
      const auto tree = std::make_shared<const GenealogyTree>(
          sample_tree(chain, 2.0, seed_stream(11, r, "tree")));
      REQUIRE(tree->leaf_count() == 1);
      const auto c = sample_bbm(tree, p, 2.0, seed_stream(11, r, "gauss"));
      sq.push_back(c.leaf_positions()[0] * c.leaf_positions()[0]);
    }
    const Estimate v = mean_and_se(sq);
    CHECK(std::fabs(v.mean - 2.0) < 3.0 * v.std_error);
  }

  TEST_CASE("zero initial speed freezes nodes that die before the kink") {
    const auto tree = std::make_shared<const GenealogyTree>(
        sample_tree(OffspringDistribution::binary(), 4.0, 21));
    const auto p = share(SpeedProfile::two_speed(0.0, 2.0, 0.5));
    const auto c = sample_bbm(tree, p, 4.0, 5);
    std::size_t frozen = 0;
    for (NodeId n = 0; n < tree->node_count(); ++n)
      if (tree->death(n) <= 2.0) {
        CHECK(c.position_at_death(n) == 0.0);
        ++frozen;
      }
    CHECK(frozen > 0);
  }

  TEST_CASE("skeleton csv") {
    const auto tree = fixture();
    const auto c = sample_bbm(tree, share(SpeedProfile::identity()), 4.0, 3, 1.0);
    std::ostringstream os;
    c.write_skeleton_csv(os);
    CHECK(os.str().rfind("leaf,s,position\n", 0) == 0);
  }
}
