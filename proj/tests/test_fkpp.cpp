#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "vsbbm/error.hpp"
#include "vsbbm/fkpp.hpp"
#include "vsbbm/stats.hpp"

using namespace vsbbm;

namespace {

FkppGrid small_grid(double x_max = 40.0) { return FkppGrid{-30.0, x_max, 0.05}; }

}  // namespace

TEST_SUITE("fkpp") {
  TEST_CASE("heaviside initial data") {
    FkppOptions o;
    const auto s = FkppState::heaviside(small_grid(), OffspringDistribution::binary(), o);
    CHECK(s.size() == 1401);
    CHECK(s.values()[599] == 1.0);
    CHECK(s.values()[600] == 1.0);  // x = 0
    CHECK(s.values()[601] == 0.0);
    CHECK(s.front() == doctest::Approx(0.025));
    o.jump_value = 0.5;
    const auto h = FkppState::heaviside(small_grid(), OffspringDistribution::binary(), o);
    CHECK(h.values()[600] == 0.5);
    CHECK(h.front() == doctest::Approx(0.0));
  }

  TEST_CASE("option validation") {
    FkppOptions o;
    o.scheme = FkppScheme::crank_nicolson;
    CHECK_THROWS_AS(FkppState::heaviside(small_grid(), OffspringDistribution::binary(), o),
                    ValidationError);
    o.log_tail = false;
    CHECK_NOTHROW(FkppState::heaviside(small_grid(), OffspringDistribution::binary(), o));
    FkppOptions bad;
    bad.jump_value = 1.5;
    CHECK_THROWS_AS(FkppState::heaviside(small_grid(), OffspringDistribution::binary(), bad),
                    ValidationError);
    FkppOptions mismatch;
    mismatch.dx = 0.1;
    CHECK_THROWS_AS(FkppState::heaviside(small_grid(), OffspringDistribution::binary(), mismatch),
                    ValidationError);
  }

  TEST_CASE("explicit stability limit") {
    auto s = FkppState::heaviside(small_grid(), OffspringDistribution::binary());
    CHECK_THROWS_AS(s.advance(0.05 * 0.05), StabilityError);
    CHECK_NOTHROW(s.advance(0.05 * 0.05 / 2.0));
    CHECK_THROWS_AS(s.advance(-1.0), ValidationError);
  }

  TEST_CASE("step is functional") {
    const auto s = FkppState::heaviside(small_grid(), OffspringDistribution::binary());
    const auto n = step(s, 1e-4);
    CHECK(s.time() == 0.0);
    CHECK(n.time() == doctest::Approx(1e-4));
    CHECK(s.values()[601] == 0.0);
    CHECK(n.values()[601] > 0.0);
  }

  TEST_CASE("solution stays in [0, 1] and non-increasing in x") {
    const auto s = solve_heaviside(OffspringDistribution::binary(), 5.0);
    const auto u = s.values();
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(u[i] >= 0.0);
      CHECK(u[i] <= 1.0);
      if (i > 0) CHECK(u[i] <= u[i - 1] + 1e-15);
    }
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s.log_u(i) <= s.log_u(i - 1) + 1e-9);
  }

  TEST_CASE("front history is recorded and increasing") {
    FkppOptions o;
    o.track_every = 0.5;
    const auto s = solve_heaviside(OffspringDistribution::binary(), 10.0, o);
    const auto& h = s.front_history();
    REQUIRE(h.size() == 21);
    CHECK(h.back().t == doctest::Approx(10.0));
    for (std::size_t i = 2; i < h.size(); ++i) CHECK(h[i].front > h[i - 1].front);
    const double speed = (h[20].front - h[10].front) / 5.0;
    CHECK(speed > 1.2);
    CHECK(speed < std::numbers::sqrt2);
  }

  TEST_CASE("far tail follows the linearized equation") {
    // u <= e^t P(B_t > x); the gap closes as u becomes small.
    FkppOptions o;
    o.jump_value = 0.5;
    const auto s = solve_heaviside(OffspringDistribution::binary(), 5.0, o,
                                   FkppGrid{-50.0, 120.0, 0.05});
    double prev_gap = 1e9;
    for (double x : {10.0, 15.0, 20.0, 25.0}) {
      const double gap = 5.0 + log_normal_sf(x / std::sqrt(5.0)) - s.log_u_at(x);
      CHECK(gap > 0.0);
      CHECK(gap < prev_gap);
      prev_gap = gap;
    }
    CHECK(std::fabs(s.log_u_at(30.0) - 5.0 - log_normal_sf(30.0 / std::sqrt(5.0))) < 0.1);
    // ahead of the front the solution is carried as log u
    CHECK(s.in_log_mode(static_cast<std::size_t>((30.0 + 50.0) / 0.05)));
    CHECK(s.in_log_mode(static_cast<std::size_t>((60.0 + 50.0) / 0.05)));
    CHECK(std::isfinite(s.log_u_at(80.0)));
    CHECK(s.log_u_at(80.0) < -600.0);
  }

  TEST_CASE("crank-nicolson and explicit fronts agree") {
    FkppOptions cn;
    cn.scheme = FkppScheme::crank_nicolson;
    cn.log_tail = false;
    cn.dt = 0.01;
    const auto a = solve_heaviside(OffspringDistribution::binary(), 5.0, cn);
    const auto b = solve_heaviside(OffspringDistribution::binary(), 5.0);
    CHECK(a.front() == doctest::Approx(b.front()).epsilon(0.01));
  }

  TEST_CASE("grid refinement changes the front little") {
    FkppOptions coarse;
    coarse.dx = 0.1;
    const double f1 = solve_heaviside(OffspringDistribution::binary(), 5.0, coarse).front();
    const double f2 = solve_heaviside(OffspringDistribution::binary(), 5.0).front();
    CHECK(std::fabs(f1 - f2) < 0.05);
  }

  TEST_CASE("the buffer check fires before the front reaches the boundary") {
    CHECK_THROWS_AS(solve_heaviside(OffspringDistribution::binary(), 20.0, {}, small_grid(40.0)),
                    RangeError);
    const auto s = FkppState::heaviside(small_grid(), OffspringDistribution::binary());
    CHECK_THROWS_AS(s.log_u_at(41.0), RangeError);
  }

  TEST_CASE("default grid") {
    const FkppGrid g = default_grid(10.0, 0.05);
    CHECK(g.x_min == -50.0);
    CHECK(g.x_max >= std::numbers::sqrt2 * 10.0 + 40.0);
    CHECK(g.x_max < std::numbers::sqrt2 * 10.0 + 40.0 + 0.05 + 1e-9);
    CHECK(default_grid(10.0, 0.05, 1.0, 200.0).x_max >= 240.0);
  }

  TEST_CASE("tail constants") {
    const auto off = OffspringDistribution::binary();
    const auto a = tail_constant(off, 1.5, 10.0);
    const auto b = tail_constant(off, 2.0, 10.0);
    CHECK(a.value > 0.0);
    CHECK(a.value < b.value);
    CHECK(b.value < tail_constant_limit());
    CHECK(tail_constant_limit() == doctest::Approx(0.28209479177387814).epsilon(1e-15));
    CHECK_THROWS_AS(tail_constant(off, 1.0, 10.0), ValidationError);
  }

  TEST_CASE("csv output") {
    FkppOptions o;
    o.track_every = 1.0;
    const auto s = solve_heaviside(OffspringDistribution::binary(), 1.0, o, small_grid());
    std::ostringstream a, b;
    s.write_csv(a);
    s.write_front_csv(b);
    CHECK(a.str().rfind("x,u,log_u\n", 0) == 0);
    CHECK(b.str().rfind("t,front\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : b.str()) lines += c == '\n';
    CHECK(lines == 3);
  }

  TEST_CASE("comparison principle on random ordered pairs") {
    const FkppGrid g{-20.0, 40.0, 0.05};
    FkppOptions o;
    o.log_tail = false;
    o.track_every = 0.0;
    o.buffer = 0.0;
    CounterRng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> a(g.size()), b(g.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = g.x(i) < 0.0 ? rng.uniform() : 0.3 * rng.uniform() * std::exp(-g.x(i));
        b[i] = std::min(1.0, a[i] + 0.2 * rng.uniform());
      }
      FkppState sa(g, a, OffspringDistribution({0.2, 0.6, 0.2}), o);
      FkppState sb(g, b, OffspringDistribution({0.2, 0.6, 0.2}), o);
      for (int k = 0; k < 4; ++k) {
        sa.advance_to(0.5 * (k + 1));
        sb.advance_to(0.5 * (k + 1));
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(sa.values()[i] <= sb.values()[i] + 1e-12);
      }
    }
  }

  TEST_CASE("front speed between t = 30 and t = 60") {
    FkppOptions o;
    o.track_every = 30.0;
    const auto s = solve_heaviside(OffspringDistribution::binary(), 60.0, o);
    const auto& h = s.front_history();
    REQUIRE(h.size() == 3);
    const double speed = (h[2].front - h[1].front) / 30.0;
    CHECK(std::fabs(speed - std::numbers::sqrt2) < 0.05);
  }
}
