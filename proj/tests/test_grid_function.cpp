#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "certfp/grid_function.hpp"

using namespace certfp;

namespace {
const Interval unit(0.0, 1.0);
}

TEST_CASE("interval validation") {
  CHECK_THROWS_AS(Interval(1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(Interval(2.0, 1.0), std::domain_error);
}

TEST_CASE("grid function construction") {
  CHECK_THROWS_AS(GridFunction(unit, {1.0}), std::domain_error);
  CHECK_THROWS_AS(GridFunction(unit, {1.0, std::nan("")}), std::domain_error);
  const auto f = GridFunction::sampled(unit, 101, [](double t) { return t * t; });
  CHECK(f.node(0) == 0.0);
  CHECK(f.node(100) == 1.0);  // endpoint exact
  CHECK(f[50] == Catch::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("sup_distance basics") {
  const auto x = GridFunction::sampled(unit, 101, [](double t) { return t; });
  const auto zero = GridFunction::zero(unit, 101);
  CHECK(sup_distance(x, x) == 0.0);
  CHECK(sup_distance(x, zero) == 1.0);

  const auto y = GridFunction::sampled(unit, 101, [](double t) { return 1.0 - t; });
  CHECK(sup_distance(x, y) == 1.0);  // |2t-1| peaks at the endpoints

  const auto coarse = GridFunction::zero(unit, 11);
  CHECK_THROWS_AS(sup_distance(x, coarse), std::invalid_argument);
  CHECK_THROWS_AS(sup_distance(x, GridFunction::zero(Interval(0.0, 2.0), 101)),
                  std::invalid_argument);
}

TEST_CASE("metric axioms on random triples") {
  SplitMix64 rng(3);
  const BallRegion ball(GridFunction::zero(unit, 51), 4.0);
  const auto xs = sample_ball(ball, 30, 77);
  for (std::size_t trial = 0; trial < 60; ++trial) {
    const auto& x = xs[rng.below(xs.size())];
    const auto& y = xs[rng.below(xs.size())];
    const auto& z = xs[rng.below(xs.size())];
    const double dxy = sup_distance(x, y);
    CHECK(dxy == sup_distance(y, x));
    CHECK(dxy <= sup_distance(x, z) + sup_distance(z, y) + 1e-15);
    CHECK(sup_distance(x, x) == 0.0);
  }
}

TEST_CASE("integrate") {
  CHECK(integrate(GridFunction::constant(unit, 11, 1.0)) == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(integrate(GridFunction::sampled(unit, 11, [](double t) { return t; })) ==
        Catch::Approx(0.5).epsilon(1e-15));
  CHECK(integrate(GridFunction::sampled(unit, 1001, [](double t) { return t * t; })) ==
        Catch::Approx(1.0 / 3.0).margin(1e-6));
}

TEST_CASE("integrate is exact on affine functions") {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const double a = rng.uniform(-3.0, 3.0);
    const double b = a + rng.uniform(0.1, 5.0);
    const double slope = rng.uniform(-10.0, 10.0);
    const double icept = rng.uniform(-10.0, 10.0);
    const std::size_t m = 2 + rng.below(400);
    const auto f = GridFunction::sampled(Interval(a, b), m,
                                         [&](double t) { return slope * t + icept; });
    const double exact = slope * 0.5 * (b * b - a * a) + icept * (b - a);
    CHECK(integrate(f) == Catch::Approx(exact).epsilon(1e-14).margin(1e-14));
  }
}

TEST_CASE("integrate_prefix") {
  const auto one = GridFunction::constant(unit, 11, 1.0);
  CHECK(integrate_prefix(one, 0) == 0.0);
  CHECK(integrate_prefix(one, 5) == Catch::Approx(0.5).epsilon(1e-15));
  const auto t = GridFunction::sampled(unit, 11, [](double v) { return v; });
  CHECK(integrate_prefix(t, 10) == Catch::Approx(integrate(t)).epsilon(1e-14));
  CHECK_THROWS_AS(integrate_prefix(t, 11), std::out_of_range);
}

TEST_CASE("prefix at the last node equals the full integral") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + rng.below(200);
    std::vector<double> v(m);
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
    const GridFunction f(unit, v);
    CHECK(integrate_prefix(f, m - 1) ==
          Catch::Approx(integrate(f)).epsilon(1e-14).margin(1e-16));
  }
}

TEST_CASE("trapezoid error decays at second order under refinement") {
  auto quad_error = [](auto fn, double exact, std::size_t m) {
    return std::abs(integrate(GridFunction::sampled(unit, m, fn)) - exact);
  };
  const double e1 = quad_error([](double t) { return t * t; }, 1.0 / 3.0, 101);
  const double e2 = quad_error([](double t) { return t * t; }, 1.0 / 3.0, 201);
  CHECK(e1 / e2 == Catch::Approx(4.0).epsilon(0.05));

  const double s1 = quad_error([](double t) { return std::sin(t); }, 1.0 - std::cos(1.0), 101);
  const double s2 = quad_error([](double t) { return std::sin(t); }, 1.0 - std::cos(1.0), 201);
  CHECK(s1 / s2 == Catch::Approx(4.0).epsilon(0.05));
}

TEST_CASE("refine_linear doubles resolution and keeps node values") {
  const auto f = GridFunction::sampled(unit, 51, [](double t) { return t * t; });
  const auto fine = refine_linear(f);
  REQUIRE(fine.size() == 101);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(fine[2 * i] == f[i]);
  CHECK(fine[1] == Catch::Approx(0.5 * (f[0] + f[1])).epsilon(1e-15));
}

TEST_CASE("sample_ball") {
  const BallRegion ball(GridFunction::sampled(unit, 41, [](double t) { return t; }), 0.7);

  SECTION("radius zero returns copies of the center") {
    const BallRegion degenerate(ball.center, 0.0);
    for (const auto& s : sample_ball(degenerate, 6, 1))
      CHECK(sup_distance(s, ball.center) == 0.0);
  }

  SECTION("all draws stay inside the ball") {
    for (const auto& s : sample_ball(ball, 40, 123))
      CHECK(sup_distance(ball.center, s) <= 0.7 + 1e-15);
  }

  SECTION("structured extremes lead") {
    const auto xs = sample_ball(ball, 5, 9);
    CHECK(sup_distance(xs[0], ball.center) == 0.0);
    CHECK(xs[1][0] - ball.center[0] == Catch::Approx(0.7));
    CHECK(xs[2][0] - ball.center[0] == Catch::Approx(-0.7));
    CHECK(xs[3][1] - ball.center[1] == Catch::Approx(-0.7));  // alternating signs
    CHECK(xs[3][0] - ball.center[0] == Catch::Approx(0.7));
  }

  SECTION("same seed reproduces the list") {
    const auto a = sample_ball(ball, 12, 555);
    const auto b = sample_ball(ball, 12, 555);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(sup_distance(a[i], b[i]) == 0.0);
  }
}
