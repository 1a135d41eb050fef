// Circle arithmetic, arc geometry, the arctan fiber family, and orbit
// iteration conventions. Numeric oracles here were computed independently
// (closed forms or hand-rolled loops) and are pinned to full precision.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include "snalab/common.hpp"
#include "snalab/qpf_map.hpp"
#include "snalab/torus.hpp"

using namespace snalab;

TEST_CASE("frac reduces to [0,1) including negative and near-integer input") {
  CHECK(frac(0.0) == 0.0);
  CHECK(frac(1.0) == 0.0);
  CHECK(frac(-0.25) == 0.75);
  CHECK(frac(2.75) == 0.75);
  CHECK(frac(-3.0) == 0.0);
  // values just below 1 from rounding must not escape the half-open interval
  double r = frac(1.0 - 1e-17);  // rounds to frac(1.0)
  CHECK(r >= 0.0);
  CHECK(r < 1.0);
  double s = frac(0.9999999999999999);
  CHECK(s < 1.0);
}

TEST_CASE("golden rotation number satisfies omega^2 + omega = 1") {
  double w = golden_omega();
  CHECK(w == 0.6180339887498949);
  CHECK(std::fabs(w * w + w - 1.0) < 1e-15);
}

TEST_CASE("rotate matches the single-multiplication form bitwise") {
  double w = golden_omega();
  CHECK(rotate(0.0, w, 3) == 0.8541019662496847);
  // additive identity: rotate(t, w, n) == frac(t + n*w) with one product
  for (std::int64_t n : {-7, -1, 0, 1, 2, 12, 1000}) {
    double t = 0.371;
    CHECK(rotate(t, w, n) == frac(t + static_cast<double>(n) * w));
  }
}

TEST_CASE("torus distance is symmetric and wraps") {
  CHECK(torus_distance(0.1, 0.9) == Catch::Approx(0.2).margin(1e-15));
  CHECK(torus_distance(0.9, 0.1) == Catch::Approx(0.2).margin(1e-15));
  CHECK(torus_distance(0.25, 0.25) == 0.0);
  CHECK(torus_distance(0.0, 0.5) == 0.5);
  // eighth return of the golden rotation is the first close one (three-distance)
  double w = golden_omega();
  CHECK(torus_distance(rotate(0.0, w, 8), 0.0) == Catch::Approx(0.055728090000841).margin(1e-14));
}

TEST_CASE("closed arc membership handles wraparound and endpoints") {
  Arc a{0.875, 0.25};  // dyadic endpoints keep the closed-endpoint checks exact
  CHECK(point_in_arc(a, 0.95));
  CHECK(point_in_arc(a, 0.05));
  CHECK(point_in_arc(a, 0.875));  // closed at lo
  CHECK(point_in_arc(a, 0.125));  // closed at hi
  CHECK_FALSE(point_in_arc(a, 0.5));
  CHECK_FALSE(point_in_arc(a, 0.125 + 1e-12));
  CHECK(a.hi() == 0.125);

  Arc full{0.3, 1.0};
  CHECK(full.full());
  CHECK(point_in_arc(full, 0.0));
  CHECK(point_in_arc(full, 0.29999));

  Arc pt{0.4, 0.0};
  CHECK(point_in_arc(pt, 0.4));
  CHECK_FALSE(point_in_arc(pt, 0.4 + 1e-12));
}

TEST_CASE("arc shift and arc distance") {
  Arc a{0.0, 0.1};
  Arc b = arc_shift(a, 0.2);
  CHECK(b.lo == Catch::Approx(0.2).margin(1e-15));
  CHECK(b.len == 0.1);

  CHECK(arc_distance(a, b) == Catch::Approx(0.1).margin(1e-15));
  CHECK(arc_distance(b, a) == Catch::Approx(0.1).margin(1e-15));
  // overlapping arcs have distance zero
  CHECK(arc_distance(Arc{0.0, 0.3}, Arc{0.2, 0.3}) == 0.0);
  // arcs meeting across the wrap point
  CHECK(arc_distance(Arc{0.9, 0.2}, Arc{0.05, 0.1}) == 0.0);
  CHECK(arc_distance(Arc{0.9, 0.05}, Arc{0.05, 0.1}) == Catch::Approx(0.1).margin(1e-15));
  // anything against the full circle intersects
  CHECK(arc_distance(Arc{0.2, 1.0}, Arc{0.7, 0.01}) == 0.0);
}

TEST_CASE("point-to-arcs distance and membership in unions") {
  std::vector<Arc> arcs{Arc{0.0, 0.1}, Arc{0.5, 0.1}};
  CHECK(point_in_arcs(0.05, arcs));
  CHECK(point_in_arcs(0.55, arcs));
  CHECK_FALSE(point_in_arcs(0.3, arcs));
  CHECK(point_to_arcs_distance(0.3, arcs) == Catch::Approx(0.2).margin(1e-15));
  CHECK(point_to_arcs_distance(0.05, arcs) == 0.0);
  // empty union: capped at the metric diameter
  CHECK(point_to_arcs_distance(0.3, {}) == 0.5);
}

TEST_CASE("smallest enclosing arc of a circular boolean grid") {
  // flags wrap around zero: cells 9, 0, 1 of a 10-grid
  std::vector<char> flags(10, 0);
  flags[9] = flags[0] = flags[1] = 1;
  Arc a = smallest_enclosing_arc_of_grid(flags);
  CHECK(a.lo == Catch::Approx(0.9).margin(1e-15));
  CHECK(a.len == Catch::Approx(0.2).margin(1e-15));

  std::vector<char> one(10, 0);
  one[4] = 1;
  Arc p = smallest_enclosing_arc_of_grid(one);
  CHECK(p.lo == Catch::Approx(0.4).margin(1e-15));
  CHECK(p.len == 0.0);

  std::vector<char> all(10, 1);
  CHECK(smallest_enclosing_arc_of_grid(all).full());

  std::vector<char> none(10, 0);
  CHECK_THROWS_AS(smallest_enclosing_arc_of_grid(none), EmptyRegion);
}

TEST_CASE("arctan family matches closed-form oracles") {
  ArctanMap map{40.0, 0.48714};
  CHECK(map.x_hi() == 1.0);
  CHECK(map.x_lo() == -3.0);
  // f(0, 1) = (2/pi) atan(40) - 2 beta, evaluated independently
  CHECK(map.apply(0.0, 1.0) == Catch::Approx(0.00980782017594839).margin(1e-16));
  CHECK(map.fiber_derivative(0.0, 0.0) == Catch::Approx(25.464790894703256).margin(1e-14));
  CHECK(map.fiber_derivative(0.0, 1.0) == Catch::Approx(0.015905553338353064).margin(1e-17));
  // forcing peaks at theta = 0 with value 2 beta and vanishes at theta = 1/2
  CHECK(map.forcing(0.0) == Catch::Approx(2.0 * 0.48714).margin(1e-15));
  CHECK(map.forcing(0.5) == Catch::Approx(0.0).margin(1e-16));
  CHECK(map.theta_lipschitz_bound() == Catch::Approx(2.0 * kPi * 0.48714).margin(1e-15));
}

TEST_CASE("slope-one point of the unforced fiber map") {
  ArctanMap map{40.0, 0.0};
  double xs = map.x_star();
  CHECK(xs == Catch::Approx(0.12365473832081622).margin(1e-16));
  CHECK(std::fabs(map.fiber_derivative(0.25, xs) - 1.0) < 1e-12);
}

TEST_CASE("fiber inverse round-trips forward values to near machine precision") {
  ArctanMap map{40.0, 0.48714};
  SplitMix64 rng(11);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double theta = rng.next_double();
    double x = -3.0 + 4.0 * rng.next_double();
    double y = map.apply(theta, x);
    double back = map.apply_inverse(theta, y);
    worst = std::max(worst, std::fabs(back - x));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("fiber inverse rejects arguments far outside its domain") {
  ArctanMap map{40.0, 0.6};
  try {
    map.apply_inverse(0.0, 0.0);  // arg = 0 + 0.6*(1+1) = 1.2
    FAIL("expected InverseDomainError");
  } catch (const InverseDomainError& e) {
    CHECK(e.theta == 0.0);
    CHECK(e.y == 0.0);
    CHECK(e.excess == Catch::Approx(0.2).margin(1e-12));
  }
}

TEST_CASE("fiber inverse clamps arguments within the slack band") {
  // forcing(0) = 2 beta = 1 + 5e-10, so arg exceeds 1 by half the slack
  ArctanMap map{40.0, 0.50000000025};
  bool clamped = false;
  double x = map.apply_inverse(0.0, 0.0, &clamped);
  CHECK(clamped);
  CHECK(x > 1e9);  // tan just inside pi/2 is astronomically large
  CHECK(std::isfinite(x));
}

TEST_CASE("forward orbit matches a hand-rolled loop bitwise") {
  ArctanMap map{40.0, 0.3};
  double w = golden_omega();
  auto orbit = iterate(map, w, 0.2, 0.7, 5);
  REQUIRE(orbit.size() == 6);
  CHECK(orbit[0].theta == frac(0.2));
  CHECK(orbit[0].x == 0.7);
  double theta = 0.2, x = 0.7;
  for (int k = 1; k <= 5; ++k) {
    x = map.apply(theta, x);
    theta = frac(theta + w);
    CHECK(orbit[static_cast<std::size_t>(k)].theta == theta);
    CHECK(orbit[static_cast<std::size_t>(k)].x == x);
  }
}

TEST_CASE("backward orbit inverts the forward orbit") {
  ArctanMap map{40.0, 0.3};
  double w = golden_omega();
  auto fwd = iterate(map, w, 0.2, 0.7, 2);
  auto bwd = iterate(map, w, fwd[2].theta, fwd[2].x, -2);
  REQUIRE(bwd.size() == 3);
  CHECK(std::fabs(bwd[2].theta - fwd[0].theta) < 1e-12);
  CHECK(std::fabs(bwd[2].x - fwd[0].x) < 1e-10);
  CHECK(std::fabs(bwd[1].x - fwd[1].x) < 1e-10);
}

TEST_CASE("backward orbit records the failing step index") {
  ArctanMap map{40.0, 0.9};  // strong forcing kills most backward orbits fast
  double w = golden_omega();
  try {
    iterate(map, w, 0.01, 0.5, -20);
    FAIL("expected InverseDomainError");
  } catch (const InverseDomainError& e) {
    CHECK(e.step >= 1);
    CHECK(e.step <= 20);
    CHECK(e.excess > kInverseSlack);
  }
}

TEST_CASE("linear control family is exactly invertible") {
  LinearControlMap lin{0.5, 0.25};
  double y = lin.apply(0.3, 0.8);
  CHECK(y == 0.5 * 0.8 + 0.25 * std::cos(2.0 * kPi * 0.3));
  CHECK(lin.apply_inverse(0.3, y) == Catch::Approx(0.8).margin(1e-15));
  CHECK(lin.fiber_derivative(0.1, -2.0) == 0.5);
  CHECK(lin.theta_lipschitz_bound() == Catch::Approx(2.0 * kPi * 0.25).margin(1e-15));
}

TEST_CASE("domain checks reject excursions outside the phase interval") {
  ArctanMap map{40.0, 0.3};
  CHECK_THROWS_AS(map.apply(0.1, 1.5), DomainError);
  CHECK_THROWS_AS(map.apply(0.1, -3.5), DomainError);
  CHECK_THROWS_AS(map.fiber_derivative(0.1, 2.0), DomainError);
  CHECK_NOTHROW(map.apply(0.1, 1.0));
  CHECK_NOTHROW(map.apply(0.1, -3.0));
}

TEST_CASE("splitmix generator is deterministic and in range") {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  SplitMix64 c(7);
  for (int i = 0; i < 1000; ++i) {
    double u = c.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(c.next_below(10) < 10);
  }
  // distinct seeds diverge immediately
  SplitMix64 d(1), e(2);
  CHECK(d.next() != e.next());
}

TEST_CASE("full-precision formatting round-trips doubles") {
  for (double v : {0.1, golden_omega(), 1e-300, -3.25, 0.48714}) {
    std::string s = format_g17(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("log-space addition agrees with direct sums in range") {
  double a = std::log(3.0), b = std::log(5.0);
  CHECK(log_add_exp(a, b) == Catch::Approx(std::log(8.0)).margin(1e-14));
  CHECK(log_add_exp(a, -std::numeric_limits<double>::infinity()) == a);
  // far outside double range: dominated term wins
  CHECK(log_add_exp(1000.0, 10.0) == Catch::Approx(1000.0).margin(1e-12));
}
