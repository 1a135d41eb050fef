// Box counting, dyadic ladders, pointwise and information dimension
// estimators, and the masked-Lipschitz report, exercised on synthetic clouds
// with known dimensions.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "snalab/boundary_lines.hpp"
#include "snalab/dimension.hpp"

using namespace snalab;

namespace {

// index of the cloud point closest to (theta, x) in the sup metric
std::int64_t nearest_index(const PointCloud& cloud, double theta, double x) {
  std::int64_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < cloud.size(); ++i) {
    double d = std::max(torus_distance(cloud.theta[static_cast<std::size_t>(i)], theta),
                        std::fabs(cloud.x[static_cast<std::size_t>(i)] - x));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("box count on degenerate clouds") {
  PointCloud single;
  single.theta = {0.3};
  single.x = {0.7};
  CHECK(box_count(single, 0.25) == 1);
  CHECK(box_count(single, 1.0) == 1);

  PointCloud two;
  two.theta = {0.1, 0.6};
  two.x = {0.2, 0.8};
  CHECK(box_count(two, 0.25) == 2);

  CHECK_THROWS_AS(box_count(single, 0.0), ConfigError);
  CHECK_THROWS_AS(box_count(single, 1.5), ConfigError);
}

TEST_CASE("box count saturates on a dense square and at most quadruples per halving") {
  PointCloud square = make_square_cloud(100000, 9);
  CHECK(box_count(square, 1.0 / 16.0) == 256);  // every box is hit
  std::int64_t prev = box_count(square, 1.0 / 8.0);
  for (double eps : {1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0}) {
    std::int64_t cur = box_count(square, eps);
    CHECK(cur <= 4 * prev);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("dyadic ladder construction and its failure modes") {
  std::vector<double> ladder = make_dyadic_ladder(0.125, 1.0 / 256.0);
  REQUIRE(ladder.size() == 6);
  CHECK(ladder.front() == 0.125);
  CHECK(ladder.back() == 1.0 / 256.0);
  for (std::size_t i = 1; i < ladder.size(); ++i) CHECK(ladder[i] == 0.5 * ladder[i - 1]);

  CHECK_THROWS_AS(make_dyadic_ladder(1.0 / 16.0, 1.0 / 64.0), InsufficientScales);
  CHECK_THROWS_AS(make_dyadic_ladder(0.5, 0.5), ConfigError);
  CHECK_THROWS_AS(make_dyadic_ladder(2.0, 0.01), ConfigError);
  CHECK_THROWS_AS(make_dyadic_ladder(0.5, 0.0), ConfigError);
}

TEST_CASE("box dimension of a filled square is two") {
  PointCloud square = make_square_cloud(200000, 4);
  DimensionFit fit = box_dimension(square, 1.0 / 8.0, 1.0 / 256.0);
  CHECK(fit.slope == Catch::Approx(2.0).margin(0.05));
  CHECK(fit.r_squared > 0.999);
  CHECK_FALSE(fit.inconclusive);
  // the finest rung is saturated (count > n/4) and gets trimmed
  CHECK(fit.trimmed_saturated == 1);
  CHECK(fit.trimmed_coarse == 0);
  CHECK(fit.ladder.size() == 6);
  CHECK(fit.raw.size() == 6);
  CHECK(fit.scales.size() == 5);
}

TEST_CASE("box dimension of a smooth graph is one") {
  PointCloud sine = make_sine_cloud(1 << 16);
  DimensionFit fit = box_dimension(sine, 1.0 / 16.0, 1.0 / 1024.0);
  CHECK(fit.slope == Catch::Approx(1.0).margin(0.08));
  CHECK_FALSE(fit.inconclusive);
}

TEST_CASE("box dimension refuses clouds that never resolve") {
  PointCloud tiny = make_square_cloud(8, 3);
  CHECK_THROWS_AS(box_dimension(tiny, 1.0 / 8.0, 1.0 / 256.0), InsufficientScales);
}

TEST_CASE("pointwise dimension distinguishes a segment from an area") {
  PointCloud segment = make_segment_cloud(20001);
  std::int64_t mid = nearest_index(segment, 0.4, 0.5);
  DimensionFit seg_fit = pointwise_dimension(segment, mid, 1.0 / 8.0, 1.0 / 256.0);
  CHECK(seg_fit.slope == Catch::Approx(1.0).margin(0.1));

  PointCloud square = make_square_cloud(200000, 11);
  std::int64_t center = nearest_index(square, 0.5, 0.5);
  DimensionFit sq_fit = pointwise_dimension(square, center, 1.0 / 8.0, 1.0 / 128.0);
  CHECK(sq_fit.slope == Catch::Approx(2.0).margin(0.12));

  CHECK_THROWS_AS(pointwise_dimension(segment, -1, 1.0 / 8.0, 1.0 / 256.0), ConfigError);
  CHECK_THROWS_AS(pointwise_dimension(segment, segment.size(), 1.0 / 8.0, 1.0 / 256.0),
                  ConfigError);
}

TEST_CASE("information dimension of an atom is exactly zero") {
  PointCloud atom = make_atom_cloud(10000);
  DimensionFit fit = information_dimension(atom, 64, 1.0 / 8.0, 1.0 / 256.0, 2024);
  CHECK(fit.slope == 0.0);      // every ball holds the whole cloud: ln mu = 0
  CHECK(fit.r_squared == 1.0);  // flat data fits itself by convention
  CHECK_FALSE(fit.inconclusive);
}

TEST_CASE("information dimension of a filled square is two") {
  PointCloud square = make_square_cloud(100000, 5);
  DimensionFit fit = information_dimension(square, 128, 1.0 / 8.0, 1.0 / 128.0, 321);
  CHECK(fit.slope > 1.85);
  CHECK(fit.slope < 2.15);
  CHECK_FALSE(fit.inconclusive);
}

TEST_CASE("information dimension is deterministic for a fixed seed") {
  PointCloud square = make_square_cloud(20000, 6);
  DimensionFit a = information_dimension(square, 64, 1.0 / 8.0, 1.0 / 128.0, 9);
  DimensionFit b = information_dimension(square, 64, 1.0 / 8.0, 1.0 / 128.0, 9);
  CHECK(a.slope == b.slope);
  CHECK(a.r_squared == b.r_squared);
  DimensionFit c = information_dimension(square, 64, 1.0 / 8.0, 1.0 / 128.0, 10);
  CHECK(a.slope != c.slope);  // different centers, different averages
  CHECK(information_dimension(square, 64, 1.0 / 8.0, 1.0 / 128.0, 9, 1).slope == a.slope);
}

TEST_CASE("information dimension validates its inputs") {
  PointCloud square = make_square_cloud(100, 2);
  CHECK_THROWS_AS(information_dimension(square, 0, 1.0 / 8.0, 1.0 / 256.0, 1), ConfigError);
  PointCloud empty;
  CHECK_THROWS_AS(information_dimension(empty, 4, 1.0 / 8.0, 1.0 / 256.0, 1), ConfigError);
}

TEST_CASE("orbit and graph clouds carry their provenance") {
  ArctanMap map{40.0, 0.3};
  double w = golden_omega();
  PointCloud orbit = orbit_cloud(map, w, 0.0, 1.0, 500, 100);
  CHECK(orbit.size() == 500);
  CHECK(orbit.tag == "orbit");
  for (double x : orbit.x) {
    CHECK(x <= 1.0);
    CHECK(x >= -3.0);
  }

  CurveSample up = upper_line(map, w, 3, 64);
  PointCloud graph = graph_cloud(up);
  CHECK(graph.size() == 64);
  CHECK(graph.tag == "upper_graph");
  CHECK(graph.theta[16] == 0.25);
  CHECK(graph.x == up.values);
}

TEST_CASE("masked slope report pairs curves with bounds and flags degenerate masks") {
  CurveSample c;
  c.m = 8;
  c.n = 2;
  c.values.resize(8);
  for (std::int64_t i = 0; i < 8; ++i)
    c.values[static_cast<std::size_t>(i)] = static_cast<double>(i) / 8.0;

  std::vector<CurveSample> curves{c, c};
  std::vector<std::vector<char>> masks{std::vector<char>(8, 1), std::vector<char>(8, 0)};
  masks[1][3] = 1;  // single retained point: no slope measurable
  std::vector<double> log_bounds{std::log(10.0), std::log(10.0)};
  std::vector<std::int64_t> labels{0, 1};
  std::vector<double> union_bounds{0.1, 0.2};

  auto rows = lipschitz_decomposition_report(curves, masks, log_bounds, labels, union_bounds);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].label == 0);
  CHECK(rows[0].n == 2);
  CHECK(rows[0].empirical == Catch::Approx(7.0).margin(1e-12));
  CHECK(rows[0].within_bound);  // ln 7 < ln 10
  CHECK(rows[0].mask_kept == 8);
  CHECK(rows[0].mask_measure == 1.0);
  CHECK(rows[0].union_bound == 0.1);
  CHECK_FALSE(rows[0].vacuous);
  CHECK(rows[1].vacuous);
  CHECK(rows[1].mask_kept == 1);

  masks.pop_back();
  CHECK_THROWS_AS(lipschitz_decomposition_report(curves, masks, log_bounds, labels, union_bounds),
                  MismatchError);
}
