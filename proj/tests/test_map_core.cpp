#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "imlab/map_core.hpp"
#include "imlab/rng.hpp"
#include "imlab/stats.hpp"

using namespace imlab;

TEST_CASE("map_eval on pinned points") {
  const MapModel m(1.0);
  CHECK(map_eval(m, 0.0) == 0.0);
  CHECK(map_eval(m, 0.25) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(map_eval(m, 0.75) == doctest::Approx(0.5).epsilon(1e-15));
  for (double alpha : {0.1, 0.3, 0.77}) {
    const MapModel ma(alpha);
    CHECK(map_eval(ma, 0.5 - 1e-13) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(map_eval(ma, 1.0) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(map_eval(m, -0.1), std::domain_error);
  CHECK_THROWS_AS(map_eval(m, 1.1), std::domain_error);
}

TEST_CASE("map_derivative on pinned points and the floor at one") {
  const MapModel m(1.0);
  CHECK(map_derivative(m, 0.0) == doctest::Approx(1.0));
  CHECK(map_derivative(m, 0.25) == doctest::Approx(2.0).epsilon(1e-15));
  for (double alpha : {0.2, 0.6}) {
    const MapModel ma(alpha);
    CHECK(map_derivative(ma, 0.9) == doctest::Approx(2.0));
    RngStream rng(3);
    for (int i = 0; i < 2000; ++i) {
      const double x = rng.next_double();
      CHECK(map_derivative(ma, x) >= 1.0);
      CHECK(map_eval(ma, x) >= 0.0);
      CHECK(map_eval(ma, x) <= 1.0);
    }
  }
}

TEST_CASE("branch monotonicity") {
  const MapModel m(0.3);
  RngStream rng(11);
  for (int i = 0; i < 5000; ++i) {
    double x = rng.next_double(), y = rng.next_double();
    if (x > y) std::swap(x, y);
    const bool same_branch = (y < 0.5) || (x >= 0.5);
    if (same_branch && x < y) CHECK(map_eval(m, x) < map_eval(m, y));
  }
}

TEST_CASE("inverse_branch: closed-form oracle at alpha = 1") {
  const MapModel m(1.0);
  // Left preimage of 1/2 solves 2 z^2 + z - 1/2 = 0.
  const double oracle = (std::sqrt(5.0) - 1.0) / 4.0;
  CHECK(inverse_branch(m, 0.5, Branch::left) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(inverse_branch(m, 0.0, Branch::left) == 0.0);
  CHECK(inverse_branch(m, 0.0, Branch::right) == doctest::Approx(0.5));
}

TEST_CASE("inverse_branch round trips on a dense grid, both branches") {
  for (double alpha : {0.1, 0.3, 0.9}) {
    const MapModel m(alpha);
    for (int i = 0; i < 10000; ++i) {
      // y < 1: the left branch [0, 1/2) is onto [0, 1) only.
      const double y = static_cast<double>(i) / 10000.0;
      const double zl = inverse_branch(m, y, Branch::left);
      CHECK(zl >= 0.0);
      CHECK(zl < 0.5);
      CHECK(std::abs(map_eval(m, zl) - y) <= 1e-12);
    }
    for (int i = 0; i <= 10000; ++i) {
      const double y = static_cast<double>(i) / 10000.0;
      const double zr = inverse_branch(m, y, Branch::right);
      CHECK(zr >= 0.5);
      CHECK(std::abs(map_eval(m, zr) - y) <= 1e-12);
    }
  }
}

TEST_CASE("build_partition: pinned points and the recursion") {
  const MapModel m(1.0);
  const MarkovPartition p = build_partition(m, 24);
  CHECK(p.points[0] == 1.0);
  CHECK(p.points[1] == 0.5);
  const double x2 = (std::sqrt(5.0) - 1.0) / 4.0;
  const double x3 = (-1.0 + std::sqrt(2.0 * std::sqrt(5.0) - 1.0)) / 4.0;
  CHECK(p.points[2] == doctest::Approx(x2).epsilon(1e-10));
  CHECK(p.points[3] == doctest::Approx(x3).epsilon(1e-10));

  for (double alpha : {0.1, 0.3}) {
    const MapModel ma(alpha);
    const MarkovPartition pa = build_partition(ma, 400);
    for (std::size_t l = 2; l <= pa.depth(); ++l)
      CHECK(std::abs(map_eval(ma, pa.points[l]) - pa.points[l - 1]) <= 1e-12);
    for (std::size_t l = 1; l <= pa.depth(); ++l)
      CHECK(pa.points[l] < pa.points[l - 1]);
  }
}

TEST_CASE("partition asymptotics match the power laws") {
  for (double alpha : {0.1, 0.3}) {
    const MapModel m(alpha);
    const MarkovPartition p = build_partition(m, 10001);
    std::vector<double> ls, xs, ws;
    for (std::size_t l = 100; l <= 10000; ++l) {
      ls.push_back(static_cast<double>(l));
      xs.push_back(p.points[l]);
      ws.push_back(p.atom_width(l));
    }
    const double slope_x = power_law_fit(ls, xs).slope;
    const double slope_w = power_law_fit(ls, ws).slope;
    CHECK(std::abs(slope_x - (-1.0 / alpha)) <= 0.03 / alpha);
    CHECK(std::abs(slope_w - (-1.0 / alpha - 1.0)) <= 0.05 * (1.0 / alpha + 1.0));
  }
}

TEST_CASE("orbits: fixed points and the boundary convention") {
  const MapModel m(1.0);
  const OrbitSegment zero = iterate_orbit(m, 0.0, 5);
  for (double v : zero.values) CHECK(v == 0.0);

  // Right branch at the boundary point: T(1/2) = 0, T(1) = 1.
  const OrbitSegment seg = iterate_orbit(m, 0.75, 3);
  CHECK(seg.values[0] == doctest::Approx(0.75));
  CHECK(seg.values[1] == doctest::Approx(0.5));
  CHECK(seg.values[2] == doctest::Approx(0.0));
  const OrbitSegment one = iterate_orbit(m, 1.0, 2);
  CHECK(one.values[0] == 1.0);
  CHECK(one.values[1] == 1.0);
}

TEST_CASE("distortion ratio check: finite, populated, stable") {
  const MapModel m(0.3);
  const MarkovPartition p = build_partition(m, 130);
  const DistortionReport r = distortion_ratio_check(m, p, 12, 2000, 99);
  REQUIRE(static_cast<int>(r.c1.size()) == 12);
  for (int i = 0; i < 12; ++i) {
    CHECK(r.pair_count[i] > 100);
    CHECK(r.c1[i] > 0.0);
    CHECK(std::isfinite(r.c1[i]));
    CHECK(r.c2[i] > 0.0);
    CHECK(std::isfinite(r.c2[i]));
  }
  // Deterministic given the seed.
  const DistortionReport r2 = distortion_ratio_check(m, p, 12, 2000, 99);
  CHECK(r.c1 == r2.c1);
  CHECK(r.c2 == r2.c2);
}

TEST_CASE("alpha domain of the model") {
  CHECK_THROWS_AS(MapModel(0.0), std::invalid_argument);
  CHECK_THROWS_AS(MapModel(1.5), std::invalid_argument);
  CHECK_NOTHROW(MapModel(1.0));
  CHECK_NOTHROW(MapModel(0.05));
}
