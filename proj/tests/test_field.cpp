#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <random>

#include "bnuk/field.hpp"
#include "oracles.hpp"

using bnuk::GridGeometry;
using bnuk::Index3;
using bnuk::OccupancyGrid;
using bnuk::Vec3;

namespace {

GridGeometry geometry(int nx, int ny, int nz, double res = 0.2, Vec3 origin = Vec3::Zero()) {
  GridGeometry g;
  g.origin = origin;
  g.resolution = res;
  g.dims = Index3(nx, ny, nz);
  return g;
}

OccupancyGrid random_grid(std::mt19937_64& rng, int max_dim, double fill) {
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::bernoulli_distribution occ(fill);
  OccupancyGrid grid(geometry(dim(rng), dim(rng), dim(rng)));
  for (auto& c : grid.cells()) c = occ(rng) ? 1 : 0;
  return grid;
}

}  // namespace

TEST_CASE("geometry indexing") {
  const GridGeometry g = geometry(4, 5, 6, 0.5, Vec3(-1.0, 0.0, 2.0));
  CHECK(g.cell_count() == 120);
  CHECK(g.index_of(Vec3(-1.0, 0.0, 2.0)) == Index3(0, 0, 0));
  CHECK(g.index_of(Vec3(-0.01, 0.49, 2.51)) == Index3(1, 0, 1));
  CHECK(g.index_of(Vec3(-1.01, 0.0, 2.0)) == Index3(-1, 0, 0));
  CHECK(g.center(Index3(1, 2, 3)).isApprox(Vec3(-0.25, 1.25, 3.75)));
  for (std::size_t i = 0; i < g.cell_count(); ++i) CHECK(g.linear(g.unlinear(i)) == i);
  CHECK(g.linear(Index3(1, 0, 0)) == 1);
  CHECK(g.linear(Index3(0, 1, 0)) == 4);
  CHECK(g.linear(Index3(0, 0, 1)) == 20);

  GridGeometry bad = g;
  bad.resolution = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = g;
  bad.dims = Index3(0, 1, 1);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("empty map holds the box diagonal") {
  const GridGeometry g = geometry(10, 7, 3);
  const auto f = bnuk::build_esdf(OccupancyGrid(g));
  for (double v : f.values()) CHECK(v == doctest::Approx(g.diagonal()).epsilon(1e-15));
}

TEST_CASE("fully occupied map is zero everywhere") {
  OccupancyGrid grid(geometry(6, 5, 4));
  for (auto& c : grid.cells()) c = 1;
  const auto f = bnuk::build_esdf(grid);
  for (double v : f.values()) CHECK(v == 0.0);
}

TEST_CASE("single obstacle gives the closed form distance") {
  const GridGeometry g = geometry(9, 8, 7, 0.25);
  OccupancyGrid grid(g);
  const Index3 site(3, 5, 2);
  grid.set_occupied(site);
  const auto f = bnuk::build_esdf(grid);
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const Index3 c = g.unlinear(i);
    const double expected = (c - site).cast<double>().norm() * 0.25;
    CHECK(f.values()[i] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("distance transform matches brute force") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::bernoulli_distribution sparse(0.3);
    const OccupancyGrid grid = random_grid(rng, 32, sparse(rng) ? 0.002 : 0.05 + 0.3 * (trial % 3));
    if (grid.occupied_count() == 0) continue;
    const auto expected = oracle::brute_force_sq(grid);
    const auto got = bnuk::squared_index_distances(grid);
    REQUIRE(got.size() == expected.size());
    bool same = true;
    for (std::size_t i = 0; i < got.size(); ++i) same = same && got[i] == expected[i];
    CHECK(same);
    const auto f = bnuk::build_esdf(grid);
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (f.values()[i] != std::sqrt(static_cast<double>(expected[i])) * grid.geometry().resolution) {
        FAIL("metric distance differs at cell " << i);
      }
    }
  }
}

TEST_CASE("distance field is 1-Lipschitz between neighbors") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const OccupancyGrid grid = random_grid(rng, 24, 0.03);
    if (grid.occupied_count() == 0) continue;
    const auto& g = grid.geometry();
    const auto f = bnuk::build_esdf(grid);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      const Index3 c = g.unlinear(i);
      for (int a = 0; a < 3; ++a) {
        Index3 n = c;
        n[a] += 1;
        if (!g.in_bounds(n)) continue;
        CHECK(std::abs(f.at(c) - f.at(n)) <= g.resolution + 1e-12);
      }
    }
  }
}

TEST_CASE("distance_at lookup conventions") {
  const GridGeometry g = geometry(5, 5, 5, 0.2, Vec3(1.0, 1.0, 0.0));
  OccupancyGrid grid(g);
  grid.set_occupied(Index3(0, 0, 0));
  const auto f = bnuk::build_esdf(grid);
  CHECK(f.distance_at(Vec3(1.05, 1.05, 0.05)) == 0.0);
  CHECK(f.distance_at(Vec3(1.25, 1.05, 0.05)) == doctest::Approx(0.2));
  CHECK(f.distance_at(Vec3(1.99, 1.05, 0.05)) == doctest::Approx(0.8));
  CHECK(f.distance_at(Vec3(0.99, 1.5, 0.5)) == 0.0);
  CHECK(f.distance_at(Vec3(2.0, 1.5, 0.5)) == 0.0);
  CHECK(f.distance_at(Vec3(NAN, 1.5, 0.5)) == 0.0);
}

TEST_CASE("mark_point and content hash") {
  const GridGeometry g = geometry(4, 4, 4);
  OccupancyGrid a(g), b(g);
  CHECK(a.content_hash() == b.content_hash());
  CHECK(a.mark_point(Vec3(0.3, 0.1, 0.1)));
  CHECK_FALSE(a.mark_point(Vec3(5.0, 0.1, 0.1)));
  CHECK(a.occupied(Index3(1, 0, 0)));
  CHECK(a.occupied_count() == 1);
  CHECK(a.content_hash() != b.content_hash());
  b.set_occupied(Index3(1, 0, 0));
  CHECK(a == b);
  CHECK(a.content_hash() == b.content_hash());
}

TEST_CASE("step length") {
  const bnuk::StepParams p{0.4, 1.6, 0.5};
  CHECK(bnuk::step_length(0.3, p) == 0.0);
  CHECK(bnuk::step_length(0.4, p) == 0.0);
  CHECK(bnuk::step_length(0.9, p) == doctest::Approx(0.5));
  CHECK(bnuk::step_length(5.0, p) == doctest::Approx(0.8));
  CHECK(bnuk::step_length(1.2, p) == doctest::Approx(0.8));

  double prev = 0.0;
  for (int i = 0; i <= 3000; ++i) {
    const double d = i * 1e-3;
    const double s = bnuk::step_length(d, p);
    CHECK(s >= prev);
    CHECK(s - prev <= 1e-3 + 1e-12);
    CHECK(s <= std::max(0.0, d - p.tau) + 1e-15);
    CHECK(s <= p.v_max * p.dt);
    prev = s;
  }
  CHECK_THROWS_AS((bnuk::StepParams{-0.1, 1.6, 0.5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((bnuk::StepParams{0.4, 1.6, 0.0}.validate()), std::invalid_argument);
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("esdf build time on a 100x100x20 grid") {
  std::mt19937_64 rng(3);
  OccupancyGrid grid(geometry(100, 100, 20));
  std::bernoulli_distribution occ(0.06);
  for (auto& c : grid.cells()) c = occ(rng) ? 1 : 0;
  double best = 1e9;
  for (int i = 0; i < 3; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto f = bnuk::build_esdf(grid);
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    CHECK(f.values().size() == grid.cells().size());
  }
  MESSAGE("esdf build " << best << " ms");
  CHECK(best < 200.0);
}
