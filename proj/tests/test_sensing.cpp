#include <doctest.h>

#include <algorithm>
#include <climits>
#include <set>

#include "fieldst/rng.hpp"
#include "fieldst/sensing.hpp"
#include "oracles.hpp"

using namespace fieldst;

TEST_SUITE("sensing") {

TEST_CASE("uniform-random with count == cells selects every cell exactly once") {
  const GridDims grid{6, 7};
  const auto layout = place_sensors(grid, 42, PlacementStrategy::uniform_random, 3);
  std::set<std::pair<int, int>> seen(layout.positions.begin(), layout.positions.end());
  CHECK(seen.size() == 42);
}

TEST_CASE("stratified-jitter puts one sensor in each 16x16 block for 16 on 64x64") {
  const auto layout = place_sensors({64, 64}, 16, PlacementStrategy::stratified_jitter, 11);
  REQUIRE(layout.count() == 16);
  for (int k = 0; k < 16; ++k) {
    const auto [r, c] = layout.positions[static_cast<size_t>(k)];
    const int bi = k / 4, bj = k % 4;
    CHECK(r >= bi * 16);
    CHECK(r < (bi + 1) * 16);
    CHECK(c >= bj * 16);
    CHECK(c < (bj + 1) * 16);
  }
}

TEST_CASE("placement is deterministic per strategy and seed") {
  for (auto strategy :
       {PlacementStrategy::stratified_jitter, PlacementStrategy::uniform_random}) {
    const auto a = place_sensors({32, 48}, 9, strategy, 77);
    const auto b = place_sensors({32, 48}, 9, strategy, 77);
    const auto c = place_sensors({32, 48}, 9, strategy, 78);
    CHECK(a.positions == b.positions);
    CHECK(a.positions != c.positions);
  }
}

TEST_CASE("positions are distinct and in bounds for both strategies") {
  for (auto strategy :
       {PlacementStrategy::stratified_jitter, PlacementStrategy::uniform_random}) {
    for (uint64_t seed = 0; seed < 50; ++seed) {
      const auto layout = place_sensors({15, 9}, 12, strategy, seed);
      std::set<std::pair<int, int>> seen;
      for (const auto& [r, c] : layout.positions) {
        CHECK(r >= 0);
        CHECK(r < 15);
        CHECK(c >= 0);
        CHECK(c < 9);
        seen.insert({r, c});
      }
      CHECK(seen.size() == layout.positions.size());
    }
  }
}

TEST_CASE("sensor count beyond the grid is rejected") {
  CHECK_THROWS_AS(place_sensors({4, 4}, 17, PlacementStrategy::uniform_random, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(place_sensors({4, 4}, 0, PlacementStrategy::uniform_random, 1),
                  std::invalid_argument);
}

TEST_CASE("strategy names round-trip") {
  CHECK(placement_strategy_from_string("stratified-jitter") ==
        PlacementStrategy::stratified_jitter);
  CHECK(placement_strategy_from_string("uniform-random") == PlacementStrategy::uniform_random);
  CHECK_THROWS_AS(placement_strategy_from_string("hexagonal"), std::invalid_argument);
}

TEST_CASE("observe reads the field at each sensor") {
  Field constant({5, 5}, 2.5);
  const auto layout = place_sensors({5, 5}, 6, PlacementStrategy::uniform_random, 9);
  for (double v : observe(constant, layout)) CHECK(v == 2.5);

  SensorLayout corner{{5, 5}, {{0, 0}}};
  Field f({5, 5}, 0.0);
  f.at(0, 0) = -3.25;
  const auto obs = observe(f, corner);
  REQUIRE(obs.size() == 1);
  CHECK(obs[0] == -3.25);
}

TEST_CASE("observe matches direct indexing on random fields") {
  Rng rng(15);
  Field f({12, 10});
  for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
  const auto layout = place_sensors({12, 10}, 20, PlacementStrategy::uniform_random, 4);
  const auto obs = observe(f, layout);
  for (int k = 0; k < layout.count(); ++k) {
    const auto [r, c] = layout.positions[static_cast<size_t>(k)];
    CHECK(obs[static_cast<size_t>(k)] == f.values[static_cast<size_t>(r) * 10 + c]);
  }
}

TEST_CASE("observe rejects a grid mismatch") {
  Field f({5, 5}, 0.0);
  SensorLayout other{{6, 5}, {{0, 0}}};
  CHECK_THROWS_AS(observe(f, other), std::invalid_argument);
}

TEST_CASE("single sensor floods the whole field") {
  SensorLayout layout{{7, 9}, {{3, 4}}};
  const Field f = voronoi_encode(Observation{1.75}, layout);
  for (double v : f.values) CHECK(v == 1.75);
}

TEST_CASE("two sensors on a 1x10 strip split at the midpoint") {
  SensorLayout layout{{1, 10}, {{0, 0}, {0, 9}}};
  const Field f = voronoi_encode(Observation{1.0, 2.0}, layout);
  for (int c = 0; c <= 4; ++c) CHECK(f.at(0, c) == 1.0);
  for (int c = 5; c <= 9; ++c) CHECK(f.at(0, c) == 2.0);
}

TEST_CASE("assignment matches the brute-force oracle on 100 random layouts") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const GridDims grid{rng.uniform_int(2, 24), rng.uniform_int(2, 24)};
    const int count = rng.uniform_int(1, std::min(10, grid.cells()));
    const auto layout =
        place_sensors(grid, count, PlacementStrategy::uniform_random, rng.next_u64());
    const auto got = voronoi_assignment(layout);
    const auto want = oracle::brute_force_voronoi(layout);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
  }
}

TEST_CASE("sensor cells are fixed points: observe(encode(obs)) == obs") {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const auto layout =
        place_sensors({9, 13}, rng.uniform_int(1, 12), PlacementStrategy::uniform_random,
                      rng.next_u64());
    Observation obs(static_cast<size_t>(layout.count()));
    for (auto& v : obs) v = rng.uniform(-3.0, 3.0);
    const Field f = voronoi_encode(obs, layout);
    CHECK(observe(f, layout) == obs);
  }
}

TEST_CASE("permuting sensors only changes cells where the tie-break applies") {
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const auto layout =
        place_sensors({8, 8}, 5, PlacementStrategy::uniform_random, rng.next_u64());
    Observation obs(5);
    for (auto& v : obs) v = rng.uniform(0.0, 1.0);

    SensorLayout reversed = layout;
    std::reverse(reversed.positions.begin(), reversed.positions.end());
    Observation obs_reversed(obs.rbegin(), obs.rend());

    const Field a = voronoi_encode(obs, layout);
    const Field b = voronoi_encode(obs_reversed, reversed);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        // A cell may differ only if two sensors tie for the minimum distance.
        long best = LONG_MAX;
        int at_best = 0;
        for (const auto& [sr, sc] : layout.positions) {
          const long d2 = static_cast<long>(r - sr) * (r - sr) +
                          static_cast<long>(c - sc) * (c - sc);
          if (d2 < best) {
            best = d2;
            at_best = 1;
          } else if (d2 == best) {
            ++at_best;
          }
        }
        if (at_best == 1) CHECK(a.at(r, c) == b.at(r, c));
      }
    }
  }
}

TEST_CASE("voronoi rejects an empty layout and mismatched observations") {
  SensorLayout empty{{4, 4}, {}};
  CHECK_THROWS_AS(voronoi_encode(Observation{}, empty), std::invalid_argument);
  SensorLayout one{{4, 4}, {{1, 1}}};
  CHECK_THROWS_AS(voronoi_encode(Observation{1.0, 2.0}, one), std::invalid_argument);
}

}  // TEST_SUITE
