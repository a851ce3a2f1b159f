#include <doctest.h>

#include <cmath>

#include "fieldst/heat.hpp"
#include "fieldst/rng.hpp"
#include "oracles.hpp"

using namespace fieldst;

TEST_SUITE("heat") {

TEST_CASE("zero sources give the boundary value exactly") {
  SourceLayout layout;
  layout.grid = {16, 12};
  layout.boundary_value = 0.3;
  SolveStats stats;
  const Field t = solve_steady_heat(layout, 1e-8, &stats);
  for (double v : t.values) CHECK(v == 0.3);
  CHECK(stats.iterations == 0);
  CHECK(heat_relative_residual(t, layout) == 0.0);
}

TEST_CASE("9x9 single centered source matches the dense direct solve") {
  SourceLayout layout;
  layout.grid = {9, 9};
  layout.sources = {{4, 4, 4, 4, 1.0}};
  const Field cg = solve_steady_heat(layout, 1e-12);
  const Field direct = oracle::dense_poisson_solve(layout);
  for (size_t i = 0; i < cg.values.size(); ++i)
    CHECK(std::abs(cg.values[i] - direct.values[i]) <= 1e-9);
}

TEST_CASE("random small layouts match the dense direct solve") {
  Rng rng(71);
  for (int trial = 0; trial < 5; ++trial) {
    GenConfig gen;
    gen.grid = {rng.uniform_int(5, 10), rng.uniform_int(5, 10)};
    gen.min_sources = 1;
    gen.max_sources = 3;
    gen.boundary_value = rng.uniform(-0.5, 0.5);
    const auto layout = sample_source_layout(rng.next_u64(), gen);
    const Field cg = solve_steady_heat(layout, 1e-12);
    const Field direct = oracle::dense_poisson_solve(layout);
    for (size_t i = 0; i < cg.values.size(); ++i)
      CHECK(std::abs(cg.values[i] - direct.values[i]) <= 1e-9);
  }
}

TEST_CASE("mirror-symmetric layout yields a mirror-symmetric field") {
  SourceLayout layout;
  layout.grid = {17, 20};
  // Two sources placed symmetrically about the vertical axis.
  layout.sources = {{5, 3, 7, 5, 1.25}, {5, 14, 7, 16, 1.25}};
  const Field t = solve_steady_heat(layout, 1e-12);
  for (int r = 0; r < 17; ++r)
    for (int c = 0; c < 20; ++c)
      CHECK(std::abs(t.at(r, c) - t.at(r, 19 - c)) <= 1e-9);
}

TEST_CASE("discrete maximum principle on random layouts") {
  GenConfig gen;
  gen.grid = {24, 24};
  gen.boundary_value = 0.1;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto layout = sample_source_layout(seed, gen);
    const Field t = solve_steady_heat(layout, 1e-10);
    for (int r = 1; r < 23; ++r)
      for (int c = 1; c < 23; ++c) CHECK(t.at(r, c) >= gen.boundary_value - 1e-9);
  }
}

TEST_CASE("solution is linear in the source intensities") {
  GenConfig gen;
  gen.grid = {20, 20};
  const auto layout = sample_source_layout(5, gen);
  SourceLayout doubled = layout;
  for (auto& s : doubled.sources) s.intensity *= 2.0;
  const Field base = solve_steady_heat(layout, 1e-10);
  const Field twice = solve_steady_heat(doubled, 1e-10);
  for (size_t i = 0; i < base.values.size(); ++i)
    CHECK(twice.values[i] == doctest::Approx(2.0 * base.values[i]).epsilon(1e-10));
}

TEST_CASE("emitted fields satisfy the residual post-condition") {
  GenConfig gen;
  for (uint64_t seed = 100; seed < 110; ++seed) {
    const auto layout = sample_source_layout(seed, gen);
    SolveStats stats;
    const Field t = solve_steady_heat(layout, 1e-8, &stats);
    const double residual = heat_relative_residual(t, layout);
    CHECK(residual <= 1e-8);
    CHECK(stats.relative_residual <= 1e-8);
  }
}

TEST_CASE("an unreachable iteration cap raises a solver error with the residual") {
  GenConfig gen;
  gen.grid = {32, 32};
  const auto layout = sample_source_layout(8, gen);
  try {
    solve_steady_heat(layout, 1e-12, nullptr, 2);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.relative_residual > 1e-12);
  }
}

TEST_CASE("solver rejects bad arguments") {
  SourceLayout layout;
  layout.grid = {8, 8};
  CHECK_THROWS_AS(solve_steady_heat(layout, 0.0), std::invalid_argument);
  layout.grid = {2, 8};
  CHECK_THROWS_AS(solve_steady_heat(layout, 1e-8), std::invalid_argument);
}

TEST_CASE("source layouts are deterministic per seed") {
  GenConfig gen;
  const auto a = sample_source_layout(12345, gen);
  const auto b = sample_source_layout(12345, gen);
  REQUIRE(a.sources.size() == b.sources.size());
  for (size_t i = 0; i < a.sources.size(); ++i) {
    CHECK(a.sources[i].row0 == b.sources[i].row0);
    CHECK(a.sources[i].col1 == b.sources[i].col1);
    CHECK(a.sources[i].intensity == b.sources[i].intensity);
  }
  const auto c = sample_source_layout(12346, gen);
  const bool differs = a.sources.size() != c.sources.size() ||
                       a.sources[0].row0 != c.sources[0].row0 ||
                       a.sources[0].intensity != c.sources[0].intensity;
  CHECK(differs);
}

TEST_CASE("a pinned source-count range is honored") {
  GenConfig gen;
  gen.min_sources = 2;
  gen.max_sources = 2;
  for (uint64_t seed = 0; seed < 10; ++seed)
    CHECK(sample_source_layout(seed, gen).sources.size() == 2);
}

TEST_CASE("sampled rectangles stay in bounds over many seeds") {
  GenConfig gen;
  gen.grid = {11, 64};
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    const auto layout = sample_source_layout(seed, gen);
    CHECK(layout.sources.size() >= 2);
    CHECK(layout.sources.size() <= 6);
    for (const auto& s : layout.sources) {
      CHECK(s.row0 >= 1);
      CHECK(s.col0 >= 1);
      CHECK(s.row1 <= gen.grid.h - 2);
      CHECK(s.col1 <= gen.grid.w - 2);
      CHECK(s.row0 <= s.row1);
      CHECK(s.col0 <= s.col1);
      CHECK(s.intensity >= gen.min_intensity);
      CHECK(s.intensity <= gen.max_intensity);
    }
  }
}

TEST_CASE("degenerate grids are rejected") {
  GenConfig gen;
  gen.grid = {2, 5};
  CHECK_THROWS_AS(sample_source_layout(1, gen), std::invalid_argument);
}

}  // TEST_SUITE
