#include "fieldst/sensing.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fieldst/rng.hpp"

namespace fieldst {

PlacementStrategy placement_strategy_from_string(std::string_view name) {
  if (name == "stratified-jitter") return PlacementStrategy::stratified_jitter;
  if (name == "uniform-random") return PlacementStrategy::uniform_random;
  throw std::invalid_argument("unknown placement strategy: " + std::string(name));
}

std::string to_string(PlacementStrategy strategy) {
  switch (strategy) {
    case PlacementStrategy::stratified_jitter: return "stratified-jitter";
    case PlacementStrategy::uniform_random: return "uniform-random";
  }
  return "?";
}

namespace {

SensorLayout place_stratified(GridDims grid, int count, Rng& rng) {
  // Near-square block partition with at least `count` blocks, one sensor
  // jittered inside each of the first `count` blocks (row-major).
  int block_rows = std::max(
      1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(count) * grid.h / grid.w))));
  block_rows = std::min(block_rows, grid.h);
  int block_cols = (count + block_rows - 1) / block_rows;
  if (block_cols > grid.w) {
    block_cols = grid.w;
    block_rows = (count + block_cols - 1) / block_cols;
  }
  SensorLayout layout{grid, {}};
  layout.positions.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    const int bi = k / block_cols;
    const int bj = k % block_cols;
    const int r0 = bi * grid.h / block_rows;
    const int r1 = (bi + 1) * grid.h / block_rows;
    const int c0 = bj * grid.w / block_cols;
    const int c1 = (bj + 1) * grid.w / block_cols;
    const int r = r0 + static_cast<int>(rng.bounded(static_cast<uint64_t>(r1 - r0)));
    const int c = c0 + static_cast<int>(rng.bounded(static_cast<uint64_t>(c1 - c0)));
    layout.positions.emplace_back(r, c);
  }
  return layout;
}

SensorLayout place_uniform(GridDims grid, int count, Rng& rng) {
  std::vector<int> cells(static_cast<size_t>(grid.cells()));
  std::iota(cells.begin(), cells.end(), 0);
  SensorLayout layout{grid, {}};
  layout.positions.reserve(static_cast<size_t>(count));
  // Partial Fisher-Yates: draw `count` distinct cells.
  for (int i = 0; i < count; ++i) {
    const size_t j =
        static_cast<size_t>(i) + rng.bounded(static_cast<uint64_t>(grid.cells() - i));
    std::swap(cells[static_cast<size_t>(i)], cells[j]);
    layout.positions.emplace_back(cells[static_cast<size_t>(i)] / grid.w,
                                  cells[static_cast<size_t>(i)] % grid.w);
  }
  return layout;
}

}  // namespace

SensorLayout place_sensors(GridDims grid, int count, PlacementStrategy strategy,
                           uint64_t seed) {
  if (grid.h < 1 || grid.w < 1) throw std::invalid_argument("grid must be positive");
  if (count < 1) throw std::invalid_argument("sensor count must be >= 1");
  if (count > grid.cells())
    throw std::invalid_argument("sensor count exceeds grid cells");
  Rng rng(mix_seed(mix_seed(seed, "place-sensors"), fnv1a(to_string(strategy))));
  return strategy == PlacementStrategy::stratified_jitter ? place_stratified(grid, count, rng)
                                                          : place_uniform(grid, count, rng);
}

Observation observe(const Field& field, const SensorLayout& layout) {
  if (!(field.grid == layout.grid))
    throw std::invalid_argument("field and sensor layout grids differ");
  Observation values;
  values.reserve(layout.positions.size());
  for (const auto& [r, c] : layout.positions) values.push_back(field.at(r, c));
  return values;
}

std::vector<int32_t> voronoi_assignment(const SensorLayout& layout) {
  if (layout.positions.empty()) throw std::invalid_argument("sensor layout is empty");
  const int h = layout.grid.h, w = layout.grid.w;
  std::vector<int32_t> assign(static_cast<size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      int64_t best = INT64_MAX;
      int32_t best_idx = 0;
      for (size_t s = 0; s < layout.positions.size(); ++s) {
        const int64_t dr = r - layout.positions[s].first;
        const int64_t dc = c - layout.positions[s].second;
        const int64_t d2 = dr * dr + dc * dc;
        if (d2 < best) {  // strict: ties keep the lowest sensor index
          best = d2;
          best_idx = static_cast<int32_t>(s);
        }
      }
      assign[static_cast<size_t>(r) * w + c] = best_idx;
    }
  }
  return assign;
}

Field voronoi_encode(const Observation& obs, const SensorLayout& layout) {
  if (obs.size() != layout.positions.size())
    throw std::invalid_argument("observation length does not match sensor count");
  const auto assign = voronoi_assignment(layout);
  Field out(layout.grid);
  for (size_t i = 0; i < assign.size(); ++i) out.values[i] = obs[static_cast<size_t>(assign[i])];
  return out;
}

}  // namespace fieldst
