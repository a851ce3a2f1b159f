#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fieldst/field.hpp"

namespace fieldst {

struct SensorLayout {
  GridDims grid;
  std::vector<std::pair<int, int>> positions;  // (row, col), pairwise distinct

  int count() const { return static_cast<int>(positions.size()); }
};

enum class PlacementStrategy { stratified_jitter, uniform_random };

PlacementStrategy placement_strategy_from_string(std::string_view name);
std::string to_string(PlacementStrategy strategy);

// stratified_jitter: one sensor per cell of a near-square coarse partition,
// uniformly jittered inside its block. uniform_random: `count` distinct
// cells. Both deterministic per (strategy, seed).
SensorLayout place_sensors(GridDims grid, int count, PlacementStrategy strategy,
                           uint64_t seed);

// Sensor readings ordered as layout.positions.
using Observation = std::vector<double>;

Observation observe(const Field& field, const SensorLayout& layout);

// Nearest sensor per cell under Euclidean distance on (row, col); ties go to
// the lowest sensor index.
std::vector<int32_t> voronoi_assignment(const SensorLayout& layout);

// Rasterized Voronoi tessellation: every cell takes its nearest sensor's
// observed value.
Field voronoi_encode(const Observation& obs, const SensorLayout& layout);

}  // namespace fieldst
