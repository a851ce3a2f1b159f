#pragma once

#include <cstdint>
#include <vector>

namespace fieldst {

struct GridDims {
  int h = 0;
  int w = 0;

  int cells() const { return h * w; }
  bool operator==(const GridDims&) const = default;
};

// Dense 2D scalar field, row-major.
struct Field {
  GridDims grid;
  std::vector<double> values;

  Field() = default;
  Field(GridDims g, double fill = 0.0) : grid(g), values(static_cast<size_t>(g.cells()), fill) {}

  double& at(int r, int c) { return values[static_cast<size_t>(r) * grid.w + c]; }
  double at(int r, int c) const { return values[static_cast<size_t>(r) * grid.w + c]; }
};

}  // namespace fieldst
