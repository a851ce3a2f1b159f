#pragma once

#include <cstdint>
#include <stdexcept>

#include "fieldst/field.hpp"

namespace fieldst {

// Rectangular heat source, inclusive cell bounds, additive intensity.
struct HeatSource {
  int row0 = 0, col0 = 0;
  int row1 = 0, col1 = 0;
  double intensity = 0.0;
};

struct SourceLayout {
  GridDims grid;
  double boundary_value = 0.0;
  std::vector<HeatSource> sources;
};

struct GenConfig {
  GridDims grid{64, 64};
  int min_sources = 2;
  int max_sources = 6;
  double min_intensity = 0.5;
  double max_intensity = 2.0;
  double boundary_value = 0.0;
};

// Deterministic per seed. Sources land in the interior; side lengths are at
// most ~1/5 of the grid so layouts stay localized.
SourceLayout sample_source_layout(uint64_t seed, const GenConfig& config);

// Per-cell source intensity q (overlapping rectangles sum).
Field source_field(const SourceLayout& layout);

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

struct SolverError : std::runtime_error {
  double relative_residual;
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), relative_residual(residual) {}
};

// Steady state of -laplace(T) = q on the 5-point stencil with Dirichlet
// boundary T = boundary_value, by conjugate gradient on the interior
// unknowns. Converges to ||q + laplace(T)||_2 / ||q||_2 <= tol (verified on
// the true residual, not the CG recurrence). q == 0 returns the boundary
// value exactly. max_iterations 0 means the default cap of 10*H*W.
Field solve_steady_heat(const SourceLayout& layout, double tol = 1e-8,
                        SolveStats* stats = nullptr, int max_iterations = 0);

// ||q + laplace(T)||_2 / ||q||_2 over interior cells; 0 when both vanish.
double heat_relative_residual(const Field& temperature, const SourceLayout& layout);

}  // namespace fieldst
