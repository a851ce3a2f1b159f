#include "fieldst/heat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fieldst/rng.hpp"

namespace fieldst {

namespace {

void check_grid(GridDims grid) {
  if (grid.h < 3 || grid.w < 3)
    throw std::invalid_argument("grid must be at least 3x3, got " + std::to_string(grid.h) +
                                "x" + std::to_string(grid.w));
}

// 5-point -laplace on the interior with zero Dirichlet boundary.
// v and out are (h-2) x (w-2) row-major.
void apply_operator(const double* v, double* out, int ih, int iw) {
  for (int r = 0; r < ih; ++r) {
    const double* row = v + static_cast<size_t>(r) * iw;
    double* orow = out + static_cast<size_t>(r) * iw;
    const double* up = r > 0 ? row - iw : nullptr;
    const double* down = r + 1 < ih ? row + iw : nullptr;
    for (int c = 0; c < iw; ++c) {
      double acc = 4.0 * row[c];
      if (c > 0) acc -= row[c - 1];
      if (c + 1 < iw) acc -= row[c + 1];
      if (up) acc -= up[c];
      if (down) acc -= down[c];
      orow[c] = acc;
    }
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SourceLayout sample_source_layout(uint64_t seed, const GenConfig& config) {
  check_grid(config.grid);
  if (config.min_sources < 1 || config.max_sources < config.min_sources)
    throw std::invalid_argument("invalid source count range");
  if (config.min_intensity < 0.0 || config.max_intensity < config.min_intensity)
    throw std::invalid_argument("invalid intensity range");

  const int h = config.grid.h, w = config.grid.w;
  Rng rng(mix_seed(seed, "source-layout"));
  SourceLayout layout;
  layout.grid = config.grid;
  layout.boundary_value = config.boundary_value;
  const int count = rng.uniform_int(config.min_sources, config.max_sources);
  const int max_side_r = std::max(1, (h - 2) / 3);
  const int max_side_c = std::max(1, (w - 2) / 3);
  layout.sources.reserve(static_cast<size_t>(count));
  for (int s = 0; s < count; ++s) {
    HeatSource src;
    // Log-uniform side lengths mix point-like and broad sources.
    const int sh = 1 + static_cast<int>(std::exp(rng.uniform(0.0, std::log(max_side_r + 0.5))) - 0.5);
    const int sw = 1 + static_cast<int>(std::exp(rng.uniform(0.0, std::log(max_side_c + 0.5))) - 0.5);
    src.row0 = rng.uniform_int(1, h - 1 - sh);
    src.col0 = rng.uniform_int(1, w - 1 - sw);
    src.row1 = src.row0 + sh - 1;
    src.col1 = src.col0 + sw - 1;
    src.intensity = rng.uniform(config.min_intensity, config.max_intensity);
    layout.sources.push_back(src);
  }
  return layout;
}

Field source_field(const SourceLayout& layout) {
  Field q(layout.grid, 0.0);
  for (const auto& s : layout.sources) {
    if (s.row0 < 0 || s.col0 < 0 || s.row1 >= layout.grid.h || s.col1 >= layout.grid.w ||
        s.row1 < s.row0 || s.col1 < s.col0)
      throw std::invalid_argument("heat source rectangle out of bounds");
    if (!(s.intensity >= 0.0) || !std::isfinite(s.intensity))
      throw std::invalid_argument("heat source intensity must be finite and >= 0");
    for (int r = s.row0; r <= s.row1; ++r)
      for (int c = s.col0; c <= s.col1; ++c) q.at(r, c) += s.intensity;
  }
  return q;
}

Field solve_steady_heat(const SourceLayout& layout, double tol, SolveStats* stats,
                        int max_iterations) {
  check_grid(layout.grid);
  if (!(tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  const int h = layout.grid.h, w = layout.grid.w;
  const int ih = h - 2, iw = w - 2;
  const size_t n = static_cast<size_t>(ih) * iw;
  if (max_iterations <= 0) max_iterations = 10 * h * w;

  const Field q = source_field(layout);
  std::vector<double> rhs(n);
  for (int r = 0; r < ih; ++r)
    for (int c = 0; c < iw; ++c) rhs[static_cast<size_t>(r) * iw + c] = q.at(r + 1, c + 1);

  const double rhs_norm = std::sqrt(dot(rhs, rhs));
  Field temperature(layout.grid, layout.boundary_value);
  if (rhs_norm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return temperature;
  }

  // CG on A u = rhs with u = T - boundary_value in the interior. The
  // convergence test is on the true residual, recomputed whenever the
  // recurrence says we are done.
  std::vector<double> u(n, 0.0), r = rhs, p = rhs, ap(n);
  double rr = dot(r, r);
  int iter = 0;
  double true_rel = 1.0;
  while (iter < max_iterations) {
    ++iter;
    apply_operator(p.data(), ap.data(), ih, iw);
    const double alpha = rr / dot(p, ap);
    for (size_t i = 0; i < n; ++i) u[i] += alpha * p[i];
    for (size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];
    double rr_next = dot(r, r);
    if (std::sqrt(rr_next) <= tol * rhs_norm) {
      apply_operator(u.data(), ap.data(), ih, iw);
      for (size_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
      rr_next = dot(r, r);
      true_rel = std::sqrt(rr_next) / rhs_norm;
      if (true_rel <= tol) break;
      // Drifted recurrence: restart the search direction from the true
      // residual and keep iterating.
      p = r;
      rr = rr_next;
      continue;
    }
    const double beta = rr_next / rr;
    for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
  }
  if (true_rel > tol) {
    apply_operator(u.data(), ap.data(), ih, iw);
    for (size_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
    true_rel = std::sqrt(dot(r, r)) / rhs_norm;
    if (true_rel > tol)
      throw SolverError("steady-heat CG did not converge in " + std::to_string(max_iterations) +
                            " iterations (relative residual " + std::to_string(true_rel) + ")",
                        true_rel);
  }

  for (int r2 = 0; r2 < ih; ++r2)
    for (int c = 0; c < iw; ++c)
      temperature.at(r2 + 1, c + 1) = layout.boundary_value + u[static_cast<size_t>(r2) * iw + c];
  if (stats) *stats = {iter, true_rel};
  return temperature;
}

double heat_relative_residual(const Field& temperature, const SourceLayout& layout) {
  if (!(temperature.grid == layout.grid))
    throw std::invalid_argument("field and layout grids differ");
  const Field q = source_field(layout);
  const int h = layout.grid.h, w = layout.grid.w;
  double num = 0.0, den = 0.0;
  for (int r = 1; r + 1 < h; ++r) {
    for (int c = 1; c + 1 < w; ++c) {
      const double lap = temperature.at(r - 1, c) + temperature.at(r + 1, c) +
                         temperature.at(r, c - 1) + temperature.at(r, c + 1) -
                         4.0 * temperature.at(r, c);
      const double qv = q.at(r, c);
      num += (qv + lap) * (qv + lap);
      den += qv * qv;
    }
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

}  // namespace fieldst
