#include "fieldst/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fieldst/bytes.hpp"

namespace fieldst {

HeatmapFormat heatmap_format_from_string(std::string_view name) {
  if (name == "csv") return HeatmapFormat::csv;
  if (name == "pgm") return HeatmapFormat::pgm;
  throw std::invalid_argument("unknown heatmap format: " + std::string(name));
}

namespace {

std::string render_csv(const Field& field) {
  std::string out;
  char buf[32];
  for (int r = 0; r < field.grid.h; ++r) {
    for (int c = 0; c < field.grid.w; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", field.at(r, c));
      out += buf;
      out += (c + 1 < field.grid.w) ? ',' : '\n';
    }
  }
  return out;
}

std::string render_pgm(const Field& field) {
  const auto [lo_it, hi_it] = std::minmax_element(field.values.begin(), field.values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::string out = "P2\n" + std::to_string(field.grid.w) + " " + std::to_string(field.grid.h) +
                    "\n255\n";
  for (int r = 0; r < field.grid.h; ++r) {
    for (int c = 0; c < field.grid.w; ++c) {
      const int level = static_cast<int>(std::lround((field.at(r, c) - lo) * scale));
      out += std::to_string(level);
      out += (c + 1 < field.grid.w) ? ' ' : '\n';
    }
  }
  return out;
}

}  // namespace

void export_heatmap(const Field& field, const std::filesystem::path& path,
                    HeatmapFormat format) {
  if (field.values.empty()) throw std::invalid_argument("cannot export an empty field");
  for (double v : field.values)
    if (!std::isfinite(v)) throw std::invalid_argument("cannot export non-finite values");
  write_file_atomic(path, format == HeatmapFormat::csv ? render_csv(field) : render_pgm(field));
}

Field load_csv_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<double> values;
  int w = -1, h = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int cols = 0;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      values.push_back(std::stod(cell));
      ++cols;
    }
    if (w < 0)
      w = cols;
    else if (cols != w)
      throw IoError("ragged CSV heatmap in " + path.string());
    ++h;
  }
  if (h == 0) throw IoError("empty CSV heatmap in " + path.string());
  Field field;
  field.grid = {h, w};
  field.values = std::move(values);
  return field;
}

Field absolute_error_map(const Field& prediction, const Field& truth) {
  if (!(prediction.grid == truth.grid))
    throw std::invalid_argument("error map grids differ");
  Field out(prediction.grid);
  for (size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = std::abs(prediction.values[i] - truth.values[i]);
  return out;
}

}  // namespace fieldst
