#pragma once

#include <filesystem>
#include <string_view>

#include "fieldst/field.hpp"

namespace fieldst {

// csv: row-major, one grid row per line, full-precision (%.17g) values.
// pgm: 8-bit grayscale P2, linearly scaled to the map's min-max (a constant
// map renders as all zeros). Both byte-deterministic.
enum class HeatmapFormat { csv, pgm };

HeatmapFormat heatmap_format_from_string(std::string_view name);

void export_heatmap(const Field& field, const std::filesystem::path& path,
                    HeatmapFormat format);

// Re-parses a CSV heatmap; round-trips to equal values.
Field load_csv_field(const std::filesystem::path& path);

Field absolute_error_map(const Field& prediction, const Field& truth);

}  // namespace fieldst
