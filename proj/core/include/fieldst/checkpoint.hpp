#pragma once

#include <filesystem>

#include "fieldst/net.hpp"

namespace fieldst {

// FSNN checkpoint: "FSNN" magic, format version u32 LE, layer count u32,
// layer sizes u32 each, then per weight layer the row-major f64 weights
// followed by the f64 biases. Round-trips bit-exactly.
inline constexpr char kCheckpointMagic[5] = "FSNN";
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const DenseNet& net, const std::filesystem::path& path);
DenseNet load_checkpoint(const std::filesystem::path& path);

}  // namespace fieldst
