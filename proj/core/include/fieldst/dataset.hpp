#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fieldst/field.hpp"
#include "fieldst/heat.hpp"
#include "fieldst/sensing.hpp"

namespace fieldst {

struct Sample {
  uint64_t id = 0;
  std::vector<double> observation;  // one value per sensor
  std::vector<double> field;        // H*W row-major ground truth
};

enum class Split : uint8_t { labeled = 0, unlabeled = 1, test = 2 };

// Min-max normalization fitted on the labeled split: stored values are
// (raw - shift) / scale.
struct Normalization {
  double shift = 0.0;
  double scale = 1.0;

  double denormalize(double v) const { return v * scale + shift; }
};

// Unlabeled samples keep their ground-truth fields; trainers must not read
// them (they exist so pseudo-label quality can be evaluated).
struct Dataset {
  GridDims grid;
  SensorLayout sensors;
  std::vector<Sample> labeled;
  std::vector<Sample> unlabeled;
  std::vector<Sample> test;
  Normalization norm;
};

struct BuildStats {
  double max_residual = 0.0;
  int max_iterations = 0;
};

// Samples layouts, solves every field, fits normalization on the labeled
// fields only, applies it to all splits, and extracts observations. Sample
// ids are disjoint across splits. Throws if the labeled fields are constant
// (zero scale).
Dataset build_dataset(int n_labeled, int n_unlabeled, int n_test,
                      const SensorLayout& sensors, uint64_t seed, const GenConfig& gen,
                      double solver_tol = 1e-8, BuildStats* stats = nullptr);

// FSRD container: "FSRD" magic, version u32 LE, grid H,W u32, sensor count
// u32, per-split counts u32, sensor coordinates (u32 row, u32 col) each,
// then per sample: id u64, observation f64 x S, field f64 x H*W row-major,
// split tag u8; trailing normalization shift/scale f64. A sibling .json
// manifest duplicates the header metadata.
inline constexpr char kDatasetMagic[5] = "FSRD";
inline constexpr uint32_t kDatasetVersion = 1;

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

std::string dataset_manifest_json(const Dataset& dataset);

// FNV-1a over the serialized bytes; equals hash_file() of a saved dataset.
uint64_t dataset_fingerprint(const Dataset& dataset);

}  // namespace fieldst
