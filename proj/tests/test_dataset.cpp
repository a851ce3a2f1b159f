#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "fieldst/dataset.hpp"
#include "fieldst/hash.hpp"

using namespace fieldst;
namespace fs = std::filesystem;

namespace {

GenConfig small_gen() {
  GenConfig gen;
  gen.grid = {12, 12};
  return gen;
}

Dataset small_dataset(uint64_t seed = 7) {
  const GenConfig gen = small_gen();
  const auto sensors = place_sensors(gen.grid, 5, PlacementStrategy::stratified_jitter, seed);
  return build_dataset(6, 4, 3, sensors, seed, gen);
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("builds are deterministic and save byte-identically") {
  const Dataset a = small_dataset();
  const Dataset b = small_dataset();
  CHECK(dataset_fingerprint(a) == dataset_fingerprint(b));

  const auto p1 = fs::temp_directory_path() / "fieldst_ds_a.fsrd";
  const auto p2 = fs::temp_directory_path() / "fieldst_ds_b.fsrd";
  save_dataset(a, p1);
  save_dataset(b, p2);
  CHECK(hash_file(p1) == hash_file(p2));
  CHECK(hash_file(p1) == dataset_fingerprint(a));
  fs::remove(p1);
  fs::remove(p2);
  fs::remove(fs::temp_directory_path() / "fieldst_ds_a.json");
  fs::remove(fs::temp_directory_path() / "fieldst_ds_b.json");
}

TEST_CASE("normalized labeled fields span exactly [0, 1]") {
  const Dataset ds = small_dataset();
  double lo = 1e300, hi = -1e300;
  for (const auto& s : ds.labeled)
    for (double v : s.field) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  CHECK(lo == 0.0);
  CHECK(hi == 1.0);
}

TEST_CASE("observations sample the normalized fields at the sensors") {
  const Dataset ds = small_dataset();
  for (const auto& s : ds.test) {
    for (int k = 0; k < ds.sensors.count(); ++k) {
      const auto [r, c] = ds.sensors.positions[static_cast<size_t>(k)];
      CHECK(s.observation[static_cast<size_t>(k)] ==
            s.field[static_cast<size_t>(r) * ds.grid.w + c]);
    }
  }
}

TEST_CASE("splits are disjoint by id and share one layout") {
  const Dataset ds = small_dataset();
  std::set<uint64_t> ids;
  for (const auto* split : {&ds.labeled, &ds.unlabeled, &ds.test})
    for (const auto& s : *split) ids.insert(s.id);
  CHECK(ids.size() == 13);
  CHECK(ds.sensors.grid == ds.grid);
}

TEST_CASE("unlabeled samples retain their ground-truth fields") {
  const Dataset ds = small_dataset();
  for (const auto& s : ds.unlabeled) {
    CHECK(s.field.size() == static_cast<size_t>(ds.grid.cells()));
    bool any_nonzero = std::any_of(s.field.begin(), s.field.end(),
                                   [](double v) { return v != 0.0; });
    CHECK(any_nonzero);
  }
}

TEST_CASE("FSRD round-trips bit-exactly") {
  const Dataset ds = small_dataset();
  const auto path = fs::temp_directory_path() / "fieldst_ds_rt.fsrd";
  save_dataset(ds, path);
  const Dataset loaded = load_dataset(path);
  CHECK(loaded.grid == ds.grid);
  CHECK(loaded.sensors.positions == ds.sensors.positions);
  CHECK(loaded.norm.shift == ds.norm.shift);
  CHECK(loaded.norm.scale == ds.norm.scale);
  REQUIRE(loaded.labeled.size() == ds.labeled.size());
  for (size_t i = 0; i < ds.labeled.size(); ++i) {
    CHECK(loaded.labeled[i].id == ds.labeled[i].id);
    CHECK(loaded.labeled[i].observation == ds.labeled[i].observation);
    CHECK(loaded.labeled[i].field == ds.labeled[i].field);
  }
  CHECK(dataset_fingerprint(loaded) == dataset_fingerprint(ds));
  fs::remove(path);
  fs::remove(fs::temp_directory_path() / "fieldst_ds_rt.json");
}

TEST_CASE("constant labeled fields are rejected (zero scale)") {
  GenConfig gen = small_gen();
  gen.min_intensity = 0.0;
  gen.max_intensity = 0.0;  // every field equals the boundary value
  const auto sensors = place_sensors(gen.grid, 4, PlacementStrategy::uniform_random, 1);
  CHECK_THROWS_AS(build_dataset(3, 2, 2, sensors, 1, gen), std::runtime_error);
}

TEST_CASE("solver residuals are verified during the build") {
  BuildStats stats;
  const GenConfig gen = small_gen();
  const auto sensors = place_sensors(gen.grid, 5, PlacementStrategy::stratified_jitter, 2);
  build_dataset(4, 2, 2, sensors, 2, gen, 1e-8, &stats);
  CHECK(stats.max_residual <= 1e-8);
  CHECK(stats.max_iterations > 0);
}

TEST_CASE("manifest carries the header metadata") {
  const Dataset ds = small_dataset();
  const auto text = dataset_manifest_json(ds);
  CHECK(text.find("\"FSRD\"") != std::string::npos);
  CHECK(text.find("\"labeled\": 6") != std::string::npos);
  CHECK(text.find("\"scale\"") != std::string::npos);
}

TEST_CASE("mismatched sensor grid is rejected") {
  const GenConfig gen = small_gen();
  const auto sensors = place_sensors({10, 10}, 4, PlacementStrategy::uniform_random, 1);
  CHECK_THROWS_AS(build_dataset(2, 1, 1, sensors, 1, gen), std::invalid_argument);
}

TEST_CASE("load rejects foreign files") {
  const auto path = fs::temp_directory_path() / "fieldst_ds_bad.fsrd";
  std::ofstream(path, std::ios::binary) << "not a dataset";
  CHECK_THROWS(load_dataset(path));
  fs::remove(path);
}

}  // TEST_SUITE
