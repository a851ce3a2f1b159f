#include "fieldst/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fieldst/bytes.hpp"
#include "fieldst/hash.hpp"
#include "fieldst/rng.hpp"

namespace fieldst {

namespace {

void write_dataset_stream(const Dataset& ds, std::ostream& out) {
  out.write(kDatasetMagic, 4);
  write_u32(out, kDatasetVersion);
  write_u32(out, static_cast<uint32_t>(ds.grid.h));
  write_u32(out, static_cast<uint32_t>(ds.grid.w));
  write_u32(out, static_cast<uint32_t>(ds.sensors.count()));
  write_u32(out, static_cast<uint32_t>(ds.labeled.size()));
  write_u32(out, static_cast<uint32_t>(ds.unlabeled.size()));
  write_u32(out, static_cast<uint32_t>(ds.test.size()));
  for (const auto& [r, c] : ds.sensors.positions) {
    write_u32(out, static_cast<uint32_t>(r));
    write_u32(out, static_cast<uint32_t>(c));
  }
  auto write_split = [&](const std::vector<Sample>& split, Split tag) {
    for (const auto& s : split) {
      write_u64(out, s.id);
      write_f64_array(out, s.observation);
      write_f64_array(out, s.field);
      out.put(static_cast<char>(tag));
    }
  };
  write_split(ds.labeled, Split::labeled);
  write_split(ds.unlabeled, Split::unlabeled);
  write_split(ds.test, Split::test);
  write_f64(out, ds.norm.shift);
  write_f64(out, ds.norm.scale);
}

}  // namespace

Dataset build_dataset(int n_labeled, int n_unlabeled, int n_test,
                      const SensorLayout& sensors, uint64_t seed, const GenConfig& gen,
                      double solver_tol, BuildStats* stats) {
  if (n_labeled < 0 || n_unlabeled < 0 || n_test < 0)
    throw std::invalid_argument("split counts must be >= 0");
  if (!(sensors.grid == gen.grid))
    throw std::invalid_argument("sensor layout grid does not match generator grid");

  Dataset ds;
  ds.grid = gen.grid;
  ds.sensors = sensors;
  BuildStats local{};

  const int total = n_labeled + n_unlabeled + n_test;
  std::vector<Field> fields;
  fields.reserve(static_cast<size_t>(total));
  for (int i = 0; i < total; ++i) {
    const auto layout = sample_source_layout(mix_seed(seed, "sample", static_cast<uint64_t>(i)),
                                             gen);
    SolveStats solve{};
    fields.push_back(solve_steady_heat(layout, solver_tol, &solve));
    // Residual post-condition is checked, not assumed.
    const double residual = heat_relative_residual(fields.back(), layout);
    if (residual > solver_tol)
      throw SolverError("emitted field violates the residual post-condition", residual);
    local.max_residual = std::max(local.max_residual, residual);
    local.max_iterations = std::max(local.max_iterations, solve.iterations);
  }

  // Min-max normalization from the labeled split only.
  if (n_labeled > 0) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_labeled; ++i) {
      for (double v : fields[static_cast<size_t>(i)].values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (hi - lo == 0.0)
      throw std::runtime_error("all labeled fields are constant: normalization scale is zero");
    ds.norm = {lo, hi - lo};
  }

  for (int i = 0; i < total; ++i) {
    auto& f = fields[static_cast<size_t>(i)];
    for (double& v : f.values) v = (v - ds.norm.shift) / ds.norm.scale;
    Sample s;
    s.id = static_cast<uint64_t>(i);
    s.observation = observe(f, sensors);
    s.field = std::move(f.values);
    if (i < n_labeled)
      ds.labeled.push_back(std::move(s));
    else if (i < n_labeled + n_unlabeled)
      ds.unlabeled.push_back(std::move(s));
    else
      ds.test.push_back(std::move(s));
  }
  if (stats) *stats = local;
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    write_dataset_stream(dataset, out);
    if (!out) throw IoError("short write to " + path.string());
  }
  auto manifest_path = path;
  manifest_path.replace_extension(".json");
  write_file_atomic(manifest_path, dataset_manifest_json(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  expect_magic(in, kDatasetMagic, "FSRD dataset");
  const uint32_t version = read_u32(in);
  if (version != kDatasetVersion)
    throw IoError("unsupported FSRD version " + std::to_string(version));

  Dataset ds;
  ds.grid.h = static_cast<int>(read_u32(in));
  ds.grid.w = static_cast<int>(read_u32(in));
  const uint32_t n_sensors = read_u32(in);
  const uint32_t n_labeled = read_u32(in);
  const uint32_t n_unlabeled = read_u32(in);
  const uint32_t n_test = read_u32(in);
  ds.sensors.grid = ds.grid;
  ds.sensors.positions.reserve(n_sensors);
  for (uint32_t i = 0; i < n_sensors; ++i) {
    const int r = static_cast<int>(read_u32(in));
    const int c = static_cast<int>(read_u32(in));
    ds.sensors.positions.emplace_back(r, c);
  }
  const size_t cells = static_cast<size_t>(ds.grid.h) * ds.grid.w;
  const uint32_t total = n_labeled + n_unlabeled + n_test;
  for (uint32_t i = 0; i < total; ++i) {
    Sample s;
    s.id = read_u64(in);
    s.observation.resize(n_sensors);
    read_f64_array(in, s.observation);
    s.field.resize(cells);
    read_f64_array(in, s.field);
    int tag = in.get();
    if (tag == EOF) throw IoError("unexpected end of file");
    switch (static_cast<Split>(tag)) {
      case Split::labeled: ds.labeled.push_back(std::move(s)); break;
      case Split::unlabeled: ds.unlabeled.push_back(std::move(s)); break;
      case Split::test: ds.test.push_back(std::move(s)); break;
      default: throw IoError("bad split tag " + std::to_string(tag));
    }
  }
  if (ds.labeled.size() != n_labeled || ds.unlabeled.size() != n_unlabeled ||
      ds.test.size() != n_test)
    throw IoError("split tags disagree with header counts");
  ds.norm.shift = read_f64(in);
  ds.norm.scale = read_f64(in);
  if (!(ds.norm.scale > 0.0)) throw IoError("dataset normalization scale must be positive");
  return ds;
}

std::string dataset_manifest_json(const Dataset& dataset) {
  nlohmann::json j;
  j["format"] = "FSRD";
  j["version"] = kDatasetVersion;
  j["grid"] = {{"h", dataset.grid.h}, {"w", dataset.grid.w}};
  auto sensors = nlohmann::json::array();
  for (const auto& [r, c] : dataset.sensors.positions) sensors.push_back({r, c});
  j["sensors"] = std::move(sensors);
  j["counts"] = {{"labeled", dataset.labeled.size()},
                 {"unlabeled", dataset.unlabeled.size()},
                 {"test", dataset.test.size()}};
  j["normalization"] = {{"shift", dataset.norm.shift}, {"scale", dataset.norm.scale}};
  return j.dump(2) + "\n";
}

uint64_t dataset_fingerprint(const Dataset& dataset) {
  std::ostringstream out(std::ios::binary);
  write_dataset_stream(dataset, out);
  const std::string bytes = out.str();
  return fnv1a(bytes.data(), bytes.size());
}

}  // namespace fieldst
