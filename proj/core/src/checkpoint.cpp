#include "fieldst/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include "fieldst/bytes.hpp"

namespace fieldst {

void save_checkpoint(const DenseNet& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kCheckpointMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<uint32_t>(net.layer_sizes.size()));
  for (int s : net.layer_sizes) write_u32(out, static_cast<uint32_t>(s));
  for (size_t k = 0; k < net.weights.size(); ++k) {
    write_f64_array(out, net.weights[k]);
    write_f64_array(out, net.biases[k]);
  }
  if (!out) throw IoError("short write to " + path.string());
}

DenseNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  expect_magic(in, kCheckpointMagic, "FSNN checkpoint");
  const uint32_t version = read_u32(in);
  if (version != kCheckpointVersion)
    throw IoError("unsupported FSNN version " + std::to_string(version));
  const uint32_t layers = read_u32(in);
  if (layers < 2) throw IoError("FSNN checkpoint needs at least 2 layers");

  DenseNet net;
  net.layer_sizes.resize(layers);
  for (auto& s : net.layer_sizes) {
    s = static_cast<int>(read_u32(in));
    if (s <= 0) throw IoError("FSNN checkpoint has a non-positive layer size");
  }
  net.weights.resize(layers - 1);
  net.biases.resize(layers - 1);
  for (size_t k = 0; k + 1 < layers; ++k) {
    net.weights[k].resize(static_cast<size_t>(net.layer_sizes[k + 1]) * net.layer_sizes[k]);
    net.biases[k].resize(static_cast<size_t>(net.layer_sizes[k + 1]));
    read_f64_array(in, net.weights[k]);
    read_f64_array(in, net.biases[k]);
    for (double v : net.weights[k])
      if (!std::isfinite(v)) throw IoError("FSNN checkpoint has non-finite parameters");
    for (double v : net.biases[k])
      if (!std::isfinite(v)) throw IoError("FSNN checkpoint has non-finite parameters");
  }
  return net;
}

}  // namespace fieldst
