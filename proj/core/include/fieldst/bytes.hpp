#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fieldst {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64_array(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size_bytes()));
}

inline uint32_t read_u32(std::istream& in) {
  uint32_t v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("unexpected end of file");
  return v;
}

inline uint64_t read_u64(std::istream& in) {
  uint64_t v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("unexpected end of file");
  return v;
}

inline double read_f64(std::istream& in) {
  double v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("unexpected end of file");
  return v;
}

inline void read_f64_array(std::istream& in, std::span<double> v) {
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes())))
    throw IoError("unexpected end of file");
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const char* what) {
  char buf[4];
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
    throw IoError(std::string("bad magic, not a ") + what + " file");
}

// Write-to-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace fieldst
