#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace dnnens::io {

// Little-endian field writer for the versioned model files.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);

  void magic(std::string_view tag);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void f64s(const double* data, std::size_t n);
  void finish();

 private:
  void raw(const void* data, std::size_t n);
  std::filesystem::path path_;
  std::ofstream out_;
};

// Reader raising FormatError on truncation.
class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);

  void expect_magic(std::string_view tag, std::string_view what);
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  void f64s(double* data, std::size_t n);
  // Count field checked against the bytes actually left in the file.
  std::uint64_t count(std::size_t element_size);
  void expect_end();

 private:
  void raw(void* data, std::size_t n);
  std::filesystem::path path_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace dnnens::io
