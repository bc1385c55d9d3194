#include "binary_io.hpp"

#include "dnnens/errors.hpp"

#include <bit>
#include <cstring>
#include <iterator>

namespace dnnens::io {

static_assert(std::endian::native == std::endian::little,
              "model files are written in host byte order, which must be little-endian");

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw DataError("cannot write '" + path.string() + "'");
}

void BinaryWriter::raw(const void* data, std::size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void BinaryWriter::magic(std::string_view tag) { raw(tag.data(), tag.size()); }
void BinaryWriter::u32(std::uint32_t v) { raw(&v, sizeof v); }
void BinaryWriter::u64(std::uint64_t v) { raw(&v, sizeof v); }
void BinaryWriter::i64(std::int64_t v) { raw(&v, sizeof v); }
void BinaryWriter::f64(double v) { raw(&v, sizeof v); }
void BinaryWriter::f64s(const double* data, std::size_t n) { raw(data, n * sizeof(double)); }

void BinaryWriter::finish() {
  out_.flush();
  if (!out_) throw DataError("write failed for '" + path_.string() + "'");
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void BinaryReader::raw(void* data, std::size_t n) {
  if (bytes_.size() - pos_ < n)
    throw FormatError("'" + path_.string() + "' is truncated");
  std::memcpy(data, bytes_.data() + pos_, n);
  pos_ += n;
}

void BinaryReader::expect_magic(std::string_view tag, std::string_view what) {
  std::string got(tag.size(), '\0');
  if (bytes_.size() < tag.size())
    throw FormatError("'" + path_.string() + "' is not a " + std::string(what) + " file");
  raw(got.data(), got.size());
  if (got != tag)
    throw FormatError("'" + path_.string() + "' is not a " + std::string(what) +
                      " file (bad magic)");
}

std::uint32_t BinaryReader::u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
std::uint64_t BinaryReader::u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
std::int64_t BinaryReader::i64() { std::int64_t v; raw(&v, sizeof v); return v; }
double BinaryReader::f64() { double v; raw(&v, sizeof v); return v; }
void BinaryReader::f64s(double* data, std::size_t n) { raw(data, n * sizeof(double)); }

std::uint64_t BinaryReader::count(std::size_t element_size) {
  const std::uint64_t n = u64();
  if (element_size != 0 && n > (bytes_.size() - pos_) / element_size)
    throw FormatError("'" + path_.string() + "' is truncated or corrupt");
  return n;
}

void BinaryReader::expect_end() {
  if (pos_ != bytes_.size())
    throw FormatError("'" + path_.string() + "' has trailing bytes");
}

}  // namespace dnnens::io
