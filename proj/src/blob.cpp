#include "dscnn/blob.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dscnn/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "blob IO assumes a little-endian host");

namespace dscnn {

std::string precision_str(Precision p) {
  return p == Precision::F32 ? "f32" : "f64";
}

Precision parse_precision(const std::string& s) {
  if (s == "f32") return Precision::F32;
  if (s == "f64") return Precision::F64;
  throw DataError("unknown precision '" + s + "', expected f32 or f64");
}

int64_t scalar_width(Precision p) {
  return p == Precision::F32 ? 4 : 8;
}

void write_blob(const std::filesystem::path& file, std::string_view magic,
                const double* values, int64_t count, Precision precision) {
  if (magic.size() != 4) throw Error("blob magic must be 4 bytes");
  std::ofstream os(file, std::ios::binary);
  if (!os) throw DataError("cannot open " + file.string() + " for writing");
  os.write(magic.data(), 4);
  if (precision == Precision::F64) {
    os.write(reinterpret_cast<const char*>(values), count * 8);
  } else {
    std::vector<float> narrow(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) narrow[static_cast<size_t>(i)] = static_cast<float>(values[i]);
    os.write(reinterpret_cast<const char*>(narrow.data()), count * 4);
  }
  if (!os) throw DataError("failed writing " + file.string());
}

std::vector<double> read_blob(const std::filesystem::path& file, std::string_view magic,
                              int64_t expected_count, Precision precision) {
  std::ifstream is(file, std::ios::binary | std::ios::ate);
  if (!is) throw DataError("cannot open " + file.string());
  const int64_t size = static_cast<int64_t>(is.tellg());
  const int64_t expected_size = 4 + expected_count * scalar_width(precision);
  if (size != expected_size) {
    throw DataError(file.string() + ": size " + std::to_string(size) + " does not match " +
                    std::to_string(expected_count) + " " + precision_str(precision) +
                    " scalars (expected " + std::to_string(expected_size) + " bytes)");
  }
  is.seekg(0);
  char got[4];
  is.read(got, 4);
  if (!is || std::memcmp(got, magic.data(), 4) != 0) {
    throw DataError(file.string() + ": bad magic, expected '" + std::string(magic) + "'");
  }
  std::vector<double> values(static_cast<size_t>(expected_count));
  if (precision == Precision::F64) {
    is.read(reinterpret_cast<char*>(values.data()), expected_count * 8);
  } else {
    std::vector<float> narrow(static_cast<size_t>(expected_count));
    is.read(reinterpret_cast<char*>(narrow.data()), expected_count * 4);
    for (int64_t i = 0; i < expected_count; ++i) values[static_cast<size_t>(i)] = narrow[static_cast<size_t>(i)];
  }
  if (!is) throw DataError(file.string() + ": truncated read");
  return values;
}

void quantize_f32(double* values, int64_t count) {
  for (int64_t i = 0; i < count; ++i) values[i] = static_cast<double>(static_cast<float>(values[i]));
}

}  // namespace dscnn
