#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dscnn {

// Storage width for on-disk scalar blobs. In-memory math is always double;
// f32 blobs hold values that are exactly representable in single precision.
enum class Precision { F32, F64 };

std::string precision_str(Precision p);
Precision parse_precision(const std::string& s);
int64_t scalar_width(Precision p);

// Scalar blob: 4 magic bytes followed by a raw row-major little-endian
// scalar array. The expected element count is known from the manifest that
// references the blob; any size mismatch is rejected.
void write_blob(const std::filesystem::path& file, std::string_view magic,
                const double* values, int64_t count, Precision precision);
std::vector<double> read_blob(const std::filesystem::path& file, std::string_view magic,
                              int64_t expected_count, Precision precision);

// Rounds every value through single precision (used when building f32 data
// so that a later f32 round trip is bit-exact).
void quantize_f32(double* values, int64_t count);

}  // namespace dscnn
