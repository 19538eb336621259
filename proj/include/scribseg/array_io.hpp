#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace scribseg::io {

enum class Dtype { F32, F64, U8 };

std::size_t dtype_size(Dtype d);
const char* dtype_name(Dtype d);

// Header of the `.bin` + `.json` array container. The `.bin` holds a
// little-endian row-major array; the sidecar is
// {"dtype": "f32"|"f64"|"u8", "shape": [...], "spacing_mm": [sz,sy,sx]}.
struct ArrayHeader {
  Dtype dtype = Dtype::F32;
  std::vector<std::int64_t> shape;
  std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};

  std::int64_t element_count() const;
};

struct StoredArray {
  ArrayHeader header;
  std::vector<std::uint8_t> bytes;

  std::vector<float> as_f32() const;
  std::vector<double> as_f64() const;
  const std::vector<std::uint8_t>& as_u8() const;
};

// `base` is the path without extension; writes base.bin and base.json.
void write_array(const std::filesystem::path& base, const ArrayHeader& header,
                 const void* data, std::size_t nbytes);
StoredArray read_array(const std::filesystem::path& base);

void write_f32(const std::filesystem::path& base, const ArrayHeader& header,
               const std::vector<float>& v);
void write_u8(const std::filesystem::path& base, const ArrayHeader& header,
              const std::vector<std::uint8_t>& v);
void write_f64(const std::filesystem::path& base, const ArrayHeader& header,
               const std::vector<double>& v);

}  // namespace scribseg::io
