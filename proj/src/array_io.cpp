#include "scribseg/array_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "scribseg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "array container is little-endian on disk");

namespace scribseg::io {

using nlohmann::json;

std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::F32: return 4;
    case Dtype::F64: return 8;
    case Dtype::U8: return 1;
  }
  return 0;
}

const char* dtype_name(Dtype d) {
  switch (d) {
    case Dtype::F32: return "f32";
    case Dtype::F64: return "f64";
    case Dtype::U8: return "u8";
  }
  return "?";
}

static Dtype parse_dtype(const std::string& s, const std::string& file) {
  if (s == "f32") return Dtype::F32;
  if (s == "f64") return Dtype::F64;
  if (s == "u8") return Dtype::U8;
  throw FormatError(file + ": unknown dtype \"" + s + "\"");
}

std::int64_t ArrayHeader::element_count() const {
  std::int64_t n = 1;
  for (std::int64_t d : shape) n *= d;
  return n;
}

std::vector<float> StoredArray::as_f32() const {
  if (header.dtype != Dtype::F32) throw FormatError("array is not f32");
  std::vector<float> out(bytes.size() / 4);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::vector<double> StoredArray::as_f64() const {
  if (header.dtype != Dtype::F64) throw FormatError("array is not f64");
  std::vector<double> out(bytes.size() / 8);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

const std::vector<std::uint8_t>& StoredArray::as_u8() const {
  if (header.dtype != Dtype::U8) throw FormatError("array is not u8");
  return bytes;
}

void write_array(const std::filesystem::path& base, const ArrayHeader& header,
                 const void* data, std::size_t nbytes) {
  const std::size_t expect =
      static_cast<std::size_t>(header.element_count()) * dtype_size(header.dtype);
  if (nbytes != expect) {
    throw ValidationError("write_array: payload size " + std::to_string(nbytes) +
                          " does not match header (" + std::to_string(expect) + ")");
  }
  json j;
  j["dtype"] = dtype_name(header.dtype);
  j["shape"] = header.shape;
  j["spacing_mm"] = header.spacing_mm;

  const auto json_path = base.string() + ".json";
  const auto bin_path = base.string() + ".bin";
  {
    std::ofstream jf(json_path, std::ios::trunc);
    if (!jf) throw IoError("cannot write " + json_path);
    jf << j.dump() << "\n";
  }
  {
    std::ofstream bf(bin_path, std::ios::trunc | std::ios::binary);
    if (!bf) throw IoError("cannot write " + bin_path);
    bf.write(static_cast<const char*>(data), static_cast<std::streamsize>(nbytes));
    if (!bf) throw IoError("short write to " + bin_path);
  }
}

StoredArray read_array(const std::filesystem::path& base) {
  const auto json_path = base.string() + ".json";
  const auto bin_path = base.string() + ".bin";

  std::ifstream jf(json_path);
  if (!jf) throw FormatError(json_path + ": missing header");
  json j;
  try {
    jf >> j;
  } catch (const json::exception& e) {
    throw FormatError(json_path + ": corrupt header (" + e.what() + ")");
  }
  if (!j.is_object() || !j.contains("dtype") || !j.contains("shape") ||
      !j.contains("spacing_mm")) {
    throw FormatError(json_path + ": header missing dtype/shape/spacing_mm");
  }

  StoredArray out;
  out.header.dtype = parse_dtype(j["dtype"].get<std::string>(), json_path);
  out.header.shape = j["shape"].get<std::vector<std::int64_t>>();
  for (std::int64_t d : out.header.shape) {
    if (d < 1) throw FormatError(json_path + ": non-positive dimension in shape");
  }
  const auto sp = j["spacing_mm"].get<std::vector<double>>();
  if (sp.size() != 3) throw FormatError(json_path + ": spacing_mm must have 3 entries");
  for (int i = 0; i < 3; ++i) {
    if (!(sp[static_cast<size_t>(i)] > 0)) {
      throw FormatError(json_path + ": spacing_mm must be positive");
    }
    out.header.spacing_mm[static_cast<size_t>(i)] = sp[static_cast<size_t>(i)];
  }

  std::ifstream bf(bin_path, std::ios::binary | std::ios::ate);
  if (!bf) throw FormatError(bin_path + ": missing payload");
  const auto fsize = static_cast<std::size_t>(bf.tellg());
  const std::size_t expect = static_cast<std::size_t>(out.header.element_count()) *
                             dtype_size(out.header.dtype);
  if (fsize != expect) {
    throw FormatError(bin_path + ": payload is " + std::to_string(fsize) +
                      " bytes, header implies " + std::to_string(expect));
  }
  out.bytes.resize(fsize);
  bf.seekg(0);
  bf.read(reinterpret_cast<char*>(out.bytes.data()),
          static_cast<std::streamsize>(fsize));
  if (!bf) throw FormatError(bin_path + ": short read");
  return out;
}

void write_f32(const std::filesystem::path& base, const ArrayHeader& header,
               const std::vector<float>& v) {
  write_array(base, header, v.data(), v.size() * 4);
}

void write_u8(const std::filesystem::path& base, const ArrayHeader& header,
              const std::vector<std::uint8_t>& v) {
  write_array(base, header, v.data(), v.size());
}

void write_f64(const std::filesystem::path& base, const ArrayHeader& header,
               const std::vector<double>& v) {
  write_array(base, header, v.data(), v.size() * 8);
}

}  // namespace scribseg::io
