#pragma once

// Flat little-endian band-sequential payload plus a JSON sidecar header.
// For a payload "scene.raw" the header is "scene.hdr.json":
//
//   {"width": 64, "height": 64, "bands": 3, "dtype": "float64",
//    "interleave": "band-sequential", "byte_order": "little-endian"}

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panfuse/errors.hpp"
#include "panfuse/tensor.hpp"

namespace panfuse::io {

enum class IoErrorCode {
  missing_header,
  inconsistent_header,
  unknown_dtype,
  missing_payload,
  truncated_payload,
  write_failed,
};

inline const char* to_string(IoErrorCode c) {
  switch (c) {
    case IoErrorCode::missing_header: return "missing header";
    case IoErrorCode::inconsistent_header: return "inconsistent header";
    case IoErrorCode::unknown_dtype: return "unknown dtype";
    case IoErrorCode::missing_payload: return "missing payload";
    case IoErrorCode::truncated_payload: return "truncated payload";
    case IoErrorCode::write_failed: return "write failed";
  }
  return "io error";
}

class IoError : public DataError {
 public:
  IoError(IoErrorCode code, const std::string& detail)
      : DataError(std::string(to_string(code)) + ": " + detail), code_(code) {}
  IoErrorCode code() const noexcept { return code_; }

 private:
  IoErrorCode code_;
};

enum class Dtype { float32, float64 };

inline std::size_t dtype_size(Dtype d) { return d == Dtype::float32 ? 4 : 8; }
inline const char* dtype_name(Dtype d) { return d == Dtype::float32 ? "float32" : "float64"; }

struct ImageHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 0;
  Dtype dtype = Dtype::float64;

  std::size_t payload_bytes() const { return width * height * bands * dtype_size(dtype); }
};

inline std::filesystem::path header_path(const std::filesystem::path& payload) {
  auto p = payload;
  p.replace_extension();
  p += ".hdr.json";
  return p;
}

inline nlohmann::json header_to_json(const ImageHeader& h) {
  return {{"width", h.width},
          {"height", h.height},
          {"bands", h.bands},
          {"dtype", dtype_name(h.dtype)},
          {"interleave", "band-sequential"},
          {"byte_order", "little-endian"}};
}

inline ImageHeader read_header(const std::filesystem::path& payload) {
  const auto hp = header_path(payload);
  std::ifstream in(hp);
  if (!in) throw IoError(IoErrorCode::missing_header, hp.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(IoErrorCode::inconsistent_header, hp.string() + ": " + e.what());
  }
  ImageHeader h;
  try {
    h.width = j.at("width").get<std::size_t>();
    h.height = j.at("height").get<std::size_t>();
    h.bands = j.at("bands").get<std::size_t>();
    const auto dtype = j.at("dtype").get<std::string>();
    if (dtype == "float32") h.dtype = Dtype::float32;
    else if (dtype == "float64") h.dtype = Dtype::float64;
    else throw IoError(IoErrorCode::unknown_dtype, hp.string() + ": '" + dtype + "'");
    if (j.value("interleave", "band-sequential") != "band-sequential")
      throw IoError(IoErrorCode::inconsistent_header, hp.string() + ": interleave must be band-sequential");
    if (j.value("byte_order", "little-endian") != "little-endian")
      throw IoError(IoErrorCode::inconsistent_header, hp.string() + ": byte_order must be little-endian");
  } catch (const nlohmann::json::exception& e) {
    throw IoError(IoErrorCode::inconsistent_header, hp.string() + ": " + e.what());
  }
  if (h.width == 0 || h.height == 0 || h.bands == 0)
    throw IoError(IoErrorCode::inconsistent_header, hp.string() + ": zero extent");
  return h;
}

namespace detail {

template <class T>
T from_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <class T>
void decode(const std::vector<char>& bytes, std::vector<double>& out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    T v;
    std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
    out[i] = static_cast<double>(from_little(v));
  }
}

template <class T>
void encode(std::span<const double> in, std::vector<char>& bytes) {
  bytes.resize(in.size() * sizeof(T));
  for (std::size_t i = 0; i < in.size(); ++i) {
    const T v = from_little(static_cast<T>(in[i]));
    std::memcpy(bytes.data() + i * sizeof(T), &v, sizeof(T));
  }
}

}  // namespace detail

inline HyperCube read_cube(const std::filesystem::path& payload) {
  const ImageHeader h = read_header(payload);
  std::ifstream in(payload, std::ios::binary);
  if (!in) throw IoError(IoErrorCode::missing_payload, payload.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected = h.payload_bytes();
  if (bytes.size() < expected)
    throw IoError(IoErrorCode::truncated_payload,
                  payload.string() + ": " + std::to_string(bytes.size()) + " bytes, header implies " +
                      std::to_string(expected));
  if (bytes.size() > expected)
    throw IoError(IoErrorCode::inconsistent_header,
                  payload.string() + ": " + std::to_string(bytes.size()) + " bytes, header implies " +
                      std::to_string(expected));
  std::vector<double> data(h.width * h.height * h.bands);
  if (h.dtype == Dtype::float32) detail::decode<float>(bytes, data);
  else detail::decode<double>(bytes, data);
  if (!all_finite(data)) throw DataError(payload.string() + ": non-finite sample");
  return HyperCube(h.width, h.height, h.bands, std::move(data));
}

inline void write_cube(const HyperCube& cube, const std::filesystem::path& payload,
                       Dtype dtype = Dtype::float64) {
  std::vector<char> bytes;
  if (dtype == Dtype::float32) detail::encode<float>(cube.data(), bytes);
  else detail::encode<double>(cube.data(), bytes);
  {
    std::ofstream out(payload, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoErrorCode::write_failed, payload.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(IoErrorCode::write_failed, payload.string());
  }
  const ImageHeader h{cube.width(), cube.height(), cube.bands(), dtype};
  std::ofstream hdr(header_path(payload));
  if (!hdr) throw IoError(IoErrorCode::write_failed, header_path(payload).string());
  hdr << header_to_json(h).dump(2) << '\n';
}

/// Panchromatic images are stored as single-band cubes.
inline PanImage read_pan(const std::filesystem::path& payload) {
  const HyperCube c = read_cube(payload);
  if (c.bands() != 1)
    throw IoError(IoErrorCode::inconsistent_header,
                  payload.string() + ": panchromatic image must have 1 band, found " +
                      std::to_string(c.bands()));
  return c.plane_copy(0);
}

inline void write_pan(const PanImage& p, const std::filesystem::path& payload,
                      Dtype dtype = Dtype::float64) {
  HyperCube c(p.width(), p.height(), 1);
  c.set_plane(0, p);
  write_cube(c, payload, dtype);
}

}  // namespace panfuse::io
