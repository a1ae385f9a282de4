#pragma once

// SCIT binary tensor files.
//
//   offset  size       field
//   0       4          magic "SCIT"
//   4       1          version (1)
//   5       1          dtype: 1 = f32, 2 = f64, 3 = u8
//   6       1          rank (2 or 3)
//   7       1          reserved, 0
//   8       4 * rank   dims, u32 little-endian, (nx, ny[, B])
//   ...                payload, little-endian, in the cube layout of tensor.hpp
//                      (frame slowest, then row, column fastest)
//
// u8 payloads are scaled by 1/255 on read unless told otherwise, and written as
// round(255 v) clamped to [0, 255].

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "pnpsci/tensor.hpp"

namespace pnpsci {

enum class DType : std::uint8_t
{
  f32 = 1,
  f64 = 2,
  u8 = 3,
};

inline constexpr std::uint8_t kScitVersion = 1;

inline std::size_t dtype_size(DType t)
{
  switch (t) {
  case DType::f32:
    return 4;
  case DType::f64:
    return 8;
  case DType::u8:
    return 1;
  }
  throw FormatError("unknown dtype");
}

inline DType parse_dtype(std::string_view s)
{
  if (s == "f32")
    return DType::f32;
  if (s == "f64")
    return DType::f64;
  if (s == "u8")
    return DType::u8;
  throw ConfigError("unknown dtype '" + std::string(s) + "' (expected f32, f64 or u8)");
}

struct TensorData
{
  DType dtype = DType::f64;
  std::vector<std::uint32_t> dims; // (nx, ny) or (nx, ny, B)
  std::vector<double> values;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v)
{
  for (int s = 0; s < 32; s += 8)
    out.push_back(static_cast<char>((v >> s) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* p)
{
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u64(std::string& out, std::uint64_t v)
{
  for (int s = 0; s < 64; s += 8)
    out.push_back(static_cast<char>((v >> s) & 0xffu));
}

inline std::uint64_t get_u64(const unsigned char* p)
{
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k)
    v = (v << 8) | p[k];
  return v;
}

} // namespace detail

/// Serializes values with the given dims. Throws on a length mismatch.
inline std::string encode_tensor(std::span<const double> values, const std::vector<std::uint32_t>& dims,
                                 DType dtype = DType::f64)
{
  if (dims.size() != 2 && dims.size() != 3)
    throw FormatError("SCIT rank must be 2 or 3");
  std::size_t count = 1;
  for (std::uint32_t d : dims)
    count *= d;
  if (count != values.size())
    throw DimensionError("SCIT dims describe " + std::to_string(count) + " values, got " +
                         std::to_string(values.size()));

  std::string out;
  out.reserve(8 + 4 * dims.size() + count * dtype_size(dtype));
  out += "SCIT";
  out.push_back(static_cast<char>(kScitVersion));
  out.push_back(static_cast<char>(dtype));
  out.push_back(static_cast<char>(dims.size()));
  out.push_back('\0');
  for (std::uint32_t d : dims)
    detail::put_u32(out, d);
  for (double v : values) {
    switch (dtype) {
    case DType::f64:
      detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
      break;
    case DType::f32:
      detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      break;
    case DType::u8:
      out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(std::clamp(v * 255.0, 0.0, 255.0)))));
      break;
    }
  }
  return out;
}

inline std::vector<std::uint32_t> scit_dims(const Tensor3& t)
{
  const Dims3 d = t.dims();
  return {static_cast<std::uint32_t>(d.nx), static_cast<std::uint32_t>(d.ny), static_cast<std::uint32_t>(d.frames)};
}

inline std::vector<std::uint32_t> scit_dims(const Frame& f)
{
  return {static_cast<std::uint32_t>(f.rows()), static_cast<std::uint32_t>(f.cols())};
}

inline std::string encode_tensor(const Tensor3& t, DType dtype = DType::f64)
{
  return encode_tensor(t.values(), scit_dims(t), dtype);
}

inline std::string encode_tensor(const Frame& f, DType dtype = DType::f64)
{
  return encode_tensor(f.values(), scit_dims(f), dtype);
}

/// Parses a complete SCIT buffer. With `scale_u8` false, u8 payloads keep their
/// raw 0..255 values.
inline TensorData decode_tensor(std::string_view bytes, bool scale_u8 = true)
{
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 8)
    throw FormatError("SCIT header truncated");
  if (bytes.substr(0, 4) != "SCIT")
    throw FormatError("bad SCIT magic");
  if (p[4] != kScitVersion)
    throw FormatError("unsupported SCIT version " + std::to_string(p[4]));
  TensorData out;
  if (p[5] < 1 || p[5] > 3)
    throw FormatError("unknown SCIT dtype " + std::to_string(p[5]));
  out.dtype = static_cast<DType>(p[5]);
  const std::size_t rank = p[6];
  if (rank != 2 && rank != 3)
    throw FormatError("SCIT rank must be 2 or 3, got " + std::to_string(rank));
  if (p[7] != 0)
    throw FormatError("SCIT reserved byte must be 0");
  const std::size_t header = 8 + 4 * rank;
  if (bytes.size() < header)
    throw FormatError("SCIT dims truncated");

  std::size_t count = 1;
  for (std::size_t k = 0; k < rank; ++k) {
    const std::uint32_t d = detail::get_u32(p + 8 + 4 * k);
    out.dims.push_back(d);
    if (d != 0 && count > std::numeric_limits<std::size_t>::max() / d / 8)
      throw FormatError("SCIT dims overflow");
    count *= d;
  }
  const std::size_t esize = dtype_size(out.dtype);
  const std::size_t payload = bytes.size() - header;
  if (payload < count * esize)
    throw FormatError("SCIT payload truncated: expected " + std::to_string(count * esize) + " bytes, got " +
                      std::to_string(payload));
  if (payload > count * esize)
    throw FormatError("SCIT payload has " + std::to_string(payload - count * esize) + " trailing bytes");

  out.values.resize(count);
  const unsigned char* q = p + header;
  for (std::size_t k = 0; k < count; ++k) {
    switch (out.dtype) {
    case DType::f64:
      out.values[k] = std::bit_cast<double>(detail::get_u64(q + 8 * k));
      break;
    case DType::f32:
      out.values[k] = static_cast<double>(std::bit_cast<float>(detail::get_u32(q + 4 * k)));
      break;
    case DType::u8:
      out.values[k] = scale_u8 ? q[k] / 255.0 : static_cast<double>(q[k]);
      break;
    }
  }
  return out;
}

inline Tensor3 to_cube(TensorData data)
{
  const Dims3 d = data.dims.size() == 3 ? Dims3{data.dims[0], data.dims[1], data.dims[2]}
                                        : Dims3{data.dims[0], data.dims[1], 1};
  return Tensor3(d, std::move(data.values));
}

inline Frame to_frame(TensorData data)
{
  if (data.dims.size() == 3 && data.dims[2] != 1)
    throw DimensionError("expected a 2D frame, file holds " + std::to_string(data.dims[2]) + " frames");
  return Frame(Dims2{data.dims[0], data.dims[1]}, std::move(data.values));
}

inline std::string read_file_bytes(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw FormatError("write failed for " + path.string());
}

inline TensorData read_tensor(const std::filesystem::path& path, bool scale_u8 = true)
{
  return decode_tensor(read_file_bytes(path), scale_u8);
}

/// Rank-2 files load as single-frame cubes.
inline Tensor3 read_cube(const std::filesystem::path& path, bool scale_u8 = true)
{
  return to_cube(read_tensor(path, scale_u8));
}

inline Frame read_frame(const std::filesystem::path& path, bool scale_u8 = true)
{
  return to_frame(read_tensor(path, scale_u8));
}

inline void write_tensor(const std::filesystem::path& path, const Tensor3& t, DType dtype = DType::f64)
{
  write_file_bytes(path, encode_tensor(t, dtype));
}

inline void write_tensor(const std::filesystem::path& path, const Frame& f, DType dtype = DType::f64)
{
  write_file_bytes(path, encode_tensor(f, dtype));
}

} // namespace pnpsci
