#pragma once

// 8-bit greyscale PNG frames through libpng's simplified API.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pnpsci/tensor.hpp"

namespace pnpsci::tools {

/// Any PNG is converted to 8-bit grey by libpng; values are scaled to [0, 1].
inline Frame read_png_gray(const std::filesystem::path& path)
{
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw FormatError("cannot read PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw FormatError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  Frame f(Dims2{img.height, img.width});
  for (std::size_t k = 0; k < buf.size(); ++k)
    f[k] = buf[k] / 255.0;
  return f;
}

/// Values are clamped to [0, 1] and rounded to 8 bits.
inline void write_png_gray(const std::filesystem::path& path, const Frame& f)
{
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(f.cols());
  img.height = static_cast<png_uint_32>(f.rows());
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(f.size());
  for (std::size_t k = 0; k < buf.size(); ++k)
    buf[k] = static_cast<std::uint8_t>(std::lround(std::clamp(f[k], 0.0, 1.0) * 255.0));
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr))
    throw FormatError("cannot write PNG " + path.string() + ": " + img.message);
}

} // namespace pnpsci::tools
