#pragma once

// Dense real frames and video cubes.
//
// Layout: a cube with dims (nx, ny, B) stores frame b as one contiguous block of
// nx*ny values, rows of length ny inside it. Element (i, j, b) therefore lives
// at b*nx*ny + i*ny + j, which is exactly Vec(X) = [Vec(X_1); ...; Vec(X_B)]
// with a row-major Vec of each frame. The flat storage *is* the vectorization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pnpsci/error.hpp"

namespace pnpsci {

struct Dims2
{
  std::size_t nx = 0; // rows
  std::size_t ny = 0; // columns

  std::size_t size() const noexcept { return nx * ny; }
  friend bool operator==(const Dims2&, const Dims2&) = default;
};

struct Dims3
{
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t frames = 0;

  Dims2 frame_dims() const noexcept { return {nx, ny}; }
  std::size_t frame_size() const noexcept { return nx * ny; }
  std::size_t size() const noexcept { return nx * ny * frames; }
  friend bool operator==(const Dims3&, const Dims3&) = default;
};

inline std::string to_string(const Dims2& d)
{
  return "(" + std::to_string(d.nx) + ", " + std::to_string(d.ny) + ")";
}

inline std::string to_string(const Dims3& d)
{
  return "(" + std::to_string(d.nx) + ", " + std::to_string(d.ny) + ", " + std::to_string(d.frames) + ")";
}

class Frame
{
public:
  Frame() = default;

  explicit Frame(Dims2 dims, double fill = 0.0) : dims_(dims), data_(dims.size(), fill) {}

  Frame(Dims2 dims, std::vector<double> data) : dims_(dims), data_(std::move(data))
  {
    if (data_.size() != dims_.size())
      throw DimensionError("frame data length " + std::to_string(data_.size()) + " does not match dims " +
                           to_string(dims_));
  }

  Dims2 dims() const noexcept { return dims_; }
  std::size_t rows() const noexcept { return dims_.nx; }
  std::size_t cols() const noexcept { return dims_.ny; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * dims_.ny + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dims_.ny + j]; }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  friend bool operator==(const Frame&, const Frame&) = default;

private:
  Dims2 dims_{};
  std::vector<double> data_;
};

class Tensor3
{
public:
  Tensor3() = default;

  explicit Tensor3(Dims3 dims, double fill = 0.0) : dims_(dims), data_(dims.size(), fill) {}

  Tensor3(Dims3 dims, std::vector<double> data) : dims_(dims), data_(std::move(data))
  {
    if (data_.size() != dims_.size())
      throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match dims " +
                           to_string(dims_));
  }

  Dims3 dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t frame_count() const noexcept { return dims_.frames; }

  double& operator()(std::size_t i, std::size_t j, std::size_t b)
  {
    return data_[b * dims_.frame_size() + i * dims_.ny + j];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t b) const
  {
    return data_[b * dims_.frame_size() + i * dims_.ny + j];
  }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  std::span<double> frame_values(std::size_t b)
  {
    return std::span<double>(data_).subspan(b * dims_.frame_size(), dims_.frame_size());
  }
  std::span<const double> frame_values(std::size_t b) const
  {
    return std::span<const double>(data_).subspan(b * dims_.frame_size(), dims_.frame_size());
  }

  Frame frame(std::size_t b) const
  {
    auto v = frame_values(b);
    return Frame(dims_.frame_dims(), std::vector<double>(v.begin(), v.end()));
  }

  void set_frame(std::size_t b, const Frame& f)
  {
    if (f.dims() != dims_.frame_dims())
      throw DimensionError("frame dims " + to_string(f.dims()) + " do not fit cube " + to_string(dims_));
    std::ranges::copy(f.values(), frame_values(b).begin());
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
  Dims3 dims_{};
  std::vector<double> data_;
};

using VideoCube = Tensor3;

/// Vec(X): frame blocks stacked in frame order, each block row-major.
inline std::vector<double> vectorize(const Tensor3& t)
{
  return {t.values().begin(), t.values().end()};
}

inline std::vector<double> vectorize(const Frame& f)
{
  return {f.values().begin(), f.values().end()};
}

inline Tensor3 devectorize(std::span<const double> v, Dims3 dims)
{
  if (v.size() != dims.size())
    throw DimensionError("cannot devectorize " + std::to_string(v.size()) + " values into dims " + to_string(dims));
  return Tensor3(dims, std::vector<double>(v.begin(), v.end()));
}

inline Tensor3 stack_frames(std::span<const Frame> frames)
{
  if (frames.empty())
    throw DimensionError("cannot stack zero frames");
  const Dims2 fd = frames.front().dims();
  Tensor3 out(Dims3{fd.nx, fd.ny, frames.size()});
  for (std::size_t b = 0; b < frames.size(); ++b)
    out.set_frame(b, frames[b]);
  return out;
}

// Small vector helpers shared by the solvers and checks. All operate on the
// flat storage, so they are the Euclidean quantities on Vec(.).

inline double dot(std::span<const double> a, std::span<const double> b)
{
  if (a.size() != b.size())
    throw DimensionError("dot of vectors with lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a)
{
  return std::sqrt(dot(a, a));
}

inline double distance(std::span<const double> a, std::span<const double> b)
{
  if (a.size() != b.size())
    throw DimensionError("distance between vectors of different lengths");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
  if (a.size() != b.size())
    throw DimensionError("max_abs_diff of vectors with different lengths");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline bool all_finite(std::span<const double> a)
{
  return std::ranges::all_of(a, [](double v) { return std::isfinite(v); });
}

template <typename T>
T clipped(T t, double lo = 0.0, double hi = 1.0)
{
  for (double& v : t.values())
    v = std::clamp(v, lo, hi);
  return t;
}

inline Tensor3 operator-(const Tensor3& a, const Tensor3& b)
{
  if (a.dims() != b.dims())
    throw DimensionError("subtracting cubes " + to_string(a.dims()) + " and " + to_string(b.dims()));
  Tensor3 out(a.dims());
  for (std::size_t k = 0; k < a.size(); ++k)
    out[k] = a[k] - b[k];
  return out;
}

inline Tensor3 operator+(const Tensor3& a, const Tensor3& b)
{
  if (a.dims() != b.dims())
    throw DimensionError("adding cubes " + to_string(a.dims()) + " and " + to_string(b.dims()));
  Tensor3 out(a.dims());
  for (std::size_t k = 0; k < a.size(); ++k)
    out[k] = a[k] + b[k];
  return out;
}

} // namespace pnpsci
