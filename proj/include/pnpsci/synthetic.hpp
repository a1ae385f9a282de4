#pragma once

// Deterministic synthetic videos for tests and benchmarks.

#include <cmath>
#include <cstdint>
#include <random>

#include "pnpsci/tensor.hpp"

namespace pnpsci::synthetic {

/// Smooth background plus a few flat rectangles and discs moving on straight
/// lines. Values lie in [0, 1]. Shape count, sizes, speeds and intensities are
/// drawn from `seed`; speeds are in pixels per frame relative to a 64-pixel
/// frame and scale with the frame size.
inline VideoCube moving_shapes(Dims3 dims, std::uint64_t seed = 0, int shape_count = 4)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double rows = static_cast<double>(dims.nx), cols = static_cast<double>(dims.ny);
  const double scale = std::min(rows, cols) / 64.0;

  struct Shape
  {
    bool disc;
    double r0, c0, vr, vc, half, level;
  };
  std::vector<Shape> shapes;
  for (int s = 0; s < shape_count; ++s) {
    Shape sh;
    sh.disc = (s % 2) == 1;
    sh.r0 = rows * (0.2 + 0.6 * u01(rng));
    sh.c0 = cols * (0.2 + 0.6 * u01(rng));
    sh.vr = scale * (u01(rng) * 2.0 - 1.0) * 1.5;
    sh.vc = scale * (u01(rng) * 2.0 - 1.0) * 1.5;
    sh.half = scale * (5.0 + 6.0 * u01(rng));
    sh.level = 0.15 + 0.8 * u01(rng);
    shapes.push_back(sh);
  }
  const double gr = 0.25 * u01(rng), gc = 0.25 * u01(rng);

  VideoCube v(dims);
  for (std::size_t b = 0; b < dims.frames; ++b) {
    const double t = static_cast<double>(b);
    for (std::size_t i = 0; i < dims.nx; ++i)
      for (std::size_t j = 0; j < dims.ny; ++j) {
        const double ri = static_cast<double>(i), cj = static_cast<double>(j);
        double val = 0.2 + gr * ri / rows + gc * cj / cols;
        for (const Shape& sh : shapes) {
          const double dr = ri - (sh.r0 + sh.vr * t), dc = cj - (sh.c0 + sh.vc * t);
          const bool inside = sh.disc ? dr * dr + dc * dc <= sh.half * sh.half
                                      : std::abs(dr) <= sh.half && std::abs(dc) <= sh.half;
          if (inside)
            val = sh.level;
        }
        v(i, j, b) = std::clamp(val, 0.0, 1.0);
      }
  }
  return v;
}

/// Slowly varying grey field with a drifting low-frequency pattern, in [0, 1].
inline VideoCube smooth_drift(Dims3 dims, std::uint64_t seed = 0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double phase_r = 6.283185307179586 * u01(rng), phase_c = 6.283185307179586 * u01(rng);
  const double rows = static_cast<double>(dims.nx), cols = static_cast<double>(dims.ny);
  VideoCube v(dims);
  for (std::size_t b = 0; b < dims.frames; ++b)
    for (std::size_t i = 0; i < dims.nx; ++i)
      for (std::size_t j = 0; j < dims.ny; ++j) {
        const double t = static_cast<double>(b) * 0.05;
        v(i, j, b) = 0.5 + 0.15 * std::sin(6.283185307179586 * static_cast<double>(i) / rows + phase_r + t) +
                     0.1 * std::cos(6.283185307179586 * static_cast<double>(j) / cols + phase_c - t);
      }
  return v;
}

/// Gentle grey field: a brightness ramp over time plus a half-period
/// sine-cosine bump that slides slowly. Spatial gradients stay small, so it
/// is a near-ideal input for TV and for bilinear demosaicing.
inline VideoCube soft_gray(Dims3 dims)
{
  const double pi = 3.141592653589793;
  const double rows = static_cast<double>(dims.nx), cols = static_cast<double>(dims.ny);
  const double step = dims.frames > 1 ? 0.35 / static_cast<double>(dims.frames - 1) : 0.0;
  VideoCube v(dims);
  for (std::size_t b = 0; b < dims.frames; ++b) {
    const double t = static_cast<double>(b);
    for (std::size_t i = 0; i < dims.nx; ++i)
      for (std::size_t j = 0; j < dims.ny; ++j)
        v(i, j, b) = 0.3 + step * t +
                     0.1 * std::sin(pi * static_cast<double>(i) / rows + 0.1 * t) *
                       std::cos(pi * static_cast<double>(j) / cols);
  }
  return v;
}

} // namespace pnpsci::synthetic
