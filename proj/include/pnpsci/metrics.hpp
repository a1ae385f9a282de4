#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "pnpsci/tensor.hpp"

namespace pnpsci {

/// Reported PSNR when the two frames are identical (or closer than that).
inline constexpr double kPsnrCap = 100.0;

inline double mse(std::span<const double> ref, std::span<const double> test)
{
  if (ref.size() != test.size())
    throw DimensionError("mse of inputs with different sizes");
  if (ref.empty())
    return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double d = ref[k] - test[k];
    s += d * d;
  }
  return s / static_cast<double>(ref.size());
}

/// 10 log10(peak^2 / MSE), capped at 100 dB.
inline double psnr(const Frame& ref, const Frame& test, double peak = 1.0)
{
  if (ref.dims() != test.dims())
    throw DimensionError("psnr of frames " + to_string(ref.dims()) + " and " + to_string(test.dims()));
  const double e = mse(ref.values(), test.values());
  if (e == 0.0)
    return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / e));
}

struct SsimParams
{
  std::size_t window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Normalized 1D Gaussian taps; the 2D window is their outer product.
inline std::vector<double> ssim_taps(const SsimParams& p)
{
  std::vector<double> g(p.window);
  const double c = 0.5 * static_cast<double>(p.window - 1);
  double sum = 0.0;
  for (std::size_t t = 0; t < p.window; ++t) {
    const double d = static_cast<double>(t) - c;
    g[t] = std::exp(-d * d / (2.0 * p.gaussian_sigma * p.gaussian_sigma));
    sum += g[t];
  }
  for (double& v : g)
    v /= sum;
  return g;
}

/// Mean SSIM over every fully-contained window position (no padding, no downsampling).
inline double ssim(const Frame& ref, const Frame& test, const SsimParams& p = {})
{
  if (ref.dims() != test.dims())
    throw DimensionError("ssim of frames " + to_string(ref.dims()) + " and " + to_string(test.dims()));
  if (ref.rows() < p.window || ref.cols() < p.window)
    throw DimensionError("ssim needs frames of at least " + std::to_string(p.window) + "x" +
                         std::to_string(p.window) + ", got " + to_string(ref.dims()));

  const std::vector<double> g = ssim_taps(p);
  const std::size_t w = p.window;
  const std::size_t rows = ref.rows(), cols = ref.cols();
  const std::size_t orow = rows - w + 1, ocol = cols - w + 1;

  // Horizontal then vertical valid filtering of x, y, x^2, y^2, xy.
  std::array<std::vector<double>, 5> h;
  for (auto& v : h)
    v.assign(rows * ocol, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < ocol; ++j) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t t = 0; t < w; ++t) {
        const double a = ref(i, j + t), b = test(i, j + t), wt = g[t];
        sx += wt * a;
        sy += wt * b;
        sxx += wt * a * a;
        syy += wt * b * b;
        sxy += wt * a * b;
      }
      const std::size_t k = i * ocol + j;
      h[0][k] = sx;
      h[1][k] = sy;
      h[2][k] = sxx;
      h[3][k] = syy;
      h[4][k] = sxy;
    }

  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < orow; ++i)
    for (std::size_t j = 0; j < ocol; ++j) {
      std::array<double, 5> m{};
      for (std::size_t t = 0; t < w; ++t)
        for (std::size_t q = 0; q < 5; ++q)
          m[q] += g[t] * h[q][(i + t) * ocol + j];
      const double mx = m[0], my = m[1];
      const double vx = m[2] - mx * mx;
      const double vy = m[3] - my * my;
      const double cxy = m[4] - mx * my;
      total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  return total / static_cast<double>(orow * ocol);
}

struct QualityReport
{
  std::vector<double> per_frame_psnr;
  std::vector<double> per_frame_ssim; // NaN for frames smaller than the SSIM window
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double runtime_seconds = 0.0;
};

/// Per-frame PSNR/SSIM and their plain means. PSNR is averaged in dB, not
/// through a pooled MSE.
inline QualityReport evaluate(const VideoCube& ref, const VideoCube& test, double runtime_seconds = 0.0)
{
  if (ref.dims() != test.dims())
    throw DimensionError("evaluate of cubes " + to_string(ref.dims()) + " and " + to_string(test.dims()));
  QualityReport r;
  r.runtime_seconds = runtime_seconds;
  const SsimParams sp;
  const bool ssim_ok = ref.dims().nx >= sp.window && ref.dims().ny >= sp.window;
  for (std::size_t b = 0; b < ref.frame_count(); ++b) {
    const Frame a = ref.frame(b), t = test.frame(b);
    r.per_frame_psnr.push_back(psnr(a, t));
    r.per_frame_ssim.push_back(ssim_ok ? ssim(a, t, sp) : std::numeric_limits<double>::quiet_NaN());
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v)
      s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  r.mean_psnr = mean(r.per_frame_psnr);
  r.mean_ssim = mean(r.per_frame_ssim);
  return r;
}

/// Mean per-frame PSNR of a whole cube.
inline double mean_psnr(const VideoCube& ref, const VideoCube& test)
{
  if (ref.dims() != test.dims())
    throw DimensionError("mean_psnr of cubes " + to_string(ref.dims()) + " and " + to_string(test.dims()));
  double s = 0.0;
  for (std::size_t b = 0; b < ref.frame_count(); ++b)
    s += psnr(ref.frame(b), test.frame(b));
  return s / static_cast<double>(ref.frame_count());
}

} // namespace pnpsci
