#pragma once

// Bayer-mosaic colour video.
//
// The sensor carries an RGGB filter: R at (even, even), G1 at (even, odd),
// G2 at (odd, even), B at (odd, odd). Masks modulate every sensor pixel, so the
// snapshot is split into four half-resolution sub-problems (one per filter
// site), each is reconstructed as a grey video, the results are interleaved
// back into a mosaic video and finally demosaiced frame by frame.

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <future>
#include <string>

#include "pnpsci/metrics.hpp"
#include "pnpsci/solver.hpp"

namespace pnpsci {

enum BayerChannel : std::size_t
{
  kBayerR = 0,
  kBayerG1 = 1,
  kBayerG2 = 2,
  kBayerB = 3,
};

inline constexpr std::array<const char*, 4> kBayerNames{"R", "G1", "G2", "B"};
inline constexpr std::array<std::array<std::size_t, 2>, 4> kBayerOffsets{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

/// Colour video: three cubes (R, G, B) of identical dims.
struct ColorCube
{
  std::array<VideoCube, 3> rgb;

  Dims3 dims() const { return rgb[0].dims(); }
};

struct RgbFrame
{
  Frame r, g, b;
};

namespace detail {

inline void require_even(Dims2 d)
{
  if (d.nx % 2 != 0 || d.ny % 2 != 0 || d.nx == 0 || d.ny == 0)
    throw DimensionError("Bayer mosaic needs even, non-zero dims, got " + to_string(d));
}

} // namespace detail

inline std::array<Frame, 4> bayer_split(const Frame& mosaic)
{
  detail::require_even(mosaic.dims());
  const Dims2 half{mosaic.rows() / 2, mosaic.cols() / 2};
  std::array<Frame, 4> out{Frame(half), Frame(half), Frame(half), Frame(half)};
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < half.nx; ++i)
      for (std::size_t j = 0; j < half.ny; ++j)
        out[c](i, j) = mosaic(2 * i + kBayerOffsets[c][0], 2 * j + kBayerOffsets[c][1]);
  return out;
}

inline std::array<Tensor3, 4> bayer_split(const Tensor3& mosaic)
{
  const Dims3 d = mosaic.dims();
  detail::require_even(d.frame_dims());
  std::array<Tensor3, 4> out;
  for (auto& c : out)
    c = Tensor3(Dims3{d.nx / 2, d.ny / 2, d.frames});
  for (std::size_t b = 0; b < d.frames; ++b) {
    const auto parts = bayer_split(mosaic.frame(b));
    for (std::size_t c = 0; c < 4; ++c)
      out[c].set_frame(b, parts[c]);
  }
  return out;
}

inline Frame bayer_merge(const std::array<Frame, 4>& channels)
{
  const Dims2 half = channels[0].dims();
  for (const Frame& c : channels)
    if (c.dims() != half)
      throw DimensionError("Bayer channels have different dims");
  Frame mosaic(Dims2{2 * half.nx, 2 * half.ny});
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < half.nx; ++i)
      for (std::size_t j = 0; j < half.ny; ++j)
        mosaic(2 * i + kBayerOffsets[c][0], 2 * j + kBayerOffsets[c][1]) = channels[c](i, j);
  return mosaic;
}

inline Tensor3 bayer_merge(const std::array<Tensor3, 4>& channels)
{
  const Dims3 half = channels[0].dims();
  for (const Tensor3& c : channels)
    if (c.dims() != half)
      throw DimensionError("Bayer channel cubes have different dims");
  Tensor3 mosaic(Dims3{2 * half.nx, 2 * half.ny, half.frames});
  for (std::size_t b = 0; b < half.frames; ++b)
    mosaic.set_frame(b, bayer_merge(std::array<Frame, 4>{channels[0].frame(b), channels[1].frame(b),
                                                         channels[2].frame(b), channels[3].frame(b)}));
  return mosaic;
}

/// Bilinear RGGB demosaicing. Samples at their own sites are copied; missing
/// colours average the 2 or 4 nearest sites of that colour. Out-of-range
/// neighbours are mirrored about the border pixel (-1 -> 1, n -> n-2), which
/// keeps the Bayer parity of the substituted sample.
inline RgbFrame demosaic_bilinear(const Frame& mosaic)
{
  detail::require_even(mosaic.dims());
  const auto rows = static_cast<std::ptrdiff_t>(mosaic.rows());
  const auto cols = static_cast<std::ptrdiff_t>(mosaic.cols());
  const auto reflect = [](std::ptrdiff_t k, std::ptrdiff_t n) {
    if (k < 0)
      return -k;
    if (k >= n)
      return 2 * (n - 1) - k;
    return k;
  };
  const auto at = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    return mosaic(static_cast<std::size_t>(reflect(i, rows)), static_cast<std::size_t>(reflect(j, cols)));
  };

  RgbFrame out{Frame(mosaic.dims()), Frame(mosaic.dims()), Frame(mosaic.dims())};
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    for (std::ptrdiff_t j = 0; j < cols; ++j) {
      const double self = at(i, j);
      const double cross = 0.25 * (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1));
      const double diag = 0.25 * (at(i - 1, j - 1) + at(i - 1, j + 1) + at(i + 1, j - 1) + at(i + 1, j + 1));
      const double horiz = 0.5 * (at(i, j - 1) + at(i, j + 1));
      const double vert = 0.5 * (at(i - 1, j) + at(i + 1, j));
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      const bool even_row = i % 2 == 0, even_col = j % 2 == 0;
      if (even_row && even_col) { // R
        out.r(ui, uj) = self;
        out.g(ui, uj) = cross;
        out.b(ui, uj) = diag;
      } else if (even_row) { // G1, red row
        out.r(ui, uj) = horiz;
        out.g(ui, uj) = self;
        out.b(ui, uj) = vert;
      } else if (even_col) { // G2, blue row
        out.r(ui, uj) = vert;
        out.g(ui, uj) = self;
        out.b(ui, uj) = horiz;
      } else { // B
        out.r(ui, uj) = diag;
        out.g(ui, uj) = cross;
        out.b(ui, uj) = self;
      }
    }
  return out;
}

inline ColorCube demosaic_video(const Tensor3& mosaic)
{
  ColorCube out;
  for (auto& c : out.rgb)
    c = Tensor3(mosaic.dims());
  for (std::size_t b = 0; b < mosaic.frame_count(); ++b) {
    const RgbFrame f = demosaic_bilinear(mosaic.frame(b));
    out.rgb[0].set_frame(b, f.r);
    out.rgb[1].set_frame(b, f.g);
    out.rgb[2].set_frame(b, f.b);
  }
  return out;
}

/// Simulation convention for ordinary RGB video: every RGB pixel becomes one
/// 2x2 RGGB cell (G duplicated), so the mosaic has twice the width and height.
inline Tensor3 rgb_to_mosaic(const ColorCube& rgb)
{
  const Dims3 d = rgb.dims();
  for (const auto& c : rgb.rgb)
    if (c.dims() != d)
      throw DimensionError("RGB channel cubes have different dims");
  return bayer_merge(std::array<Tensor3, 4>{rgb.rgb[0], rgb.rgb[1], rgb.rgb[1], rgb.rgb[2]});
}

struct ColorOptions
{
  /// Order in which the four channel solves are launched.
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  bool parallel = true;
};

struct ColorResult
{
  ColorCube rgb;                       // demosaiced output
  Tensor3 mosaic;                      // re-interleaved reconstruction
  std::array<Tensor3, 4> channels;     // R, G1, G2, B reconstructions
  std::array<SolverTrace, 4> traces;
};

/// Splits the mosaic snapshot and masks into four RGGB sub-problems, solves
/// each with `cfg`, merges and demosaics. Channel failures are re-thrown with
/// the channel name.
inline ColorResult color_reconstruct(const Frame& measurement, const MaskCube& masks, const SolverConfig& cfg,
                                     const ColorOptions& opts = {}, const Tensor3* mosaic_truth = nullptr)
{
  if (masks.dims().frame_dims() != measurement.dims())
    throw DimensionError("mask dims " + to_string(masks.dims()) + " do not match measurement " +
                         to_string(measurement.dims()));
  const auto y_parts = bayer_split(measurement);
  const auto m_parts = bayer_split(masks);
  std::array<Tensor3, 4> truth_parts;
  if (mosaic_truth) {
    if (mosaic_truth->dims() != masks.dims())
      throw DimensionError("ground truth dims do not match masks");
    truth_parts = bayer_split(*mosaic_truth);
  }

  ColorResult out;
  const auto run = [&](std::size_t c) {
    try {
      const SensingOperator op(m_parts[c]);
      SolveResult r = solve(op, y_parts[c], cfg, mosaic_truth ? &truth_parts[c] : nullptr);
      out.channels[c] = std::move(r.x);
      out.traces[c] = std::move(r.trace);
    } catch (const std::exception& e) {
      throw Error(std::string("channel ") + kBayerNames[c] + ": " + e.what());
    }
  };

  if (opts.parallel) {
    std::array<std::future<void>, 4> jobs;
    for (std::size_t c : opts.order)
      jobs[c] = std::async(std::launch::async, run, c);
    std::exception_ptr first;
    for (std::size_t c : opts.order) {
      try {
        jobs[c].get();
      } catch (...) {
        if (!first)
          first = std::current_exception();
      }
    }
    if (first)
      std::rethrow_exception(first);
  } else {
    for (std::size_t c : opts.order)
      run(c);
  }

  out.mosaic = bayer_merge(out.channels);
  out.rgb = demosaic_video(out.mosaic);
  return out;
}

/// Quality on the four sub-channels before demosaicing: each channel gets its
/// own per-frame report, and the colour PSNR/SSIM are the means over channels.
struct ColorQuality
{
  std::array<QualityReport, 4> channels;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

inline ColorQuality evaluate_color(const Tensor3& mosaic_truth, const ColorResult& result)
{
  const auto truth = bayer_split(mosaic_truth);
  ColorQuality q;
  for (std::size_t c = 0; c < 4; ++c) {
    q.channels[c] = evaluate(truth[c], result.channels[c]);
    q.mean_psnr += q.channels[c].mean_psnr / 4.0;
    q.mean_ssim += q.channels[c].mean_ssim / 4.0;
  }
  return q;
}

/// How far a colour video is from neutral grey. `pixel` is the largest
/// |c - c'| over all pixels and channel pairs; `frame_mean` compares per-frame
/// channel means instead, i.e. a global colour cast.
struct ChannelDisparity
{
  double pixel = 0.0;
  double frame_mean = 0.0;
};

inline ChannelDisparity channel_disparity(const ColorCube& c)
{
  ChannelDisparity d;
  const auto& [r, g, b] = c.rgb;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double x = r.values()[k], y = g.values()[k], z = b.values()[k];
    d.pixel = std::max({d.pixel, std::abs(x - y), std::abs(y - z), std::abs(x - z)});
  }
  for (std::size_t f = 0; f < r.frame_count(); ++f) {
    std::array<double, 3> mean{};
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const auto vals = c.rgb[ch].frame_values(f);
      for (double v : vals)
        mean[ch] += v;
      mean[ch] /= static_cast<double>(vals.size());
    }
    d.frame_mean = std::max({d.frame_mean, std::abs(mean[0] - mean[1]), std::abs(mean[1] - mean[2]),
                             std::abs(mean[0] - mean[2])});
  }
  return d;
}

} // namespace pnpsci
