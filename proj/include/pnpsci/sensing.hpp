#pragma once

// Coded-exposure sensing: Y = sum_b C_b .* X_b (+ Z).
//
// With D_b = diag(Vec(C_b)) the operator is H = [D_1, ..., D_B], so everything
// here is applied matrix-free from the mask cube. HH^T = diag(R) with
// R_j = sum_b C_b(j)^2, which is what makes the GAP projection and the ADMM
// x-update elementwise.

#include <cmath>
#include <cstdint>
#include <random>
#include <variant>

#include "pnpsci/tensor.hpp"

namespace pnpsci {

using MaskCube = Tensor3;

struct BernoulliMasks
{
  double p1 = 0.5; // probability of an open (1) pixel
};

/// CACTI-style masks: frame b is the window of `base` starting `b * shift` rows down.
struct ShiftedMasks
{
  Frame base;
  std::size_t shift = 1;
};

/// N(0, sigma^2) entries clipped to [0, 1]. Only meant for tests of the gradient bound.
struct GaussianMasks
{
  double sigma = 1.0;
};

using MaskKind = std::variant<BernoulliMasks, ShiftedMasks, GaussianMasks>;

namespace detail {

inline bool column_is_zero(const MaskCube& m, std::size_t i, std::size_t j)
{
  for (std::size_t b = 0; b < m.frame_count(); ++b)
    if (m(i, j, b) != 0.0)
      return false;
  return true;
}

} // namespace detail

/// Deterministic given the seed. Any pixel whose mask column is all zero is
/// repaired (resampled, or for shifted masks one base pixel is opened) so that
/// every R_j > 0 on return.
inline MaskCube generate_masks(Dims3 dims, const MaskKind& kind, std::uint64_t seed)
{
  if (dims.size() == 0)
    throw ConfigError("mask dims must be positive, got " + to_string(dims));

  std::mt19937_64 rng(seed);
  MaskCube m(dims);

  if (const auto* bern = std::get_if<BernoulliMasks>(&kind)) {
    if (!(bern->p1 > 0.0 && bern->p1 < 1.0))
      throw ConfigError("bernoulli p1 must lie in (0, 1), got " + std::to_string(bern->p1));
    std::bernoulli_distribution draw(bern->p1);
    for (double& v : m.values())
      v = draw(rng) ? 1.0 : 0.0;
    for (std::size_t i = 0; i < dims.nx; ++i)
      for (std::size_t j = 0; j < dims.ny; ++j)
        while (detail::column_is_zero(m, i, j))
          for (std::size_t b = 0; b < dims.frames; ++b)
            m(i, j, b) = draw(rng) ? 1.0 : 0.0;
    return m;
  }

  if (const auto* gauss = std::get_if<GaussianMasks>(&kind)) {
    if (!(gauss->sigma > 0.0))
      throw ConfigError("gaussian mask sigma must be positive");
    std::normal_distribution<double> draw(0.0, gauss->sigma);
    auto sample = [&] { return std::clamp(draw(rng), 0.0, 1.0); };
    for (double& v : m.values())
      v = sample();
    for (std::size_t i = 0; i < dims.nx; ++i)
      for (std::size_t j = 0; j < dims.ny; ++j)
        while (detail::column_is_zero(m, i, j))
          for (std::size_t b = 0; b < dims.frames; ++b)
            m(i, j, b) = sample();
    return m;
  }

  const auto& shifted = std::get<ShiftedMasks>(kind);
  const std::size_t needed_rows = dims.nx + (dims.frames - 1) * shifted.shift;
  if (shifted.base.cols() != dims.ny || shifted.base.rows() < needed_rows)
    throw ConfigError("shifted masks need a base of at least " + std::to_string(needed_rows) + "x" +
                      std::to_string(dims.ny) + ", got " + to_string(shifted.base.dims()));
  Frame base = shifted.base;
  for (double v : base.values())
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError("shifted mask base values must lie in [0, 1]");
  std::uniform_int_distribution<std::size_t> pick(0, dims.frames - 1);
  for (std::size_t i = 0; i < dims.nx; ++i)
    for (std::size_t j = 0; j < dims.ny; ++j) {
      bool any = false;
      for (std::size_t b = 0; b < dims.frames && !any; ++b)
        any = base(i + b * shifted.shift, j) != 0.0;
      // Opening a base pixel only ever adds light, so it cannot break a column fixed earlier.
      if (!any)
        base(i + pick(rng) * shifted.shift, j) = 1.0;
    }
  for (std::size_t b = 0; b < dims.frames; ++b)
    for (std::size_t i = 0; i < dims.nx; ++i)
      for (std::size_t j = 0; j < dims.ny; ++j)
        m(i, j, b) = base(i + b * shifted.shift, j);
  return m;
}

/// Shifted masks cut from a bernoulli(p1) base drawn with the same seed.
inline MaskCube generate_shifted_masks(Dims3 dims, double p1, std::size_t shift, std::uint64_t seed)
{
  if (!(p1 > 0.0 && p1 < 1.0))
    throw ConfigError("bernoulli p1 must lie in (0, 1), got " + std::to_string(p1));
  if (dims.size() == 0)
    throw ConfigError("mask dims must be positive, got " + to_string(dims));
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution draw(p1);
  Frame base(Dims2{dims.nx + (dims.frames - 1) * shift, dims.ny});
  for (double& v : base.values())
    v = draw(rng) ? 1.0 : 0.0;
  return generate_masks(dims, ShiftedMasks{std::move(base), shift}, seed);
}

/// Scale masks so the largest entry is 1.
inline MaskCube normalize_masks(MaskCube m)
{
  double peak = 0.0;
  for (double v : m.values()) {
    if (v < 0.0 || !std::isfinite(v))
      throw ConfigError("masks must be finite and non-negative");
    peak = std::max(peak, v);
  }
  if (peak > 0.0)
    for (double& v : m.values())
      v /= peak;
  return m;
}

struct GramDiagonal
{
  Frame r;
  double r_max = 0.0;
  double r_min = 0.0;
};

namespace detail {

inline GramDiagonal gram_diagonal(const MaskCube& masks)
{
  const Dims3 d = masks.dims();
  GramDiagonal g{Frame(d.frame_dims()), 0.0, 0.0};
  for (std::size_t b = 0; b < d.frames; ++b) {
    auto c = masks.frame_values(b);
    for (std::size_t k = 0; k < c.size(); ++k)
      g.r[k] += c[k] * c[k];
  }
  const auto [lo, hi] = std::ranges::minmax_element(g.r.values());
  g.r_min = *lo;
  g.r_max = *hi;
  return g;
}

inline AssumptionViolation unexposed_pixel_error(const GramDiagonal& g)
{
  std::size_t count = 0, first = 0;
  for (std::size_t k = 0; k < g.r.size(); ++k)
    if (!(g.r[k] > 0.0) && count++ == 0)
      first = k;
  const Dims2 at{first / g.r.cols(), first % g.r.cols()};
  return AssumptionViolation(std::to_string(count) + " pixel(s) are never exposed by any mask (R_j = 0), first at " +
                             to_string(at));
}

} // namespace detail

/// R = diag(HH^T), R_j = sum_b C_b(j)^2, plus its extreme values.
/// Throws AssumptionViolation when some pixel is never exposed (R_min = 0).
inline GramDiagonal compute_R(const MaskCube& masks)
{
  if (masks.size() == 0)
    throw DimensionError("empty mask cube");
  GramDiagonal g = detail::gram_diagonal(masks);
  if (!(g.r_min > 0.0))
    throw detail::unexposed_pixel_error(g);
  return g;
}

class SensingOperator
{
public:
  /// Masks must lie in [0, 1]. An operator with R_min = 0 can still be built
  /// (the ADMM x-update does not need R > 0), but projection onto Hx = y will refuse it.
  explicit SensingOperator(MaskCube masks) : masks_(std::move(masks))
  {
    if (masks_.size() == 0)
      throw DimensionError("empty mask cube");
    for (double v : masks_.values())
      if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError("mask values must lie in [0, 1]; use normalize_masks first");
    gram_ = detail::gram_diagonal(masks_);
  }

  const MaskCube& masks() const noexcept { return masks_; }
  Dims3 dims() const noexcept { return masks_.dims(); }
  Dims2 measurement_dims() const noexcept { return masks_.dims().frame_dims(); }
  const Frame& R() const noexcept { return gram_.r; }
  double r_max() const noexcept { return gram_.r_max; }
  double r_min() const noexcept { return gram_.r_min; }
  bool satisfies_assumption1() const noexcept { return gram_.r_min > 0.0; }

  void require_assumption1() const
  {
    if (!satisfies_assumption1())
      throw detail::unexposed_pixel_error(gram_);
  }

  /// Hx: Y(j) = sum_b C_b(j) x_b(j).
  Frame forward(const VideoCube& x) const
  {
    check_cube(x);
    Frame y(measurement_dims());
    for (std::size_t b = 0; b < masks_.frame_count(); ++b) {
      auto c = masks_.frame_values(b);
      auto xb = x.frame_values(b);
      for (std::size_t k = 0; k < c.size(); ++k)
        y[k] += c[k] * xb[k];
    }
    return y;
  }

  /// H^T y: frame b is C_b .* y.
  VideoCube adjoint(const Frame& y) const
  {
    check_frame(y);
    VideoCube x(dims());
    for (std::size_t b = 0; b < masks_.frame_count(); ++b) {
      auto c = masks_.frame_values(b);
      auto xb = x.frame_values(b);
      for (std::size_t k = 0; k < c.size(); ++k)
        xb[k] = c[k] * y[k];
    }
    return x;
  }

  void check_cube(const VideoCube& x) const
  {
    if (x.dims() != dims())
      throw DimensionError("cube dims " + to_string(x.dims()) + " do not match masks " + to_string(dims()));
  }

  void check_frame(const Frame& y) const
  {
    if (y.dims() != measurement_dims())
      throw DimensionError("measurement dims " + to_string(y.dims()) + " do not match masks " +
                           to_string(measurement_dims()));
  }

private:
  MaskCube masks_;
  GramDiagonal gram_;
};

inline Frame forward(const SensingOperator& op, const VideoCube& x)
{
  return op.forward(x);
}

inline VideoCube adjoint(const SensingOperator& op, const Frame& y)
{
  return op.adjoint(y);
}

/// ||H^T H x||_2 / (B ||x||_2); 0 for x = 0. At most 1 for masks in [0, 1].
inline double gradient_bound_ratio(const SensingOperator& op, const VideoCube& x)
{
  const double nx = norm2(x.values());
  if (nx == 0.0)
    return 0.0;
  const VideoCube g = op.adjoint(op.forward(x));
  return norm2(g.values()) / (static_cast<double>(op.dims().frames) * nx);
}

/// Bounded-gradient check ||H^T H x||_2 <= B ||x||_2 (masks normalized to [0, 1]).
inline bool check_gradient_bound(const SensingOperator& op, const VideoCube& x)
{
  const VideoCube g = op.adjoint(op.forward(x));
  const double lhs = norm2(g.values());
  const double rhs = static_cast<double>(op.dims().frames) * norm2(x.values());
  return lhs <= rhs * (1.0 + 1e-12);
}

/// y + N(0, sigma^2) per pixel.
inline Frame add_noise(Frame y, double sigma, std::uint64_t seed)
{
  if (!(sigma >= 0.0))
    throw ConfigError("noise sigma must be non-negative");
  if (sigma == 0.0)
    return y;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : y.values())
    v += noise(rng);
  return y;
}

} // namespace pnpsci
