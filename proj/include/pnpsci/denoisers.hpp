#pragma once

// Denoisers D_sigma plugged into the GAP and ADMM loops.
//
// A denoiser is "bounded" with constant C when
//     (1 / N) ||D_sigma(x) - x||^2 <= sigma^2 C
// for every input of N values. The constant is attached to a DenoiserSpec;
// verify_bounded() estimates it empirically for denoisers that have no
// closed-form one.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pnpsci/tensor.hpp"

namespace pnpsci {

class Denoiser
{
public:
  virtual ~Denoiser() = default;

  virtual std::string name() const = 0;
  /// True when the denoiser treats each 2D frame independently.
  virtual bool is_framewise() const { return true; }
  virtual Tensor3 apply(const Tensor3& x, double sigma) const = 0;
};

/// Returns its input untouched, including values outside [0, 1]. C = 0.
class IdentityDenoiser final : public Denoiser
{
public:
  std::string name() const override { return "identity"; }
  Tensor3 apply(const Tensor3& x, double) const override { return x; }
};

/// Projection onto [0, 1]^N.
class ClipDenoiser final : public Denoiser
{
public:
  std::string name() const override { return "clip"; }
  Tensor3 apply(const Tensor3& x, double) const override { return clipped(x); }
};

struct GaussianParams
{
  double width_per_sigma = 2.0; // spatial kernel std (pixels) per unit of sigma
  double truncate = 4.0;        // kernel radius in kernel stds
  bool clip = true;
};

/// Separable 2D Gaussian low-pass per frame, replicated borders.
///
/// Kernel std s = width_per_sigma * sigma, radius ceil(truncate * s), weights
/// exp(-t^2 / (2 s^2)) normalized to sum 1. Radius 0 degenerates to the identity.
/// Input and output are clipped to [0, 1] unless `clip` is false.
class GaussianDenoiser final : public Denoiser
{
public:
  explicit GaussianDenoiser(GaussianParams p = {}) : params_(p) {}

  std::string name() const override { return "gaussian"; }
  const GaussianParams& params() const noexcept { return params_; }

  static std::vector<double> kernel(double s, double truncate)
  {
    const auto radius = s > 0.0 ? static_cast<std::size_t>(std::ceil(truncate * s)) : 0;
    std::vector<double> k(2 * radius + 1, 1.0);
    if (radius == 0)
      return k;
    double sum = 0.0;
    for (std::size_t t = 0; t < k.size(); ++t) {
      const double d = static_cast<double>(t) - static_cast<double>(radius);
      k[t] = std::exp(-d * d / (2.0 * s * s));
      sum += k[t];
    }
    for (double& w : k)
      w /= sum;
    return k;
  }

  Tensor3 apply(const Tensor3& x, double sigma) const override
  {
    Tensor3 out = params_.clip ? clipped(x) : x;
    const std::vector<double> k = kernel(params_.width_per_sigma * sigma, params_.truncate);
    if (k.size() == 1)
      return out;
    const Dims3 d = x.dims();
    const auto r = static_cast<std::ptrdiff_t>(k.size() / 2);
    const auto rows = static_cast<std::ptrdiff_t>(d.nx);
    const auto cols = static_cast<std::ptrdiff_t>(d.ny);
    std::vector<double> tmp(d.frame_size());
    for (std::size_t b = 0; b < d.frames; ++b) {
      auto f = out.frame_values(b);
      for (std::ptrdiff_t i = 0; i < rows; ++i)
        for (std::ptrdiff_t j = 0; j < cols; ++j) {
          double acc = 0.0;
          for (std::ptrdiff_t t = -r; t <= r; ++t)
            acc += k[t + r] * f[i * cols + std::clamp<std::ptrdiff_t>(j + t, 0, cols - 1)];
          tmp[i * cols + j] = acc;
        }
      for (std::ptrdiff_t i = 0; i < rows; ++i)
        for (std::ptrdiff_t j = 0; j < cols; ++j) {
          double acc = 0.0;
          for (std::ptrdiff_t t = -r; t <= r; ++t)
            acc += k[t + r] * tmp[std::clamp<std::ptrdiff_t>(i + t, 0, rows - 1) * cols + j];
          f[i * cols + j] = acc;
        }
    }
    return params_.clip ? clipped(std::move(out)) : out;
  }

private:
  GaussianParams params_;
};

// ---------------------------------------------------------------------------
// Total variation

/// Anisotropic ROF objective 1/2 ||u - f||^2 + tau (sum |u_{i,j+1} - u_{i,j}| + sum |u_{i+1,j} - u_{i,j}|).
inline double rof_objective(const Frame& u, const Frame& f, double tau)
{
  const std::size_t rows = u.rows(), cols = u.cols();
  double fid = 0.0, tv = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = u(i, j) - f(i, j);
      fid += d * d;
      if (j + 1 < cols)
        tv += std::abs(u(i, j + 1) - u(i, j));
      if (i + 1 < rows)
        tv += std::abs(u(i + 1, j) - u(i, j));
    }
  return 0.5 * fid + tau * tv;
}

/// Chambolle-type dual projection for the anisotropic ROF model.
///
/// The dual field p = (ph, pv) lives on forward differences and is kept in the
/// box |p| <= 1; the primal estimate is u = f - tau D^T p. Each inner iteration
/// takes a projected gradient step of size 1/8 (|D|^2 <= 8 on a 2D grid). The
/// returned primal estimate is only replaced when the ROF objective does not
/// increase, so `objective_trace` (if given) is non-increasing; its first entry
/// is the objective of u = f.
inline Frame tv_denoise(const Frame& f, double tau, int inner_iters, std::vector<double>* objective_trace = nullptr)
{
  if (inner_iters < 1)
    throw ConfigError("tv_denoise needs at least one inner iteration");
  if (!(tau >= 0.0))
    throw ConfigError("tv_denoise weight must be non-negative");
  if (objective_trace)
    objective_trace->assign(1, rof_objective(f, f, tau));
  if (tau == 0.0)
    return f;

  const std::size_t rows = f.rows(), cols = f.cols(), n = f.size();
  std::vector<double> ph(n, 0.0), pv(n, 0.0);
  Frame u = f, best = f;
  double best_obj = rof_objective(f, f, tau);
  const double step = 1.0 / (8.0 * tau);

  for (int it = 0; it < inner_iters; ++it) {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t k = i * cols + j;
        if (j + 1 < cols)
          ph[k] = std::clamp(ph[k] + step * (u[k + 1] - u[k]), -1.0, 1.0);
        if (i + 1 < rows)
          pv[k] = std::clamp(pv[k] + step * (u[k + cols] - u[k]), -1.0, 1.0);
      }
    // u = f - tau D^T p, with (D^T p)_k = ph[k-1] - ph[k] + pv[k-cols] - pv[k].
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t k = i * cols + j;
        double dtp = -ph[k] - pv[k];
        if (j > 0)
          dtp += ph[k - 1];
        if (i > 0)
          dtp += pv[k - cols];
        u[k] = f[k] - tau * dtp;
      }
    const double obj = rof_objective(u, f, tau);
    if (obj <= best_obj) {
      best = u;
      best_obj = obj;
    }
    if (objective_trace)
      objective_trace->push_back(best_obj);
  }
  return best;
}

struct TvParams
{
  double weight = 1.0; // tau = weight * sigma^2
  int inner_iters = 5;
  bool clip = true;
};

/// Frame-wise anisotropic TV denoiser (the prior of GAP-TV).
class TvDenoiser final : public Denoiser
{
public:
  explicit TvDenoiser(TvParams p = {}) : params_(p)
  {
    if (params_.inner_iters < 1)
      throw ConfigError("tv inner_iters must be >= 1");
    if (!(params_.weight >= 0.0))
      throw ConfigError("tv weight must be non-negative");
  }

  std::string name() const override { return "tv"; }
  const TvParams& params() const noexcept { return params_; }

  Tensor3 apply(const Tensor3& x, double sigma) const override
  {
    const Tensor3 in = params_.clip ? clipped(x) : x;
    const double tau = params_.weight * sigma * sigma;
    Tensor3 out(x.dims());
    for (std::size_t b = 0; b < x.frame_count(); ++b)
      out.set_frame(b, tv_denoise(in.frame(b), tau, params_.inner_iters));
    return params_.clip ? clipped(std::move(out)) : out;
  }

private:
  TvParams params_;
};

// ---------------------------------------------------------------------------
// Specs and schedules

struct DenoiserSpec
{
  std::shared_ptr<const Denoiser> denoiser;
  /// Declared bound constant C, if known.
  std::optional<double> bound_constant;

  std::string name() const { return denoiser ? denoiser->name() : "<none>"; }
};

inline DenoiserSpec make_identity_spec()
{
  return {std::make_shared<IdentityDenoiser>(), 0.0};
}

/// D_sigma(x) with argument checks. Errors from the denoiser propagate.
inline Tensor3 denoise(const DenoiserSpec& spec, const Tensor3& x, double sigma)
{
  if (!spec.denoiser)
    throw ConfigError("denoiser spec has no denoiser");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ConfigError("denoiser sigma must be finite and non-negative");
  Tensor3 out = spec.denoiser->apply(x, sigma);
  if (out.dims() != x.dims())
    throw DimensionError(spec.name() + " returned dims " + to_string(out.dims()) + " for input " +
                         to_string(x.dims()));
  return out;
}

/// Sequential use of several denoisers: the first K_1 iterations with the
/// first entry, the next K_2 with the second, and so on.
class DenoiserSchedule
{
public:
  struct Stage
  {
    DenoiserSpec spec;
    int iterations = 0;
  };

  DenoiserSchedule() = default;
  explicit DenoiserSchedule(std::vector<Stage> stages) : stages_(std::move(stages)) { validate(); }

  static DenoiserSchedule single(DenoiserSpec spec, int iterations)
  {
    return DenoiserSchedule({Stage{std::move(spec), iterations}});
  }

  void validate() const
  {
    if (stages_.empty())
      throw ConfigError("denoiser schedule is empty");
    for (const Stage& s : stages_) {
      if (!s.spec.denoiser)
        throw ConfigError("denoiser schedule stage has no denoiser");
      if (s.iterations < 1)
        throw ConfigError("denoiser schedule stage '" + s.spec.name() + "' has no iterations");
    }
  }

  int total_iterations() const
  {
    int t = 0;
    for (const Stage& s : stages_)
      t += s.iterations;
    return t;
  }

  /// Stage in charge of 0-based iteration k.
  const DenoiserSpec& at(int k) const
  {
    for (const Stage& s : stages_) {
      if (k < s.iterations)
        return s.spec;
      k -= s.iterations;
    }
    throw ConfigError("iteration beyond the denoiser schedule");
  }

  const std::vector<Stage>& stages() const noexcept { return stages_; }
  bool empty() const noexcept { return stages_.empty(); }

  /// Largest declared C across stages, or nullopt if any stage has none.
  std::optional<double> bound_constant() const
  {
    std::optional<double> c = 0.0;
    for (const Stage& s : stages_) {
      if (!s.spec.bound_constant)
        return std::nullopt;
      c = std::max(*c, *s.spec.bound_constant);
    }
    return c;
  }

  /// Short label such as "tv" or "gaussian+tv".
  std::string label() const
  {
    std::string out;
    for (const Stage& s : stages_) {
      if (!out.empty())
        out += "+";
      out += s.spec.name();
    }
    return out;
  }

private:
  std::vector<Stage> stages_;
};

struct BoundEstimate
{
  double estimate = 0.0;           // max over trials of ||D(x) - x||^2 / (N sigma^2)
  bool within_declared = true;     // estimate <= declared C (true when none declared)
};

/// Empirical bound constant from `trials` uniform [0,1] cubes per sigma.
inline BoundEstimate verify_bounded(const DenoiserSpec& spec, const std::vector<double>& sigmas, int trials,
                                    std::uint64_t seed, Dims3 dims = {16, 16, 4})
{
  if (trials < 1)
    throw ConfigError("verify_bounded needs at least one trial");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  BoundEstimate out;
  for (double sigma : sigmas) {
    if (!(sigma > 0.0))
      throw ConfigError("verify_bounded sigmas must be positive");
    for (int t = 0; t < trials; ++t) {
      Tensor3 x(dims);
      for (double& v : x.values())
        v = u01(rng);
      const Tensor3 y = denoise(spec, x, sigma);
      const double d = distance(y.values(), x.values());
      out.estimate = std::max(out.estimate, d * d / (static_cast<double>(x.size()) * sigma * sigma));
    }
  }
  if (spec.bound_constant)
    out.within_declared = out.estimate <= *spec.bound_constant * (1.0 + 1e-9);
  return out;
}

} // namespace pnpsci
