#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>

#include "pnpsci/denoisers.hpp"
#include "pnpsci/metrics.hpp"
#include "pnpsci/sensing.hpp"
#include "pnpsci/trace.hpp"

namespace pnpsci {

enum class InitMode
{
  adjoint_scaled, // v0 = H^T (y ./ R)
  zeros,
  provided,
};

/// Default lower bound on sigma_k (one 8-bit grey level). Set to 0 to disable.
inline constexpr double kDefaultSigmaFloor = 1.0 / 255.0;

/// ||Hx - y|| / ||y||, or the absolute residual when y = 0.
inline double feasibility_residual(const SensingOperator& op, const VideoCube& x, const Frame& y)
{
  const Frame hx = op.forward(x);
  const double r = distance(hx.values(), y.values());
  const double ny = norm2(y.values());
  return ny > 0.0 ? r / ny : r;
}

/// Normalized back-projection H^T (y ./ R). Feasible by construction when R > 0.
inline VideoCube adjoint_scaled(const SensingOperator& op, const Frame& y)
{
  op.require_assumption1();
  op.check_frame(y);
  Frame w(y.dims());
  for (std::size_t k = 0; k < y.size(); ++k)
    w[k] = y[k] / op.R()[k];
  return op.adjoint(w);
}

inline VideoCube initial_estimate(const SensingOperator& op, const Frame& y, InitMode mode,
                                  const std::optional<VideoCube>& provided)
{
  switch (mode) {
  case InitMode::adjoint_scaled:
    return adjoint_scaled(op, y);
  case InitMode::zeros:
    return VideoCube(op.dims());
  case InitMode::provided:
    if (!provided)
      throw ConfigError("init_mode 'provided' without an initial cube");
    op.check_cube(*provided);
    return *provided;
  }
  throw ConfigError("unknown init mode");
}

inline std::string to_string(InitMode m)
{
  switch (m) {
  case InitMode::adjoint_scaled:
    return "adjoint_scaled";
  case InitMode::zeros:
    return "zeros";
  case InitMode::provided:
    return "provided";
  }
  return "?";
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Runs the denoiser of iteration k, re-throwing failures with the iteration tag.
inline VideoCube denoise_at(const DenoiserSpec& spec, const VideoCube& x, double sigma, int k)
{
  try {
    return denoise(spec, x, sigma);
  } catch (const SolverError&) {
    throw;
  } catch (const std::exception& e) {
    throw SolverError(k, spec.name() + " denoiser failed: " + e.what());
  }
}

} // namespace detail

} // namespace pnpsci
