#pragma once

// Plug-and-play ADMM for f(x) = 1/2 ||y - Hx||^2:
//
//   x_{k+1} = argmin_x f(x) + rho/2 ||x - (v_k - u_k / rho)||^2
//   v_{k+1} = D_{sigma_k}(x_{k+1} + u_k / rho)
//   u_{k+1} = u_k + rho (x_{k+1} - v_{k+1})
//
// with rho_{k+1} = gamma rho_k and sigma_k = sqrt(lambda / rho_k).
//
// Internally the dual is kept scaled, ubar = u / rho. The unscaled updates
// above become ubar <- ubar + (x - v), and since u itself does not change when
// rho grows, ubar is divided by gamma whenever rho is multiplied by it.

#include <algorithm>
#include <cmath>
#include <optional>

#include "pnpsci/solver_common.hpp"

namespace pnpsci {

struct AdmmConfig
{
  double rho0 = 1.0;
  double gamma = 1.05;
  double lambda = 1.0;
  int max_iters = 60;
  DenoiserSchedule denoiser_schedule;
  InitMode init_mode = InitMode::adjoint_scaled;
  std::optional<VideoCube> initial;
  double sigma_floor = kDefaultSigmaFloor;
  /// Accept gamma < 1. Only for negative-control runs; sigma_k then grows.
  bool permit_decreasing_rho = false;

  void validate() const
  {
    if (!(rho0 > 0.0))
      throw ConfigError("admm rho0 must be positive");
    if (!(gamma > 0.0))
      throw ConfigError("admm gamma must be positive");
    if (gamma < 1.0 && !permit_decreasing_rho)
      throw ConfigError("admm gamma must be >= 1");
    if (!(lambda > 0.0))
      throw ConfigError("admm lambda must be positive");
    if (max_iters < 1)
      throw ConfigError("admm max_iters must be >= 1");
    if (!(sigma_floor >= 0.0))
      throw ConfigError("sigma floor must be non-negative");
    denoiser_schedule.validate();
    if (denoiser_schedule.total_iterations() != max_iters)
      throw ConfigError("denoiser schedule covers " + std::to_string(denoiser_schedule.total_iterations()) +
                        " iterations but max_iters is " + std::to_string(max_iters));
  }
};

/// Exact minimizer of 1/2 ||y - Hx||^2 + rho/2 ||x - theta||^2, i.e.
/// (H^T H + rho I)^{-1} (H^T y + rho theta). With HH^T = diag(R), Woodbury
/// reduces it to x = theta + H^T [(y - H theta) ./ (rho + R)].
inline VideoCube admm_x_update(const SensingOperator& op, const Frame& y, const VideoCube& theta, double rho)
{
  if (!(rho > 0.0))
    throw ConfigError("admm rho must be positive");
  op.check_cube(theta);
  op.check_frame(y);
  const Frame ht = op.forward(theta);
  Frame w(y.dims());
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = (y[k] - ht[k]) / (rho + op.R()[k]);
  VideoCube x = theta;
  const MaskCube& c = op.masks();
  for (std::size_t b = 0; b < c.frame_count(); ++b) {
    auto cb = c.frame_values(b);
    auto xb = x.frame_values(b);
    for (std::size_t k = 0; k < cb.size(); ++k)
      xb[k] += cb[k] * w[k];
  }
  return x;
}

struct AdmmResult
{
  VideoCube x;
  VideoCube v;
  VideoCube u; // unscaled dual
  SolverTrace trace;
};

inline AdmmResult admm_solve(const SensingOperator& op, const Frame& y, const AdmmConfig& cfg,
                             const VideoCube* ground_truth = nullptr)
{
  cfg.validate();
  op.check_frame(y);
  if (ground_truth)
    op.check_cube(*ground_truth);

  const auto t0 = detail::Clock::now();
  const double root_nb = std::sqrt(static_cast<double>(op.dims().size()));

  VideoCube v = initial_estimate(op, y, cfg.init_mode, cfg.initial);
  VideoCube x = v;
  VideoCube ubar(op.dims());
  double rho = cfg.rho0;

  AdmmResult out;
  out.trace.records.reserve(static_cast<std::size_t>(cfg.max_iters));
  for (int k = 1; k <= cfg.max_iters; ++k) {
    const double sigma = std::max(std::sqrt(cfg.lambda / rho), cfg.sigma_floor);

    VideoCube x_next = admm_x_update(op, y, v - ubar, rho);
    const DenoiserSpec& spec = cfg.denoiser_schedule.at(k - 1);
    VideoCube v_next = detail::denoise_at(spec, x_next + ubar, sigma, k);
    const VideoCube primal = x_next - v_next;

    IterationRecord r;
    r.k = k;
    r.penalty = rho;
    r.sigma = sigma;
    r.step_norm = distance(x_next.values(), x.values());
    r.step_v = distance(v_next.values(), v.values());
    r.primal_residual = norm2(primal.values());
    // u_{k+1} - u_k = rho (x_{k+1} - v_{k+1})
    r.step_u = rho * r.primal_residual;
    r.delta = (r.step_norm + r.step_v) / root_nb;
    r.feasibility = feasibility_residual(op, x_next, y);
    r.denoiser = spec.name();
    if (ground_truth)
      r.psnr = mean_psnr(*ground_truth, x_next);
    out.trace.records.push_back(r);

    ubar = ubar + primal;
    x = std::move(x_next);
    v = std::move(v_next);

    rho *= cfg.gamma;
    for (double& val : ubar.values())
      val /= cfg.gamma;
  }

  out.u = ubar;
  for (double& val : out.u.values())
    val *= rho;
  out.x = std::move(x);
  out.v = std::move(v);
  out.trace.wall_seconds = detail::seconds_since(t0);
  return out;
}

struct FixedPointResiduals
{
  double x = 0.0;
  double v = 0.0;
  double u = 0.0;

  bool below(double threshold) const { return x < threshold && v < threshold && u < threshold; }
};

/// Largest successive-iterate distances over the last 10% of the trace (at
/// least one record).
inline FixedPointResiduals fixed_point_residuals(const SolverTrace& trace)
{
  if (trace.records.size() < 10)
    throw Error("fixed_point_residuals needs at least 10 iterations, got " + std::to_string(trace.records.size()));
  const std::size_t tail = std::max<std::size_t>(1, trace.records.size() / 10);
  FixedPointResiduals r;
  for (std::size_t k = trace.records.size() - tail; k < trace.records.size(); ++k) {
    const IterationRecord& rec = trace.records[k];
    r.x = std::max(r.x, rec.step_norm);
    r.v = std::max(r.v, rec.step_v);
    r.u = std::max(r.u, rec.step_u);
  }
  return r;
}

} // namespace pnpsci
