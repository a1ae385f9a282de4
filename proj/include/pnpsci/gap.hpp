#pragma once

// Plug-and-play generalized alternating projection.
//
// Each iteration projects the current prior estimate v onto the affine set
// {x : Hx = y} and then denoises the projection with strength sigma_k = sqrt(lambda_k):
//
//   x_{k+1} = v_k + H^T (HH^T)^{-1} (y - H v_k)
//   v_{k+1} = D_{sigma_k}(x_{k+1})
//
// lambda is either multiplied by xi every iteration (monotone) or only when the
// relative change Delta_{k+1} fails to drop below eta * Delta_k (adaptive).

#include <cmath>
#include <optional>

#include "pnpsci/solver_common.hpp"

namespace pnpsci {

enum class LambdaSchedule
{
  monotone,
  adaptive,
};

inline std::string to_string(LambdaSchedule m)
{
  return m == LambdaSchedule::monotone ? "monotone" : "adaptive";
}

struct GapConfig
{
  double lambda0 = 1.0;
  LambdaSchedule schedule_mode = LambdaSchedule::adaptive;
  double xi = 0.9;
  double eta = 0.8;
  int max_iters = 60;
  DenoiserSchedule denoiser_schedule;
  InitMode init_mode = InitMode::adjoint_scaled;
  std::optional<VideoCube> initial; // used with InitMode::provided
  double sigma_floor = kDefaultSigmaFloor;

  void validate() const
  {
    if (!(lambda0 > 0.0))
      throw ConfigError("gap lambda0 must be positive");
    if (!(xi > 0.0 && xi < 1.0))
      throw ConfigError("gap xi must lie in (0, 1)");
    if (!(eta >= 0.0 && eta < 1.0))
      throw ConfigError("gap eta must lie in [0, 1)");
    if (max_iters < 1)
      throw ConfigError("gap max_iters must be >= 1");
    if (!(sigma_floor >= 0.0))
      throw ConfigError("sigma floor must be non-negative");
    denoiser_schedule.validate();
    if (denoiser_schedule.total_iterations() != max_iters)
      throw ConfigError("denoiser schedule covers " + std::to_string(denoiser_schedule.total_iterations()) +
                        " iterations but max_iters is " + std::to_string(max_iters));
  }
};

/// Euclidean projection of v onto {x : Hx = y}:
/// x_b(j) = v_b(j) + C_b(j) (y(j) - sum_b' C_b'(j) v_b'(j)) / R_j.
inline VideoCube gap_project(const SensingOperator& op, const VideoCube& v, const Frame& y)
{
  op.require_assumption1();
  op.check_cube(v);
  op.check_frame(y);
  const Frame hv = op.forward(v);
  Frame w(y.dims());
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = (y[k] - hv[k]) / op.R()[k];
  VideoCube x = v;
  const MaskCube& c = op.masks();
  for (std::size_t b = 0; b < c.frame_count(); ++b) {
    auto cb = c.frame_values(b);
    auto xb = x.frame_values(b);
    for (std::size_t k = 0; k < cb.size(); ++k)
      xb[k] += cb[k] * w[k];
  }
  return x;
}

struct SolveResult
{
  VideoCube x;
  SolverTrace trace;
};

/// Runs cfg.max_iters iterations and returns the last projected iterate
/// (so Hx = y up to rounding) with the per-iteration trace. When `ground_truth`
/// is given each record carries the mean per-frame PSNR of x_k.
inline SolveResult gap_solve(const SensingOperator& op, const Frame& y, const GapConfig& cfg,
                             const VideoCube* ground_truth = nullptr)
{
  cfg.validate();
  op.require_assumption1();
  op.check_frame(y);
  if (ground_truth)
    op.check_cube(*ground_truth);

  const auto t0 = detail::Clock::now();
  const double root_nb = std::sqrt(static_cast<double>(op.dims().size()));

  VideoCube v = initial_estimate(op, y, cfg.init_mode, cfg.initial);
  VideoCube x_prev = v;
  double lambda = cfg.lambda0;
  std::optional<double> delta_prev;

  SolveResult out;
  out.trace.records.reserve(static_cast<std::size_t>(cfg.max_iters));
  for (int k = 1; k <= cfg.max_iters; ++k) {
    VideoCube x = gap_project(op, v, y);
    const DenoiserSpec& spec = cfg.denoiser_schedule.at(k - 1);
    const double sigma = std::max(std::sqrt(lambda), cfg.sigma_floor);
    VideoCube v_next = detail::denoise_at(spec, x, sigma, k);

    IterationRecord r;
    r.k = k;
    r.penalty = lambda;
    r.sigma = sigma;
    r.step_norm = distance(x.values(), x_prev.values());
    r.step_v = distance(v_next.values(), v.values());
    r.delta = (r.step_norm + r.step_v) / root_nb;
    r.feasibility = feasibility_residual(op, x, y);
    r.primal_residual = distance(x.values(), v_next.values());
    r.denoiser = spec.name();
    if (ground_truth)
      r.psnr = mean_psnr(*ground_truth, x);
    out.trace.records.push_back(r);

    if (cfg.schedule_mode == LambdaSchedule::monotone || !delta_prev || r.delta >= cfg.eta * *delta_prev)
      lambda *= cfg.xi;
    delta_prev = r.delta;

    x_prev = std::move(x);
    v = std::move(v_next);
  }
  out.x = std::move(x_prev);
  out.trace.wall_seconds = detail::seconds_since(t0);
  return out;
}

/// Checks ||x_{k+1} - x_k||^2 <= sigma_k^2 n B C (1 + 1e-9) for every pair of
/// consecutive records, where sigma_k is the strength that produced v_k. A
/// rounding allowance of 1e-24 per entry keeps C = 0 runs meaningful.
inline bool verify_step_bound(const SolverTrace& trace, double bound_constant, std::size_t n, std::size_t frames)
{
  const double nb = static_cast<double>(n) * static_cast<double>(frames);
  for (std::size_t k = 1; k < trace.records.size(); ++k) {
    const double s = trace.records[k - 1].sigma;
    const double step = trace.records[k].step_norm;
    if (step * step > s * s * nb * bound_constant * (1.0 + 1e-9) + 1e-24 * nb)
      return false;
  }
  return true;
}

struct EnergyIdentity
{
  double lhs = 0.0; // ||P(v) - x||^2
  double rhs = 0.0; // ||v - x||^2 - ||R^{-1/2} H (v - x)||^2
  double rel_err = 0.0;
};

/// Compares both sides of the projection energy identity for a feasible x
/// (Hx = y): the projection of v moves it to within
/// ||v - x||^2 - ||R^{-1/2} H (v - x)||^2 of x, squared.
inline EnergyIdentity verify_energy_identity(const SensingOperator& op, const Frame& y, const VideoCube& x_feasible,
                                             const VideoCube& v)
{
  op.check_cube(v);
  if (feasibility_residual(op, x_feasible, y) > 1e-10)
    throw Error("energy identity needs a feasible x (Hx = y)");
  const VideoCube px = gap_project(op, v, y);
  EnergyIdentity e;
  const double d_proj = distance(px.values(), x_feasible.values());
  e.lhs = d_proj * d_proj;

  const VideoCube diff = v - x_feasible;
  const Frame hd = op.forward(diff);
  double weighted = 0.0;
  for (std::size_t k = 0; k < hd.size(); ++k)
    weighted += hd[k] * hd[k] / op.R()[k];
  const double dn = norm2(diff.values());
  e.rhs = dn * dn - weighted;

  const double scale = std::max(std::abs(e.lhs), std::abs(e.rhs));
  e.rel_err = scale > 0.0 ? std::abs(e.lhs - e.rhs) / scale : 0.0;
  return e;
}

/// Same check with y = H x_feasible.
inline EnergyIdentity verify_energy_identity(const SensingOperator& op, const VideoCube& x_feasible,
                                             const VideoCube& v)
{
  return verify_energy_identity(op, op.forward(x_feasible), x_feasible, v);
}

} // namespace pnpsci
