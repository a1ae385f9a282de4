#pragma once

#include <string>
#include <variant>

#include "pnpsci/admm.hpp"
#include "pnpsci/gap.hpp"

namespace pnpsci {

using SolverConfig = std::variant<GapConfig, AdmmConfig>;

inline std::string solver_name(const SolverConfig& cfg)
{
  return std::holds_alternative<GapConfig>(cfg) ? "gap" : "admm";
}

inline const DenoiserSchedule& denoiser_schedule(const SolverConfig& cfg)
{
  return std::visit([](const auto& c) -> const DenoiserSchedule& { return c.denoiser_schedule; }, cfg);
}

inline int max_iters(const SolverConfig& cfg)
{
  return std::visit([](const auto& c) { return c.max_iters; }, cfg);
}

inline SolveResult solve(const SensingOperator& op, const Frame& y, const SolverConfig& cfg,
                         const VideoCube* ground_truth = nullptr)
{
  if (const auto* gap = std::get_if<GapConfig>(&cfg))
    return gap_solve(op, y, *gap, ground_truth);
  AdmmResult r = admm_solve(op, y, std::get<AdmmConfig>(cfg), ground_truth);
  return {std::move(r.x), std::move(r.trace)};
}

} // namespace pnpsci
