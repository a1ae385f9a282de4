#pragma once

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pnpsci/tensor.hpp"

namespace pnpsci {

/// One solver iteration. `penalty` is lambda_k for GAP and rho_k for ADMM.
struct IterationRecord
{
  int k = 0;                 // 1-based iteration
  double penalty = 0.0;      // lambda_k (GAP) or rho_k (ADMM) used in this iteration
  double sigma = 0.0;        // denoiser strength used in this iteration
  double delta = 0.0;        // (||x_k - x_{k-1}|| + ||v_k - v_{k-1}||) / sqrt(nB)
  double feasibility = 0.0;  // ||H x_k - y|| / ||y||
  double step_norm = 0.0;    // ||x_k - x_{k-1}||
  double step_v = 0.0;       // ||v_k - v_{k-1}||
  double step_u = 0.0;       // ||u_k - u_{k-1}|| (ADMM, unscaled dual)
  double primal_residual = 0.0; // ||x_k - v_k||
  std::optional<double> psnr;   // mean per-frame PSNR of x_k against ground truth
  std::string denoiser;
};

struct SolverTrace
{
  std::vector<IterationRecord> records;
  double wall_seconds = 0.0;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  const IterationRecord& back() const { return records.back(); }
};

inline constexpr const char* kTraceCsvHeader = "k,lambda,sigma,delta,feasibility,step_norm,psnr";

inline std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Per-iteration CSV; the `lambda` column carries rho_k for ADMM traces and
/// `psnr` is empty when no ground truth was supplied.
inline void write_trace_csv(std::ostream& os, const SolverTrace& trace)
{
  os << kTraceCsvHeader << '\n';
  for (const IterationRecord& r : trace.records) {
    os << r.k << ',' << format_double(r.penalty) << ',' << format_double(r.sigma) << ','
       << format_double(r.delta) << ',' << format_double(r.feasibility) << ',' << format_double(r.step_norm)
       << ',';
    if (r.psnr)
      os << format_double(*r.psnr);
    os << '\n';
  }
}

} // namespace pnpsci
