#pragma once

// Experiment grids: every (dataset, B, solver) cell simulates a measurement,
// reconstructs it and reports mean PSNR/SSIM and runtime.
//
// Suite file (JSON):
//
//   {
//     "datasets": [
//       { "name": "shapes", "synthetic": "moving_shapes", "nx": 64, "ny": 64, "seed": 0 },
//       { "name": "kobe", "file": "kobe.scit" }          // first B frames are used
//     ],
//     "masks": { "kind": "bernoulli", "p1": 0.5, "seed": 0 },   // or { "file": ... }
//     "B": [8, 16, 24],
//     "noise": { "sigma": 0, "seed": 0 },
//     "solvers": [ { "label": "gap-tv", "solver": "gap", ... }, ... ]
//   }
//
// Solver entries take the solver keys of a run config plus an optional label.
// Synthetic generators: moving_shapes, smooth_drift, soft_gray.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <thread>
#include <tuple>

#include "pnpsci/config.hpp"
#include "pnpsci/metrics.hpp"
#include "pnpsci/synthetic.hpp"

namespace pnpsci {

struct BenchDataset
{
  std::string name;
  std::optional<std::filesystem::path> file;
  std::string synthetic = "moving_shapes";
  std::size_t nx = 64, ny = 64;
  std::uint64_t seed = 0;
};

struct BenchSolver
{
  std::string label;
  SolverConfig config;
  std::vector<DenoiserEntry> denoisers;
};

struct BenchSuite
{
  std::vector<BenchDataset> datasets;
  MaskSource masks;
  std::vector<std::size_t> frames; // the B list
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  std::vector<BenchSolver> solvers;
};

struct BenchRow
{
  std::string dataset;
  std::string solver;
  std::string denoiser;
  std::size_t frames = 0;
  double mean_psnr = std::numeric_limits<double>::quiet_NaN();
  double mean_ssim = std::numeric_limits<double>::quiet_NaN();
  double runtime_s = std::numeric_limits<double>::quiet_NaN();
  std::string error; // empty on success
};

inline constexpr const char* kBenchCsvHeader = "dataset,solver,denoiser,B,mean_psnr,mean_ssim,runtime_s";

namespace detail {

inline void require_csv_safe(const std::string& s, const std::string& where)
{
  if (s.find_first_of(",\"\r\n") != std::string::npos)
    throw ConfigError(where + " must not contain commas, quotes or line breaks");
}

} // namespace detail

inline BenchSuite parse_bench_suite(const Json& j)
{
  using namespace detail;
  reject_unknown(j, {"datasets", "masks", "B", "noise", "solvers"}, "suite");
  BenchSuite s;

  const Json datasets = j.value("datasets", Json());
  if (!datasets.is_array() || datasets.empty())
    throw ConfigError("suite.datasets must be a non-empty array");
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const std::string where = "datasets[" + std::to_string(k) + "]";
    const Json& d = datasets[k];
    reject_unknown(d, {"name", "file", "synthetic", "nx", "ny", "seed"}, where);
    BenchDataset ds;
    ds.name = get_string(d, "name", "", where);
    if (ds.name.empty())
      throw ConfigError(where + ".name is required");
    require_csv_safe(ds.name, where + ".name");
    if (d.contains("file")) {
      if (d.contains("synthetic") || d.contains("nx") || d.contains("ny") || d.contains("seed"))
        throw ConfigError(where + ": file datasets take no generator keys");
      ds.file = get_string(d, "file", "", where);
    } else {
      ds.synthetic = get_string(d, "synthetic", ds.synthetic, where);
      if (ds.synthetic != "moving_shapes" && ds.synthetic != "smooth_drift" && ds.synthetic != "soft_gray")
        throw ConfigError(where + ": unknown synthetic generator '" + ds.synthetic + "'");
      const auto nx = get_integer(d, "nx", 64, where), ny = get_integer(d, "ny", 64, where);
      if (nx < 1 || ny < 1)
        throw ConfigError(where + ": nx and ny must be positive");
      ds.nx = static_cast<std::size_t>(nx);
      ds.ny = static_cast<std::size_t>(ny);
      ds.seed = get_seed(d, "seed", 0, where);
    }
    s.datasets.push_back(ds);
  }

  s.masks = parse_mask_source(j.value("masks", Json::object()));
  if (s.masks.generator.frames)
    throw ConfigError("suite masks take their frame count from the B list");

  const Json bs = j.value("B", Json());
  if (!bs.is_array() || bs.empty())
    throw ConfigError("suite.B must be a non-empty array of positive integers");
  for (const Json& b : bs) {
    if (!b.is_number_integer() || b.get<std::int64_t>() < 1)
      throw ConfigError("suite.B must be a non-empty array of positive integers");
    s.frames.push_back(b.get<std::size_t>());
  }

  if (j.contains("noise")) {
    const Json& n = j.at("noise");
    reject_unknown(n, {"sigma", "seed"}, "noise");
    s.noise_sigma = get_number(n, "sigma", 0.0, "noise");
    if (!(s.noise_sigma >= 0.0))
      throw ConfigError("noise.sigma must be non-negative");
    s.noise_seed = get_seed(n, "seed", 0, "noise");
  }

  const Json solvers = j.value("solvers", Json());
  if (!solvers.is_array() || solvers.empty())
    throw ConfigError("suite.solvers must be a non-empty array");
  for (const Json& e : solvers) {
    auto [cfg, entries] = parse_solver_section(e, {"label"});
    require_csv_safe(get_string(e, "label", "", "solver"), "solver label");
    BenchSolver bs_entry{get_string(e, "label", solver_name(cfg), "solver"), std::move(cfg), std::move(entries)};
    s.solvers.push_back(std::move(bs_entry));
  }
  return s;
}

inline BenchSuite load_bench_suite(const std::filesystem::path& path)
{
  std::string text;
  try {
    text = read_file_bytes(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return parse_bench_suite(parse_json_text(text, path.string()));
}

/// Worker count: SCI_PNP_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
inline std::size_t bench_threads()
{
  if (const char* env = std::getenv("SCI_PNP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

inline VideoCube bench_video(const BenchDataset& ds, std::size_t frames)
{
  if (ds.file) {
    const VideoCube all = read_cube(*ds.file);
    if (all.frame_count() < frames)
      throw DimensionError("dataset " + ds.name + " has " + std::to_string(all.frame_count()) + " frames, B = " +
                           std::to_string(frames) + " requested");
    VideoCube v(Dims3{all.dims().nx, all.dims().ny, frames});
    for (std::size_t b = 0; b < frames; ++b)
      v.set_frame(b, all.frame(b));
    return v;
  }
  const Dims3 dims{ds.nx, ds.ny, frames};
  if (ds.synthetic == "smooth_drift")
    return synthetic::smooth_drift(dims, ds.seed);
  if (ds.synthetic == "soft_gray")
    return synthetic::soft_gray(dims);
  return synthetic::moving_shapes(dims, ds.seed);
}

/// One grid cell. Throws on failure.
inline BenchRow run_bench_cell(const BenchSuite& suite, const BenchDataset& ds, std::size_t frames,
                               const BenchSolver& solver, const SolverConfig& built)
{
  BenchRow row;
  row.dataset = ds.name;
  row.solver = solver.label;
  row.denoiser = denoiser_schedule(built).label();
  row.frames = frames;
  const VideoCube truth = bench_video(ds, frames);
  MaskCube masks;
  if (suite.masks.file) {
    const MaskCube all = read_cube(*suite.masks.file);
    if (all.dims().frame_dims() != truth.dims().frame_dims() || all.frame_count() < frames)
      throw DimensionError("mask file dims " + to_string(all.dims()) + " do not cover " + to_string(truth.dims()));
    masks = MaskCube(truth.dims());
    for (std::size_t b = 0; b < frames; ++b)
      masks.set_frame(b, all.frame(b));
  } else {
    masks = resolve_masks(suite.masks, truth.dims().frame_dims(), frames);
  }
  const SensingOperator op(masks);
  op.require_assumption1();
  const Frame y = add_noise(op.forward(truth), suite.noise_sigma, suite.noise_seed);

  const auto t0 = detail::Clock::now();
  const SolveResult r = solve(op, y, built);
  row.runtime_s = detail::seconds_since(t0);
  const QualityReport q = evaluate(truth, r.x, row.runtime_s);
  row.mean_psnr = q.mean_psnr;
  row.mean_ssim = q.mean_ssim;
  return row;
}

/// Runs every cell, `threads` at a time (0 = bench_threads()). Failed cells
/// keep NaN metrics and carry their error text. Rows come back sorted by
/// (dataset, solver, denoiser, B) whatever the completion order.
inline std::vector<BenchRow> run_bench(const BenchSuite& suite, std::size_t threads = 0)
{
  struct Cell
  {
    const BenchDataset* ds;
    std::size_t frames;
    std::size_t solver;
  };
  std::vector<Cell> cells;
  for (const BenchDataset& ds : suite.datasets)
    for (std::size_t b : suite.frames)
      for (std::size_t s = 0; s < suite.solvers.size(); ++s)
        cells.push_back({&ds, b, s});

  // Denoisers (and plugin processes) are built once per solver entry.
  std::vector<std::optional<SolverConfig>> built(suite.solvers.size());
  std::vector<std::string> build_errors(suite.solvers.size());
  for (std::size_t s = 0; s < suite.solvers.size(); ++s) {
    try {
      built[s] = build_solver(suite.solvers[s].config, suite.solvers[s].denoisers);
    } catch (const std::exception& e) {
      build_errors[s] = e.what();
    }
  }

  std::vector<BenchRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const Cell& c = cells[k];
      const BenchSolver& solver = suite.solvers[c.solver];
      std::string label;
      for (const DenoiserEntry& e : solver.denoisers)
        label += (label.empty() ? "" : "+") + e.name;
      BenchRow fallback;
      fallback.dataset = c.ds->name;
      fallback.solver = solver.label;
      fallback.denoiser = label;
      fallback.frames = c.frames;
      if (!built[c.solver]) {
        fallback.error = build_errors[c.solver];
        rows[k] = fallback;
        continue;
      }
      try {
        rows[k] = run_bench_cell(suite, *c.ds, c.frames, solver, *built[c.solver]);
      } catch (const std::exception& e) {
        fallback.error = e.what();
        rows[k] = fallback;
      }
    }
  };

  const std::size_t n = std::min(threads ? threads : bench_threads(), std::max<std::size_t>(1, cells.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t)
      pool.emplace_back(worker);
  }

  std::sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.dataset, a.solver, a.denoiser, a.frames) < std::tie(b.dataset, b.solver, b.denoiser, b.frames);
  });
  return rows;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows)
{
  const auto num = [](double v, const char* fmt) {
    if (std::isnan(v))
      return std::string("nan");
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  os << kBenchCsvHeader << '\n';
  for (const BenchRow& r : rows)
    os << r.dataset << ',' << r.solver << ',' << r.denoiser << ',' << r.frames << ',' << num(r.mean_psnr, "%.6f")
       << ',' << num(r.mean_ssim, "%.6f") << ',' << num(r.runtime_s, "%.4f") << '\n';
}

} // namespace pnpsci
