// scipnp: command-line front end for the pnpsci library.
//
//   scipnp mask gen     --nx --ny --B [--kind] [--p1] [--shift] [--sigma] --seed --out
//   scipnp synth        --kind --nx --ny --B [--seed] --out
//   scipnp simulate     --video --masks --noise-sigma --seed --out-measurement [--bayer]
//   scipnp reconstruct  --measurement --masks --config --out [--ground-truth] [--trace-csv] [--bayer]
//   scipnp bench        --suite --out-csv [--threads]
//   scipnp convert png-to-scit / scit-to-png
//
// Exit codes: 0 success, 1 runtime failure, 2 bad usage or config,
// 3 masks violate R_j > 0.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pnpsci/pnpsci.hpp"
#include "png_io.hpp"

namespace fs = std::filesystem;
using namespace pnpsci;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAssumption = 3;

std::ofstream open_text(const fs::path& p)
{
  std::ofstream out(p, std::ios::trunc);
  if (!out)
    throw FormatError("cannot write " + p.string());
  return out;
}

/// "trace.csv" + "R" -> "trace.R.csv"
fs::path with_tag(const fs::path& p, const std::string& tag)
{
  fs::path out = p;
  out.replace_filename(p.stem().string() + "." + tag + p.extension().string());
  return out;
}

Json report_json(const QualityReport& q)
{
  Json j;
  j["per_frame_psnr"] = q.per_frame_psnr;
  Json ssim = Json::array();
  for (double s : q.per_frame_ssim)
    ssim.push_back(std::isnan(s) ? Json() : Json(s));
  j["per_frame_ssim"] = ssim;
  j["mean_psnr"] = q.mean_psnr;
  j["mean_ssim"] = std::isnan(q.mean_ssim) ? Json() : Json(q.mean_ssim);
  j["runtime_seconds"] = q.runtime_seconds;
  return j;
}

// ---------------------------------------------------------------------------

struct MaskGenArgs
{
  std::size_t nx = 0, ny = 0, frames = 0;
  std::string kind = "bernoulli";
  double p1 = 0.5;
  std::size_t shift = 1;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string dtype = "f64";
};

int run_mask_gen(const MaskGenArgs& a)
{
  MaskSource src;
  src.generator.kind = a.kind;
  src.generator.p1 = a.p1;
  src.generator.shift = a.shift;
  src.generator.sigma = a.sigma;
  src.generator.seed = a.seed;
  if (a.kind != "bernoulli" && a.kind != "shifted" && a.kind != "gaussian")
    throw ConfigError("unknown mask kind '" + a.kind + "'");
  const MaskCube m = resolve_masks(src, Dims2{a.nx, a.ny}, a.frames);
  write_tensor(a.out, m, parse_dtype(a.dtype));
  return 0;
}

struct SynthArgs
{
  std::string kind = "moving_shapes";
  std::size_t nx = 0, ny = 0, frames = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string dtype = "f64";
};

int run_synth(const SynthArgs& a)
{
  BenchDataset ds;
  ds.name = "synth";
  ds.synthetic = a.kind;
  ds.nx = a.nx;
  ds.ny = a.ny;
  ds.seed = a.seed;
  write_tensor(a.out, bench_video(ds, a.frames), parse_dtype(a.dtype));
  return 0;
}

struct SimulateArgs
{
  std::string video, masks, config, out;
  std::optional<double> noise_sigma;
  std::optional<std::uint64_t> seed;
  bool bayer = false;
  std::string dtype = "f64";
};

int run_simulate(const SimulateArgs& a)
{
  std::optional<RunConfig> rc;
  if (!a.config.empty())
    rc = load_run_config(a.config);

  const VideoCube video = read_cube(a.video);
  if (a.bayer && (video.dims().nx % 2 != 0 || video.dims().ny % 2 != 0))
    throw DimensionError("--bayer needs a mosaic video with even dims, got " + to_string(video.dims()));

  MaskCube masks;
  if (!a.masks.empty())
    masks = read_cube(a.masks);
  else if (rc && rc->masks)
    masks = resolve_masks(*rc->masks, video.dims().frame_dims(), video.frame_count());
  else
    throw ConfigError("no masks: pass --masks or give a masks section in --config");

  const SensingOperator op(masks);
  op.check_cube(video);
  const double sigma = a.noise_sigma.value_or(rc ? rc->noise_sigma : 0.0);
  const std::uint64_t seed = a.seed.value_or(rc ? rc->noise_seed : 0);
  const Frame y = add_noise(op.forward(video), sigma, seed);
  write_tensor(a.out, y, parse_dtype(a.dtype));
  return 0;
}

struct ReconstructArgs
{
  std::string measurement, masks, config, out, ground_truth, trace_csv, report, out_rgb;
  bool bayer = false;
};

int run_reconstruct(const ReconstructArgs& a)
{
  const RunConfig rc = load_run_config(a.config);
  const auto pick = [](const std::string& flag, const std::optional<fs::path>& from_cfg) -> std::optional<fs::path> {
    if (!flag.empty())
      return fs::path(flag);
    return from_cfg;
  };
  const auto measurement_path = pick(a.measurement, rc.paths.measurement);
  const auto masks_path = pick(a.masks, rc.paths.masks);
  const auto out_path = pick(a.out, rc.paths.output);
  const auto truth_path = pick(a.ground_truth, rc.paths.ground_truth);
  const auto trace_path = pick(a.trace_csv, rc.paths.trace_csv);
  if (!measurement_path)
    throw ConfigError("no measurement: pass --measurement or set paths.measurement");
  if (!out_path)
    throw ConfigError("no output: pass --out or set paths.output");

  const Frame y = read_frame(*measurement_path);
  MaskCube masks;
  if (masks_path)
    masks = read_cube(*masks_path);
  else if (rc.masks)
    masks = resolve_masks(*rc.masks, y.dims());
  else
    throw ConfigError("no masks: pass --masks, set paths.masks or give a masks section");

  std::optional<VideoCube> truth;
  if (truth_path)
    truth = read_cube(*truth_path);

  SolverConfig cfg = build_solver(rc);
  if (rc.paths.initial)
    std::visit([&](auto& c) { c.initial = read_cube(*rc.paths.initial); }, cfg);

  // Assumption 1 is checked up front for both solvers: a pixel no mask ever
  // opens cannot be recovered, and GAP's projection is undefined there.
  const SensingOperator op(masks);
  op.check_frame(y);
  op.require_assumption1();

  if (a.bayer) {
    const ColorResult r = color_reconstruct(y, masks, cfg, {}, truth ? &*truth : nullptr);
    write_tensor(*out_path, r.mosaic);
    if (!a.out_rgb.empty()) {
      const fs::path base(a.out_rgb);
      write_tensor(with_tag(base, "r"), r.rgb.rgb[0]);
      write_tensor(with_tag(base, "g"), r.rgb.rgb[1]);
      write_tensor(with_tag(base, "b"), r.rgb.rgb[2]);
    }
    if (trace_path)
      for (std::size_t c = 0; c < 4; ++c) {
        auto os = open_text(with_tag(*trace_path, kBayerNames[c]));
        write_trace_csv(os, r.traces[c]);
      }
    if (truth && rc.metrics) {
      const ColorQuality q = evaluate_color(*truth, r);
      Json j;
      for (std::size_t c = 0; c < 4; ++c)
        j["channels"][kBayerNames[c]] = report_json(q.channels[c]);
      j["mean_psnr"] = q.mean_psnr;
      j["mean_ssim"] = q.mean_ssim;
      if (!a.report.empty())
        open_text(a.report) << j.dump(2) << '\n';
      std::cout << j.dump(2) << '\n';
    }
    return 0;
  }

  const SolveResult r = solve(op, y, cfg, truth ? &*truth : nullptr);
  write_tensor(*out_path, r.x);
  if (trace_path) {
    auto os = open_text(*trace_path);
    write_trace_csv(os, r.trace);
  }
  if (truth && rc.metrics) {
    const Json j = report_json(evaluate(*truth, r.x, r.trace.wall_seconds));
    if (!a.report.empty())
      open_text(a.report) << j.dump(2) << '\n';
    std::cout << j.dump(2) << '\n';
  }
  return 0;
}

struct BenchArgs
{
  std::string suite, out_csv;
  std::size_t threads = 0;
};

int run_bench_cmd(const BenchArgs& a)
{
  const BenchSuite suite = load_bench_suite(a.suite);
  const std::vector<BenchRow> rows = run_bench(suite, a.threads);
  auto os = open_text(a.out_csv);
  write_bench_csv(os, rows);
  int failed = 0;
  for (const BenchRow& r : rows)
    if (!r.error.empty()) {
      ++failed;
      std::cerr << "cell " << r.dataset << " / " << r.solver << " / B=" << r.frames << " failed: " << r.error
                << '\n';
    }
  return failed ? kExitRuntime : 0;
}

struct PngToScitArgs
{
  std::vector<std::string> inputs;
  std::string out, dtype = "u8";
};

int run_png_to_scit(const PngToScitArgs& a)
{
  std::vector<Frame> frames;
  for (const std::string& p : a.inputs)
    frames.push_back(tools::read_png_gray(p));
  for (const Frame& f : frames)
    if (f.dims() != frames.front().dims())
      throw DimensionError("PNG frames have different sizes");
  write_tensor(a.out, stack_frames(frames), parse_dtype(a.dtype));
  return 0;
}

struct ScitToPngArgs
{
  std::string input, prefix;
};

int run_scit_to_png(const ScitToPngArgs& a)
{
  const VideoCube v = read_cube(a.input);
  for (std::size_t b = 0; b < v.frame_count(); ++b) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_%03zu.png", b);
    tools::write_png_gray(a.prefix + suffix, v.frame(b));
  }
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Snapshot compressive imaging with plug-and-play GAP and ADMM"};
  app.require_subcommand(1);

  MaskGenArgs mg;
  auto* mask = app.add_subcommand("mask", "Mask utilities");
  mask->require_subcommand(1);
  auto* gen = mask->add_subcommand("gen", "Generate a seeded mask cube");
  gen->add_option("--nx", mg.nx, "Rows")->required()->check(CLI::PositiveNumber);
  gen->add_option("--ny", mg.ny, "Columns")->required()->check(CLI::PositiveNumber);
  gen->add_option("--B", mg.frames, "Frames per snapshot")->required()->check(CLI::PositiveNumber);
  gen->add_option("--kind", mg.kind, "bernoulli, shifted or gaussian")
    ->check(CLI::IsMember({"bernoulli", "shifted", "gaussian"}));
  gen->add_option("--p1", mg.p1, "Probability of an open pixel, in (0, 1)");
  gen->add_option("--shift", mg.shift, "Rows per frame for shifted masks");
  gen->add_option("--sigma", mg.sigma, "Std of gaussian masks");
  gen->add_option("--seed", mg.seed, "RNG seed")->required();
  gen->add_option("--out", mg.out, "Output SCIT file")->required();
  gen->add_option("--dtype", mg.dtype, "f32, f64 or u8")->check(CLI::IsMember({"f32", "f64", "u8"}));

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Write a synthetic test video");
  synth->add_option("--kind", sy.kind, "moving_shapes, smooth_drift or soft_gray")
    ->check(CLI::IsMember({"moving_shapes", "smooth_drift", "soft_gray"}));
  synth->add_option("--nx", sy.nx, "Rows")->required()->check(CLI::PositiveNumber);
  synth->add_option("--ny", sy.ny, "Columns")->required()->check(CLI::PositiveNumber);
  synth->add_option("--B", sy.frames, "Frames")->required()->check(CLI::PositiveNumber);
  synth->add_option("--seed", sy.seed, "Generator seed");
  synth->add_option("--out", sy.out, "Output SCIT file")->required();
  synth->add_option("--dtype", sy.dtype, "f32, f64 or u8")->check(CLI::IsMember({"f32", "f64", "u8"}));

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Form a snapshot measurement Y = sum_b C_b .* X_b + noise");
  sim->add_option("--video", sa.video, "Ground-truth video (SCIT)")->required();
  sim->add_option("--masks", sa.masks, "Mask cube (SCIT)");
  sim->add_option("--config", sa.config, "Run config supplying masks and noise defaults");
  sim->add_option("--noise-sigma", sa.noise_sigma, "Gaussian noise std")->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", sa.seed, "Noise seed");
  sim->add_option("--out-measurement", sa.out, "Output measurement (SCIT)")->required();
  sim->add_flag("--bayer", sa.bayer, "Input is an RGGB mosaic video");
  sim->add_option("--dtype", sa.dtype, "f32, f64 or u8")->check(CLI::IsMember({"f32", "f64", "u8"}));

  ReconstructArgs ra;
  auto* rec = app.add_subcommand("reconstruct", "Recover the video from a snapshot");
  rec->add_option("--measurement", ra.measurement, "Measurement (SCIT)");
  rec->add_option("--masks", ra.masks, "Mask cube (SCIT)");
  rec->add_option("--config", ra.config, "Run config (JSON)")->required();
  rec->add_option("--out", ra.out, "Reconstructed video (SCIT, f64)");
  rec->add_option("--ground-truth", ra.ground_truth, "Reference video for PSNR/SSIM");
  rec->add_option("--trace-csv", ra.trace_csv, "Per-iteration trace CSV");
  rec->add_option("--report", ra.report, "Write the quality report JSON here too");
  rec->add_flag("--bayer", ra.bayer, "Measurement is an RGGB mosaic; solve four sub-problems");
  rec->add_option("--out-rgb", ra.out_rgb, "With --bayer: demosaiced output, written as <stem>.{r,g,b}<ext>");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run an experiment grid");
  bench->add_option("--suite", ba.suite, "Suite file (JSON)")->required();
  bench->add_option("--out-csv", ba.out_csv, "Result CSV")->required();
  bench->add_option("--threads", ba.threads, "Worker count (default SCI_PNP_THREADS or all cores)");

  PngToScitArgs p2s;
  ScitToPngArgs s2p;
  auto* conv = app.add_subcommand("convert", "PNG stack conversion");
  conv->require_subcommand(1);
  auto* to_scit = conv->add_subcommand("png-to-scit", "Stack greyscale PNG frames into one SCIT cube");
  to_scit->add_option("inputs", p2s.inputs, "PNG frames in order")->required();
  to_scit->add_option("--out", p2s.out, "Output SCIT file")->required();
  to_scit->add_option("--dtype", p2s.dtype, "f32, f64 or u8")->check(CLI::IsMember({"f32", "f64", "u8"}));
  auto* to_png = conv->add_subcommand("scit-to-png", "Write each frame as an 8-bit PNG");
  to_png->add_option("--in", s2p.input, "SCIT file")->required();
  to_png->add_option("--out-prefix", s2p.prefix, "Frames go to <prefix>_000.png, ...")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed())
      return run_mask_gen(mg);
    if (synth->parsed())
      return run_synth(sy);
    if (sim->parsed())
      return run_simulate(sa);
    if (rec->parsed())
      return run_reconstruct(ra);
    if (bench->parsed())
      return run_bench_cmd(ba);
    if (to_scit->parsed())
      return run_png_to_scit(p2s);
    if (to_png->parsed())
      return run_scit_to_png(s2p);
  } catch (const AssumptionViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAssumption;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
