// Acceptance suite: one PASS/FAIL/SKIP line per criterion, with wall time
// against each criterion's budget. Exits non-zero if anything fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pnpsci/pnpsci.hpp"

using namespace pnpsci;
namespace fs = std::filesystem;

namespace {

enum class Status
{
  pass,
  fail,
  skip
};

struct Outcome
{
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(const char* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

DenoiserSpec tv_spec(std::optional<double> c = std::nullopt) { return {std::make_shared<TvDenoiser>(), c}; }

GapConfig gap_tv(int iters)
{
  GapConfig g;
  g.max_iters = iters;
  g.denoiser_schedule = DenoiserSchedule::single(tv_spec(), iters);
  return g;
}

// ---------------------------------------------------------------------------

Outcome single_frame_exactness()
{
  std::mt19937_64 rng(1);
  const VideoCube x = oracle::random_cube(Dims3{64, 64, 1}, rng);
  const SensingOperator op(MaskCube(x.dims(), 1.0));
  GapConfig g;
  g.max_iters = 1;
  g.init_mode = InitMode::zeros;
  g.denoiser_schedule = DenoiserSchedule::single(make_identity_spec(), 1);
  const double err = max_abs_diff(gap_solve(op, op.forward(x), g).x.values(), x.values());
  return verdict(err < 1e-12, fmt("max error %.3g (< 1e-12)", err));
}

Outcome projection_feasibility()
{
  std::mt19937_64 rng(2);
  double worst_feas = 0.0, worst_idem = 0.0;
  for (std::size_t t = 0; t < 100; ++t) {
    const Dims3 d{8 + t % 17, 8 + t % 13, 1 + t % 16};
    const SensingOperator op(generate_masks(d, BernoulliMasks{0.5}, 1000 + t));
    const VideoCube v = oracle::random_cube(d, rng, -0.5, 1.5);
    const Frame y = oracle::random_frame(d.frame_dims(), rng, 0.0, static_cast<double>(d.frames));
    const VideoCube x = gap_project(op, v, y);
    worst_feas = std::max(worst_feas, feasibility_residual(op, x, y));
    worst_idem = std::max(worst_idem, max_abs_diff(gap_project(op, x, y).values(), x.values()));
  }
  return verdict(worst_feas < 1e-10 && worst_idem < 1e-12,
                 fmt("worst feasibility %.3g (< 1e-10), worst idempotence %.3g (< 1e-12)", worst_feas, worst_idem));
}

Outcome oracle_equivalence()
{
  std::mt19937_64 rng(3);
  double worst_gap = 0.0, worst_admm = 0.0;
  std::size_t largest = 0;
  for (std::size_t t = 0; t < 50; ++t) {
    const Dims3 d{4 + t % 13, 3 + t % 11, 1 + t % 12};
    if (d.size() > 4096)
      throw Error("instance exceeds nB = 4096");
    largest = std::max(largest, d.size());
    const MaskCube m = t % 3 == 0 ? generate_masks(d, GaussianMasks{0.7}, t) : generate_masks(d, BernoulliMasks{}, t);
    const SensingOperator op(m);
    const VideoCube v = oracle::random_cube(d, rng, -1, 2);
    const Frame y = oracle::random_frame(d.frame_dims(), rng);
    const double rho = std::pow(10.0, -2.0 + static_cast<double>(t % 5));

    const Eigen::MatrixXd h = oracle::dense_H(m);
    const Eigen::VectorXd ev = oracle::to_eigen(v.values()), ey = oracle::to_eigen(y.values());
    const Eigen::VectorXd proj = ev + h.transpose() * (h * h.transpose()).ldlt().solve(ey - h * ev);
    const auto nb = static_cast<Eigen::Index>(d.size());
    const Eigen::MatrixXd a = h.transpose() * h + rho * Eigen::MatrixXd::Identity(nb, nb);
    const Eigen::VectorXd xu = a.ldlt().solve(h.transpose() * ey + rho * ev);

    worst_gap = std::max(worst_gap, oracle::rel_err(oracle::to_eigen(gap_project(op, v, y).values()), proj));
    worst_admm = std::max(worst_admm, oracle::rel_err(oracle::to_eigen(admm_x_update(op, y, v, rho).values()), xu));
  }
  return verdict(worst_gap < 1e-10 && worst_admm < 1e-10,
                 fmt("gap_project %.3g, admm_x_update %.3g (< 1e-10), largest nB %zu", worst_gap, worst_admm,
                     largest));
}

Outcome gradient_bound()
{
  std::mt19937_64 rng(4);
  double worst = 0.0;
  int violations = 0;
  for (std::size_t t = 0; t < 200; ++t) {
    const Dims3 d{6 + t % 11, 5 + t % 7, 1 + t % 24};
    const SensingOperator op(generate_masks(d, BernoulliMasks{0.5}, 2000 + t));
    const VideoCube x = oracle::random_cube(d, rng, -1, 1);
    const double ratio = gradient_bound_ratio(op, x);
    worst = std::max(worst, ratio);
    violations += check_gradient_bound(op, x) ? 0 : 1;
  }
  return verdict(violations == 0, fmt("max ||H^T H x|| / (B ||x||) = %.4f over 200 instances, %d violations", worst,
                                      violations));
}

Outcome energy_identity()
{
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (std::size_t t = 0; t < 100; ++t) {
    const Dims3 d{4 + t % 9, 4 + t % 6, 2 + t % 10};
    const SensingOperator op(generate_masks(d, t % 2 ? MaskKind{BernoulliMasks{}} : MaskKind{GaussianMasks{0.8}},
                                            3000 + t));
    const Frame y = oracle::random_frame(d.frame_dims(), rng);
    const VideoCube x = gap_project(op, oracle::random_cube(d, rng), y);
    const VideoCube v = oracle::random_cube(d, rng, -1, 2);
    worst = std::max(worst, verify_energy_identity(op, y, x, v).rel_err);
  }
  return verdict(worst < 1e-10, fmt("worst relative mismatch %.3g (< 1e-10)", worst));
}

Outcome step_bound()
{
  const double c_tv = verify_bounded(tv_spec(), {0.02, 0.05, 0.1, 0.2, 0.5}, 40, 11).estimate;
  const double c_gauss =
    verify_bounded({std::make_shared<GaussianDenoiser>(), std::nullopt}, {0.02, 0.05, 0.1, 0.2, 0.5}, 40, 12).estimate;
  struct Run
  {
    const char* name;
    DenoiserSpec spec;
    Dims3 dims;
    std::uint64_t seed;
    LambdaSchedule mode;
  };
  const std::vector<Run> runs{
    {"tv", tv_spec(c_tv), {32, 32, 8}, 0, LambdaSchedule::adaptive},
    {"tv", tv_spec(c_tv), {48, 40, 8}, 1, LambdaSchedule::monotone},
    {"tv", tv_spec(c_tv), {64, 64, 8}, 2, LambdaSchedule::adaptive},
    {"gaussian", {std::make_shared<GaussianDenoiser>(), c_gauss}, {32, 32, 8}, 3, LambdaSchedule::adaptive},
    {"gaussian", {std::make_shared<GaussianDenoiser>(), c_gauss}, {40, 48, 6}, 4, LambdaSchedule::monotone},
    {"identity", make_identity_spec(), {32, 32, 8}, 5, LambdaSchedule::adaptive},
  };
  int failed = 0;
  for (const Run& r : runs) {
    const VideoCube truth = synthetic::moving_shapes(r.dims, r.seed);
    const SensingOperator op(generate_masks(r.dims, BernoulliMasks{}, r.seed));
    GapConfig g;
    g.max_iters = 40;
    g.schedule_mode = r.mode;
    g.denoiser_schedule = DenoiserSchedule::single(r.spec, 40);
    const SolveResult s = gap_solve(op, op.forward(truth), g);
    const double c = *g.denoiser_schedule.bound_constant();
    failed += verify_step_bound(s.trace, c, r.dims.frame_size(), r.dims.frames) ? 0 : 1;
  }
  return verdict(failed == 0, fmt("%zu runs (C_tv = %.4f, C_gaussian = %.4f), %d violating", runs.size(), c_tv,
                                  c_gauss, failed));
}

Outcome gap_admm_agreement()
{
  const Dims3 d{64, 64, 8};
  const VideoCube truth = synthetic::moving_shapes(d, 0);
  const SensingOperator op(generate_masks(d, BernoulliMasks{}, 0));
  const Frame y = op.forward(truth);
  GapConfig g = gap_tv(60);
  g.schedule_mode = LambdaSchedule::monotone;
  g.lambda0 = 0.1;
  g.xi = 0.9;
  AdmmConfig a;
  a.max_iters = 60;
  a.rho0 = 0.1;
  a.lambda = 0.1;
  a.gamma = 1.0 / 0.9;
  a.denoiser_schedule = DenoiserSchedule::single(tv_spec(), 60);
  const double pg = mean_psnr(truth, gap_solve(op, y, g).x);
  const double pa = mean_psnr(truth, admm_solve(op, y, a).x);
  return verdict(std::abs(pg - pa) <= 1.0, fmt("GAP %.2f dB, ADMM %.2f dB, gap %.2f dB (<= 1)", pg, pa, std::abs(pg - pa)));
}

Outcome desk_scale()
{
  const Dims3 d{64, 64, 8};
  const VideoCube truth = synthetic::moving_shapes(d, 0);
  const SensingOperator op(generate_masks(d, BernoulliMasks{0.5}, 0));
  const Frame y = op.forward(truth);
  const double init = mean_psnr(truth, adjoint_scaled(op, y));
  const double final_psnr = mean_psnr(truth, gap_solve(op, y, gap_tv(60)).x);
  return verdict(final_psnr >= init + 5.0 && final_psnr >= 25.0,
                 fmt("init %.2f dB, final %.2f dB (needs >= %.2f and >= 25)", init, final_psnr, init + 5.0));
}

Outcome benchmark_spot_check()
{
  const char* root = std::getenv("SCI_PNP_DATA_DIR");
  if (!root)
    return {Status::skip, "SCI_PNP_DATA_DIR not set"};
  const fs::path dir(root);
  if (!fs::exists(dir / "mask.scit"))
    return {Status::skip, "mask.scit missing in " + dir.string()};
  const MaskCube masks = read_cube(dir / "mask.scit");
  const SensingOperator op(masks);
  op.require_assumption1();
  const std::size_t b = masks.frame_count();

  const std::vector<std::pair<std::string, double>> datasets{{"kobe", 26.46},  {"traffic", 20.89}, {"runner", 28.52},
                                                             {"drop", 34.63},  {"crash", 24.82},   {"aerial", 25.05}};
  std::vector<double> found;
  std::optional<double> kobe;
  std::string detail;
  for (const auto& [name, reference] : datasets) {
    const fs::path file = dir / (name + ".scit");
    if (!fs::exists(file))
      continue;
    const VideoCube video = read_cube(file);
    if (video.dims().frame_dims() != masks.dims().frame_dims() || video.frame_count() < b)
      throw DimensionError(name + " dims " + to_string(video.dims()) + " do not fit masks " + to_string(masks.dims()));
    double sum = 0.0;
    const std::size_t groups = video.frame_count() / b;
    for (std::size_t gidx = 0; gidx < groups; ++gidx) {
      VideoCube part(masks.dims());
      for (std::size_t k = 0; k < b; ++k)
        part.set_frame(k, video.frame(gidx * b + k));
      sum += mean_psnr(part, gap_solve(op, op.forward(part), gap_tv(100)).x);
    }
    const double p = sum / static_cast<double>(groups);
    found.push_back(p);
    if (name == "kobe")
      kobe = p;
    detail += fmt("%s %.2f (reference %.2f); ", name.c_str(), p, reference);
  }
  if (!kobe)
    return {Status::skip, "kobe.scit missing in " + dir.string()};
  bool ok = std::abs(*kobe - 26.46) <= 1.0;
  if (found.size() == datasets.size()) {
    double mean = 0.0;
    for (double p : found)
      mean += p / static_cast<double>(found.size());
    ok = ok && std::abs(mean - 26.73) <= 1.0;
    detail += fmt("average %.2f (reference 26.73, +-1)", mean);
  } else {
    detail += "average not checked: only " + std::to_string(found.size()) + " of 6 datasets present";
  }
  return verdict(ok, detail);
}

Outcome compression_sweep()
{
  const std::vector<std::size_t> bs{8, 16, 24, 32, 40, 48};
  std::vector<double> psnr;
  std::string detail;
  for (std::size_t b : bs) {
    const Dims3 d{72, 128, b};
    const VideoCube truth = synthetic::moving_shapes(d, 0);
    const SensingOperator op(generate_masks(d, BernoulliMasks{}, 0));
    const SolveResult r = gap_solve(op, op.forward(truth), gap_tv(60));
    if (!all_finite(r.x.values()))
      return verdict(false, fmt("non-finite output at B=%zu", b));
    psnr.push_back(mean_psnr(truth, r.x));
    detail += fmt("B=%zu %.2f dB; ", b, psnr.back());
  }
  return verdict(psnr.back() < psnr.front(), detail + "requires B=48 < B=8");
}

Outcome bayer_round_trip()
{
  std::mt19937_64 rng(6);
  const Tensor3 random_mosaic = oracle::random_cube(Dims3{32, 48, 4}, rng);
  const bool exact = bayer_merge(bayer_split(random_mosaic)) == random_mosaic;

  ColorCube gray;
  const VideoCube scene = synthetic::soft_gray(Dims3{64, 64, 8});
  gray.rgb = {scene, scene, scene};
  const Tensor3 mosaic = rgb_to_mosaic(gray);
  const MaskCube masks = generate_masks(mosaic.dims(), BernoulliMasks{0.5}, 0);
  const Frame y = SensingOperator(masks).forward(mosaic);
  const ColorResult r = color_reconstruct(y, masks, gap_tv(60), {}, &mosaic);
  const double p = evaluate_color(mosaic, r).mean_psnr;
  const ChannelDisparity disp = channel_disparity(r.rgb);
  return verdict(exact && p > 30.0 && disp.frame_mean < 2.0 / 255.0,
                 fmt("split/merge %s; PSNR %.2f dB (> 30); channel-mean disparity %.3f/255 (< 2/255); "
                     "pixelwise %.2f/255 (informational)",
                     exact ? "bit-exact" : "MISMATCH", p, disp.frame_mean * 255.0, disp.pixel * 255.0));
}

} // namespace

int main()
{
  struct Criterion
  {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
    {"single-frame exactness", 1, single_frame_exactness},
    {"projection feasibility", 10, projection_feasibility},
    {"dense oracle equivalence", 30, oracle_equivalence},
    {"gradient bound", 10, gradient_bound},
    {"energy identity", 10, energy_identity},
    {"bounded-denoiser step bound", 60, step_bound},
    {"GAP vs ADMM noise-free", 60, gap_admm_agreement},
    {"desk-scale quality", 60, desk_scale},
    {"benchmark videos (Kobe)", 600, benchmark_spot_check},
    {"compression-ratio sweep", 600, compression_sweep},
    {"Bayer round trip", 120, bayer_round_trip},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status != Status::skip && secs > c.budget_s) {
      o.status = Status::fail;
      o.detail += " [over budget]";
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    failures += o.status == Status::fail ? 1 : 0;
    std::printf("%s  %-30s %7.2fs / %4.0fs  %s\n", tag, c.name, secs, c.budget_s, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures ? 1 : 0;
}
