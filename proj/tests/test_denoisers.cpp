#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "oracles.hpp"
#include "pnpsci/denoisers.hpp"

using namespace pnpsci;

namespace {

DenoiserSpec spec_of(std::shared_ptr<const Denoiser> d, std::optional<double> c = std::nullopt)
{
  return DenoiserSpec{std::move(d), c};
}

} // namespace

TEST(Denoise, IdentityReturnsInputForAnySigma)
{
  std::mt19937_64 rng(1);
  const Tensor3 x = oracle::random_cube(Dims3{5, 6, 3}, rng, -0.5, 1.5);
  const DenoiserSpec id = make_identity_spec();
  for (double s : {0.0, 0.1, 10.0})
    EXPECT_EQ(denoise(id, x, s), x);
  EXPECT_EQ(id.bound_constant, 0.0);
}

TEST(Denoise, ClipProjectsOntoUnitBox)
{
  Tensor3 x(Dims3{1, 3, 1}, {-0.2, 0.4, 1.3});
  EXPECT_EQ(denoise(spec_of(std::make_shared<ClipDenoiser>()), x, 0.1), Tensor3(Dims3{1, 3, 1}, {0.0, 0.4, 1.0}));
}

TEST(Denoise, RejectsBadArguments)
{
  const Tensor3 x(Dims3{2, 2, 1});
  EXPECT_THROW(denoise(make_identity_spec(), x, -0.1), ConfigError);
  EXPECT_THROW(denoise(make_identity_spec(), x, std::numeric_limits<double>::infinity()), ConfigError);
  EXPECT_THROW(denoise(DenoiserSpec{}, x, 0.1), ConfigError);
}

TEST(Denoise, TvKeepsConstantCube)
{
  const Tensor3 c(Dims3{9, 7, 3}, 0.37);
  const DenoiserSpec tv = spec_of(std::make_shared<TvDenoiser>());
  for (double s : {0.01, 0.3, 1.0})
    EXPECT_EQ(denoise(tv, c, s), c);
}

TEST(Denoise, GaussianSmallSigmaIsIdentity)
{
  std::mt19937_64 rng(4);
  const Tensor3 x = oracle::random_cube(Dims3{8, 8, 2}, rng);
  const DenoiserSpec g = spec_of(std::make_shared<GaussianDenoiser>());
  EXPECT_EQ(denoise(g, x, 0.0), x);
  // s = 2 * 0.05 = 0.1 px: neighbour weight exp(-50) ~ 2e-22
  EXPECT_LT(max_abs_diff(denoise(g, x, 0.05).values(), x.values()), 1e-8);
}

TEST(Denoise, GaussianKernelIsNormalizedAndSymmetric)
{
  const auto k = GaussianDenoiser::kernel(1.7, 4.0);
  EXPECT_EQ(k.size(), 2 * 7 + 1);
  double s = 0;
  for (std::size_t t = 0; t < k.size(); ++t) {
    s += k[t];
    EXPECT_DOUBLE_EQ(k[t], k[k.size() - 1 - t]);
  }
  EXPECT_NEAR(s, 1.0, 1e-15);
}

TEST(Denoise, GaussianPreservesConstantsAndSmooths)
{
  const DenoiserSpec g = spec_of(std::make_shared<GaussianDenoiser>());
  const Tensor3 c(Dims3{10, 10, 2}, 0.6);
  EXPECT_LT(max_abs_diff(denoise(g, c, 0.8).values(), c.values()), 1e-14);
  Tensor3 spike(Dims3{11, 11, 1});
  spike(5, 5, 0) = 1.0;
  const Tensor3 out = denoise(g, spike, 0.5);
  EXPECT_LT(out(5, 5, 0), 1.0);
  EXPECT_GT(out(5, 6, 0), 0.0);
}

TEST(Tv, ZeroTauLeavesFrameUnchanged)
{
  std::mt19937_64 rng(2);
  const Frame f = oracle::random_frame(Dims2{6, 6}, rng);
  EXPECT_EQ(tv_denoise(f, 0.0, 5), f);
  EXPECT_THROW(tv_denoise(f, 0.1, 0), ConfigError);
}

TEST(Tv, TwoPixelShrinkageMatchesGridSearch)
{
  for (const auto& [h, tau] : std::vector<std::pair<double, double>>{{0.8, 0.1}, {0.6, 0.25}, {0.3, 0.4}}) {
    const Frame f(Dims2{1, 2}, {0.0, h});
    const Frame u = tv_denoise(f, tau, 500);

    // Brute force over [0,1]^2 on a 1e-3 grid.
    double best = std::numeric_limits<double>::infinity(), bu1 = 0, bu2 = 0;
    for (int a = 0; a <= 1000; ++a)
      for (int b = 0; b <= 1000; ++b) {
        const double u1 = a / 1000.0, u2 = b / 1000.0;
        const double obj = 0.5 * (u1 * u1 + (u2 - h) * (u2 - h)) + tau * std::abs(u2 - u1);
        if (obj < best) {
          best = obj;
          bu1 = u1;
          bu2 = u2;
        }
      }
    EXPECT_NEAR(u(0, 0), bu1, 1.5e-3) << "h=" << h << " tau=" << tau;
    EXPECT_NEAR(u(0, 1), bu2, 1.5e-3) << "h=" << h << " tau=" << tau;
    // and the closed form: each side moves min(tau, h/2) toward the mean
    const double shrink = std::min(tau, h / 2);
    EXPECT_NEAR(u(0, 0), shrink, 1e-9);
    EXPECT_NEAR(u(0, 1), h - shrink, 1e-9);
  }
}

TEST(Tv, ReducesNoiseVariance)
{
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.1);
  Frame f(Dims2{32, 32});
  for (double& v : f.values())
    v = 0.5 + noise(rng);
  const Frame u = tv_denoise(f, 0.1 * 0.1 * 4, 5);
  const auto variance = [](const Frame& g) {
    double s = 0, ss = 0;
    for (double v : g.values()) {
      s += v;
      ss += v * v;
    }
    const double m = s / static_cast<double>(g.size());
    return ss / static_cast<double>(g.size()) - m * m;
  };
  EXPECT_LT(variance(u), variance(f));
}

TEST(Tv, ObjectiveNeverIncreases)
{
  std::mt19937_64 rng(21);
  int safeguard_hits = 0, steps = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Frame f = oracle::random_frame(Dims2{16, 12}, rng);
    const double tau = 0.02 + 0.01 * trial;
    std::vector<double> trace;
    const Frame u = tv_denoise(f, tau, 10, &trace);
    ASSERT_EQ(trace.size(), 11u);
    for (std::size_t k = 1; k < trace.size(); ++k) {
      EXPECT_LE(trace[k], trace[k - 1]);
      ++steps;
      if (trace[k] == trace[k - 1])
        ++safeguard_hits;
    }
    EXPECT_DOUBLE_EQ(rof_objective(u, f, tau), trace.back());
  }
  // The plain dual iteration is monotone in practice; the safeguard is a backstop.
  EXPECT_LT(safeguard_hits, steps / 10);
}

TEST(Tv, OutputStaysInUnitRange)
{
  std::mt19937_64 rng(5);
  const Tensor3 x = oracle::random_cube(Dims3{12, 12, 3}, rng, -0.3, 1.3);
  const Tensor3 y = denoise(DenoiserSpec{std::make_shared<TvDenoiser>(), std::nullopt}, x, 0.5);
  for (double v : y.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Tv, TranslationEquivariantInInterior)
{
  // Shift a frame by 3 columns: away from the borders (farther than the
  // inner iterations can propagate) the outputs must be shifted copies.
  const std::size_t rows = 24, cols = 48, shift = 3;
  const double tau = 0.05;
  const int iters = 5;
  const std::size_t margin = 2 * static_cast<std::size_t>(iters) + 2;

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  std::vector<double> random_profile(cols + shift);
  for (double& v : random_profile)
    v = u(rng);
  const std::vector<std::function<double(std::size_t, std::size_t)>> scenes{
    // periodic sawtooth along columns with a constant gradient down the rows
    [](std::size_t i, std::size_t j) { return 0.2 + 0.07 * static_cast<double>(j % 8) + 0.01 * static_cast<double>(i); },
    [&](std::size_t i, std::size_t j) { return random_profile[j] + 0.01 * static_cast<double>(i); },
  };
  for (const auto& scene : scenes) {
    Frame f(Dims2{rows, cols}), g(Dims2{rows, cols});
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        f(i, j) = scene(i, j);
        g(i, j) = scene(i, j + shift);
      }
    const Frame uf = tv_denoise(f, tau, iters), ug = tv_denoise(g, tau, iters);
    double worst = 0.0;
    for (std::size_t i = margin; i + margin < rows; ++i)
      for (std::size_t j = margin; j + margin + shift < cols; ++j)
        worst = std::max(worst, std::abs(uf(i, j + shift) - ug(i, j)));
    EXPECT_LT(worst, 1e-8);
  }
}

TEST(Tv, Deterministic)
{
  std::mt19937_64 rng(9);
  const Tensor3 x = oracle::random_cube(Dims3{10, 10, 4}, rng);
  const DenoiserSpec tv{std::make_shared<TvDenoiser>(), std::nullopt};
  EXPECT_EQ(denoise(tv, x, 0.3), denoise(tv, x, 0.3));
}

TEST(Tv, RejectsBadParams)
{
  EXPECT_THROW(TvDenoiser(TvParams{1.0, 0, true}), ConfigError);
  EXPECT_THROW(TvDenoiser(TvParams{-1.0, 5, true}), ConfigError);
}

TEST(Bounded, IdentityAndClipEstimateZero)
{
  const std::vector<double> sigmas{0.05, 0.1, 0.2};
  EXPECT_EQ(verify_bounded(make_identity_spec(), sigmas, 10, 1).estimate, 0.0);
  const BoundEstimate clip = verify_bounded({std::make_shared<ClipDenoiser>(), 0.0}, sigmas, 10, 1);
  EXPECT_EQ(clip.estimate, 0.0);
  EXPECT_TRUE(clip.within_declared);
}

TEST(Bounded, TvEstimateIsFiniteAndSelfConsistent)
{
  const std::vector<double> sigmas{0.05, 0.1, 0.2};
  DenoiserSpec tv{std::make_shared<TvDenoiser>(), std::nullopt};
  const BoundEstimate e = verify_bounded(tv, sigmas, 50, 1);
  EXPECT_TRUE(std::isfinite(e.estimate));
  EXPECT_GT(e.estimate, 0.0);
  // Declaring the estimate makes the same trials pass; half of it does not.
  tv.bound_constant = e.estimate;
  EXPECT_TRUE(verify_bounded(tv, sigmas, 50, 1).within_declared);
  tv.bound_constant = e.estimate / 2;
  EXPECT_FALSE(verify_bounded(tv, sigmas, 50, 1).within_declared);
}

TEST(Bounded, RejectsBadArguments)
{
  EXPECT_THROW(verify_bounded(make_identity_spec(), {0.1}, 0, 1), ConfigError);
  EXPECT_THROW(verify_bounded(make_identity_spec(), {0.0}, 1, 1), ConfigError);
}

TEST(Schedule, StagesAreUsedInOrder)
{
  const auto g = std::make_shared<GaussianDenoiser>();
  const auto t = std::make_shared<TvDenoiser>();
  const DenoiserSchedule s({{DenoiserSpec{g, 0.5}, 3}, {DenoiserSpec{t, 0.25}, 2}});
  EXPECT_EQ(s.total_iterations(), 5);
  EXPECT_EQ(s.at(0).name(), "gaussian");
  EXPECT_EQ(s.at(2).name(), "gaussian");
  EXPECT_EQ(s.at(3).name(), "tv");
  EXPECT_EQ(s.at(4).name(), "tv");
  EXPECT_THROW(s.at(5), ConfigError);
  EXPECT_EQ(s.bound_constant(), 0.5);
  EXPECT_EQ(s.label(), "gaussian+tv");
}

TEST(Schedule, RejectsEmptyOrZeroStages)
{
  EXPECT_THROW(DenoiserSchedule(std::vector<DenoiserSchedule::Stage>{}), ConfigError);
  EXPECT_THROW(DenoiserSchedule::single(make_identity_spec(), 0), ConfigError);
  EXPECT_THROW(DenoiserSchedule::single(DenoiserSpec{}, 3), ConfigError);
  const DenoiserSchedule partial({{make_identity_spec(), 1}, {DenoiserSpec{std::make_shared<TvDenoiser>(), {}}, 1}});
  EXPECT_FALSE(partial.bound_constant().has_value());
}
