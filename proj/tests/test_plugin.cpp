#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pnpsci/color.hpp"
#include "pnpsci/config.hpp"
#include "pnpsci/plugin.hpp"
#include "pnpsci/synthetic.hpp"

using namespace pnpsci;
using namespace std::chrono_literals;

namespace {

std::shared_ptr<PluginProcess> start(const std::string& mode, std::chrono::milliseconds timeout = 20s)
{
  return std::make_shared<PluginProcess>(std::vector<std::string>{PNPD_TEST_PLUGIN, mode}, timeout);
}

std::string plugin_error(PluginProcess& p, const Tensor3& x, double sigma = 0.1)
{
  try {
    p.denoise(x, sigma);
  } catch (const PluginError& e) {
    return e.what();
  }
  return "<no error>";
}

} // namespace

TEST(PnpdCodec, HeaderLayout)
{
  const std::string h = encode_pnpd_header(PnpdType::reply, 0x01020304);
  EXPECT_EQ(h, std::string("PNPD\x01\x00\x02\x00\x04\x03\x02\x01", 12));
  const PnpdHeader d = decode_pnpd_header(h);
  EXPECT_EQ(d.version, 1);
  EXPECT_EQ(d.type, PnpdType::reply);
  EXPECT_EQ(d.body_length, 0x01020304u);
}

TEST(PnpdCodec, RejectsBadHeaders)
{
  EXPECT_THROW(decode_pnpd_header("PNPD"), PluginError);
  EXPECT_THROW(decode_pnpd_header(std::string("XNPD\x01\x00\x01\x00\0\0\0\0", 12)), PluginError);
  EXPECT_THROW(decode_pnpd_header(std::string("PNPD\x02\x00\x01\x00\0\0\0\0", 12)), PluginError);
  EXPECT_THROW(decode_pnpd_header(std::string("PNPD\x01\x00\x07\x00\0\0\0\0", 12)), PluginError);
}

TEST(PnpdCodec, RequestRoundTrip)
{
  std::mt19937_64 rng(1);
  const Tensor3 x = oracle::random_cube(Dims3{3, 5, 2}, rng, -2, 2);
  const std::string msg = encode_pnpd_request(x, 0.0625);
  const PnpdHeader h = decode_pnpd_header(msg);
  EXPECT_EQ(h.type, PnpdType::request);
  ASSERT_EQ(h.body_length, msg.size() - kPnpdHeaderSize);
  const PnpdRequest r = decode_pnpd_request_body(std::string_view(msg).substr(kPnpdHeaderSize));
  EXPECT_EQ(r.sigma, 0.0625);
  EXPECT_EQ(r.x, x);
  // sigma is the first 8 body bytes, little-endian IEEE 754.
  EXPECT_EQ(msg.substr(12, 8), std::string("\0\0\0\0\0\0\xb0\x3f", 8));
}

TEST(PnpdCodec, ReplyInterpretation)
{
  const Tensor3 x(Dims3{2, 2, 1}, 0.5);
  const std::string reply = encode_pnpd_reply(x);
  const PnpdHeader h = decode_pnpd_header(reply);
  const std::string_view body = std::string_view(reply).substr(kPnpdHeaderSize);
  EXPECT_EQ(decode_pnpd_reply(h, body, x.dims()), x);
  EXPECT_THROW(decode_pnpd_reply(h, body, Dims3{2, 2, 2}), PluginError);
  EXPECT_THROW(decode_pnpd_reply(h, "junk", x.dims()), PluginError);
  const std::string err = encode_pnpd_error("out of memory");
  try {
    decode_pnpd_reply(decode_pnpd_header(err), std::string_view(err).substr(12), x.dims());
    FAIL();
  } catch (const PluginError& e) {
    EXPECT_NE(std::string(e.what()).find("out of memory"), std::string::npos);
  }
}

TEST(Plugin, EchoIsBitExact)
{
  auto p = start("echo");
  std::mt19937_64 rng(2);
  Tensor3 x = oracle::random_cube(Dims3{7, 6, 3}, rng, -1, 2);
  x[0] = -0.0;
  for (int rep = 0; rep < 3; ++rep) {
    const Tensor3 y = p->denoise(x, 0.1 * rep);
    ASSERT_EQ(y.dims(), x.dims());
    EXPECT_EQ(std::memcmp(y.values().data(), x.values().data(), x.size() * sizeof(double)), 0);
  }
}

TEST(Plugin, GaussianMatchesNative)
{
  PluginDenoiser plugin("plugin:gaussian", start("gaussian"));
  const GaussianDenoiser native;
  std::mt19937_64 rng(3);
  const Tensor3 x = oracle::random_cube(Dims3{20, 17, 3}, rng, -0.1, 1.1);
  for (double sigma : {0.0, 0.2, 0.7, 1.5})
    EXPECT_LT(max_abs_diff(plugin.apply(x, sigma).values(), native.apply(x, sigma).values()), 1e-6)
      << "sigma=" << sigma;
}

TEST(Plugin, GapSolveThroughPluginMatchesNative)
{
  const Dims3 d{24, 24, 4};
  const VideoCube truth = synthetic::moving_shapes(d, 4);
  const SensingOperator op(generate_masks(d, BernoulliMasks{}, 4));
  const Frame y = op.forward(truth);
  GapConfig a;
  a.max_iters = 10;
  a.denoiser_schedule = DenoiserSchedule::single({std::make_shared<GaussianDenoiser>(), std::nullopt}, 10);
  GapConfig b = a;
  b.denoiser_schedule = DenoiserSchedule::single(
    {std::make_shared<PluginDenoiser>("plugin:gaussian", start("gaussian")), std::nullopt}, 10);
  const SolveResult ra = gap_solve(op, y, a), rb = gap_solve(op, y, b);
  EXPECT_LT(max_abs_diff(ra.x.values(), rb.x.values()), 1e-5);
  EXPECT_EQ(rb.trace.back().denoiser, "plugin:gaussian");
}

TEST(Plugin, ConfiguredPluginDrivesColorPipeline)
{
  const RunConfig rc = parse_run_config(parse_json_text(
    std::string(R"({"max_iters": 3, "denoisers": [{"name": "plugin", "params": {"command": [")") +
      PNPD_TEST_PLUGIN + R"(", "echo"], "timeout_ms": 20000}}]})",
    "test"));
  const SolverConfig cfg = build_solver(rc);
  const Dims3 d{8, 8, 2};
  const Tensor3 truth = synthetic::smooth_drift(d, 1);
  const MaskCube m = generate_masks(d, BernoulliMasks{}, 1);
  const ColorResult r = color_reconstruct(SensingOperator(m).forward(truth), m, cfg);
  GapConfig identity = std::get<GapConfig>(cfg);
  identity.denoiser_schedule = DenoiserSchedule::single(make_identity_spec(), 3);
  const ColorResult expect = color_reconstruct(SensingOperator(m).forward(truth), m, identity);
  EXPECT_EQ(r.mosaic, expect.mosaic);
}

TEST(Plugin, WrongDimsAreRejected)
{
  auto p = start("wrong-dims");
  EXPECT_NE(plugin_error(*p, Tensor3(Dims3{4, 4, 2}, 0.5)).find("do not match"), std::string::npos);
}

TEST(Plugin, ErrorReplyCarriesReason)
{
  auto p = start("error");
  const Tensor3 x(Dims3{4, 4, 1}, 0.5);
  EXPECT_NE(plugin_error(*p, x).find("synthetic failure"), std::string::npos);
  // An error reply is a complete message, so the connection stays usable.
  EXPECT_NE(plugin_error(*p, x).find("synthetic failure"), std::string::npos);
}

TEST(Plugin, SolverTagsPluginFailureWithIteration)
{
  const SensingOperator op(MaskCube(Dims3{4, 4, 1}, 1.0));
  GapConfig g;
  g.max_iters = 2;
  g.denoiser_schedule =
    DenoiserSchedule::single({std::make_shared<PluginDenoiser>("plugin:error", start("error")), std::nullopt}, 2);
  try {
    gap_solve(op, Frame(Dims2{4, 4}, 0.5), g);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_EQ(e.iteration(), 1);
    EXPECT_NE(std::string(e.what()).find("synthetic failure"), std::string::npos);
  }
}

TEST(Plugin, StallTimesOut)
{
  auto p = start("stall", 300ms);
  const auto t0 = std::chrono::steady_clock::now();
  const Tensor3 x(Dims3{4, 4, 1}, 0.5);
  EXPECT_NE(plugin_error(*p, x).find("timed out"), std::string::npos);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 5s);
  EXPECT_NE(plugin_error(*p, x).find("unusable"), std::string::npos);
}

TEST(Plugin, VersionMismatchIsRejected)
{
  auto p = start("bad-version");
  EXPECT_NE(plugin_error(*p, Tensor3(Dims3{2, 2, 1})).find("version mismatch"), std::string::npos);
}

TEST(Plugin, EarlyExitIsReported)
{
  auto p = start("exit");
  EXPECT_NE(plugin_error(*p, Tensor3(Dims3{2, 2, 1})).find("closed"), std::string::npos);
}

TEST(Plugin, MissingExecutableFails)
{
  PluginProcess p({"/nonexistent/pnpd-plugin"}, 2s);
  EXPECT_NE(plugin_error(p, Tensor3(Dims3{2, 2, 1})), "<no error>");
  EXPECT_THROW(PluginProcess({}), PluginError);
}
