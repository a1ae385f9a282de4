#pragma once

// JSON run configuration.
//
//   {
//     "solver": "gap",                       // or "admm"
//     "max_iters": 60,
//     "init_mode": "adjoint_scaled",         // zeros | provided (needs paths.initial)
//     "sigma_floor": 0.00392156862745098,    // 0 disables
//     "gap":  { "lambda0": 1, "schedule_mode": "adaptive", "xi": 0.9, "eta": 0.8 },
//     "admm": { "rho0": 1, "gamma": 1.05, "lambda": 1 },
//     "denoisers": [
//       { "name": "tv", "iters": 60, "params": { "weight": 1, "inner_iters": 5 }, "bound_constant": 0.25 }
//     ],
//     "masks": { "kind": "bernoulli", "p1": 0.5, "seed": 0, "frames": 8 },   // or { "file": "m.scit" }
//     "noise": { "sigma": 0, "seed": 0 },
//     "paths": { "measurement": "...", "masks": "...", "output": "...", "ground_truth": "...",
//                "trace_csv": "...", "initial": "..." },
//     "metrics": true
//   }
//
// Every key is optional except where noted by the validators; unknown keys
// are errors at every level. Only the section matching "solver" may appear.
// Denoisers: identity, clip, gaussian {width_per_sigma, truncate, clip},
// tv {weight, inner_iters, clip}, plugin {command: [argv...], timeout_ms}.
// A single denoiser entry may omit "iters" (it then covers max_iters).

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnpsci/plugin.hpp"
#include "pnpsci/sensing.hpp"
#include "pnpsci/solver.hpp"
#include "pnpsci/tensor_io.hpp"

namespace pnpsci {

using Json = nlohmann::json;

struct DenoiserEntry
{
  std::string name;
  Json params = Json::object();
  std::optional<int> iters;
  std::optional<double> bound_constant;
};

struct MaskGenerator
{
  std::string kind = "bernoulli"; // bernoulli | shifted | gaussian
  double p1 = 0.5;
  std::size_t shift = 1;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> frames;
};

struct MaskSource
{
  std::optional<std::filesystem::path> file;
  MaskGenerator generator;
};

struct RunPaths
{
  std::optional<std::filesystem::path> measurement, masks, output, ground_truth, trace_csv, initial;
};

struct RunConfig
{
  SolverConfig solver = GapConfig{};
  std::vector<DenoiserEntry> denoisers;
  std::optional<MaskSource> masks;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  RunPaths paths;
  bool metrics = true;
};

namespace detail {

inline void reject_unknown(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
  if (!obj.is_object())
    throw ConfigError(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.contains(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

inline double get_number(const Json& obj, const char* key, double fallback, const std::string& where)
{
  if (!obj.contains(key))
    return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number())
    throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

inline std::int64_t get_integer(const Json& obj, const char* key, std::int64_t fallback, const std::string& where)
{
  if (!obj.contains(key))
    return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer())
    throw ConfigError(where + "." + key + " must be an integer");
  return v.get<std::int64_t>();
}

inline std::uint64_t get_seed(const Json& obj, const char* key, std::uint64_t fallback, const std::string& where)
{
  const std::int64_t v = get_integer(obj, key, static_cast<std::int64_t>(fallback), where);
  if (v < 0)
    throw ConfigError(where + "." + key + " must be non-negative");
  return static_cast<std::uint64_t>(v);
}

inline std::string get_string(const Json& obj, const char* key, const std::string& fallback, const std::string& where)
{
  if (!obj.contains(key))
    return fallback;
  const Json& v = obj.at(key);
  if (!v.is_string())
    throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

inline bool get_bool(const Json& obj, const char* key, bool fallback, const std::string& where)
{
  if (!obj.contains(key))
    return fallback;
  const Json& v = obj.at(key);
  if (!v.is_boolean())
    throw ConfigError(where + "." + key + " must be true or false");
  return v.get<bool>();
}

inline InitMode parse_init_mode(const std::string& s)
{
  if (s == "adjoint_scaled")
    return InitMode::adjoint_scaled;
  if (s == "zeros")
    return InitMode::zeros;
  if (s == "provided")
    return InitMode::provided;
  throw ConfigError("unknown init_mode '" + s + "' (expected adjoint_scaled, zeros or provided)");
}

inline LambdaSchedule parse_schedule_mode(const std::string& s)
{
  if (s == "adaptive")
    return LambdaSchedule::adaptive;
  if (s == "monotone")
    return LambdaSchedule::monotone;
  throw ConfigError("unknown schedule_mode '" + s + "' (expected monotone or adaptive)");
}

inline DenoiserEntry parse_denoiser_entry(const Json& j, std::size_t index)
{
  const std::string where = "denoisers[" + std::to_string(index) + "]";
  reject_unknown(j, {"name", "params", "iters", "bound_constant"}, where);
  DenoiserEntry e;
  e.name = get_string(j, "name", "", where);
  if (e.name.empty())
    throw ConfigError(where + ".name is required");
  if (j.contains("params")) {
    e.params = j.at("params");
    if (!e.params.is_object())
      throw ConfigError(where + ".params must be an object");
  }
  if (j.contains("iters")) {
    const auto it = get_integer(j, "iters", 0, where);
    if (it < 1)
      throw ConfigError(where + ".iters must be >= 1");
    e.iters = static_cast<int>(it);
  }
  if (j.contains("bound_constant")) {
    const double c = get_number(j, "bound_constant", 0.0, where);
    if (!(c >= 0.0))
      throw ConfigError(where + ".bound_constant must be non-negative");
    e.bound_constant = c;
  }

  // Validate params eagerly so schema errors surface before any work starts.
  const std::string pw = where + ".params";
  if (e.name == "identity" || e.name == "clip")
    reject_unknown(e.params, {}, pw);
  else if (e.name == "gaussian")
    reject_unknown(e.params, {"width_per_sigma", "truncate", "clip"}, pw);
  else if (e.name == "tv")
    reject_unknown(e.params, {"weight", "inner_iters", "clip"}, pw);
  else if (e.name == "plugin") {
    reject_unknown(e.params, {"command", "timeout_ms"}, pw);
    const Json cmd = e.params.value("command", Json());
    if (!cmd.is_array() || cmd.empty())
      throw ConfigError(pw + ".command must be a non-empty array of strings");
    for (const Json& a : cmd)
      if (!a.is_string())
        throw ConfigError(pw + ".command must be a non-empty array of strings");
  } else
    throw ConfigError("unknown denoiser '" + e.name + "' in " + where +
                      " (expected identity, clip, gaussian, tv or plugin)");
  return e;
}

inline MaskSource parse_mask_source(const Json& j)
{
  const std::string where = "masks";
  reject_unknown(j, {"file", "kind", "p1", "shift", "sigma", "seed", "frames"}, where);
  MaskSource m;
  if (j.contains("file")) {
    if (j.size() != 1)
      throw ConfigError("masks.file cannot be combined with generator keys");
    m.file = get_string(j, "file", "", where);
    return m;
  }
  MaskGenerator& g = m.generator;
  g.kind = get_string(j, "kind", g.kind, where);
  if (g.kind != "bernoulli" && g.kind != "shifted" && g.kind != "gaussian")
    throw ConfigError("unknown mask kind '" + g.kind + "' (expected bernoulli, shifted or gaussian)");
  g.p1 = get_number(j, "p1", g.p1, where);
  if (!(g.p1 > 0.0 && g.p1 < 1.0))
    throw ConfigError("masks.p1 must lie in (0, 1)");
  const auto shift = get_integer(j, "shift", 1, where);
  if (shift < 0)
    throw ConfigError("masks.shift must be non-negative");
  g.shift = static_cast<std::size_t>(shift);
  g.sigma = get_number(j, "sigma", g.sigma, where);
  g.seed = get_seed(j, "seed", 0, where);
  if (j.contains("frames")) {
    const auto f = get_integer(j, "frames", 0, where);
    if (f < 1)
      throw ConfigError("masks.frames must be >= 1");
    g.frames = static_cast<std::size_t>(f);
  }
  return m;
}

} // namespace detail

/// Parses the solver-related keys of `j` (everything except masks, noise,
/// paths and metrics). `extra` lists further keys the caller handles.
inline std::pair<SolverConfig, std::vector<DenoiserEntry>>
parse_solver_section(const Json& j, std::initializer_list<const char*> extra = {})
{
  using namespace detail;
  std::vector<const char*> allowed{"solver", "max_iters", "init_mode", "sigma_floor", "gap", "admm", "denoisers"};
  allowed.insert(allowed.end(), extra.begin(), extra.end());
  if (!j.is_object())
    throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in config");

  const std::string solver = get_string(j, "solver", "gap", "config");
  if (solver != "gap" && solver != "admm")
    throw ConfigError("unknown solver '" + solver + "' (expected gap or admm)");
  const char* other = solver == "gap" ? "admm" : "gap";
  if (j.contains(other))
    throw ConfigError("section '" + std::string(other) + "' does not apply to solver " + solver);

  const auto max_it = get_integer(j, "max_iters", 60, "config");
  if (max_it < 1)
    throw ConfigError("max_iters must be >= 1");
  const InitMode init = parse_init_mode(get_string(j, "init_mode", "adjoint_scaled", "config"));
  const double floor = get_number(j, "sigma_floor", kDefaultSigmaFloor, "config");

  std::vector<DenoiserEntry> entries;
  if (j.contains("denoisers")) {
    const Json& d = j.at("denoisers");
    if (!d.is_array() || d.empty())
      throw ConfigError("denoisers must be a non-empty array");
    for (std::size_t k = 0; k < d.size(); ++k)
      entries.push_back(parse_denoiser_entry(d[k], k));
  } else {
    entries.push_back(DenoiserEntry{"tv", Json::object(), std::nullopt, std::nullopt});
  }
  if (entries.size() == 1 && !entries[0].iters)
    entries[0].iters = static_cast<int>(max_it);
  int total = 0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (!entries[k].iters)
      throw ConfigError("denoisers[" + std::to_string(k) + "].iters is required when several denoisers are listed");
    total += *entries[k].iters;
  }
  if (total != max_it)
    throw ConfigError("denoiser iterations sum to " + std::to_string(total) + " but max_iters is " +
                      std::to_string(max_it));

  if (solver == "gap") {
    GapConfig c;
    c.max_iters = static_cast<int>(max_it);
    c.init_mode = init;
    c.sigma_floor = floor;
    if (j.contains("gap")) {
      const Json& g = j.at("gap");
      reject_unknown(g, {"lambda0", "schedule_mode", "xi", "eta"}, "gap");
      c.lambda0 = get_number(g, "lambda0", c.lambda0, "gap");
      c.schedule_mode = parse_schedule_mode(get_string(g, "schedule_mode", "adaptive", "gap"));
      c.xi = get_number(g, "xi", c.xi, "gap");
      c.eta = get_number(g, "eta", c.eta, "gap");
    }
    return {c, entries};
  }
  AdmmConfig c;
  c.max_iters = static_cast<int>(max_it);
  c.init_mode = init;
  c.sigma_floor = floor;
  if (j.contains("admm")) {
    const Json& a = j.at("admm");
    reject_unknown(a, {"rho0", "gamma", "lambda"}, "admm");
    c.rho0 = get_number(a, "rho0", c.rho0, "admm");
    c.gamma = get_number(a, "gamma", c.gamma, "admm");
    c.lambda = get_number(a, "lambda", c.lambda, "admm");
  }
  return {c, entries};
}

inline RunConfig parse_run_config(const Json& j)
{
  using namespace detail;
  RunConfig rc;
  auto [solver, entries] = parse_solver_section(j, {"masks", "noise", "paths", "metrics"});
  rc.solver = std::move(solver);
  rc.denoisers = std::move(entries);
  if (j.contains("masks"))
    rc.masks = parse_mask_source(j.at("masks"));
  if (j.contains("noise")) {
    const Json& n = j.at("noise");
    reject_unknown(n, {"sigma", "seed"}, "noise");
    rc.noise_sigma = get_number(n, "sigma", 0.0, "noise");
    if (!(rc.noise_sigma >= 0.0))
      throw ConfigError("noise.sigma must be non-negative");
    rc.noise_seed = get_seed(n, "seed", 0, "noise");
  }
  if (j.contains("paths")) {
    const Json& p = j.at("paths");
    reject_unknown(p, {"measurement", "masks", "output", "ground_truth", "trace_csv", "initial"}, "paths");
    const auto opt = [&](const char* key) -> std::optional<std::filesystem::path> {
      if (!p.contains(key))
        return std::nullopt;
      return get_string(p, key, "", "paths");
    };
    rc.paths = {opt("measurement"), opt("masks"), opt("output"), opt("ground_truth"), opt("trace_csv"), opt("initial")};
  }
  rc.metrics = get_bool(j, "metrics", true, "config");
  return rc;
}

inline Json parse_json_text(const std::string& text, const std::string& origin)
{
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path)
{
  std::string text;
  try {
    text = read_file_bytes(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(parse_json_text(text, path.string()));
}

/// Instantiates one denoiser. Plugin entries start their process here.
inline DenoiserSpec make_denoiser(const DenoiserEntry& e)
{
  using namespace detail;
  const std::string where = "denoiser " + e.name;
  const Json& p = e.params;
  DenoiserSpec spec;
  spec.bound_constant = e.bound_constant;
  if (e.name == "identity") {
    spec.denoiser = std::make_shared<IdentityDenoiser>();
    if (!spec.bound_constant)
      spec.bound_constant = 0.0;
  } else if (e.name == "clip") {
    spec.denoiser = std::make_shared<ClipDenoiser>();
  } else if (e.name == "gaussian") {
    GaussianParams g;
    g.width_per_sigma = get_number(p, "width_per_sigma", g.width_per_sigma, where);
    g.truncate = get_number(p, "truncate", g.truncate, where);
    g.clip = get_bool(p, "clip", g.clip, where);
    if (!(g.width_per_sigma >= 0.0) || !(g.truncate >= 0.0))
      throw ConfigError("gaussian width_per_sigma and truncate must be non-negative");
    spec.denoiser = std::make_shared<GaussianDenoiser>(g);
  } else if (e.name == "tv") {
    TvParams t;
    t.weight = get_number(p, "weight", t.weight, where);
    t.inner_iters = static_cast<int>(get_integer(p, "inner_iters", t.inner_iters, where));
    t.clip = get_bool(p, "clip", t.clip, where);
    spec.denoiser = std::make_shared<TvDenoiser>(t);
  } else if (e.name == "plugin") {
    std::vector<std::string> argv;
    for (const Json& a : p.at("command"))
      argv.push_back(a.get<std::string>());
    const auto timeout = get_integer(p, "timeout_ms", 30000, where);
    if (timeout < 1)
      throw ConfigError("plugin timeout_ms must be >= 1");
    auto process = std::make_shared<PluginProcess>(argv, std::chrono::milliseconds(timeout));
    spec.denoiser = std::make_shared<PluginDenoiser>("plugin:" + argv.front(), std::move(process));
  } else {
    throw ConfigError("unknown denoiser '" + e.name + "'");
  }
  return spec;
}

inline DenoiserSchedule make_schedule(const std::vector<DenoiserEntry>& entries)
{
  std::vector<DenoiserSchedule::Stage> stages;
  for (const DenoiserEntry& e : entries)
    stages.push_back({make_denoiser(e), e.iters.value_or(0)});
  return DenoiserSchedule(std::move(stages));
}

/// Solver configuration with its denoiser schedule instantiated and validated.
inline SolverConfig build_solver(SolverConfig cfg, const std::vector<DenoiserEntry>& entries)
{
  std::visit(
    [&](auto& c) {
      c.denoiser_schedule = make_schedule(entries);
      c.validate();
    },
    cfg);
  return cfg;
}

inline SolverConfig build_solver(const RunConfig& rc)
{
  return build_solver(rc.solver, rc.denoisers);
}

/// Masks for a measurement of size `frame`: loaded from file or generated.
/// `frames` overrides the generator's frame count when given.
inline MaskCube resolve_masks(const MaskSource& src, Dims2 frame, std::optional<std::size_t> frames = std::nullopt)
{
  if (src.file) {
    MaskCube m = read_cube(*src.file);
    if (m.dims().frame_dims() != frame)
      throw DimensionError("mask file " + src.file->string() + " has dims " + to_string(m.dims()) +
                           ", expected frames of " + to_string(frame));
    return m;
  }
  const MaskGenerator& g = src.generator;
  const std::size_t b = frames ? *frames : g.frames.value_or(0);
  if (b == 0)
    throw ConfigError("mask generator needs a frame count (masks.frames)");
  const Dims3 dims{frame.nx, frame.ny, b};
  if (g.kind == "bernoulli")
    return generate_masks(dims, BernoulliMasks{g.p1}, g.seed);
  if (g.kind == "gaussian")
    return generate_masks(dims, GaussianMasks{g.sigma}, g.seed);
  return generate_shifted_masks(dims, g.p1, g.shift, g.seed);
}

} // namespace pnpsci
