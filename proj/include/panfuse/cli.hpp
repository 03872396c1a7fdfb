#pragma once

// Batch commands behind `panfuse simulate|sharpen|evaluate --config <path>`.
// Each command reads one JSON document; relative paths inside it resolve
// against the directory holding the config file, outputs go to `out_dir`.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panfuse/errors.hpp"
#include "panfuse/io.hpp"
#include "panfuse/metrics.hpp"
#include "panfuse/operators.hpp"
#include "panfuse/sim.hpp"
#include "panfuse/solver.hpp"
#include "panfuse/tensor.hpp"

namespace panfuse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int {
  ok = 0,
  config_error = 2,
  data_error = 3,
  numerical_failure = 4,
};

struct ConfigFile {
  json doc;
  fs::path dir;

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : dir / path;
  }
};

inline ConfigFile load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  ConfigFile c;
  try {
    in >> c.doc;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!c.doc.is_object()) throw ConfigError("config " + path.string() + " must be a JSON object");
  c.dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return c;
}

inline void reject_unknown_keys(const json& doc, const std::set<std::string>& allowed) {
  std::vector<std::string> bad;
  for (const auto& [key, _] : doc.items())
    if (!allowed.contains(key)) bad.push_back(key);
  if (bad.empty()) return;
  std::string msg = "unknown config keys:";
  for (const auto& k : bad) msg += " '" + k + "'";
  throw ConfigError(msg);
}

template <class T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
T require(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ConfigError(std::string("missing config key '") + key + "'");
  return get_or<T>(doc, key, T{});
}

inline Kernel parse_psf(const json& doc, std::size_t q) {
  if (!doc.contains("psf")) return Kernel::box(q);
  const json& j = doc.at("psf");
  try {
    const std::string type = j.is_string() ? j.get<std::string>() : j.at("type").get<std::string>();
    if (type == "delta") return Kernel::delta();
    if (type == "average") return Kernel::box(q);
    if (type == "gaussian")
      return gaussian_psf(q, j.is_object() ? j.value("sigma_rel", 0.5) : 0.5);
    if (type == "custom") {
      Kernel k{j.at("width").get<std::size_t>(), j.at("height").get<std::size_t>(),
               j.at("weights").get<std::vector<double>>()};
      return k;
    }
    throw ConfigError("psf type '" + type + "' (expected delta, average, gaussian or custom)");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key 'psf': ") + e.what());
  }
}

inline std::vector<double> per_band(const json& doc, const char* key, std::size_t bands,
                                    double fallback) {
  if (!doc.contains(key)) return std::vector<double>(bands, fallback);
  const json& j = doc.at(key);
  try {
    if (j.is_number()) return std::vector<double>(bands, j.get<double>());
    auto v = j.get<std::vector<double>>();
    if (v.size() != bands)
      throw ConfigError(std::string("config key '") + key + "' has " + std::to_string(v.size()) +
                        " entries for " + std::to_string(bands) + " bands");
    return v;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline std::vector<double> parse_weights(const json& doc, std::size_t bands) {
  if (!doc.contains("g") || (doc.at("g").is_string() && doc.at("g") == "uniform"))
    return std::vector<double>(bands, 1.0 / static_cast<double>(bands));
  return per_band(doc, "g", bands, 0.0);
}

/// Sensor model from the shared keys q, psf, g, sigma_x, sigma_p, decimation_offset.
inline SensorModel parse_sensor(const json& doc, std::size_t bands) {
  SensorModel m;
  const auto q = get_or<long long>(doc, "q", 1);
  if (q < 1) throw ConfigError("config key 'q' must be >= 1");
  m.q = static_cast<std::size_t>(q);
  m.psf = parse_psf(doc, m.q);
  m.g = parse_weights(doc, bands);
  m.sigma_x = per_band(doc, "sigma_x", bands, 0.0);
  m.sigma_p = get_or<double>(doc, "sigma_p", 0.0);
  if (doc.contains("decimation_offset")) {
    const auto off = get_or<std::vector<std::size_t>>(doc, "decimation_offset", {});
    if (off.size() != 2) throw ConfigError("config key 'decimation_offset' must be [row, col]");
    m.offset = {off[0], off[1]};
  }
  m.validate();
  return m;
}

inline json sensor_to_json(const SensorModel& m) {
  return {{"q", m.q},
          {"psf", {{"width", m.psf.width}, {"height", m.psf.height}, {"weights", m.psf.weights}}},
          {"g", m.g},
          {"sigma_x", m.sigma_x},
          {"sigma_p", m.sigma_p},
          {"decimation_offset", {m.offset.row, m.offset.col}}};
}

inline io::Dtype parse_dtype(const json& doc) {
  const auto s = get_or<std::string>(doc, "dtype", "float64");
  if (s == "float64") return io::Dtype::float64;
  if (s == "float32") return io::Dtype::float32;
  throw ConfigError("config key 'dtype' must be float32 or float64");
}

/// Keeps 1-based inclusive band ranges [[first, last], ...].
inline HyperCube select_bands(const HyperCube& cube, const std::vector<std::vector<std::size_t>>& ranges) {
  std::vector<Plane> planes;
  for (const auto& r : ranges) {
    if (r.size() != 2 || r[0] < 1 || r[1] < r[0] || r[1] > cube.bands())
      throw ConfigError("config key 'keep_bands': bad range");
    for (std::size_t l = r[0]; l <= r[1]; ++l) planes.push_back(band(cube, l));
  }
  return HyperCube::from_planes(planes);
}

inline void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw io::IoError(io::IoErrorCode::write_failed, path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOutputs {
  fs::path x;
  fs::path p;
  fs::path reference;
  fs::path manifest;
};

inline SimulateOutputs cmd_simulate(const fs::path& config_path, const fs::path& out_dir) {
  const ConfigFile cfg = load_config(config_path);
  const json& d = cfg.doc;
  reject_unknown_keys(d, {"reference", "scene", "keep_bands", "q", "psf", "g", "sigma_x", "sigma_p",
                          "decimation_offset", "seed", "dtype"});
  if (d.contains("reference") == d.contains("scene"))
    throw ConfigError("simulate: give exactly one of 'reference' or 'scene'");

  HyperCube reference;
  if (d.contains("reference")) {
    const fs::path ref = cfg.resolve(require<std::string>(d, "reference"));
    if (!fs::exists(ref)) throw ConfigError("simulate: reference file " + ref.string() + " not found");
    reference = io::read_cube(ref);
  } else {
    const json& s = d.at("scene");
    reject_unknown_keys(s, {"width", "height", "bands", "regions", "seed"});
    reference = piecewise_constant_scene(require<std::size_t>(s, "width"),
                                         require<std::size_t>(s, "height"),
                                         require<std::size_t>(s, "bands"),
                                         get_or<std::uint64_t>(s, "seed", 0),
                                         get_or<std::size_t>(s, "regions", 6));
  }
  if (d.contains("keep_bands"))
    reference = select_bands(reference, get_or<std::vector<std::vector<std::size_t>>>(d, "keep_bands", {}));

  SimScenario sc;
  sc.model = parse_sensor(d, reference.bands());
  sc.seed = get_or<std::uint64_t>(d, "seed", 0);
  sc.reference = std::move(reference);
  sc.validate();
  const io::Dtype dtype = parse_dtype(d);

  fs::create_directories(out_dir);
  SimulateOutputs o{out_dir / "x.raw", out_dir / "p.raw", out_dir / "reference.raw",
                    out_dir / "manifest.json"};
  io::write_cube(degrade_hx(sc), o.x, dtype);
  io::write_pan(degrade_pan(sc), o.p, dtype);
  io::write_cube(sc.reference, o.reference, dtype);

  json manifest;
  manifest["command"] = "simulate";
  manifest["config"] = d;
  manifest["sensor"] = sensor_to_json(sc.model);
  manifest["seed"] = sc.seed;
  manifest["reference"] = {{"width", sc.reference.width()},
                           {"height", sc.reference.height()},
                           {"bands", sc.reference.bands()}};
  manifest["outputs"] = {{"x", o.x.filename().string()},
                         {"p", o.p.filename().string()},
                         {"reference", o.reference.filename().string()}};
  manifest["units"] = {
      {"q", "high-resolution pixels per low-resolution pixel, per axis"},
      {"psf", "weights on the high-resolution grid, origin at (height/2, width/2), unit sum"},
      {"g", "dimensionless spectral weights of the panchromatic band"},
      {"sigma_x", "noise std per band, in image radiometric units"},
      {"sigma_p", "noise std of the panchromatic image, in image radiometric units"},
      {"decimation_offset", "[row, col] kept inside each q x q block, high-resolution pixels"},
      {"seed", "noise generator seed"}};
  write_json(manifest, o.manifest);
  return o;
}

// ---------------------------------------------------------------------------
// sharpen

struct SharpenOutputs {
  fs::path u;
  fs::path log;
  ConvergenceReport report;
};

inline SolverConfig parse_solver(const json& d) {
  SolverConfig c;
  c.gamma = get_or<double>(d, "gamma", c.gamma);
  c.beta = get_or<double>(d, "beta", c.beta);
  const auto iters = get_or<long long>(d, "iters", static_cast<long long>(c.max_iters));
  if (iters < 0) throw ConfigError("config key 'iters' must be >= 0");
  c.max_iters = static_cast<std::size_t>(iters);
  c.primal_tol = get_or<double>(d, "primal_tol", c.primal_tol);
  c.eps_rel = get_or<double>(d, "eps_rel", c.eps_rel);
  c.log_every = get_or<std::size_t>(d, "log_every", c.log_every);
  c.objective_scale = get_or<double>(d, "objective_scale", c.objective_scale);
  const auto init = get_or<std::string>(d, "init", "model");
  if (init == "model") c.init = InitMode::Model;
  else if (init == "upsampled") c.init = InitMode::Upsampled;
  else throw ConfigError("config key 'init' must be 'model' or 'upsampled'");
  c.validate();
  return c;
}

inline SharpenOutputs cmd_sharpen(const fs::path& config_path, const fs::path& out_dir,
                                  std::ostream* progress = nullptr) {
  const ConfigFile cfg = load_config(config_path);
  const json& d = cfg.doc;
  reject_unknown_keys(d, {"x", "p", "q", "psf", "g", "sigma_x", "sigma_p", "decimation_offset",
                          "gamma", "beta", "iters", "primal_tol", "eps_rel", "log_every",
                          "objective_scale", "init", "output", "log", "dtype"});
  const SolverConfig solver_cfg = parse_solver(d);
  const io::Dtype dtype = parse_dtype(d);
  const HyperCube x = io::read_cube(cfg.resolve(require<std::string>(d, "x")));
  const PanImage p = io::read_pan(cfg.resolve(require<std::string>(d, "p")));
  const SensorModel model = parse_sensor(d, x.bands());

  TvlcspSolver solver(x, p, model, solver_cfg);  // checks shapes before iterating
  solver.set_progress_stream(progress);
  RunResult result = solver.run();

  fs::create_directories(out_dir);
  SharpenOutputs o;
  o.u = out_dir / get_or<std::string>(d, "output", "u.raw");
  o.log = out_dir / get_or<std::string>(d, "log", "convergence.csv");
  io::write_cube(result.u, o.u, dtype);
  write_convergence_csv(result.report, o.log.string());
  o.report = std::move(result.report);
  return o;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOutputs {
  QualityReport report;
  fs::path json_path;
  fs::path text_path;
};

inline EvaluateOutputs cmd_evaluate(const fs::path& config_path, const fs::path& out_dir) {
  const ConfigFile cfg = load_config(config_path);
  const json& d = cfg.doc;
  reject_unknown_keys(d, {"estimate", "reference", "x", "p", "q", "psf", "g", "sigma_x", "sigma_p",
                          "decimation_offset", "output"});
  const HyperCube est = io::read_cube(cfg.resolve(require<std::string>(d, "estimate")));
  const bool has_ref = d.contains("reference");
  const bool has_x = d.contains("x");
  const bool has_p = d.contains("p");
  if (!has_ref && !has_x && !has_p)
    throw ConfigError("evaluate: nothing to evaluate (give 'reference', 'x' and/or 'p')");
  const SensorModel model = parse_sensor(d, est.bands());

  QualityReport r;
  if (has_ref) {
    const HyperCube ref = io::read_cube(cfg.resolve(require<std::string>(d, "reference")));
    r.rmse = rmse(est, ref);
    r.ergas = ergas(est, ref, static_cast<double>(model.q));
    r.sam = sam(est, ref);
  }
  std::optional<HyperCube> x;
  std::optional<PanImage> p;
  if (has_x) x = io::read_cube(cfg.resolve(require<std::string>(d, "x")));
  if (has_p) p = io::read_pan(cfg.resolve(require<std::string>(d, "p")));
  if (p) r.fcc = fcc(est, *p);
  if (x && x->bands() >= 2) r.d_lambda = d_lambda(est, *x);
  if (x && p) r.d_s = d_s(est, *x, *p, lowres_pan(*p, model));

  fs::create_directories(out_dir);
  const std::string stem = get_or<std::string>(d, "output", "report");
  EvaluateOutputs o{r, out_dir / (stem + ".json"), out_dir / (stem + ".txt")};
  write_json(r.to_json(), o.json_path);
  std::ofstream txt(o.text_path);
  if (!txt) throw io::IoError(io::IoErrorCode::write_failed, o.text_path.string());
  txt << r.to_text();
  return o;
}

/// Runs `fn`, mapping the error taxonomy to process exit codes.
template <class Fn>
int guarded(Fn&& fn, std::ostream& err) {
  try {
    fn();
    return ok;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return data_error;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return data_error;
  }
}

}  // namespace panfuse::cli
