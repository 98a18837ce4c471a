#include "spadcam/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spadcam/calibration.hpp"
#include "spadcam/histogram_io.hpp"

namespace spadcam {

using nlohmann::json;

namespace {

json admm_to_json(const AdmmSettings& a) {
  return {{"rho1", a.rho1},         {"rho2", a.rho2},         {"max_iters", a.max_iters},
          {"tol_primal", a.tol_primal}, {"tol_dual", a.tol_dual}};
}

void admm_from_json(const json& j, AdmmSettings& a) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "rho1") a.rho1 = it->get<double>();
    else if (k == "rho2") a.rho2 = it->get<double>();
    else if (k == "max_iters") a.max_iters = it->get<std::size_t>();
    else if (k == "tol_primal") a.tol_primal = it->get<double>();
    else if (k == "tol_dual") a.tol_dual = it->get<double>();
    else throw ValidationError("unknown ADMM setting '" + k + "'");
  }
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

json to_json(const RunConfig& c) {
  const auto& s = c.system;
  const auto& b = c.scene.ball;
  json intensity = {{"mu", c.intensity.mu}, {"lambda", c.intensity.lambda},
                    {"admm", admm_to_json(c.intensity.shared)},
                    {"denoise_admm", c.intensity.denoise ? admm_to_json(*c.intensity.denoise) : json(nullptr)},
                    {"deconvolve_admm", c.intensity.deconvolve ? admm_to_json(*c.intensity.deconvolve) : json(nullptr)}};
  return {
      {"profile", c.profile},
      {"grid", {{"rows", c.shape.rows}, {"cols", c.shape.cols}}},
      {"system",
       {{"eta", s.eta},
        {"ambient_rate", s.ambient_rate},
        {"dark_rate", s.dark_rate},
        {"repetitions", s.repetitions},
        {"bin_width", s.bin_width},
        {"bins", s.bins},
        {"deadtime", opt(s.deadtime)},
        {"repetition_period", s.repetition_period}}},
      {"illumination", {{"window", c.illumination.window}, {"epsilon", c.illumination.epsilon}}},
      {"pulse", {{"fwhm", c.pulse_fwhm}, {"photons", opt(c.pulse_photons)}}},
      {"calibration",
       {{"raster_signal", opt(c.calibration.raster_signal)},
        {"diffraction_mean", opt(c.calibration.diffraction_mean)}}},
      {"scene",
       {{"kind", c.scene.kind},
        {"path", c.scene.path.string()},
        {"plane_depth", c.scene.plane_depth},
        {"plane_reflectivity", c.scene.plane_reflectivity},
        {"ball_radius", b.ball_radius},
        {"ball_center_x", b.ball_center_x},
        {"ball_center_y", b.ball_center_y},
        {"ball_center_z", b.ball_center_z},
        {"screen_distance", b.screen_distance},
        {"field_height", b.field_height},
        {"ball_reflectivity", b.ball_reflectivity},
        {"screen_reflectivity", b.screen_reflectivity}}},
      {"intensity", intensity},
      {"depth", {{"mu", c.depth.mu}, {"median_order", c.depth.median_order}, {"admm", admm_to_json(c.depth.admm)}}},
      {"seed", c.seed},
      {"simulate_deadtime", c.simulate_deadtime},
  };
}

// Merges `patch` into `base`, rejecting keys the base does not have.
void merge(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw ValidationError("config section '" + where + "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw ValidationError("unknown config key '" + path + "'");
    json& slot = base[it.key()];
    if (slot.is_object() && it->is_object()) merge(slot, *it, path);
    else slot = *it;
  }
}

RunConfig from_json(const json& j) {
  RunConfig c;
  c.profile = j.at("profile").get<std::string>();
  c.shape = GridShape(j.at("grid").at("rows").get<std::size_t>(), j.at("grid").at("cols").get<std::size_t>());
  const auto& s = j.at("system");
  c.system.eta = s.at("eta").get<double>();
  c.system.ambient_rate = s.at("ambient_rate").get<double>();
  c.system.dark_rate = s.at("dark_rate").get<double>();
  c.system.repetitions = s.at("repetitions").get<double>();
  c.system.bin_width = s.at("bin_width").get<double>();
  c.system.bins = s.at("bins").get<std::size_t>();
  c.system.deadtime = get_opt<double>(s.at("deadtime"));
  c.system.repetition_period = s.at("repetition_period").get<double>();
  c.illumination.window = j.at("illumination").at("window").get<std::size_t>();
  c.illumination.epsilon = j.at("illumination").at("epsilon").get<double>();
  c.pulse_fwhm = j.at("pulse").at("fwhm").get<double>();
  c.pulse_photons = get_opt<double>(j.at("pulse").at("photons"));
  c.calibration.raster_signal = get_opt<double>(j.at("calibration").at("raster_signal"));
  c.calibration.diffraction_mean = get_opt<double>(j.at("calibration").at("diffraction_mean"));
  const auto& sc = j.at("scene");
  c.scene.kind = sc.at("kind").get<std::string>();
  c.scene.path = sc.at("path").get<std::string>();
  c.scene.plane_depth = sc.at("plane_depth").get<double>();
  c.scene.plane_reflectivity = sc.at("plane_reflectivity").get<double>();
  auto& b = c.scene.ball;
  b.ball_radius = sc.at("ball_radius").get<double>();
  b.ball_center_x = sc.at("ball_center_x").get<double>();
  b.ball_center_y = sc.at("ball_center_y").get<double>();
  b.ball_center_z = sc.at("ball_center_z").get<double>();
  b.screen_distance = sc.at("screen_distance").get<double>();
  b.field_height = sc.at("field_height").get<double>();
  b.ball_reflectivity = sc.at("ball_reflectivity").get<double>();
  b.screen_reflectivity = sc.at("screen_reflectivity").get<double>();
  const auto& in = j.at("intensity");
  c.intensity.mu = in.at("mu").get<double>();
  c.intensity.lambda = in.at("lambda").get<double>();
  admm_from_json(in.at("admm"), c.intensity.shared);
  if (!in.at("denoise_admm").is_null()) {
    c.intensity.denoise = c.intensity.shared;
    admm_from_json(in.at("denoise_admm"), *c.intensity.denoise);
  }
  if (!in.at("deconvolve_admm").is_null()) {
    c.intensity.deconvolve = c.intensity.shared;
    admm_from_json(in.at("deconvolve_admm"), *c.intensity.deconvolve);
  }
  const auto& d = j.at("depth");
  c.depth.mu = d.at("mu").get<double>();
  c.depth.median_order = d.at("median_order").get<std::size_t>();
  admm_from_json(d.at("admm"), c.depth.admm);
  c.seed = j.at("seed").get<std::uint64_t>();
  c.simulate_deadtime = j.at("simulate_deadtime").get<bool>();
  return c;
}

// Wraps nlohmann's exceptions so every config problem is a validation error.
template <typename F>
auto json_guard(F f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  system.validate();
  illumination.validate(shape);
  if (!(pulse_fwhm > 0.0) || !std::isfinite(pulse_fwhm)) throw ValidationError("pulse fwhm must be positive");
  if (pulse_photons && (!(*pulse_photons > 0.0) || !std::isfinite(*pulse_photons)))
    throw ValidationError("pulse photons must be positive");
  if (!pulse_photons && !calibration.raster_signal)
    throw ValidationError("set pulse.photons or calibration.raster_signal");
  if (scene.kind != "ball" && scene.kind != "plane" && scene.kind != "file")
    throw ValidationError("scene.kind must be ball, plane or file");
  if (scene.kind == "file" && scene.path.empty()) throw ValidationError("scene.path is required for file scenes");
  if (!(intensity.mu > 0.0) || !(intensity.lambda > 0.0)) throw ValidationError("intensity mu and lambda must be positive");
  if (!(depth.mu > 0.0)) throw ValidationError("depth mu must be positive");
  if (depth.median_order == 0 || depth.median_order % 2 == 0)
    throw ValidationError("depth.median_order must be a positive odd number");
  if (depth.median_order > system.bins) throw ValidationError("depth.median_order exceeds the bin count");
  if (simulate_deadtime && !system.deadtime) throw ValidationError("simulate_deadtime needs system.deadtime");
}

std::vector<std::string> profile_names() { return {"table_one", "desk"}; }

RunConfig profile_config(std::string_view name) {
  RunConfig c;
  c.profile = std::string(name);
  // Full-size system: 95 x 152 pixels, 1410 bins of 4 ps, 5e6 pulses at 70 MHz,
  // eta = 0.35, contrast 1000:1, 77.8 ns deadtime, 80 ps pulse.
  c.shape = GridShape(95, 152);
  c.system = SystemParams{};
  c.system.deadtime = 77.8e-9;
  c.illumination = IlluminationConfig{5, 0.001};
  c.pulse_fwhm = 80e-12;
  c.calibration.raster_signal = 1.0;
  // Regularization weights picked with `spadcam sweep` on the desk phantom.
  c.intensity.mu = 0.2;
  c.intensity.lambda = 0.5;
  c.depth.mu = 2.0;
  c.depth.median_order = 5;
  if (name == "table_one") return c;
  if (name == "desk") {
    c.shape = GridShape(48, 64);
    c.system.bins = 256;
    c.system.bin_width = 20e-12;
    return c;
  }
  throw ValidationError("unknown profile '" + std::string(name) + "'");
}

RunConfig parse_config(std::string_view text) {
  return json_guard([&] {
    json patch = json::parse(text);
    if (!patch.is_object()) throw ValidationError("config must be a JSON object");
    patch.erase("run");  // manifests carry the recorded command here
    const std::string profile = patch.value("profile", std::string("table_one"));
    json base = to_json(profile_config(profile));
    merge(base, patch, "");
    RunConfig c = from_json(base);
    c.validate();
    return c;
  });
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& config) {
  // nlohmann prints doubles with round-trip precision; keys are sorted.
  return to_json(config).dump(2) + "\n";
}

namespace {

// Merges one assignment into `base` without validating the result.
void merge_override(json& base, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ValidationError("override must look like key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  if (key == "profile") throw ValidationError("the profile cannot be overridden; choose it with --profile or a config file");
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  merge(base, patch, "");
}

}  // namespace

void apply_override(RunConfig& config, std::string_view assignment) {
  apply_overrides(config, std::vector<std::string>{std::string(assignment)});
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& assignments) {
  json_guard([&] {
    json base = to_json(config);
    for (const auto& a : assignments) merge_override(base, a);
    RunConfig c = from_json(base);
    c.validate();
    config = std::move(c);
    return 0;
  });
}

SceneModel build_scene(const RunConfig& config) {
  SceneModel s;
  if (config.scene.kind == "ball") s = make_ball_scene(config.shape, config.scene.ball);
  else if (config.scene.kind == "plane")
    s = make_plane_scene(config.shape, config.scene.plane_depth, config.scene.plane_reflectivity);
  else if (config.scene.kind == "file") {
    s = read_scene(config.scene.path);
    if (!(s.shape == config.shape)) throw ValidationError("scene file grid differs from the configured grid");
  } else {
    throw ValidationError("unknown scene kind '" + config.scene.kind + "'");
  }
  s.validate(config.system);
  return s;
}

RunConfig resolve_config(const RunConfig& config, const SceneModel& scene) {
  RunConfig c = config;
  if (c.calibration.raster_signal) {
    c.pulse_photons = calibrate_pulse_photons(scene, c.system, *c.calibration.raster_signal);
    c.calibration.raster_signal.reset();
  }
  if (c.calibration.diffraction_mean) {
    c.illumination.epsilon = calibrate_epsilon(scene, *c.pulse_photons, c.system, *c.calibration.diffraction_mean);
    c.calibration.diffraction_mean.reset();
  }
  c.validate();
  return c;
}

PulseModel build_pulse(const RunConfig& config) {
  if (!config.pulse_photons) throw ValidationError("pulse energy is not resolved");
  return PulseModel::gaussian(config.system.bins, config.pulse_fwhm / config.system.bin_width, *config.pulse_photons);
}

}  // namespace spadcam
